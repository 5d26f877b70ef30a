//! Reproducible networks and trees used by tests, the acceptance suite and
//! the command-line front end.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compile::{JunctionTree, Mode, UniverseId};
use crate::model::{Cpt, Evidence, Network, VarId, Variable};
use crate::propagate::SchedulePolicy;

/// Seed of the Aunt Emily CPT parameters.
pub const AUNT_EMILY_SEED: u64 = 1994;

/// Shape of a random network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkShape {
    pub variables: usize,
    pub max_parents: usize,
    pub min_states: usize,
    pub max_states: usize,
    /// Chance that a CPT entry is forced to zero (at least one entry per
    /// row stays positive).
    pub zero_fraction: f64,
}

impl NetworkShape {
    pub fn binary(variables: usize, max_parents: usize) -> Self {
        NetworkShape { variables, max_parents, min_states: 2, max_states: 2, zero_fraction: 0.0 }
    }
}

fn variable(name: &str, states: &[&str]) -> Variable {
    Variable { name: name.to_string(), states: states.iter().map(|s| s.to_string()).collect() }
}

fn random_row(rng: &mut impl Rng, card: usize, zero_fraction: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
    if zero_fraction > 0.0 {
        let keep = rng.gen_range(0..card);
        for (i, x) in w.iter_mut().enumerate() {
            if i != keep && rng.gen_bool(zero_fraction) {
                *x = 0.0;
            }
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// A random DAG whose parents are drawn from earlier variables.
pub fn random_network(seed: u64, shape: &NetworkShape) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..shape.variables).map(|_| rng.gen_range(shape.min_states..=shape.max_states)).collect();
    let variables = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable { name: format!("X{i}"), states: (0..c).map(|s| format!("s{s}")).collect() })
        .collect();
    let mut cpts = Vec::with_capacity(shape.variables);
    for i in 0..shape.variables {
        let k = rng.gen_range(0..=shape.max_parents.min(i));
        let mut candidates: Vec<usize> = (0..i).collect();
        candidates.shuffle(&mut rng);
        let mut parents: Vec<VarId> = candidates[..k].iter().map(|&p| VarId(p)).collect();
        parents.sort();
        let rows: usize = parents.iter().map(|p| cards[p.index()]).product();
        let table = (0..rows).flat_map(|_| random_row(&mut rng, cards[i], shape.zero_fraction)).collect();
        cpts.push(Cpt { child: VarId(i), parents, table });
    }
    Network::new(variables, cpts).expect("generated network is valid")
}

/// One joint configuration drawn by ancestral sampling.
pub fn forward_sample(net: &Network, rng: &mut impl Rng) -> Vec<usize> {
    let mut x = vec![0; net.len()];
    for &v in net.topological_order() {
        let parents: Vec<usize> = net.parents(v).iter().map(|p| x[p.index()]).collect();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let card = net.cardinality(v);
        x[v.index()] = card - 1;
        for s in 0..card {
            acc += net.probability(v, &parents, s);
            if u < acc {
                x[v.index()] = s;
                break;
            }
        }
        // Never land on a zero-probability state through rounding.
        while net.probability(v, &parents, x[v.index()]) == 0.0 {
            x[v.index()] -= 1;
        }
    }
    x
}

/// Hard findings on `count` random variables, taken from a forward sample
/// so the evidence has positive probability.
pub fn random_hard_evidence(net: &Network, seed: u64, count: usize) -> Evidence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = forward_sample(net, &mut rng);
    let mut ids: Vec<VarId> = net.ids().collect();
    ids.shuffle(&mut rng);
    let mut ev = Evidence::new();
    for v in ids.into_iter().take(count) {
        ev.hard(v, x[v.index()], net.cardinality(v));
    }
    ev
}

/// Row of ten-thousandths drawn from integer weights 1..=9, summing to 1.
fn emily_row(rng: &mut impl Rng, card: usize, zeros: &[usize]) -> Vec<f64> {
    let w: Vec<u32> = (0..card).map(|s| if zeros.contains(&s) { 0 } else { rng.gen_range(1..=9) }).collect();
    let total: u32 = w.iter().sum();
    let mut units: Vec<u32> = w.iter().map(|&x| (x * 10_000 + total / 2) / total).collect();
    let last = (0..card).rev().find(|s| w[*s] > 0).expect("positive entry");
    let others: u32 = units.iter().enumerate().filter(|(i, _)| *i != last).map(|(_, u)| u).sum();
    units[last] = 10_000 - others;
    units.iter().map(|&u| f64::from(u) / 10_000.0).collect()
}

/// The 17-variable Aunt Emily network, with parameters drawn from
/// [`AUNT_EMILY_SEED`].
///
/// Two structural zeros are planted: B never takes its third state, and
/// LB1 = "2" is impossible unless B = "2".
pub fn aunt_emily_network() -> Network {
    let tri = ["0", "1", "2"];
    let yn = ["yes", "no"];
    let decls: [(&str, &[&str], &[&str]); 17] = [
        ("A", &tri, &[]),
        ("B", &tri, &[]),
        ("WA", &yn, &["A", "B"]),
        ("WB", &yn, &["B"]),
        ("PA1", &yn, &["A"]),
        ("LA1", &tri, &["A", "PA1"]),
        ("PB1", &yn, &["B"]),
        ("LB1", &tri, &["B", "PB1"]),
        ("D/A2", &yn, &["PA1", "PB1"]),
        ("PA2", &yn, &["LA1", "PA1", "D/A2"]),
        ("LA2", &tri, &["LA1", "PA2"]),
        ("PB2", &yn, &["D/A2", "PB1", "LB1"]),
        ("LB2", &tri, &["PB2", "LB1"]),
        ("D/A3", &yn, &["PA2", "D/A2", "PB2"]),
        ("CD", &["natural", "arsenic", "other"], &["PA2", "D/A2", "D/A3", "PB2"]),
        ("M", &yn, &["CD"]),
        ("O", &["arsenic", "none"], &["CD"]),
    ];
    let variables: Vec<Variable> = decls.iter().map(|(n, s, _)| variable(n, s)).collect();
    let id = |name: &str| VarId(decls.iter().position(|(n, _, _)| *n == name).expect("declared"));
    let mut rng = ChaCha8Rng::seed_from_u64(AUNT_EMILY_SEED);
    let mut cpts = Vec::new();
    for (i, (name, states, parents)) in decls.iter().enumerate() {
        let parents: Vec<VarId> = parents.iter().map(|p| id(p)).collect();
        let cards: Vec<usize> = parents.iter().map(|p| decls[p.index()].1.len()).collect();
        let rows: usize = cards.iter().product();
        let mut table = Vec::new();
        for row in 0..rows {
            let zeros: &[usize] = match *name {
                "B" => &[2],
                // Parent order (B, PB1): rows 0..4 have B in {0, 1}.
                "LB1" if row < 4 => &[2],
                _ => &[],
            };
            table.extend(emily_row(&mut rng, states.len(), zeros));
        }
        cpts.push(Cpt { child: VarId(i), parents, table });
    }
    Network::new(variables, cpts).expect("Aunt Emily network is valid")
}

/// Evidence LA1 = "1", D/A3 = "no", O = "arsenic".
pub fn aunt_emily_evidence(net: &Network) -> Evidence {
    let mut ev = Evidence::new();
    for (name, state) in [("LA1", "1"), ("D/A3", "no"), ("O", "arsenic")] {
        let v = net.id_of(name).expect("Aunt Emily variable");
        let s = net.variable(v).state_index(state).expect("Aunt Emily state");
        ev.hard(v, s, net.cardinality(v));
    }
    ev
}

/// Universe ids of the hand-built Aunt Emily tree.
pub mod emily {
    use crate::compile::UniverseId;

    pub const DE1: UniverseId = UniverseId(0);
    pub const DE2: UniverseId = UniverseId(1);
    pub const DE3: UniverseId = UniverseId(2);
    pub const DE4: UniverseId = UniverseId(3);
    pub const DE5: UniverseId = UniverseId(4);
    pub const DE6: UniverseId = UniverseId(5);
    pub const GIBBS1: UniverseId = UniverseId(6);
    pub const GIBBS2: UniverseId = UniverseId(7);
    pub const GIBBS3: UniverseId = UniverseId(8);
}

/// The six DE and three GIBBS universes of the published hybrid tree, with
/// potentials assigned.
pub fn aunt_emily_tree(net: &Network) -> JunctionTree {
    let clusters: [&[&str]; 9] = [
        &["A", "B", "PA1", "LA1"],
        &["LA1", "PA2", "LA2"],
        &["B", "LB1", "PB1", "D/A2", "PA2"],
        &["LB1", "PB2", "LB2"],
        &["CD", "M"],
        &["CD", "O"],
        &["B", "PB1", "D/A2", "PA1", "PA2", "LA1"],
        &["A", "B", "WA", "WB"],
        &["PB1", "LB1", "PB2", "D/A2", "D/A3", "PA2", "CD"],
    ];
    let clusters = clusters.iter().map(|c| c.iter().map(|n| net.id_of(n).expect("declared")).collect()).collect();
    let links = [(7, 0), (0, 6), (6, 1), (6, 2), (2, 8), (8, 3), (8, 5), (5, 4)];
    let modes: Vec<Mode> = (0..9).map(|i| if i >= 6 { Mode::Gibbs } else { Mode::De }).collect();
    JunctionTree::from_clusters(net.cardinalities(), clusters, &links)
        .and_then(|t| t.with_modes(&modes))
        .and_then(|t| t.assign_potentials(net))
        .expect("Aunt Emily tree is valid")
}

/// Two binary variables whose joint is `(z, 0, 0, 1 - z)`: A has prior
/// `(z, 1 - z)` and B copies A.
pub fn copy_network(z: f64) -> Network {
    let variables = vec![variable("A", &["a1", "a2"]), variable("B", &["b1", "b2"])];
    let cpts = vec![
        Cpt { child: VarId(0), parents: vec![], table: vec![z, 1.0 - z] },
        Cpt { child: VarId(1), parents: vec![VarId(0)], table: vec![1.0, 0.0, 0.0, 1.0] },
    ];
    Network::new(variables, cpts).expect("copy network is valid")
}

/// Two GIBBS universes sharing B through a DE universe holding only B.
#[derive(Clone, Debug)]
pub struct CascadeFixture {
    pub net: Network,
    pub tree: JunctionTree,
    pub evidence: Evidence,
    pub policy: SchedulePolicy,
    pub left: UniverseId,
    pub middle: UniverseId,
    pub right: UniverseId,
}

/// A is almost surely `a0`, B copies A and C copies B; C = `c1` is
/// observed. The left universe {A, B} therefore samples B = `b0` unless it
/// learns of the right universe's constraint B = `b1` first.
pub fn cascade_fixture() -> CascadeFixture {
    let variables = vec![variable("A", &["a0", "a1"]), variable("B", &["b0", "b1"]), variable("C", &["c0", "c1"])];
    let cpts = vec![
        Cpt { child: VarId(0), parents: vec![], table: vec![1.0 - 1e-6, 1e-6] },
        Cpt { child: VarId(1), parents: vec![VarId(0)], table: vec![1.0, 0.0, 0.0, 1.0] },
        Cpt { child: VarId(2), parents: vec![VarId(1)], table: vec![1.0, 0.0, 0.0, 1.0] },
    ];
    let net = Network::new(variables, cpts).expect("cascade network is valid");
    let clusters = vec![vec![VarId(0), VarId(1)], vec![VarId(1)], vec![VarId(1), VarId(2)]];
    let tree = JunctionTree::from_clusters(net.cardinalities(), clusters, &[(0, 1), (1, 2)])
        .and_then(|t| t.with_modes(&[Mode::Gibbs, Mode::De, Mode::Gibbs]))
        .and_then(|t| t.assign_potentials(&net))
        .expect("cascade tree is valid");
    let mut evidence = Evidence::new();
    evidence.hard(VarId(2), 1, 2);
    let (left, middle, right) = (UniverseId(0), UniverseId(1), UniverseId(2));
    CascadeFixture { net, tree, evidence, policy: SchedulePolicy::Prefer(vec![right, left]), left, middle, right }
}

/// Number of universes in [`synthetic_storage_tree`].
pub const SYNTHETIC_UNIVERSES: usize = 876;
/// Number of its universes above 100,000 entries.
pub const SYNTHETIC_GIBBS: usize = 41;
/// Target share of dense storage held by those universes.
pub const SYNTHETIC_GIBBS_SHARE: f64 = 0.917;

/// A chain of 876 universes over disjoint variables, 41 of which exceed
/// 100,000 entries and together hold 91.7% of the dense entries.
///
/// Large universes have cardinalities `[10, 10, 10, 10, 10, x]` with `x`
/// cycling through 12..=30; small ones `[10, 10, 10, c]` with `c` in
/// {9, 10}, mixed to hit the target share.
pub fn synthetic_storage_tree() -> JunctionTree {
    let big: Vec<Vec<usize>> = (0..SYNTHETIC_GIBBS).map(|i| vec![10, 10, 10, 10, 10, 12 + (i * 7) % 19]).collect();
    let gibbs_entries: u64 = big.iter().map(|c| c.iter().map(|&x| x as u64).product::<u64>()).sum();
    let small_count = SYNTHETIC_UNIVERSES - SYNTHETIC_GIBBS;
    let de_target = (gibbs_entries as f64 * (1.0 - SYNTHETIC_GIBBS_SHARE) / SYNTHETIC_GIBBS_SHARE).round() as u64;
    let tens = ((de_target.saturating_sub(small_count as u64 * 9_000) + 500) / 1_000).min(small_count as u64) as usize;
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(SYNTHETIC_UNIVERSES);
    // Interleave so the large universes are spread along the chain.
    let mut big = big.into_iter();
    for i in 0..small_count {
        if i % 20 == 0 {
            if let Some(b) = big.next() {
                groups.push(b);
            }
        }
        groups.push(vec![10, 10, 10, if i < tens { 10 } else { 9 }]);
    }
    groups.extend(big);
    let mut cards = Vec::new();
    let mut clusters = Vec::with_capacity(groups.len());
    for g in groups {
        let start = cards.len();
        cards.extend(g);
        clusters.push((start..cards.len()).map(VarId).collect());
    }
    let links: Vec<(usize, usize)> = (1..clusters.len()).map(|i| (i - 1, i)).collect();
    JunctionTree::from_clusters(cards, clusters, &links).expect("synthetic tree is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_networks_are_deterministic() {
        let shape = NetworkShape { variables: 8, max_parents: 3, min_states: 2, max_states: 3, zero_fraction: 0.2 };
        assert_eq!(random_network(5, &shape), random_network(5, &shape));
        assert_ne!(random_network(5, &shape), random_network(6, &shape));
    }

    #[test]
    fn emily_rows_sum_to_one_exactly() {
        let net = aunt_emily_network();
        for cpt in net.cpts() {
            let card = net.cardinality(cpt.child);
            for row in cpt.table.chunks(card) {
                let units: u32 = row.iter().map(|p| (p * 10_000.0).round() as u32).sum();
                assert_eq!(units, 10_000);
            }
        }
        let b = net.id_of("B").unwrap();
        assert_eq!(net.cpt(b).table[2], 0.0);
    }

    #[test]
    fn synthetic_tree_shape() {
        let tree = synthetic_storage_tree();
        assert_eq!(tree.universes().len(), SYNTHETIC_UNIVERSES);
        let big = tree.universes().iter().filter(|u| u.entry_count() > 100_000).count();
        assert_eq!(big, SYNTHETIC_GIBBS);
    }
}
