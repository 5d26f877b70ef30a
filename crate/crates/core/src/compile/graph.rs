use std::collections::BTreeSet;

use crate::model::{Network, VarId};

/// Undirected graph over the variables of a network, with each vertex
/// weighted by its cardinality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    cards: Vec<usize>,
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(cards: Vec<usize>) -> Self {
        let adj = vec![BTreeSet::new(); cards.len()];
        UndirectedGraph { cards, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    /// Adds `u – v`; self-loops are ignored. Returns true if the edge is new.
    pub fn add_edge(&mut self, u: VarId, v: VarId) -> bool {
        if u == v {
            return false;
        }
        let fresh = self.adj[u.0].insert(v.0);
        self.adj[v.0].insert(u.0);
        fresh
    }

    pub fn has_edge(&self, u: VarId, v: VarId) -> bool {
        self.adj[u.0].contains(&v.0)
    }

    pub fn neighbours(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.adj[v.0].iter().map(|&u| VarId(u))
    }

    pub fn degree(&self, v: VarId) -> usize {
        self.adj[v.0].len()
    }

    /// Edges as `(low, high)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::new();
        for (u, ns) in self.adj.iter().enumerate() {
            for &v in ns.range(u + 1..) {
                out.push((VarId(u), VarId(v)));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }
}

/// Skeleton of the DAG plus an edge between every pair of co-parents.
pub fn moralize(net: &Network) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(net.cardinalities());
    for child in net.ids() {
        let parents = net.parents(child);
        for (i, &p) in parents.iter().enumerate() {
            g.add_edge(p, child);
            for &q in &parents[i + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    g
}

/// Greedy min-fill triangulation.
///
/// At each step the remaining vertex whose elimination adds the fewest fill
/// edges is removed; ties go to the smallest resulting clique table, then to
/// the lowest id. Returns the chordal supergraph and the elimination order.
pub fn triangulate(g: &UndirectedGraph) -> (UndirectedGraph, Vec<VarId>) {
    let n = g.vertex_count();
    let mut work = g.adj.clone();
    let mut chordal = g.clone();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);

    for _ in 0..n {
        let mut best: Option<(usize, u128, usize)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            let ns: Vec<usize> = work[v].iter().copied().collect();
            let mut fill = 0;
            for (i, &a) in ns.iter().enumerate() {
                for &b in &ns[i + 1..] {
                    if !work[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            let weight = ns.iter().fold(g.cards[v] as u128, |acc, &u| acc.saturating_mul(g.cards[u] as u128));
            let key = (fill, weight, v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (_, _, v) = best.expect("a live vertex remains");
        let ns: Vec<usize> = work[v].iter().copied().collect();
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if work[a].insert(b) {
                    work[b].insert(a);
                    chordal.add_edge(VarId(a), VarId(b));
                }
            }
        }
        for &u in &ns {
            work[u].remove(&v);
        }
        work[v].clear();
        alive[v] = false;
        order.push(VarId(v));
    }
    (chordal, order)
}

/// True iff eliminating vertices in `order` adds no fill edge, i.e. the
/// later neighbours of every vertex form a clique.
pub fn is_perfect_elimination_order(g: &UndirectedGraph, order: &[VarId]) -> bool {
    let n = g.vertex_count();
    if order.len() != n {
        return false;
    }
    let mut pos = vec![usize::MAX; n];
    for (i, v) in order.iter().enumerate() {
        if pos[v.0] != usize::MAX {
            return false;
        }
        pos[v.0] = i;
    }
    for v in order {
        let later: Vec<usize> = g.adj[v.0].iter().copied().filter(|&u| pos[u] > pos[v.0]).collect();
        for (i, &a) in later.iter().enumerate() {
            for &b in &later[i + 1..] {
                if !g.adj[a].contains(&b) {
                    return false;
                }
            }
        }
    }
    true
}

/// Chordality test via maximum cardinality search.
pub fn is_chordal(g: &UndirectedGraph) -> bool {
    let n = g.vertex_count();
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut visit = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !numbered[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .expect("unnumbered vertex");
        numbered[v] = true;
        visit.push(VarId(v));
        for &u in &g.adj[v] {
            if !numbered[u] {
                weight[u] += 1;
            }
        }
    }
    // The reverse of a maximum cardinality search is a perfect elimination
    // order exactly when the graph is chordal.
    visit.reverse();
    is_perfect_elimination_order(g, &visit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cpt, Variable};

    fn binary_net(parents: &[&[usize]]) -> Network {
        let vars = (0..parents.len())
            .map(|i| Variable { name: format!("V{i}"), states: vec!["0".into(), "1".into()] })
            .collect();
        let cpts = parents
            .iter()
            .enumerate()
            .map(|(i, ps)| Cpt {
                child: VarId(i),
                parents: ps.iter().map(|&p| VarId(p)).collect(),
                table: vec![0.5; 2 << ps.len()],
            })
            .collect();
        Network::new(vars, cpts).unwrap()
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(vec![2; n]);
        for &(a, b) in edges {
            g.add_edge(VarId(a), VarId(b));
        }
        g
    }

    #[test]
    fn chain_needs_no_marriage() {
        let g = moralize(&binary_net(&[&[], &[0], &[1]]));
        assert_eq!(g.edges(), vec![(VarId(0), VarId(1)), (VarId(1), VarId(2))]);
    }

    #[test]
    fn v_structure_marries_parents() {
        let g = moralize(&binary_net(&[&[], &[], &[0, 1]]));
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(VarId(0), VarId(1)));
    }

    #[test]
    fn chordal_input_gets_no_fill() {
        let g = graph(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        let (h, order) = triangulate(&g);
        assert_eq!(h, g);
        assert!(is_perfect_elimination_order(&h, &order));
    }

    #[test]
    fn four_cycle_gets_one_chord() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(!is_chordal(&g));
        let (h, order) = triangulate(&g);
        assert_eq!(h.edge_count(), 5);
        assert!(is_chordal(&h));
        assert!(is_perfect_elimination_order(&h, &order));
    }
}
