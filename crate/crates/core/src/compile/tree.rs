use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::model::{Network, VarId};
use crate::potential::{Scope, TablePotential};

use super::graph::{is_perfect_elimination_order, UndirectedGraph};
use super::CompileError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UniverseId(pub usize);

impl fmt::Display for UniverseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

/// How a universe computes its joint potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Exact: the joint table is the product of the assigned potentials.
    De,
    /// The joint is approximated by Gibbs sampling from the factor list.
    Gibbs,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::De => "DE",
            Mode::Gibbs => "GIBBS",
        })
    }
}

/// A potential held in a GIBBS universe's factor list. `child` is set when
/// the potential is a network CPT.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub potential: TablePotential,
    pub child: Option<VarId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Universe {
    pub id: UniverseId,
    pub scope: Scope,
    pub mode: Mode,
    /// Present for DE universes once potentials are assigned.
    pub joint: Option<TablePotential>,
    /// The factor list of a GIBBS universe.
    pub factors: Vec<Factor>,
}

impl Universe {
    pub fn entry_count(&self) -> u64 {
        self.scope.entry_count()
    }

    pub fn vars(&self) -> &[VarId] {
        self.scope.vars()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub a: UniverseId,
    pub b: UniverseId,
    pub separator: Scope,
}

impl Link {
    pub fn other(&self, u: UniverseId) -> UniverseId {
        if u == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A junction tree of belief universes.
///
/// A compiled tree is never mutated by inference; every propagation starts
/// from a copy of its universes.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionTree {
    names: Vec<String>,
    cards: Vec<usize>,
    universes: Vec<Universe>,
    links: Vec<Link>,
    adjacency: Vec<Vec<(UniverseId, LinkId)>>,
    assigned: bool,
}

impl JunctionTree {
    /// Builds a tree from explicit clusters and links, checking that the
    /// links form a spanning tree and that the running intersection property
    /// holds. Clusters need not be maximal.
    pub fn from_clusters(
        cards: Vec<usize>,
        clusters: Vec<Vec<VarId>>,
        links: &[(usize, usize)],
    ) -> Result<Self, CompileError> {
        let n = clusters.len();
        for c in &clusters {
            if let Some(v) = c.iter().find(|v| v.index() >= cards.len()) {
                return Err(CompileError::UnknownVariable(*v));
            }
        }
        let universes: Vec<Universe> = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| Universe {
                id: UniverseId(i),
                scope: Scope::from_vars(c, &cards),
                mode: Mode::De,
                joint: None,
                factors: Vec::new(),
            })
            .collect();
        if n > 0 && links.len() != n - 1 {
            return Err(CompileError::NotATree);
        }
        let mut uf = UnionFind::new(n);
        let mut built = Vec::with_capacity(links.len());
        for &(a, b) in links {
            if a >= n || b >= n || !uf.union(a, b) {
                return Err(CompileError::NotATree);
            }
            let separator = universes[a].scope.intersection(&universes[b].scope);
            built.push(Link { a: UniverseId(a.min(b)), b: UniverseId(a.max(b)), separator });
        }
        let names = (0..cards.len()).map(|i| format!("X{i}")).collect();
        let tree = JunctionTree::assemble(names, cards, universes, built);
        if let Some(v) = tree.running_intersection_violation() {
            return Err(CompileError::RunningIntersection(v));
        }
        Ok(tree)
    }

    fn assemble(names: Vec<String>, cards: Vec<usize>, universes: Vec<Universe>, links: Vec<Link>) -> Self {
        let mut adjacency = vec![Vec::new(); universes.len()];
        for (i, l) in links.iter().enumerate() {
            adjacency[l.a.0].push((l.b, LinkId(i)));
            adjacency[l.b.0].push((l.a, LinkId(i)));
        }
        for adj in &mut adjacency {
            adj.sort();
        }
        JunctionTree { names, cards, universes, links, adjacency, assigned: false }
    }

    pub fn universes(&self) -> &[Universe] {
        &self.universes
    }

    pub fn universe(&self, id: UniverseId) -> &Universe {
        &self.universes[id.0]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    /// Neighbours of `u` with the connecting link, in id order.
    pub fn neighbours(&self, u: UniverseId) -> &[(UniverseId, LinkId)] {
        &self.adjacency[u.0]
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn variable_count(&self) -> usize {
        self.cards.len()
    }

    pub fn is_assigned(&self) -> bool {
        self.assigned
    }

    pub fn mode_counts(&self) -> (usize, usize) {
        let gibbs = self.universes.iter().filter(|u| u.mode == Mode::Gibbs).count();
        (self.universes.len() - gibbs, gibbs)
    }

    /// The universes on `toward`'s side of the link between `from` and
    /// `toward`, including `toward` itself.
    pub fn subtree(&self, from: UniverseId, toward: UniverseId) -> Vec<UniverseId> {
        let mut out = vec![toward];
        let mut stack = vec![(toward, from)];
        while let Some((u, parent)) = stack.pop() {
            for &(v, _) in &self.adjacency[u.0] {
                if v != parent {
                    out.push(v);
                    stack.push((v, u));
                }
            }
        }
        out.sort();
        out
    }

    /// Some variable whose containing universes are not connected, if any.
    pub fn running_intersection_violation(&self) -> Option<VarId> {
        for v in 0..self.cards.len() {
            let var = VarId(v);
            let holders: Vec<usize> = self.universes.iter().filter(|u| u.scope.contains(var)).map(|u| u.id.0).collect();
            let Some(&start) = holders.first() else { continue };
            let mut seen = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(w, _) in &self.adjacency[u] {
                    if self.universes[w.0].scope.contains(var) && seen.insert(w.0) {
                        stack.push(w.0);
                    }
                }
            }
            if seen.len() != holders.len() {
                return Some(var);
            }
        }
        None
    }

    pub fn satisfies_running_intersection(&self) -> bool {
        self.running_intersection_violation().is_none()
    }

    /// Universes with more than `threshold` table entries become GIBBS;
    /// `None` means no limit.
    pub fn classify(mut self, threshold: Option<u64>) -> Result<Self, CompileError> {
        if threshold == Some(0) {
            return Err(CompileError::InvalidThreshold);
        }
        if self.assigned {
            return Err(CompileError::AlreadyAssigned);
        }
        for u in &mut self.universes {
            u.mode = match threshold {
                Some(t) if u.scope.entry_count() > t => Mode::Gibbs,
                _ => Mode::De,
            };
        }
        Ok(self)
    }

    /// Sets every universe's mode explicitly.
    pub fn with_modes(mut self, modes: &[Mode]) -> Result<Self, CompileError> {
        if modes.len() != self.universes.len() {
            return Err(CompileError::ModeCount { expected: self.universes.len(), found: modes.len() });
        }
        if self.assigned {
            return Err(CompileError::AlreadyAssigned);
        }
        for (u, &m) in self.universes.iter_mut().zip(modes) {
            u.mode = m;
        }
        Ok(self)
    }

    /// Places every CPT in one universe containing its family.
    ///
    /// GIBBS universes are preferred over DE ones; within a mode the
    /// smallest configuration space wins, then the lowest id. DE universes
    /// store the product of their CPTs, GIBBS universes keep the list.
    pub fn assign_potentials(mut self, net: &Network) -> Result<Self, CompileError> {
        if self.assigned {
            return Err(CompileError::AlreadyAssigned);
        }
        if net.cardinalities() != self.cards {
            return Err(CompileError::NetworkMismatch);
        }
        let mut de_parts: Vec<Vec<TablePotential>> = vec![Vec::new(); self.universes.len()];
        for child in net.ids() {
            let family = Scope::from_vars(&net.family(child), &self.cards);
            let target = self
                .universes
                .iter()
                .filter(|u| family.is_subset_of(&u.scope))
                .min_by_key(|u| (u.mode != Mode::Gibbs, u.scope.entry_count(), u.id))
                .map(|u| u.id)
                .ok_or_else(|| CompileError::FamilyNotCovered(net.variable(child).name.clone()))?;
            let table = cpt_table(net, child)?;
            let u = &mut self.universes[target.0];
            match u.mode {
                Mode::Gibbs => u.factors.push(Factor { potential: table, child: Some(child) }),
                Mode::De => de_parts[target.0].push(table),
            }
        }
        for (u, parts) in self.universes.iter_mut().zip(de_parts) {
            if u.mode == Mode::De {
                let mut joint = TablePotential::ones(u.scope.clone())?;
                for p in &parts {
                    joint.multiply_in_place(p)?;
                }
                u.joint = Some(joint);
            }
        }
        self.names = net.variables().iter().map(|v| v.name.clone()).collect();
        self.assigned = true;
        Ok(self)
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    fn scope_names(&self, scope: &Scope) -> String {
        scope.vars().iter().map(|v| self.var_name(*v)).collect::<Vec<_>>().join(",")
    }

    /// Deterministic text listing of universes and links.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let (de, gibbs) = self.mode_counts();
        let _ = writeln!(s, "universes {} (DE {de}, GIBBS {gibbs})", self.universes.len());
        for u in &self.universes {
            let _ =
                write!(s, "{} {} entries={} vars={}", u.id, u.mode, u.scope.entry_count(), self.scope_names(&u.scope));
            if self.assigned && u.mode == Mode::Gibbs {
                let _ = write!(s, " factors={}", u.factors.len());
            }
            s.push('\n');
        }
        let _ = writeln!(s, "links {}", self.links.len());
        for l in &self.links {
            let _ = writeln!(s, "{}-{} sep={}", l.a, l.b, self.scope_names(&l.separator));
        }
        s
    }
}

/// The CPT of `child` as a table over its sorted family.
pub fn cpt_table(net: &Network, child: VarId) -> Result<TablePotential, CompileError> {
    let cards = net.cardinalities();
    let cpt = net.cpt(child);
    let mut natural: Vec<VarId> = cpt.parents.clone();
    natural.push(child);
    let natural_scope_cards: Vec<usize> = natural.iter().map(|v| cards[v.index()]).collect();
    let scope = Scope::from_vars(&natural, &cards);
    let n = scope.table_len()?;
    let mut values = vec![0.0; n];
    // Walk the CPT in its own (parents..., child) order and scatter into the
    // sorted scope.
    let strides = scope.strides();
    let pos: Vec<usize> = natural.iter().map(|v| scope.position(*v).expect("family member")).collect();
    let mut config = vec![0usize; natural.len()];
    for &p in &cpt.table {
        let idx: usize = config.iter().zip(&pos).map(|(s, &k)| s * strides[k]).sum();
        values[idx] = p;
        for k in (0..config.len()).rev() {
            config[k] += 1;
            if config[k] < natural_scope_cards[k] {
                break;
            }
            config[k] = 0;
        }
    }
    Ok(TablePotential::new(scope, values)?)
}

/// Junction tree over the maximal cliques of a chordal graph.
///
/// Cliques are read off the elimination order; links form a maximum-weight
/// spanning tree with separator size as weight, ties broken by the smaller
/// combined table size and then by clique id.
pub fn build_tree(chordal: &UndirectedGraph, order: &[VarId]) -> Result<JunctionTree, CompileError> {
    if !is_perfect_elimination_order(chordal, order) {
        return Err(CompileError::NonChordal);
    }
    let n = chordal.vertex_count();
    let mut pos = vec![0; n];
    for (i, v) in order.iter().enumerate() {
        pos[v.0] = i;
    }
    let candidates: Vec<BTreeSet<usize>> = order
        .iter()
        .map(|v| {
            let mut c: BTreeSet<usize> = chordal.neighbours(*v).map(|u| u.0).filter(|&u| pos[u] > pos[v.0]).collect();
            c.insert(v.0);
            c
        })
        .collect();
    let mut cliques: Vec<BTreeSet<usize>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated =
            candidates.iter().enumerate().any(|(j, d)| j != i && c.is_subset(d) && (c.len() < d.len() || j < i));
        if !dominated {
            cliques.push(c.clone());
        }
    }

    let cards = chordal.cards().to_vec();
    let universes: Vec<Universe> = cliques
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let vars: Vec<VarId> = c.iter().map(|&v| VarId(v)).collect();
            Universe {
                id: UniverseId(i),
                scope: Scope::from_vars(&vars, &cards),
                mode: Mode::De,
                joint: None,
                factors: Vec::new(),
            }
        })
        .collect();

    let m = universes.len();
    let mut candidates_links = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let shared = cliques[i].intersection(&cliques[j]).count();
            let size = (universes[i].entry_count() as u128) + (universes[j].entry_count() as u128);
            candidates_links.push((std::cmp::Reverse(shared), size, i, j));
        }
    }
    candidates_links.sort();
    let mut uf = UnionFind::new(m);
    let mut links = Vec::with_capacity(m.saturating_sub(1));
    for (_, _, i, j) in candidates_links {
        if uf.union(i, j) {
            let separator = universes[i].scope.intersection(&universes[j].scope);
            links.push(Link { a: UniverseId(i), b: UniverseId(j), separator });
            if links.len() + 1 == m {
                break;
            }
        }
    }
    let names = (0..n).map(|i| format!("X{i}")).collect();
    let tree = JunctionTree::assemble(names, cards, universes, links);
    debug_assert!(tree.satisfies_running_intersection());
    Ok(tree)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
