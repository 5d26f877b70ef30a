//! Junction-tree construction: moralization, triangulation, clique
//! extraction, linking, universe classification and potential assignment.

mod graph;
mod tree;

use thiserror::Error;

use crate::model::{Network, VarId};
use crate::potential::PotentialError;

pub use graph::{is_chordal, is_perfect_elimination_order, moralize, triangulate, UndirectedGraph};
pub use tree::{build_tree, cpt_table, Factor, JunctionTree, Link, LinkId, Mode, Universe, UniverseId};

/// Default GIBBS threshold in table entries.
pub const DEFAULT_GIBBS_THRESHOLD: u64 = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("elimination order is not perfect for the graph")]
    NonChordal,
    #[error("links do not form a spanning tree")]
    NotATree,
    #[error("running intersection property fails for variable {0}")]
    RunningIntersection(VarId),
    #[error("cluster references unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("gibbs threshold must be at least 1")]
    InvalidThreshold,
    #[error("expected {expected} modes, found {found}")]
    ModeCount { expected: usize, found: usize },
    #[error("potentials have already been assigned")]
    AlreadyAssigned,
    #[error("network does not match the tree's variables")]
    NetworkMismatch,
    #[error("no universe contains the family of `{0}`")]
    FamilyNotCovered(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Full pipeline with threshold classification.
pub fn compile(net: &Network, threshold: Option<u64>) -> Result<JunctionTree, CompileError> {
    let moral = moralize(net);
    let (chordal, order) = triangulate(&moral);
    build_tree(&chordal, &order)?.classify(threshold)?.assign_potentials(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_network;

    const CHAIN: &str = "var A { a0 a1 }\nvar B { b0 b1 }\nvar C { c0 c1 }\n\
        cpt A { 0.4 0.6 }\ncpt B | A { 0.9 0.1 0.2 0.8 }\ncpt C | B { 0.5 0.5 0.3 0.7 }\n";

    #[test]
    fn chain_has_two_cliques() {
        let net = parse_network(CHAIN).unwrap();
        let tree = compile(&net, None).unwrap();
        assert_eq!(tree.universes().len(), 2);
        assert_eq!(tree.links().len(), 1);
        assert_eq!(tree.links()[0].separator.vars(), &[VarId(1)]);
        assert!(tree.satisfies_running_intersection());
    }

    #[test]
    fn single_clique() {
        let net = parse_network("var A { x y }\ncpt A { 0.5 0.5 }\n").unwrap();
        let tree = compile(&net, None).unwrap();
        assert_eq!(tree.universes().len(), 1);
        assert!(tree.links().is_empty());
    }

    #[test]
    fn threshold_one_makes_everything_gibbs() {
        let net = parse_network(CHAIN).unwrap();
        let tree = compile(&net, Some(1)).unwrap();
        assert!(tree.universes().iter().all(|u| u.mode == Mode::Gibbs));
        let factors: usize = tree.universes().iter().map(|u| u.factors.len()).sum();
        assert_eq!(factors, 3);
        assert_eq!(compile(&net, Some(0)), Err(CompileError::InvalidThreshold));
    }

    #[test]
    fn gibbs_universe_preferred() {
        let net = parse_network(CHAIN).unwrap();
        // {A,B} has 4 entries, {B,C} too; make only the second one GIBBS.
        let tree = build_tree(&triangulate(&moralize(&net)).0, &triangulate(&moralize(&net)).1).unwrap();
        let gibbs = tree.universes().iter().position(|u| u.scope.contains(VarId(2))).unwrap();
        let modes: Vec<Mode> = (0..2).map(|i| if i == gibbs { Mode::Gibbs } else { Mode::De }).collect();
        let tree = tree.with_modes(&modes).unwrap().assign_potentials(&net).unwrap();
        // B's family {A,B} fits only the DE universe; C's family fits only the GIBBS one.
        let g = &tree.universes()[gibbs];
        assert_eq!(g.factors.iter().map(|f| f.child).collect::<Vec<_>>(), vec![Some(VarId(2))]);
    }

    #[test]
    fn dump_is_deterministic() {
        let net = parse_network(CHAIN).unwrap();
        let a = compile(&net, Some(2)).unwrap().dump();
        let b = compile(&net, Some(2)).unwrap().dump();
        assert_eq!(a, b);
        assert!(a.contains("GIBBS"));
    }
}
