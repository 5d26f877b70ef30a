//! Discrete Bayesian-network data model.
//!
//! A [`Network`] is an ordered list of [`Variable`]s together with exactly one
//! [`Cpt`] per variable. Variables are referred to by [`VarId`], their index in
//! declaration order; every table in the crate is laid out row-major over
//! scopes sorted by `VarId` (last variable varies fastest).

mod evidence;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub(crate) use evidence::one_hot;
pub use evidence::Evidence;
pub use parse::{parse_evidence, parse_network, ParseError};

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Index of a variable in its network's declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional probability table `P(child | parents)`.
///
/// `table` is row-major over the parent configurations (parents in the order
/// given, last parent fastest) with the child state innermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub table: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{var}` declares state `{state}` twice")]
    DuplicateState { var: String, state: String },
    #[error("variable `{0}` needs at least two states")]
    TooFewStates(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` has more than one cpt")]
    DuplicateCpt(String),
    #[error("variable `{0}` has no cpt")]
    MissingCpt(String),
    #[error("cpt for `{var}` lists parent `{parent}` twice")]
    DuplicateParent { var: String, parent: String },
    #[error("cpt for `{var}` has {found} entries, expected {expected}")]
    TableLength { var: String, expected: usize, found: usize },
    #[error("cpt for `{var}` has invalid entry {value}")]
    InvalidProbability { var: String, value: f64 },
    #[error("row sum {sum} ≠ 1 in cpt for `{var}` (row {row})")]
    RowSum { var: String, row: usize, sum: f64 },
    #[error("the parent graph has a cycle through `{0}`")]
    Cycle(String),
}

/// A validated discrete Bayesian network.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    /// Indexed by child id.
    cpts: Vec<Cpt>,
    topological: Vec<VarId>,
}

impl Network {
    /// Validates and assembles a network. `cpts` may come in any order but
    /// must contain exactly one table per variable.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self, ModelError> {
        let mut seen = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if seen.insert(v.name.as_str(), i).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
            if v.states.len() < 2 {
                return Err(ModelError::TooFewStates(v.name.clone()));
            }
            let mut labels = BTreeSet::new();
            for s in &v.states {
                if !labels.insert(s.as_str()) {
                    return Err(ModelError::DuplicateState { var: v.name.clone(), state: s.clone() });
                }
            }
        }

        let n = variables.len();
        let mut slots: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            let child = cpt.child.index();
            if child >= n || cpt.parents.iter().any(|p| p.index() >= n) {
                return Err(ModelError::UnknownVariable(format!("{}", cpt.child)));
            }
            let name = &variables[child].name;
            if slots[child].is_some() {
                return Err(ModelError::DuplicateCpt(name.clone()));
            }
            let mut ps = BTreeSet::new();
            for p in &cpt.parents {
                if !ps.insert(*p) || *p == cpt.child {
                    return Err(ModelError::DuplicateParent {
                        var: name.clone(),
                        parent: variables[p.index()].name.clone(),
                    });
                }
            }
            let rows: usize = cpt.parents.iter().map(|p| variables[p.index()].cardinality()).product();
            let card = variables[child].cardinality();
            if cpt.table.len() != rows * card {
                return Err(ModelError::TableLength {
                    var: name.clone(),
                    expected: rows * card,
                    found: cpt.table.len(),
                });
            }
            if let Some(&bad) = cpt.table.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(ModelError::InvalidProbability { var: name.clone(), value: bad });
            }
            for (row, chunk) in cpt.table.chunks(card).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(ModelError::RowSum { var: name.clone(), row, sum });
                }
            }
            slots[child] = Some(cpt);
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| ModelError::MissingCpt(variables[i].name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let topological = topological_order(&variables, &cpts)?;
        Ok(Network { variables, cpts, topological })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.index()]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn id_of(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id.index()].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    pub fn cpt(&self, child: VarId) -> &Cpt {
        &self.cpts[child.index()]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.cpts[id.index()].parents
    }

    /// `{v} ∪ parents(v)`, sorted by id.
    pub fn family(&self, id: VarId) -> Vec<VarId> {
        let mut fam: Vec<VarId> = self.parents(id).to_vec();
        fam.push(id);
        fam.sort();
        fam
    }

    pub fn topological_order(&self) -> &[VarId] {
        &self.topological
    }

    /// `P(child = state | parents = parent_states)`, with `parent_states`
    /// aligned with the cpt's own parent order.
    pub fn probability(&self, child: VarId, parent_states: &[usize], state: usize) -> f64 {
        let cpt = &self.cpts[child.index()];
        let mut row = 0;
        for (p, s) in cpt.parents.iter().zip(parent_states) {
            row = row * self.cardinality(*p) + s;
        }
        cpt.table[row * self.cardinality(child) + state]
    }
}

fn topological_order(variables: &[Variable], cpts: &[Cpt]) -> Result<Vec<VarId>, ModelError> {
    let n = variables.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for cpt in cpts {
        indegree[cpt.child.index()] = cpt.parents.len();
        for p in &cpt.parents {
            children[p.index()].push(cpt.child.index());
        }
    }
    // Lowest declared id first among ready vertices, so the order is stable.
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(VarId(v));
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(ModelError::Cycle(variables[stuck].name.clone()));
    }
    Ok(order)
}

/// Serializes in the same text format [`parse_network`] reads.
impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.variables {
            writeln!(f, "var {} {{ {} }}", v.name, v.states.join(" "))?;
        }
        for cpt in &self.cpts {
            write!(f, "cpt {}", self.variables[cpt.child.index()].name)?;
            if !cpt.parents.is_empty() {
                write!(f, " |")?;
                for p in &cpt.parents {
                    write!(f, " {}", self.variables[p.index()].name)?;
                }
            }
            write!(f, " {{")?;
            for x in &cpt.table {
                write!(f, " {x:?}")?;
            }
            writeln!(f, " }}")?;
        }
        Ok(())
    }
}
