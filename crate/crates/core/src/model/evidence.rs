use std::collections::BTreeMap;

use super::VarId;

/// Findings keyed by variable: one likelihood vector per observed variable.
///
/// Hard evidence is a one-hot vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evidence {
    entries: BTreeMap<VarId, Vec<f64>>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a likelihood vector, replacing any earlier finding on `var`.
    /// Callers are responsible for length and positivity checks; the parser
    /// performs them.
    pub fn insert(&mut self, var: VarId, likelihood: Vec<f64>) {
        self.entries.insert(var, likelihood);
    }

    pub fn hard(&mut self, var: VarId, state: usize, cardinality: usize) {
        let mut v = vec![0.0; cardinality];
        v[state] = 1.0;
        self.insert(var, v);
    }

    pub fn get(&self, var: VarId) -> Option<&[f64]> {
        self.entries.get(&var).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &[f64])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The observed state if the finding on `var` is one-hot.
    pub fn hard_state(&self, var: VarId) -> Option<usize> {
        let v = self.entries.get(&var)?;
        one_hot(v)
    }
}

pub(crate) fn one_hot(v: &[f64]) -> Option<usize> {
    let mut hit = None;
    for (i, &x) in v.iter().enumerate() {
        if x != 0.0 {
            if hit.is_some() {
                return None;
            }
            hit = Some(i);
        }
    }
    hit
}
