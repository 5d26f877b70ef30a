use std::collections::BTreeMap;

use crate::model::VarId;

use super::{Potential, PotentialError, Scope, TablePotential};

/// Sparse list of `(configuration, weight)` pairs over a scope.
///
/// Configurations that are not listed have weight zero. Entries are kept in
/// row-major configuration order and every stored weight is strictly
/// positive.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedConfigList {
    scope: Scope,
    entries: BTreeMap<usize, f64>,
    total: f64,
}

impl WeightedConfigList {
    pub fn new(scope: Scope) -> Self {
        WeightedConfigList { scope, entries: BTreeMap::new(), total: 0.0 }
    }

    /// Builds a list from integer sample counts keyed by linear index.
    pub fn from_counts(scope: Scope, counts: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut list = Self::new(scope);
        for (idx, n) in counts {
            if n > 0 {
                *list.entries.entry(idx).or_insert(0.0) += n as f64;
                list.total += n as f64;
            }
        }
        list
    }

    /// Adds `weight` to `config`. Zero weights are ignored.
    pub fn add(&mut self, config: &[usize], weight: f64) -> Result<(), PotentialError> {
        if config.len() != self.scope.len() || config.iter().zip(self.scope.cards()).any(|(s, c)| s >= c) {
            return Err(PotentialError::BadConfiguration);
        }
        let idx = self.scope.index_of(config);
        self.add_index(idx, weight)
    }

    pub(crate) fn add_index(&mut self, idx: usize, weight: f64) -> Result<(), PotentialError> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(PotentialError::InvalidValue(weight));
        }
        if weight > 0.0 {
            *self.entries.entry(idx).or_insert(0.0) += weight;
            self.total += weight;
        }
        Ok(())
    }

    /// Omits the zero entries of a dense table.
    pub fn from_dense(table: &TablePotential) -> Self {
        let mut list = Self::new(table.scope().clone());
        for (i, &x) in table.values().iter().enumerate() {
            if x > 0.0 {
                list.entries.insert(i, x);
                list.total += x;
            }
        }
        list
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn get(&self, config: &[usize]) -> f64 {
        self.get_index(self.scope.index_of(config))
    }

    pub fn get_index(&self, idx: usize) -> f64 {
        self.entries.get(&idx).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.entries.iter().map(|(&i, &w)| (self.scope.config_of(i), w))
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &w)| (i, w))
    }

    /// True iff every configuration of the scope carries an entry.
    pub fn is_complete(&self) -> bool {
        self.entries.len() as u64 == self.scope.entry_count()
    }

    pub fn densify(&self) -> Result<TablePotential, PotentialError> {
        let mut values = vec![0.0; self.scope.table_len()?];
        for (&i, &w) in &self.entries {
            values[i] = w;
        }
        TablePotential::new(self.scope.clone(), values)
    }

    /// Sums the weights of configurations that agree on `keep`.
    pub fn project(&self, keep: &[VarId]) -> Result<WeightedConfigList, PotentialError> {
        let target = self.scope.restrict_to(keep)?;
        let strides = self.scope.strides_in(&target);
        let mut out = Self::new(target);
        for (&i, &w) in &self.entries {
            let config = self.scope.config_of(i);
            let j: usize = config.iter().zip(&strides).map(|(s, st)| s * st).sum();
            *out.entries.entry(j).or_insert(0.0) += w;
        }
        out.total = self.total;
        Ok(out)
    }
}

impl Potential for WeightedConfigList {
    fn scope(&self) -> &Scope {
        &self.scope
    }

    fn value_at(&self, index: usize) -> f64 {
        self.get_index(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Scope {
        Scope::new([(VarId(0), 2), (VarId(1), 2)]).unwrap()
    }

    #[test]
    fn densify_empty_and_single() {
        let empty = WeightedConfigList::new(ab());
        assert_eq!(empty.densify().unwrap().values(), &[0.0; 4]);
        let mut one = WeightedConfigList::new(ab());
        one.add(&[0, 0], 5.0).unwrap();
        assert_eq!(one.densify().unwrap().values(), &[5.0, 0.0, 0.0, 0.0]);
        assert_eq!(WeightedConfigList::from_dense(&one.densify().unwrap()), one);
    }

    #[test]
    fn project_adds_weights() {
        let mut w = WeightedConfigList::new(ab());
        w.add(&[0, 0], 3.0).unwrap();
        w.add(&[0, 1], 2.0).unwrap();
        let p = w.project(&[VarId(0)]).unwrap();
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![(vec![0], 5.0)]);
        assert_eq!(p.total(), 5.0);
        assert_eq!(w.project(&[VarId(0), VarId(1)]).unwrap(), w);
        assert!(w.project(&[VarId(3)]).is_err());
    }

    #[test]
    fn completeness() {
        let mut w = WeightedConfigList::new(ab());
        for c in [[0, 0], [0, 1], [1, 0]] {
            w.add(&c, 1.0).unwrap();
        }
        assert!(!w.is_complete());
        w.add(&[1, 1], 1.0).unwrap();
        assert!(w.is_complete());
    }

    #[test]
    fn zero_weights_omitted_and_negatives_rejected() {
        let mut w = WeightedConfigList::new(ab());
        w.add(&[1, 1], 0.0).unwrap();
        assert!(w.is_empty());
        assert!(w.add(&[1, 1], -1.0).is_err());
        assert!(w.add(&[2, 0], 1.0).is_err());
    }
}
