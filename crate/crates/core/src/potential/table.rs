use crate::model::VarId;

use super::scope::walk;
use super::{Potential, PotentialError, Scope};

/// Dense non-negative table over a [`Scope`].
#[derive(Clone, Debug, PartialEq)]
pub struct TablePotential {
    scope: Scope,
    values: Vec<f64>,
}

impl TablePotential {
    pub fn new(scope: Scope, values: Vec<f64>) -> Result<Self, PotentialError> {
        let expected = scope.table_len()?;
        if values.len() != expected {
            return Err(PotentialError::Length { expected, found: values.len() });
        }
        if let Some(&bad) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(PotentialError::InvalidValue(bad));
        }
        Ok(TablePotential { scope, values })
    }

    pub fn filled(scope: Scope, value: f64) -> Result<Self, PotentialError> {
        let n = scope.table_len()?;
        Ok(TablePotential { scope, values: vec![value; n] })
    }

    pub fn ones(scope: Scope) -> Result<Self, PotentialError> {
        Self::filled(scope, 1.0)
    }

    pub fn zeros(scope: Scope) -> Result<Self, PotentialError> {
        Self::filled(scope, 0.0)
    }

    /// A single-variable table, e.g. a likelihood vector.
    pub fn vector(var: VarId, values: Vec<f64>) -> Result<Self, PotentialError> {
        let scope = Scope::new([(var, values.len())])?;
        Self::new(scope, values)
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, config: &[usize]) -> f64 {
        self.values[self.scope.index_of(config)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn has_zero(&self) -> bool {
        self.values.contains(&0.0)
    }

    /// Divides by the total mass and returns it; all-zero tables are left
    /// untouched.
    pub fn normalize(&mut self) -> f64 {
        let total = self.sum();
        if total > 0.0 {
            self.values.iter_mut().for_each(|x| *x /= total);
        }
        total
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|x| *x *= factor);
    }

    /// Extension to a superset scope: `result(x) = self(x restricted)`.
    pub fn extend(&self, superset: &Scope) -> Result<TablePotential, PotentialError> {
        if let Some(&v) = self.scope.vars().iter().find(|v| !superset.contains(**v)) {
            return Err(PotentialError::NotInScope(v));
        }
        let mut values = Vec::with_capacity(superset.table_len()?);
        walk(superset, &[superset.strides_in(&self.scope)], |_, idx| values.push(self.values[idx[0]]));
        Ok(TablePotential { scope: superset.clone(), values })
    }

    /// Pointwise product over the union of both scopes.
    pub fn multiply(&self, other: &TablePotential) -> Result<TablePotential, PotentialError> {
        let scope = self.scope.union(&other.scope);
        let mut values = Vec::with_capacity(scope.table_len()?);
        let maps = [scope.strides_in(&self.scope), scope.strides_in(&other.scope)];
        walk(&scope, &maps, |_, idx| values.push(self.values[idx[0]] * other.values[idx[1]]));
        Ok(TablePotential { scope, values })
    }

    /// `self *= other` for `other.scope ⊆ self.scope`.
    pub fn multiply_in_place(&mut self, other: &TablePotential) -> Result<(), PotentialError> {
        if let Some(&v) = other.scope.vars().iter().find(|v| !self.scope.contains(**v)) {
            return Err(PotentialError::NotInScope(v));
        }
        let map = self.scope.strides_in(&other.scope);
        let values = &mut self.values;
        walk(&self.scope, &[map], |lin, idx| values[lin] *= other.values[idx[0]]);
        Ok(())
    }

    /// Sums out every variable not in `keep`.
    pub fn marginalize(&self, keep: &[VarId]) -> Result<TablePotential, PotentialError> {
        let target = self.scope.restrict_to(keep)?;
        let mut values = vec![0.0; target.table_len()?];
        walk(&self.scope, &[self.scope.strides_in(&target)], |lin, idx| values[idx[0]] += self.values[lin]);
        Ok(TablePotential { scope: target, values })
    }

    /// Ratio `self / previous` used when a separator is updated, with the
    /// convention that any entry whose denominator is zero becomes zero.
    pub fn update_ratio(&self, previous: &TablePotential) -> Result<TablePotential, PotentialError> {
        if self.scope != previous.scope {
            return Err(PotentialError::ScopeMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&previous.values)
            .map(|(&new, &old)| if old == 0.0 { 0.0 } else { new / old })
            .collect();
        Ok(TablePotential { scope: self.scope.clone(), values })
    }

    /// Per-entry `value > 0`.
    pub fn support(&self) -> Vec<bool> {
        self.values.iter().map(|&x| x > 0.0).collect()
    }
}

impl Potential for TablePotential {
    fn scope(&self) -> &Scope {
        &self.scope
    }

    fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(pairs: &[(usize, usize)]) -> Scope {
        Scope::new(pairs.iter().map(|&(v, c)| (VarId(v), c))).unwrap()
    }

    fn t(pairs: &[(usize, usize)], values: &[f64]) -> TablePotential {
        TablePotential::new(sc(pairs), values.to_vec()).unwrap()
    }

    #[test]
    fn extend_constant() {
        let c = t(&[], &[2.5]);
        let e = c.extend(&sc(&[(0, 2), (4, 3)])).unwrap();
        assert_eq!(e.values(), &[2.5; 6]);
    }

    #[test]
    fn extend_projection() {
        let b = t(&[(1, 2)], &[0.2, 0.8]);
        let e = b.extend(&sc(&[(0, 2), (1, 2)])).unwrap();
        assert_eq!(e.values(), &[0.2, 0.8, 0.2, 0.8]);
        assert_eq!(b.extend(b.scope()).unwrap(), b);
        assert!(e.extend(&sc(&[(0, 2)])).is_err());
    }

    #[test]
    fn multiply_by_ones_is_identity() {
        let a = t(&[(0, 2), (1, 2)], &[0.1, 0.2, 0.3, 0.4]);
        let ones = TablePotential::ones(sc(&[(0, 2), (1, 2)])).unwrap();
        assert_eq!(a.multiply(&ones).unwrap(), a);
    }

    #[test]
    fn copy_factor_times_prior() {
        // [1,0;0,1] times (z, 1-z) on B at z = 0.3.
        let phi = t(&[(0, 2), (1, 2)], &[1.0, 0.0, 0.0, 1.0]);
        let psi = t(&[(1, 2)], &[0.3, 0.7]);
        assert_eq!(phi.multiply(&psi).unwrap().values(), &[0.3, 0.0, 0.0, 0.7]);
    }

    #[test]
    fn marginalize_cases() {
        let joint = t(&[(0, 2), (1, 2)], &[0.3, 0.0, 0.0, 0.7]);
        assert_eq!(joint.marginalize(&[VarId(0)]).unwrap().values(), &[0.3, 0.7]);
        assert_eq!(joint.marginalize(&[VarId(0), VarId(1)]).unwrap(), joint);
        let total = joint.marginalize(&[]).unwrap();
        assert_eq!(total.values(), &[1.0]);
        assert!(joint.marginalize(&[VarId(7)]).is_err());
    }

    #[test]
    fn in_place_matches_multiply() {
        let a = t(&[(0, 2), (1, 3)], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = t(&[(1, 3)], &[0.5, 0.0, 2.0]);
        let mut c = a.clone();
        c.multiply_in_place(&b).unwrap();
        assert_eq!(c, a.multiply(&b).unwrap());
    }

    #[test]
    fn ratio_zero_convention() {
        let new = t(&[(0, 3)], &[2.0, 0.0, 5.0]);
        let old = t(&[(0, 3)], &[1.0, 0.0, 0.0]);
        assert_eq!(new.update_ratio(&old).unwrap().values(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TablePotential::new(sc(&[(0, 2)]), vec![1.0]).is_err());
        assert!(TablePotential::new(sc(&[(0, 2)]), vec![1.0, -1.0]).is_err());
        assert!(TablePotential::new(sc(&[(0, 2)]), vec![1.0, f64::NAN]).is_err());
    }
}
