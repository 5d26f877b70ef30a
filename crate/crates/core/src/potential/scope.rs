use crate::model::VarId;

use super::PotentialError;

/// Largest dense table the crate will allocate.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;

/// An ordered variable set with cardinalities, sorted by [`VarId`].
///
/// Configurations over a scope are state vectors aligned with `vars()`; their
/// linear index is row-major with the last variable fastest.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Scope {
    vars: Vec<VarId>,
    cards: Vec<usize>,
}

impl Scope {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a scope from `(variable, cardinality)` pairs in any order.
    pub fn new(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Result<Self, PotentialError> {
        let mut pairs: Vec<(VarId, usize)> = pairs.into_iter().collect();
        pairs.sort();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(PotentialError::DuplicateVariable(w[0].0));
            }
        }
        if let Some(&(v, _)) = pairs.iter().find(|p| p.1 == 0) {
            return Err(PotentialError::ZeroCardinality(v));
        }
        Ok(Scope { vars: pairs.iter().map(|p| p.0).collect(), cards: pairs.iter().map(|p| p.1).collect() })
    }

    /// Looks cardinalities up in a network-wide table. Duplicates are merged.
    pub fn from_vars(vars: &[VarId], all_cards: &[usize]) -> Self {
        let mut vars = vars.to_vec();
        vars.sort();
        vars.dedup();
        let cards = vars.iter().map(|v| all_cards[v.index()]).collect();
        Scope { vars, cards }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.position(v).is_some()
    }

    pub fn card_of(&self, v: VarId) -> Option<usize> {
        self.position(v).map(|i| self.cards[i])
    }

    pub fn is_subset_of(&self, other: &Scope) -> bool {
        self.vars.iter().all(|v| other.contains(*v))
    }

    pub fn union(&self, other: &Scope) -> Scope {
        let mut pairs: Vec<(VarId, usize)> = self.pairs().chain(other.pairs()).collect();
        pairs.sort();
        pairs.dedup_by_key(|p| p.0);
        Scope { vars: pairs.iter().map(|p| p.0).collect(), cards: pairs.iter().map(|p| p.1).collect() }
    }

    pub fn intersection(&self, other: &Scope) -> Scope {
        self.filter(|v| other.contains(v))
    }

    pub fn difference(&self, other: &Scope) -> Scope {
        self.filter(|v| !other.contains(v))
    }

    /// The sub-scope over `keep`; fails if some kept variable is absent.
    pub fn restrict_to(&self, keep: &[VarId]) -> Result<Scope, PotentialError> {
        if let Some(&v) = keep.iter().find(|v| !self.contains(**v)) {
            return Err(PotentialError::NotInScope(v));
        }
        Ok(self.filter(|v| keep.contains(&v)))
    }

    fn filter(&self, keep: impl Fn(VarId) -> bool) -> Scope {
        let (vars, cards) = self.pairs().filter(|p| keep(p.0)).unzip();
        Scope { vars, cards }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.vars.iter().copied().zip(self.cards.iter().copied())
    }

    /// Number of configurations, saturating at `u64::MAX`.
    pub fn entry_count(&self) -> u64 {
        self.cards.iter().fold(1u64, |acc, &c| acc.saturating_mul(c as u64))
    }

    /// Number of configurations if a dense table over this scope may be
    /// allocated.
    pub fn table_len(&self) -> Result<usize, PotentialError> {
        let mut n: usize = 1;
        for &c in &self.cards {
            n = n
                .checked_mul(c)
                .filter(|&n| n <= MAX_DENSE_ENTRIES)
                .ok_or(PotentialError::TooLarge(self.entry_count()))?;
        }
        Ok(n)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![0; self.len()];
        let mut acc = 1usize;
        for i in (0..self.len()).rev() {
            strides[i] = acc;
            acc = acc.saturating_mul(self.cards[i]);
        }
        strides
    }

    /// For every variable of `self`, its stride in `target` (0 if absent).
    pub fn strides_in(&self, target: &Scope) -> Vec<usize> {
        let ts = target.strides();
        self.vars.iter().map(|v| target.position(*v).map_or(0, |i| ts[i])).collect()
    }

    pub fn index_of(&self, config: &[usize]) -> usize {
        debug_assert_eq!(config.len(), self.len());
        config.iter().zip(&self.cards).fold(0, |acc, (&s, &c)| acc * c + s)
    }

    pub fn config_of(&self, mut index: usize) -> Vec<usize> {
        let mut config = vec![0; self.len()];
        for i in (0..self.len()).rev() {
            config[i] = index % self.cards[i];
            index /= self.cards[i];
        }
        config
    }

    /// Restricts a configuration over `self` to the variables of `sub`.
    pub fn project_config(&self, config: &[usize], sub: &Scope) -> Vec<usize> {
        sub.vars.iter().map(|v| config[self.position(*v).expect("sub-scope variable")]).collect()
    }
}

/// Visits every configuration of `scope` in row-major order. `f` receives the
/// linear index in `scope` and, for each entry of `maps` (as produced by
/// [`Scope::strides_in`]), the matching linear index in that target.
pub(crate) fn walk(scope: &Scope, maps: &[Vec<usize>], mut f: impl FnMut(usize, &[usize])) {
    let n = scope.len();
    let total: usize = scope.cards.iter().product();
    let mut config = vec![0usize; n];
    let mut idx = vec![0usize; maps.len()];
    for lin in 0..total {
        f(lin, &idx);
        for pos in (0..n).rev() {
            config[pos] += 1;
            for (k, m) in maps.iter().enumerate() {
                idx[k] += m[pos];
            }
            if config[pos] < scope.cards[pos] {
                break;
            }
            for (k, m) in maps.iter().enumerate() {
                idx[k] -= m[pos] * scope.cards[pos];
            }
            config[pos] = 0;
        }
    }
}
