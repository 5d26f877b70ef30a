//! Single-site Gibbs sampling inside a GIBBS universe.
//!
//! A sampler works on the universe's factor list together with every
//! separator payload the universe has absorbed. One sample is one
//! systematic sweep over the unclamped variables; each recorded sweep adds
//! weight 1 to the histogram, so the result carries total weight N.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compile::{Factor, Mode, Universe};
use crate::model::VarId;
use crate::potential::{Payload, PotentialError, Scope, TablePotential, WeightedConfigList};

/// Name of the generator recorded alongside seeds in output headers.
pub const RNG_NAME: &str = "ChaCha8";

const SEED_ATTEMPTS: usize = 32;

/// Callback receiving the sweep index, whether it is recorded, and the state.
pub type SweepTrace<'t> = &'t mut dyn FnMut(usize, bool, &[usize]);

#[derive(Debug, Error, PartialEq)]
pub enum GibbsError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("burn-in fraction {0} is outside [0, 1)")]
    BurnIn(f64),
    #[error("no configuration with positive weight satisfies the clamps")]
    NoLegalConfiguration,
    #[error("full conditional of {0} vanished during sampling")]
    ZeroConditional(VarId),
    #[error("variable {0} is not in the universe")]
    NotInScope(VarId),
    #[error("clamp {var} = {state} is out of range")]
    BadClamp { var: VarId, state: usize },
    #[error("sampling order must list every unclamped variable once")]
    BadOrder,
    #[error("universe is not in GIBBS mode")]
    NotGibbs,
    #[error("sample scope differs from the universe scope")]
    ScopeMismatch,
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub samples: usize,
    pub burn_in_fraction: f64,
    pub seed: u64,
    /// Explicit sweep order; the default puts separator variables last.
    pub order: Option<Vec<VarId>>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { samples: 10_000, burn_in_fraction: 0.10, seed: 0, order: None }
    }
}

impl SamplerConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        SamplerConfig { samples, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GibbsError> {
        if self.samples == 0 {
            return Err(GibbsError::NoSamples);
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(GibbsError::BurnIn(self.burn_in_fraction));
        }
        Ok(())
    }

    pub fn burn_in_sweeps(&self) -> usize {
        (self.burn_in_fraction * self.samples as f64).ceil() as usize
    }

    /// Generator for one universe. Each universe gets its own stream.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

enum Source<'a> {
    Table(&'a [f64]),
    Payload(&'a Payload),
}

struct Term<'a> {
    /// Stride in the term's table for each universe position, 0 if absent.
    map: Vec<usize>,
    source: Source<'a>,
}

impl Term<'_> {
    fn value(&self, idx: usize) -> f64 {
        match &self.source {
            Source::Table(v) => v[idx],
            Source::Payload(p) => crate::potential::Potential::value_at(*p, idx),
        }
    }

    fn index(&self, config: &[usize]) -> usize {
        config.iter().zip(&self.map).map(|(s, m)| s * m).sum()
    }
}

/// The sampling problem of one universe.
pub struct Sampler<'a> {
    scope: &'a Scope,
    factors: &'a [Factor],
    payloads: &'a [Payload],
    terms: Vec<Term<'a>>,
    /// Terms touching each universe position.
    touching: Vec<Vec<usize>>,
    clamps: Vec<Option<usize>>,
    separator: BTreeSet<VarId>,
}

impl<'a> Sampler<'a> {
    pub fn new(
        scope: &'a Scope,
        factors: &'a [Factor],
        payloads: &'a [Payload],
        clamps: &BTreeMap<VarId, usize>,
    ) -> Result<Self, GibbsError> {
        let mut terms = Vec::with_capacity(factors.len() + payloads.len());
        for f in factors {
            terms
                .push(Term { map: term_map(scope, f.potential.scope())?, source: Source::Table(f.potential.values()) });
        }
        for p in payloads {
            terms.push(Term { map: term_map(scope, p.scope())?, source: Source::Payload(p) });
        }
        let mut touching = vec![Vec::new(); scope.len()];
        for (t, term) in terms.iter().enumerate() {
            for (pos, &m) in term.map.iter().enumerate() {
                if m > 0 {
                    touching[pos].push(t);
                }
            }
        }
        let mut clamp_vec = vec![None; scope.len()];
        for (&var, &state) in clamps {
            let pos = scope.position(var).ok_or(GibbsError::NotInScope(var))?;
            if state >= scope.cards()[pos] {
                return Err(GibbsError::BadClamp { var, state });
            }
            clamp_vec[pos] = Some(state);
        }
        Ok(Sampler { scope, factors, payloads, terms, touching, clamps: clamp_vec, separator: BTreeSet::new() })
    }

    /// Marks variables shared with neighbours; the default order draws them last.
    pub fn with_separator_vars(mut self, vars: impl IntoIterator<Item = VarId>) -> Self {
        self.separator = vars.into_iter().collect();
        self
    }

    pub fn scope(&self) -> &Scope {
        self.scope
    }

    /// Product of every factor and payload at `config`.
    pub fn weight(&self, config: &[usize]) -> f64 {
        self.terms.iter().map(|t| t.value(t.index(config))).product()
    }

    fn respects_clamps(&self, config: &[usize]) -> bool {
        self.clamps.iter().zip(config).all(|(c, &s)| c.is_none_or(|c| c == s))
    }

    /// Positions of unclamped variables in sweep order.
    fn sweep_positions(&self, order: Option<&[VarId]>) -> Result<Vec<usize>, GibbsError> {
        let free = |pos: &usize| self.clamps[*pos].is_none();
        match order {
            Some(order) => {
                let mut out = Vec::with_capacity(order.len());
                for v in order {
                    let pos = self.scope.position(*v).ok_or(GibbsError::NotInScope(*v))?;
                    if free(&pos) {
                        out.push(pos);
                    }
                }
                let unique: BTreeSet<usize> = out.iter().copied().collect();
                if unique.len() != out.len() || unique.len() != (0..self.scope.len()).filter(free).count() {
                    return Err(GibbsError::BadOrder);
                }
                Ok(out)
            }
            None => {
                let (shared, own): (Vec<usize>, Vec<usize>) =
                    (0..self.scope.len()).filter(free).partition(|&p| self.separator.contains(&self.scope.vars()[p]));
                Ok(own.into_iter().chain(shared).collect())
            }
        }
    }

    /// Distribution of the variable at `var` given the rest of `config`,
    /// from the terms that mention it. A variable in no term is uniform.
    pub fn full_conditional(&self, var: VarId, config: &[usize]) -> Result<Vec<f64>, GibbsError> {
        let pos = self.scope.position(var).ok_or(GibbsError::NotInScope(var))?;
        let mut probs = vec![0.0; self.scope.cards()[pos]];
        self.conditional_into(pos, config, &mut probs);
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(GibbsError::ZeroConditional(var));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(probs)
    }

    fn conditional_into(&self, pos: usize, config: &[usize], probs: &mut [f64]) {
        probs.iter_mut().for_each(|p| *p = 1.0);
        for &t in &self.touching[pos] {
            let term = &self.terms[t];
            let stride = term.map[pos];
            let base = term.index(config) - config[pos] * stride;
            for (s, p) in probs.iter_mut().enumerate() {
                *p *= term.value(base + s * stride);
            }
        }
    }

    /// A configuration with positive weight that respects the clamps.
    ///
    /// Forward sampling is tried when the factors are exactly one CPT per
    /// variable; otherwise, or if it fails, configurations drawn from sparse
    /// payloads seed a lexicographic search, and finally the search runs
    /// with only the clamps fixed.
    pub fn find_initial_config(&self, rng: &mut impl Rng) -> Result<Vec<usize>, GibbsError> {
        if let Some(plan) = self.forward_plan() {
            for _ in 0..SEED_ATTEMPTS {
                let x = self.forward_sample(&plan, rng);
                if self.weight(&x) > 0.0 {
                    return Ok(x);
                }
            }
        }
        let sparse: Vec<&WeightedConfigList> = self
            .payloads
            .iter()
            .filter_map(|p| match p {
                Payload::Sparse(w) if !w.is_empty() => Some(w),
                _ => None,
            })
            .collect();
        if !sparse.is_empty() {
            for _ in 0..SEED_ATTEMPTS {
                if let Some(fixed) = self.draw_from_payloads(&sparse, rng) {
                    if let Some(x) = self.search(&fixed) {
                        return Ok(x);
                    }
                }
            }
        }
        self.search(&self.clamps).ok_or(GibbsError::NoLegalConfiguration)
    }

    /// Topological order of (position, factor) pairs if every variable is
    /// the child of exactly one factor.
    fn forward_plan(&self) -> Option<Vec<(usize, usize)>> {
        let n = self.scope.len();
        let mut owner = vec![None; n];
        for (f, factor) in self.factors.iter().enumerate() {
            let child = factor.child?;
            let pos = self.scope.position(child)?;
            if owner[pos].replace(f).is_some() {
                return None;
            }
        }
        let owner: Vec<usize> = owner.into_iter().collect::<Option<_>>()?;
        let mut done = vec![false; n];
        let mut plan = Vec::with_capacity(n);
        while plan.len() < n {
            let next =
                (0..n).find(|&p| {
                    !done[p]
                        && self.factors[owner[p]].potential.scope().vars().iter().all(|v| {
                            *v == self.scope.vars()[p] || done[self.scope.position(*v).expect("factor in scope")]
                        })
                })?;
            done[next] = true;
            plan.push((next, owner[next]));
        }
        Some(plan)
    }

    fn forward_sample(&self, plan: &[(usize, usize)], rng: &mut impl Rng) -> Vec<usize> {
        let mut x = vec![0; self.scope.len()];
        let mut probs = Vec::new();
        for &(pos, f) in plan {
            if let Some(s) = self.clamps[pos] {
                x[pos] = s;
                continue;
            }
            let term = &self.terms[f];
            let stride = term.map[pos];
            x[pos] = 0;
            let base = term.index(&x);
            probs.clear();
            probs.extend((0..self.scope.cards()[pos]).map(|s| term.value(base + s * stride)));
            x[pos] = draw(&probs, rng).unwrap_or(0);
        }
        x
    }

    fn draw_from_payloads(&self, lists: &[&WeightedConfigList], rng: &mut impl Rng) -> Option<Vec<Option<usize>>> {
        let mut fixed = self.clamps.clone();
        for w in lists {
            let weights: Vec<f64> = w.iter_indices().map(|(_, x)| x).collect();
            let k = draw(&weights, rng)?;
            let (idx, _) = w.iter_indices().nth(k)?;
            let config = w.scope().config_of(idx);
            for (v, s) in w.scope().vars().iter().zip(config) {
                let pos = self.scope.position(*v)?;
                match fixed[pos] {
                    Some(t) if t != s => return None,
                    _ => fixed[pos] = Some(s),
                }
            }
        }
        Some(fixed)
    }

    /// Depth-first lexicographic search over the unfixed variables, pruning
    /// as soon as a fully assigned term is zero.
    fn search(&self, fixed: &[Option<usize>]) -> Option<Vec<usize>> {
        let n = self.scope.len();
        let mut x: Vec<usize> = fixed.iter().map(|s| s.unwrap_or(0)).collect();
        let free: Vec<usize> = (0..n).filter(|&p| fixed[p].is_none()).collect();
        // Terms whose variables are all fixed are checked once up front; the
        // rest are checked when their last free variable is assigned.
        let mut due: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
        for (t, term) in self.terms.iter().enumerate() {
            let last = free.iter().rposition(|&p| term.map[p] > 0);
            match last {
                Some(k) => due[k].push(t),
                None => {
                    if term.value(term.index(&x)) <= 0.0 {
                        return None;
                    }
                }
            }
        }
        let mut depth = 0usize;
        let mut started = vec![false; free.len()];
        loop {
            if depth == free.len() {
                return Some(x);
            }
            let pos = free[depth];
            if started[depth] {
                x[pos] += 1;
            } else {
                started[depth] = true;
                x[pos] = 0;
            }
            if x[pos] >= self.scope.cards()[pos] {
                started[depth] = false;
                x[pos] = 0;
                if depth == 0 {
                    return None;
                }
                depth -= 1;
                continue;
            }
            if due[depth].iter().all(|&t| self.terms[t].value(self.terms[t].index(&x)) > 0.0) {
                depth += 1;
            }
        }
    }

    /// Burn-in plus N recorded sweeps. The trace callback, if any, sees the
    /// sweep index (counting burn-in), whether the sweep is recorded, and
    /// the configuration after the sweep.
    pub fn run(
        &self,
        cfg: &SamplerConfig,
        rng: &mut impl Rng,
        mut trace: Option<SweepTrace<'_>>,
    ) -> Result<WeightedConfigList, GibbsError> {
        cfg.validate()?;
        let order = self.sweep_positions(cfg.order.as_deref())?;
        let mut x = self.find_initial_config(rng)?;
        debug_assert!(self.respects_clamps(&x));
        let burn_in = cfg.burn_in_sweeps();
        let mut counts: HashMap<usize, u64> = HashMap::new();
        let max_card = self.scope.cards().iter().copied().max().unwrap_or(1);
        let mut probs = vec![0.0; max_card];
        for sweep in 0..burn_in + cfg.samples {
            for &pos in &order {
                let buf = &mut probs[..self.scope.cards()[pos]];
                self.conditional_into(pos, &x, buf);
                x[pos] = draw(buf, rng).ok_or(GibbsError::ZeroConditional(self.scope.vars()[pos]))?;
            }
            let recorded = sweep >= burn_in;
            if recorded {
                *counts.entry(self.scope.index_of(&x)).or_insert(0) += 1;
            }
            if let Some(f) = trace.as_deref_mut() {
                f(sweep, recorded, &x);
            }
        }
        let mut counts: Vec<(usize, u64)> = counts.into_iter().collect();
        counts.sort_unstable();
        Ok(WeightedConfigList::from_counts(self.scope.clone(), counts))
    }
}

fn term_map(scope: &Scope, term: &Scope) -> Result<Vec<usize>, GibbsError> {
    if let Some(&v) = term.vars().iter().find(|v| !scope.contains(**v)) {
        return Err(GibbsError::NotInScope(v));
    }
    Ok(scope.strides_in(term))
}

/// Index drawn proportionally to non-negative `weights`; `None` if all are zero.
fn draw(weights: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return Some(i);
            }
            u -= w;
            last = Some(i);
        }
    }
    last
}

/// Samples a GIBBS universe from its own factors and absorbed payloads.
pub fn run_sampler(
    universe: &Universe,
    payloads: &[Payload],
    clamps: &BTreeMap<VarId, usize>,
    separator_vars: &BTreeSet<VarId>,
    cfg: &SamplerConfig,
    trace: Option<SweepTrace<'_>>,
) -> Result<WeightedConfigList, GibbsError> {
    if universe.mode != Mode::Gibbs {
        return Err(GibbsError::NotGibbs);
    }
    let sampler = Sampler::new(&universe.scope, &universe.factors, payloads, clamps)?
        .with_separator_vars(separator_vars.iter().copied());
    let mut rng = cfg.rng(universe.id.0 as u64);
    sampler.run(cfg, &mut rng, trace)
}

/// Replaces a GIBBS universe's factor list with the densified histogram.
pub fn convert_to_de(universe: &mut Universe, samples: &WeightedConfigList) -> Result<(), GibbsError> {
    if universe.mode != Mode::Gibbs {
        return Err(GibbsError::NotGibbs);
    }
    if samples.scope() != &universe.scope {
        return Err(GibbsError::ScopeMismatch);
    }
    let joint: TablePotential = samples.densify()?;
    universe.joint = Some(joint);
    universe.factors.clear();
    universe.mode = Mode::De;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::UniverseId;

    fn sc(pairs: &[(usize, usize)]) -> Scope {
        Scope::new(pairs.iter().map(|&(v, c)| (VarId(v), c))).unwrap()
    }

    fn factor(pairs: &[(usize, usize)], values: &[f64]) -> Factor {
        Factor { potential: TablePotential::new(sc(pairs), values.to_vec()).unwrap(), child: None }
    }

    fn copy_universe() -> (Scope, Vec<Factor>) {
        let ab = sc(&[(0, 2), (1, 2)]);
        (ab, vec![factor(&[(0, 2), (1, 2)], &[1.0, 0.0, 0.0, 1.0]), factor(&[(1, 2)], &[0.3, 0.7])])
    }

    #[test]
    fn positive_factors_start_at_zero_state() {
        let s = sc(&[(0, 2), (1, 3), (2, 2)]);
        let fs = vec![factor(&[(0, 2), (1, 3)], &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]), factor(&[(2, 2)], &[0.5, 0.5])];
        let sampler = Sampler::new(&s, &fs, &[], &BTreeMap::new()).unwrap();
        let mut rng = SamplerConfig::default().rng(0);
        assert_eq!(sampler.find_initial_config(&mut rng).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn clamp_forces_only_positive_configuration() {
        let (s, fs) = copy_universe();
        let clamps = BTreeMap::from([(VarId(1), 1)]);
        let sampler = Sampler::new(&s, &fs, &[], &clamps).unwrap();
        let mut rng = SamplerConfig::default().rng(0);
        assert_eq!(sampler.find_initial_config(&mut rng).unwrap(), vec![1, 1]);
    }

    #[test]
    fn contradictory_xor_has_no_start() {
        let s = sc(&[(0, 2), (1, 2)]);
        let fs = vec![factor(&[(0, 2), (1, 2)], &[0.0, 1.0, 1.0, 0.0])];
        let clamps = BTreeMap::from([(VarId(0), 0), (VarId(1), 0)]);
        let sampler = Sampler::new(&s, &fs, &[], &clamps).unwrap();
        let mut rng = SamplerConfig::default().rng(0);
        assert_eq!(sampler.find_initial_config(&mut rng), Err(GibbsError::NoLegalConfiguration));
    }

    #[test]
    fn conditional_cases() {
        let (s, fs) = copy_universe();
        let sampler = Sampler::new(&s, &fs, &[], &BTreeMap::new()).unwrap();
        assert_eq!(sampler.full_conditional(VarId(1), &[0, 0]).unwrap(), vec![1.0, 0.0]);
        let lone = sc(&[(0, 2), (5, 4)]);
        let fs = vec![factor(&[(0, 2)], &[0.2, 0.8])];
        let sampler = Sampler::new(&lone, &fs, &[], &BTreeMap::new()).unwrap();
        assert_eq!(sampler.full_conditional(VarId(5), &[0, 2]).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn reducible_chain_never_moves() {
        let (s, fs) = copy_universe();
        let sampler = Sampler::new(&s, &fs, &[], &BTreeMap::new()).unwrap();
        let cfg = SamplerConfig::new(100, 3);
        let h = sampler.run(&cfg, &mut cfg.rng(0), None).unwrap();
        assert_eq!(h.iter().collect::<Vec<_>>(), vec![(vec![0, 0], 100.0)]);
    }

    #[test]
    fn degenerate_support_gets_all_weight() {
        let s = sc(&[(0, 3)]);
        let fs = vec![factor(&[(0, 3)], &[0.0, 2.0, 0.0])];
        let sampler = Sampler::new(&s, &fs, &[], &BTreeMap::new()).unwrap();
        let cfg = SamplerConfig::new(100, 1);
        let h = sampler.run(&cfg, &mut cfg.rng(0), None).unwrap();
        assert_eq!(h.iter().collect::<Vec<_>>(), vec![(vec![1], 100.0)]);
    }

    #[test]
    fn sparse_payload_seeds_the_start() {
        let s = sc(&[(0, 2), (1, 2)]);
        let fs = vec![factor(&[(0, 2), (1, 2)], &[1.0, 1.0, 1.0, 1.0])];
        let mut w = WeightedConfigList::new(sc(&[(1, 2)]));
        w.add(&[1], 4.0).unwrap();
        let payloads = [Payload::Sparse(w)];
        let sampler = Sampler::new(&s, &fs, &payloads, &BTreeMap::new()).unwrap();
        let mut rng = SamplerConfig::default().rng(0);
        assert_eq!(sampler.find_initial_config(&mut rng).unwrap(), vec![0, 1]);
    }

    #[test]
    fn config_validation() {
        assert_eq!(SamplerConfig::new(0, 0).validate(), Err(GibbsError::NoSamples));
        let cfg = SamplerConfig { burn_in_fraction: 1.0, ..SamplerConfig::default() };
        assert_eq!(cfg.validate(), Err(GibbsError::BurnIn(1.0)));
        assert_eq!(SamplerConfig::new(10, 0).burn_in_sweeps(), 1);
    }

    #[test]
    fn conversion_places_counts() {
        let (s, fs) = copy_universe();
        let mut u = Universe { id: UniverseId(0), scope: s.clone(), mode: Mode::Gibbs, joint: None, factors: fs };
        let h = WeightedConfigList::from_counts(s, [(0, 30), (3, 70)]);
        convert_to_de(&mut u, &h).unwrap();
        assert_eq!(u.mode, Mode::De);
        assert!(u.factors.is_empty());
        assert_eq!(u.joint.unwrap().values(), &[30.0, 0.0, 0.0, 70.0]);
    }
}
