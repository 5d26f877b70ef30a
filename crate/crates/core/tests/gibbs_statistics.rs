use std::collections::{BTreeMap, BTreeSet};

use hugs::compile::{compile, Mode, Universe};
use hugs::fixtures::{self, NetworkShape};
use hugs::gibbs::{run_sampler, GibbsError, Sampler, SamplerConfig};
use hugs::model::VarId;
use hugs::potential::{Potential, TablePotential};

/// Normalized product of a universe's factors over its own scope.
fn exact(u: &Universe) -> TablePotential {
    let mut t = TablePotential::ones(u.scope.clone()).unwrap();
    for f in &u.factors {
        t = t.multiply(&f.potential).unwrap();
    }
    t.normalize();
    t
}

fn gibbs_universes(seed: u64) -> Vec<Universe> {
    let shape = NetworkShape { variables: 6, max_parents: 2, min_states: 2, max_states: 3, zero_fraction: 0.0 };
    let net = fixtures::random_network(seed, &shape);
    let tree = compile(&net, Some(1)).unwrap();
    tree.universes().iter().filter(|u| u.mode == Mode::Gibbs && !u.factors.is_empty()).cloned().collect()
}

#[test]
fn histograms_converge_to_the_factor_product() {
    let mut checked = 0;
    for seed in 0..6 {
        for u in gibbs_universes(seed) {
            let list =
                run_sampler(&u, &[], &BTreeMap::new(), &BTreeSet::new(), &SamplerConfig::new(50_000, seed), None)
                    .unwrap();
            assert_eq!(list.total(), 50_000.0);
            let target = exact(&u);
            let tv: f64 = (0..target.values().len())
                .map(|i| (list.value_at(i) / list.total() - target.values()[i]).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.02, "seed {seed} U{}: TV {tv}", u.id.0);
            checked += 1;
        }
    }
    assert!(checked >= 6);
}

#[test]
fn full_conditional_is_the_normalized_column() {
    for seed in 0..10 {
        for u in gibbs_universes(seed) {
            let target = exact(&u);
            let sampler = Sampler::new(&u.scope, &u.factors, &[], &BTreeMap::new()).unwrap();
            for idx in 0..target.values().len() {
                let config = u.scope.config_of(idx);
                for (pos, &var) in u.scope.vars().iter().enumerate() {
                    let cond = sampler.full_conditional(var, &config).unwrap();
                    let column: Vec<f64> = (0..u.scope.cards()[pos])
                        .map(|s| {
                            let mut c = config.clone();
                            c[pos] = s;
                            target.values()[u.scope.index_of(&c)]
                        })
                        .collect();
                    let z: f64 = column.iter().sum();
                    for (a, b) in cond.iter().zip(&column) {
                        assert!((a - b / z).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn clamped_variables_never_move() {
    let u = gibbs_universes(2).into_iter().max_by_key(|u| u.scope.len()).unwrap();
    let var = u.scope.vars()[0];
    let clamps = BTreeMap::from([(var, 1)]);
    let list = run_sampler(&u, &[], &clamps, &BTreeSet::new(), &SamplerConfig::new(2_000, 5), None).unwrap();
    for (config, _) in list.iter() {
        assert_eq!(config[0], 1);
    }
    let bad = BTreeMap::from([(var, 9)]);
    assert!(matches!(
        run_sampler(&u, &[], &bad, &BTreeSet::new(), &SamplerConfig::new(10, 0), None),
        Err(GibbsError::BadClamp { .. })
    ));
    let outside = BTreeMap::from([(VarId(99), 0)]);
    assert_eq!(
        run_sampler(&u, &[], &outside, &BTreeSet::new(), &SamplerConfig::new(10, 0), None).unwrap_err(),
        GibbsError::NotInScope(VarId(99))
    );
}

#[test]
fn burn_in_and_recorded_sweeps() {
    let u = gibbs_universes(1).remove(0);
    let cfg = SamplerConfig { burn_in_fraction: 0.25, ..SamplerConfig::new(101, 0) };
    let (mut burn, mut kept) = (0, 0);
    let mut trace = |_: usize, recorded: bool, _: &[usize]| if recorded { kept += 1 } else { burn += 1 };
    let list = run_sampler(&u, &[], &BTreeMap::new(), &BTreeSet::new(), &cfg, Some(&mut trace)).unwrap();
    assert_eq!((burn, kept), (26, 101));
    assert_eq!(list.total(), 101.0);
}

#[test]
fn seeds_and_streams_are_deterministic() {
    let u = gibbs_universes(3).remove(0);
    let run = |seed| {
        run_sampler(&u, &[], &BTreeMap::new(), &BTreeSet::new(), &SamplerConfig::new(3_000, seed), None).unwrap()
    };
    assert_eq!(run(4), run(4));
    assert_ne!(run(4), run(5));
    let a = SamplerConfig::new(1, 0).rng(0);
    let b = SamplerConfig::new(1, 0).rng(1);
    assert_ne!(a, b);
}

#[test]
fn invalid_configurations() {
    assert_eq!(SamplerConfig::new(0, 0).validate(), Err(GibbsError::NoSamples));
    for f in [-0.1, 1.0, f64::NAN] {
        let cfg = SamplerConfig { burn_in_fraction: f, ..SamplerConfig::default() };
        assert!(matches!(cfg.validate(), Err(GibbsError::BurnIn(_))));
    }
    let mut u = gibbs_universes(0).remove(0);
    u.mode = Mode::De;
    assert_eq!(
        run_sampler(&u, &[], &BTreeMap::new(), &BTreeSet::new(), &SamplerConfig::new(10, 0), None).unwrap_err(),
        GibbsError::NotGibbs
    );
}
