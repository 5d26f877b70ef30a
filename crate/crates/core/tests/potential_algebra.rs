use hugs::model::VarId;
use hugs::potential::{Payload, Scope, TablePotential, WeightedConfigList};
use proptest::prelude::*;

const CARDS: [usize; 5] = [2, 3, 2, 3, 2];

/// Value of `t` at a full assignment over all five variables, computed from
/// the row-major layout directly.
fn at(t: &TablePotential, full: &[usize]) -> f64 {
    let mut idx = 0;
    for (v, c) in t.scope().pairs() {
        idx = idx * c + full[v.index()];
    }
    t.values()[idx]
}

fn assignments() -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &c in &CARDS {
        out = out.into_iter().flat_map(|p| (0..c).map(move |s| [p.clone(), vec![s]].concat())).collect();
    }
    out
}

fn table() -> impl Strategy<Value = TablePotential> {
    (0u8..32).prop_flat_map(|mask| {
        let vars: Vec<VarId> = (0..5).filter(|i| mask & (1 << i) != 0).map(VarId).collect();
        let scope = Scope::from_vars(&vars, &CARDS);
        let len = scope.entry_count() as usize;
        proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..2.0], len)
            .prop_map(move |values| TablePotential::new(scope.clone(), values).unwrap())
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_is_pointwise(a in table(), b in table()) {
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        prop_assert_eq!(ab.scope(), &a.scope().union(b.scope()));
        for x in assignments() {
            prop_assert!(close(at(&ab, &x), at(&a, &x) * at(&b, &x)));
            prop_assert!(close(at(&ab, &x), at(&ba, &x)));
        }
    }

    #[test]
    fn product_is_associative(a in table(), b in table(), c in table()) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        for x in assignments() {
            prop_assert!(close(at(&left, &x), at(&right, &x)));
        }
    }

    #[test]
    fn marginal_matches_brute_force(t in table(), keep_mask in 0u8..32) {
        let keep: Vec<VarId> = t.scope().vars().iter().copied().filter(|v| keep_mask & (1 << v.index()) != 0).collect();
        let m = t.marginalize(&keep).unwrap();
        prop_assert!(close(m.sum(), t.sum()));
        let mut expected = vec![0.0; m.values().len()];
        for x in assignments() {
            let mut idx = 0;
            for (v, c) in m.scope().pairs() {
                idx = idx * c + x[v.index()];
            }
            // Each table entry is visited once per assignment outside its scope.
            let outside: usize = CARDS.iter().product::<usize>() / t.scope().entry_count() as usize;
            expected[idx] += at(&t, &x) / outside as f64;
        }
        for (a, b) in m.values().iter().zip(&expected) {
            prop_assert!(close(*a, *b));
        }
    }

    #[test]
    fn extend_then_marginalize_scales(t in table()) {
        let all = Scope::from_vars(&(0..5).map(VarId).collect::<Vec<_>>(), &CARDS);
        let e = t.extend(&all).unwrap();
        let back = e.marginalize(t.scope().vars()).unwrap();
        let factor = (all.entry_count() / t.scope().entry_count()) as f64;
        for (a, b) in back.values().iter().zip(t.values()) {
            prop_assert!(close(*a, b * factor));
        }
    }

    #[test]
    fn sparse_projection_commutes_with_densify(t in table(), keep_mask in 0u8..32) {
        let keep: Vec<VarId> = t.scope().vars().iter().copied().filter(|v| keep_mask & (1 << v.index()) != 0).collect();
        let list = WeightedConfigList::from_dense(&t);
        prop_assert!(close(list.total(), t.sum()));
        let via_list = list.project(&keep).unwrap().densify().unwrap();
        let via_table = t.marginalize(&keep).unwrap();
        prop_assert_eq!(via_list.scope(), via_table.scope());
        for (a, b) in via_list.values().iter().zip(via_table.values()) {
            prop_assert!(close(*a, *b));
        }
        prop_assert!(close(list.project(&keep).unwrap().total(), list.total()));
    }

    #[test]
    fn payload_completeness(t in table()) {
        let payload = Payload::from_marginal(t.clone());
        prop_assert_eq!(payload.is_complete(), !t.has_zero());
        let dense = payload.to_dense().unwrap();
        prop_assert_eq!(dense.values(), t.values());
    }

    #[test]
    fn ratio_zero_convention(t in table()) {
        let ones = TablePotential::ones(t.scope().clone()).unwrap();
        let r = ones.update_ratio(&t).unwrap();
        for (q, x) in r.values().iter().zip(t.values()) {
            prop_assert_eq!(*q, if *x == 0.0 { 0.0 } else { 1.0 / x });
        }
    }
}
