use std::path::PathBuf;

use hugs::fixtures::{self, NetworkShape};
use hugs::model::{parse_evidence, parse_network, ParseError};
use proptest::prelude::*;

fn data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn aunt_emily_file_matches_generator() {
    let parsed = parse_network(&data("aunt_emily.net")).unwrap();
    assert_eq!(parsed, fixtures::aunt_emily_network());
    assert_eq!(parsed.len(), 17);
}

#[test]
fn aunt_emily_evidence_file() {
    let net = fixtures::aunt_emily_network();
    let ev = parse_evidence(&data("aunt_emily.evidence"), &net).unwrap();
    assert_eq!(ev, fixtures::aunt_emily_evidence(&net));
}

#[test]
fn copy_file_matches_generator() {
    assert_eq!(parse_network(&data("copy.net")).unwrap(), fixtures::copy_network(0.3));
}

#[test]
fn errors_carry_line_numbers() {
    let cases = [
        ("var A { x y }\ncpt A { 0.5 0.6 }\n", 2),
        ("var A { x y }\n\nvar A { x y }\n", 3),
        ("var A { x y }\ncpt A | B { 0.5 0.5 }\n", 2),
        ("var A { x y\ncpt A { 1 0 }\n", 2),
    ];
    for (text, line) in cases {
        let err = parse_network(text).unwrap_err();
        assert_eq!(err.line(), Some(line), "{text:?}: {err}");
    }
}

#[test]
fn evidence_errors() {
    let net = fixtures::copy_network(0.3);
    for text in ["C = \"c1\"\n", "A = \"a3\"\n", "A = \"a1\"\nA = \"a2\"\n", "A ~ (1)\n", "A ~ (-1, 1)\n"] {
        let err = parse_evidence(text, &net).unwrap_err();
        assert!(matches!(err, ParseError::Evidence { .. } | ParseError::Syntax { .. }), "{text:?}: {err}");
    }
    let ev = parse_evidence("# soft\nB ~ (0.2, 1)\n", &net).unwrap();
    assert_eq!(ev.get(net.id_of("B").unwrap()), Some(&[0.2, 1.0][..]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_round_trips(seed in 0u64..10_000, vars in 1usize..9, parents in 0usize..4, zeros in 0.0f64..0.5) {
        let shape = NetworkShape { variables: vars, max_parents: parents, min_states: 2, max_states: 4, zero_fraction: zeros };
        let net = fixtures::random_network(seed, &shape);
        let text = net.to_string();
        prop_assert_eq!(parse_network(&text).unwrap(), net);
    }
}
