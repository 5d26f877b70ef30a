use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hugs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hugs")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_network_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.net", "var A { x y }\nvar B { x y }\ncpt A { 0.5 0.5 }\ncpt B | A { 1 0 0.2 }\n");
    let o = hugs(&["infer", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn inconsistent_evidence_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let ev = write(dir.path(), "e.txt", "A = \"a1\"\nB = \"b2\"\n");
    let o = hugs(&["infer", &data("copy.net"), "--evidence", &ev]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("zero normalization"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(hugs(&["infer", "builtin:copy", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(hugs(&["infer", "builtin:copy", "--gibbs-threshold", "0"]).status.code(), Some(2));
    assert_eq!(hugs(&["infer", "builtin:nothing"]).status.code(), Some(2));
    assert_eq!(hugs(&["infer", "builtin:storage-876"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let ev = write(dir.path(), "e.txt", "Z = \"z\"\n");
    let o = hugs(&["infer", &data("copy.net"), "--evidence", &ev]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn exact_priors_of_copy_network() {
    let o = hugs(&["infer", &data("copy.net"), "--gibbs-threshold", "inf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# seed 0 rng ChaCha8 samples 10000 burn-in 0.1 gibbs-threshold inf\n"), "{out}");
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, ["A a1 0.300000000", "A a2 0.700000000", "B b1 0.300000000", "B b2 0.700000000"]);
}

#[test]
fn hybrid_inference_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "infer".to_string(),
            "builtin:aunt-emily-hybrid".into(),
            "--evidence".into(),
            data("aunt_emily.evidence"),
            "--samples".into(),
            "2000".into(),
            "--seed".into(),
            "9".into(),
            "--output".into(),
            dir.path().join(out).to_string_lossy().into_owned(),
        ]
    };
    for name in ["a.txt", "b.txt"] {
        let a = args(name);
        let o = hugs(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read_to_string(dir.path().join("a.txt")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.txt")).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("# universes 9 (DE 6, GIBBS 3)"));
    assert!(a.lines().any(|l| l.starts_with("O arsenic 1.000000000")), "{a}");
}

#[test]
fn csv_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let msgs = dir.path().join("m.txt").to_string_lossy().into_owned();
    let sweeps = dir.path().join("s.csv").to_string_lossy().into_owned();
    let o = hugs(&[
        "infer",
        "builtin:aunt-emily",
        "--gibbs-threshold",
        "60",
        "--samples",
        "300",
        "--format",
        "csv",
        "--trace-messages",
        &msgs,
        "--trace-sweeps",
        &sweeps,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "variable,state,probability"));
    assert!(out.lines().any(|l| l.starts_with("CD,natural,")));
    let m = std::fs::read_to_string(&msgs).unwrap();
    assert!(m.lines().next().unwrap().starts_with("1 inward U"));
    let s = std::fs::read_to_string(&sweeps).unwrap();
    assert_eq!(s.lines().next(), Some("universe,sweep,recorded,config"));
    assert!(s.lines().filter(|l| l.contains(",true,")).count() >= 300);
}

#[test]
fn compile_and_report() {
    let o = hugs(&["compile", &data("aunt_emily.net"), "--gibbs-threshold", "50"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("universes 12 (DE 9, GIBBS 3)\n"), "{}", stdout(&o));
    let o = hugs(&["report", "builtin:storage-876", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 878);
    assert!(out.lines().last().unwrap().starts_with("total,"));
    let o = hugs(&["report", "builtin:storage-876"]);
    assert!(stdout(&o).contains("universes 876 (GIBBS 41)"));
    assert!(stdout(&o).contains("gibbs dense share 91.7%"));
    let o = hugs(&["report", &data("aunt_emily.net"), "--gibbs-threshold", "inf"]);
    assert!(stdout(&o).contains("savings 0.0%"), "{}", stdout(&o));
}

#[test]
fn aunt_emily_posteriors_match_enumeration() {
    let o = hugs(&[
        "infer",
        "builtin:aunt-emily-hybrid",
        "--evidence",
        &data("aunt_emily.evidence"),
        "--samples",
        "20000",
        "--seed",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let net = hugs::fixtures::aunt_emily_network();
    let oracle = hugs::oracle::enumerate_joint(&net, &hugs::fixtures::aunt_emily_evidence(&net)).unwrap();
    let out = stdout(&o);
    for v in net.ids() {
        let var = net.variable(v);
        let got: Vec<f64> = out
            .lines()
            .filter_map(|l| {
                let mut f = l.split(' ');
                (f.next() == Some(var.name.as_str())).then(|| f.nth(1).unwrap().parse().unwrap())
            })
            .collect();
        assert_eq!(got.len(), var.cardinality(), "{}", var.name);
        let tv: f64 = got.iter().zip(&oracle.posteriors[v.index()]).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.03, "{}: TV {tv}", var.name);
    }
}
