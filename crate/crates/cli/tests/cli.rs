use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circmom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn toy_query(kind: &str, extra: &[&str]) -> Output {
    let (pc, rc) = (data("toy/toy.pc"), data("toy/toy.rc"));
    let mut args = vec!["query", kind, "--pc", &pc, "--rc", &rc];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn toy_expectation() {
    let o = toy_query("expectation", &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "5.452000000000\n");
}

#[test]
fn toy_conditional_stats() {
    let o = toy_query("stats", &["--set", "X1=1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("mean\t-2.140000000000\n"), "{out}");
    let j = toy_query("stats", &["--set", "X1=1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert!((v["mean"].as_f64().unwrap() + 2.14).abs() < 1e-12);
}

#[test]
fn toy_moment_and_oracle() {
    assert_eq!(stdout(&toy_query("moment", &["--order", "2"])), "51.173200000000\n");
    let o = toy_query("stats", &["--oracle"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("variance\t21.448896000000"));
}

#[test]
fn marginal_and_mpe() {
    let pc = data("toy/toy.pc");
    assert_eq!(stdout(&run(&["query", "marginal", "--pc", &pc])), "1.000000000000\n");
    let o = run(&["query", "mpe", "--pc", &pc, "--set", "X1=1", "--oracle"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("probability\t0.120000000000") && out.contains("assignment\t1,1,1"), "{out}");
    let o = run(&["oracle", "mpe", "--pc", &pc]);
    assert!(stdout(&o).contains("argmax\t0,1,0;0,1,1"));
}

#[test]
fn zero_probability_evidence_exits_2() {
    let o = toy_query("expectation", &["--set", "X1=0", "--set", "X2=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn missing_file_exits_3() {
    assert_eq!(run(&["query", "marginal", "--pc", "no/such.pc"]).status.code(), Some(3));
}

#[test]
fn validate_exit_codes() {
    let (pc, rc) = (data("toy/toy.pc"), data("toy/toy.rc"));
    assert_eq!(run(&["validate", "--pc", &pc, "--rc", &rc]).status.code(), Some(0));
    for (flag, file, property) in [
        ("--pc", "invalid/unnormalized.pc", "pc-parameters"),
        ("--pc", "invalid/nonsmooth.pc", "smoothness"),
        ("--rc", "invalid/nondeterministic.rc", "determinism"),
        ("--rc", "invalid/nondecomposable.rc", "structured-decomposability"),
        ("--rc", "invalid/other_vtree.rc", "vtree-compatibility"),
    ] {
        let path = data(file);
        let args: Vec<&str> = if flag == "--pc" {
            vec!["validate", "--pc", &path, "--rc", &rc]
        } else {
            vec!["validate", "--pc", &pc, "--rc", &path]
        };
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{file}");
        assert!(stdout(&o).contains(&format!("{property}\tFAIL")), "{file}");
    }
}

#[test]
fn compile_nb_and_lr_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let nb = dir.path().join("nb.txt");
    std::fs::write(&nb, "nb-model v1\nclass 1 0.4\n2 0.9 0.2\n3 0.3 0.6\n").unwrap();
    let lr = dir.path().join("lr.txt");
    std::fs::write(&lr, "linear-model v1\n0 -0.5\n2 1.5\n3 -2\n").unwrap();
    let out = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let s = |p: &PathBuf| p.to_string_lossy().into_owned();
    assert!(run(&["compile", "nb", "--model", &s(&nb), "--out", &out("m")]).status.success());
    assert!(run(&["compile", "lr", "--model", &s(&lr), "--class", "1", "--out", &out("c")]).status.success());
    let pc = out("m.pc");
    let lc = out("c.rc");
    let o = run(&["validate", "--pc", &pc, "--rc", &lc]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = run(&["query", "taylor", "--pc", &pc, "--rc", &lc, "--order", "3", "--oracle"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    // E[w] under the NB joint by hand: -0.5 + 1.5 P(X2) - 2 P(X3)
    let p2 = 0.4 * 0.9 + 0.6 * 0.2;
    let p3 = 0.4 * 0.3 + 0.6 * 0.6;
    let want = -0.5 + 1.5 * p2 - 2.0 * p3;
    let got: f64 = stdout(&run(&["query", "expectation", "--pc", &pc, "--rc", &lc])).trim().parse().unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn fit_and_experiment_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut csv = String::from("a,b,c,y\n");
    for i in 0..40u32 {
        let (a, b, c) = (i % 2, (i / 2) % 2, (i * 7 / 3) % 2);
        csv.push_str(&format!("{a},{b},{c},{}\n", 1.0 + 2.0 * a as f64 - b as f64 + 0.5 * c as f64));
    }
    std::fs::write(p("d.csv"), csv).unwrap();
    std::fs::write(p("v.vtree"), "vtree 5\nL 0 1\nL 1 2\nL 2 3\nI 3 1 2\nI 4 0 3\n").unwrap();
    let ok = |args: &[&str]| {
        let o = run(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    ok(&["compile", "fit-ridge", "--data", &p("d.csv"), "--target", "y", "--out", &p("lm.txt")]);
    ok(&["compile", "linear", "--model", &p("lm.txt"), "--vtree", &p("v.vtree"), "--out", &p("m.rc")]);
    ok(&["compile", "factorized", "--data", &p("d.csv"), "--target", "y", "--vtree", &p("v.vtree"), "--out", &p("f.pc")]);
    let exp = [
        "experiment", "--pc", &p("f.pc"), "--model", &p("m.rc"), "--test", &p("d.csv"), "--target", "y",
        "--rates", "0,0.5,1", "--repetitions", "3", "--seed", "9",
    ];
    let a = stdout(&ok(&exp));
    let b = stdout(&ok(&exp));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 3 * 3 * 4);
    // the target is exactly linear, so every method is perfect without missingness
    for line in a.lines().filter(|l| l.split('\t').nth(1) == Some("0")) {
        let v: f64 = line.split('\t').nth(4).unwrap().parse().unwrap();
        assert!(v < 1e-3, "{line}");
    }
}

#[test]
fn experiment_rejects_bad_arguments() {
    let (pc, rc) = (data("toy/toy.pc"), data("toy/toy.rc"));
    let o = run(&["experiment", "--pc", &pc, "--model", &rc, "--test", "x.csv", "--methods", "knn"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["experiment", "--pc", &pc, "--model", &rc, "--test", "x.csv", "--rates", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}
