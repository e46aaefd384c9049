use std::process::Command;

use fbt_core::cli::run;

fn fbt(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["fbt".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn narayana_example() {
    assert_eq!(
        fbt(&["narayana", "4", "3"]),
        (0, "6\n".into(), String::new())
    );
    assert_eq!(fbt(&["narayana", "3", "0"]).0, 1);
}

#[test]
fn bijection_both_directions() {
    let (code, out, _) = fbt(&["bijection", "--to-matrix", "()()(())"]);
    assert_eq!(code, 0);
    assert_eq!(out, "2 1\n1 1\n1 1\n");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    std::fs::write(&path, &out).unwrap();
    let (code, out, _) = fbt(&["bijection", "--to-tree", path.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, "()()(())\n"));
    let (_, json, _) = fbt(&[
        "bijection",
        "--to-tree",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(json.starts_with("{\"parens\":\"()()(())\""));
}

#[test]
fn estimate_example() {
    let (code, out, _) = fbt(&["estimate", "--n", "3", "--m", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("P_hat=0.5\nQ_hat=0.6\n"), "{out}");
    assert_eq!(fbt(&["estimate", "--n", "0", "--m", "2"]).0, 1);
}

#[test]
fn gf_and_enumeration_agree() {
    let (_, gf, _) = fbt(&["gf-coeffs", "2", "1"]);
    assert_eq!(gf, "1\n1\n2\n1\n1\n");
    let (_, decs, _) = fbt(&["enum-decomp", "2", "1", "--format", "json"]);
    assert_eq!(decs.lines().count(), 6);
    let (_, trees, _) = fbt(&["enum-trees", "2", "2"]);
    let mut want = vec![
        "(())()()", "(()())()", "(()()())", "()()(())", "()(())()", "()(()())",
    ];
    want.sort();
    assert_eq!(trees.lines().collect::<Vec<_>>(), want);
    let (_, records, _) = fbt(&["enum-trees", "1", "0", "--format", "records"]);
    assert_eq!(records, "#types\t2\n-\t1\n1\t1\n2\t2\n");
}

#[test]
fn contour_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, "(())\n").unwrap();
    let (code, out, _) = fbt(&["contour", "--tree-file", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("step,height"));
    assert_eq!(out.lines().count(), 1 + 9);
}

#[test]
fn extinction_and_mgf() {
    let (_, out, _) = fbt(&["extinction", "--params", "0.2,0,0.8,0.2,0,0.8"]);
    let q1: f64 = out.lines().nth(1).unwrap()[2..].parse().unwrap();
    assert!((q1 - 0.25).abs() < 1e-12, "{out}");
    let (code, out, _) = fbt(&[
        "mgf",
        "--params",
        "0.7,0,0.3,0.7,0,0.3",
        "--s",
        "-0.05,-0.2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    let (code, out, err) = fbt(&["mgf", "--s", "0.5"]);
    assert_eq!((code, out.as_str()), (1, ""));
    assert!(err.contains("s <= 0"));
    let (code, _, _) = fbt(&["mgf", "--s", "-0.01", "--max-iterations", "2"]);
    assert_eq!(code, 3);
}

#[test]
fn likelihood_and_father_pmf() {
    let (_, out, _) = fbt(&[
        "likelihood",
        "--P",
        "0.5",
        "--Q",
        "0.5",
        "--n",
        "1",
        "--m",
        "0",
    ]);
    assert!(out.starts_with("likelihood=0.125"), "{out}");
    assert_eq!(
        fbt(&[
            "likelihood",
            "--P",
            "1.5",
            "--Q",
            "0.5",
            "--n",
            "1",
            "--m",
            "0"
        ])
        .0,
        1
    );
    let (_, out, _) = fbt(&["father-pmf", "--max-n", "1", "--max-m", "0"]);
    assert_eq!(out, "n,m,pmf,ln_pmf\n0,0,0.625,-0.4700036292457356\n1,0,0.14648437499999997,-1.9208365115031976\n");
    assert_eq!(fbt(&["father-pmf", "--params", "0.1,0,0.9,0.1,0,0.9"]).0, 1);
}

#[test]
fn sample_rejects_partial_parameters() {
    assert_eq!(fbt(&["sample", "--p0", "0.5"]).0, 1);
    assert_eq!(fbt(&["sample", "--params", "0.5,0.5"]).0, 1);
    assert_eq!(fbt(&["sample", "--count", "0"]).0, 1);
    assert_eq!(fbt(&["sample", "--frobnicate"]).0, 1);
}

#[test]
fn sample_is_deterministic_across_threads() {
    let a = fbt(&["sample", "--seed", "42", "--count", "200", "--threads", "1"]);
    let b = fbt(&["sample", "--seed", "42", "--count", "200", "--threads", "3"]);
    assert_eq!(a, b);
    assert!(a
        .1
        .starts_with("seed,status,vertex_count,edge_count,d1,d2,s1,s2\n"));
    let sup = fbt(&[
        "sample",
        "--params",
        "0.2,0,0.8,0.2,0,0.8",
        "--count",
        "20",
        "--max-vertices",
        "50",
    ]);
    assert!(sup.1.contains(",truncated,50,49,,,,"), "{}", sup.1);
}

#[test]
fn verify_quick_passes() {
    let (code, out, _) = fbt(&["verify"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("[PASS] (d = 2, c = 1) triples"));
    assert!(!out.contains("FAIL"));
    assert_eq!(fbt(&["verify", "--level", "medium"]).0, 1);
}

#[test]
fn mc_compare_zero_replicates() {
    assert_eq!(fbt(&["mc-compare", "--replicates", "0"]).0, 1);
    let (code, out, _) = fbt(&["mc-compare", "--replicates", "500", "--format", "summary"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("replicates: 500"));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.txt");
    let (code, out, _) = fbt(&["narayana", "6", "3", "--output", path.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, ""));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "50\n");
}

#[test]
fn binary_matches_library_entry_point() {
    let out = Command::new(env!("CARGO_BIN_EXE_fbt"))
        .args(["sample", "--seed", "42", "--count", "50"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let (_, lib, _) = fbt(&["sample", "--seed", "42", "--count", "50"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), lib);
    let status = Command::new(env!("CARGO_BIN_EXE_fbt"))
        .arg("nope")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = fbt(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("FBT_MGF_TOLERANCE"));
}
