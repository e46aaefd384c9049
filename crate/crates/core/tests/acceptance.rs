//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p fbt-core --test acceptance`.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use fbt_core::bijection::{
    decomposition_to_parens, decomposition_to_tree, parens_to_decomposition, tree_to_decomposition,
};
use fbt_core::branching::{count_fathers_survivals, map_replicates, SampleStatus, SurvivalParams};
use fbt_core::combinatorics::{
    binomial, enumerate_decompositions, gf_coefficients, narayana, weight_histogram,
};
use fbt_core::inference::{
    extinction_probability, father_pmf, likelihood, mgf_fixed_point, mle, no_father_mass,
    total_mass, FatherStat, LikelihoodParams, MgfQuery,
};
use fbt_core::parens::{decode_parens, enumerate_full_binary_trees};
use fbt_core::tree::example_contour_tree;
use num_bigint::BigUint;

const REPLICATES: usize = 100_000;
/// Same master seeds as `fbt verify --level full`: `SEED` for extinction,
/// `SEED + 1` for the transform, `SEED + 2` for the father law.
const SEED: u64 = 0x5EED_0001;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Narayana number straight from its definition, independent of the
/// library's binomials.
fn narayana_oracle(n: u64, k: u64) -> BigUint {
    let mut pascal = vec![vec![BigUint::from(1u32)]];
    for i in 1..=n as usize {
        let prev = &pascal[i - 1];
        let mut row = vec![BigUint::from(1u32); i + 1];
        for j in 1..i {
            row[j] = &prev[j - 1] + &prev[j];
        }
        pascal.push(row);
    }
    let c = |a: u64, b: u64| pascal[a as usize][b as usize].clone();
    c(n, k) * c(n, k - 1) / BigUint::from(n)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for d in 0..=6 {
        for c in 0..=6 {
            let sum = gf_coefficients(d, c).unwrap().sum_coeffs();
            let expected = narayana_oracle((c + d + 1) as u64, (d + 1) as u64);
            if sum != expected || narayana((c + d + 1) as u64, (d + 1) as u64).unwrap() != expected
            {
                bad.push((d, c));
            }
        }
    }
    let t = start.elapsed();
    outcome(
        bad.is_empty() && within(t, 1.0),
        format!(
            "49 (d,c) pairs, mismatches {bad:?}, {:.3}s (limit 1s)",
            t.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for d in 0..=5usize {
        for c in 0..=4u32 {
            let hist =
                weight_histogram(&enumerate_decompositions(d, c, 1_000_000).unwrap()).unwrap();
            let gf: Vec<BigUint> = gf_coefficients(d, c as usize).unwrap().coeffs().to_vec();
            let hist: Vec<BigUint> = hist.into_iter().map(BigUint::from).collect();
            if hist != gf {
                bad.push((d, c));
            }
        }
    }
    let t1 = weight_histogram(&enumerate_decompositions(2, 1, 100).unwrap()).unwrap();
    let t = start.elapsed();
    outcome(
        bad.is_empty() && t1 == [1, 1, 2, 1, 1] && within(t, 5.0),
        format!(
            "30 (d,c) pairs, mismatches {bad:?}, (2,1) histogram {t1:?}, {:.3}s (limit 5s)",
            t.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut total = 0usize;
    for n in 1..=9usize {
        for m in 0..=(9 - n) {
            let count = enumerate_full_binary_trees(n, m, 10_000_000).unwrap().len();
            total += count;
            if BigUint::from(count) != narayana_oracle((n + m) as u64, (m + 1) as u64) {
                bad.push((n, m, count));
            }
        }
    }
    let t = start.elapsed();
    outcome(
        bad.is_empty() && within(t, 30.0),
        format!(
            "45 (n,m) pairs, {total} trees, mismatches {bad:?}, {:.3}s (limit 30s)",
            t.as_secs_f64()
        ),
    )
}

const D2_C1_TRIPLES: [(&str, [u32; 2], [u32; 2], u64); 6] = [
    ("(())()()", [0, 0], [0, 0], 0),
    ("(()())()", [1, 0], [0, 0], 1),
    ("(()()())", [1, 1], [0, 0], 2),
    ("()()(())", [1, 1], [1, 1], 4),
    ("()(())()", [1, 0], [1, 0], 2),
    ("()(()())", [1, 1], [1, 0], 3),
];

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    for (s, top, bottom, w) in D2_C1_TRIPLES {
        let tree = decode_parens(&s.parse().unwrap());
        let dec = tree_to_decomposition(&tree).unwrap();
        let weight: u32 = dec.top().iter().chain(dec.bottom()).sum();
        let tree_rt = decomposition_to_tree(&dec).unwrap() == tree;
        let dec_rt = tree_to_decomposition(&decomposition_to_tree(&dec).unwrap()).unwrap() == dec;
        let text_rt = decomposition_to_parens(&dec).unwrap().as_str() == s;
        if dec.top() != top
            || dec.bottom() != bottom
            || weight as u64 != w
            || !tree_rt
            || !dec_rt
            || !text_rt
        {
            bad.push(s);
        }
    }
    outcome(bad.is_empty(), format!("6 triples, mismatches {bad:?}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut trees = 0;
    let mut bad_trees = 0;
    for n in 1..=8usize {
        for m in 0..=(8 - n) {
            for t in enumerate_full_binary_trees(n, m, 10_000_000).unwrap() {
                trees += 1;
                if decomposition_to_tree(&tree_to_decomposition(&t).unwrap()).unwrap() != t {
                    bad_trees += 1;
                }
            }
        }
    }
    let mut decs = 0;
    let mut bad_decs = 0;
    for d in 0..=5usize {
        for c in 0..=4u32 {
            for dec in enumerate_decompositions(d, c, 1_000_000).unwrap() {
                decs += 1;
                let s = decomposition_to_parens(&dec).unwrap();
                if parens_to_decomposition(&s).unwrap() != dec
                    || tree_to_decomposition(&decomposition_to_tree(&dec).unwrap()).unwrap() != dec
                {
                    bad_decs += 1;
                }
            }
        }
    }
    outcome(
        bad_trees == 0 && bad_decs == 0,
        format!(
            "{trees} trees ({bad_trees} failures), {decs} matrices ({bad_decs} failures), {:.3}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn subcritical() -> SurvivalParams {
    SurvivalParams::new(0.5, 0.2, 0.3, 0.5, 0.2, 0.3).unwrap()
}

fn criterion_6() -> Outcome {
    let dist = subcritical().distribution();
    let bad: Vec<usize> = map_replicates(&dist, 1, SEED, 10_000, 1_000_000, |o| {
        let h = o.tree.contour().heights().to_vec();
        let edges = o.tree.len() - 1;
        let ok = o.status == SampleStatus::Complete
            && h.len() == 2 * edges + 1
            && h[0] == 0
            && h[h.len() - 1] == 0
            && h.windows(2).all(|w| w[0].abs_diff(w[1]) == 1);
        usize::from(!ok)
    })
    .unwrap();
    let failures: usize = bad.iter().sum();
    let example = example_contour_tree().contour().heights().to_vec();
    let expected = [0, 1, 2, 1, 2, 1, 0, 1, 2, 3, 2, 3, 2, 3, 2, 1, 0, 1, 0];
    outcome(
        failures == 0 && example == expected,
        format!("10000 trees, {failures} violations; example path {example:?}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let p = SurvivalParams::without_survivals(0.8, 0.8).unwrap();
    let closed = extinction_probability(&p);
    let closed_ok = closed.iter().all(|x| (x - 0.25).abs() < 1e-12);
    // Root line: the dual process of a surviving supercritical tree is
    // strongly subcritical, so a tree still growing after 1000 vertices is
    // counted as infinite.
    let finite: usize = map_replicates(&p.distribution(), 1, SEED, REPLICATES, 1_000, |o| {
        usize::from(o.status == SampleStatus::Complete)
    })
    .unwrap()
    .iter()
    .sum();
    let freq = finite as f64 / REPLICATES as f64;
    let tol = 3.0 * (0.25f64 * 0.75 / REPLICATES as f64).sqrt();
    let t = start.elapsed();
    outcome(
        closed_ok && (freq - 0.25).abs() <= tol && within(t, 60.0),
        format!(
            "closed form ({}, {}), empirical {freq} (|diff| {:.5} <= {tol:.5}), {:.2}s (limit 60s)",
            closed[0],
            closed[1],
            (freq - 0.25).abs(),
            t.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = SurvivalParams::without_survivals(0.3, 0.3).unwrap();
    let dist = p.distribution();
    let edges: Vec<(bool, usize)> =
        map_replicates(&dist, 1, SEED.wrapping_add(1), REPLICATES, 1_000_000, |o| {
            (o.status == SampleStatus::Complete, o.tree.len() - 1)
        })
        .unwrap();
    let all_complete = edges.iter().all(|e| e.0);
    let mut parts = Vec::new();
    let mut ok = all_complete;
    for s in [-0.05, -0.2] {
        let f1 = mgf_fixed_point(&dist, &MgfQuery::new(s)).unwrap().values[0];
        let xs: Vec<f64> = edges
            .iter()
            .map(|&(_, e)| (2.0 * s * e as f64).exp())
            .collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let z = (mean - f1) / (var / n).sqrt();
        ok &= z.abs() <= 3.0;
        parts.push(format!("s={s}: F1 {f1:.6}, mean {mean:.6}, z {z:.3}"));
    }
    for (p2, q2) in [(0.3, 0.3), (0.8, 0.8)] {
        let p = SurvivalParams::without_survivals(p2, q2).unwrap();
        let f = mgf_fixed_point(&p.distribution(), &MgfQuery::new(-1e-6))
            .unwrap()
            .values;
        let e = extinction_probability(&p);
        let diff = (f[0] - e[0]).abs().max((f[1] - e[1]).abs());
        ok &= diff < 1e-3;
        parts.push(format!("p2=q2={p2}: |F(-1e-6) - q| {diff:.2e}"));
    }
    outcome(
        ok,
        format!("{}; all complete: {all_complete}", parts.join("; ")),
    )
}

fn criterion_9() -> Outcome {
    let p = subcritical();
    let (big_p, big_q) = (p.big_p(), p.big_q());
    let counts: Vec<Option<(u64, u64)>> = map_replicates(
        &p.distribution(),
        1,
        SEED.wrapping_add(2),
        REPLICATES,
        1_000_000,
        |o| {
            (o.status == SampleStatus::Complete).then(|| {
                let c = count_fathers_survivals(&o.tree).unwrap();
                (c.d1, c.d2)
            })
        },
    )
    .unwrap();
    let mut hist: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    let mut incomplete = 0;
    for c in counts {
        match c {
            Some(k) => *hist.entry(k).or_default() += 1,
            None => incomplete += 1,
        }
    }
    let n = REPLICATES as f64;
    let theory = |d1: u64, d2: u64| match (d1, d2) {
        (0, 0) => no_father_mass(&p).unwrap(),
        (0, _) => 0.0,
        _ => father_pmf(&p, d1, d2).unwrap(),
    };
    let mut max_z: f64 = 0.0;
    let mut cells = 0;
    for d1 in 0..40u64 {
        for d2 in 0..40u64 {
            let t = theory(d1, d2);
            if t > 0.01 {
                cells += 1;
                let e = hist.get(&(d1, d2)).copied().unwrap_or(0) as f64 / n;
                max_z = max_z.max(((e - t) / (t * (1.0 - t) / n).sqrt()).abs());
            }
        }
    }
    let mut observed_theory = 0.0;
    let mut abs = 0.0;
    for (&(d1, d2), &h) in &hist {
        let t = theory(d1, d2);
        observed_theory += t;
        abs += (h as f64 / n - t).abs();
    }
    let tv = 0.5 * (abs + (1.0 - observed_theory).max(0.0));
    let pq_ok = (big_p - 0.625).abs() < 1e-15 && (big_q - 0.625).abs() < 1e-15;
    outcome(
        pq_ok && incomplete == 0 && max_z <= 3.0 && tv < 0.01,
        format!(
            "P = {big_p}, Q = {big_q}; {cells} cells above 0.01, max |z| {max_z:.3} (<= 3); TV {tv:.5} (< 0.01)"
        ),
    )
}

fn criterion_10() -> Outcome {
    let lp = LikelihoodParams::new(0.625, 0.625).unwrap();
    let t = total_mass(&lp, 1e-12, 100_000).unwrap();
    // Independent sum: exact Narayana numbers as f64 over shells k = n + m.
    let mut direct = 0.625f64;
    for k in 1..=400u64 {
        for m in 0..k {
            let nn = k - m;
            let nar: f64 = (binomial(k, m + 1) * binomial(k, m) / BigUint::from(k))
                .to_string()
                .parse()
                .unwrap();
            direct += nar
                * 0.625f64.powi(m as i32 + 1)
                * 0.375f64.powi(nn as i32)
                * 0.625f64.powi(nn as i32)
                * 0.375f64.powi(m as i32);
        }
    }
    outcome(
        (t.mass - 1.0).abs() < 1e-6 && (direct - 1.0).abs() < 1e-6,
        format!(
            "adaptive total {} over {} shells, direct 400-shell total {direct}",
            t.mass, t.shells
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, m) in [(1u64, 0u64), (3, 2), (5, 5), (2, 7)] {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 1..100 {
            for j in 1..100 {
                let (pp, qq) = (i as f64 / 100.0, j as f64 / 100.0);
                let l = likelihood(&LikelihoodParams::new(pp, qq).unwrap(), n, m).unwrap();
                if l > best.0 {
                    best = (l, pp, qq);
                }
            }
        }
        let e = mle(&FatherStat::new(n, m).unwrap()).unwrap();
        let (ep, eq) = (
            (m + 1) as f64 / (m + n + 1) as f64,
            n as f64 / (m + n) as f64,
        );
        let hit = (best.1 - ep).abs() <= 0.01 + 1e-12
            && (best.2 - eq).abs() <= 0.01 + 1e-12
            && e.p_hat == ep
            && e.q_hat == eq;
        ok &= hit;
        parts.push(format!(
            "({n},{m}): grid ({}, {}) vs ({ep:.4}, {eq:.4})",
            best.1, best.2
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_12() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_fbt");
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .max(4);
    let run = |extra: &[&str]| -> Vec<u8> {
        let out = Command::new(bin)
            .args(["sample", "--seed", "42", "--count", "1000"])
            .args(extra)
            .output()
            .expect("run fbt");
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = run(&[]);
    let b = run(&[]);
    let one = run(&["--threads", "1"]);
    let nt = threads.to_string();
    let many = run(&["--threads", &nt]);
    let rows = a.iter().filter(|&&c| c == b'\n').count();
    outcome(
        a == b && a == one && one == many && rows == 1001,
        format!(
            "{} bytes, {rows} lines; run/run {}, 1 thread vs {threads} threads {}",
            a.len(),
            if a == b { "identical" } else { "differ" },
            if one == many { "identical" } else { "differ" }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("gf coefficient sums equal Narayana numbers", criterion_1),
        ("enumeration histograms equal gf coefficients", criterion_2),
        (
            "full binary tree counts equal Narayana numbers",
            criterion_3,
        ),
        ("(d = 2, c = 1) triples and roundtrips", criterion_4),
        ("bijection roundtrips at scale", criterion_5),
        ("contour invariants and example path", criterion_6),
        ("extinction closed form and frequency", criterion_7),
        ("mgf fixed point vs Monte Carlo", criterion_8),
        ("father pmf vs Monte Carlo", criterion_9),
        ("total mass", criterion_10),
        ("grid argmax matches estimators", criterion_11),
        ("sample output determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} [{}] ({:.2}s)",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
