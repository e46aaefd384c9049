//! Self-check suite behind `fbt verify`.
//!
//! Every check runs even when an earlier one fails; the report lists the
//! expected and actual value of each.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::bijection::{decomposition_to_tree, parens_to_decomposition, tree_to_decomposition};
use crate::branching::SurvivalParams;
use crate::combinatorics::{
    enumerate_decompositions, gf_coefficients, narayana, weight_histogram, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::inference::{
    extinction_probability, likelihood, mgf_fixed_point, mle, total_mass, FatherStat,
    LikelihoodParams, MgfQuery, DEFAULT_SHELL_TOLERANCE,
};
use crate::montecarlo::{mc_compare, CellKind, McConfig};
use crate::parens::{
    decode_parens, encode_parens, enumerate_full_binary_trees, ParenString, DEFAULT_TREE_CAP,
};

pub const DEFAULT_VERIFY_SEED: u64 = 0x5EED_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::arg(format!(
                "unknown level {s:?}, expected quick or full"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: expected {}, actual {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.actual,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub level: Level,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    pub replicates: usize,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            seed: DEFAULT_VERIFY_SEED,
            replicates: 100_000,
        }
    }
}

/// Outcome of one check body: `(expected, actual, passed)`.
type Outcome = Result<(String, String, bool)>;

fn timed(name: &str, body: impl FnOnce() -> Outcome) -> Check {
    let start = Instant::now();
    let (expected, actual, passed) = match body() {
        Ok(v) => v,
        Err(e) => ("no error".into(), format!("error: {e}"), false),
    };
    Check {
        name: name.into(),
        expected,
        actual,
        passed,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub const D2_C1_TRIPLES: [(&str, [u32; 2], [u32; 2], u64); 6] = [
    ("(())()()", [0, 0], [0, 0], 0),
    ("(()())()", [1, 0], [0, 0], 1),
    ("(()()())", [1, 1], [0, 0], 2),
    ("()()(())", [1, 1], [1, 1], 4),
    ("()(())()", [1, 0], [1, 0], 2),
    ("()(()())", [1, 1], [1, 0], 3),
];

pub fn run_verify(opts: &VerifyOptions) -> Report {
    let mut checks = vec![
        timed("narayana(4,3)", || {
            let v = narayana(4, 3)?;
            Ok(("6".into(), v.to_string(), v == 6u32.into()))
        }),
        timed("gf sum equals narayana, d,c <= 6", check_gf_sums),
        timed("decomposition histograms, d <= 5, c <= 4", check_histograms),
        timed("(d = 2, c = 1) triples", check_d2_c1),
        timed("tree counts, n + m <= 9", check_tree_counts),
        timed("bijection roundtrips", check_roundtrips),
        timed("example contour", check_contour),
        timed("total mass at P = Q = 0.625", || {
            let t = total_mass(
                &LikelihoodParams::new(0.625, 0.625)?,
                DEFAULT_SHELL_TOLERANCE,
                100_000,
            )?;
            Ok((
                "1 +- 1e-6".into(),
                format!("{} ({} shells)", t.mass, t.shells),
                (t.mass - 1.0).abs() < 1e-6,
            ))
        }),
        timed("grid argmax matches estimators", check_grid_mle),
        timed("extinction closed form, p2 = q2 = 0.8", || {
            let e = extinction_probability(&SurvivalParams::without_survivals(0.8, 0.8)?);
            let ok = e.iter().all(|x| (x - 0.25).abs() < 1e-12);
            Ok(("(0.25, 0.25)".into(), format!("({}, {})", e[0], e[1]), ok))
        }),
        timed("mgf limit at s -> 0 matches extinction", || {
            let p = SurvivalParams::without_survivals(0.8, 0.8)?;
            let f = mgf_fixed_point(&p.distribution(), &MgfQuery::new(-1e-6))?;
            let e = extinction_probability(&p);
            let ok = (f.values[0] - e[0]).abs() < 1e-3 && (f.values[1] - e[1]).abs() < 1e-3;
            Ok((
                format!("({}, {}) +- 1e-3", e[0], e[1]),
                format!("({}, {})", f.values[0], f.values[1]),
                ok,
            ))
        }),
    ];
    if opts.level == Level::Full {
        checks.extend(monte_carlo_checks(opts));
    }
    Report {
        level: opts.level,
        seed: opts.seed,
        checks,
    }
}

fn check_gf_sums() -> Outcome {
    let mut bad = Vec::new();
    for d in 0..=6usize {
        for c in 0..=6usize {
            let sum = gf_coefficients(d, c)?.sum_coeffs();
            if sum != narayana((c + d + 1) as u64, (d + 1) as u64)? {
                bad.push(format!("(d={d},c={c})"));
            }
        }
    }
    Ok(("49 matches".into(), mismatch_text(49, &bad), bad.is_empty()))
}

fn check_histograms() -> Outcome {
    let mut bad = Vec::new();
    for d in 0..=5usize {
        for c in 0..=4u32 {
            let decs = enumerate_decompositions(d, c, DEFAULT_ENUMERATION_CAP)?;
            let hist = weight_histogram(&decs)?;
            let gf: Vec<u64> = gf_coefficients(d, c as usize)?
                .coeffs()
                .iter()
                .map(|x| u64::try_from(x).unwrap_or(u64::MAX))
                .collect();
            if hist != gf {
                bad.push(format!("(d={d},c={c})"));
            }
        }
    }
    let t1 = weight_histogram(&enumerate_decompositions(2, 1, 100)?)?;
    if t1 != [1, 1, 2, 1, 1] {
        bad.push(format!("(2,1) histogram {t1:?}"));
    }
    Ok((
        "30 matches, (2,1) -> [1,1,2,1,1]".into(),
        mismatch_text(30, &bad),
        bad.is_empty(),
    ))
}

fn check_d2_c1() -> Outcome {
    let mut bad = Vec::new();
    for (s, top, bottom, w) in D2_C1_TRIPLES {
        let ps: ParenString = s.parse()?;
        let dec = parens_to_decomposition(&ps)?;
        let back = encode_parens(&decomposition_to_tree(&dec)?)?;
        let tree = decode_parens(&ps);
        let ok = dec.top() == top
            && dec.bottom() == bottom
            && dec.weight() == w
            && back == ps
            && tree_to_decomposition(&tree)? == dec;
        if !ok {
            bad.push(format!(
                "{s} -> {:?}/{:?} w={}",
                dec.top(),
                dec.bottom(),
                dec.weight()
            ));
        }
    }
    Ok((
        "6 exact triples".into(),
        mismatch_text(6, &bad),
        bad.is_empty(),
    ))
}

fn check_tree_counts() -> Outcome {
    let mut bad = Vec::new();
    let mut cells = 0;
    for n in 1..=9usize {
        for m in 0..=(9 - n) {
            cells += 1;
            let count = enumerate_full_binary_trees(n, m, DEFAULT_TREE_CAP)?.len() as u64;
            if narayana((n + m) as u64, (m + 1) as u64)? != count.into() {
                bad.push(format!("(n={n},m={m}) -> {count}"));
            }
        }
    }
    Ok((
        format!("{cells} matches"),
        mismatch_text(cells, &bad),
        bad.is_empty(),
    ))
}

fn check_roundtrips() -> Outcome {
    let mut trees = 0usize;
    let mut bad = Vec::new();
    for n in 1..=8usize {
        for m in 0..=(8 - n) {
            for t in enumerate_full_binary_trees(n, m, DEFAULT_TREE_CAP)? {
                trees += 1;
                if decomposition_to_tree(&tree_to_decomposition(&t)?)? != t {
                    bad.push(encode_parens(&t)?.to_string());
                }
            }
        }
    }
    let mut decs = 0usize;
    for d in 0..=5usize {
        for c in 0..=4u32 {
            for dec in enumerate_decompositions(d, c, DEFAULT_ENUMERATION_CAP)? {
                decs += 1;
                if tree_to_decomposition(&decomposition_to_tree(&dec)?)? != dec {
                    bad.push(dec.to_string().replace('\n', " "));
                }
            }
        }
    }
    Ok((
        "all identities".into(),
        format!("{trees} trees, {decs} matrices, {} mismatches", bad.len()),
        bad.is_empty(),
    ))
}

pub const EXAMPLE_CONTOUR: [usize; 19] = [0, 1, 2, 1, 2, 1, 0, 1, 2, 3, 2, 3, 2, 3, 2, 1, 0, 1, 0];

fn check_contour() -> Outcome {
    let tree = crate::tree::example_contour_tree();
    let c = tree.contour();
    Ok((
        format!("{EXAMPLE_CONTOUR:?}"),
        format!("{:?}", c.heights()),
        c.heights() == EXAMPLE_CONTOUR && c.is_well_formed(),
    ))
}

/// Grid point in `{0.01, ..., 0.99}^2` maximising the likelihood.
pub fn grid_argmax(n: u64, m: u64) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 1..100 {
        for j in 1..100 {
            let (p, q) = (i as f64 / 100.0, j as f64 / 100.0);
            let l = likelihood(&LikelihoodParams::new(p, q)?, n, m)?;
            if l > best.0 {
                best = (l, p, q);
            }
        }
    }
    Ok((best.1, best.2))
}

fn check_grid_mle() -> Outcome {
    let mut actual = Vec::new();
    let mut ok = true;
    for (n, m) in [(1u64, 0u64), (3, 2), (5, 5), (2, 7)] {
        let e = mle(&FatherStat::new(n, m)?)?;
        let (gp, gq) = grid_argmax(n, m)?;
        ok &= (gp - e.p_hat).abs() <= 0.01 + 1e-12 && (gq - e.q_hat).abs() <= 0.01 + 1e-12;
        actual.push(format!(
            "({n},{m}): grid ({gp}, {gq}) vs ({:.4}, {:.4})",
            e.p_hat, e.q_hat
        ));
    }
    Ok(("within one grid step".into(), actual.join("; "), ok))
}

fn monte_carlo_checks(opts: &VerifyOptions) -> Vec<Check> {
    let reps = opts.replicates;
    let bound = 3.0;
    vec![
        timed("monte carlo extinction, p2 = q2 = 0.8", || {
            let mut cfg = McConfig::new(reps, opts.seed);
            cfg.max_vertices = 1_000;
            cfg.s_values.clear();
            let r = mc_compare(&SurvivalParams::without_survivals(0.8, 0.8)?, &cfg)?;
            let c = r
                .cell(CellKind::Extinction, "extinction")
                .expect("extinction cell");
            let tol = bound * (0.25f64 * 0.75 / reps as f64).sqrt();
            Ok((
                format!("0.25 +- {tol:.4}"),
                format!("{} (z = {:.3})", c.empirical, c.z),
                (c.empirical - 0.25).abs() <= tol,
            ))
        }),
        timed("monte carlo mgf, p2 = q2 = 0.3", || {
            let mut cfg = McConfig::new(reps, opts.seed.wrapping_add(1));
            cfg.s_values = vec![-0.05, -0.2];
            let r = mc_compare(&SurvivalParams::without_survivals(0.3, 0.3)?, &cfg)?;
            let z = r.max_abs_z(CellKind::Mgf, 0.0);
            Ok((format!("max |z| <= {bound}"), format!("{z:.3}"), z <= bound))
        }),
        timed("monte carlo father law, P = Q = 0.625", || {
            let mut cfg = McConfig::new(reps, opts.seed.wrapping_add(2));
            cfg.s_values.clear();
            let p = SurvivalParams::new(0.5, 0.2, 0.3, 0.5, 0.2, 0.3)?;
            let r = mc_compare(&p, &cfg)?;
            let z = r.max_abs_z(CellKind::Father, 0.01);
            let tv = r.father_tv.unwrap_or(f64::NAN);
            Ok((
                format!("max |z| <= {bound}, tv < 0.01"),
                format!("max |z| {z:.3}, tv {tv:.5}"),
                z <= bound && tv < 0.01,
            ))
        }),
    ]
}

fn mismatch_text(total: usize, bad: &[String]) -> String {
    if bad.is_empty() {
        format!("{total} matches")
    } else {
        format!("{} mismatches: {}", bad.len(), bad.join(", "))
    }
}
