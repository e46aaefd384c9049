//! Moment-generating function of the contour period, extinction
//! probabilities, the father/survival distribution and the Narayana
//! likelihood with its closed-form estimators.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::branching::{Criticality, OffspringDistribution, SurvivalParams};
use crate::combinatorics::narayana;
use crate::error::{Error, Result};

pub const DEFAULT_MGF_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MGF_MAX_ITERATIONS: u64 = 1_000_000;
/// A shell of the total-mass sum below this ends the summation.
pub const DEFAULT_SHELL_TOLERANCE: f64 = 1e-12;
/// Below this, probabilities are better reported through their logarithm.
pub const LOG_REPORT_THRESHOLD: f64 = 1e-300;

/// Largest `n` for which Narayana numbers are evaluated exactly before
/// taking logarithms.
const EXACT_NARAYANA_LIMIT: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfQuery {
    pub s: f64,
    pub tolerance: f64,
    pub max_iterations: u64,
}

impl MgfQuery {
    pub fn new(s: f64) -> Self {
        Self {
            s,
            tolerance: DEFAULT_MGF_TOLERANCE,
            max_iterations: DEFAULT_MGF_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfSolution {
    /// `F_i(s)` for each root type.
    pub values: Vec<f64>,
    pub iterations: u64,
    pub last_update: f64,
}

/// One application of `F -> sum_alpha mu_i(alpha) e^{2s|alpha|} prod_k F_k^alpha_k`.
pub fn mgf_map(dist: &OffspringDistribution, s: f64, current: &[f64]) -> Vec<f64> {
    (1..=dist.types())
        .map(|ty| {
            dist.table(ty)
                .iter()
                .map(|(alpha, mu)| {
                    let size: u32 = alpha.iter().sum();
                    let prod: f64 = alpha
                        .iter()
                        .zip(current)
                        .map(|(&a, &f)| f.powi(a as i32))
                        .product();
                    mu * (2.0 * s * f64::from(size)).exp() * prod
                })
                .sum()
        })
        .collect()
}

/// Minimal non-negative solution of the fixed-point system for `s <= 0`,
/// iterated from the zero vector until the sup-norm update is below the
/// tolerance.
pub fn mgf_fixed_point(dist: &OffspringDistribution, query: &MgfQuery) -> Result<MgfSolution> {
    if query.s.is_nan() || query.s > 0.0 {
        return Err(Error::Domain(format!(
            "the fixed point is only certified for s <= 0 (got {})",
            query.s
        )));
    }
    if query.tolerance.is_nan() || query.tolerance <= 0.0 || query.max_iterations == 0 {
        return Err(Error::arg("tolerance and max_iterations must be positive"));
    }
    let mut current = vec![0.0; dist.types() as usize];
    let mut last_update = f64::INFINITY;
    for it in 1..=query.max_iterations {
        let next = mgf_map(dist, query.s, &current);
        // Iterates from 0 increase when s <= 0; a drop means a broken table.
        if next.iter().zip(&current).any(|(a, b)| *a < b - 1e-15) {
            return Err(Error::Internal(format!(
                "mgf iterate decreased at step {it}: {current:?} -> {next:?}"
            )));
        }
        last_update = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = next;
        if last_update < query.tolerance {
            return Ok(MgfSolution {
                values: current,
                iterations: it,
                last_update,
            });
        }
    }
    Err(Error::Convergence {
        iterations: query.max_iterations,
        last_update,
    })
}

/// Probabilities that the trees rooted at type 1 and type 2 are finite.
pub fn extinction_probability(params: &SurvivalParams) -> [f64; 2] {
    if params.classify() == Criticality::AlmostSurelyFinite {
        return [1.0, 1.0];
    }
    let SurvivalParams { p0, p2, q0, q2, .. } = *params;
    [
        p0 * (q0 + q2) / (q2 * (p0 + p2)),
        q0 * (p0 + p2) / (p2 * (q0 + q2)),
    ]
}

/// Realized father and survival counts of one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FatherStat {
    /// Type-1 fathers, `>= 1`.
    pub n: u64,
    /// Type-2 fathers.
    pub m: u64,
    pub s1: Option<u64>,
    pub s2: Option<u64>,
}

impl FatherStat {
    pub fn new(n: u64, m: u64) -> Result<Self> {
        let stat = Self {
            n,
            m,
            s1: None,
            s2: None,
        };
        stat.check()?;
        Ok(stat)
    }

    pub fn with_survivals(n: u64, m: u64, s1: u64, s2: u64) -> Result<Self> {
        let stat = Self {
            n,
            m,
            s1: Some(s1),
            s2: Some(s2),
        };
        stat.check()?;
        Ok(stat)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain(
                "the father count n must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `P`, `Q` in the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodParams {
    pub p: f64,
    pub q: f64,
}

impl LikelihoodParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("P", p), ("Q", q)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(Self { p, q })
    }

    pub fn from_survival(params: &SurvivalParams) -> Self {
        Self {
            p: params.big_p(),
            q: params.big_q(),
        }
    }
}

/// `ln N(n, k)`: exact Narayana number up to a size limit, then log-gamma.
pub fn ln_narayana(n: u64, k: u64) -> Result<f64> {
    if n <= EXACT_NARAYANA_LIMIT {
        let value = narayana(n, k)?;
        return Ok(ln_biguint(&value));
    }
    if k == 0 || k > n {
        return Err(Error::arg(format!(
            "narayana({n}, {k}) requires n >= 1 and 1 <= k <= n"
        )));
    }
    Ok(ln_binomial(n, k) + ln_binomial(n, k - 1) - (n as f64).ln())
}

fn ln_biguint(v: &num_bigint::BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `k ln p`, with `0 ln 0 = 0`.
fn ln_pow(p: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

fn require_finite(params: &SurvivalParams) -> Result<()> {
    params.check()?;
    if params.classify() != Criticality::AlmostSurelyFinite {
        return Err(Error::Model(
            "the father distribution needs p0 q0 - p2 q2 >= 0".into(),
        ));
    }
    Ok(())
}

/// `ln P(D1 = n, D2 = m, S1 = s1, S2 = s2)`; missing survival counts are zero.
pub fn ln_joint_pmf(params: &SurvivalParams, stat: &FatherStat) -> Result<f64> {
    require_finite(params)?;
    stat.check()?;
    let (n, m) = (stat.n, stat.m);
    let (s1, s2) = (stat.s1.unwrap_or(0), stat.s2.unwrap_or(0));
    let ln = ln_narayana(n + m, m + 1)?
        + ln_binomial(m + n + s1, s1)
        + ln_binomial(m + n + s2 - 1, s2)
        + ln_pow(params.p0, m + 1)
        + ln_pow(params.p1, s1)
        + ln_pow(params.p2, n)
        + ln_pow(params.q0, n)
        + ln_pow(params.q1, s2)
        + ln_pow(params.q2, m);
    Ok(ln)
}

pub fn joint_pmf(params: &SurvivalParams, stat: &FatherStat) -> Result<f64> {
    ln_joint_pmf(params, stat).map(f64::exp)
}

/// `ln P(D1 = n, D2 = m)`.
pub fn ln_father_pmf(params: &SurvivalParams, n: u64, m: u64) -> Result<f64> {
    require_finite(params)?;
    FatherStat::new(n, m)?;
    let SurvivalParams { p0, p2, q0, q2, .. } = *params;
    Ok(
        ln_narayana(n + m, m + 1)? + ln_pow(p0, m + 1) + ln_pow(p2, n)
            - (n + m + 1) as f64 * (p0 + p2).ln()
            + ln_pow(q0, n)
            + ln_pow(q2, m)
            - (n + m) as f64 * (q0 + q2).ln(),
    )
}

pub fn father_pmf(params: &SurvivalParams, n: u64, m: u64) -> Result<f64> {
    ln_father_pmf(params, n, m).map(f64::exp)
}

/// Mass of `D1 = 0`: the root line dies before fathering, probability `P`.
pub fn no_father_mass(params: &SurvivalParams) -> Result<f64> {
    require_finite(params)?;
    Ok(params.big_p())
}

/// `ln L(P, Q | n, m) = ln N(n+m, m+1) + (m+1) ln P + n ln(1-P) + n ln Q + m ln(1-Q)`.
pub fn ln_likelihood(lp: &LikelihoodParams, n: u64, m: u64) -> Result<f64> {
    let lp = LikelihoodParams::new(lp.p, lp.q)?;
    FatherStat::new(n, m)?;
    Ok(ln_narayana(n + m, m + 1)?
        + (m + 1) as f64 * lp.p.ln()
        + n as f64 * (1.0 - lp.p).ln()
        + n as f64 * lp.q.ln()
        + m as f64 * (1.0 - lp.q).ln())
}

pub fn likelihood(lp: &LikelihoodParams, n: u64, m: u64) -> Result<f64> {
    ln_likelihood(lp, n, m).map(f64::exp)
}

/// Closed-form maximizers of the likelihood and the implied odds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub p_hat: f64,
    pub q_hat: f64,
    /// Estimate of `p2 / p0`.
    pub ratio_p: f64,
    /// Estimate of `q2 / q0`.
    pub ratio_q: f64,
}

pub fn mle(stat: &FatherStat) -> Result<Estimates> {
    stat.check()?;
    let (n, m) = (stat.n as f64, stat.m as f64);
    Ok(Estimates {
        p_hat: (m + 1.0) / (m + n + 1.0),
        q_hat: n / (m + n),
        ratio_p: n / (m + 1.0),
        ratio_q: m / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalMass {
    /// `P + sum of the likelihood over the summed shells`.
    pub mass: f64,
    /// Largest `n + m` included.
    pub shells: u64,
    pub last_shell: f64,
}

/// Sums `P + sum_{n >= 1, m >= 0} L(P, Q | n, m)` shell by shell in `n + m`,
/// stopping once a shell past the peak contributes less than `tolerance`.
pub fn total_mass(lp: &LikelihoodParams, tolerance: f64, max_shells: u64) -> Result<TotalMass> {
    let lp = LikelihoodParams::new(lp.p, lp.q)?;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |x: f64, sum: &mut f64| {
        // Kahan summation
        let y = x - comp;
        let t = *sum + y;
        comp = (t - *sum) - y;
        *sum = t;
    };
    add(lp.p, &mut sum);
    let mut prev = 0.0;
    for k in 1..=max_shells {
        let shell: f64 = (0..k)
            .map(|m| likelihood(&lp, k - m, m))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        add(shell, &mut sum);
        if shell < tolerance && shell <= prev {
            return Ok(TotalMass {
                mass: sum,
                shells: k,
                last_shell: shell,
            });
        }
        prev = shell;
    }
    Err(Error::Convergence {
        iterations: max_shells,
        last_update: prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_surv(p2: f64, q2: f64) -> SurvivalParams {
        SurvivalParams::without_survivals(p2, q2).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mgf_at_zero_subcritical_is_one() {
        let p = SurvivalParams::new(0.5, 0.2, 0.3, 0.5, 0.2, 0.3).unwrap();
        let sol = mgf_fixed_point(&p.distribution(), &MgfQuery::new(0.0)).unwrap();
        assert!(sol.values.iter().all(|&v| close(v, 1.0, 1e-9)), "{sol:?}");
    }

    #[test]
    fn mgf_at_zero_supercritical_is_extinction() {
        let p = no_surv(0.8, 0.8);
        let sol = mgf_fixed_point(&p.distribution(), &MgfQuery::new(0.0)).unwrap();
        assert!(close(sol.values[0], 0.25, 1e-9));
        assert!(close(sol.values[1], 0.25, 1e-9));
        let ext = extinction_probability(&p);
        // p0 / q2 and q0 / p2
        assert!(close(ext[0], 0.2 / 0.8, 1e-15));
        assert!(close(ext[1], 0.2 / 0.8, 1e-15));
    }

    #[test]
    fn mgf_iterates_are_monotone() {
        let p = SurvivalParams::new(0.5, 0.2, 0.3, 0.4, 0.1, 0.5).unwrap();
        let d = p.distribution();
        for s in [0.0, -0.01, -0.3, -2.0] {
            let mut f = vec![0.0, 0.0];
            for _ in 0..500 {
                let next = mgf_map(&d, s, &f);
                assert!(next.iter().zip(&f).all(|(a, b)| a >= b));
                assert!(next.iter().all(|&v| (0.0..=1.0).contains(&v)));
                f = next;
            }
        }
    }

    #[test]
    fn mgf_rejects_positive_s_and_reports_nonconvergence() {
        let d = no_surv(0.3, 0.3).distribution();
        assert!(matches!(
            mgf_fixed_point(&d, &MgfQuery::new(0.1)),
            Err(Error::Domain(_))
        ));
        let q = MgfQuery {
            s: 0.0,
            tolerance: 1e-15,
            max_iterations: 3,
        };
        assert!(matches!(
            mgf_fixed_point(&d, &q),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn mgf_near_zero_matches_extinction() {
        for p in [no_surv(0.3, 0.3), no_surv(0.8, 0.8), no_surv(0.7, 0.6)] {
            let sol = mgf_fixed_point(&p.distribution(), &MgfQuery::new(-1e-6)).unwrap();
            let ext = extinction_probability(&p);
            assert!(close(sol.values[0], ext[0], 1e-3), "{p:?}");
            assert!(close(sol.values[1], ext[1], 1e-3), "{p:?}");
        }
    }

    /// The closed form solves the fixed-point equations of the survival model.
    #[test]
    fn extinction_closed_form_is_a_fixed_point() {
        let p = SurvivalParams::new(0.1, 0.2, 0.7, 0.2, 0.1, 0.7).unwrap();
        assert_eq!(p.classify(), Criticality::PossiblyInfinite);
        let [x, y] = extinction_probability(&p);
        assert!(x < 1.0 && y < 1.0 && x > 0.0 && y > 0.0);
        assert!(close(x, p.p0 + p.p1 * x + p.p2 * x * y, 1e-12));
        assert!(close(y, p.q0 + p.q1 * y + p.q2 * x * y, 1e-12));
        let sol = mgf_fixed_point(&p.distribution(), &MgfQuery::new(0.0)).unwrap();
        assert!(close(sol.values[0], x, 1e-9) && close(sol.values[1], y, 1e-9));
        assert_eq!(extinction_probability(&no_surv(0.3, 0.3)), [1.0, 1.0]);
    }

    #[test]
    fn cherry_probability() {
        let p = SurvivalParams::new(0.5, 0.2, 0.3, 0.4, 0.1, 0.5).unwrap();
        let stat = FatherStat::with_survivals(1, 0, 0, 0).unwrap();
        let direct = p.p2 * p.p0 * p.q0;
        assert!(close(joint_pmf(&p, &stat).unwrap(), direct, 1e-15));
    }

    #[test]
    fn no_survival_model_has_no_survival_mass() {
        let p = no_surv(0.3, 0.4);
        let stat = FatherStat::with_survivals(2, 1, 1, 0).unwrap();
        assert_eq!(joint_pmf(&p, &stat).unwrap(), 0.0);
        let stat = FatherStat::with_survivals(2, 1, 0, 3).unwrap();
        assert_eq!(joint_pmf(&p, &stat).unwrap(), 0.0);
    }

    #[test]
    fn joint_sums_to_father_pmf() {
        let p = SurvivalParams::new(0.5, 0.2, 0.3, 0.4, 0.25, 0.35).unwrap();
        for (n, m) in [(1, 0), (2, 1), (3, 3), (1, 4)] {
            let mut sum = 0.0;
            for s1 in 0..200 {
                for s2 in 0..200 {
                    let stat = FatherStat::with_survivals(n, m, s1, s2).unwrap();
                    sum += joint_pmf(&p, &stat).unwrap();
                }
            }
            let f = father_pmf(&p, n, m).unwrap();
            assert!(close(sum, f, 1e-10), "n={n} m={m}: {sum} vs {f}");
        }
    }

    #[test]
    fn father_pmf_example() {
        let p = SurvivalParams::new(0.5, 0.2, 0.3, 0.5, 0.2, 0.3).unwrap();
        let f = father_pmf(&p, 1, 0).unwrap();
        // Root line fathers once, then both child lines die without fathering.
        let big = 0.625f64;
        assert!(close(f, big * (1.0 - big) * big, 1e-15), "{f}");
        assert!(close(f, 0.146484375, 1e-15));
    }

    #[test]
    fn pmf_errors() {
        let sup = no_surv(0.8, 0.8);
        assert!(matches!(father_pmf(&sup, 1, 0), Err(Error::Model(_))));
        let sub = no_surv(0.3, 0.3);
        assert!(matches!(father_pmf(&sub, 0, 0), Err(Error::Domain(_))));
        assert!(matches!(FatherStat::new(0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn likelihood_values() {
        let lp = LikelihoodParams::new(0.5, 0.5).unwrap();
        assert!(close(likelihood(&lp, 1, 0).unwrap(), 0.125, 1e-15));
        assert!(matches!(
            LikelihoodParams::new(0.0, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            LikelihoodParams::new(0.5, 1.0),
            Err(Error::Domain(_))
        ));
        let raw = LikelihoodParams { p: 1.5, q: 0.5 };
        assert!(matches!(likelihood(&raw, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn likelihood_equals_father_pmf() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 50 {
            let p0: f64 = rng.random_range(0.05..0.9);
            let p1: f64 = rng.random_range(0.0..(1.0 - p0 - 0.01));
            let q0: f64 = rng.random_range(0.05..0.9);
            let q1: f64 = rng.random_range(0.0..(1.0 - q0 - 0.01));
            let Ok(params) = SurvivalParams::new(p0, p1, 1.0 - p0 - p1, q0, q1, 1.0 - q0 - q1)
            else {
                continue;
            };
            if params.classify() != Criticality::AlmostSurelyFinite {
                continue;
            }
            let n = rng.random_range(1..30u64);
            let m = rng.random_range(0..30u64);
            let lp = LikelihoodParams::from_survival(&params);
            let a = father_pmf(&params, n, m).unwrap();
            let b = likelihood(&lp, n, m).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
            checked += 1;
        }
    }

    #[test]
    fn total_mass_is_one() {
        let lp = LikelihoodParams::new(0.625, 0.625).unwrap();
        let t = total_mass(&lp, DEFAULT_SHELL_TOLERANCE, 100_000).unwrap();
        assert!(close(t.mass, 1.0, 1e-6), "{t:?}");
    }

    #[test]
    fn estimators() {
        let e = mle(&FatherStat::new(3, 2).unwrap()).unwrap();
        assert_eq!((e.p_hat, e.q_hat, e.ratio_p), (0.5, 0.6, 1.0));
        assert!(close(e.ratio_q, 2.0 / 3.0, 1e-15));
        let e = mle(&FatherStat::new(1, 0).unwrap()).unwrap();
        assert_eq!(
            (e.p_hat, e.q_hat, e.ratio_p, e.ratio_q),
            (0.5, 1.0, 1.0, 0.0)
        );
        assert!(mle(&FatherStat {
            n: 0,
            m: 1,
            s1: None,
            s2: None
        })
        .is_err());
    }

    #[test]
    fn estimator_is_stationary_point() {
        for (n, m) in [(3u64, 2u64), (5, 5), (2, 7), (10, 1)] {
            let e = mle(&FatherStat::new(n, m).unwrap()).unwrap();
            let q = if m == 0 { 0.5 } else { e.q_hat };
            let h = 1e-6;
            let at = |p: f64| likelihood(&LikelihoodParams::new(p, q).unwrap(), n, m).unwrap();
            let slope = |p: f64| (at(p + h) - at(p - h)) / (2.0 * h);
            assert!(
                slope(e.p_hat).abs() < 1e-8,
                "n={n} m={m}: {}",
                slope(e.p_hat)
            );
            assert!(slope(e.p_hat - 0.05) > 0.0);
            assert!(slope(e.p_hat + 0.05) < 0.0);
        }
    }

    #[test]
    fn ln_narayana_paths_agree() {
        let exact = ln_biguint(&narayana(900, 400).unwrap());
        let approx = ln_binomial(900, 400) + ln_binomial(900, 399) - 900f64.ln();
        assert!((exact - approx).abs() < 1e-9 * exact);
        assert!(ln_narayana(5000, 2500).unwrap().is_finite());
    }
}
