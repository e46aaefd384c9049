//! Exact counting: binomials, Narayana numbers, the generating function of
//! two-row decompositions in a `2 x d x c` box, and brute-force enumeration of
//! those decompositions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of decompositions `enumerate_decompositions` materializes.
pub const DEFAULT_ENUMERATION_CAP: u64 = 5_000_000;

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    // acc * (n - k + i) is always divisible by i after the first i-1 steps
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// The Narayana number `N(n, k) = C(n,k) C(n,k-1) / n`, for `n >= 1`, `1 <= k <= n`.
pub fn narayana(n: u64, k: u64) -> Result<BigUint> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::arg(format!(
            "narayana({n}, {k}) requires n >= 1 and 1 <= k <= n"
        )));
    }
    let product = binomial(n, k) * binomial(n, k - 1);
    let (q, r) = product.div_rem(&BigUint::from(n));
    debug_assert!(r.is_zero());
    Ok(q)
}

/// Dense polynomial with non-negative integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<BigUint>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self {
            coeffs: vec![BigUint::one()],
        }
    }

    /// `1 + x + ... + x^degree`.
    pub fn geometric(degree: usize) -> Self {
        Self {
            coeffs: vec![BigUint::one(); degree + 1],
        }
    }

    pub fn from_coeffs(coeffs: Vec<BigUint>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigUint> {
        self.coeffs
    }

    /// Coefficient of `x^power`, zero past the degree.
    pub fn coeff(&self, power: usize) -> BigUint {
        self.coeffs.get(power).cloned().unwrap_or_default()
    }

    /// Value at `x = 1`.
    pub fn sum_coeffs(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![BigUint::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(out)
    }

    /// Long division by a divisor whose leading coefficient is one.
    ///
    /// Coefficients stay non-negative only when the division is exact, so any
    /// intermediate step that would go negative is reported as a remainder.
    pub fn div_exact_monic(&self, divisor: &Polynomial) -> Result<Polynomial> {
        let lead = divisor
            .coeffs
            .last()
            .ok_or_else(|| Error::Internal("division by the zero polynomial".into()))?;
        if !lead.is_one() {
            return Err(Error::Internal("divisor is not monic".into()));
        }
        if self.is_zero() {
            return Ok(Polynomial::zero());
        }
        let dd = divisor.coeffs.len() - 1;
        if self.coeffs.len() - 1 < dd {
            return Err(Error::Internal(
                "nonzero remainder in exact division".into(),
            ));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigUint::zero(); rem.len() - dd];
        for top in (dd..rem.len()).rev() {
            let q = std::mem::take(&mut rem[top]);
            if q.is_zero() {
                continue;
            }
            for (j, c) in divisor.coeffs[..dd].iter().enumerate() {
                let slot = &mut rem[top - dd + j];
                let sub = &q * c;
                if *slot < sub {
                    return Err(Error::Internal(
                        "nonzero remainder in exact division".into(),
                    ));
                }
                *slot -= sub;
            }
            quot[top - dd] = q;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::Internal(
                "nonzero remainder in exact division".into(),
            ));
        }
        Ok(Polynomial::from_coeffs(quot))
    }
}

impl fmt::Display for Polynomial {
    /// One coefficient per line, ascending powers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.coeffs {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Expansion of the generating function counting decompositions of each
/// weight `w` in a `2 x d` matrix with entries bounded by `c`.
///
/// Computed as the product of `(1 + ... + x^(c+i))` for `i` in `1..=d` and
/// `0..d`, divided exactly by the `(1 + ... + x^i)` for the same index ranges.
pub fn gf_coefficients(d: usize, c: usize) -> Result<Polynomial> {
    let mut num = Polynomial::one();
    let mut den = Polynomial::one();
    for i in 1..=d {
        num = num.mul(&Polynomial::geometric(c + i));
        den = den.mul(&Polynomial::geometric(i));
    }
    for i in 0..d {
        num = num.mul(&Polynomial::geometric(c + i));
        den = den.mul(&Polynomial::geometric(i));
    }
    let gf = num.div_exact_monic(&den)?;
    if gf.degree() != Some(2 * d * c) {
        return Err(Error::Internal(format!(
            "generating function has degree {:?}, expected {}",
            gf.degree(),
            2 * d * c
        )));
    }
    Ok(gf)
}

/// A `2 x d` matrix with entries in `0..=c`, weakly decreasing along both rows
/// and down each column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Decomposition {
    d: usize,
    c: u32,
    top: Vec<u32>,
    bottom: Vec<u32>,
}

impl Decomposition {
    /// Validates the box bound and both monotonicity conditions.
    pub fn new(c: u32, top: Vec<u32>, bottom: Vec<u32>) -> Result<Self> {
        if top.len() != bottom.len() {
            return Err(Error::arg(format!(
                "rows have different lengths ({} and {})",
                top.len(),
                bottom.len()
            )));
        }
        for (row, entries) in [("top", &top), ("bottom", &bottom)] {
            if let Some(v) = entries.iter().find(|&&v| v > c) {
                return Err(Error::arg(format!("{row} row entry {v} exceeds bound {c}")));
            }
            if entries.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::arg(format!("{row} row is not weakly decreasing")));
            }
        }
        if let Some(j) = (0..top.len()).find(|&j| top[j] < bottom[j]) {
            return Err(Error::arg(format!(
                "column {} is not weakly decreasing ({} < {})",
                j + 1,
                top[j],
                bottom[j]
            )));
        }
        Ok(Self {
            d: top.len(),
            c,
            top,
            bottom,
        })
    }

    /// The unique decomposition with zero columns.
    pub fn empty(c: u32) -> Self {
        Self {
            d: 0,
            c,
            top: Vec::new(),
            bottom: Vec::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn top(&self) -> &[u32] {
        &self.top
    }

    pub fn bottom(&self) -> &[u32] {
        &self.bottom
    }

    /// Sum of all entries.
    pub fn weight(&self) -> u64 {
        self.top
            .iter()
            .chain(&self.bottom)
            .map(|&v| u64::from(v))
            .sum()
    }

    /// Entry-wise complement `c - a`, reversed so the result is again monotone.
    pub fn complement(&self) -> Self {
        let flip = |row: &[u32]| row.iter().rev().map(|&v| self.c - v).collect::<Vec<_>>();
        Self {
            d: self.d,
            c: self.c,
            top: flip(&self.bottom),
            bottom: flip(&self.top),
        }
    }
}

fn fmt_row(f: &mut fmt::Formatter<'_>, row: &[u32]) -> fmt::Result {
    let mut first = true;
    for v in row {
        if !first {
            f.write_str(" ")?;
        }
        write!(f, "{v}")?;
        first = false;
    }
    writeln!(f)
}

impl fmt::Display for Decomposition {
    /// Header line `d c`, then the top row and the bottom row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.d, self.c)?;
        fmt_row(f, &self.top)?;
        fmt_row(f, &self.bottom)
    }
}

impl FromStr for Decomposition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing `d c` header line".into()))?;
        let nums = parse_u32s(header)?;
        let [d, c] = nums[..] else {
            return Err(Error::Parse(format!(
                "header must hold exactly two integers, got `{header}`"
            )));
        };
        let d = d as usize;
        let mut row = |name: &str| -> Result<Vec<u32>> {
            if d == 0 {
                return Ok(Vec::new());
            }
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {name} row")))?;
            let vals = parse_u32s(line)?;
            if vals.len() != d {
                return Err(Error::Parse(format!(
                    "{name} row has {} entries, expected {d}",
                    vals.len()
                )));
            }
            Ok(vals)
        };
        let top = row("top")?;
        let bottom = row("bottom")?;
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after the bottom row".into()));
        }
        Decomposition::new(c, top, bottom)
    }
}

fn parse_u32s(line: &str) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|e| Error::Parse(format!("`{t}`: {e}")))
        })
        .collect()
}

/// Every decomposition with parameters `(d, c)`, in lexicographic order of the
/// row-major entries. Fails when the count `N(c+d+1, d+1)` exceeds `cap`.
pub fn enumerate_decompositions(d: usize, c: u32, cap: u64) -> Result<Vec<Decomposition>> {
    let count = narayana((c as u64) + (d as u64) + 1, (d as u64) + 1)?;
    if count > BigUint::from(cap) {
        return Err(Error::Resource {
            what: "decomposition count",
            requested: count.to_string(),
            cap,
        });
    }
    if d == 0 {
        return Ok(vec![Decomposition::empty(c)]);
    }
    let mut out = Vec::new();
    let mut entries = vec![0u32; 2 * d];
    fill(d, c, 0, &mut entries, &mut out);
    Ok(out)
}

fn fill(d: usize, c: u32, pos: usize, entries: &mut [u32], out: &mut Vec<Decomposition>) {
    if pos == 2 * d {
        let (top, bottom) = entries.split_at(d);
        out.push(Decomposition {
            d,
            c,
            top: top.to_vec(),
            bottom: bottom.to_vec(),
        });
        return;
    }
    let (row, col) = (pos / d, pos % d);
    let mut bound = if col == 0 { c } else { entries[pos - 1] };
    if row == 1 {
        bound = bound.min(entries[col]);
    }
    for v in 0..=bound {
        entries[pos] = v;
        fill(d, c, pos + 1, entries, out);
    }
}

/// Counts per weight `0..=2dc`. All inputs must share `(d, c)`; an empty
/// input yields an empty histogram.
pub fn weight_histogram(decomps: &[Decomposition]) -> Result<Vec<u64>> {
    let Some(first) = decomps.first() else {
        return Ok(Vec::new());
    };
    let (d, c) = (first.d, first.c);
    let mut hist = vec![0u64; 2 * d * c as usize + 1];
    for dec in decomps {
        if (dec.d, dec.c) != (d, c) {
            return Err(Error::arg(format!(
                "mixed parameters: ({}, {}) and ({d}, {c})",
                dec.d, dec.c
            )));
        }
        hist[dec.weight() as usize] += 1;
    }
    Ok(hist)
}
