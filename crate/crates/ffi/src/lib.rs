//! C ABI over `fbt-core`.
//!
//! Every function returns an [`FbtStatus`]; on failure the message is kept
//! per thread and read with [`fbt_last_error`]. Handles are opaque and owned
//! by the caller, who releases them with the matching `_free` function.
//! Text results are written into caller buffers: the required size
//! (including the terminating NUL) is always stored in `*written`, and
//! `FBT_STATUS_BUFFER_TOO_SMALL` is returned when `capacity` is short.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fbt_core::bijection::{decomposition_to_tree, tree_to_decomposition};
use fbt_core::branching::{
    count_fathers_survivals, sample_tree, SampleOutcome, SampleStatus, SurvivalParams,
};
use fbt_core::combinatorics::{gf_coefficients, narayana, Decomposition};
use fbt_core::inference::{
    extinction_probability, father_pmf, joint_pmf, likelihood, ln_likelihood, mgf_fixed_point, mle,
    no_father_mass, total_mass, FatherStat, LikelihoodParams, MgfQuery,
};
use fbt_core::parens::{decode_parens, encode_parens, ParenString};
use fbt_core::tree::MultitypeTree;
use fbt_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Encoding = 4,
    Domain = 5,
    Model = 6,
    Resource = 7,
    Convergence = 8,
    BufferTooSmall = 9,
    Internal = 10,
    Panic = 11,
}

impl From<&Error> for FbtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Argument(_) => FbtStatus::InvalidArgument,
            Error::Parse(_) => FbtStatus::Parse,
            Error::Encoding(_) => FbtStatus::Encoding,
            Error::Domain(_) => FbtStatus::Domain,
            Error::Model(_) => FbtStatus::Model,
            Error::Resource { .. } => FbtStatus::Resource,
            Error::Convergence { .. } => FbtStatus::Convergence,
            Error::Internal(_) => FbtStatus::Internal,
        }
    }
}

/// Offspring parameters of the two-type model with survivals.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbtSurvivalParams {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FbtFatherCounts {
    pub d1: u64,
    pub d2: u64,
    pub s1: u64,
    pub s2: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FbtEstimates {
    pub p_hat: f64,
    pub q_hat: f64,
    pub ratio_p: f64,
    pub ratio_q: f64,
}

/// Opaque tree handle.
pub struct FbtTree {
    inner: MultitypeTree,
}

/// Opaque decomposition handle.
pub struct FbtDecomposition {
    inner: Decomposition,
}

/// Opaque sampled-tree handle.
pub struct FbtSample {
    inner: SampleOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Failure carried out of a wrapped body.
struct Fail(FbtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(FbtStatus::from(&e), e.to_string())
    }
}

type Body<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> Body<()>) -> FbtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FbtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside fbt".into());
            FbtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(FbtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Body<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Body<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Body<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(FbtStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn write_text(
    text: &str,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> Body<()> {
    let need = text.len() + 1;
    *out(written, "written")? = need;
    if capacity < need {
        return Err(Fail(
            FbtStatus::BufferTooSmall,
            format!("buffer holds {capacity} bytes, {need} needed"),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

fn params(p: &FbtSurvivalParams) -> Body<SurvivalParams> {
    Ok(SurvivalParams::new(p.p0, p.p1, p.p2, p.q0, p.q1, p.q2)?)
}

fn boxed<T>(value: T, dst: *mut *mut T) -> Body<()> {
    // SAFETY: checked non-null by the caller-facing wrappers below.
    unsafe { *out(dst, "out")? = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn fbt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Narayana number `N(n, k)` in decimal.
///
/// # Safety
/// `buf` must hold `capacity` bytes; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbt_narayana(
    n: u64,
    k: u64,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> FbtStatus {
    guard(|| write_text(&narayana(n, k)?.to_string(), buf, capacity, written))
}

/// Generating-function coefficients in decimal, one per line, ascending.
///
/// # Safety
/// As [`fbt_narayana`].
#[no_mangle]
pub unsafe extern "C" fn fbt_gf_coefficients(
    d: usize,
    c: usize,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> FbtStatus {
    guard(|| write_text(&gf_coefficients(d, c)?.to_string(), buf, capacity, written))
}

/// Parses a parenthesis encoding into a full binary tree.
///
/// # Safety
/// `parens` must be NUL-terminated; `tree` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_from_parens(
    parens: *const c_char,
    tree: *mut *mut FbtTree,
) -> FbtStatus {
    guard(|| {
        let ps: ParenString = c_str(parens, "parens")?.parse()?;
        out(tree, "tree")?;
        boxed(
            FbtTree {
                inner: decode_parens(&ps),
            },
            tree,
        )
    })
}

/// Parses the tab-separated records format.
///
/// # Safety
/// As [`fbt_tree_from_parens`].
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_from_records(
    records: *const c_char,
    tree: *mut *mut FbtTree,
) -> FbtStatus {
    guard(|| {
        let t = MultitypeTree::from_records(c_str(records, "records")?)?;
        out(tree, "tree")?;
        boxed(FbtTree { inner: t }, tree)
    })
}

/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_free(tree: *mut FbtTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle; `buf`/`written` as in [`fbt_narayana`].
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_to_parens(
    tree: *const FbtTree,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> FbtStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        write_text(encode_parens(&t.inner)?.as_str(), buf, capacity, written)
    })
}

/// # Safety
/// As [`fbt_tree_to_parens`].
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_to_records(
    tree: *const FbtTree,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> FbtStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        write_text(&t.inner.to_records(), buf, capacity, written)
    })
}

/// # Safety
/// `tree` must be a live handle, `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_vertex_count(
    tree: *const FbtTree,
    count: *mut usize,
) -> FbtStatus {
    guard(|| {
        *out(count, "count")? = deref(tree, "tree")?.inner.len();
        Ok(())
    })
}

/// Contour heights, `2 * edges + 1` values. `*written` receives the length.
///
/// # Safety
/// `heights` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_contour(
    tree: *const FbtTree,
    heights: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> FbtStatus {
    guard(|| {
        let c = deref(tree, "tree")?.inner.contour();
        let h = c.heights();
        *out(written, "written")? = h.len();
        if capacity < h.len() {
            return Err(Fail(
                FbtStatus::BufferTooSmall,
                format!("contour has {} values, buffer {capacity}", h.len()),
            ));
        }
        if heights.is_null() {
            return Err(null("heights"));
        }
        ptr::copy_nonoverlapping(h.as_ptr(), heights, h.len());
        Ok(())
    })
}

/// Decomposition from rows of length `d`; `d = 0` accepts null rows.
///
/// # Safety
/// `top` and `bottom` must hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn fbt_decomposition_new(
    c: u32,
    d: usize,
    top: *const u32,
    bottom: *const u32,
    dec: *mut *mut FbtDecomposition,
) -> FbtStatus {
    guard(|| {
        let row = |p: *const u32, what| -> Body<Vec<u32>> {
            if d == 0 {
                return Ok(Vec::new());
            }
            if p.is_null() {
                return Err(null(what));
            }
            Ok(std::slice::from_raw_parts(p, d).to_vec())
        };
        let inner = Decomposition::new(c, row(top, "top")?, row(bottom, "bottom")?)?;
        out(dec, "dec")?;
        boxed(FbtDecomposition { inner }, dec)
    })
}

/// # Safety
/// `dec` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbt_decomposition_free(dec: *mut FbtDecomposition) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Dimensions and weight of a decomposition.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbt_decomposition_info(
    dec: *const FbtDecomposition,
    d: *mut usize,
    c: *mut u32,
    weight: *mut u64,
) -> FbtStatus {
    guard(|| {
        let inner = &deref(dec, "dec")?.inner;
        *out(d, "d")? = inner.d();
        *out(c, "c")? = inner.c();
        *out(weight, "weight")? = inner.weight();
        Ok(())
    })
}

/// Copies both rows; each buffer must hold `d` values.
///
/// # Safety
/// `top` and `bottom` must hold `capacity` values each.
#[no_mangle]
pub unsafe extern "C" fn fbt_decomposition_rows(
    dec: *const FbtDecomposition,
    top: *mut u32,
    bottom: *mut u32,
    capacity: usize,
) -> FbtStatus {
    guard(|| {
        let inner = &deref(dec, "dec")?.inner;
        let d = inner.d();
        if capacity < d {
            return Err(Fail(
                FbtStatus::BufferTooSmall,
                format!("rows have {d} entries, buffer {capacity}"),
            ));
        }
        if d > 0 {
            if top.is_null() || bottom.is_null() {
                return Err(null("row buffer"));
            }
            ptr::copy_nonoverlapping(inner.top().as_ptr(), top, d);
            ptr::copy_nonoverlapping(inner.bottom().as_ptr(), bottom, d);
        }
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle; `dec` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_tree_to_decomposition(
    tree: *const FbtTree,
    dec: *mut *mut FbtDecomposition,
) -> FbtStatus {
    guard(|| {
        let inner = tree_to_decomposition(&deref(tree, "tree")?.inner)?;
        out(dec, "dec")?;
        boxed(FbtDecomposition { inner }, dec)
    })
}

/// # Safety
/// `dec` must be a live handle; `tree` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_decomposition_to_tree(
    dec: *const FbtDecomposition,
    tree: *mut *mut FbtTree,
) -> FbtStatus {
    guard(|| {
        let inner = decomposition_to_tree(&deref(dec, "dec")?.inner)?;
        out(tree, "tree")?;
        boxed(FbtTree { inner }, tree)
    })
}

/// Samples one tree; replicate `j` of a batch seeded with `master` uses
/// [`fbt_replicate_seed`]`(master, j)`.
///
/// # Safety
/// `params` must be valid; `sample` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_sample(
    params: *const FbtSurvivalParams,
    root_type: u32,
    seed: u64,
    max_vertices: usize,
    sample: *mut *mut FbtSample,
) -> FbtStatus {
    guard(|| {
        let p = self::params(deref(params, "params")?)?;
        let inner = sample_tree(&p.distribution(), root_type, seed, max_vertices)?;
        out(sample, "sample")?;
        boxed(FbtSample { inner }, sample)
    })
}

#[no_mangle]
pub extern "C" fn fbt_replicate_seed(master: u64, index: u64) -> u64 {
    fbt_core::branching::replicate_seed(master, index)
}

/// # Safety
/// `sample` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbt_sample_free(sample: *mut FbtSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// `*truncated` is 1 when the vertex budget ran out.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbt_sample_info(
    sample: *const FbtSample,
    truncated: *mut i32,
    vertex_count: *mut usize,
    edge_count: *mut usize,
) -> FbtStatus {
    guard(|| {
        let s = &deref(sample, "sample")?.inner;
        *out(truncated, "truncated")? = i32::from(s.status == SampleStatus::Truncated);
        *out(vertex_count, "vertex_count")? = s.vertex_count;
        *out(edge_count, "edge_count")? = s.edge_count;
        Ok(())
    })
}

/// Father and survival counts of a complete sample.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbt_sample_counts(
    sample: *const FbtSample,
    counts: *mut FbtFatherCounts,
) -> FbtStatus {
    guard(|| {
        let s = &deref(sample, "sample")?.inner;
        if s.status == SampleStatus::Truncated {
            return Err(Fail(
                FbtStatus::InvalidArgument,
                "counts of a truncated sample are not defined".into(),
            ));
        }
        let c = count_fathers_survivals(&s.tree)?;
        *out(counts, "counts")? = FbtFatherCounts {
            d1: c.d1,
            d2: c.d2,
            s1: c.s1,
            s2: c.s2,
        };
        Ok(())
    })
}

/// Copy of the sampled tree as an independent handle.
///
/// # Safety
/// `sample` must be live; `tree` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_sample_tree(
    sample: *const FbtSample,
    tree: *mut *mut FbtTree,
) -> FbtStatus {
    guard(|| {
        let inner = deref(sample, "sample")?.inner.tree.clone();
        out(tree, "tree")?;
        boxed(FbtTree { inner }, tree)
    })
}

/// Extinction probabilities for root types 1 and 2.
///
/// # Safety
/// `params` valid; `result` must hold 2 values.
#[no_mangle]
pub unsafe extern "C" fn fbt_extinction(
    params: *const FbtSurvivalParams,
    result: *mut f64,
) -> FbtStatus {
    guard(|| {
        let e = extinction_probability(&self::params(deref(params, "params")?)?);
        out(result, "result")?;
        ptr::copy_nonoverlapping(e.as_ptr(), result, 2);
        Ok(())
    })
}

/// `E[exp(2 s ||tau||)]` for both root types, `s <= 0`.
///
/// # Safety
/// `params` valid; `result` must hold 2 values; `iterations` may be null.
#[no_mangle]
pub unsafe extern "C" fn fbt_mgf(
    params: *const FbtSurvivalParams,
    s: f64,
    tolerance: f64,
    max_iterations: u64,
    result: *mut f64,
    iterations: *mut u64,
) -> FbtStatus {
    guard(|| {
        let p = self::params(deref(params, "params")?)?;
        let q = MgfQuery {
            s,
            tolerance,
            max_iterations,
        };
        let sol = mgf_fixed_point(&p.distribution(), &q)?;
        out(result, "result")?;
        ptr::copy_nonoverlapping(sol.values.as_ptr(), result, 2);
        if let Some(it) = iterations.as_mut() {
            *it = sol.iterations;
        }
        Ok(())
    })
}

/// `P(D1 = n, D2 = m)`; `n = 0, m = 0` gives the no-father mass.
///
/// # Safety
/// `params` valid, `result` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_father_pmf(
    params: *const FbtSurvivalParams,
    n: u64,
    m: u64,
    result: *mut f64,
) -> FbtStatus {
    guard(|| {
        let p = self::params(deref(params, "params")?)?;
        let v = if (n, m) == (0, 0) {
            no_father_mass(&p)?
        } else {
            father_pmf(&p, n, m)?
        };
        *out(result, "result")? = v;
        Ok(())
    })
}

/// `P(D1 = n, D2 = m, S1 = s1, S2 = s2)` for `n >= 1`.
///
/// # Safety
/// As [`fbt_father_pmf`].
#[no_mangle]
pub unsafe extern "C" fn fbt_joint_pmf(
    params: *const FbtSurvivalParams,
    n: u64,
    m: u64,
    s1: u64,
    s2: u64,
    result: *mut f64,
) -> FbtStatus {
    guard(|| {
        let p = self::params(deref(params, "params")?)?;
        *out(result, "result")? = joint_pmf(&p, &FatherStat::with_survivals(n, m, s1, s2)?)?;
        Ok(())
    })
}

/// Likelihood of `(P, Q)`; `log_scale != 0` returns its natural logarithm.
///
/// # Safety
/// `result` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_likelihood(
    big_p: f64,
    big_q: f64,
    n: u64,
    m: u64,
    log_scale: i32,
    result: *mut f64,
) -> FbtStatus {
    guard(|| {
        let lp = LikelihoodParams::new(big_p, big_q)?;
        let v = if log_scale != 0 {
            ln_likelihood(&lp, n, m)?
        } else {
            likelihood(&lp, n, m)?
        };
        *out(result, "result")? = v;
        Ok(())
    })
}

/// # Safety
/// `result` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_mle(n: u64, m: u64, result: *mut FbtEstimates) -> FbtStatus {
    guard(|| {
        let e = mle(&FatherStat::new(n, m)?)?;
        *out(result, "result")? = FbtEstimates {
            p_hat: e.p_hat,
            q_hat: e.q_hat,
            ratio_p: e.ratio_p,
            ratio_q: e.ratio_q,
        };
        Ok(())
    })
}

/// `P + sum L(P, Q | n, m)` summed by shells `n + m` until one is below
/// `tolerance`.
///
/// # Safety
/// `result` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fbt_total_mass(
    big_p: f64,
    big_q: f64,
    tolerance: f64,
    max_shells: u64,
    result: *mut f64,
) -> FbtStatus {
    guard(|| {
        let t = total_mass(&LikelihoodParams::new(big_p, big_q)?, tolerance, max_shells)?;
        *out(result, "result")? = t.mass;
        Ok(())
    })
}
