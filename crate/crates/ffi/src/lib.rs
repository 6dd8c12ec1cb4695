//! C ABI over `jsgap`.
//!
//! Distributions and problems are opaque heap handles created by
//! `jsgap_*_new`/`_parse` functions and released with the matching `_free`.
//! Every function returns a [`JsgapStatus`]; on failure a message is
//! available from [`jsgap_last_error_message`] on the same thread.
//! Rational inputs are NUL-terminated strings such as `"2/3"` or `"0.48"`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jsgap::bound::{phi_baseline_bound, theorem2_excess_bound_with, transfer_gap_bound, BoundConfig, BoundReport, CgfEnvelope};
use jsgap::dist::{parse_rational, FiniteDistribution, Rational};
use jsgap::ewrm::{exact_excess_risk, exact_gap, per_sample_mi, sample_information, Domain, ExampleProblem};
use jsgap::info::{js_alpha, kl_divergence, total_variation};
use jsgap::Error;

pub const JSGAP_DOMAIN_SOURCE: u32 = 0;
pub const JSGAP_DOMAIN_TARGET: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsgapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidDistribution = 4,
    InvalidProblem = 5,
    NotApplicable = 6,
    NumericFailure = 7,
    Panic = 8,
}

/// Opaque finite distribution with rational atoms and probabilities.
pub struct JsgapDistribution(FiniteDistribution);

/// Opaque transfer problem.
pub struct JsgapProblem(ExampleProblem);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JsgapGap {
    pub exact_gap: f64,
    pub mean_w: f64,
    pub second_moment_w: f64,
    pub limit_gap: f64,
}

/// `total = gamma * source_term + (1 - gamma) * target_term + shift_term`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JsgapBound {
    pub total: f64,
    pub source_term: f64,
    pub target_term: f64,
    pub shift_term: f64,
    pub js_value: f64,
    pub kl_to_mixture: f64,
    pub mi_source: f64,
    pub mi_target: f64,
}

impl From<BoundReport> for JsgapBound {
    fn from(r: BoundReport) -> Self {
        Self {
            total: r.total,
            source_term: r.source_term,
            target_term: r.target_term,
            shift_term: r.shift_term,
            js_value: r.js_value,
            kl_to_mixture: r.kl_to_mixture,
            mi_source: r.mi_source,
            mi_target: r.mi_target,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(JsgapStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidDistribution(_) | Error::ParseDistribution(_) | Error::NotInSupport(..) => {
                JsgapStatus::InvalidDistribution
            }
            Error::ParseRational(_) | Error::OutOfRange { .. } => JsgapStatus::InvalidArgument,
            Error::InvalidProblem(_) | Error::EmptyDomain(_) => JsgapStatus::InvalidProblem,
            Error::NotApplicable(_) | Error::OversizeEnumeration(..) => JsgapStatus::NotApplicable,
            Error::NonConvergence(_) => JsgapStatus::NumericFailure,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> JsgapStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            JsgapStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            JsgapStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(JsgapStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out_slot<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(JsgapStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(JsgapStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(JsgapStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn rational(p: *const c_char, name: &str) -> Result<Rational, Failure> {
    Ok(parse_rational(text(p, name)?)?)
}

fn domain(code: u32) -> Result<Domain, Failure> {
    match code {
        JSGAP_DOMAIN_SOURCE => Ok(Domain::Source),
        JSGAP_DOMAIN_TARGET => Ok(Domain::Target),
        other => Err(Failure(JsgapStatus::InvalidArgument, format!("unknown domain code {other}"))),
    }
}

fn sub_gaussian_config(alpha1: Rational, alpha2: Rational, sigma2: f64) -> Result<BoundConfig, Failure> {
    Ok(BoundConfig::new(alpha1, alpha2, CgfEnvelope::sub_gaussian(sigma2)?)?)
}

/// Message for the most recent failure on this thread, or NULL after a
/// success. The pointer stays valid until the next `jsgap_*` call on the
/// same thread.
#[no_mangle]
pub extern "C" fn jsgap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static version string.
#[no_mangle]
pub extern "C" fn jsgap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `atoms=[..]; probs=[..]`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_distribution_parse(
    spec: *const c_char,
    out: *mut *mut JsgapDistribution,
) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let d = FiniteDistribution::parse(text(spec, "spec")?)?;
        *slot = Box::into_raw(Box::new(JsgapDistribution(d)));
        Ok(())
    })
}

/// Two-atom law with mass `p_first` on `first`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_distribution_two_point(
    first: *const c_char,
    second: *const c_char,
    p_first: *const c_char,
    out: *mut *mut JsgapDistribution,
) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let d = FiniteDistribution::two_point(
            rational(first, "first")?,
            rational(second, "second")?,
            rational(p_first, "p_first")?,
        )?;
        *slot = Box::into_raw(Box::new(JsgapDistribution(d)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsgap_distribution_free(dist: *mut JsgapDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

#[no_mangle]
pub unsafe extern "C" fn jsgap_distribution_len(dist: *const JsgapDistribution, out: *mut usize) -> JsgapStatus {
    guard(|| {
        *out_slot(out, "out")? = deref(dist, "dist")?.0.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsgap_problem_new(
    source: *const JsgapDistribution,
    target: *const JsgapDistribution,
    m: u32,
    beta: *const c_char,
    gamma: *const c_char,
    out: *mut *mut JsgapProblem,
) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let prob = ExampleProblem::new(
            deref(source, "source")?.0.clone(),
            deref(target, "target")?.0.clone(),
            m,
            rational(beta, "beta")?,
            rational(gamma, "gamma")?,
        )?;
        *slot = Box::into_raw(Box::new(JsgapProblem(prob)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsgap_problem_free(prob: *mut JsgapProblem) {
    if !prob.is_null() {
        drop(Box::from_raw(prob));
    }
}

/// `KL(p || q)` in nats; `+inf` when `p` is not absolutely continuous w.r.t. `q`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_kl_divergence(
    p: *const JsgapDistribution,
    q: *const JsgapDistribution,
    out: *mut f64,
) -> JsgapStatus {
    guard(|| {
        *out_slot(out, "out")? = kl_divergence(&deref(p, "p")?.0, &deref(q, "q")?.0);
        Ok(())
    })
}

/// `sum |p - q|`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_total_variation(
    p: *const JsgapDistribution,
    q: *const JsgapDistribution,
    out: *mut f64,
) -> JsgapStatus {
    guard(|| {
        *out_slot(out, "out")? = total_variation(&deref(p, "p")?.0, &deref(q, "q")?.0);
        Ok(())
    })
}

/// `(alpha1, alpha2)`-JS divergence between target `p_prime` and source `p`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_js_alpha(
    p_prime: *const JsgapDistribution,
    p: *const JsgapDistribution,
    alpha1: *const c_char,
    alpha2: *const c_char,
    out: *mut f64,
) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        *slot = js_alpha(
            &deref(p_prime, "p_prime")?.0,
            &deref(p, "p")?.0,
            &rational(alpha1, "alpha1")?,
            &rational(alpha2, "alpha2")?,
        )?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsgap_exact_gap(prob: *const JsgapProblem, out: *mut JsgapGap) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let g = exact_gap(&deref(prob, "prob")?.0);
        *slot = JsgapGap {
            exact_gap: g.exact_gap,
            mean_w: g.mean_w,
            second_moment_w: g.second_moment_w,
            limit_gap: g.limit_gap,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn jsgap_exact_excess_risk(prob: *const JsgapProblem, out: *mut f64) -> JsgapStatus {
    guard(|| {
        *out_slot(out, "out")? = exact_excess_risk(&deref(prob, "prob")?.0);
        Ok(())
    })
}

/// `I(W; Z_i)` for one sample of the given domain (`JSGAP_DOMAIN_*`).
#[no_mangle]
pub unsafe extern "C" fn jsgap_per_sample_mi(prob: *const JsgapProblem, domain_code: u32, out: *mut f64) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        *slot = per_sample_mi(&deref(prob, "prob")?.0, domain(domain_code)?)?;
        Ok(())
    })
}

/// Sub-Gaussian gap bound with exact per-sample informations; dispatches
/// to the source-only form when `beta = 1`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_gap_bound(
    prob: *const JsgapProblem,
    alpha1: *const c_char,
    alpha2: *const c_char,
    sigma2: f64,
    out: *mut JsgapBound,
) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let prob = &deref(prob, "prob")?.0;
        let cfg = sub_gaussian_config(rational(alpha1, "alpha1")?, rational(alpha2, "alpha2")?, sigma2)?;
        let mi = sample_information(prob)?;
        *slot = transfer_gap_bound(prob, &cfg, &mi)?.into();
        Ok(())
    })
}

/// Sub-Gaussian excess-risk bound with exact per-sample informations.
#[no_mangle]
pub unsafe extern "C" fn jsgap_excess_bound(
    prob: *const JsgapProblem,
    alpha1: *const c_char,
    alpha2: *const c_char,
    sigma2: f64,
    out: *mut JsgapBound,
) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let prob = &deref(prob, "prob")?.0;
        let cfg = sub_gaussian_config(rational(alpha1, "alpha1")?, rational(alpha2, "alpha2")?, sigma2)?;
        let mi = sample_information(prob)?;
        *slot = theorem2_excess_bound_with(prob, &cfg, &mi)?.into();
        Ok(())
    })
}

/// f-divergence baseline for `beta = 1` and a loss bounded by `sup_loss`.
#[no_mangle]
pub unsafe extern "C" fn jsgap_phi_baseline(prob: *const JsgapProblem, sup_loss: f64, out: *mut f64) -> JsgapStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let prob = &deref(prob, "prob")?.0;
        let mi = per_sample_mi(prob, Domain::Source)?;
        *slot = phi_baseline_bound(prob, sup_loss, mi)?;
        Ok(())
    })
}
