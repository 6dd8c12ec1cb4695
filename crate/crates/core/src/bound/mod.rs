//! Bounds on the average transfer generalization gap and the EWRM excess risk.
//!
//! Per-sample mutual informations enter each bound as one value per domain:
//! samples within a domain are i.i.d. and the learner treats them
//! symmetrically, so every per-index term of a domain is identical and the
//! averages over indices equal that single term exactly.

mod cgf;
pub mod search;

use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::Serialize;

pub use cgf::CgfEnvelope;

use crate::dist::{rat, to_f64, Rational};
use crate::error::{Error, Result};
use crate::ewrm::{sample_information, Domain, ExampleProblem, SampleInformation};
use crate::info::{total_variation, weighted, JsParts};
use crate::serde_ext::ext_real;

/// sigma^2 for a loss bounded in `[0, 4]`: `(b - a)^2 / 4`.
pub const DEFAULT_VARIANCE: f64 = 4.0;

/// Sup-norm of the quadratic loss on `[0, 2] x {0, 1, 2}`.
pub const DEFAULT_SUP_LOSS: f64 = 4.0;

/// Relative disagreement above which the printed sub-gamma form is flagged.
pub const SUBGAMMA_DISAGREEMENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BoundConfig {
    alpha1: Rational,
    alpha2: Rational,
    envelope: CgfEnvelope,
}

impl BoundConfig {
    pub fn new(alpha1: Rational, alpha2: Rational, envelope: CgfEnvelope) -> Result<Self> {
        if alpha1.is_negative() || alpha1 > Rational::one() {
            return Err(Error::OutOfRange { name: "alpha1", reason: format!("{alpha1} not in [0,1]") });
        }
        if !alpha2.is_positive() || alpha2 >= Rational::one() {
            return Err(Error::OutOfRange { name: "alpha2", reason: format!("{alpha2} not in (0,1)") });
        }
        Ok(Self { alpha1, alpha2, envelope })
    }

    pub fn alpha1(&self) -> &Rational {
        &self.alpha1
    }

    pub fn alpha2(&self) -> &Rational {
        &self.alpha2
    }

    pub fn envelope(&self) -> &CgfEnvelope {
        &self.envelope
    }

    /// `1/alpha2 + 1/(1 - alpha2)`.
    pub fn alpha2_hat(&self) -> f64 {
        let a = &self.alpha2;
        to_f64(&(Rational::one() / a + Rational::one() / (Rational::one() - a)))
    }

    fn sub_gaussian_variance(&self) -> Result<f64> {
        match self.envelope {
            CgfEnvelope::SubGaussian { variance } => Ok(variance),
            _ => Err(Error::NotApplicable("this bound needs a sub-Gaussian envelope".into())),
        }
    }
}

/// Optimizing lambdas of the source and target terms, when searched for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaChoice {
    pub source: Option<f64>,
    pub target: Option<f64>,
}

/// A bound value with the pieces it was assembled from.
///
/// `total = gamma * source_term + (1 - gamma) * target_term + shift_term`,
/// where a zero weight annihilates an infinite term. `shift_term` is the
/// already-weighted excess-risk correction and is zero for gap bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(serialize_with = "ext_real")]
    pub total: f64,
    #[serde(serialize_with = "ext_real")]
    pub source_term: f64,
    #[serde(serialize_with = "ext_real")]
    pub target_term: f64,
    #[serde(serialize_with = "ext_real")]
    pub shift_term: f64,
    pub gamma: f64,
    #[serde(serialize_with = "ext_real")]
    pub js_value: f64,
    #[serde(serialize_with = "ext_real")]
    pub kl_to_mixture: f64,
    pub mi_source: f64,
    pub mi_target: f64,
    pub chosen_lambdas: Option<LambdaChoice>,
}

impl BoundReport {
    /// Rebuilds `total` from the recorded components.
    pub fn recompose(&self) -> f64 {
        weighted(self.gamma, self.source_term) + weighted(1.0 - self.gamma, self.target_term) + self.shift_term
    }
}

fn check_mi(name: &'static str, mi: f64) -> Result<()> {
    if !(mi.is_finite() && mi >= 0.0) {
        return Err(Error::OutOfRange { name, reason: format!("{mi} must be finite and >= 0") });
    }
    Ok(())
}

fn divergences(prob: &ExampleProblem, cfg: &BoundConfig) -> Result<JsParts> {
    JsParts::new(prob.target(), prob.source(), &cfg.alpha1, &cfg.alpha2)
}

fn nonneg_sqrt(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

struct Pieces {
    source: f64,
    target: f64,
    shift: f64,
    lambdas: Option<LambdaChoice>,
}

fn assemble(prob: &ExampleProblem, js: &JsParts, mi_source: f64, mi_target: f64, p: Pieces) -> BoundReport {
    let gamma = to_f64(prob.gamma());
    let total = weighted(gamma, p.source) + weighted(1.0 - gamma, p.target) + p.shift;
    BoundReport {
        total,
        source_term: p.source,
        target_term: p.target,
        shift_term: p.shift,
        gamma,
        js_value: js.value,
        kl_to_mixture: js.kl_target,
        mi_source,
        mi_target,
        chosen_lambdas: p.lambdas,
    }
}

/// `sigma sqrt(2 alpha2_hat) sqrt(JS + (1 - alpha2) I_src)`.
fn sub_gaussian_source_term(variance: f64, cfg: &BoundConfig, js: f64, mi_source: f64) -> f64 {
    let a2 = to_f64(&cfg.alpha2);
    variance.sqrt() * (2.0 * cfg.alpha2_hat()).sqrt() * nonneg_sqrt(js + (1.0 - a2) * mi_source)
}

/// `2 sigma sqrt(2 KL(P' || R) + I_tgt)`.
fn sub_gaussian_target_term(variance: f64, kl_target: f64, mi_target: f64) -> f64 {
    2.0 * variance.sqrt() * nonneg_sqrt(2.0 * kl_target + mi_target)
}

/// Sub-Gaussian bound on the average gap for `beta` in `(0,1)`.
pub fn theorem1_bound(prob: &ExampleProblem, cfg: &BoundConfig, mi_source: f64, mi_target: f64) -> Result<BoundReport> {
    if prob.beta().is_one() {
        return Err(Error::NotApplicable("beta = 1 has no target samples; use corollary_beta1_bound".into()));
    }
    let variance = cfg.sub_gaussian_variance()?;
    check_mi("mi_source", mi_source)?;
    check_mi("mi_target", mi_target)?;
    let js = divergences(prob, cfg)?;
    let pieces = Pieces {
        source: sub_gaussian_source_term(variance, cfg, js.value, mi_source),
        target: sub_gaussian_target_term(variance, js.kl_target, mi_target),
        shift: 0.0,
        lambdas: None,
    };
    Ok(assemble(prob, &js, mi_source, mi_target, pieces))
}

/// Sub-Gaussian bound on the average gap when all samples come from the source.
pub fn corollary_beta1_bound(prob: &ExampleProblem, cfg: &BoundConfig, mi_source: f64) -> Result<BoundReport> {
    if !prob.beta().is_one() {
        return Err(Error::NotApplicable(format!("needs beta = 1, got {}", prob.beta())));
    }
    let variance = cfg.sub_gaussian_variance()?;
    check_mi("mi_source", mi_source)?;
    let js = divergences(prob, cfg)?;
    let pieces = Pieces {
        source: sub_gaussian_source_term(variance, cfg, js.value, mi_source),
        target: 0.0,
        shift: 0.0,
        lambdas: None,
    };
    Ok(assemble(prob, &js, mi_source, 0.0, pieces))
}

/// `theorem1_bound` for `beta < 1`, `corollary_beta1_bound` for `beta = 1`.
pub fn transfer_gap_bound(prob: &ExampleProblem, cfg: &BoundConfig, mi: &SampleInformation) -> Result<BoundReport> {
    if prob.beta().is_one() {
        corollary_beta1_bound(prob, cfg, mi.source)
    } else {
        theorem1_bound(prob, cfg, mi.source, mi.target)
    }
}

/// Excess-risk bound for EWRM using its exact per-sample informations.
pub fn theorem2_excess_bound(prob: &ExampleProblem, cfg: &BoundConfig) -> Result<BoundReport> {
    let mi = sample_information(prob)?;
    theorem2_excess_bound_with(prob, cfg, &mi)
}

/// As [`theorem2_excess_bound`] with precomputed informations.
pub fn theorem2_excess_bound_with(prob: &ExampleProblem, cfg: &BoundConfig, mi: &SampleInformation) -> Result<BoundReport> {
    let variance = cfg.sub_gaussian_variance()?;
    let mut report = transfer_gap_bound(prob, cfg, mi)?;
    let gamma = report.gamma;
    let shift = weighted(gamma, nonneg_sqrt(2.0 * variance * cfg.alpha2_hat() * report.js_value));
    report.shift_term = shift;
    report.total = report.recompose();
    Ok(report)
}

/// Minimizes `(offset + cgf(lambda)) / lambda` over `(0, upper)`; a zero
/// offset gives the `lambda -> 0` limit, which is zero for envelopes with
/// `psi(lambda) = o(lambda)`.
fn inf_over_lambda<F: Fn(f64) -> f64>(cgf: F, offset: f64, upper: f64) -> Result<(f64, Option<f64>)> {
    if offset.is_infinite() {
        return Ok((f64::INFINITY, None));
    }
    if offset <= 0.0 {
        return Ok((0.0, Some(0.0)));
    }
    let m = search::minimize_positive(|l| (cgf(l) + offset) / l, upper)?;
    Ok((m.value, Some(m.argmin)))
}

/// Bound for a loss with an arbitrary CGF envelope; each infimum over lambda
/// is found numerically.
pub fn generic_cgf_bound(prob: &ExampleProblem, cfg: &BoundConfig, mi_source: f64, mi_target: f64) -> Result<BoundReport> {
    check_mi("mi_source", mi_source)?;
    check_mi("mi_target", mi_target)?;
    let env = &cfg.envelope;
    let (b_minus, b_plus) = env.domain();
    let a2 = to_f64(&cfg.alpha2);
    let b = (a2 * b_plus).min(-(1.0 - a2) * b_minus);
    let b2 = b_plus.min(-b_minus);
    if b.is_nan() || b2.is_nan() || b <= 0.0 || b2 <= 0.0 {
        return Err(Error::OutOfRange { name: "b", reason: format!("need b > 0 and b2 > 0, got b = {b}, b2 = {b2}") });
    }
    let js = divergences(prob, cfg)?;

    let psi_hat = |l: f64| a2 * env.psi(l / a2) + (1.0 - a2) * env.psi(-l / (1.0 - a2));
    let (source, lambda_source) = inf_over_lambda(psi_hat, js.value + (1.0 - a2) * mi_source, b)?;

    let (target, lambda_target) = if prob.n_samples(Domain::Target) > 0 {
        let both_sides = |l: f64| env.psi(l) + env.psi(-l);
        inf_over_lambda(both_sides, 2.0 * js.kl_target + mi_target, b2)?
    } else {
        (0.0, None)
    };
    let pieces = Pieces {
        source,
        target,
        shift: 0.0,
        lambdas: Some(LambdaChoice { source: lambda_source, target: lambda_target }),
    };
    let mi_target = if prob.n_samples(Domain::Target) > 0 { mi_target } else { 0.0 };
    Ok(assemble(prob, &js, mi_source, mi_target, pieces))
}

/// Sub-gamma bound at `alpha2 = 1/2`, evaluated three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubGammaReport {
    /// The closed form as printed:
    /// `2 sqrt(2 s2 C) + 2 c sqrt(2 s2 C)` per source sample and
    /// `2 sqrt(s2 D) + c D` per target sample, with `C = JS + I_src / 2` and
    /// `D = 2 KL(P' || R) + I_tgt`.
    pub printed: BoundReport,
    /// Objective evaluated at the stationary points
    /// `l1 = sqrt(C) / (sqrt(2 s2) + 2 c sqrt(C))` and
    /// `l2 = sqrt(D) / (s + c sqrt(D))`, which gives
    /// `2 sqrt(2 s2 C) + 2 c C` and `2 sqrt(s2 D) + c D`.
    pub closed_form: BoundReport,
    /// Numerical infimum from [`generic_cgf_bound`].
    pub numeric: BoundReport,
    /// The lambda formulas exactly as printed alongside the bound:
    /// `sqrt(JS + I) / (sqrt(2 s2) + 2 c sqrt(JS + I))` and `sqrt(D) / (s + sqrt(D))`.
    pub printed_lambdas: LambdaChoice,
    /// True when the printed total differs from the numerical infimum by more
    /// than [`SUBGAMMA_DISAGREEMENT_TOL`] (relative).
    pub disagreement: bool,
}

pub fn subgamma_bound(prob: &ExampleProblem, cfg: &BoundConfig, mi_source: f64, mi_target: f64) -> Result<SubGammaReport> {
    let (variance, c) = match cfg.envelope {
        CgfEnvelope::SubGamma { variance, scale } => (variance, scale),
        _ => return Err(Error::NotApplicable("this bound needs a sub-gamma envelope".into())),
    };
    if cfg.alpha2 != rat(1, 2) {
        return Err(Error::NotApplicable(format!("needs alpha2 = 1/2, got {}", cfg.alpha2)));
    }
    let numeric = generic_cgf_bound(prob, cfg, mi_source, mi_target)?;
    let js = divergences(prob, cfg)?;
    let has_target = prob.n_samples(Domain::Target) > 0;
    let sigma = variance.sqrt();
    let big_c = js.value + 0.5 * mi_source;
    let big_d = 2.0 * js.kl_target + mi_target;
    let root_c = (2.0 * variance * big_c).sqrt();

    let target_printed = if has_target { 2.0 * sigma * big_d.sqrt() + c * big_d } else { 0.0 };
    let printed = assemble(prob, &js, mi_source, numeric.mi_target, Pieces {
        source: 2.0 * root_c + 2.0 * c * root_c,
        target: target_printed,
        shift: 0.0,
        lambdas: None,
    });

    let lambda1 = big_c.sqrt() / ((2.0 * variance).sqrt() + 2.0 * c * big_c.sqrt());
    let lambda2 = big_d.sqrt() / (sigma + c * big_d.sqrt());
    let closed_form = assemble(prob, &js, mi_source, numeric.mi_target, Pieces {
        source: 2.0 * root_c + 2.0 * c * big_c,
        target: target_printed,
        shift: 0.0,
        lambdas: Some(LambdaChoice {
            source: big_c.is_finite().then_some(lambda1),
            target: (has_target && big_d.is_finite()).then_some(lambda2),
        }),
    });

    let printed_arg = js.value + mi_source;
    let printed_lambdas = LambdaChoice {
        source: Some(printed_arg.sqrt() / ((2.0 * variance).sqrt() + 2.0 * c * printed_arg.sqrt())),
        target: has_target.then(|| big_d.sqrt() / (sigma + big_d.sqrt())),
    };

    let scale = printed.total.abs().max(numeric.total.abs()).max(1.0);
    let disagreement = if printed.total.is_finite() && numeric.total.is_finite() {
        (printed.total - numeric.total).abs() > SUBGAMMA_DISAGREEMENT_TOL * scale
    } else {
        printed.total != numeric.total
    };
    Ok(SubGammaReport { printed, closed_form, numeric, printed_lambdas, disagreement })
}

/// The f-divergence baseline with `f(x) = |x - 1|`, for `beta = 1`:
///
/// ```text
/// sup_loss * sum_z |P'(z) - P(z)|  +  (1/M) sum_i sqrt(2 s2 I(W; Z_i)),   s2 = sup_loss^2 / 4
/// ```
///
/// The shift term is the sup-norm of the loss times the f-divergence, using
/// the `sum |P' - P|` normalization (twice the usual total variation). The
/// sensitivity term is the per-sample mutual-information bound for a loss
/// bounded in `[0, sup_loss]`, which is `sup_loss^2 / 4`-sub-Gaussian.
pub fn phi_baseline_bound(prob: &ExampleProblem, sup_loss: f64, mi_source: f64) -> Result<f64> {
    if !prob.beta().is_one() {
        return Err(Error::NotApplicable(format!("the f-divergence baseline needs beta = 1, got {}", prob.beta())));
    }
    if !(sup_loss.is_finite() && sup_loss > 0.0) {
        return Err(Error::OutOfRange { name: "sup_loss", reason: format!("{sup_loss} must be finite and > 0") });
    }
    check_mi("mi_source", mi_source)?;
    let variance = sup_loss * sup_loss / 4.0;
    let shift = sup_loss * total_variation(prob.target(), prob.source());
    Ok(shift + (2.0 * variance * mi_source).sqrt())
}

/// Candidate `alpha1` and `alpha2` values for [`optimize_alphas`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    alpha1: Vec<Rational>,
    alpha2: Vec<Rational>,
}

impl AlphaGrid {
    /// Sorts and deduplicates both lists; `alpha1` must lie in `[0,1]`, `alpha2` in `(0,1)`.
    pub fn new(mut alpha1: Vec<Rational>, mut alpha2: Vec<Rational>) -> Result<Self> {
        if alpha1.is_empty() || alpha2.is_empty() {
            return Err(Error::OutOfRange { name: "grid", reason: "alpha grids must be nonempty".into() });
        }
        if let Some(a) = alpha1.iter().find(|a| a.is_negative() || *a > &Rational::one()) {
            return Err(Error::OutOfRange { name: "alpha1", reason: format!("grid value {a} not in [0,1]") });
        }
        if let Some(a) = alpha2.iter().find(|a| !a.is_positive() || *a >= &Rational::one()) {
            return Err(Error::OutOfRange { name: "alpha2", reason: format!("grid value {a} not in (0,1)") });
        }
        alpha1.sort();
        alpha1.dedup();
        alpha2.sort();
        alpha2.dedup();
        Ok(Self { alpha1, alpha2 })
    }

    /// `start, start + step, ...` up to and including `end` (exact rationals).
    pub fn linspace(start: &Rational, end: &Rational, step: &Rational) -> Vec<Rational> {
        let mut out = Vec::new();
        if !step.is_positive() {
            return out;
        }
        let mut x = start.clone();
        while &x <= end {
            out.push(x.clone());
            x += step;
        }
        out
    }

    pub fn alpha1(&self) -> &[Rational] {
        &self.alpha1
    }

    pub fn alpha2(&self) -> &[Rational] {
        &self.alpha2
    }

    pub fn points(&self) -> Vec<(Rational, Rational)> {
        self.alpha1
            .iter()
            .flat_map(|a1| self.alpha2.iter().map(move |a2| (a1.clone(), a2.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha1: Rational,
    pub alpha2: Rational,
    pub report: BoundReport,
}

/// Every grid evaluation, in `alpha1`-major ascending order, and the argmin.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweep {
    pub points: Vec<SweepPoint>,
    pub best: usize,
}

impl AlphaSweep {
    pub fn best(&self) -> &SweepPoint {
        &self.points[self.best]
    }
}

/// Grid search for the `(alpha1, alpha2)` minimizing [`transfer_gap_bound`].
/// Ties go to the smallest `alpha1`, then the smallest `alpha2`.
pub fn optimize_alphas(
    prob: &ExampleProblem,
    envelope: &CgfEnvelope,
    grid: &AlphaGrid,
    mi: &SampleInformation,
) -> Result<AlphaSweep> {
    let points: Vec<SweepPoint> = grid
        .points()
        .into_par_iter()
        .map(|(alpha1, alpha2)| {
            let cfg = BoundConfig::new(alpha1.clone(), alpha2.clone(), envelope.clone())?;
            let report = transfer_gap_bound(prob, &cfg, mi)?;
            Ok(SweepPoint { alpha1, alpha2, report })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.report.total < points[best].report.total {
            best = i;
        }
    }
    Ok(AlphaSweep { points, best })
}
