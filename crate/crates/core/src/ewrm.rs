//! Exact analysis of empirical weighted risk minimization for mean estimation
//! under quadratic loss.
//!
//! The learner sees `beta * M` source samples and `(1 - beta) * M` target
//! samples and outputs
//!
//! ```text
//! W = gamma / (beta M) * sum(source) + (1 - gamma) / ((1 - beta) M) * sum(target)
//! ```
//!
//! Everything here is exact: sums of i.i.d. draws are built from integer
//! binomial coefficients (two-atom laws) or exact convolution (larger
//! alphabets), and lattice points that coincide are merged by rational key.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dist::{int, to_f64, FiniteDistribution, Rational};
use crate::error::{Error, Result};
use crate::info::{mutual_information, JointDistribution};

/// Which half of the training set a sample comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A transfer problem: source law `P`, target law `P'`, sample count `M`,
/// source fraction `beta` and loss weight `gamma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleProblem {
    source: FiniteDistribution,
    target: FiniteDistribution,
    m: u32,
    beta: Rational,
    gamma: Rational,
}

impl ExampleProblem {
    pub fn new(
        source: FiniteDistribution,
        target: FiniteDistribution,
        m: u32,
        beta: Rational,
        gamma: Rational,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidProblem("M must be positive".into()));
        }
        if !beta.is_positive() || beta > Rational::one() {
            return Err(Error::InvalidProblem(format!("beta = {beta} not in (0,1]")));
        }
        if gamma.is_negative() || gamma > Rational::one() {
            return Err(Error::InvalidProblem(format!("gamma = {gamma} not in [0,1]")));
        }
        if !(&beta * int(m as i64)).is_integer() {
            return Err(Error::InvalidProblem(format!("beta * M = {} is not an integer", &beta * int(m as i64))));
        }
        if beta.is_one() && !gamma.is_one() {
            return Err(Error::InvalidProblem("beta = 1 requires gamma = 1 (no target samples)".into()));
        }
        Ok(Self { source, target, m, beta, gamma })
    }

    /// Source law on `{0, 1}` with `P(0) = p_s`, target law on `{1, 2}` with `P'(1) = p_t`.
    pub fn two_point(p_s: Rational, p_t: Rational, m: u32, beta: Rational, gamma: Rational) -> Result<Self> {
        let source = FiniteDistribution::two_point(int(0), int(1), p_s)?;
        let target = FiniteDistribution::two_point(int(1), int(2), p_t)?;
        Self::new(source, target, m, beta, gamma)
    }

    pub fn source(&self) -> &FiniteDistribution {
        &self.source
    }

    pub fn target(&self) -> &FiniteDistribution {
        &self.target
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn law(&self, domain: Domain) -> &FiniteDistribution {
        match domain {
            Domain::Source => &self.source,
            Domain::Target => &self.target,
        }
    }

    pub fn n_samples(&self, domain: Domain) -> u32 {
        let n_source = (&self.beta * int(self.m as i64)).to_integer();
        let n_source: u32 = n_source.try_into().expect("beta * M fits in u32");
        match domain {
            Domain::Source => n_source,
            Domain::Target => self.m - n_source,
        }
    }

    /// Coefficient of each sample of `domain` in both `W` and the training loss.
    pub fn sample_weight(&self, domain: Domain) -> Rational {
        let n = self.n_samples(domain);
        if n == 0 {
            return Rational::zero();
        }
        let share = match domain {
            Domain::Source => self.gamma.clone(),
            Domain::Target => Rational::one() - &self.gamma,
        };
        share / int(n as i64)
    }

    /// Law of `shift + w_s * S_source(n_source) + w_t * S_target(n_target)`.
    fn weighted_sum_law(&self, n_source: u32, n_target: u32, shift: Rational) -> FiniteDistribution {
        let ws = self.sample_weight(Domain::Source);
        let wt = self.sample_weight(Domain::Target);
        let s = sum_law(&self.source, n_source);
        let t = sum_law(&self.target, n_target);
        let mut out: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (sa, sp) in &s {
            let base = &shift + &ws * sa;
            for (ta, tp) in &t {
                *out.entry(&base + &wt * ta).or_insert_with(Rational::zero) += sp * tp;
            }
        }
        FiniteDistribution::from_map(out).expect("convolution of valid laws")
    }
}

/// Distribution of the learner output `W` on its rational lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputLaw {
    law: FiniteDistribution,
}

impl OutputLaw {
    pub fn distribution(&self) -> &FiniteDistribution {
        &self.law
    }

    pub fn into_distribution(self) -> FiniteDistribution {
        self.law
    }

    pub fn mean(&self) -> Rational {
        self.law.mean_exact()
    }

    pub fn second_moment(&self) -> Rational {
        self.law.second_moment_exact()
    }
}

fn binomial_row(n: u32) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(c.clone());
    }
    row
}

/// Law of the sum of `n` i.i.d. draws from `dist`.
pub fn sum_law(dist: &FiniteDistribution, n: u32) -> BTreeMap<Rational, Rational> {
    let mut out = BTreeMap::new();
    if n == 0 {
        out.insert(Rational::zero(), Rational::one());
        return out;
    }
    match dist.len() {
        1 => {
            out.insert(&dist.atoms()[0] * int(n as i64), Rational::one());
        }
        2 => {
            // n a0 + k (a1 - a0) with k ~ Binomial(n, P(a1)), all in integers over den^n.
            let (a0, a1) = (&dist.atoms()[0], &dist.atoms()[1]);
            let q = &dist.probs()[1];
            let (qn, den) = (q.numer().clone(), q.denom().clone());
            let rn = &den - &qn;
            let coeffs = binomial_row(n);
            let mut q_pow = vec![BigInt::one(); n as usize + 1];
            let mut r_pow = vec![BigInt::one(); n as usize + 1];
            for k in 1..=n as usize {
                q_pow[k] = &q_pow[k - 1] * &qn;
                r_pow[k] = &r_pow[k - 1] * &rn;
            }
            let total_den = num_traits::pow(den, n as usize);
            let step = a1 - a0;
            let start = a0 * int(n as i64);
            for k in 0..=n as usize {
                let numer = &coeffs[k] * &q_pow[k] * &r_pow[n as usize - k];
                if numer.is_zero() {
                    continue;
                }
                out.insert(&start + &step * int(k as i64), Rational::new(numer, total_den.clone()));
            }
        }
        _ => {
            let single: BTreeMap<Rational, Rational> =
                dist.iter().map(|(a, p)| (a.clone(), p.clone())).collect();
            let mut acc: Option<BTreeMap<Rational, Rational>> = None;
            let mut base = single;
            let mut k = n;
            while k > 0 {
                if k.is_odd() {
                    acc = Some(match acc {
                        None => base.clone(),
                        Some(a) => convolve(&a, &base),
                    });
                }
                k >>= 1;
                if k > 0 {
                    base = convolve(&base, &base);
                }
            }
            out = acc.expect("n > 0");
        }
    }
    out
}

fn convolve(a: &BTreeMap<Rational, Rational>, b: &BTreeMap<Rational, Rational>) -> BTreeMap<Rational, Rational> {
    let mut out = BTreeMap::new();
    for (x, px) in a {
        for (y, py) in b {
            *out.entry(x + y).or_insert_with(Rational::zero) += px * py;
        }
    }
    out
}

/// Exact law of the EWRM output.
pub fn ewrm_output_law(prob: &ExampleProblem) -> OutputLaw {
    let law = prob.weighted_sum_law(
        prob.n_samples(Domain::Source),
        prob.n_samples(Domain::Target),
        Rational::zero(),
    );
    OutputLaw { law }
}

/// Law of `W` given that one sample of `domain` equals `z`.
///
/// Samples within a domain are exchangeable, so the index does not matter.
pub fn conditional_output_law(prob: &ExampleProblem, domain: Domain, z: &Rational) -> Result<OutputLaw> {
    if prob.n_samples(domain) == 0 {
        return Err(Error::EmptyDomain(domain.name()));
    }
    if !prob.law(domain).prob_of(z).is_positive() {
        return Err(Error::NotInSupport(z.to_string(), domain.name()));
    }
    let shift = prob.sample_weight(domain) * z;
    let (ns, nt) = (prob.n_samples(Domain::Source), prob.n_samples(Domain::Target));
    let law = match domain {
        Domain::Source => prob.weighted_sum_law(ns - 1, nt, shift),
        Domain::Target => prob.weighted_sum_law(ns, nt - 1, shift),
    };
    Ok(OutputLaw { law })
}

/// Exact joint law of `(W, Z_i)` for one sample of `domain`.
pub fn output_sample_joint(prob: &ExampleProblem, domain: Domain) -> Result<JointDistribution> {
    let mut entries = BTreeMap::new();
    for (z, pz) in prob.law(domain).iter().filter(|(_, p)| p.is_positive()) {
        let cond = conditional_output_law(prob, domain, z)?;
        for (w, pw) in cond.distribution().iter() {
            entries.insert((w.clone(), z.clone()), pz * pw);
        }
    }
    JointDistribution::from_entries(entries)
}

/// `I(W; Z_i)` in nats for any sample `i` of `domain`.
pub fn per_sample_mi(prob: &ExampleProblem, domain: Domain) -> Result<f64> {
    Ok(mutual_information(&output_sample_joint(prob, domain)?))
}

/// Per-sample mutual informations for both domains. A domain without
/// samples contributes zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleInformation {
    pub source: f64,
    pub target: f64,
}

pub fn sample_information(prob: &ExampleProblem) -> Result<SampleInformation> {
    let source = per_sample_mi(prob, Domain::Source)?;
    let target = if prob.n_samples(Domain::Target) > 0 {
        per_sample_mi(prob, Domain::Target)?
    } else {
        0.0
    };
    Ok(SampleInformation { source, target })
}

/// Average transfer generalization gap of EWRM and the moments it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub exact_gap: f64,
    pub mean_w: f64,
    pub second_moment_w: f64,
    /// Value of the same expression as `M -> inf`.
    pub limit_gap: f64,
}

/// Closed-form moments of `W`: `E[W]` and `E[W^2]`.
pub fn output_moments_exact(prob: &ExampleProblem) -> (Rational, Rational) {
    let (mu_s, nu_s) = (prob.source.mean_exact(), prob.source.variance_exact());
    let (mu_t, nu_t) = (prob.target.mean_exact(), prob.target.variance_exact());
    let gamma = &prob.gamma;
    let rest = Rational::one() - gamma;
    let mean = gamma * &mu_s + &rest * &mu_t;
    let mut second = gamma * gamma * nu_s / int(prob.n_samples(Domain::Source) as i64) + &mean * &mean;
    let nt = prob.n_samples(Domain::Target);
    if nt > 0 {
        second += &rest * &rest * nu_t / int(nt as i64);
    }
    (mean, second)
}

fn gap_from_moments(prob: &ExampleProblem, mean: &Rational, second: &Rational) -> Rational {
    let (mu_s, nu_s) = (prob.source.mean_exact(), prob.source.variance_exact());
    let (mu_t, nu_t) = (prob.target.mean_exact(), prob.target.variance_exact());
    let shift = &nu_t + &mu_t * &mu_t - nu_s - &mu_s * &mu_s;
    int(2) * second - int(2) * &mu_t * mean + &prob.gamma * shift
}

pub fn exact_gap_rational(prob: &ExampleProblem) -> Rational {
    let (mean, second) = output_moments_exact(prob);
    gap_from_moments(prob, &mean, &second)
}

pub fn exact_gap(prob: &ExampleProblem) -> GapReport {
    let (mean, second) = output_moments_exact(prob);
    let gap = gap_from_moments(prob, &mean, &second);
    let limit = gap_from_moments(prob, &mean, &(&mean * &mean));
    GapReport {
        exact_gap: to_f64(&gap),
        mean_w: to_f64(&mean),
        second_moment_w: to_f64(&second),
        limit_gap: to_f64(&limit),
    }
}

/// `E[L_g(W)] - L_g(w*)` with `w* = E_{P'}[Z]`, i.e. `E[(W - mu_t)^2]`,
/// evaluated on the exact output law.
pub fn exact_excess_risk_rational(prob: &ExampleProblem) -> Rational {
    let mu_t = prob.target.mean_exact();
    ewrm_output_law(prob).distribution().expect(|w| {
        let d = w - &mu_t;
        &d * &d
    })
}

pub fn exact_excess_risk(prob: &ExampleProblem) -> f64 {
    to_f64(&exact_excess_risk_rational(prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;

    fn problem(ps: Rational, pt: Rational, m: u32, beta: Rational, gamma: Rational) -> ExampleProblem {
        ExampleProblem::two_point(ps, pt, m, beta, gamma).unwrap()
    }

    #[test]
    fn rejects_invalid_configurations() {
        let mk = |m, beta, gamma| ExampleProblem::two_point(rat(1, 2), rat(1, 2), m, beta, gamma);
        assert!(mk(5, rat(1, 2), rat(1, 2)).is_err());
        assert!(mk(0, int(1), int(1)).is_err());
        assert!(mk(4, int(0), int(1)).is_err());
        assert!(mk(4, int(1), rat(1, 2)).is_err());
        assert!(mk(4, rat(1, 2), rat(3, 2)).is_err());
        assert!(mk(4, rat(1, 2), rat(1, 2)).is_ok());
    }

    #[test]
    fn deterministic_output_laws() {
        let p = problem(int(1), int(1), 1, int(1), int(1));
        assert_eq!(ewrm_output_law(&p).into_distribution(), FiniteDistribution::point_mass(int(0)));
        let p = problem(int(1), int(0), 2, rat(1, 2), rat(1, 2));
        assert_eq!(ewrm_output_law(&p).into_distribution(), FiniteDistribution::point_mass(int(1)));
    }

    #[test]
    fn conditional_laws() {
        let p = problem(rat(1, 3), rat(1, 2), 1, int(1), int(1));
        for z in [int(0), int(1)] {
            let c = conditional_output_law(&p, Domain::Source, &z).unwrap();
            assert_eq!(c.into_distribution(), FiniteDistribution::point_mass(z));
        }
        assert_eq!(conditional_output_law(&p, Domain::Target, &int(1)), Err(Error::EmptyDomain("target")));
        assert!(matches!(conditional_output_law(&p, Domain::Source, &int(2)), Err(Error::NotInSupport(..))));

        let p = problem(int(1), rat(3, 10), 4, rat(1, 2), rat(3, 10));
        let c = conditional_output_law(&p, Domain::Source, &int(0)).unwrap();
        assert_eq!(c, ewrm_output_law(&p));
    }

    #[test]
    fn per_sample_mi_examples() {
        let p = problem(rat(1, 2), rat(1, 2), 1, int(1), int(1));
        assert!((per_sample_mi(&p, Domain::Source).unwrap() - 2f64.ln()).abs() < 1e-15);
        let p = problem(int(1), rat(3, 10), 6, rat(2, 3), rat(3, 10));
        assert_eq!(per_sample_mi(&p, Domain::Source).unwrap(), 0.0);
        assert!(per_sample_mi(&p, Domain::Target).unwrap() > 0.0);
    }

    #[test]
    fn binomial_sum_law_matches_convolution() {
        let d = FiniteDistribution::two_point(int(1), int(2), rat(3, 10)).unwrap();
        let single: BTreeMap<_, _> = d.iter().map(|(a, p)| (a.clone(), p.clone())).collect();
        let mut by_conv = single.clone();
        for _ in 1..7 {
            by_conv = convolve(&by_conv, &single);
        }
        assert_eq!(sum_law(&d, 7), by_conv);
    }

    #[test]
    fn three_atom_sum_law_by_squaring() {
        let d = FiniteDistribution::new(vec![int(0), int(1), int(3)], vec![rat(1, 2), rat(1, 3), rat(1, 6)]).unwrap();
        let single: BTreeMap<_, _> = d.iter().map(|(a, p)| (a.clone(), p.clone())).collect();
        let mut by_conv = single.clone();
        for _ in 1..5 {
            by_conv = convolve(&by_conv, &single);
        }
        assert_eq!(sum_law(&d, 5), by_conv);
        let total: Rational = by_conv.values().sum();
        assert!(total.is_one());
    }

    #[test]
    fn matched_laws_give_twice_the_variance() {
        // Source on the target alphabet with equal parameter, gamma = beta.
        let law = FiniteDistribution::two_point(int(1), int(2), rat(2, 5)).unwrap();
        let p = ExampleProblem::new(law.clone(), law.clone(), 6, rat(1, 3), rat(1, 3)).unwrap();
        let nu = law.variance_exact();
        let g = &p.gamma;
        let var_w = g * g * &nu / int(2) + (Rational::one() - g) * (Rational::one() - g) * &nu / int(4);
        assert_eq!(exact_gap_rational(&p), int(2) * var_w);
    }

    #[test]
    fn beta_one_limit() {
        let p = problem(rat(12, 25), rat(3, 10), 100_000, int(1), int(1));
        let r = exact_gap(&p);
        let (mu_s, nu_s, mu_t, nu_t) = (0.52, 0.2496, 1.7, 0.21);
        let limit = (mu_s - mu_t) * (mu_s - mu_t) + nu_t - nu_s;
        assert!((r.limit_gap - limit).abs() < 1e-12);
        assert!((r.exact_gap - limit).abs() < 1e-5);
    }

    #[test]
    fn excess_risk_examples() {
        let one = FiniteDistribution::point_mass(int(1));
        let p = ExampleProblem::new(one.clone(), one, 4, rat(1, 2), rat(1, 2)).unwrap();
        assert_eq!(exact_excess_risk(&p), 0.0);

        let p = problem(rat(12, 25), rat(3, 10), 400, int(1), int(1));
        let limit = (0.52f64 - 1.7).powi(2);
        // Var(W) = nu_s / M
        assert!((exact_excess_risk(&p) - (limit + 0.2496 / 400.0)).abs() < 1e-12);
    }
}
