//! Information measures on finite distributions, in nats.
//!
//! `+inf` is represented by `f64::INFINITY`. Conventions: `0 ln(0/q) = 0`,
//! `p ln(p/0) = +inf` for `p > 0`, and a term with weight exactly zero
//! contributes zero even when the divergence it multiplies is infinite.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::dist::{mixture, to_f64, FiniteDistribution, Rational};
use crate::error::{Error, Result};

/// `weight * value`, with `0 * inf = 0`.
pub(crate) fn weighted(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}

/// `p ln(p / q)` with the ratio formed exactly before the single log call.
fn plogpq(p: &Rational, q: &Rational) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    if q.is_zero() {
        return f64::INFINITY;
    }
    to_f64(p) * to_f64(&(p / q)).ln()
}

pub fn entropy(p: &FiniteDistribution) -> f64 {
    -p.probs().iter().map(|pr| plogpq(pr, &Rational::one())).sum::<f64>()
}

/// D_KL(P || Q) in nats.
pub fn kl_divergence(p: &FiniteDistribution, q: &FiniteDistribution) -> f64 {
    let mut total = 0.0;
    for (atom, pr) in p.iter() {
        let term = plogpq(pr, &q.prob_of(atom));
        if term.is_infinite() {
            return f64::INFINITY;
        }
        total += term;
    }
    // Each term can be negative; the exact sum cannot.
    total.max(0.0)
}

/// `alpha2 KL(P' || R) + (1 - alpha2) KL(P || R)` with `R = alpha1 P + (1 - alpha1) P'`.
///
/// Finite for every `alpha1` in `(0,1)`, whatever the supports.
pub fn js_alpha(p_prime: &FiniteDistribution, p: &FiniteDistribution, alpha1: &Rational, alpha2: &Rational) -> Result<f64> {
    let parts = JsParts::new(p_prime, p, alpha1, alpha2)?;
    Ok(parts.value)
}

/// The two KL terms behind an (alpha1, alpha2)-JS value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsParts {
    /// KL(P' || R^alpha1)
    pub kl_target: f64,
    /// KL(P || R^alpha1)
    pub kl_source: f64,
    pub value: f64,
}

impl JsParts {
    pub fn new(p_prime: &FiniteDistribution, p: &FiniteDistribution, alpha1: &Rational, alpha2: &Rational) -> Result<Self> {
        if alpha2.is_negative() || alpha2 > &Rational::one() {
            return Err(Error::OutOfRange { name: "alpha2", reason: format!("{alpha2} not in [0,1]") });
        }
        let r = mixture(p, p_prime, alpha1)?;
        let kl_target = kl_divergence(p_prime, &r);
        let kl_source = kl_divergence(p, &r);
        let w = to_f64(alpha2);
        let value = weighted(w, kl_target) + weighted(1.0 - w, kl_source);
        Ok(Self { kl_target, kl_source, value })
    }
}

/// `sum_z |P(z) - Q(z)|`, the f-divergence for `f(x) = |x - 1|`.
///
/// This is twice the conventional total-variation distance.
pub fn total_variation(p: &FiniteDistribution, q: &FiniteDistribution) -> f64 {
    let mut atoms: Vec<&Rational> = p.atoms().iter().chain(q.atoms()).collect();
    atoms.sort();
    atoms.dedup();
    let sum: Rational = atoms.into_iter().map(|a| (p.prob_of(a) - q.prob_of(a)).abs()).sum();
    to_f64(&sum)
}

/// Joint law of a pair (W, Z) on a finite grid, stored densely row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: Vec<Rational>,
    cols: Vec<Rational>,
    mass: Vec<Rational>,
}

impl JointDistribution {
    /// Builds a joint from `(row atom, column atom) -> mass` entries.
    pub fn from_entries(entries: BTreeMap<(Rational, Rational), Rational>) -> Result<Self> {
        let mut rows: Vec<Rational> = entries.keys().map(|(r, _)| r.clone()).collect();
        rows.dedup();
        let mut cols: Vec<Rational> = entries.keys().map(|(_, c)| c.clone()).collect();
        cols.sort();
        cols.dedup();
        let mut mass = vec![Rational::zero(); rows.len() * cols.len()];
        let mut total = Rational::zero();
        for ((r, c), m) in entries {
            if m.is_negative() {
                return Err(Error::InvalidDistribution(format!("negative joint mass {m}")));
            }
            let i = rows.binary_search(&r).expect("row present");
            let j = cols.binary_search(&c).expect("column present");
            total += &m;
            mass[i * cols.len() + j] = m;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("joint mass sums to {total}, not 1")));
        }
        Ok(Self { rows, cols, mass })
    }

    pub fn rows(&self) -> &[Rational] {
        &self.rows
    }

    pub fn cols(&self) -> &[Rational] {
        &self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.mass[i * self.cols.len() + j]
    }

    pub fn row_marginal(&self) -> FiniteDistribution {
        let probs = (0..self.rows.len())
            .map(|i| (0..self.cols.len()).map(|j| self.get(i, j)).sum())
            .collect();
        FiniteDistribution::new(self.rows.clone(), probs).expect("marginal of a valid joint")
    }

    pub fn col_marginal(&self) -> FiniteDistribution {
        let probs = (0..self.cols.len())
            .map(|j| (0..self.rows.len()).map(|i| self.get(i, j)).sum())
            .collect();
        FiniteDistribution::new(self.cols.clone(), probs).expect("marginal of a valid joint")
    }
}

/// I(W; Z) = KL(P_WZ || P_W x P_Z) in nats.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let row_mass: Vec<Rational> = (0..joint.rows.len())
        .map(|i| (0..joint.cols.len()).map(|j| joint.get(i, j)).sum())
        .collect();
    let col_mass: Vec<Rational> = (0..joint.cols.len())
        .map(|j| (0..joint.rows.len()).map(|i| joint.get(i, j)).sum())
        .collect();
    let mut total = 0.0;
    for (i, r) in row_mass.iter().enumerate() {
        for (j, c) in col_mass.iter().enumerate() {
            let m = joint.get(i, j);
            if m.is_positive() {
                total += plogpq(m, &(r * c));
            }
        }
    }
    total.max(0.0)
}
