//! Brute-force oracles for the exact EWRM computations.
//!
//! These deliberately avoid the convolution path of [`crate::ewrm`]: the
//! exhaustive oracles walk every training tuple in mixed-radix order with
//! exact tuple probabilities, and the Monte-Carlo oracle samples tuples.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{to_f64, FiniteDistribution, Rational};
use crate::error::{Error, Result};
use crate::ewrm::{Domain, ExampleProblem};

/// Largest number of tuples the exhaustive oracles will visit.
pub const MAX_TUPLES: u128 = 10_000_000;

/// Smallest Monte-Carlo sample count accepted by [`mc_gap`].
pub const MIN_MC_SAMPLES: u64 = 10_000;

/// Fixed shard count; per-shard streams make results independent of the
/// number of worker threads.
pub const MC_SHARDS: u64 = 64;

pub const MC_RNG: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub estimate: f64,
    /// Zero for exhaustive results.
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// `exhaustive`, or the RNG algorithm used for sampling.
    pub method: String,
}

struct Position<'a> {
    law: &'a FiniteDistribution,
    weight: Rational,
}

fn positions(prob: &ExampleProblem) -> Vec<Position<'_>> {
    let mut out = Vec::with_capacity(prob.m() as usize);
    for domain in [Domain::Source, Domain::Target] {
        for _ in 0..prob.n_samples(domain) {
            out.push(Position { law: prob.law(domain), weight: prob.sample_weight(domain) });
        }
    }
    out
}

/// Visits every tuple of atoms with positive mass, in mixed-radix order
/// (last position fastest), passing the tuple and its exact probability.
fn for_each_tuple<F: FnMut(&[&Rational], &Rational)>(pos: &[Position<'_>], mut visit: F) -> Result<u64> {
    let supports: Vec<Vec<(&Rational, &Rational)>> = pos.iter().map(|p| p.law.iter().collect()).collect();
    let count = supports.iter().try_fold(1u128, |acc, s| {
        let next = acc.saturating_mul(s.len() as u128);
        (next <= MAX_TUPLES).then_some(next).ok_or(next)
    });
    let count = count.map_err(|n| Error::OversizeEnumeration(n, MAX_TUPLES))?;
    let mut digits = vec![0usize; pos.len()];
    let mut atoms: Vec<&Rational> = supports.iter().map(|s| s[0].0).collect();
    loop {
        let mut p = Rational::one();
        for (s, &d) in supports.iter().zip(&digits) {
            p *= s[d].1;
        }
        visit(&atoms, &p);
        let mut k = pos.len();
        loop {
            if k == 0 {
                return Ok(count as u64);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < supports[k].len() {
                atoms[k] = supports[k][digits[k]].0;
                break;
            }
            digits[k] = 0;
            atoms[k] = supports[k][0].0;
        }
    }
}

fn tuple_output(pos: &[Position<'_>], tuple: &[&Rational]) -> Rational {
    pos.iter().zip(tuple).map(|(p, z)| &p.weight * *z).sum()
}

/// Exact average of `L_g(W) - L_t(W | z^M)` over all training tuples.
pub fn enumerate_gap(prob: &ExampleProblem) -> Result<OracleResult> {
    let pos = positions(prob);
    let target = prob.target();
    let mut total = Rational::zero();
    let n = for_each_tuple(&pos, |tuple, p| {
        let w = tuple_output(&pos, tuple);
        let population = target.expect(|z| (&w - z) * (&w - z));
        let training: Rational = pos.iter().zip(tuple).map(|(q, z)| &q.weight * (&w - *z) * (&w - *z)).sum();
        total += p * (population - training);
    })?;
    Ok(OracleResult { estimate: to_f64(&total), std_error: 0.0, n_samples: n, seed: 0, method: "exhaustive".into() })
}

fn entropy_of<'a, I: IntoIterator<Item = &'a Rational>>(masses: I) -> f64 {
    masses
        .into_iter()
        .map(to_f64)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Plug-in `I(W; Z_i)` from the exhaustively enumerated joint, computed as
/// `H(W) + H(Z_i) - H(W, Z_i)`.
pub fn enumerate_mi(prob: &ExampleProblem, domain: Domain) -> Result<OracleResult> {
    if prob.n_samples(domain) == 0 {
        return Err(Error::EmptyDomain(domain.name()));
    }
    let pos = positions(prob);
    let index = match domain {
        Domain::Source => 0,
        Domain::Target => prob.n_samples(Domain::Source) as usize,
    };
    let mut joint: BTreeMap<(Rational, Rational), Rational> = BTreeMap::new();
    let n = for_each_tuple(&pos, |tuple, p| {
        let key = (tuple_output(&pos, tuple), tuple[index].clone());
        *joint.entry(key).or_insert_with(Rational::zero) += p;
    })?;
    let mut w_marginal: BTreeMap<&Rational, Rational> = BTreeMap::new();
    let mut z_marginal: BTreeMap<&Rational, Rational> = BTreeMap::new();
    for ((w, z), p) in &joint {
        *w_marginal.entry(w).or_insert_with(Rational::zero) += p;
        *z_marginal.entry(z).or_insert_with(Rational::zero) += p;
    }
    let mi = entropy_of(w_marginal.values()) + entropy_of(z_marginal.values()) - entropy_of(joint.values());
    Ok(OracleResult { estimate: mi, std_error: 0.0, n_samples: n, seed: 0, method: "exhaustive".into() })
}

struct Sampler {
    atoms: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(law: &FiniteDistribution) -> Self {
        let atoms = law.atoms().iter().map(to_f64).collect();
        let mut acc = Rational::zero();
        let cumulative = law
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                to_f64(&acc)
            })
            .collect();
        Self { atoms, cumulative }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.atoms.len() - 1);
        self.atoms[i]
    }
}

#[derive(Clone, Copy)]
struct Running {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    const EMPTY: Running = Running { count: 0, mean: 0.0, m2: 0.0 };

    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Running) -> Running {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Running { count, mean, m2 }
    }
}

/// Monte-Carlo estimate of the average gap from `n` sampled training tuples.
///
/// Bit-for-bit reproducible for a given `(n, seed)`, whatever the size of the
/// rayon pool: shard `k` draws from ChaCha8 stream `k` of the master seed
/// and shard statistics are merged in shard order.
pub fn mc_gap(prob: &ExampleProblem, n: u64, seed: u64) -> Result<OracleResult> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::OutOfRange { name: "n_samples", reason: format!("{n} < {MIN_MC_SAMPLES}") });
    }
    let source = Sampler::new(prob.source());
    let target = Sampler::new(prob.target());
    let (ns, nt) = (prob.n_samples(Domain::Source) as usize, prob.n_samples(Domain::Target) as usize);
    let ws = to_f64(&prob.sample_weight(Domain::Source));
    let wt = to_f64(&prob.sample_weight(Domain::Target));
    let mu_t = to_f64(&prob.target().mean_exact());
    let nu_t = to_f64(&prob.target().variance_exact());

    let shard_stats: Vec<Running> = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = n / MC_SHARDS + u64::from(shard < n % MC_SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut zs = vec![0.0; ns];
            let mut zt = vec![0.0; nt];
            let mut stats = Running::EMPTY;
            for _ in 0..count {
                zs.iter_mut().for_each(|z| *z = source.draw(&mut rng));
                zt.iter_mut().for_each(|z| *z = target.draw(&mut rng));
                let w = ws * zs.iter().sum::<f64>() + wt * zt.iter().sum::<f64>();
                let population = (w - mu_t) * (w - mu_t) + nu_t;
                let training = ws * zs.iter().map(|z| (w - z) * (w - z)).sum::<f64>()
                    + wt * zt.iter().map(|z| (w - z) * (w - z)).sum::<f64>();
                stats.push(population - training);
            }
            stats
        })
        .collect();
    let total = shard_stats.into_iter().fold(Running::EMPTY, Running::merge);
    let variance = if total.count > 1 { total.m2 / (total.count - 1) as f64 } else { 0.0 };
    Ok(OracleResult {
        estimate: total.mean,
        std_error: (variance.max(0.0) / total.count as f64).sqrt(),
        n_samples: total.count,
        seed,
        method: MC_RNG.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{int, rat};
    use crate::ewrm::{exact_gap, exact_gap_rational};

    #[test]
    fn deterministic_laws_single_tuple() {
        let p = ExampleProblem::two_point(int(1), int(1), 4, rat(1, 2), rat(3, 10)).unwrap();
        let r = enumerate_gap(&p).unwrap();
        assert_eq!(r.n_samples, 1);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.estimate, to_f64(&exact_gap_rational(&p)));

        let mc = mc_gap(&p, MIN_MC_SAMPLES, 7).unwrap();
        assert!((mc.estimate - r.estimate).abs() < 1e-12);
        assert_eq!(mc.std_error, 0.0);
    }

    #[test]
    fn enumeration_matches_closed_form_gap() {
        let p = ExampleProblem::two_point(rat(12, 25), rat(3, 10), 6, int(1), int(1)).unwrap();
        assert!((enumerate_gap(&p).unwrap().estimate - exact_gap(&p).exact_gap).abs() < 1e-12);
    }

    #[test]
    fn mi_edge_cases() {
        let p = ExampleProblem::two_point(int(1), rat(3, 10), 4, rat(1, 2), rat(1, 2)).unwrap();
        assert!(enumerate_mi(&p, Domain::Source).unwrap().estimate.abs() < 1e-15);
        let p = ExampleProblem::two_point(rat(1, 3), rat(3, 10), 1, int(1), int(1)).unwrap();
        let h = -(1.0f64 / 3.0) * (1.0f64 / 3.0).ln() - (2.0f64 / 3.0) * (2.0f64 / 3.0).ln();
        assert!((enumerate_mi(&p, Domain::Source).unwrap().estimate - h).abs() < 1e-15);
        assert_eq!(enumerate_mi(&p, Domain::Target), Err(Error::EmptyDomain("target")));
    }

    #[test]
    fn rejects_oversize_and_small_n() {
        let p = ExampleProblem::two_point(rat(1, 2), rat(1, 2), 30, rat(2, 3), rat(3, 10)).unwrap();
        assert!(matches!(enumerate_gap(&p), Err(Error::OversizeEnumeration(..))));
        assert!(mc_gap(&p, 10, 1).is_err());
    }

    #[test]
    fn mc_is_reproducible() {
        let p = ExampleProblem::two_point(rat(12, 25), rat(3, 10), 6, rat(2, 3), rat(3, 10)).unwrap();
        let a = mc_gap(&p, 20_000, 99).unwrap();
        let b = mc_gap(&p, 20_000, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_ne!(mc_gap(&p, 20_000, 100).unwrap().estimate, a.estimate);
    }
}
