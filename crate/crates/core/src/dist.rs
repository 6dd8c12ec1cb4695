//! Exact finite probability distributions.
//!
//! Atoms and probabilities are arbitrary-precision rationals. Floating point
//! enters only once a logarithm is taken, in [`crate::info`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Builds `numer / denom`. Panics if `denom == 0`.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Correctly rounded conversion to `f64`.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Parses `a/b`, an integer, or a decimal literal such as `0.48` or `-1.5e-3`.
/// Decimals are converted exactly (`0.1` is `1/10`, not the nearest double).
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let err = || Error::ParseRational(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(err)?;
        let d = parse_decimal(d.trim()).ok_or_else(err)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(err)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{whole}{frac}");
    let numer = BigInt::from_str(if joined.is_empty() { "0" } else { &joined }).ok()?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Parses a comma-separated list of rational literals, optionally wrapped in `[...]`.
pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>> {
    let inner = text.trim();
    let inner = inner
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(inner);
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_rational).collect()
}

/// What to do with atoms whose probability is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroMass {
    #[default]
    Drop,
    Keep,
}

/// A probability mass function on finitely many rational atoms.
///
/// Atoms are strictly increasing, probabilities are non-negative and sum to
/// exactly one. Values are immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteDistribution {
    atoms: Vec<Rational>,
    probs: Vec<Rational>,
}

impl FiniteDistribution {
    /// Builds a distribution, dropping zero-probability atoms.
    pub fn new(atoms: Vec<Rational>, probs: Vec<Rational>) -> Result<Self> {
        Self::with_zero_mass(atoms, probs, ZeroMass::Drop)
    }

    pub fn with_zero_mass(atoms: Vec<Rational>, probs: Vec<Rational>, zeros: ZeroMass) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut pairs: Vec<(Rational, Rational)> = atoms.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution(format!("duplicate atom {}", w[0].0)));
        }
        if let Some((a, p)) = pairs.iter().find(|(_, p)| p.is_negative()) {
            return Err(Error::InvalidDistribution(format!("negative probability {p} at atom {a}")));
        }
        let total: Rational = pairs.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        if zeros == ZeroMass::Drop {
            pairs.retain(|(_, p)| !p.is_zero());
        }
        let (atoms, probs) = pairs.into_iter().unzip();
        Ok(Self { atoms, probs })
    }

    /// Builds a distribution from an atom-to-mass map, merging nothing further.
    pub fn from_map(map: BTreeMap<Rational, Rational>) -> Result<Self> {
        let (atoms, probs) = map.into_iter().unzip();
        Self::new(atoms, probs)
    }

    pub fn point_mass(atom: Rational) -> Self {
        Self { atoms: vec![atom], probs: vec![Rational::one()] }
    }

    /// Two-atom law with `P(first) = p_first` and `P(second) = 1 - p_first`.
    pub fn two_point(first: Rational, second: Rational, p_first: Rational) -> Result<Self> {
        if p_first.is_negative() || p_first > Rational::one() {
            return Err(Error::OutOfRange { name: "p", reason: format!("{p_first} not in [0,1]") });
        }
        let rest = Rational::one() - &p_first;
        Self::new(vec![first, second], vec![p_first, rest])
    }

    pub fn atoms(&self) -> &[Rational] {
        &self.atoms
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.atoms.iter().zip(&self.probs)
    }

    /// Atoms carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = &Rational> {
        self.iter().filter(|(_, p)| p.is_positive()).map(|(a, _)| a)
    }

    /// Mass at `atom`, zero when absent.
    pub fn prob_of(&self, atom: &Rational) -> Rational {
        match self.atoms.binary_search(atom) {
            Ok(i) => self.probs[i].clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn expect<F: Fn(&Rational) -> Rational>(&self, f: F) -> Rational {
        self.iter().map(|(a, p)| p * f(a)).sum()
    }

    pub fn mean_exact(&self) -> Rational {
        self.expect(|a| a.clone())
    }

    pub fn second_moment_exact(&self) -> Rational {
        self.expect(|a| a * a)
    }

    pub fn variance_exact(&self) -> Rational {
        let mean = self.mean_exact();
        self.second_moment_exact() - &mean * &mean
    }

    /// Parses `atoms=[0,1]; probs=[12/25,13/25]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut atoms = None;
        let mut probs = None;
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::ParseDistribution(format!("expected key=value, got `{part}`")))?;
            let list = parse_rational_list(value)
                .map_err(|e| Error::ParseDistribution(e.to_string()))?;
            match key.trim() {
                "atoms" => atoms = Some(list),
                "probs" => probs = Some(list),
                other => return Err(Error::ParseDistribution(format!("unknown key `{other}`"))),
            }
        }
        match (atoms, probs) {
            (Some(a), Some(p)) => Self::new(a, p),
            _ => Err(Error::ParseDistribution("both `atoms` and `probs` are required".into())),
        }
    }
}

impl FromStr for FiniteDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for FiniteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Rational]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "atoms=[{}]; probs=[{}]", join(&self.atoms), join(&self.probs))
    }
}

/// Mean and variance of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

pub fn moments(p: &FiniteDistribution) -> Moments {
    Moments { mean: to_f64(&p.mean_exact()), variance: to_f64(&p.variance_exact()) }
}

fn check_unit(name: &'static str, value: &Rational) -> Result<()> {
    if value.is_negative() || value > &Rational::one() {
        return Err(Error::OutOfRange { name, reason: format!("{value} not in [0,1]") });
    }
    Ok(())
}

/// `alpha1 * p + (1 - alpha1) * p_prime` on the union of supports.
pub fn mixture(p: &FiniteDistribution, p_prime: &FiniteDistribution, alpha1: &Rational) -> Result<FiniteDistribution> {
    check_unit("alpha1", alpha1)?;
    let rest = Rational::one() - alpha1;
    let mut map: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (a, pr) in p.iter() {
        *map.entry(a.clone()).or_insert_with(Rational::zero) += alpha1 * pr;
    }
    for (a, pr) in p_prime.iter() {
        *map.entry(a.clone()).or_insert_with(Rational::zero) += &rest * pr;
    }
    FiniteDistribution::from_map(map)
}

/// True iff every atom with positive mass under `p` has positive mass under `q`.
pub fn support_subset(p: &FiniteDistribution, q: &FiniteDistribution) -> bool {
    p.support().all(|a| q.prob_of(a).is_positive())
}
