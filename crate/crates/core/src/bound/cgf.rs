use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Upper envelope `psi` on the cumulant generating function of the loss,
/// valid for `lambda` in `(b_minus, b_plus)`.
#[derive(Clone)]
pub enum CgfEnvelope {
    /// `psi(l) = l^2 sigma^2 / 2` on the whole line.
    SubGaussian { variance: f64 },
    /// `psi(l) = l^2 sigma^2 / (2 (1 - c |l|))` for `|l| < 1/c`.
    SubGamma { variance: f64, scale: f64 },
    Custom {
        psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        b_minus: f64,
        b_plus: f64,
    },
}

impl fmt::Debug for CgfEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SubGaussian { variance } => f.debug_struct("SubGaussian").field("variance", variance).finish(),
            Self::SubGamma { variance, scale } => f
                .debug_struct("SubGamma")
                .field("variance", variance)
                .field("scale", scale)
                .finish(),
            Self::Custom { b_minus, b_plus, .. } => f
                .debug_struct("Custom")
                .field("b_minus", b_minus)
                .field("b_plus", b_plus)
                .finish_non_exhaustive(),
        }
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::OutOfRange { name: "sigma2", reason: format!("{variance} must be finite and > 0") });
    }
    Ok(())
}

impl CgfEnvelope {
    pub fn sub_gaussian(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(Self::SubGaussian { variance })
    }

    pub fn sub_gamma(variance: f64, scale: f64) -> Result<Self> {
        check_variance(variance)?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::OutOfRange { name: "c", reason: format!("{scale} must be finite and >= 0") });
        }
        Ok(Self::SubGamma { variance, scale })
    }

    pub fn custom<F>(psi: F, b_minus: f64, b_plus: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if b_minus.is_nan() || b_plus.is_nan() || b_minus > 0.0 || b_plus < 0.0 {
            return Err(Error::OutOfRange {
                name: "b",
                reason: format!("need b_minus <= 0 <= b_plus, got ({b_minus}, {b_plus})"),
            });
        }
        let at_zero = psi(0.0);
        if at_zero.abs() > 1e-12 {
            return Err(Error::OutOfRange { name: "psi", reason: format!("psi(0) = {at_zero}, expected 0") });
        }
        Ok(Self::Custom { psi: Arc::new(psi), b_minus, b_plus })
    }

    /// `(b_minus, b_plus)`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::SubGaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::SubGamma { scale, .. } if *scale == 0.0 => (f64::NEG_INFINITY, f64::INFINITY),
            Self::SubGamma { scale, .. } => (-1.0 / scale, 1.0 / scale),
            Self::Custom { b_minus, b_plus, .. } => (*b_minus, *b_plus),
        }
    }

    /// Envelope value, `+inf` outside the open domain.
    pub fn psi(&self, lambda: f64) -> f64 {
        let (lo, hi) = self.domain();
        if !(lambda > lo && lambda < hi) && lambda != 0.0 {
            return f64::INFINITY;
        }
        match self {
            Self::SubGaussian { variance } => lambda * lambda * variance / 2.0,
            Self::SubGamma { variance, scale } => lambda * lambda * variance / (2.0 * (1.0 - scale * lambda.abs())),
            Self::Custom { psi, .. } => psi(lambda),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match self {
            Self::SubGaussian { variance } | Self::SubGamma { variance, .. } => Some(*variance),
            Self::Custom { .. } => None,
        }
    }
}
