//! Exact evaluation of (alpha1, alpha2)-Jensen-Shannon transfer-learning
//! bounds on finite alphabets.
//!
//! * [`dist`]: rational finite distributions, mixtures, moments.
//! * [`info`]: KL, total variation, mutual information and the
//!   (alpha1, alpha2)-JS family, in nats.
//! * [`ewrm`]: exact output law, per-sample informations, gap and excess
//!   risk of empirical weighted risk minimization for mean estimation.
//! * [`bound`]: sub-Gaussian, sub-gamma and generic-CGF bounds, the
//!   f-divergence baseline, and `(alpha1, alpha2)` grid optimization.
//! * [`oracle`]: exhaustive and Monte-Carlo oracles for validation.
//! * [`cli`]: the `jsgap` command-line front end.

pub mod bound;
pub mod cli;
pub mod dist;
mod error;
pub mod ewrm;
pub mod info;
pub mod oracle;
pub mod serde_ext;

pub use error::{Error, Result};
