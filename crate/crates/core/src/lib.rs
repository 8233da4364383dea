//! Data-selective (set-membership) adaptive filtering.
//!
//! The crate covers the classic point-estimation baselines (LMS, NLMS,
//! affine projection, RLS), their set-membership counterparts with
//! per-iteration update gating, trinion- and quaternion-valued variants,
//! partial-update and sparsity-aware algorithms, the feature-LMS family,
//! runtime l2-stability checkers, and a Monte-Carlo experiment harness
//! with CSV export. The `smadapt` binary exposes the experiment runner on
//! the command line.

pub mod classic;
pub mod error;
pub mod feature;
pub mod harness;
pub mod hcfilters;
pub mod hypercomplex;
pub mod linalg;
pub mod partialupdate;
pub mod robustness;
pub mod signals;
pub mod smcore;
pub mod sparse;

pub use error::{Error, Result};
