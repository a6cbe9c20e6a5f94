//! Refined Katz–Sarnak statistics for curves over finite fields.
//!
//! * [`multiplicities`]: exact `USp(2g)` tensor-power multiplicities, giving
//!   the moment sequences `𝔞_n`, `𝔟_n` and the stable coefficient `c_{2,n}`.
//! * [`weyl`]: the Weyl measure, the limiting trace densities `F_g`, `H_g`
//!   and moments by quadrature.
//! * [`gaussfit`]: exact Gaussian-times-polynomial moment fits.
//! * [`census`]: weighted point-count censuses of elliptic and hyperelliptic
//!   curves over prime fields.
//! * [`classno`] and [`anomaly`]: class numbers, the Kronecker class number
//!   product formula and large-isogeny-class constructions.
//! * [`reports`]: CSV/JSON emission and ingestion.

pub mod error;
pub mod anomaly;
pub mod census;
pub mod classno;
pub mod field;
pub mod gaussfit;
pub mod multiplicities;
pub mod partition;
pub mod quadrature;
pub mod reports;
pub mod scalar;
pub mod selftest;
pub mod serde_util;
pub mod weyl;

pub use error::{Error, Result};
pub use partition::Partition;
pub use scalar::{FieldScalar, Real};

/// Exact rational used for census weights and moment fits.
pub type Rational = num_rational::BigRational;

pub type DensitySample64 = weyl::DensitySample<f64>;
pub type DensitySample32 = weyl::DensitySample<f32>;
pub type SliceEvaluator64 = weyl::SliceEvaluator<f64>;
