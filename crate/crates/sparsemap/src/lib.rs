//! Greedy sparse signal recovery from compressed measurements, with support
//! detection driven by log-MAP ratios instead of raw correlation magnitudes.
//!
//! The toolkit covers:
//!
//! - [`ensemble`]: seeded generation of Gaussian sensing matrices, sparse
//!   signals under several priors, and measurement noise (`y = Φx + w`).
//! - [`linalg`]: the dense kernels the greedy loops need — residual
//!   correlations, QR least squares on restricted column sets, ridge
//!   estimation, and magnitude pruning.
//! - [`detector`]: per-iteration variance schedules and the log-MAP ratio
//!   `Λ(z)` for binary, uniform, finite-alphabet, and Gaussian priors.
//! - [`recovery`]: MP/OMP/gOMP/CoSaMP/SP loops in both MAP-ratio and
//!   conventional correlation-magnitude flavors.
//! - [`oracle`]: independent verifiers — moment checks for the ensemble
//!   distributions, the analytic recovery lower bound, exhaustive support
//!   search, and quadrature evaluation of the marginalized ratio.
//!
//! The crate is `no_std` (with `alloc`) so the numeric core can be embedded
//! anywhere; IO, CLI, and file formats live in the companion `sparsemap-cli`
//! crate.
//!
//! ```
//! use sparsemap::ensemble::{NoiseModel, SensingMatrix, SignalPrior, SparseSignal, measure};
//! use sparsemap::recovery::{Algorithm, AlgorithmConfig, recover};
//!
//! let phi = SensingMatrix::gaussian(64, 128, 7);
//! let x = SparseSignal::generate(128, 5, &SignalPrior::Binary, 8).unwrap();
//! let noise = NoiseModel::noiseless(64);
//! let y = measure(&phi, &x, &noise, 9).unwrap();
//!
//! let cfg = AlgorithmConfig::new(Algorithm::MapOmp, 5, SignalPrior::Binary, noise);
//! let result = recover(&y, &phi, &cfg).unwrap();
//! assert_eq!(result.support_sorted(), x.support().to_vec());
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod detector;
pub mod ensemble;
pub mod error;
mod float;
pub mod linalg;
pub mod oracle;
pub mod recovery;
pub mod special;

pub use error::{Error, Result};
