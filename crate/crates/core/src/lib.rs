//! Data-consistent forward and inverse uncertainty quantification with
//! convergent sequences of surrogate maps.
//!
//! The crate is organised bottom-up:
//!
//! - [`density`]: analytic densities, Gaussian KDEs with analytic gradients,
//!   and exact simple-function push-forwards of piecewise-linear maps.
//! - [`polychaos`]: probabilists' Hermite machinery, Gauss-Hermite quadrature,
//!   intrusive Galerkin and pseudo-spectral polynomial chaos surrogates.
//! - [`maps`]: the exact quantity-of-interest maps and the piecewise-linear
//!   surrogate family behind one [`maps::QoiMap`] interface.
//! - [`forward`]: sampling and push-forward density estimation.
//! - [`inverse`]: updated densities, rejection sampling and the expected-ratio
//!   diagnostic.
//! - [`diagnostics`]: bound/Lipschitz tables and Monte Carlo norm estimators.
//! - [`harness`]: experiment configuration, end-to-end runs, report emission
//!   and the acceptance checks behind `uqdc verify`.

pub mod density;
pub mod diagnostics;
pub mod error;
pub mod forward;
pub mod harness;
pub mod inverse;
pub mod maps;
pub mod polychaos;
pub mod rng;

pub use density::{AnalyticDensity, Density, KdeDensity, SimpleFunctionDensity};
pub use error::{Error, Result};
pub use forward::{PushforwardEnsemble, SampleSet};
pub use inverse::{RejectionResult, UpdatedDensity};
pub use maps::{PiecewiseLinearMap, QoiMap};
pub use polychaos::PceSurrogate;
pub use rng::StreamSeed;
