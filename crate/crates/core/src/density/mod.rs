//! Probability densities as evaluable objects.

mod analytic;
mod kde;
mod simple;
mod transform;

pub use analytic::AnalyticDensity;
pub use kde::{BandwidthRule, KdeDensity};
pub use simple::{pwl_pushforward_exact, SimpleFunctionDensity};

use crate::error::{Error, Result};
use std::fmt::Debug;

/// A probability density on a Euclidean domain of dimension [`Density::dim`].
///
/// Densities are immutable after construction; evaluation is pure and may be
/// called concurrently.
pub trait Density: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// Evaluates a one-dimensional density at many scalar points.
    fn eval_scalars(&self, xs: &[f64]) -> Result<Vec<f64>> {
        require_scalar(self.dim())?;
        xs.iter().map(|&x| self.eval(&[x])).collect()
    }
}

pub(crate) fn require_scalar(dim: usize) -> Result<()> {
    if dim == 1 {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "scalar batch evaluation needs a 1-D density, got dimension {dim}"
        )))
    }
}

pub(crate) fn check_point(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Domain(format!(
            "point has dimension {}, density has dimension {dim}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite coordinate {v}")));
    }
    Ok(())
}
