use super::{check_point, Density};
use crate::error::{Error, Result};
use crate::maps::PiecewiseLinearMap;

/// Piecewise-constant density: `values[i]` on `[breakpoints[i], breakpoints[i + 1])`,
/// zero outside `[breakpoints[0], breakpoints[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunctionDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl SimpleFunctionDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::Usage(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Usage("breakpoints must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Usage("simple-function values must be finite and nonnegative".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sum of interval length times value.
    pub fn integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[1] - w[0]) * v)
            .sum()
    }

    fn value_at(&self, x: f64) -> f64 {
        let last = self.breakpoints.len() - 1;
        if x < self.breakpoints[0] || x > self.breakpoints[last] {
            return 0.0;
        }
        let i = self.breakpoints.partition_point(|&b| b <= x).min(last);
        self.values[i - 1]
    }
}

impl Density for SimpleFunctionDensity {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_point(x, 1)?;
        Ok(self.value_at(x[0]))
    }
}

/// Exact push-forward of the uniform density on the knot span through a
/// strictly monotone piecewise-linear map.
///
/// On the image of a segment with slope `s` the density is `1 / (span · |s|)`;
/// the breakpoints are the images of the knots.
pub fn pwl_pushforward_exact(map: &PiecewiseLinearMap) -> Result<SimpleFunctionDensity> {
    let knots = map.knots();
    let values = map.values();
    let span = knots[knots.len() - 1] - knots[0];
    let slopes: Vec<f64> = knots
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
        .collect();
    if slopes.contains(&0.0) {
        return Err(Error::Unsupported("piecewise-linear map has a zero-slope segment".into()));
    }
    let increasing = slopes[0] > 0.0;
    if slopes.iter().any(|s| (*s > 0.0) != increasing) {
        return Err(Error::Unsupported("piecewise-linear map is not monotone".into()));
    }
    let mut breakpoints = values.to_vec();
    let mut heights: Vec<f64> = slopes.iter().map(|s| 1.0 / (span * s.abs())).collect();
    if !increasing {
        breakpoints.reverse();
        heights.reverse();
    }
    SimpleFunctionDensity::new(breakpoints, heights)
}
