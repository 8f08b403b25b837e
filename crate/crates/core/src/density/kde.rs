use super::transform::GaussTransform;
use super::{check_point, require_scalar, Density};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Bandwidth selection rule for [`KdeDensity::fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `h_d = σ̂_d · m^(-1/(d+4))` with `σ̂_d` the per-dimension sample standard
    /// deviation (n - 1 denominator).
    #[default]
    Scott,
}

impl BandwidthRule {
    pub fn factor(&self, m: usize, dim: usize) -> f64 {
        match self {
            Self::Scott => (m as f64).powf(-1.0 / (dim as f64 + 4.0)),
        }
    }
}

/// Gaussian kernel density estimate with a diagonal bandwidth.
///
/// Centers are stored sorted (lexicographically for `dim > 1`), so the
/// estimate is bitwise independent of the order samples were supplied in.
/// One-dimensional estimates evaluate through a fast Gauss transform.
#[derive(Debug, Clone)]
pub struct KdeDensity {
    dim: usize,
    centers: Vec<f64>,
    bandwidth: Vec<f64>,
    transform: Option<GaussTransform>,
}

impl KdeDensity {
    /// Fits a KDE to `points` (row-major, `dim` coordinates per point).
    pub fn fit(points: &[f64], dim: usize, rule: BandwidthRule) -> Result<Self> {
        let m = count_points(points, dim)?;
        if m < 2 {
            return Err(Error::DegenerateSamples(format!(
                "need at least 2 samples, got {m}"
            )));
        }
        let factor = rule.factor(m, dim);
        let bandwidth = (0..dim)
            .map(|d| {
                let sd = sample_std(points.iter().skip(d).step_by(dim).copied(), m);
                if sd > 0.0 && sd.is_finite() {
                    Ok(sd * factor)
                } else {
                    Err(Error::DegenerateSamples(format!(
                        "sample standard deviation {sd} in dimension {d}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_bandwidth(points, dim, bandwidth)
    }

    /// Builds a KDE with an explicit per-dimension bandwidth (any `m ≥ 1`).
    pub fn with_bandwidth(points: &[f64], dim: usize, bandwidth: Vec<f64>) -> Result<Self> {
        let m = count_points(points, dim)?;
        if m == 0 {
            return Err(Error::Usage("KDE needs at least one center".into()));
        }
        if bandwidth.len() != dim || bandwidth.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Usage(format!(
                "bandwidth must have {dim} positive entries, got {bandwidth:?}"
            )));
        }
        if let Some(v) = points.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite KDE center {v}")));
        }
        let mut rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let centers: Vec<f64> = rows.concat();
        let transform = (dim == 1).then(|| GaussTransform::new(&centers, SQRT_2 * bandwidth[0]));
        Ok(Self {
            dim,
            centers,
            bandwidth,
            transform,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    /// Sorted centers, row-major.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    fn norm(&self) -> f64 {
        let h: f64 = self.bandwidth.iter().product();
        self.len() as f64 * h * (2.0 * PI).powf(0.5 * self.dim as f64)
    }

    /// Exact analytic gradient of the Gaussian mixture at `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(x, self.dim)?;
        if self.dim == 1 {
            return Ok(vec![self.value_and_slope(x[0]).1]);
        }
        Ok(self.direct(x).1)
    }

    /// Density values and derivatives of a 1-D estimate at many points.
    pub fn eval_with_gradient_scalars(&self, xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        require_scalar(self.dim)?;
        check_all_finite(xs)?;
        Ok(xs.par_iter().map(|&x| self.value_and_slope(x)).unzip())
    }

    /// Brute-force sum over every center; the reference for the fast path.
    pub fn eval_direct(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.dim)?;
        Ok(self.direct(x).0)
    }

    fn value_and_slope(&self, x: f64) -> (f64, f64) {
        let ft = self.transform.as_ref().expect("1-D KDE carries a transform");
        match ft.sum(x) {
            Some((g, dg)) => {
                let n = self.norm();
                (g / n, dg / n)
            }
            None => {
                let (v, d) = self.direct(&[x]);
                (v, d[0])
            }
        }
    }

    fn direct(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim];
        for c in self.centers.chunks_exact(self.dim) {
            let mut q = 0.0;
            for ((xi, ci), h) in x.iter().zip(c).zip(&self.bandwidth) {
                let z = (xi - ci) / h;
                q += z * z;
            }
            let e = (-0.5 * q).exp();
            value += e;
            for (((g, xi), ci), h) in grad.iter_mut().zip(x).zip(c).zip(&self.bandwidth) {
                *g -= (xi - ci) / (h * h) * e;
            }
        }
        let n = self.norm();
        grad.iter_mut().for_each(|g| *g /= n);
        (value / n, grad)
    }
}

impl Density for KdeDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.dim)?;
        if self.dim == 1 {
            Ok(self.value_and_slope(x[0]).0)
        } else {
            Ok(self.direct(x).0)
        }
    }

    fn eval_scalars(&self, xs: &[f64]) -> Result<Vec<f64>> {
        require_scalar(self.dim)?;
        check_all_finite(xs)?;
        Ok(xs.par_iter().map(|&x| self.value_and_slope(x).0).collect())
    }
}

fn count_points(points: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::Usage(format!(
            "{} coordinates do not form points of dimension {dim}",
            points.len()
        )));
    }
    Ok(points.len() / dim)
}

fn check_all_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::Domain(format!("non-finite query point {v}"))),
        None => Ok(()),
    }
}

fn sample_std(values: impl Iterator<Item = f64> + Clone, m: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / m as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (m as f64 - 1.0)).sqrt()
}
