//! Bound and Lipschitz statistics of push-forward estimates, Monte Carlo norm
//! estimators, and the tables/curves they feed.

use crate::density::{Density, KdeDensity};
use crate::error::{Error, Result};
use crate::forward::{PushforwardEnsemble, SampleSet};
use crate::rng::StreamSeed;
use rand::distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Neumaier-compensated sum; the result does not depend on how the inputs
/// were computed, only on their order.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// `B_{n,m}`: the largest KDE value over the ensemble's own outputs.
pub fn density_bound(pf: &PushforwardEnsemble) -> Result<f64> {
    Ok(max_of(&pf.density_at_outputs()?))
}

/// `L_{n,m}`: the largest KDE slope magnitude over the ensemble's own outputs.
pub fn lipschitz_estimate(pf: &PushforwardEnsemble) -> Result<f64> {
    let (_, slopes) = pf.kde().eval_with_gradient_scalars(pf.outputs())?;
    Ok(slopes.iter().fold(0.0, |a, s| a.max(s.abs())))
}

/// Both statistics from one batched evaluation.
pub fn bound_and_lipschitz(pf: &PushforwardEnsemble) -> Result<(f64, f64)> {
    let (values, slopes) = pf.kde().eval_with_gradient_scalars(pf.outputs())?;
    Ok((max_of(&values), slopes.iter().fold(0.0, |a, s| a.max(s.abs()))))
}

/// Lipschitz estimate on `points` evenly spaced over `[lo, hi]` instead of at
/// the KDE centers.
pub fn lipschitz_dense(kde: &KdeDensity, lo: f64, hi: f64, points: usize) -> Result<f64> {
    if points < 2 || !(hi > lo) {
        return Err(Error::Usage(format!("dense grid of {points} points on [{lo}, {hi}]")));
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let (_, slopes) = kde.eval_with_gradient_scalars(&grid)?;
    Ok(slopes.iter().fold(0.0, |a, s| a.max(s.abs())))
}

fn check_order(r: f64) -> Result<()> {
    if r.is_finite() && r >= 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("norm order must be at least 1, got {r}")))
    }
}

/// Uniform Monte Carlo points over `region`, the shared grid for [`lr_norm_data`].
pub fn region_samples(region: (f64, f64), n: usize, seed: StreamSeed) -> Result<Vec<f64>> {
    let (lo, hi) = region;
    if n == 0 || !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Usage(format!("region [{lo}, {hi}] with {n} samples")));
    }
    let u = Uniform::new(lo, hi).map_err(|e| Error::Usage(e.to_string()))?;
    Ok(u.sample_iter(seed.rng()).take(n).collect())
}

/// `(|D_c| · mean |f - g|^r)^{1/r}` over values at uniform points of `D_c`.
pub fn lr_norm_from_values(f: &[f64], g: &[f64], r: f64, width: f64) -> Result<f64> {
    check_order(r)?;
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::Usage(format!("{} vs {} norm values", f.len(), g.len())));
    }
    let mean = stable_sum(f.iter().zip(g).map(|(a, b)| (a - b).abs().powf(r))) / f.len() as f64;
    Ok((width * mean).powf(1.0 / r))
}

/// Monte Carlo `L^r(region)` distance between two 1-D densities.
pub fn lr_norm_data(
    f: &dyn Density,
    g: &dyn Density,
    r: f64,
    region: (f64, f64),
    n: usize,
    seed: StreamSeed,
) -> Result<f64> {
    check_order(r)?;
    let xs = region_samples(region, n, seed)?;
    lr_norm_from_values(&f.eval_scalars(&xs)?, &g.eval_scalars(&xs)?, r, region.1 - region.0)
}

/// `(mean |f - g|^p)^{1/p}` over values at draws from the initial measure.
pub fn lp_norm_values(f: &[f64], g: &[f64], p: f64) -> Result<f64> {
    lr_norm_from_values(f, g, p, 1.0)
}

/// Monte Carlo `L^p` distance with respect to the initial probability measure.
pub fn lp_norm_param<F, G>(f: F, g: G, p: f64, samples: &SampleSet) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    check_order(p)?;
    let idx: Vec<usize> = (0..samples.len()).collect();
    let fv = idx.par_iter().map(|&i| f(samples.point(i))).collect::<Result<Vec<_>>>()?;
    let gv = idx.par_iter().map(|&i| g(samples.point(i))).collect::<Result<Vec<_>>>()?;
    lp_norm_values(&fv, &gv, p)
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = stable_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = stable_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    (mean, var.sqrt())
}

/// Rows indexed by sample size `m`, columns by surrogate order `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub sizes: Vec<usize>,
    pub orders: Vec<usize>,
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
}

impl BoundTable {
    /// Aggregates per-replicate tables `values[rep][row][col]`.
    pub fn from_replicates(sizes: Vec<usize>, orders: Vec<usize>, values: &[Vec<Vec<f64>>]) -> Self {
        let (mean, std) = aggregate_grid(sizes.len(), orders.len(), values);
        Self { sizes, orders, mean, std }
    }

    pub fn get(&self, m: usize, n: usize) -> Option<f64> {
        let i = self.sizes.iter().position(|&s| s == m)?;
        let j = self.orders.iter().position(|&o| o == n)?;
        Some(self.mean[i][j])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .sizes
            .iter()
            .zip(&self.mean)
            .map(|(m, r)| (vec![m.to_string()], r.clone()))
            .collect();
        write_table(path, &["m\\n"], &self.orders, rows)
    }
}

/// Per-order values of one norm estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCurve {
    /// What the error is measured against (`exact-kde`, `analytic`, a case name, ...).
    pub reference: String,
    /// `data` for norms on a data-space region, `param` for the initial measure.
    pub space: String,
    pub order: f64,
    pub region: Option<(f64, f64)>,
    pub samples: usize,
    pub seed: u64,
    pub orders: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ErrorCurve {
    pub fn get(&self, n: usize) -> Option<f64> {
        let j = self.orders.iter().position(|&o| o == n)?;
        Some(self.mean[j])
    }

    pub fn write_csv(path: &Path, first: &str, orders: &[usize], curves: &[ErrorCurve]) -> Result<()> {
        let rows = curves
            .iter()
            .map(|c| (vec![c.reference.clone(), c.order.to_string()], c.mean.clone()))
            .collect();
        write_table(path, &["reference", first], orders, rows)
    }
}

/// Mean and std over replicates of a `rows × cols` grid.
pub fn aggregate_grid(rows: usize, cols: usize, values: &[Vec<Vec<f64>>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut mean = vec![vec![0.0; cols]; rows];
    let mut std = vec![vec![0.0; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            let cell: Vec<f64> = values.iter().map(|rep| rep[i][j]).collect();
            (mean[i][j], std[i][j]) = mean_std(&cell);
        }
    }
    (mean, std)
}

/// Writes a table whose header is `labels..., orders...`.
pub fn write_table(
    path: &Path,
    labels: &[&str],
    orders: &[usize],
    rows: Vec<(Vec<String>, Vec<f64>)>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    header.extend(orders.iter().map(|n| n.to_string()));
    w.write_record(&header)?;
    for (label, values) in rows {
        let mut row = label;
        row.extend(values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}
