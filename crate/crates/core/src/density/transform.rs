//! One-dimensional box-moment fast Gauss transform.
//!
//! Evaluates `G(x) = Σ_c exp(-(x - c)² / δ²)` and `dG/dx` for sorted sources.
//! Sources are grouped into boxes of width `δ/2` around a box centre `s`, so
//! every scaled offset `u = (c - s)/δ` satisfies `|u| ≤ 1/4`. With
//! `t = (x - s)/δ`,
//!
//! ```text
//! exp(-(t - u)²) = exp(-t²) Σ_k (2t)^k / k! · u^k exp(-u²)
//! ```
//!
//! so each box reduces to `TERMS` moments. Boxes farther than `CUTOFF·δ` are
//! skipped; their contribution per source is below `exp(-60)`.

pub(crate) const TERMS: usize = 20;
const BOX_WIDTH: f64 = 0.5;
const CUTOFF: f64 = 8.0;

#[derive(Debug, Clone)]
pub(crate) struct GaussTransform {
    delta: f64,
    box_centers: Vec<f64>,
    moments: Vec<[f64; TERMS]>,
}

impl GaussTransform {
    /// `sorted` must be ascending and finite.
    pub(crate) fn new(sorted: &[f64], delta: f64) -> Self {
        let width = BOX_WIDTH * delta;
        let mut box_centers = Vec::new();
        let mut moments = Vec::new();
        let mut start = 0;
        while start < sorted.len() {
            let left = sorted[start];
            let end = start + sorted[start..].partition_point(|&c| c <= left + width);
            let s = left + 0.5 * width;
            let mut m = [0.0; TERMS];
            for &c in &sorted[start..end] {
                let u = (c - s) / delta;
                let mut p = (-u * u).exp();
                for mk in m.iter_mut() {
                    *mk += p;
                    p *= u;
                }
            }
            box_centers.push(s);
            moments.push(m);
            start = end;
        }
        Self {
            delta,
            box_centers,
            moments,
        }
    }

    /// Returns `(G(x), dG/dx)`, or `None` if no box lies within the cutoff.
    pub(crate) fn sum(&self, x: f64) -> Option<(f64, f64)> {
        let reach = (CUTOFF + BOX_WIDTH) * self.delta;
        let lo = self.box_centers.partition_point(|&s| s < x - reach);
        let hi = self.box_centers.partition_point(|&s| s <= x + reach);
        if lo == hi {
            return None;
        }
        let mut value = 0.0;
        let mut slope = 0.0;
        for (s, m) in self.box_centers[lo..hi].iter().zip(&self.moments[lo..hi]) {
            let t = (x - s) / self.delta;
            let two_t = 2.0 * t;
            // s0 = Σ a_k M_k, s1 = Σ a_{k-1} M_k with a_k = (2t)^k / k!
            let mut a = 1.0;
            let mut s0 = m[0];
            let mut s1 = 0.0;
            for (k, mk) in m.iter().enumerate().skip(1) {
                s1 += a * mk;
                a *= two_t / k as f64;
                s0 += a * mk;
            }
            let g = (-t * t).exp();
            value += g * s0;
            slope += g * (2.0 * s1 - two_t * s0);
        }
        Some((value, slope / self.delta))
    }
}
