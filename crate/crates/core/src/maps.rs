//! Quantity-of-interest maps: the exact maps of the three experiments and the
//! piecewise-linear surrogate family.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// A deterministic parameter-to-QoI map with scalar output.
pub trait QoiMap: Send + Sync + fmt::Debug {
    /// Parameter dimension.
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<f64>;

    fn label(&self) -> String;
}

impl<M: QoiMap + ?Sized> QoiMap for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        (**self).eval(x)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

pub(crate) fn check_dim(x: &[f64], dim: usize) -> Result<()> {
    if x.len() == dim {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "map expects {dim} parameters, got {}",
            x.len()
        )))
    }
}

/// `y(0.5) = exp(-0.5 λ)` for `dy/dt = -λ y`, `y(0) = 1`.
pub fn ode_exact_map(lambda: f64) -> f64 {
    (-0.5 * lambda).exp()
}

/// `λ^5`.
pub fn quintic_map(lambda: f64) -> f64 {
    lambda.powi(5)
}

/// Average of `sin(λ1 π x) cos(λ2 π y)` over `[0.4, 0.6]²`.
pub fn pde_exact_qoi(l1: f64, l2: f64) -> f64 {
    PdeAverageQoi::default().value(l1, l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeDecayMap;

impl QoiMap for OdeDecayMap {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, 1)?;
        Ok(ode_exact_map(x[0]))
    }

    fn label(&self) -> String {
        "exact".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QuinticMap;

impl QoiMap for QuinticMap {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, 1)?;
        Ok(quintic_map(x[0]))
    }

    fn label(&self) -> String {
        "exact".into()
    }
}

/// Average of the manufactured solution `u = sin(λ1 π x) cos(λ2 π y)` over the
/// rectangle `[a, b] × [c, d]`, in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeAverageQoi {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for PdeAverageQoi {
    fn default() -> Self {
        Self {
            a: 0.4,
            b: 0.6,
            c: 0.4,
            d: 0.6,
        }
    }
}

/// Below this `|λ|` the factors switch to their Taylor expansions.
const SERIES_THRESHOLD: f64 = 1e-8;

impl PdeAverageQoi {
    pub fn value(&self, l1: f64, l2: f64) -> f64 {
        self.sine_factor(l1) * self.cosine_factor(l2)
    }

    /// `(1/(b-a)) ∫_a^b sin(λ π x) dx`, written as `sin(w(a+b)/2) sinc(w(b-a)/2)` to avoid cancellation.
    fn sine_factor(&self, l: f64) -> f64 {
        let w = l * PI;
        (0.5 * w * (self.a + self.b)).sin() * sinc(0.5 * w * (self.b - self.a))
    }

    /// `(1/(d-c)) ∫_c^d cos(λ π y) dy`
    fn cosine_factor(&self, l: f64) -> f64 {
        let w = l * PI;
        (0.5 * w * (self.c + self.d)).cos() * sinc(0.5 * w * (self.d - self.c))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl QoiMap for PdeAverageQoi {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, 2)?;
        Ok(self.value(x[0], x[1]))
    }

    fn label(&self) -> String {
        "exact".into()
    }
}

/// Continuous piecewise-linear interpolant through `(knots[k], values[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearMap {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearMap {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Usage(format!(
                "need at least two knots with one value each, got {} knots and {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Usage("knots must be finite and strictly increasing".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let last = self.knots.len() - 1;
        if !(self.knots[0]..=self.knots[last]).contains(&x) {
            return Err(Error::Domain(format!(
                "{x} outside knot span [{}, {}]",
                self.knots[0], self.knots[last]
            )));
        }
        if x == self.knots[last] {
            return Ok(self.values[last]);
        }
        let i = self.knots.partition_point(|&k| k <= x) - 1;
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        if x == x0 {
            return Ok(y0);
        }
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

impl QoiMap for PiecewiseLinearMap {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, 1)?;
        self.interpolate(x[0])
    }

    fn label(&self) -> String {
        format!("pwl({})", self.knots.len() - 2)
    }
}

/// Interpolant of `λ^5` at the `n + 2` equispaced knots `-1 + 2(k-1)/(n+1)`.
pub fn pwl_surrogate(n: usize) -> Result<PiecewiseLinearMap> {
    if n == 0 {
        return Err(Error::Usage("piecewise-linear surrogate needs n >= 1 interior knots".into()));
    }
    let knots: Vec<f64> = (0..n + 2)
        .map(|k| -1.0 + 2.0 * k as f64 / (n + 1) as f64)
        .collect();
    let values = knots.iter().map(|&k| quintic_map(k)).collect();
    PiecewiseLinearMap::new(knots, values)
}

/// A map backed by a closure; handy for identity and linear test maps.
pub struct FnMap<F> {
    dim: usize,
    label: String,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            dim,
            label: label.into(),
            f,
        }
    }
}

impl<F> fmt::Debug for FnMap<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMap")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl<F> QoiMap for FnMap<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, self.dim)?;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Domain(format!("{} returned {y} at {x:?}", self.label)))
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        step(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    /// Oracle: nested adaptive Simpson of the manufactured solution.
    fn pde_quadrature(l1: f64, l2: f64) -> f64 {
        let inner = |y: f64| adaptive_simpson(&|x: f64| (l1 * PI * x).sin() * (l2 * PI * y).cos(), 0.4, 0.6, 1e-14);
        adaptive_simpson(&inner, 0.4, 0.6, 1e-14) / 0.04
    }

    #[test]
    fn ode_values() {
        assert_eq!(ode_exact_map(0.0), 1.0);
        assert_relative_eq!(ode_exact_map(2.0), 0.36787944117144233, max_relative = 1e-15);
        assert_relative_eq!(ode_exact_map(-2.0), std::f64::consts::E, max_relative = 1e-15);
    }

    #[test]
    fn quintic_values() {
        assert_eq!(quintic_map(0.0), 0.0);
        assert_eq!(quintic_map(1.0), 1.0);
        assert_eq!(quintic_map(0.5), 0.03125);
    }

    #[test]
    fn pde_special_values() {
        assert_eq!(pde_exact_qoi(0.0, 0.7), 0.0);
        assert_eq!(pde_exact_qoi(0.0, -3.0), 0.0);
        let v = pde_exact_qoi(1.0, 0.0);
        assert_relative_eq!(v, 0.9836316430834661, max_relative = 1e-12);
        assert_relative_eq!(v, pde_quadrature(1.0, 0.0), max_relative = 1e-10);
    }

    #[test]
    fn pde_series_is_continuous_across_threshold() {
        for l in [1e-8, -1e-8, 3e-8, 1e-8 / (0.1 * PI), 1e-8 / (0.5 * PI)] {
            let series = PdeAverageQoi::default();
            let below = series.value(l * 0.999_999, 0.3);
            let above = series.value(l * 1.000_001, 0.3);
            assert_relative_eq!(below, above, max_relative = 3e-6);
            let c_below = series.value(0.3, l * 0.999_999);
            let c_above = series.value(0.3, l * 1.000_001);
            assert_relative_eq!(c_below, c_above, max_relative = 1e-12);
        }
    }

    #[test]
    fn pde_matches_quadrature_at_random_points() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        for _ in 0..50 {
            let (l1, l2) = (next(), next());
            let exact = pde_exact_qoi(l1, l2);
            let quad = pde_quadrature(l1, l2);
            assert!((exact - quad).abs() <= 1e-8 * quad.abs().max(1e-3), "{l1} {l2}: {exact} vs {quad}");
        }
    }

    #[test]
    fn pwl_first_surrogate() {
        let s = pwl_surrogate(1).unwrap();
        assert_eq!(s.knots(), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.interpolate(0.5).unwrap(), 0.5);
        assert!(pwl_surrogate(0).is_err());
        assert!(matches!(s.interpolate(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn pwl_central_slope() {
        let s = pwl_surrogate(3).unwrap();
        let k = s.knots();
        let v = s.values();
        assert_eq!((v[3] - v[2]) / (k[3] - k[2]), 0.0625);
    }

    #[test]
    fn pwl_knot_layout_and_interpolation() {
        for n in [1, 2, 4, 7, 16, 31] {
            let s = pwl_surrogate(n).unwrap();
            assert_eq!(s.knots().len(), n + 2);
            for (k, &x) in s.knots().iter().enumerate() {
                assert_eq!(x, -1.0 + 2.0 * k as f64 / (n + 1) as f64);
                assert_eq!(s.eval(&[x]).unwrap(), x.powi(5));
            }
            assert!(s.values().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn pwl_l1_error_shrinks() {
        let l1 = |n: usize| {
            let s = pwl_surrogate(n).unwrap();
            let mut state = 42u64;
            let mut acc = 0.0;
            for _ in 0..20_000 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let x = (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
                acc += (s.interpolate(x).unwrap() - quintic_map(x)).abs();
            }
            acc / 20_000.0
        };
        assert!(l1(16) * 10.0 < l1(1), "{} vs {}", l1(16), l1(1));
    }

    #[test]
    fn dimension_checked() {
        assert!(matches!(OdeDecayMap.eval(&[1.0, 2.0]), Err(Error::Usage(_))));
        assert!(matches!(PdeAverageQoi::default().eval(&[1.0]), Err(Error::Usage(_))));
        let f = FnMap::new(1, "bad", |x: &[f64]| 1.0 / x[0]);
        assert!(matches!(f.eval(&[0.0]), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn pde_odd_in_first_even_in_second(l1 in -3.0f64..3.0, l2 in -3.0f64..3.0) {
            let q = pde_exact_qoi(l1, l2);
            prop_assert_eq!(pde_exact_qoi(-l1, l2), -q);
            prop_assert!((pde_exact_qoi(l1, -l2) - q).abs() <= 1e-15 * q.abs().max(1e-300));
            prop_assert!(q.abs() <= 1.0);
        }

        #[test]
        fn maps_are_deterministic(l in -1.0f64..1.0) {
            let s = pwl_surrogate(5).unwrap();
            prop_assert_eq!(s.eval(&[l]).unwrap().to_bits(), s.eval(&[l]).unwrap().to_bits());
            prop_assert_eq!(ode_exact_map(l).to_bits(), ode_exact_map(l).to_bits());
        }
    }
}
