use super::hermite::{factorial, TripleProductTensor};
use super::surrogate::{PceSurrogate, Standardization};
use crate::error::{Error, Result};

/// Intrusive stochastic Galerkin solver for `dy/dt = -λ y`, `y(0) = 1`, with a
/// normal decay rate `λ = mean + std · ζ`.
///
/// Projecting onto `He_k` gives the coupled system
/// `dy_k/dt = -(1/k!) Σ_{i,j ≤ n} λ_i e_ijk y_j`, integrated with classical RK4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinDecay {
    pub rate_mean: f64,
    pub rate_std: f64,
}

impl Default for GalerkinDecay {
    fn default() -> Self {
        Self {
            rate_mean: 0.0,
            rate_std: 1.0,
        }
    }
}

impl GalerkinDecay {
    pub fn solve(&self, truncation: usize, t_end: f64, dt: f64) -> Result<PceSurrogate> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Integration(format!("time step must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::Integration(format!("end time must be nonnegative, got {t_end}")));
        }
        let standardization = Standardization::new(self.rate_mean, self.rate_std)?;
        let n = truncation;
        let tensor = TripleProductTensor::new(n);
        let rate = [self.rate_mean, self.rate_std];
        // Row k of the linear operator.
        let operator: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                (0..=n)
                    .map(|j| {
                        let coupling: f64 = rate
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i <= n)
                            .map(|(i, l)| l * tensor.get(i, j, k))
                            .sum();
                        -coupling / factorial(k)
                    })
                    .collect()
            })
            .collect();
        let rhs = |y: &[f64]| -> Vec<f64> {
            operator
                .iter()
                .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
                .collect()
        };

        let mut y = vec![0.0; n + 1];
        y[0] = 1.0;
        let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = t_end / steps as f64;
            let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
                y.iter().zip(k).map(|(a, b)| a + s * b).collect()
            };
            for step in 0..steps {
                let k1 = rhs(&y);
                let k2 = rhs(&axpy(&y, &k1, 0.5 * h));
                let k3 = rhs(&axpy(&y, &k2, 0.5 * h));
                let k4 = rhs(&axpy(&y, &k3, h));
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Integration(format!(
                        "non-finite state after step {} of {steps}",
                        step + 1
                    )));
                }
            }
        }
        PceSurrogate::new(
            n,
            vec![standardization],
            y.into_iter().enumerate().map(|(i, c)| (vec![i], c)).collect(),
        )
    }
}

/// Order-`truncation` chaos coefficients of `y(t_end)` for a standard normal decay rate.
pub fn galerkin_ode_solve(truncation: usize, t_end: f64, dt: f64) -> Result<PceSurrogate> {
    GalerkinDecay::default().solve(truncation, t_end, dt)
}
