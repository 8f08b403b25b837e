use super::{check_point, Density};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Values of `|q|` below this are treated as the singular point of the quintic push-forward.
pub const QUINTIC_SINGULAR_RADIUS: f64 = 1e-300;

/// Closed-form densities used as initial, observed and reference densities.
///
/// All families are defined on the whole space and vanish outside their
/// support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AnalyticDensity {
    Normal { mean: f64, std: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Density of `λ^5` for `λ ~ U(-1, 1)`: `q^{-4/5} / 10` on `[-1, 1]`.
    QuinticPushforward,
    /// Independent normals, one per coordinate (two coordinates at most).
    ProductNormal { means: Vec<f64>, stds: Vec<f64> },
}

impl AnalyticDensity {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        let d = Self::Normal { mean, std };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Self::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn product_normal(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        let d = Self::ProductNormal { means, stds };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad_normal = |m: f64, s: f64| !m.is_finite() || !s.is_finite() || s <= 0.0;
        match self {
            Self::Normal { mean, std } if bad_normal(*mean, *std) => Err(Error::Usage(format!(
                "normal needs finite mean and std > 0, got ({mean}, {std})"
            ))),
            Self::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && hi > lo) => Err(
                Error::Usage(format!("uniform needs finite lo < hi, got ({lo}, {hi})")),
            ),
            Self::ProductNormal { means, stds } => {
                if means.len() != stds.len() || !(1..=2).contains(&means.len()) {
                    return Err(Error::Usage(format!(
                        "product normal needs 1 or 2 (mean, std) pairs, got {} means and {} stds",
                        means.len(),
                        stds.len()
                    )));
                }
                match means.iter().zip(stds).find(|(m, s)| bad_normal(**m, **s)) {
                    Some((m, s)) => Err(Error::Usage(format!(
                        "product normal component needs std > 0, got ({m}, {s})"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Cumulative distribution function of a 1-D family.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::Normal { mean, std } => Ok(normal_cdf((x - mean) / std)),
            Self::Uniform { lo, hi } => Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
            Self::QuinticPushforward => {
                let q = x.clamp(-1.0, 1.0);
                Ok(0.5 + 0.5 * q.signum() * q.abs().powf(0.2))
            }
            Self::ProductNormal { means, stds } if means.len() == 1 => {
                Ok(normal_cdf((x - means[0]) / stds[0]))
            }
            Self::ProductNormal { .. } => Err(Error::Usage(
                "cdf is only defined for 1-D densities".into(),
            )),
        }
    }

    /// Mean and standard deviation of a 1-D family.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match self {
            Self::Normal { mean, std } => Some((*mean, *std)),
            Self::Uniform { lo, hi } => Some((0.5 * (lo + hi), (hi - lo) / 12f64.sqrt())),
            Self::QuinticPushforward => Some((0.0, (1.0f64 / 11.0).sqrt())),
            Self::ProductNormal { means, stds } if means.len() == 1 => Some((means[0], stds[0])),
            Self::ProductNormal { .. } => None,
        }
    }
}

pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

impl Density for AnalyticDensity {
    fn dim(&self) -> usize {
        match self {
            Self::ProductNormal { means, .. } => means.len(),
            _ => 1,
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.dim())?;
        Ok(match self {
            Self::Normal { mean, std } => normal_pdf((x[0] - mean) / std) / std,
            Self::Uniform { lo, hi } => {
                if (*lo..=*hi).contains(&x[0]) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Self::QuinticPushforward => {
                let q = x[0];
                if q.abs() < QUINTIC_SINGULAR_RADIUS {
                    return Err(Error::Domain(format!(
                        "quintic push-forward is singular at q = {q}"
                    )));
                }
                if q.abs() > 1.0 {
                    0.0
                } else {
                    0.1 * q.abs().powf(-0.8)
                }
            }
            Self::ProductNormal { means, stds } => x
                .iter()
                .zip(means.iter().zip(stds))
                .map(|(xi, (m, s))| normal_pdf((xi - m) / s) / s)
                .product(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn closed_form_values() {
        let n = AnalyticDensity::normal(0.0, 1.0).unwrap();
        assert_relative_eq!(n.eval(&[0.0]).unwrap(), 0.3989422804014327, max_relative = 1e-15);
        let u = AnalyticDensity::uniform(-1.0, 1.0).unwrap();
        assert_eq!(u.eval(&[0.5]).unwrap(), 0.5);
        assert_eq!(u.eval(&[1.5]).unwrap(), 0.0);
        let q = AnalyticDensity::QuinticPushforward;
        assert_eq!(q.eval(&[1.0]).unwrap(), 0.1);
        assert_eq!(q.eval(&[-1.0]).unwrap(), 0.1);
    }

    #[test]
    fn domain_errors() {
        let q = AnalyticDensity::QuinticPushforward;
        assert!(matches!(q.eval(&[0.0]), Err(Error::Domain(_))));
        assert!(matches!(q.eval(&[1e-301]), Err(Error::Domain(_))));
        let n = AnalyticDensity::normal(0.0, 1.0).unwrap();
        assert!(matches!(n.eval(&[f64::NAN]), Err(Error::Domain(_))));
        assert!(matches!(n.eval(&[0.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(AnalyticDensity::normal(0.0, 0.0).is_err());
        assert!(AnalyticDensity::uniform(1.0, 1.0).is_err());
        assert!(AnalyticDensity::product_normal(vec![0.0; 3], vec![1.0; 3]).is_err());
        assert!(AnalyticDensity::product_normal(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn normalisation_by_quadrature() {
        let n = AnalyticDensity::normal(0.3, 0.1).unwrap();
        let i = simpson(|x| n.eval(&[x]).unwrap(), -1.0, 1.6, 4000);
        assert!((i - 1.0).abs() < 1e-6, "{i}");
        let u = AnalyticDensity::uniform(-1.0, 3.0).unwrap();
        let i = simpson(|x| u.eval(&[x]).unwrap(), -1.0, 3.0, 400);
        assert!((i - 1.0).abs() < 1e-6, "{i}");
        // Improper at the origin: substitute q = s^5 on each half, which makes
        // the integrand the constant 1/2.
        let q = AnalyticDensity::QuinticPushforward;
        let half = simpson(|s: f64| q.eval(&[s.powi(5)]).unwrap() * 5.0 * s.powi(4), 1e-6, 1.0, 2000);
        assert!((2.0 * half - 1.0).abs() < 1e-4, "{half}");
    }

    #[test]
    fn product_normal_factorises() {
        let p = AnalyticDensity::product_normal(vec![0.0, 1.0], vec![0.1, 2.0]).unwrap();
        let a = AnalyticDensity::normal(0.0, 0.1).unwrap().eval(&[0.05]).unwrap();
        let b = AnalyticDensity::normal(1.0, 2.0).unwrap().eval(&[-0.5]).unwrap();
        assert_relative_eq!(p.eval(&[0.05, -0.5]).unwrap(), a * b, max_relative = 1e-15);
    }

    #[test]
    fn cdfs() {
        let n = AnalyticDensity::normal(1.0, 0.1).unwrap();
        assert_relative_eq!(n.cdf(1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(n.cdf(1.1).unwrap(), 0.8413447460685429, epsilon = 1e-12);
        let q = AnalyticDensity::QuinticPushforward;
        assert_eq!(q.cdf(-2.0).unwrap(), 0.0);
        assert_eq!(q.cdf(0.0).unwrap(), 0.5);
        assert_relative_eq!(q.cdf(0.03125).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn serde_descriptor() {
        let d: AnalyticDensity =
            serde_json::from_str(r#"{"family":"normal","mean":1.0,"std":0.1}"#).unwrap();
        assert_eq!(d, AnalyticDensity::normal(1.0, 0.1).unwrap());
    }
}
