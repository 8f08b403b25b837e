use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Hermite rule for the standard normal weight; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, w)| w * f(x)).sum()
    }
}

/// Orthonormal Hermite values `p_0(x), ..., p_{n}(x)` with `p_k = He_k / √(k!)`.
fn orthonormal(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let next = (x * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
        p.push(next);
    }
    p
}

/// `npts`-point rule via the Golub-Welsch eigenproblem of the Jacobi matrix
/// (zero diagonal, off-diagonals `√k`).
///
/// Eigenvalues are polished by Newton's method on the orthonormal recurrence
/// and weights come from the Christoffel function `1 / Σ p_k(x)²`, which is
/// more accurate than squared eigenvector components for larger rules.
pub fn gauss_hermite(npts: usize) -> Result<QuadratureRule> {
    if npts == 0 {
        return Err(Error::Usage("Gauss-Hermite rule needs at least one point".into()));
    }
    let jacobi = DMatrix::from_fn(npts, npts, |r, c| {
        if r.abs_diff(c) == 1 {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let n = npts;
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let p = orthonormal(n, *x);
            let slope = (n as f64).sqrt() * p[n - 1];
            if slope == 0.0 {
                break;
            }
            *x -= p[n] / slope;
        }
    }
    // Enforce the exact symmetry of the rule.
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| 1.0 / orthonormal(n - 1, x).iter().map(|p| p * p).sum::<f64>())
        .collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(QuadratureRule { nodes, weights })
}
