use super::hermite::{factorial, hermite_table};
use super::quadrature::gauss_hermite;
use super::surrogate::{PceSurrogate, Standardization};
use crate::error::{Error, Result};
use crate::maps::QoiMap;
use rayon::prelude::*;

/// Multi-indices of total degree at most `n`, graded, first coordinate
/// descending within a grade.
pub fn total_degree_indices(dim: usize, n: usize) -> Vec<Vec<usize>> {
    fn fill(dim: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(budget);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in (0..=budget).rev() {
            prefix.push(i);
            fill(dim, budget - i, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=n {
        fill(dim, degree, &mut Vec::new(), &mut out);
    }
    out
}

/// Non-intrusive pseudo-spectral projection on a tensor Gauss-Hermite grid:
/// `c_α = Σ_g w_g Q(μ + σ ζ_g) Π_d He_{α_d}(ζ_{g,d}) / Π_d α_d!` for `|α| ≤ n`.
///
/// Map evaluations may run in parallel; the reduction follows the fixed
/// lexicographic order of the grid.
pub fn pseudo_spectral_project(
    map: &dyn QoiMap,
    truncation: usize,
    npts_per_dim: usize,
    standardization: &[Standardization],
) -> Result<PceSurrogate> {
    let dim = standardization.len();
    if dim == 0 || dim != map.dim() {
        return Err(Error::Usage(format!(
            "standardization has {dim} entries, map {} expects {}",
            map.label(),
            map.dim()
        )));
    }
    if npts_per_dim < truncation + 1 {
        return Err(Error::Usage(format!(
            "{npts_per_dim} quadrature points per dimension cannot resolve order {truncation}"
        )));
    }
    let rule = gauss_hermite(npts_per_dim)?;
    let grid_size = npts_per_dim.pow(dim as u32);
    let node_index = |g: usize| -> Vec<usize> {
        let mut rest = g;
        let mut idx = vec![0; dim];
        for d in (0..dim).rev() {
            idx[d] = rest % npts_per_dim;
            rest /= npts_per_dim;
        }
        idx
    };

    let evaluated: Vec<Result<f64>> = (0..grid_size)
        .into_par_iter()
        .map(|g| {
            let idx = node_index(g);
            let lambda: Vec<f64> = idx
                .iter()
                .zip(standardization)
                .map(|(&i, s)| s.mean + s.std * rule.nodes()[i])
                .collect();
            map.eval(&lambda).map_err(|e| Error::MapEvaluation {
                location: format!("quadrature node {idx:?} (λ = {lambda:?})"),
                source: Box::new(e),
            })
        })
        .collect();
    // first failure in grid order, independent of scheduling
    let values = evaluated.into_iter().collect::<Result<Vec<f64>>>()?;

    let basis: Vec<Vec<f64>> = rule
        .nodes()
        .iter()
        .map(|&x| hermite_table(truncation, x))
        .collect();
    let terms = total_degree_indices(dim, truncation)
        .into_iter()
        .map(|alpha| {
            let mut acc = 0.0;
            for (g, q) in values.iter().enumerate() {
                let idx = node_index(g);
                let mut w = *q;
                for (d, &i) in idx.iter().enumerate() {
                    w *= rule.weights()[i] * basis[i][alpha[d]];
                }
                acc += w;
            }
            let norm: f64 = alpha.iter().map(|&a| factorial(a)).product();
            (alpha, acc / norm)
        })
        .collect();
    PceSurrogate::new(truncation, standardization.to_vec(), terms)
}
