//! Probabilists' Hermite polynomial chaos: basis evaluation, Gauss-Hermite
//! quadrature, triple products, and the intrusive (Galerkin) and
//! non-intrusive (pseudo-spectral) construction routes.

mod galerkin;
mod hermite;
mod projection;
mod quadrature;
mod surrogate;

pub use galerkin::{galerkin_ode_solve, GalerkinDecay};
pub use hermite::{factorial, hermite_eval, hermite_table, triple_product, TripleProductTensor};
pub use projection::{pseudo_spectral_project, total_degree_indices};
pub use quadrature::{gauss_hermite, QuadratureRule};
pub use surrogate::{PceDocument, PceEntry, PceSurrogate, Standardization};

/// Quadrature points per dimension used when none is specified.
pub const DEFAULT_QUADRATURE_POINTS: usize = 20;
