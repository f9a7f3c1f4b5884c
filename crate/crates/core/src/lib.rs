//! Numerical laboratory for minimal hyperbolic germs on a closed genus-2
//! surface: pairs (g, m) of metric and traceless second fundamental form
//! satisfying the Gauss–Codazzi system of a hyperbolic 3-manifold, together
//! with the normal Riccati flow into the ambient metric, the associated flat
//! SO(3,ℂ) connection and its holonomy, the linearized and Jacobi operators,
//! and the matched symplectic pairings.

pub mod error;
pub mod geom;
pub mod germ;
pub mod field;
pub mod jets;
pub mod mesh;
pub mod metric;
pub mod ops;
pub mod poincare;

pub use error::{GermLabError, Result};
