//! Numerical workbench for the regional fractional Laplacian on bounded
//! domains with `alpha` in `(1/2, 1)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: fractional parameters, intervals and disks, graded meshes,
//!   boundary layers.
//! * [`funcexpr`]: a small expression language used to describe data in
//!   configuration files.
//! * [`operator`]: pointwise evaluation of the truncated and principal-value
//!   regional operator and of the complement tail `phi`.
//! * [`discretization`]: Gagliardo stiffness, collocation, mass and load
//!   assembly.
//! * [`solver`]: Dirichlet solves for bounded, `L^2`, weighted-`L^1` and
//!   measure data, nonzero boundary data and discrete Green matrices.
//! * [`analysis`]: diagnostics (decay fits, integration-by-parts gaps,
//!   Hardy/Poincare quotients, kernel bounds, fractional normal derivative).

pub mod analysis;
pub mod discretization;
pub mod domain;
mod error;
pub mod funcexpr;
pub mod linalg;
pub mod operator;
pub mod quadrature;
pub mod solver;
pub mod spline;

pub use domain::{BoundaryLayer, Domain, FracParams, Mesh, Point};
pub use error::{Error, Result};
pub use funcexpr::Expr;
pub use operator::{PVQuadratureConfig, PvValue, ScalarField};
pub use solver::{GridFunction, MeasureData, SolveReport};
