//! Numerical algebra of log-concave functions.
//!
//! Potentials `u` are sampled on uniform 1-D or 2-D grids and `f = e^{−u}`.
//! The crate provides Fenchel conjugation and infimal convolution, the
//! `⊕`/`·` operations, total mass, entropy and first variation, the area
//! measures `μ(f)` and `σ(f)`, checks for the associated inequalities and a
//! solver for the one-dimensional Minkowski problem.

pub mod body;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod legendre;
pub mod logconcave;
pub mod measure;
pub mod minkowski;
pub mod pl;
pub mod potential;
pub mod quadrature;

pub use body::ConvexBody;
pub use error::{Error, Result};
pub use functionals::{
    delta_j_fd, delta_j_self, entropy, int_f_log_f, mean_width, perimeter, total_mass, DeltaJEstimate, Method,
};
pub use grid::Grid;
pub use inequalities::InequalityReport;
pub use legendre::{
    combine, fenchel_conjugate, fenchel_involution_residual, inf_convolution, right_scalar_mult,
};
pub use logconcave::{
    classify, make_gaussian, make_power_of_support, oplus, psum_body, ClassReport, ClassTag, LogConcaveFn,
};
pub use measure::{area_measure_mu, area_measure_sigma, ParticleMeasure, SphereMeasure};
pub use minkowski::{solve_minkowski_1d, Feasibility, MinkowskiDatum1D, MinkowskiSolution1D};
pub use potential::{Domain, PotentialGrid};
