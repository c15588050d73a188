//! Boundary-integral machinery for two perfectly conducting inclusions separated
//! by a narrow gap.
//!
//! The crate solves the exterior Laplace problem with floating boundary
//! potentials around a pair of inclusions (`solver::solve_pair`), the singular
//! function carrying the gradient blow-up (`solver::solve_singular`) and the
//! neck-truncated touching problem (`solver::solve_dumbbell`). From those it
//! extracts the stress concentration factor and its touching limit, and the
//! `experiments` module turns the results into sweeps, rate fits and reports.
//!
//! Flux convention: every reported normal derivative `∂_ν u` on an inclusion
//! boundary is taken along the normal pointing *into* the inclusion, i.e.
//! outward from the matrix domain. Curve normals themselves point out of the
//! inclusions.

pub mod disk_analytics;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod potentials;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{
    build_dumbbell, contact_data, make_disk, make_model_contact_curve, osculating_disks,
    ContactData, CornerMode, DumbbellCurve, InclusionPair, ParametricCurve, Point2, Shape, Side,
};
pub use potentials::{BoundaryDensity, HarmonicBackground};
pub use solver::{ConcentrationReport, DumbbellSolution, PairSolution};
