//! Radial Schrodinger laboratory: origin boundary policies, the point defect
//! of the radial Laplacian, shooting spectra, and a 3D Cartesian cross-check.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod deltaprobe;
pub mod error;
pub mod indicial;
pub mod model;
pub mod oracle3d;
pub mod solver;

pub use error::{IndicialError, ModelError, Oracle3dError, ProbeError, SolverError};
pub use indicial::{admissibility, indicial_exponents, BoundaryPolicy, IndicialReport};
pub use model::{OriginClass, Potential, RadialGrid};
