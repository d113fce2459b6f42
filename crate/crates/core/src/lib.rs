//! Krylov solvers for X-ray CT reconstruction with unmatched forward/back
//! projector pairs.
//!
//! The crate builds parallel-beam system matrices (line, strip and Joseph
//! models), synthesizes phantoms and noisy sinograms, and runs AB-GMRES,
//! BA-GMRES, LSQR, LSMR and Landweber iterations on the resulting problems.
//! Dense SVD and eigenvalue tools support Picard-plot, spectrum, subspace
//! angle and perturbation-bound studies at desk scale.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod phantom;
pub mod projector;
pub mod rng;
pub mod solvers;
pub mod sparse;
pub mod stopping;

pub use error::{Error, Result};
pub use geometry::{ScanGeometry, SizeClass};
pub use projector::{ProjModel, ProjectorPair};
pub use solvers::{SolverOptions, SolverTrace};
pub use sparse::{CsrMatrix, DenseMatrix};
pub use stopping::{StopRule, StoppingConfig};
