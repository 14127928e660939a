//! Multilevel incomplete LDU / LDL^T preconditioning for predominantly
//! symmetric sparse linear systems.
//!
//! A matrix is *predominantly symmetric* when its leading `m0 x m0` block is
//! symmetric while the bordering blocks are general, which is what PDE
//! discretizations produce when boundary nodes are kept in the system. The
//! factorization exploits the symmetric block (LDL^T on it, LDU elsewhere),
//! defers problematic rows and columns to coarser levels through diagonal
//! pivoting, and finishes the recursion with a dense LU.
//!
//! Module map:
//!
//! * [`sparse`]: CRS/CCS containers, the augmented factor storage, Matrix Market I/O.
//! * [`preprocess`]: equilibration, diagonal matching, reordering, deferral.
//! * [`factor`]: one level of Crout incomplete LDU with diagonal pivoting.
//! * [`options`]: control parameters and their defaults.
//! * [`multilevel`]: the level driver, Schur complements and the multilevel solve.
//! * [`krylov`]: restarted right-preconditioned GMRES.
//! * [`problems`]: finite-difference Poisson generators and random test matrices.
//! * [`oracle`]: dense brute-force reference implementations used for verification.
//! * [`cli`]: the `psmilu` command-line front end.

pub mod cli;
pub mod error;
pub mod factor;
pub mod krylov;
pub mod multilevel;
pub mod options;
pub mod oracle;
pub mod preprocess;
pub mod problems;
pub mod sparse;

pub use error::{Error, Result};
pub use factor::{iludp_factor, FactorOutput, FlopCounters};
pub use krylov::{gmres_right, GmresConfig, SolveReport};
pub use multilevel::{psmilu_factor, psmilu_solve, MultilevelPrec, PrecLevel};
pub use options::{HVariant, Options};
pub use sparse::{Ccs, Crs, DenseMatrix, TripletList};
