//! Two-dimensional acoustic tomography toolkit.
//!
//! Recovers the coefficient `q(x)` of the acoustic wave equation
//! `q u_tt = laplace(u)` in a disk from boundary measurements, by two
//! independent globally convergent routes:
//!
//! * the **boundary control method** (`bcm`), which evaluates interior
//!   products `integral(q h1 h2)` against harmonic test functions from the
//!   Neumann-to-Dirichlet data of a controlled wave system, and
//! * the **quasi-reversibility method** (`qrm`), which pushes the data
//!   through a truncated Laplace transform into a first-kind integral
//!   equation with a product-of-logarithms kernel and solves the resulting
//!   overdetermined elliptic system by Tikhonov-regularized least squares.
//!
//! Supporting modules provide the forward FEM wave solvers (`forward`),
//! spectral preprocessing (`laplace`), ground-truth phantoms (`phantom`),
//! noise injection and sigma filtering (`postproc`), geometry and meshing
//! (`geometry`), and batch pipelines with on-disk artifacts (`pipeline`).
//!
//! Everything is dimensionless; the measurement circle has radius 1 by
//! default and reconstruction happens on a uniform grid over the inscribed
//! square.

pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod laplace;
pub mod linalg;
pub mod phantom;
pub mod qrm;

pub use error::{Error, Result, Warning};
