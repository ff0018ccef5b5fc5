//! Matrix-free space-time finite element solver for the two-dimensional
//! incompressible Navier-Stokes equations.
//!
//! Time is discretized slab by slab with discontinuous Galerkin DG(k) at
//! right-sided Gauss-Radau nodes; space uses continuous `Q_{r+1}` velocity and
//! discontinuous `P_r` pressure with Nitsche boundary conditions. Each slab is
//! solved by inexact Newton-FGMRES preconditioned with an hp space-time
//! multigrid V-cycle and cell-wise Vanka smoothing.

pub mod error;
pub mod geometry;
pub mod elements;
pub mod linalg;
pub mod temporal;
pub mod operators;
pub mod slab;
pub mod solver;
pub mod stmg;
pub mod bench;

pub use error::{Error, Result};
