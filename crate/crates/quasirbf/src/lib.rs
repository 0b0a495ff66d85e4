//! Generalized RBF quasi-interpolation: Fourier transforms of the generalized
//! thin-plate-spline and power families via Mellin-Barnes residues, origin
//! expansions, regime classification, quasi-Lagrange stencils and empirical
//! reproduction and convergence checks.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod interp;
pub mod lagrange;
pub mod mellin;
pub mod rbf_model;
pub mod sobolev;
pub mod special_fn;

pub use error::{Error, Result};
