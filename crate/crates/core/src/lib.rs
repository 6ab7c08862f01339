//! Quasi-static simulation of cloaking by anomalous localized resonance for a
//! dielectric core coated with a lossy plasmonic shell, where both interfaces
//! are confocal ellipses.
//!
//! The two-interface Neumann–Poincaré operator diagonalizes on the
//! trigonometric basis of the elliptic coordinate system, which turns the
//! transmission problem into a family of 2×2 problems per angular mode. The
//! modules are layered bottom-up:
//!
//! * [`geometry`]: elliptic coordinates and curve sampling.
//! * [`spectrum`]: closed-form eigen-data of the block operator, S-Gram
//!   matrices and the critical radius.
//! * [`source`]: Newtonian potentials of dipoles and charge pairs and their
//!   elliptic-harmonic coefficients.
//! * [`solver`]: density coefficients, field evaluation, dissipated power and
//!   loss sweeps with a resonance classifier.
//! * [`oracle`]: an independent Nyström discretization of the block operator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod source;
pub mod spectrum;

pub use error::{Error, Result};
pub use geometry::{CartesianPoint, ConfocalGeometry, CurvePanel, EllipticPoint};
pub use solver::{ShellConfig, ShellSolution, SweepRecord, Verdict};
pub use source::{SourceCoefficients, SourceSpec};
pub use spectrum::{ModeData, Regime, RegimeKind};
