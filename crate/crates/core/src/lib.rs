//! Optimal and guaranteed-cost robust filter design for continuous optical
//! phase tracking under a second-order resonant noise process.
//!
//! The crate builds the resonant-noise plant and linearized homodyne
//! measurement models ([`model`]), solves the associated Riccati and
//! Lyapunov equations with residual certification ([`solvers`]), designs
//! steady-state Kalman and guaranteed-cost robust filters including the
//! epsilon scan ([`filters`]), evaluates true closed-loop estimation error
//! under realized parameter uncertainty and computes the dual-homodyne
//! standard quantum limit ([`analysis`]), and cross-validates the algebra
//! with a deterministic Euler-Maruyama Monte-Carlo simulator ([`sim`]).

// Domain guards use `!(x > 0.0)` deliberately: unlike `x <= 0.0`, it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod filters;
pub mod model;
pub mod par;
pub mod sim;
pub mod solvers;
pub mod validate;

pub use error::{Error, Result};
