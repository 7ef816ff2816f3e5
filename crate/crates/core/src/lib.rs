//! Dimension-wise expansion of high-dimensional constant-coefficient heat
//! problems, as arising from multi-asset Black–Scholes pricing after a
//! principal-component rotation.
//!
//! The full `N`-dimensional solution is approximated by an integer-weighted
//! sum of low-dimensional sub-problems, each solved by finite differences on
//! a stretched grid. Closed-form oracles and coupled Monte Carlo estimators
//! measure the truncation error.

// `!(x > 0.0)` also rejects NaN, which is the point of every such check here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod expansion;
pub mod harness;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod payoff;
pub mod pde;

pub use error::{Error, Result};
pub use exec::Execution;
