//! Full-counting-statistics analysis of multilevel quantum absorption
//! refrigerators described by Markovian population rate equations.
//!
//! The central quantities are the steady-state heat current at any bath,
//! `J = tr(adj(L(0)) dL/ds) (-1)^{N+1} / a_{N-1}(0)`, the matching cooling
//! condition, and the current noise, all computed from the
//! characteristic polynomial of the counting-field generator without first
//! solving for the steady state.

// `!(x > 0.0)` is the idiom for rejecting NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod fcs;
pub mod io;
pub mod liouvillian;
pub mod model;
pub mod oracle;
pub mod scan;

pub use error::{Error, Result};
