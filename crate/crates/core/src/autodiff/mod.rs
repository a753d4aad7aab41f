//! Scalar reverse-mode differentiation.
//!
//! A [`Tape`] records every intermediate value of one evaluation together
//! with its local partials; [`Tape::backward`] then returns the derivative of
//! any recorded scalar with respect to all registered leaves. Tapes are
//! rebuilt for every evaluation. The [`jet`] submodule adds second-order
//! jets in a scalar network input, which is how ODE residuals such as
//! `m u″ + μ u′ + k u` are formed and still differentiated with respect to
//! the network weights.

pub mod jet;
mod tape;

pub use jet::{jet_forward, jet_propagate, Activation, DenseLayer, Jet2, JetBlock};
pub use tape::{Op, Tape, Var, VarRange};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutodiffError {
    #[error("division by zero (denominator node {node})")]
    DivisionByZero { node: usize },
}
