//! Mean-field steady states, stability and fluctuations of the dissipative
//! quantum Rabi model with a Kerr nonlinearity.
//!
//! All quantities are in units of the cavity frequency. The parameters are
//! the cavity loss `κ`, the coupling `λ`, the atomic splitting `β` and the
//! rescaled Kerr strength `U`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fluct;
pub mod landau;
pub mod model;
pub mod poly;
pub mod scan;
pub mod stability;
pub mod steadystate;

pub use error::{Error, Result};
pub use model::{MeanFieldState, ModelParams, NormalizedRecord, ParamsPatch, RawParams};
pub use steadystate::{solve_steady_states, Phase, SteadyBranch};
