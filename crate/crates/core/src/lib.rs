//! Spectral Galerkin simulation of the damped wave equation
//! `u_tt + kappa u_t - Delta u = ` (small compensated jumps) `+` (big jumps)
//! on an interval with Dirichlet conditions, together with the energy
//! machinery used to test its stability.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::wrong_self_convention
)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod noise;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
