//! Numerical lab for maximal propagation speeds of Schrödinger dynamics on
//! periodic grids.
//!
//! Start from [`grid::GridSpec`] and [`hamiltonian::HamiltonianOp`], build an
//! energy cutoff with [`funcalc::EnergyFilter`], evolve with
//! [`propagator::Propagator`] and measure leakage with [`experiments`].

// `!(x > 0.0)` is how the validators reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod fourier;
pub mod funcalc;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod norm;
pub mod observables;
pub mod propagator;
pub mod runner;
pub mod smooth;
pub mod taylor;

pub use error::{Error, Result};
