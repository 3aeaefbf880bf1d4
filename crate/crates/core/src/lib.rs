//! Kerr resonators coupled to frequency-dependent (non-Markovian) environments.
//!
//! The crate is organised by task:
//! [`kernels`] describes the environment, [`steadystate`] solves the mean-field
//! problem, [`noise`] computes linearized quadrature variances, [`stability`]
//! classifies fixed points and [`dynamics`] integrates the equations of motion
//! in time. [`cli`] wires everything into the `nmkerr` command.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod kernels;
pub mod noise;
pub mod plot;
pub mod quad;
pub mod stability;
pub mod steadystate;

pub use kernels::{FanoMirror, KernelModel, Parity, SystemParams};
pub use steadystate::{Drive, SteadyState};
