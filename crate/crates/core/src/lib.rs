//! Simulation toolkit for the atom-optics kicked particle at quantum
//! resonance driven by finite-duration standing-wave pulses.
//!
//! Four dynamical models are provided: exact quantum evolution of a single
//! quasimomentum manifold ([`qsim`]), its instantaneous-kick limit, the
//! ε-pseudoclassical pendulum map and the true classical limit ([`pcl`]).
//! [`ensemble`] averages them over a thermal gas, [`imaging`] turns the
//! resulting momentum distributions into time-of-flight profiles and
//! extracts ΔP_max, and [`experiments`] orchestrates the parameter sweeps.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod imaging;
pub mod pcl;
pub mod qsim;
pub mod special;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
