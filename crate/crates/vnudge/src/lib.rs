//! Continuous data assimilation for 2D incompressible flow on the unit
//! torus: a pseudo-spectral Navier-Stokes reference solver, a
//! Voigt-regularized companion system nudged toward interpolated
//! observations of the reference flow, and a twin-experiment harness that
//! measures the exponential error decay and the α-dependent error plateau.
//!
//! Module map:
//! - [`grid`], [`field`], [`fft`], [`ops`]: spectral representation and the
//!   periodic Stokes-setting operators (Leray projector, Stokes operator,
//!   Helmholtz inverse, dealiased advection).
//! - [`model`]: right-hand sides of the two systems and the Grashof number.
//! - [`interp`]: observation operators I_h and certification of c₁.
//! - [`stepper`]: integrating-factor RK4 and CNAB2 time stepping, plus the
//!   paired twin step.
//! - [`twin`]: experiment orchestration, decay/plateau fits, α sweeps.
//! - [`diag`]: energy balance, shell spectra, absorbing-ball monitor.
//! - [`config`], [`checkpoint`]: run configuration and binary state files.
//! - [`verify`]: the built-in property suite.

pub mod checkpoint;
pub mod config;
pub mod diag;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod interp;
pub mod model;
pub mod ops;
pub mod stepper;
pub mod twin;
pub mod verify;

pub use error::{Error, Result};
