//! Semiclassical magnetotunneling engine.
//!
//! A charged particle bound at a δ-well at `x = 0` tunnels along `x` under a
//! barrier `u(y) = u0 (y/a)^{4N}` in a perpendicular magnetic field. The
//! crate computes the complex classical action of the underbarrier state,
//! the imaginary-time bounce that fixes its decay per period, the field at
//! which that decay vanishes (Euclidean resonance), the vortex structure of
//! the wavefunction and the effective 1D potential along `y = 0`. The
//! [`oracle`] module solves the full 2D Schrödinger problem by finite
//! differences so every semiclassical statement can be checked directly.
//!
//! All modules work in dimensionless units: lengths in the cyclotron length
//! `L`, energies in `|E|`, with `ν = 2|E|/ħω_c` and `α = a/L` as the two
//! control parameters. [`setup`] converts from physical inputs.

pub mod bounce;
pub mod effpot;
pub mod error;
pub mod field;
pub mod grid;
pub mod hj;
pub mod numeric;
pub mod oracle;
pub mod setup;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use setup::{derive_dimensionless, validate, Constants, Dimensionless, PhysicalSetup};
