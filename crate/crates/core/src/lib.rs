//! Foster-Lyapunov drift analysis for Lévy-type generators with unbounded
//! coefficients.
//!
//! The crate evaluates `ℒV` for `V(x) = φ^p(|x|)` against three kernel
//! families, computes the drift constants and growth exponents on radial
//! grids, classifies the ergodic rate and simulates the associated
//! jump-diffusion. It is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analyzer;
pub mod cubature;
pub mod error;
pub mod exec;
pub mod generator;
pub mod kernels;
pub mod linalg;
pub mod lyapunov;
pub mod rate;
pub mod simulator;

pub use cubature::{CubatureOptions, Estimate};
pub use error::{Error, Result, TailEnd};
pub use exec::{Executor, Sequential};
pub use generator::{apply_generator, apply_generator_with, symbol_re, GeneratorValue};
pub use kernels::{ConeSpec, GeneratorSpec, JumpKernel};
pub use linalg::{Matrix, Vector};
pub use lyapunov::{LyapunovSpec, TestFunction};
pub use rate::{RateClass, RateSpec};
