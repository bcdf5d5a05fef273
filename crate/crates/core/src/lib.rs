//! Homogenization of periodic stable-like jump processes: periodic fields, Lévy
//! densities, state-dependent jump kernels, path simulation, invariant measures,
//! correctors, homogenized triplets, and convergence diagnostics.

pub mod config;
pub mod corrector;
pub mod ergodic;
pub mod error;
pub mod homogenizer;
pub mod kernel;
pub mod levy;
pub mod model;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{JumpKernelSpec, KernelArgs, KernelFamily};
pub use levy::{Compensation, LevyDensity, RayKernel};
pub use torus::{EmpiricalMeasure, FourierTerm, Measure, PeriodicField};
