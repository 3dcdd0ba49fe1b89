//! Simulation engine for `p`-adic quantum and classical cellular neural
//! networks on the finite grid `G_l = Z_p / p^l Z_p`.
//!
//! The crate is organized bottom-up:
//!
//! * [`padic`]: cell indexing, valuations, norms, balls and Haar weights;
//! * [`kernel`]: radial kernels and the dense coupling operators `J^(l)`;
//! * [`dynamics`]: activations, connection kernels `W`, bias signals `Z` and
//!   the right-hand sides of the quantum and classical networks;
//! * [`evolution`]: fixed-step RK4 integration and the exact free propagator;
//! * [`analysis`]: norms, densities, spectral diagnostics and bound
//!   certificates;
//! * [`scenario`]: configuration files, presets and CSV/PGM output.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod evolution;
pub mod kernel;
pub mod matrix;
pub mod padic;
pub mod scenario;

pub use num_complex::Complex64;

pub use error::{Error, Result};
