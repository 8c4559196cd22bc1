//! Two-task motivation dynamics: an agent splits its effort between two goals
//! according to motivation and value states, and the coupled system shows
//! deadlock, damped oscillation, and limit cycles depending on the time scales.
//!
//! The crate holds the model in original and mean-difference coordinates, an
//! adaptive integrator, linearization and Hopf analysis at the deadlock
//! equilibrium, and the planar reduction with its Poincaré map.

#![allow(clippy::needless_range_loop)]

pub mod cycle;
pub mod eigen;
pub mod error;
pub mod field;
pub mod hopf;
pub mod integrate;
pub mod linearize;
pub mod lyapunov;
pub mod params;
pub mod reduction;
pub mod regime;
pub mod simulate;
pub mod state;

pub use error::ModelError;
pub use params::ModelParams;
pub use state::{FastState, FullState, MeanDiffState, PlanarState, ReducedState};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
