//! Dual visibility-region geometry-based stochastic channel model.
//!
//! Scatterers of two classes (short and tall) are visible to a node when it
//! lies inside a disk centered on the scatterer; the radius differs for the
//! BS and the MS side. Active scatterers therefore live in the intersection
//! of two disks centered on the BS and the MS. Tall scatterers are switched
//! on per realization with probability γ.
//!
//! - [`geometry`]: lens area, its mixed-partial kernel, lens sampling.
//! - [`pointprocess`]: scenario parameters and realization sampling.
//! - [`analytics`]: MPC count PMF, distance laws, mean ToA, mean power.
//! - [`simulator`]: Monte Carlo runs producing the empirical counterparts.
//! - [`cli`]: config loading and the CSV-emitting commands.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod pointprocess;
pub mod quad;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{LensSpec, Point};
pub use pointprocess::{ClassKind, Realization, ScattererClass, Scenario};
