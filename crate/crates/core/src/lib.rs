//! Synthetic solid-state nanopore translocation signals with exact ground
//! truth, plus a harness that scores event detectors against it.
//!
//! Signal arrays are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the common `f64` instantiation.

pub mod bench;
pub mod corpus;
pub mod dataset;
pub mod drift;
pub mod error;
pub mod events;
pub mod filters;
pub mod io;
pub mod noise;
pub mod pipeline;
pub mod psd;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use events::{EventRecord, EventSpec, LevelSpec, PlacementConfig};
pub use pipeline::{assemble, GenerationConfig};
pub use scalar::Real;

/// Signal bundle in double precision.
pub type SignalBundle = pipeline::SignalBundle<f64>;
/// Signal bundle in single precision.
pub type SignalBundleF32 = pipeline::SignalBundle<f32>;
pub type Generated = pipeline::Generated<f64>;
pub type GeneratedF32 = pipeline::Generated<f32>;
pub type Psd = psd::Psd<f64>;
