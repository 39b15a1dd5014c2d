//! Quantifies how a single discretionary lane change affects upstream traffic
//! in the target and original lanes.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`trajectory`] parses and smooths raw tracks and computes lateral offsets.
//! 2. [`extraction`] finds single discretionary lane changes and their neighbors.
//! 3. [`newell`] calibrates followers and derives demarcation times.
//! 4. [`impact`] computes travel distance bias, affected status and magnitudes.
//! 5. [`pipeline`] and [`report`] run batches and write results.
//!
//! [`synth`] builds ground-truth scenarios and a naive reference judgment
//! used for differential testing.

pub mod config;
pub mod error;
pub mod extraction;
pub mod impact;
pub mod newell;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod trajectory;

pub use config::{IngestConfig, RunConfig};
pub use error::{Error, Result};
pub use newell::{DemarcationSchedule, FitFlag, NewellFit, NewellParams};
pub use trajectory::{Dataset, LaneCenterline, TrajectoryPoint, VehicleTrack};
