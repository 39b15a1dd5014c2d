//! Canonical vehicle tracks: ingest, smoothing, and lateral geometry.

mod geometry;
mod ingest;
mod smooth;
mod types;

pub use geometry::{
    build_centerline, lateral_offsets, CenterlineGeometry, CenterlineSample, LaneCenterline,
    LocalProjection,
};
pub use ingest::{
    normalized_config, parse_dataset, read_dataset, write_dataset, write_dataset_file, HEADER,
};
pub use smooth::smooth_speeds;
pub use types::{Dataset, Gap, TrajectoryPoint, VehicleTrack, SAMPLE_STEP, TIME_EPS};
