//! Travel distance bias, the two-stage affected judgment, and impact
//! aggregation per follower and per lane.
//!
//! Segment indices are 1-based and local: pre-segment entries count forward
//! from the first whole interval after `t_lb`, post-segment entries count
//! forward from the demarcation time.

mod band;
mod judgment;
mod magnitude;
mod tdb;

pub use band::{band_stats, classify_status, ThresholdBand};
pub use judgment::{
    affected_intervals, analyze_runs, follower_verdict, runs_of_ones, Run, StatusSeries, Verdict,
};
pub use magnitude::{
    affected_count, analyze_follower, compute_ctdb, follower_magnitude, global_magnitude,
    lane_summary, CtdbCase, Diagnostics, FollowerAnalysis, GlobalMagnitude, Lane,
    LaneImpactSummary,
};
pub use tdb::{compute_tdb, interval_count, TdbSeries};
