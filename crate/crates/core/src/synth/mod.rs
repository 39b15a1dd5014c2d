//! Synthetic Newell platoons with an injected lane change and known ground
//! truth, plus a naive reference of the affected judgment.

mod profile;
mod reference;
mod scenario;
mod spec;

pub use profile::SpeedProfile;
pub use reference::{reference_from_status, reference_quantifier, ReferenceOutcome};
pub use scenario::{
    generate_platoon, inject_lane_change, GroundTruth, Scenario, VehicleTruth, AFFECTED_SPEED_DELTA,
    KILOPOST_ORIGIN, LANE_WIDTH, MANEUVER, TIME_ORIGIN_MS,
};
pub use spec::{Insertion, ScenarioSpec};
