use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LaneChangeInstance, RejectReason, Rejection};
use crate::config::RunConfig;
use crate::trajectory::{Dataset, TIME_EPS};

/// A lane-id transition; `t_lane` is the time of the first sample in the new
/// lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub vehicle_id: String,
    pub t_lane: f64,
    pub from_lane: i32,
    pub to_lane: i32,
}

/// Every lane transition in the dataset, ordered by vehicle id then time.
pub fn detect_crossings(dataset: &Dataset) -> Vec<Crossing> {
    let mut out = Vec::new();
    for track in dataset.tracks.values() {
        for w in track.points.windows(2) {
            if w[0].lane_id != w[1].lane_id {
                out.push(Crossing {
                    vehicle_id: track.vehicle_id.clone(),
                    t_lane: w[1].t,
                    from_lane: w[0].lane_id,
                    to_lane: w[1].lane_id,
                });
            }
        }
    }
    out
}

/// Keep single changes between main lanes. Vehicles with more than one
/// crossing lose all of them; a single crossing touching a non-main lane is
/// a mandatory merge or diverge.
pub fn filter_discretionary(crossings: &[Crossing], cfg: &RunConfig) -> (Vec<Crossing>, Vec<Rejection>) {
    let mut per_vehicle: BTreeMap<&str, Vec<&Crossing>> = BTreeMap::new();
    for c in crossings {
        per_vehicle.entry(&c.vehicle_id).or_default().push(c);
    }
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (id, list) in per_vehicle {
        if list.len() >= 2 {
            rejected.push(Rejection::new(id, Some(list[0].t_lane), RejectReason::MultipleCrossings));
            continue;
        }
        let c = list[0];
        let ramp = |lane: i32| cfg.ramp_lanes.contains(&lane) || !cfg.is_main_lane(lane);
        if ramp(c.from_lane) || ramp(c.to_lane) {
            rejected.push(Rejection::new(id, Some(c.t_lane), RejectReason::Ramp));
        } else {
            kept.push(c.clone());
        }
    }
    (kept, rejected)
}

/// True when no vehicle upstream of the subject vehicle, inside the space
/// window, enters the target or original lane between the crossing and the
/// end of the time window.
pub fn filter_interference(instance: &LaneChangeInstance, crossings: &[Crossing], dataset: &Dataset) -> bool {
    let Some(sv) = dataset.track(&instance.sv_id) else {
        return true;
    };
    let sv_last = sv.points.last().map(|p| p.x);
    let (x_lo, x_hi) = instance.window_x;
    let (_, t_end) = instance.window_t;
    !crossings.iter().any(|c| {
        if c.vehicle_id == instance.sv_id
            || !(c.to_lane == instance.target_lane || c.to_lane == instance.original_lane)
            || c.t_lane < instance.t_lane - TIME_EPS
            || c.t_lane > t_end + TIME_EPS
        {
            return false;
        }
        let Some(x) = dataset.track(&c.vehicle_id).and_then(|t| t.position_at(c.t_lane)) else {
            return false;
        };
        let x_sv = sv.position_at(c.t_lane).or(sv_last).unwrap_or(f64::INFINITY);
        x < x_sv && x >= x_lo && x <= x_hi
    })
}
