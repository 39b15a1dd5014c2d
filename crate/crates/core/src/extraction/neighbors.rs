use std::cmp::Ordering;

use crate::trajectory::{Dataset, VehicleTrack, TIME_EPS};

/// Leader and ordered followers of the subject vehicle in one lane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaneNeighbors {
    pub leader: Option<String>,
    pub followers: Vec<String>,
}

/// Query parameters shared by both lanes.
#[derive(Debug, Clone, Copy)]
pub struct NeighborQuery<'a> {
    pub sv_id: &'a str,
    /// Instant the neighbors are identified at.
    pub t: f64,
    pub x_sv: f64,
    pub window_x: (f64, f64),
    pub window_t: (f64, f64),
    pub follower_cap: usize,
}

/// Stays in `lane` for every sample observed in the time window.
fn stays_in_lane(track: &VehicleTrack, lane: i32, window: (f64, f64)) -> bool {
    track
        .points_between(window.0, window.1)
        .iter()
        .all(|p| p.lane_id == lane)
}

/// Followers must also be observed without gaps from `t` to the window end.
fn valid_follower(track: &VehicleTrack, lane: i32, q: &NeighborQuery) -> bool {
    stays_in_lane(track, lane, q.window_t) && track.covers(q.t, q.window_t.1)
}

/// Nearest vehicle ahead and nearest-first vehicles behind the subject
/// vehicle in `lane` at `q.t`, within the space window. Ties in position go
/// to the smaller id. The follower list stops at the first vehicle that
/// leaves the lane or the data before the window ends, and at the cap.
/// A leader that leaves the lane inside the window is treated as absent.
pub fn assign_neighbors(dataset: &Dataset, lane: i32, q: &NeighborQuery) -> LaneNeighbors {
    let mut ahead: Vec<(f64, &VehicleTrack)> = Vec::new();
    let mut behind: Vec<(f64, &VehicleTrack)> = Vec::new();
    for track in dataset.tracks.values() {
        if track.vehicle_id == q.sv_id || track.lane_at(q.t) != Some(lane) {
            continue;
        }
        let Some(x) = track.position_at(q.t) else { continue };
        if x < q.window_x.0 - TIME_EPS || x > q.window_x.1 + TIME_EPS {
            continue;
        }
        if x > q.x_sv {
            ahead.push((x, track));
        } else if x < q.x_sv {
            behind.push((x, track));
        }
    }
    let by_id = |a: &VehicleTrack, b: &VehicleTrack| a.vehicle_id.cmp(&b.vehicle_id);
    ahead.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| by_id(a.1, b.1)));
    behind.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => by_id(a.1, b.1),
        o => o,
    });

    let leader = ahead
        .first()
        .filter(|(_, t)| stays_in_lane(t, lane, q.window_t))
        .map(|(_, t)| t.vehicle_id.clone());
    let followers = behind
        .iter()
        .take_while(|(_, t)| valid_follower(t, lane, q))
        .take(q.follower_cap)
        .map(|(_, t)| t.vehicle_id.clone())
        .collect();
    LaneNeighbors { leader, followers }
}
