use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Nominal sampling step of the trajectory data (s).
pub const SAMPLE_STEP: f64 = 0.1;

/// Tolerance used when comparing timestamps (s).
pub const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Seconds since the dataset time origin.
    pub t: f64,
    /// Longitudinal position (m), increasing in the direction of travel.
    pub x: f64,
    /// m/s
    pub speed: f64,
    pub lane_id: i32,
    /// Signed offset from the driving-lane centerline (m), positive toward
    /// the passing lane. `None` until computed.
    pub lateral: Option<f64>,
    /// Raw kilopost (m).
    pub kilopost: f64,
    pub lat: f64,
    pub lon: f64,
}

/// Interval with no samples that was too long to interpolate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTrack {
    pub vehicle_id: String,
    pub vehicle_type: String,
    pub points: Vec<TrajectoryPoint>,
    pub gaps: Vec<Gap>,
}

/// Bracketing samples for an instant: `points[index]` and `points[index + 1]`
/// with interpolation weight `frac` on the second.
#[derive(Debug, Clone, Copy)]
struct Bracket {
    index: usize,
    frac: f64,
}

impl VehicleTrack {
    pub fn new(vehicle_id: impl Into<String>, vehicle_type: impl Into<String>) -> Self {
        VehicleTrack {
            vehicle_id: vehicle_id.into(),
            vehicle_type: vehicle_type.into(),
            points: Vec::new(),
            gaps: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start_time(&self) -> Option<f64> {
        self.points.first().map(|p| p.t)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.points.last().map(|p| p.t)
    }

    fn in_gap(&self, t: f64) -> bool {
        self.gaps
            .iter()
            .any(|g| t > g.start + TIME_EPS && t < g.end - TIME_EPS)
    }

    fn bracket(&self, t: f64) -> Option<Bracket> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        if t < first.t - TIME_EPS || t > last.t + TIME_EPS || self.in_gap(t) {
            return None;
        }
        if self.points.len() == 1 {
            return Some(Bracket {
                index: 0,
                frac: 0.0,
            });
        }
        // first index with point.t > t
        let upper = self.points.partition_point(|p| p.t <= t);
        let index = upper.clamp(1, self.points.len() - 1) - 1;
        let (a, b) = (&self.points[index], &self.points[index + 1]);
        let frac = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        Some(Bracket { index, frac })
    }

    fn interpolate(&self, t: f64, field: impl Fn(&TrajectoryPoint) -> f64) -> Option<f64> {
        let br = self.bracket(t)?;
        let a = field(&self.points[br.index]);
        if br.frac == 0.0 || br.index + 1 >= self.points.len() {
            return Some(a);
        }
        let b = field(&self.points[br.index + 1]);
        if br.frac == 1.0 {
            return Some(b);
        }
        Some(a + (b - a) * br.frac)
    }

    /// Linearly interpolated position at `t`, `None` outside coverage.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        self.interpolate(t, |p| p.x)
    }

    pub fn speed_at(&self, t: f64) -> Option<f64> {
        self.interpolate(t, |p| p.speed)
    }

    pub fn lateral_at(&self, t: f64) -> Option<f64> {
        let br = self.bracket(t)?;
        let a = self.points[br.index].lateral?;
        match self.points.get(br.index + 1) {
            Some(next) if br.frac > 0.0 => {
                let b = next.lateral?;
                Some(a + (b - a) * br.frac)
            }
            _ => Some(a),
        }
    }

    /// Lane of the most recent sample at or before `t`.
    pub fn lane_at(&self, t: f64) -> Option<i32> {
        let br = self.bracket(t)?;
        let p = &self.points[br.index];
        match self.points.get(br.index + 1) {
            Some(next) if (next.t - t).abs() <= TIME_EPS => Some(next.lane_id),
            _ => Some(p.lane_id),
        }
    }

    /// True when the track has samples spanning `[start, end]` without an
    /// unfilled gap.
    pub fn covers(&self, start: f64, end: f64) -> bool {
        let (Some(first), Some(last)) = (self.start_time(), self.end_time()) else {
            return false;
        };
        first <= start + TIME_EPS
            && last >= end - TIME_EPS
            && !self
                .gaps
                .iter()
                .any(|g| g.end > start + TIME_EPS && g.start < end - TIME_EPS)
    }

    /// Samples whose timestamps fall in `[start, end]`.
    pub fn points_between(&self, start: f64, end: f64) -> &[TrajectoryPoint] {
        let lo = self.points.partition_point(|p| p.t < start - TIME_EPS);
        let hi = self.points.partition_point(|p| p.t <= end + TIME_EPS);
        &self.points[lo..hi.max(lo)]
    }

    /// Distinct consecutive lane ids in time order.
    pub fn lane_sequence(&self) -> Vec<i32> {
        let mut seq: Vec<i32> = Vec::new();
        for p in &self.points {
            if seq.last() != Some(&p.lane_id) {
                seq.push(p.lane_id);
            }
        }
        seq
    }

    pub fn keeps_lane(&self) -> bool {
        self.lane_sequence().len() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub tracks: BTreeMap<String, VehicleTrack>,
    pub route_id: String,
    /// Kilopost (m) corresponding to x = 0.
    pub kilopost_origin: f64,
    /// Epoch milliseconds corresponding to t = 0.
    pub time_origin_ms: i64,
}

impl Dataset {
    pub fn new(route_id: impl Into<String>, kilopost_origin: f64, time_origin_ms: i64) -> Self {
        Dataset {
            tracks: BTreeMap::new(),
            route_id: route_id.into(),
            kilopost_origin,
            time_origin_ms,
        }
    }

    pub fn track(&self, id: &str) -> Option<&VehicleTrack> {
        self.tracks.get(id)
    }

    pub fn insert(&mut self, track: VehicleTrack) {
        self.tracks.insert(track.vehicle_id.clone(), track);
    }

    pub fn point_count(&self) -> usize {
        self.tracks.values().map(|t| t.points.len()).sum()
    }

    /// Mean latitude and longitude over all samples.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let n = self.point_count();
        if n == 0 {
            return None;
        }
        let (mut lat, mut lon) = (0.0, 0.0);
        for p in self.tracks.values().flat_map(|t| &t.points) {
            lat += p.lat;
            lon += p.lon;
        }
        Some((lat / n as f64, lon / n as f64))
    }
}
