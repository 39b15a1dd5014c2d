//! Single discretionary lane-change instances and their neighbors.

mod crossings;
mod neighbors;
mod start_time;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crossings::{detect_crossings, filter_discretionary, filter_interference, Crossing};
pub use neighbors::{assign_neighbors, LaneNeighbors, NeighborQuery};
pub use start_time::{detect_start_time, MIN_HISTORY};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::trajectory::{build_centerline, CenterlineGeometry, Dataset, LocalProjection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeInstance {
    pub instance_id: String,
    pub sv_id: String,
    pub t_lane: f64,
    pub t_sv_s: f64,
    pub original_lane: i32,
    pub target_lane: i32,
    pub window_t: (f64, f64),
    pub window_x: (f64, f64),
    pub tlv_id: Option<String>,
    pub lv_id: Option<String>,
    pub tfv_ids: Vec<String>,
    pub fv_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Ramp,
    MultipleCrossings,
    ShortHistory,
    NoTlv,
    Interference,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Ramp => "ramp",
            RejectReason::MultipleCrossings => "multiple_crossings",
            RejectReason::ShortHistory => "short_history",
            RejectReason::NoTlv => "no_tlv",
            RejectReason::Interference => "interference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub vehicle_id: String,
    pub t_lane: Option<f64>,
    pub reason: RejectReason,
}

impl Rejection {
    pub fn new(vehicle_id: &str, t_lane: Option<f64>, reason: RejectReason) -> Self {
        Rejection {
            vehicle_id: vehicle_id.to_string(),
            t_lane,
            reason,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    /// Sorted by instance id.
    pub instances: Vec<LaneChangeInstance>,
    /// Sorted by vehicle id.
    pub rejections: Vec<Rejection>,
}

impl Extraction {
    pub fn rejection_counts(&self) -> std::collections::BTreeMap<RejectReason, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for r in &self.rejections {
            *counts.entry(r.reason).or_insert(0) += 1;
        }
        counts
    }
}

/// Build the instance for one discretionary crossing, or say why not.
fn build_instance(
    crossing: &Crossing,
    dataset: &Dataset,
    geometry: &CenterlineGeometry,
    cfg: &RunConfig,
) -> std::result::Result<LaneChangeInstance, RejectReason> {
    let sv = dataset
        .track(&crossing.vehicle_id)
        .ok_or(RejectReason::ShortHistory)?;
    let t_lane = crossing.t_lane;
    let x_lane = sv.position_at(t_lane).ok_or(RejectReason::ShortHistory)?;
    let window_t = (t_lane - cfg.window_t, t_lane + cfg.window_t);
    let window_x = (x_lane - cfg.window_x, x_lane + cfg.window_x);

    let series: Vec<(f64, f64)> = sv
        .points_between(window_t.0, t_lane)
        .iter()
        .map(|p| (p.t, geometry.offset(p.x, p.lat, p.lon)))
        .collect();
    let toward_passing = crossing.to_lane == cfg.passing_lane;
    let direction = if toward_passing { 1.0 } else { -1.0 };
    let t_sv_s = detect_start_time(&series, t_lane, direction, cfg.eps_lat)
        .map_err(|_| RejectReason::ShortHistory)?;
    let x_sv = sv.position_at(t_sv_s).ok_or(RejectReason::ShortHistory)?;

    let query = NeighborQuery {
        sv_id: &crossing.vehicle_id,
        t: t_sv_s,
        x_sv,
        window_x,
        window_t,
        follower_cap: cfg.follower_cap,
    };
    let target = assign_neighbors(dataset, crossing.to_lane, &query);
    if target.leader.is_none() {
        return Err(RejectReason::NoTlv);
    }
    let original = assign_neighbors(dataset, crossing.from_lane, &query);
    // without a reference leader the original lane cannot be analyzed
    let fv_ids = if original.leader.is_some() {
        original.followers
    } else {
        Vec::new()
    };
    Ok(LaneChangeInstance {
        instance_id: crossing.vehicle_id.clone(),
        sv_id: crossing.vehicle_id.clone(),
        t_lane,
        t_sv_s,
        original_lane: crossing.from_lane,
        target_lane: crossing.to_lane,
        window_t,
        window_x,
        tlv_id: target.leader,
        lv_id: original.leader,
        tfv_ids: target.followers,
        fv_ids,
    })
}

/// Find every single discretionary, non-interfered lane change.
pub fn extract_instances(dataset: &Dataset, cfg: &RunConfig) -> Result<Extraction> {
    let crossings = detect_crossings(dataset);
    let (kept, mut rejections) = filter_discretionary(&crossings, cfg);
    if kept.is_empty() {
        return Ok(Extraction {
            instances: Vec::new(),
            rejections,
        });
    }
    let centerline = build_centerline(dataset, cfg.driving_lane, cfg.centerline_bin)?;
    let projection = LocalProjection::for_dataset(dataset);
    let geometry = CenterlineGeometry::new(&centerline, projection, cfg.passing_side)?;

    let outcomes: Vec<std::result::Result<LaneChangeInstance, Rejection>> = kept
        .par_iter()
        .map(|c| {
            let reject = |reason| Rejection::new(&c.vehicle_id, Some(c.t_lane), reason);
            let inst = build_instance(c, dataset, &geometry, cfg).map_err(reject)?;
            if filter_interference(&inst, &crossings, dataset) {
                Ok(inst)
            } else {
                Err(reject(RejectReason::Interference))
            }
        })
        .collect();
    let mut instances = Vec::new();
    for o in outcomes {
        match o {
            Ok(inst) => instances.push(inst),
            Err(r) => rejections.push(r),
        }
    }
    instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    rejections.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id));
    Ok(Extraction {
        instances,
        rejections,
    })
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum ManifestRecord<'a> {
    Instance(&'a LaneChangeInstance),
    Rejection(&'a Rejection),
}

/// One JSON object per line: accepted instances, then rejections.
pub fn write_manifest<W: Write>(extraction: &Extraction, mut out: W) -> Result<()> {
    let records = extraction
        .instances
        .iter()
        .map(ManifestRecord::Instance)
        .chain(extraction.rejections.iter().map(ManifestRecord::Rejection));
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))?;
    }
    Ok(())
}
