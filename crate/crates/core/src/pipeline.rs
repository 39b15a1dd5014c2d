//! End-to-end analysis: extraction, calibration, demarcation, judgment.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::extraction::{extract_instances, LaneChangeInstance, Rejection};
use crate::impact::{
    analyze_follower, compute_tdb, global_magnitude, interval_count, lane_summary, FollowerAnalysis,
    GlobalMagnitude, Lane, LaneImpactSummary,
};
use crate::newell::{calibrate_newell, fallback_tau, DemarcationSchedule, FitFlag};
use crate::trajectory::{parse_dataset, smooth_speeds, Dataset, VehicleTrack};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub follower_index: usize,
    pub follower_id: String,
    /// Reaction time used for demarcation; the substitute when flagged.
    pub tau: f64,
    /// Fitted spacing, absent when calibration failed outright.
    pub d: Option<f64>,
    pub sse: Option<f64>,
    pub flag: FitFlag,
}

/// Why a lane's follower list ended before the extracted list did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Demarcation time fell past the window end.
    BeyondWindow,
    /// Too few pre-demarcation intervals.
    ShortHistory,
    /// No whole interval after the demarcation time.
    NoPostData,
    /// Speed data missing inside a bin.
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneResult {
    pub summary: LaneImpactSummary,
    pub reference_id: String,
    pub followers: Vec<FollowerAnalysis>,
    pub follower_ids: Vec<String>,
    pub calibration: Vec<CalibrationRecord>,
    pub demarcation: DemarcationSchedule,
    pub truncation: Option<Truncation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: LaneChangeInstance,
    pub target: LaneResult,
    pub original: Option<LaneResult>,
    pub global: GlobalMagnitude,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    /// Sorted by instance id.
    pub results: Vec<InstanceResult>,
    pub rejections: Vec<Rejection>,
    /// Accepted instances whose analysis failed, with the error text.
    pub failures: Vec<(String, String)>,
}

/// Tracks with smoothed speeds, computed on first use.
struct SmoothedTracks<'a> {
    dataset: &'a Dataset,
    window: f64,
    cache: HashMap<&'a str, VehicleTrack>,
}

impl<'a> SmoothedTracks<'a> {
    fn get(&mut self, id: &'a str) -> Result<&VehicleTrack> {
        if !self.cache.contains_key(id) {
            let raw = self
                .dataset
                .track(id)
                .ok_or_else(|| Error::Scenario(format!("unknown vehicle {id}")))?;
            self.cache.insert(id, smooth_speeds(raw, self.window)?);
        }
        Ok(&self.cache[id])
    }
}

fn analyze_lane<'a>(
    lane: Lane,
    instance: &LaneChangeInstance,
    reference_id: &'a str,
    follower_ids: &'a [String],
    tracks: &mut SmoothedTracks<'a>,
    cfg: &RunConfig,
) -> Result<LaneResult> {
    let dataset = tracks.dataset;
    let (window_start, window_end) = instance.window_t;
    let reference = tracks.get(reference_id)?.clone();
    let (ref_start, ref_end) = (
        reference.start_time().ok_or(Error::EmptyTrack)?,
        reference.end_time().ok_or(Error::EmptyTrack)?,
    );

    let mut schedule = DemarcationSchedule::new(instance.t_sv_s);
    let mut followers = Vec::new();
    let mut calibration = Vec::new();
    let mut successful = Vec::new();
    let mut truncation = None;
    let mut leader = dataset.track(reference_id).ok_or(Error::EmptyTrack)?;

    for (j, fid) in follower_ids.iter().enumerate() {
        let raw = dataset.track(fid).ok_or(Error::EmptyTrack)?;
        let f_start = raw.start_time().ok_or(Error::EmptyTrack)?;
        let f_end = raw.end_time().ok_or(Error::EmptyTrack)?;

        // fit only on data before the wave can have reached the leader
        let range = (window_start.max(f_start), schedule.last());
        let fit = calibrate_newell(raw, leader, range);
        let (tau, d, sse, flag) = match &fit {
            Ok(f) if f.flag == FitFlag::Ok => (f.params.tau, Some(f.params.d), Some(f.params.sse), FitFlag::Ok),
            Ok(f) => (fallback_tau(&successful), Some(f.params.d), Some(f.params.sse), FitFlag::Fallback),
            Err(_) => (fallback_tau(&successful), None, None, FitFlag::Fallback),
        };

        let Some(t_s) = schedule.push(tau, window_end) else {
            truncation = Some(Truncation::BeyondWindow);
            break;
        };
        let t_lb = window_start.max(f_start).max(ref_start);
        let t_ub = window_end.min(f_end).min(ref_end);
        if interval_count(t_s - t_lb, cfg.dt) < cfg.min_nf {
            truncation = Some(Truncation::ShortHistory);
        } else if interval_count(t_ub - t_s, cfg.dt) < 1 {
            truncation = Some(Truncation::NoPostData);
        }
        if truncation.is_some() {
            schedule.times.pop();
            break;
        }
        let follower = tracks.get(fid)?;
        let tdb = match compute_tdb(
            |t| follower.speed_at(t),
            |t| reference.speed_at(t),
            t_lb,
            t_s,
            t_ub,
            cfg.dt,
        ) {
            Ok(tdb) => tdb,
            Err(Error::Coverage { .. }) => {
                schedule.times.pop();
                truncation = Some(Truncation::Coverage);
                break;
            }
            Err(e) => return Err(e),
        };

        if flag == FitFlag::Ok {
            successful.push(tau);
        }
        calibration.push(CalibrationRecord {
            follower_index: j + 1,
            follower_id: fid.clone(),
            tau,
            d,
            sse,
            flag,
        });
        followers.push(analyze_follower(j + 1, tdb));
        leader = raw;
    }

    let summary = lane_summary(lane, &followers, &schedule, cfg.dt);
    Ok(LaneResult {
        summary,
        reference_id: reference_id.to_string(),
        follower_ids: follower_ids[..followers.len()].to_vec(),
        followers,
        calibration,
        demarcation: schedule,
        truncation,
    })
}

/// Analyze both lanes of one extracted instance.
pub fn analyze_instance(
    instance: &LaneChangeInstance,
    dataset: &Dataset,
    cfg: &RunConfig,
) -> Result<InstanceResult> {
    let mut tracks = SmoothedTracks {
        dataset,
        window: cfg.smoothing_window,
        cache: HashMap::new(),
    };
    let tlv = instance
        .tlv_id
        .as_deref()
        .ok_or_else(|| Error::Scenario(format!("instance {} has no target leader", instance.instance_id)))?;
    let target = analyze_lane(Lane::Target, instance, tlv, &instance.tfv_ids, &mut tracks, cfg)?;
    let original = match instance.lv_id.as_deref() {
        Some(lv) => Some(analyze_lane(
            Lane::Original,
            instance,
            lv,
            &instance.fv_ids,
            &mut tracks,
            cfg,
        )?),
        None => None,
    };
    let global = global_magnitude(&target.summary, original.as_ref().map(|o| &o.summary));
    Ok(InstanceResult {
        instance: instance.clone(),
        target,
        original,
        global,
    })
}

/// Extract and analyze every instance in `dataset` on `cfg.workers` threads.
/// Output order and content do not depend on the worker count.
pub fn analyze_dataset(dataset: &Dataset, cfg: &RunConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| {
        let extraction = extract_instances(dataset, cfg)?;
        let outcomes: Vec<(String, Result<InstanceResult>)> = extraction
            .instances
            .par_iter()
            .map(|inst| (inst.instance_id.clone(), analyze_instance(inst, dataset, cfg)))
            .collect();
        let mut batch = BatchResult {
            rejections: extraction.rejections,
            ..BatchResult::default()
        };
        for (id, outcome) in outcomes {
            match outcome {
                Ok(r) => batch.results.push(r),
                Err(e) => batch.failures.push((id, e.to_string())),
            }
        }
        Ok(batch)
    })
}

/// Parse the dataset at `path` and analyze it.
pub fn run_batch(path: &Path, cfg: &RunConfig) -> Result<BatchResult> {
    let dataset = parse_dataset(path, &cfg.ingest())?;
    analyze_dataset(&dataset, cfg)
}
