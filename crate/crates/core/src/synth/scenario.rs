use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::profile::SpeedProfile;
use super::spec::ScenarioSpec;
use crate::error::{Error, Result};
use crate::trajectory::{write_dataset_file, Dataset, LocalProjection, TrajectoryPoint, VehicleTrack, SAMPLE_STEP};

/// Lateral position of the passing lane relative to the driving lane (m).
pub const LANE_WIDTH: f64 = 3.5;
/// Duration of the lateral maneuver (s).
pub const MANEUVER: f64 = 3.0;
/// Speed deviation from the baseline that counts as affected (m/s).
pub const AFFECTED_SPEED_DELTA: f64 = 0.1;
pub const ORIGIN_LAT: f64 = 35.0;
pub const ORIGIN_LON: f64 = 139.0;
pub const KILOPOST_ORIGIN: f64 = 20_000.0;
pub const TIME_ORIGIN_MS: i64 = 1_700_000_000_000;

const GAIN: f64 = 0.5;
const MAX_DECEL: f64 = 4.0;
const MAX_ACCEL: f64 = 2.0;

fn lane_lateral(lane: i32) -> f64 {
    if lane == 2 {
        LANE_WIDTH
    } else {
        0.0
    }
}

/// `x(t) = x0 + profile(t - delay) - spacing`.
#[derive(Debug, Clone, Copy)]
struct Shift {
    delay: f64,
    spacing: f64,
}

#[derive(Debug, Clone)]
struct Chain<'a> {
    profile: &'a SpeedProfile,
    x0: f64,
}

impl Chain<'_> {
    fn x(&self, s: Shift, t: f64) -> f64 {
        self.x0 + self.profile.position(t - s.delay) - s.spacing
    }

    fn v(&self, s: Shift, t: f64) -> f64 {
        self.profile.speed(t - s.delay)
    }
}

/// One vehicle on the scene grid.
#[derive(Debug, Clone, PartialEq)]
struct Sampled {
    id: String,
    lane: Vec<i32>,
    x: Vec<f64>,
    v: Vec<f64>,
    lateral: Vec<f64>,
    /// Whether the sample differs from the no-insertion baseline.
    modified: Vec<bool>,
}

impl Sampled {
    fn from_chain(id: String, lane: i32, chain: &Chain, s: Shift, times: &[f64]) -> Self {
        let n = times.len();
        Sampled {
            id,
            lane: vec![lane; n],
            x: times.iter().map(|&t| chain.x(s, t)).collect(),
            v: times.iter().map(|&t| chain.v(s, t)).collect(),
            lateral: vec![lane_lateral(lane); n],
            modified: vec![false; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTruth {
    pub vehicle_id: String,
    pub affected: bool,
    /// First instant the speed deviates from the baseline by more than
    /// 0.1 m/s.
    pub onset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sv_id: String,
    pub tlv_id: String,
    pub lv_id: String,
    /// Absent without an insertion.
    pub t_sv_s: Option<f64>,
    pub t_lane: Option<f64>,
    pub target: Vec<VehicleTruth>,
    pub original: Vec<VehicleTruth>,
}

impl GroundTruth {
    pub fn affected_ids(&self) -> Vec<&str> {
        self.target
            .iter()
            .chain(&self.original)
            .filter(|v| v.affected)
            .map(|v| v.vehicle_id.as_str())
            .collect()
    }
}

/// A generated scene: baseline and modified trajectories plus ground truth.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    times: Vec<f64>,
    baseline: Vec<Sampled>,
    modified: Vec<Sampled>,
    pub truth: GroundTruth,
}

fn id(spec: &ScenarioSpec, role: &str, i: Option<usize>) -> String {
    match i {
        Some(i) => format!("{}{role}{:02}", spec.id_prefix, i + 1),
        None => format!("{}{role}", spec.id_prefix),
    }
}

/// Track a reference position with a speed feedforward plus proportional
/// correction, within acceleration limits. Samples where `p_star` is still
/// the baseline and the vehicle is back on it are copied from the baseline.
fn pursue(
    times: &[f64],
    base: &Sampled,
    start: usize,
    p_star: impl Fn(f64) -> f64,
    bounded_by_baseline: bool,
) -> Sampled {
    let mut out = base.clone();
    let h = SAMPLE_STEP;
    let mut on_base = true;
    for i in start.max(1)..times.len() {
        let t = times[i];
        let p = p_star(t);
        let binding = !bounded_by_baseline || p < base.x[i];
        if on_base && !binding {
            continue;
        }
        let (x_prev, v_prev) = (out.x[i - 1], out.v[i - 1]);
        let p_prev = p_star(times[i - 1]);
        let v_ref = (p - p_prev) / h;
        let v_d = v_ref + GAIN * (p_prev - x_prev);
        let v = v_d.clamp(v_prev - MAX_DECEL * h, v_prev + MAX_ACCEL * h).max(0.0);
        let x = x_prev + 0.5 * (v_prev + v) * h;
        if !binding && (x - base.x[i]).abs() < 1e-3 && (v - base.v[i]).abs() < 1e-3 {
            on_base = true;
            continue;
        }
        on_base = false;
        out.x[i] = x;
        out.v[i] = v;
        out.modified[i] = true;
    }
    out
}

/// Exact Newell follower of a sampled leader. Where the leader is on its
/// baseline around `t - tau`, the follower keeps its own baseline sample.
fn newell_follow(times: &[f64], leader: &Sampled, base: &Sampled, tau: f64, d: f64) -> Sampled {
    let mut out = base.clone();
    let t0 = times[0];
    for i in 0..times.len() {
        let s = (times[i] - tau - t0) / SAMPLE_STEP;
        if s < 0.0 {
            continue;
        }
        let a = s.floor() as usize;
        let b = (a + 1).min(times.len() - 1);
        if !leader.modified[a] && !leader.modified[b] {
            continue;
        }
        let w = s - a as f64;
        out.x[i] = leader.x[a] + (leader.x[b] - leader.x[a]) * w - d;
        out.v[i] = leader.v[a] + (leader.v[b] - leader.v[a]) * w;
        out.modified[i] = true;
    }
    out
}

fn onset(times: &[f64], base: &Sampled, modified: &Sampled, offset: f64) -> VehicleTruth {
    let first = (0..times.len()).find(|&i| (modified.v[i] - base.v[i]).abs() > AFFECTED_SPEED_DELTA);
    VehicleTruth {
        vehicle_id: base.id.clone(),
        affected: first.is_some(),
        onset: first.map(|i| times[i] + offset),
    }
}

impl Scenario {
    pub fn build(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let n = (spec.duration / SAMPLE_STEP).round() as usize;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * SAMPLE_STEP).collect();
        let tlv_profile = SpeedProfile::new(spec.tlv_profile.clone())?;
        let lv_profile = SpeedProfile::new(spec.lv_profile.clone())?;
        let (from_lane, to_lane) = spec.lanes();

        let target = Chain {
            profile: &tlv_profile,
            x0: spec.tlv_x0,
        };
        let mut target_shifts = vec![Shift {
            delay: 0.0,
            spacing: 0.0,
        }];
        for i in 0..spec.n_target {
            let (tau, d) = spec.target_params(i);
            let prev = target_shifts[i];
            let extra = if i == 0 { spec.target_gap_extra } else { 0.0 };
            target_shifts.push(Shift {
                delay: prev.delay + tau,
                spacing: prev.spacing + d + extra,
            });
        }
        let mut original_shifts = vec![
            Shift {
                delay: 0.0,
                spacing: 0.0,
            },
            Shift {
                delay: spec.sv_tau,
                spacing: spec.sv_d,
            },
        ];
        for i in 0..spec.n_original {
            let (tau, d) = spec.original_params(i);
            let prev = original_shifts[i + 1];
            original_shifts.push(Shift {
                delay: prev.delay + tau,
                spacing: prev.spacing + d,
            });
        }

        // place the original lane so the subject vehicle sits inside the gap
        let unit = Chain {
            profile: &lv_profile,
            x0: 0.0,
        };
        let x0_original = match &spec.insertion {
            Some(ins) => {
                if spec.n_target == 0 {
                    return Err(Error::Scenario("insertion needs at least one target follower".into()));
                }
                let x_tlv = target.x(target_shifts[0], ins.time);
                let x_tfv = target.x(target_shifts[1], ins.time);
                let x_sv = x_tfv + ins.gap_fraction * (x_tlv - x_tfv);
                let (_, d1) = spec.target_params(0);
                if x_sv - x_tfv < d1 || x_tlv - x_sv < spec.sv_d {
                    return Err(Error::Scenario(format!(
                        "gap of {:.2} m at t = {} is too small to insert",
                        x_tlv - x_tfv,
                        ins.time
                    )));
                }
                x_sv - unit.x(original_shifts[1], ins.time)
            }
            None => spec.tlv_x0,
        };
        let original = Chain {
            profile: &lv_profile,
            x0: x0_original,
        };

        let mut baseline = Vec::new();
        baseline.push(Sampled::from_chain(id(spec, "tlv", None), to_lane, &target, target_shifts[0], &times));
        for i in 0..spec.n_target {
            baseline.push(Sampled::from_chain(
                id(spec, "tfv", Some(i)),
                to_lane,
                &target,
                target_shifts[i + 1],
                &times,
            ));
        }
        baseline.push(Sampled::from_chain(id(spec, "lv", None), from_lane, &original, original_shifts[0], &times));
        baseline.push(Sampled::from_chain(id(spec, "sv", None), from_lane, &original, original_shifts[1], &times));
        for i in 0..spec.n_original {
            baseline.push(Sampled::from_chain(
                id(spec, "fv", Some(i)),
                from_lane,
                &original,
                original_shifts[i + 2],
                &times,
            ));
        }

        let tfv = |i: usize| 1 + i;
        let lv_idx = 1 + spec.n_target;
        let sv_idx = lv_idx + 1;
        let fv = |i: usize| sv_idx + 1 + i;

        let mut modified = baseline.clone();
        let mut truth = GroundTruth {
            sv_id: baseline[sv_idx].id.clone(),
            tlv_id: baseline[0].id.clone(),
            lv_id: baseline[lv_idx].id.clone(),
            t_sv_s: None,
            t_lane: None,
            target: Vec::new(),
            original: Vec::new(),
        };

        if let Some(ins) = &spec.insertion {
            let t_switch = ins.time + 0.5 * MANEUVER;
            let (l0, l1) = (lane_lateral(from_lane), lane_lateral(to_lane));
            let sv = &mut modified[sv_idx];
            for (i, &t) in times.iter().enumerate() {
                let frac = ((t - ins.time) / MANEUVER).clamp(0.0, 1.0);
                sv.lateral[i] = l0 + (l1 - l0) * frac;
                if t >= t_switch - 1e-9 {
                    sv.lane[i] = to_lane;
                }
            }
            let first_new = times.iter().position(|&t| t >= t_switch - 1e-9);
            truth.t_sv_s = Some(ins.time + spec.time_offset);
            truth.t_lane = first_new.map(|i| times[i] + spec.time_offset);

            let start_at = |t: f64| times.partition_point(|&s| s < t - 1e-9);

            // target lane: first follower now also follows the subject vehicle
            let (tau1, d1) = spec.target_params(0);
            let base_tfv1 = target_shifts[1];
            let sv_shift = original_shifts[1];
            let first = pursue(
                &times,
                &baseline[tfv(0)],
                start_at(ins.time + tau1),
                |t| target.x(base_tfv1, t).min(original.x(sv_shift, t - tau1) - d1),
                true,
            );
            modified[tfv(0)] = first;
            for i in 1..spec.n_target {
                let (tau, d) = spec.target_params(i);
                let next = newell_follow(&times, &modified[tfv(i - 1)], &baseline[tfv(i)], tau, d);
                modified[tfv(i)] = next;
            }

            // original lane: first follower closes up on the leader
            if spec.n_original > 0 {
                let (tau, d) = spec.original_params(0);
                let lv_shift = original_shifts[0];
                let first = pursue(
                    &times,
                    &baseline[fv(0)],
                    start_at(ins.time + tau),
                    |t| original.x(lv_shift, t - tau) - d,
                    false,
                );
                modified[fv(0)] = first;
                for i in 1..spec.n_original {
                    let (tau, d) = spec.original_params(i);
                    let next = newell_follow(&times, &modified[fv(i - 1)], &baseline[fv(i)], tau, d);
                    modified[fv(i)] = next;
                }
            }
        }

        for i in 0..spec.n_target {
            truth.target.push(onset(&times, &baseline[tfv(i)], &modified[tfv(i)], spec.time_offset));
        }
        for i in 0..spec.n_original {
            truth.original.push(onset(&times, &baseline[fv(i)], &modified[fv(i)], spec.time_offset));
        }

        Ok(Scenario {
            spec: spec.clone(),
            times,
            baseline,
            modified,
            truth,
        })
    }

    fn render_into(&self, vehicles: &[Sampled], dataset: &mut Dataset) -> Result<()> {
        let spec = &self.spec;
        let proj = LocalProjection::new(ORIGIN_LAT, ORIGIN_LON);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Scenario(e.to_string()))?;
        for v in vehicles {
            if dataset.tracks.contains_key(&v.id) {
                return Err(Error::Scenario(format!("duplicate vehicle id {}", v.id)));
            }
            let mut track = VehicleTrack::new(v.id.clone(), "car");
            for i in 0..self.times.len() {
                let jitter = if spec.jitter > 0.0 {
                    rng.random_range(-spec.jitter..spec.jitter)
                } else {
                    0.0
                };
                let dx = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                let x = v.x[i] + dx;
                // passing lane lies to the right of travel; the road heads east
                let (lat, lon) = proj.unproject(x, -(v.lateral[i] + jitter));
                track.points.push(TrajectoryPoint {
                    t: self.times[i] + spec.time_offset,
                    x,
                    speed: v.v[i],
                    lane_id: v.lane[i],
                    lateral: None,
                    kilopost: KILOPOST_ORIGIN - x,
                    lat,
                    lon,
                });
            }
            dataset.insert(track);
        }
        Ok(())
    }

    fn empty_dataset() -> Dataset {
        Dataset::new("synth", KILOPOST_ORIGIN, TIME_ORIGIN_MS)
    }

    /// Scene without the lane change, noise applied.
    pub fn baseline_dataset(&self) -> Result<Dataset> {
        let mut ds = Self::empty_dataset();
        self.render_into(&self.baseline, &mut ds)?;
        Ok(ds)
    }

    /// Scene with the lane change, noise applied. Uses the same noise
    /// realization as the baseline.
    pub fn dataset(&self) -> Result<Dataset> {
        let mut ds = Self::empty_dataset();
        self.render_into(&self.modified, &mut ds)?;
        Ok(ds)
    }

    /// Add this scene's modified trajectories to a shared dataset.
    pub fn append_to(&self, dataset: &mut Dataset) -> Result<()> {
        self.render_into(&self.modified, dataset)
    }

    /// Write `dataset.csv` and `ground_truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_dataset_file(&self.dataset()?, &dir.join("dataset.csv"))?;
        let path = dir.join("ground_truth.json");
        let json = serde_json::to_string_pretty(&self.truth)?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Baseline platoon: every follower is an exact Newell follower of its
/// leader, and the subject vehicle stays in its lane.
pub fn generate_platoon(spec: &ScenarioSpec) -> Result<Dataset> {
    Scenario::build(spec)?.baseline_dataset()
}

/// The same scene with the lane change applied, plus its ground truth.
pub fn inject_lane_change(spec: &ScenarioSpec) -> Result<(Dataset, GroundTruth)> {
    let s = Scenario::build(spec)?;
    Ok((s.dataset()?, s.truth))
}
