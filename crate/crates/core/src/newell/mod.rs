//! Newell car-following calibration and kinematic-wave demarcation times.
//!
//! Under the Newell model a follower replays its leader's trajectory shifted
//! by a reaction time `tau` and a minimum spacing `d`:
//! `x_j(t) = x_{j-1}(t - tau) - d`. On equilibrium data the spacing is
//! `d + v * tau`, so a disturbance takes exactly `tau` to travel from one
//! vehicle to the next. Demarcation times are therefore cumulative sums of the
//! calibrated reaction times.

pub mod optim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{VehicleTrack, SAMPLE_STEP, TIME_EPS};
use optim::{nelder_mead_bounded, Bound, NelderMeadOptions};

pub const TAU_BOUNDS: Bound = Bound::new(0.1, 5.0);
pub const D_BOUNDS: Bound = Bound::new(0.1, 10.0);
/// Shortest calibration range accepted (s).
pub const MIN_CALIBRATION_RANGE: f64 = 5.0;
/// Grid resolution of the coarse search, for both tau (s) and d (m).
const GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewellParams {
    /// Reaction time (s).
    pub tau: f64,
    /// Minimum spacing (m).
    pub d: f64,
    /// Sum of squared position errors at the optimum (m²).
    pub sse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    Ok,
    /// Leader barely moved while the follower did; tau is poorly identified.
    LowConfidence,
    /// Calibration failed or was not trusted; tau was substituted.
    Fallback,
}

impl FitFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            FitFlag::Ok => "ok",
            FitFlag::LowConfidence => "low_confidence",
            FitFlag::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewellFit {
    pub params: NewellParams,
    pub flag: FitFlag,
    /// Requested calibration range.
    pub range: (f64, f64),
    /// Range actually evaluated after trimming for leader history.
    pub evaluated: (f64, f64),
    pub samples: usize,
}

/// Predicted follower positions at `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewellPrediction {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Leading instants dropped because the leader had no data at `t - tau`.
    pub dropped: usize,
}

/// Newell prediction `x'(t) = x_leader(t - tau) - d` with linear
/// interpolation of the leader between samples. The model is a pure
/// translation, so no initial follower position is needed.
pub fn simulate_newell(leader: &VehicleTrack, tau: f64, d: f64, times: &[f64]) -> NewellPrediction {
    let mut out = NewellPrediction {
        times: Vec::with_capacity(times.len()),
        positions: Vec::with_capacity(times.len()),
        dropped: 0,
    };
    for &t in times {
        match leader.position_at(t - tau) {
            Some(x) => {
                out.times.push(t);
                out.positions.push(x - d);
            }
            None if out.times.is_empty() => out.dropped += 1,
            None => {}
        }
    }
    out
}

struct Objective<'a> {
    leader: &'a VehicleTrack,
    times: Vec<f64>,
    follower: Vec<f64>,
}

impl Objective<'_> {
    /// `x_f(t) - x_l(t - tau)` for every evaluation time.
    fn residuals(&self, tau: f64) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.follower)
            .map(|(&t, &xf)| xf - self.leader.position_at(t - tau).unwrap_or(f64::NAN))
            .collect()
    }

    fn sse(&self, tau: f64, d: f64) -> f64 {
        self.residuals(tau).iter().map(|r| (r + d) * (r + d)).sum()
    }
}

/// Fit `(tau, d)` minimizing the squared position error over `range`.
///
/// A 0.1 s × 0.1 m grid over the whole box is searched first; ties go to the
/// grid point nearest the box center. Bounded Nelder–Mead then refines from
/// the best grid point, and the better of the two is returned.
pub fn calibrate_newell(
    follower: &VehicleTrack,
    leader: &VehicleTrack,
    range: (f64, f64),
) -> Result<NewellFit> {
    let (start, end) = range;
    let length = end - start;
    if !(length >= MIN_CALIBRATION_RANGE - TIME_EPS) {
        return Err(Error::RangeTooShort {
            length,
            required: MIN_CALIBRATION_RANGE,
        });
    }
    if !follower.covers(start, end) {
        return Err(Error::Coverage { start, end });
    }
    let leader_start = leader.start_time().ok_or(Error::EmptyTrack)?;
    // every tau in the box must see leader data: trim the front if needed
    let history = start - leader_start;
    let eval_start = start + (TAU_BOUNDS.hi - history).max(0.0);
    if end - eval_start < MIN_CALIBRATION_RANGE - TIME_EPS {
        return Err(Error::RangeTooShort {
            length: end - eval_start,
            required: MIN_CALIBRATION_RANGE,
        });
    }
    if !leader.covers(eval_start - TAU_BOUNDS.hi, end - TAU_BOUNDS.lo) {
        return Err(Error::Coverage {
            start: eval_start - TAU_BOUNDS.hi,
            end: end - TAU_BOUNDS.lo,
        });
    }

    let points = follower.points_between(eval_start, end);
    let objective = Objective {
        leader,
        times: points.iter().map(|p| p.t).collect(),
        follower: points.iter().map(|p| p.x).collect(),
    };
    let n = objective.times.len() as f64;

    // coarse grid, d handled in closed form per tau via the sums of residuals
    let center = (TAU_BOUNDS.center(), D_BOUNDS.center());
    let steps = |b: Bound| ((b.hi - b.lo) / GRID_STEP).round() as usize;
    let mut best = (f64::INFINITY, TAU_BOUNDS.lo, D_BOUNDS.lo, f64::INFINITY);
    for i in 0..=steps(TAU_BOUNDS) {
        let tau = TAU_BOUNDS.lo + i as f64 * GRID_STEP;
        let r = objective.residuals(tau);
        let s1: f64 = r.iter().sum();
        let s2: f64 = r.iter().map(|v| v * v).sum();
        for k in 0..=steps(D_BOUNDS) {
            let d = D_BOUNDS.lo + k as f64 * GRID_STEP;
            let sse = (s2 + 2.0 * d * s1 + n * d * d).max(0.0);
            let dist = (tau - center.0).hypot(d - center.1);
            let tol = 1e-9 * best.0.max(1e-9);
            if sse < best.0 - tol || ((sse - best.0).abs() <= tol && dist < best.3) {
                best = (sse, tau, d, dist);
            }
        }
    }
    let (grid_tau, grid_d) = (best.1, best.2);
    let grid_sse = objective.sse(grid_tau, grid_d);

    let refined = nelder_mead_bounded(
        |x: &[f64]| objective.sse(x[0], x[1]),
        &[grid_tau, grid_d],
        &[TAU_BOUNDS, D_BOUNDS],
        &NelderMeadOptions {
            initial_step: vec![GRID_STEP / 2.0, GRID_STEP / 2.0],
            max_iterations: 400,
            f_tol: 1e-14 * (1.0 + grid_sse),
            x_tol: 1e-9,
        },
    );
    let params = if refined.f <= grid_sse {
        NewellParams {
            tau: refined.x[0],
            d: refined.x[1],
            sse: refined.f,
        }
    } else {
        NewellParams {
            tau: grid_tau,
            d: grid_d,
            sse: grid_sse,
        }
    };

    let leader_moved = leader
        .position_at(end - params.tau)
        .zip(leader.position_at(eval_start - params.tau))
        .map(|(b, a)| (b - a).abs())
        .unwrap_or(0.0);
    let follower_moved = objective
        .follower
        .last()
        .zip(objective.follower.first())
        .map(|(b, a)| (b - a).abs())
        .unwrap_or(0.0);
    let flag = if leader_moved < 1.0 && follower_moved >= 1.0 {
        FitFlag::LowConfidence
    } else {
        FitFlag::Ok
    };

    Ok(NewellFit {
        params,
        flag,
        range,
        evaluated: (eval_start, end),
        samples: objective.times.len(),
    })
}

/// Demarcation times of followers `1..=N` in one lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemarcationSchedule {
    /// Lane-change start time of the subject vehicle; the zeroth entry.
    pub t_sv_s: f64,
    pub times: Vec<f64>,
}

impl DemarcationSchedule {
    pub fn new(t_sv_s: f64) -> Self {
        DemarcationSchedule {
            t_sv_s,
            times: Vec::new(),
        }
    }

    /// Demarcation time of the most recently added follower, or the start
    /// time itself when empty.
    pub fn last(&self) -> f64 {
        self.times.last().copied().unwrap_or(self.t_sv_s)
    }

    /// Append the next follower's reaction time. Returns its demarcation
    /// time, or `None` (leaving the schedule unchanged) if it would fall
    /// after `horizon`.
    pub fn push(&mut self, tau: f64, horizon: f64) -> Option<f64> {
        let next = self.last() + tau;
        if next > horizon + TIME_EPS {
            return None;
        }
        self.times.push(next);
        Some(next)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Cumulative demarcation times `T_i = T_sv + sum_{j<=i} tau_j`, truncated
/// at the first follower whose time exceeds `horizon`.
pub fn demarcation_times(t_sv_s: f64, params: &[NewellParams], horizon: f64) -> DemarcationSchedule {
    let mut schedule = DemarcationSchedule::new(t_sv_s);
    for p in params {
        if schedule.push(p.tau, horizon).is_none() {
            break;
        }
    }
    schedule
}

/// Median of successfully calibrated reaction times, or 1.0 s if none.
pub fn fallback_tau(successful: &[f64]) -> f64 {
    if successful.is_empty() {
        return 1.0;
    }
    let mut v = successful.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Sample instants on the 0.1 s grid covering `[start, end]`.
pub fn grid_times(start: f64, end: f64) -> Vec<f64> {
    let first = (start / SAMPLE_STEP - 1e-9).ceil() as i64;
    let last = (end / SAMPLE_STEP + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * SAMPLE_STEP).collect()
}
