use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::SAMPLE_STEP;

/// Per-interval travel distance bias of a follower against its lane's
/// reference leader, split at the follower's demarcation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdbSeries {
    pub dt: f64,
    /// Potentially unaffected segment, chronological. Entry `n_f - j` (0-based)
    /// covers `[t_s - (j + 1) dt, t_s - j dt]`.
    pub pre: Vec<f64>,
    /// Potentially affected segment. Entry `k` (0-based) covers
    /// `[t_s + k dt, t_s + (k + 1) dt]`.
    pub post: Vec<f64>,
    pub t_lb: f64,
    pub t_s: f64,
    pub t_ub: f64,
}

impl TdbSeries {
    pub fn n_f(&self) -> usize {
        self.pre.len()
    }

    pub fn n_r(&self) -> usize {
        self.post.len()
    }
}

/// Whole intervals of length `dt` that fit in `span`.
pub fn interval_count(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        return 0;
    }
    (span / dt + 1e-9).floor() as usize
}

/// Integrate `follower - reference` speed over consecutive `dt` bins anchored
/// at `t_s`: backward to `t_lb` and forward to `t_ub`. Partial bins at either
/// end are dropped. Each bin uses the trapezoid rule on sub-steps of at most
/// 0.1 s.
pub fn compute_tdb<F, R>(
    follower_speed: F,
    reference_speed: R,
    t_lb: f64,
    t_s: f64,
    t_ub: f64,
    dt: f64,
) -> Result<TdbSeries>
where
    F: Fn(f64) -> Option<f64>,
    R: Fn(f64) -> Option<f64>,
{
    let n_f = interval_count(t_s - t_lb, dt);
    let n_r = interval_count(t_ub - t_s, dt);
    let sub = ((dt / SAMPLE_STEP).round() as usize).max(1);
    let h = dt / sub as f64;

    // ΔV on the shared sub-step grid, offset index i ↦ t_s + (i - n_f·sub)·h
    let total = (n_f + n_r) * sub;
    let mut dv = Vec::with_capacity(total + 1);
    for i in 0..=total {
        let t = t_s + (i as f64 - (n_f * sub) as f64) * h;
        match (follower_speed(t), reference_speed(t)) {
            (Some(vf), Some(vr)) => dv.push(vf - vr),
            _ => {
                return Err(Error::Coverage {
                    start: t_s - n_f as f64 * dt,
                    end: t_s + n_r as f64 * dt,
                })
            }
        }
    }
    let bins: Vec<f64> = dv
        .windows(sub + 1)
        .step_by(sub)
        .map(|w| {
            let inner: f64 = w[1..sub].iter().sum();
            h * (0.5 * (w[0] + w[sub]) + inner)
        })
        .collect();
    debug_assert_eq!(bins.len(), n_f + n_r);
    let post = bins[n_f..].to_vec();
    let mut pre = bins;
    pre.truncate(n_f);
    Ok(TdbSeries {
        dt,
        pre,
        post,
        t_lb,
        t_s,
        t_ub,
    })
}
