use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear speed over time, held constant outside its knots.
/// Position is the exact integral from `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    knots: Vec<(f64, f64)>,
    /// Position at each knot.
    offsets: Vec<f64>,
}

impl SpeedProfile {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Scenario("speed profile needs at least one knot".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[1].0 - w[0].0 < 1e-9) {
            return Err(Error::Scenario("speed profile knot times must be distinct".into()));
        }
        if let Some(&(t, v)) = knots.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(Error::Scenario(format!("negative speed {v} at t = {t}")));
        }
        let mut offsets = vec![0.0; knots.len()];
        for i in 1..knots.len() {
            let (t0, v0) = knots[i - 1];
            let (t1, v1) = knots[i];
            offsets[i] = offsets[i - 1] + 0.5 * (v0 + v1) * (t1 - t0);
        }
        let mut p = SpeedProfile { knots, offsets };
        let shift = p.raw_position(0.0);
        for o in &mut p.offsets {
            *o -= shift;
        }
        Ok(p)
    }

    pub fn constant(speed: f64) -> Result<Self> {
        Self::new(vec![(0.0, speed)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn speed(&self, t: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&(tk, _)| tk <= t);
        if i == 0 {
            return k[0].1;
        }
        if i == k.len() {
            return k[i - 1].1;
        }
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn raw_position(&self, t: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&(tk, _)| tk <= t);
        if i == 0 {
            return self.offsets[0] - k[0].1 * (k[0].0 - t);
        }
        let (t0, v0) = k[i - 1];
        let base = self.offsets[i - 1];
        let dt = t - t0;
        if i == k.len() {
            return base + v0 * dt;
        }
        base + 0.5 * (v0 + self.speed(t)) * dt
    }

    pub fn position(&self, t: f64) -> f64 {
        self.raw_position(t)
    }
}
