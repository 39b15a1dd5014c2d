use super::types::{VehicleTrack, SAMPLE_STEP, TIME_EPS};
use crate::error::{Error, Result};

/// Replace speeds by a centered moving average spanning `window` seconds.
///
/// The window holds `round(window / 0.1)` samples, widened to the next odd
/// count, and shrinks symmetrically near the ends of each contiguous segment
/// so it never averages across an unfilled gap. Positions are untouched.
pub fn smooth_speeds(track: &VehicleTrack, window: f64) -> Result<VehicleTrack> {
    if track.is_empty() {
        return Err(Error::EmptyTrack);
    }
    if !(window >= SAMPLE_STEP - TIME_EPS) {
        return Err(Error::config(
            "smoothing_window",
            format!("window {window} s is shorter than one sample"),
        ));
    }
    let samples = (window / SAMPLE_STEP).round() as usize;
    let half = samples / 2;

    let mut out = track.clone();
    for (lo, hi) in segments(track) {
        let raw: Vec<f64> = track.points[lo..hi].iter().map(|p| p.speed).collect();
        for (i, v) in moving_average(&raw, half).into_iter().enumerate() {
            out.points[lo + i].speed = v;
        }
    }
    Ok(out)
}

/// Index ranges of the track between unfilled gaps.
fn segments(track: &VehicleTrack) -> Vec<(usize, usize)> {
    let mut cuts = vec![0];
    for g in &track.gaps {
        let idx = track.points.partition_point(|p| p.t < g.end - TIME_EPS);
        if idx > 0 && idx < track.points.len() {
            cuts.push(idx);
        }
    }
    cuts.push(track.points.len());
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let window = &values[i - h..=i + h];
            if window.iter().all(|&v| v == values[i]) {
                values[i]
            } else {
                window.iter().sum::<f64>() / window.len() as f64
            }
        })
        .collect()
}
