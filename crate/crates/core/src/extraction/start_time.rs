use crate::error::{Error, Result};
use crate::trajectory::TIME_EPS;

/// History required before the crossing (s).
pub const MIN_HISTORY: f64 = 2.0;

/// Locate the lane-change start: the earliest instant from which the lateral
/// offset moves consistently toward the target lane up to `t_lane`.
///
/// `direction` is the sign of lateral motion toward the target lane. Working
/// on `u = direction * lateral`:
///
/// 1. Walk back from `t_lane` while no earlier sample exceeds the running
///    minimum of later samples by more than `eps`. Where this stops, the
///    vehicle was still oscillating.
/// 2. Within that monotone stretch, take the last sample still within `eps`
///    of the stretch's minimum — the moment the vehicle leaves its lane
///    position for good.
/// 3. Back off over any strictly increasing samples just before it, which
///    belong to the departure itself.
///
/// The result depends only on differences of `u` and on relative times, so it
/// is unchanged by constant lateral or time shifts.
pub fn detect_start_time(series: &[(f64, f64)], t_lane: f64, direction: f64, eps: f64) -> Result<f64> {
    let end = series.partition_point(|&(t, _)| t <= t_lane + TIME_EPS);
    let series = &series[..end];
    let available = series.first().map_or(0.0, |&(t, _)| t_lane - t);
    if series.len() < 2 || available < MIN_HISTORY - TIME_EPS {
        return Err(Error::SeriesTooShort {
            available,
            required: MIN_HISTORY,
        });
    }
    let sign = if direction < 0.0 { -1.0 } else { 1.0 };
    let u: Vec<f64> = series.iter().map(|&(_, l)| sign * l).collect();
    let last = u.len() - 1;

    let mut stop = 0;
    let mut running_min = u[last];
    for i in (0..last).rev() {
        if u[i] - running_min > eps {
            stop = i + 1;
            break;
        }
        running_min = running_min.min(u[i]);
    }

    let floor = u[stop..].iter().copied().fold(f64::INFINITY, f64::min);
    let mut onset = (stop..=last)
        .rev()
        .find(|&i| u[i] <= floor + eps)
        .unwrap_or(stop);
    while onset > stop && u[onset - 1] < u[onset] {
        onset -= 1;
    }
    Ok(series[onset].0)
}
