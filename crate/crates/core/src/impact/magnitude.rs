use serde::{Deserialize, Serialize};

use super::band::{band_stats, classify_status, ThresholdBand};
use super::judgment::{affected_intervals, analyze_runs, follower_verdict, StatusSeries};
use super::tdb::TdbSeries;
use crate::newell::DemarcationSchedule;

/// Which branch of the correction produced δ, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtdbCase {
    BelowNegative,
    AboveNegative,
    BelowPositive,
    AbovePositive,
    InBand,
}

/// Correct a TDB entry by the band edge it crossed; in-band values map to
/// zero. Cases are tried in a fixed order and the first match wins.
pub fn compute_ctdb(tdb: f64, band: &ThresholdBand) -> (f64, CtdbCase) {
    let neg_lo = band.mu_neg - band.sigma_neg;
    let neg_hi = band.mu_neg + band.sigma_neg;
    let pos_lo = band.mu_pos - band.sigma_pos;
    let pos_hi = band.mu_pos + band.sigma_pos;
    let (delta, case) = if tdb < neg_lo {
        (neg_lo, CtdbCase::BelowNegative)
    } else if neg_hi < tdb && tdb < 0.0 {
        (neg_hi, CtdbCase::AboveNegative)
    } else if 0.0 < tdb && tdb < pos_lo {
        (pos_lo, CtdbCase::BelowPositive)
    } else if tdb > pos_hi {
        (pos_hi, CtdbCase::AbovePositive)
    } else {
        (tdb, CtdbCase::InBand)
    };
    (tdb - delta, case)
}

pub fn follower_magnitude(ctdb: &[f64], k_a: &[usize]) -> f64 {
    k_a.iter().map(|&k| ctdb[k - 1]).sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub empty_positive_class: bool,
    pub empty_negative_class: bool,
    /// Correction branches that cannot match for this band: the
    /// above-negative branch when μ⁻ + σ⁻ ≥ 0, the below-positive branch
    /// when μ⁺ − σ⁺ ≤ 0.
    pub vacuous_cases: u8,
    /// Post entries where a positive TDB was corrected to a negative value.
    pub positive_sign_flips: usize,
    /// Post entries where a negative TDB was corrected to a positive value.
    pub negative_sign_flips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerAnalysis {
    /// 1-based position upstream of the subject vehicle.
    pub follower_index: usize,
    pub tdb: TdbSeries,
    pub band: ThresholdBand,
    pub status: StatusSeries,
    pub k_a: Vec<usize>,
    pub upsilon: bool,
    pub t_s: Option<f64>,
    pub t_e: Option<f64>,
    pub t_a: f64,
    /// Corrected TDB over the post segment.
    pub ctdb: Vec<f64>,
    pub w_a: f64,
    pub diagnostics: Diagnostics,
}

/// Run the full per-follower judgment on a TDB series.
pub fn analyze_follower(follower_index: usize, tdb: TdbSeries) -> FollowerAnalysis {
    let band = band_stats(&tdb.pre);
    let pre: Vec<bool> = tdb.pre.iter().map(|&v| classify_status(v, &band)).collect();
    let post: Vec<bool> = tdb.post.iter().map(|&v| classify_status(v, &band)).collect();
    let status = analyze_runs(&pre, &post);
    let k_a = affected_intervals(&status.post_runs, status.omega_star);
    let verdict = follower_verdict(&k_a, tdb.t_s, tdb.dt);

    let mut diagnostics = Diagnostics {
        empty_positive_class: band.pos_empty(),
        empty_negative_class: band.neg_empty(),
        vacuous_cases: u8::from(band.mu_neg + band.sigma_neg >= 0.0)
            + u8::from(band.mu_pos - band.sigma_pos <= 0.0),
        ..Diagnostics::default()
    };
    let ctdb: Vec<f64> = tdb
        .post
        .iter()
        .map(|&v| {
            let (c, case) = compute_ctdb(v, &band);
            match case {
                CtdbCase::BelowPositive => diagnostics.positive_sign_flips += 1,
                CtdbCase::AboveNegative => diagnostics.negative_sign_flips += 1,
                _ => {}
            }
            c
        })
        .collect();
    let w_a = follower_magnitude(&ctdb, &k_a);

    FollowerAnalysis {
        follower_index,
        tdb,
        band,
        status,
        upsilon: verdict.upsilon,
        t_s: verdict.t_s,
        t_e: verdict.t_e,
        t_a: verdict.duration,
        k_a,
        ctdb,
        w_a,
        diagnostics,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Target,
    Original,
}

impl Lane {
    pub fn as_str(self) -> &'static str {
        match self {
            Lane::Target => "target",
            Lane::Original => "original",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneImpactSummary {
    pub lane: Lane,
    pub n: usize,
    pub n_a: usize,
    pub w_a: f64,
    pub t_a_total: f64,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub t_last: Option<f64>,
}

impl LaneImpactSummary {
    pub fn empty(lane: Lane) -> Self {
        LaneImpactSummary {
            lane,
            n: 0,
            n_a: 0,
            w_a: 0.0,
            t_a_total: 0.0,
            t_start: None,
            t_end: None,
            t_last: None,
        }
    }
}

/// Count of followers up to (excluding) the first pair of consecutive
/// unaffected ones; all of them if no such pair exists.
pub fn affected_count(upsilon: &[bool]) -> usize {
    upsilon
        .windows(2)
        .position(|w| !w[0] && !w[1])
        .unwrap_or(upsilon.len())
}

/// Aggregate one lane. `followers[i]` is follower `i + 1` and its
/// demarcation time is `schedule.times[i]`.
pub fn lane_summary(
    lane: Lane,
    followers: &[FollowerAnalysis],
    schedule: &DemarcationSchedule,
    dt: f64,
) -> LaneImpactSummary {
    let upsilon: Vec<bool> = followers.iter().map(|f| f.upsilon).collect();
    let n_a = affected_count(&upsilon);
    let counted = &followers[..n_a];
    let w_a: f64 = counted.iter().filter(|f| f.upsilon).map(|f| f.w_a).sum();

    let mut summary = LaneImpactSummary {
        n: followers.len(),
        n_a,
        w_a,
        ..LaneImpactSummary::empty(lane)
    };
    let first = counted.iter().position(|f| f.upsilon);
    let last = counted.iter().rposition(|f| f.upsilon);
    if let (Some(i), Some(j)) = (first, last) {
        let k_min = counted[i].k_a[0];
        let k_max = *counted[j].k_a.last().expect("affected follower has intervals");
        let t_start = schedule.times[i] + k_min as f64 * dt;
        let t_end = schedule.times[j] + k_max as f64 * dt;
        let t_last = t_end - t_start;
        let longest = counted.iter().map(|f| f.t_a).fold(0.0, f64::max);
        summary.t_start = Some(t_start);
        summary.t_end = Some(t_end);
        summary.t_last = Some(t_last);
        summary.t_a_total = t_last.max(longest);
    }
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMagnitude {
    pub value: f64,
    pub original_missing: bool,
}

pub fn global_magnitude(
    target: &LaneImpactSummary,
    original: Option<&LaneImpactSummary>,
) -> GlobalMagnitude {
    GlobalMagnitude {
        value: target.w_a + original.map_or(0.0, |o| o.w_a),
        original_missing: original.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(mu_pos: f64, sigma_pos: f64, mu_neg: f64, sigma_neg: f64) -> ThresholdBand {
        ThresholdBand {
            mu_pos,
            sigma_pos,
            mu_neg,
            sigma_neg,
            m: 1,
            negatives: 1,
        }
    }

    #[test]
    fn ctdb_cases() {
        let b = band(1.0, 0.5, -2.0, 1.0);
        assert_eq!(compute_ctdb(2.0, &b), (0.5, CtdbCase::AbovePositive));
        assert_eq!(compute_ctdb(1.2, &b), (0.0, CtdbCase::InBand));
        assert_eq!(compute_ctdb(-4.0, &b), (-1.0, CtdbCase::BelowNegative));
        assert_eq!(compute_ctdb(0.0, &b).0, 0.0);
        let (c, case) = compute_ctdb(0.2, &b);
        assert_eq!(case, CtdbCase::BelowPositive);
        assert!(c < 0.0);
    }

    #[test]
    fn in_band_implies_zero_ctdb() {
        let b = band(0.3, 0.8, -0.4, 0.1);
        for i in -200..=200 {
            let v = i as f64 * 0.01;
            if !classify_status(v, &b) {
                assert_eq!(compute_ctdb(v, &b).0, 0.0, "{v}");
            }
        }
    }

    #[test]
    fn magnitude_sums_affected_entries() {
        assert_eq!(follower_magnitude(&[-0.5, -0.3, 9.0], &[1, 2]), -0.8);
        assert_eq!(follower_magnitude(&[1.0], &[]), 0.0);
    }

    #[test]
    fn affected_count_scan() {
        assert_eq!(affected_count(&[false, false, true]), 0);
        assert_eq!(affected_count(&[true, true, false, false, true]), 2);
        assert_eq!(affected_count(&[true, false, true, true]), 4);
        assert_eq!(affected_count(&[false]), 1);
        assert_eq!(affected_count(&[]), 0);
    }

    fn follower(index: usize, t_s: f64, post: &[f64]) -> FollowerAnalysis {
        let pre = vec![0.1, -0.1, 0.1, -0.1, 0.1, -0.1, 0.1, -0.1, 0.1, -0.1];
        analyze_follower(
            index,
            TdbSeries {
                dt: 0.5,
                pre,
                post: post.to_vec(),
                t_lb: t_s - 5.0,
                t_s,
                t_ub: t_s + 0.5 * post.len() as f64,
            },
        )
    }

    #[test]
    fn lane_aggregation() {
        let mut sched = DemarcationSchedule::new(10.0);
        sched.times = vec![11.0, 12.0, 13.0, 14.0];
        let fs = vec![
            follower(1, 11.0, &[0.1, -1.0, -1.0, 0.1]),
            follower(2, 12.0, &[-2.0, -2.0, -2.0, 0.1]),
            follower(3, 13.0, &[0.1; 4]),
            follower(4, 14.0, &[0.1; 4]),
        ];
        let s = lane_summary(Lane::Target, &fs, &sched, 0.5);
        assert_eq!(s.n, 4);
        assert_eq!(s.n_a, 2);
        // follower 1: K = {2,3}; follower 2: K = {1,2,3}
        assert_eq!(fs[0].k_a, vec![2, 3]);
        assert!((s.w_a - (fs[0].w_a + fs[1].w_a)).abs() < 1e-12);
        assert!(s.w_a < 0.0);
        assert_eq!(s.t_start, Some(12.0));
        assert_eq!(s.t_end, Some(13.5));
        assert_eq!(s.t_a_total, 1.5);
    }

    #[test]
    fn end_time_falls_back_to_last_affected() {
        let mut sched = DemarcationSchedule::new(0.0);
        sched.times = vec![1.0, 2.0];
        let fs = vec![follower(1, 1.0, &[-3.0, -3.0]), follower(2, 2.0, &[0.1, 0.1])];
        let s = lane_summary(Lane::Original, &fs, &sched, 0.5);
        assert_eq!(s.n_a, 2);
        assert_eq!(s.t_end, Some(2.0));
    }

    #[test]
    fn global_sum() {
        let mut t = LaneImpactSummary::empty(Lane::Target);
        let mut o = LaneImpactSummary::empty(Lane::Original);
        t.w_a = -10.0;
        o.w_a = 4.0;
        assert_eq!(global_magnitude(&t, Some(&o)).value, -6.0);
        let g = global_magnitude(&t, None);
        assert!(g.original_missing && g.value == -10.0);
    }
}
