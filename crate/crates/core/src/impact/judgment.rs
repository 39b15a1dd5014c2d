use serde::{Deserialize, Serialize};

/// A maximal run of Θ = 1. `start` is 1-based within its segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub len: usize,
}

impl Run {
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSeries {
    pub pre: Vec<bool>,
    pub post: Vec<bool>,
    /// Longest run found in the pre segment before adjustment.
    pub omega_star: usize,
    pub pre_runs: Vec<Run>,
    pub post_runs: Vec<Run>,
}

/// Group the 1-based positions of Θ = 1 into runs of consecutive indices.
pub fn runs_of_ones(theta: &[bool]) -> Vec<Run> {
    let k: Vec<usize> = theta
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(i, _)| i + 1)
        .collect();
    let mut runs = Vec::new();
    let mut z1 = 0;
    while z1 < k.len() {
        let mut z2 = 1;
        while z1 + z2 < k.len() && k[z1] + z2 == k[z1 + z2] {
            z2 += 1;
        }
        runs.push(Run { start: k[z1], len: z2 });
        z1 += z2;
    }
    runs
}

/// Find the longest pre-segment run and zero every pre run no longer than
/// it, which clears the pre segment entirely. Post runs are taken from the
/// unmodified post segment.
pub fn analyze_runs(pre: &[bool], post: &[bool]) -> StatusSeries {
    let pre_runs = runs_of_ones(pre);
    let omega_star = pre_runs.iter().map(|r| r.len).max().unwrap_or(0);
    let mut adjusted = pre.to_vec();
    for r in pre_runs.iter().filter(|r| r.len <= omega_star) {
        for i in r.indices() {
            adjusted[i - 1] = false;
        }
    }
    StatusSeries {
        pre: adjusted,
        post: post.to_vec(),
        omega_star,
        post_runs: runs_of_ones(post),
        pre_runs,
    }
}

/// Post-local indices (1-based, ascending) of runs longer than `omega_star`.
pub fn affected_intervals(post_runs: &[Run], omega_star: usize) -> Vec<usize> {
    post_runs
        .iter()
        .filter(|r| r.len > omega_star)
        .flat_map(|r| r.indices())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub upsilon: bool,
    pub t_s: Option<f64>,
    pub t_e: Option<f64>,
    pub duration: f64,
}

pub fn follower_verdict(k_a: &[usize], t_s: f64, dt: f64) -> Verdict {
    match (k_a.iter().min(), k_a.iter().max()) {
        (Some(&lo), Some(&hi)) => {
            let start = t_s + (lo - 1) as f64 * dt;
            let end = t_s + hi as f64 * dt;
            Verdict {
                upsilon: true,
                t_s: Some(start),
                t_e: Some(end),
                // exact multiple of dt, independent of t_s rounding
                duration: (hi - lo + 1) as f64 * dt,
            }
        }
        _ => Verdict {
            upsilon: false,
            t_s: None,
            t_e: None,
            duration: 0.0,
        },
    }
}
