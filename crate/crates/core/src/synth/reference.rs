//! Brute-force restatement of the affected judgment, kept free of any code
//! shared with [`crate::impact`] so the two can be tested against each other.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOutcome {
    pub theta_pre: Vec<bool>,
    pub theta_post: Vec<bool>,
    pub omega_star: usize,
    /// 1-based post-segment indices.
    pub k_a: Vec<usize>,
    pub upsilon: bool,
    pub t_a: f64,
}

/// Length of the run of ones that contains position `i`, by walking out in
/// both directions.
fn run_length_at(theta: &[bool], i: usize) -> usize {
    if !theta[i] {
        return 0;
    }
    let mut lo = i;
    while lo > 0 && theta[lo - 1] {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < theta.len() && theta[hi + 1] {
        hi += 1;
    }
    hi - lo + 1
}

/// Judgment from already classified status sequences.
pub fn reference_from_status(theta_pre: &[bool], theta_post: &[bool], dt: f64) -> ReferenceOutcome {
    let mut omega_star = 0;
    for i in 0..theta_pre.len() {
        omega_star = omega_star.max(run_length_at(theta_pre, i));
    }
    let mut k_a = Vec::new();
    for i in 0..theta_post.len() {
        if run_length_at(theta_post, i) > omega_star {
            k_a.push(i + 1);
        }
    }
    let t_a = match (k_a.first(), k_a.last()) {
        (Some(&first), Some(&last)) => (last - first + 1) as f64 * dt,
        _ => 0.0,
    };
    ReferenceOutcome {
        theta_pre: theta_pre.to_vec(),
        theta_post: theta_post.to_vec(),
        omega_star,
        upsilon: !k_a.is_empty(),
        k_a,
        t_a,
    }
}

/// Judgment from raw TDB values: band by sign class, closed-interval
/// membership, then the run rule.
pub fn reference_quantifier(pre: &[f64], post: &[f64], dt: f64) -> ReferenceOutcome {
    let mut pos_sum = 0.0;
    let mut pos_n = 0usize;
    let mut neg_sum = 0.0;
    let mut neg_n = 0usize;
    for &v in pre {
        if v >= 0.0 {
            pos_sum += v;
            pos_n += 1;
        } else {
            neg_sum += v;
            neg_n += 1;
        }
    }
    let mu_p = if pos_n > 0 { pos_sum / pos_n as f64 } else { 0.0 };
    let mu_n = if neg_n > 0 { neg_sum / neg_n as f64 } else { 0.0 };
    let mut var_p = 0.0;
    let mut var_n = 0.0;
    for &v in pre {
        if v >= 0.0 {
            var_p += (v - mu_p) * (v - mu_p);
        } else {
            var_n += (v - mu_n) * (v - mu_n);
        }
    }
    let sd_p = if pos_n > 0 { (var_p / pos_n as f64).sqrt() } else { 0.0 };
    let sd_n = if neg_n > 0 { (var_n / neg_n as f64).sqrt() } else { 0.0 };
    let status = |v: f64| {
        let inside = if v >= 0.0 {
            mu_p - sd_p <= v && v <= mu_p + sd_p
        } else {
            mu_n - sd_n <= v && v <= mu_n + sd_n
        };
        !inside
    };
    let theta_pre: Vec<bool> = pre.iter().map(|&v| status(v)).collect();
    let theta_post: Vec<bool> = post.iter().map(|&v| status(v)).collect();
    reference_from_status(&theta_pre, &theta_post, dt)
}
