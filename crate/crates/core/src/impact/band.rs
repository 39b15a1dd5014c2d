use serde::{Deserialize, Serialize};

/// Spread of the pre-demarcation TDB values, split by sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBand {
    pub mu_pos: f64,
    pub sigma_pos: f64,
    pub mu_neg: f64,
    pub sigma_neg: f64,
    /// Count of nonnegative entries.
    pub m: usize,
    /// Count of negative entries.
    pub negatives: usize,
}

impl ThresholdBand {
    pub fn pos_empty(&self) -> bool {
        self.m == 0
    }

    pub fn neg_empty(&self) -> bool {
        self.negatives == 0
    }

    /// Closed in-band test; values of a sign whose class was empty are
    /// in band only when they equal zero.
    pub fn contains(&self, tdb: f64) -> bool {
        if tdb >= 0.0 {
            tdb >= self.mu_pos - self.sigma_pos && tdb <= self.mu_pos + self.sigma_pos
        } else {
            tdb >= self.mu_neg - self.sigma_neg && tdb <= self.mu_neg + self.sigma_neg
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    (mu, var.sqrt())
}

/// Mean and population standard deviation of the nonnegative and negative
/// entries separately. An empty class yields `(0, 0)`.
pub fn band_stats(pre: &[f64]) -> ThresholdBand {
    let (pos, neg): (Vec<f64>, Vec<f64>) = pre.iter().partition(|&&v| v >= 0.0);
    let (mu_pos, sigma_pos) = mean_std(&pos);
    let (mu_neg, sigma_neg) = mean_std(&neg);
    ThresholdBand {
        mu_pos,
        sigma_pos,
        mu_neg,
        sigma_neg,
        m: pos.len(),
        negatives: neg.len(),
    }
}

/// Θ: true when the entry falls outside the band of its sign.
pub fn classify_status(tdb: f64, band: &ThresholdBand) -> bool {
    !band.contains(tdb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn symmetric_classes() {
        let b = band_stats(&[1.0, 1.0, -2.0, -2.0]);
        assert_eq!((b.mu_pos, b.sigma_pos, b.mu_neg, b.sigma_neg, b.m), (1.0, 0.0, -2.0, 0.0, 2));
    }

    #[test]
    fn population_divisor() {
        let b = band_stats(&[0.5, 1.5, -1.0, -3.0]);
        assert!(close(b.mu_pos, 1.0) && close(b.sigma_pos, 0.5));
        assert!(close(b.mu_neg, -2.0) && close(b.sigma_neg, 1.0));
    }

    #[test]
    fn empty_negative_class() {
        let b = band_stats(&[0.0, 2.0, 4.0]);
        assert_eq!((b.mu_neg, b.sigma_neg), (0.0, 0.0));
        assert!(b.neg_empty());
        assert!(classify_status(-0.01, &b));
    }

    #[test]
    fn zero_counts_as_nonnegative() {
        let b = band_stats(&[0.0, -1.0]);
        assert_eq!(b.m, 1);
        assert_eq!(b.m + b.negatives, 2);
    }

    #[test]
    fn classification_cases() {
        let b = ThresholdBand {
            mu_pos: 1.0,
            sigma_pos: 0.5,
            mu_neg: -2.0,
            sigma_neg: 1.0,
            m: 1,
            negatives: 1,
        };
        assert!(!classify_status(1.2, &b));
        assert!(classify_status(2.0, &b));
        assert!(classify_status(-0.5, &b));
        // closed at both ends
        assert!(!classify_status(1.5, &b));
        assert!(!classify_status(0.5, &b));
        assert!(!classify_status(-3.0, &b));
        assert!(!classify_status(-1.0, &b));
    }
}
