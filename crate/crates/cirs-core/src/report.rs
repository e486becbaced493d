//! Score-distribution reporting: fixed-bin histogram and summary quantiles.

use serde::Serialize;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// Bin i covers [i/20, (i+1)/20).
    pub counts: [usize; HISTOGRAM_BINS],
    pub total: usize,
}

pub fn histogram(scores: &[f64]) -> Histogram {
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &s in scores {
        let bin = ((s * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    Histogram {
        counts,
        total: scores.len(),
    }
}

impl Histogram {
    pub fn bin_bounds(i: usize) -> (f64, f64) {
        (
            i as f64 / HISTOGRAM_BINS as f64,
            (i + 1) as f64 / HISTOGRAM_BINS as f64,
        )
    }

    /// Renders the text histogram, one line per bin.
    pub fn render(&self) -> String {
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let mut out = String::new();
        for (i, &c) in self.counts.iter().enumerate() {
            let (lo, hi) = Self::bin_bounds(i);
            let width = c * 50 / max;
            out.push_str(&format!("[{lo:.2},{hi:.2}) {c:>6} {}\n", "#".repeat(width)));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let (lo, hi) = Self::bin_bounds(i);
            out.push_str(&format!("{lo:.2},{hi:.2},{c}\n"));
        }
        out
    }
}

/// Quantile by linear interpolation between order statistics
/// (rank = p * (n - 1) over the sorted values).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Quantiles {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

pub fn summary_quantiles(scores: &[f64]) -> Option<Quantiles> {
    if scores.is_empty() {
        return None;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Quantiles {
        p10: quantile(&sorted, 0.10),
        p50: quantile(&sorted, 0.50),
        p90: quantile(&sorted, 0.90),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_scores_occupy_a_single_bin() {
        let h = histogram(&[0.375; 40]);
        assert_eq!(h.counts.iter().sum::<usize>(), 40);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        // 0.375 * 20 = 7.5 -> bin 7
        assert_eq!(h.counts[7], 40);
    }

    #[test]
    fn quantiles_match_sort_oracle() {
        let scores: Vec<f64> = (0..1000)
            .map(|i| ((i as f64 * 131.0 + 17.0) % 997.0) / 997.0)
            .collect();
        let q = summary_quantiles(&scores).unwrap();

        // oracle: sort, pick by interpolated rank, written out longhand
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        for (p, got) in [(0.10, q.p10), (0.50, q.p50), (0.90, q.p90)] {
            let rank: f64 = p * 999.0;
            let lo = sorted[rank.floor() as usize];
            let hi = sorted[rank.ceil() as usize];
            let expected = lo + (hi - lo) * (rank - rank.floor());
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_header_and_twenty_rows() {
        let csv = histogram(&[0.1, 0.9]).to_csv();
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.starts_with("bin_low,bin_high,count\n"));
    }
}
