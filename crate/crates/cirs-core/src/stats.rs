//! Mergeable per-feature mean/variance accumulation over a corpus.
//!
//! Welford updates with Chan's pairwise merge, so partial accumulators from
//! a parallel reduction combine associatively. Standard deviation is the
//! population form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::AstSummary;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    pub features: FeatureSet<FeatureStats>,
}

/// One slot per structural feature, in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet<T> {
    pub node_count: T,
    pub distinct_kinds: T,
    pub depth: T,
}

impl<T> FeatureSet<T> {
    pub fn as_array(&self) -> [&T; 3] {
        [&self.node_count, &self.distinct_kinds, &self.depth]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n;
        self.n += other.n;
    }

    fn finish(&self) -> FeatureStats {
        FeatureStats {
            mean: self.mean,
            std: if self.n == 0 {
                0.0
            } else {
                (self.m2 / self.n as f64).max(0.0).sqrt()
            },
        }
    }
}

/// Streaming accumulator for the three structural features.
#[derive(Debug, Clone, Copy, Default)]
pub struct StatsAccumulator {
    node_count: Welford,
    distinct_kinds: Welford,
    depth: Welford,
}

impl StatsAccumulator {
    pub fn push(&mut self, summary: &AstSummary) {
        self.node_count.push(summary.node_count as f64);
        self.distinct_kinds.push(summary.distinct_kinds as f64);
        self.depth.push(summary.depth as f64);
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        self.node_count.merge(&other.node_count);
        self.distinct_kinds.merge(&other.distinct_kinds);
        self.depth.merge(&other.depth);
    }

    pub fn len(&self) -> usize {
        self.node_count.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn finish(&self) -> Result<CorpusStats> {
        if self.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(CorpusStats {
            count: self.node_count.n,
            features: FeatureSet {
                node_count: self.node_count.finish(),
                distinct_kinds: self.distinct_kinds.finish(),
                depth: self.depth.finish(),
            },
        })
    }
}

/// Accumulates stats over a stream of summaries; errors on an empty stream.
pub fn accumulate_stats<'a, I>(summaries: I) -> Result<CorpusStats>
where
    I: IntoIterator<Item = &'a AstSummary>,
{
    let mut acc = StatsAccumulator::default();
    for s in summaries {
        acc.push(s);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: usize) -> AstSummary {
        AstSummary {
            node_count: v,
            distinct_kinds: v,
            depth: v,
        }
    }

    #[test]
    fn two_point_stats_are_forced() {
        let stats = accumulate_stats([s(1), s(3)].iter()).unwrap();
        assert_eq!(stats.count, 2);
        for f in stats.features.as_array() {
            assert_eq!(f.mean, 2.0);
            assert_eq!(f.std, 1.0);
        }
    }

    #[test]
    fn identical_values_have_zero_std() {
        let stats = accumulate_stats(vec![s(5); 17].iter()).unwrap();
        for f in stats.features.as_array() {
            assert_eq!(f.mean, 5.0);
            assert_eq!(f.std, 0.0);
        }
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(accumulate_stats([].iter()).is_err());
    }

    #[test]
    fn matches_naive_two_pass_oracle() {
        // deterministic pseudo-random corpus
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 97 + 1) as usize
        };
        let corpus: Vec<AstSummary> = (0..1000).map(|_| s(next())).collect();

        let stats = accumulate_stats(corpus.iter()).unwrap();

        // naive oracle: explicit mean then explicit population variance
        let vals: Vec<f64> = corpus.iter().map(|x| x.node_count as f64).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!((stats.features.node_count.mean - mean).abs() < 1e-9);
        assert!((stats.features.node_count.std - var.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn merge_equals_concatenation() {
        let a: Vec<AstSummary> = (1..50).map(s).collect();
        let b: Vec<AstSummary> = (3..120).map(|v| s(v * 2 % 61 + 1)).collect();

        let mut left = StatsAccumulator::default();
        a.iter().for_each(|x| left.push(x));
        let mut right = StatsAccumulator::default();
        b.iter().for_each(|x| right.push(x));
        left.merge(&right);
        let merged = left.finish().unwrap();

        let whole = accumulate_stats(a.iter().chain(b.iter())).unwrap();
        assert_eq!(merged.count, whole.count);
        for (m, w) in merged
            .features
            .as_array()
            .iter()
            .zip(whole.features.as_array())
        {
            assert!((m.mean - w.mean).abs() < 1e-9);
            assert!((m.std - w.std).abs() <= 1e-9 * w.std.max(1.0));
        }
    }
}
