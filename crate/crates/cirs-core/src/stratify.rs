//! Threshold-based 1-D k-means stratification: fit clusters over the
//! combined scores, prune clusters whose dispersion falls outside the
//! threshold interval, label the survivors, and filter datasets by stratum
//! or score interval.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Dispersion interval governing which clusters survive pruning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub min: f64,
    pub max: f64,
}

impl Default for ThresholdSet {
    fn default() -> Self {
        ThresholdSet {
            min: 0.0,
            max: f64::INFINITY,
        }
    }
}

impl ThresholdSet {
    pub fn contains(&self, dispersion: f64) -> bool {
        dispersion >= self.min && dispersion <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Centroid i starts at the (i + 0.5)/K quantile of the sorted scores.
    Quantile,
    /// Random initial cluster assignments, recentered before iterating.
    Random,
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitMode::Quantile => f.write_str("quantile"),
            InitMode::Random => f.write_str("random"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub init: InitMode,
    /// Apply the dispersion test inside the loop (removed clusters' points
    /// are reassigned among survivors next iteration) instead of once after
    /// convergence.
    pub prune_each_iter: bool,
    pub thresholds: ThresholdSet,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig {
            k: 3,
            seed: 0,
            max_iters: 100,
            init: InitMode::Quantile,
            prune_each_iter: false,
            thresholds: ThresholdSet::default(),
        }
    }
}

/// A fitted (and possibly pruned) clustering of the score list.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub init: InitMode,
    pub iterations: usize,
    /// Strictly ascending after fit.
    pub centroids: Vec<f64>,
    /// Per record, the cluster index into `centroids`.
    pub assignments: Vec<usize>,
    /// Mean absolute distance to centroid, per cluster.
    pub dispersion: Vec<f64>,
    pub counts: Vec<usize>,
    pub retained: Vec<bool>,
    /// Record ids, input order (parallel to `assignments`).
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
}

impl ClusterModel {
    /// Sum of squared distances of every point to its centroid.
    pub fn objective(&self) -> f64 {
        self.scores
            .iter()
            .zip(&self.assignments)
            .map(|(s, &c)| (s - self.centroids[c]).powi(2))
            .sum()
    }
}

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &c) in centroids.iter().enumerate() {
        let d = (x - c).abs();
        // strict less-than keeps ties on the lower centroid index
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Lloyd's algorithm over 1-D scores.
///
/// Iterates reassign-then-recenter until assignments stop changing or
/// `max_iters` is hit. Empty clusters are reseeded at the point farthest
/// from its current centroid. Clusters are re-sorted by centroid before the
/// model is returned.
pub fn kmeans_1d(points: &[(String, f64)], config: &KmeansConfig) -> Result<ClusterModel> {
    let k = config.k;
    let scores: Vec<f64> = points.iter().map(|(_, s)| *s).collect();
    let mut distinct: Vec<f64> = scores.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < k || k == 0 {
        return Err(Error::TooFewDistinct {
            k,
            distinct: distinct.len(),
        });
    }

    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);

    let mut centroids: Vec<f64>;
    let mut assignments: Vec<usize> = vec![0; scores.len()];
    match config.init {
        InitMode::Quantile => {
            centroids = (0..k)
                .map(|i| {
                    let q = (i as f64 + 0.5) / k as f64;
                    let idx = ((q * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
                    sorted[idx]
                })
                .collect();
        }
        InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            loop {
                for a in assignments.iter_mut() {
                    *a = rng.random_range(0..k);
                }
                // every cluster must start non-empty
                let mut seen = vec![false; k];
                assignments.iter().for_each(|&a| seen[a] = true);
                if seen.iter().all(|&s| s) {
                    break;
                }
            }
            centroids = recenter(&scores, &assignments, k);
        }
    }

    let mut active: Vec<bool> = vec![true; k];
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        iterations += 1;
        let live: Vec<usize> = (0..k).filter(|&i| active[i]).collect();
        let live_centroids: Vec<f64> = live.iter().map(|&i| centroids[i]).collect();
        let mut changed = false;
        for (p, &x) in scores.iter().enumerate() {
            let a = live[nearest(&live_centroids, x)];
            if assignments[p] != a {
                assignments[p] = a;
                changed = true;
            }
        }

        // recenter, repairing any cluster that lost all its points
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in assignments.iter().enumerate() {
            sums[a] += scores[p];
            counts[a] += 1;
        }
        for &i in &live {
            if counts[i] == 0 {
                if let Some(far) = farthest_point(&scores, &assignments, &centroids) {
                    let old = assignments[far];
                    sums[old] -= scores[far];
                    counts[old] -= 1;
                    assignments[far] = i;
                    sums[i] = scores[far];
                    counts[i] = 1;
                    changed = true;
                }
            }
        }
        for &i in &live {
            if counts[i] > 0 {
                centroids[i] = sums[i] / counts[i] as f64;
            }
        }

        if config.prune_each_iter {
            let dispersion = dispersions(&scores, &assignments, &centroids, k);
            for &i in &live {
                if counts[i] > 0 && !config.thresholds.contains(dispersion[i]) {
                    active[i] = false;
                    changed = true;
                }
            }
            if !active.iter().any(|&a| a) {
                return Err(Error::AllClustersPruned);
            }
        }

        if !changed {
            break;
        }
    }

    // order clusters by centroid; drop clusters removed mid-loop
    let mut order: Vec<usize> = (0..k).filter(|&i| active[i]).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]));
    let remap: HashMap<usize, usize> = order.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let final_centroids: Vec<f64> = order.iter().map(|&o| centroids[o]).collect();
    let final_assignments: Vec<usize> = assignments
        .iter()
        .map(|a| *remap.get(a).ok_or(()).unwrap_or(&usize::MAX))
        .collect();
    // points of clusters pruned in-loop keep sentinel usize::MAX and are
    // reported as pruned downstream
    let kf = final_centroids.len();
    let mut counts = vec![0usize; kf];
    for &a in &final_assignments {
        if a != usize::MAX {
            counts[a] += 1;
        }
    }
    let dispersion = dispersions_filtered(&scores, &final_assignments, &final_centroids);
    let retained = if config.prune_each_iter {
        vec![true; kf]
    } else {
        let r: Vec<bool> = dispersion
            .iter()
            .map(|&d| config.thresholds.contains(d))
            .collect();
        r
    };
    Ok(ClusterModel {
        k: kf,
        seed: config.seed,
        init: config.init,
        iterations,
        centroids: final_centroids,
        assignments: final_assignments,
        dispersion,
        counts,
        retained,
        ids: points.iter().map(|(id, _)| id.clone()).collect(),
        scores,
    })
}

fn recenter(scores: &[f64], assignments: &[usize], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in assignments.iter().enumerate() {
        sums[a] += scores[p];
        counts[a] += 1;
    }
    (0..k)
        .map(|i| {
            if counts[i] > 0 {
                sums[i] / counts[i] as f64
            } else {
                0.0
            }
        })
        .collect()
}

fn farthest_point(scores: &[f64], assignments: &[usize], centroids: &[f64]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            let da = (*a - centroids[assignments[*i]]).abs();
            let db = (*b - centroids[assignments[*j]]).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
}

fn dispersions(scores: &[f64], assignments: &[usize], centroids: &[f64], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in assignments.iter().enumerate() {
        sums[a] += (scores[p] - centroids[a]).abs();
        counts[a] += 1;
    }
    (0..k)
        .map(|i| {
            if counts[i] > 0 {
                sums[i] / counts[i] as f64
            } else {
                0.0
            }
        })
        .collect()
}

fn dispersions_filtered(scores: &[f64], assignments: &[usize], centroids: &[f64]) -> Vec<f64> {
    let k = centroids.len();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in assignments.iter().enumerate() {
        if a != usize::MAX {
            sums[a] += (scores[p] - centroids[a]).abs();
            counts[a] += 1;
        }
    }
    (0..k)
        .map(|i| {
            if counts[i] > 0 {
                sums[i] / counts[i] as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Applies the dispersion interval to a fitted model, once, without
/// refitting. Errors when nothing survives.
pub fn prune_clusters(mut model: ClusterModel, thresholds: &ThresholdSet) -> Result<ClusterModel> {
    model.retained = model
        .dispersion
        .iter()
        .map(|&d| thresholds.contains(d))
        .collect();
    if !model.retained.iter().any(|&r| r) {
        return Err(Error::AllClustersPruned);
    }
    Ok(model)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratumAssignment {
    pub id: String,
    pub stratum: String,
    pub cluster: Option<usize>,
    pub score: f64,
}

/// Names the retained clusters by ascending centroid: low/medium/high when
/// exactly three survive, `s0..s{n-1}` otherwise. Records in pruned
/// clusters get the `pruned` stratum.
pub fn stratum_names(model: &ClusterModel) -> Vec<Option<String>> {
    let retained_count = model.retained.iter().filter(|&&r| r).count();
    let mut names = vec![None; model.k];
    let mut next = 0usize;
    for (slot, &retained) in names.iter_mut().zip(&model.retained) {
        if retained {
            let name = if retained_count == 3 {
                ["low", "medium", "high"][next].to_string()
            } else {
                format!("s{next}")
            };
            *slot = Some(name);
            next += 1;
        }
    }
    names
}

pub fn label_strata(model: &ClusterModel) -> Vec<StratumAssignment> {
    let names = stratum_names(model);
    model
        .ids
        .iter()
        .zip(&model.assignments)
        .zip(&model.scores)
        .map(|((id, &cluster), &score)| {
            if cluster == usize::MAX || !model.retained[cluster] {
                StratumAssignment {
                    id: id.clone(),
                    stratum: "pruned".to_string(),
                    cluster: (cluster != usize::MAX).then_some(cluster),
                    score,
                }
            } else {
                StratumAssignment {
                    id: id.clone(),
                    stratum: names[cluster].clone().unwrap(),
                    cluster: Some(cluster),
                    score,
                }
            }
        })
        .collect()
}

/// Builds the stratification manifest. Every cluster appears; pruned
/// clusters are named `pruned_{i}` by ascending centroid.
pub fn strata_manifest(model: &ClusterModel, thresholds: &ThresholdSet) -> Value {
    let names = stratum_names(model);
    let mut strata = Map::new();
    let mut pruned_idx = 0usize;
    let mut kept = 0usize;
    let mut pruned_records = 0usize;
    for (i, slot) in names.iter().enumerate() {
        let name = match slot {
            Some(n) => n.clone(),
            None => {
                let n = format!("pruned_{pruned_idx}");
                pruned_idx += 1;
                n
            }
        };
        if model.retained[i] {
            kept += model.counts[i];
        } else {
            pruned_records += model.counts[i];
        }
        strata.insert(
            name,
            serde_json::json!({
                "centroid": model.centroids[i],
                "dispersion": model.dispersion[i],
                "count": model.counts[i],
                "retained": model.retained[i],
            }),
        );
    }
    // records of clusters dropped mid-loop carry no cluster index
    let orphaned = model
        .assignments
        .iter()
        .filter(|&&a| a == usize::MAX)
        .count();
    pruned_records += orphaned;

    let jmax = if thresholds.max.is_finite() {
        Value::from(thresholds.max)
    } else {
        Value::Null
    };
    serde_json::json!({
        "input": model.assignments.len(),
        "kept": kept,
        "pruned": pruned_records,
        "strata": strata,
        "seed": model.seed,
        "K": model.k,
        "J": [thresholds.min, jmax],
        "init": model.init.to_string(),
    })
}

/// What to keep when filtering a scored dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum KeepSelector {
    Stratum(String),
    /// Closed on the left, open on the right.
    Interval(f64, f64),
}

#[derive(Debug)]
pub struct FilterOutcome {
    /// Indices into the input record list, in input order.
    pub kept: Vec<usize>,
    pub manifest: Value,
}

/// Filters records by stratum name or score interval.
///
/// `assignments` must cover every record id when filtering by stratum.
pub fn filter_dataset(
    records: &[(String, f64)],
    selector: &KeepSelector,
    assignments: Option<&[StratumAssignment]>,
) -> Result<FilterOutcome> {
    let mut strata_counts: Map<String, Value> = Map::new();
    let by_id: HashMap<&str, &StratumAssignment> = assignments
        .map(|a| a.iter().map(|x| (x.id.as_str(), x)).collect())
        .unwrap_or_default();

    if let KeepSelector::Stratum(name) = selector {
        let mut available: Vec<String> = assignments
            .unwrap_or(&[])
            .iter()
            .map(|a| a.stratum.clone())
            .collect();
        available.sort();
        available.dedup();
        if !available.iter().any(|s| s == name) {
            return Err(Error::UnknownStratum {
                name: name.clone(),
                available,
            });
        }
    }

    let mut kept = Vec::new();
    for (i, (id, score)) in records.iter().enumerate() {
        let stratum = by_id.get(id.as_str()).map(|a| a.stratum.as_str());
        if let Some(s) = stratum {
            let entry = strata_counts
                .entry(s.to_string())
                .or_insert(Value::from(0u64));
            *entry = Value::from(entry.as_u64().unwrap() + 1);
        }
        let keep = match selector {
            KeepSelector::Stratum(name) => stratum == Some(name.as_str()),
            KeepSelector::Interval(lo, hi) => *score >= *lo && *score < *hi,
        };
        if keep {
            kept.push(i);
        }
    }

    let selector_json = match selector {
        KeepSelector::Stratum(name) => serde_json::json!({"stratum": name}),
        KeepSelector::Interval(lo, hi) => serde_json::json!({"interval": [lo, hi]}),
    };
    let manifest = serde_json::json!({
        "input": records.len(),
        "kept": kept.len(),
        "strata_counts": strata_counts,
        "selector": selector_json,
    });
    Ok(FilterOutcome { kept, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(scores: &[f64]) -> Vec<(String, f64)> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (format!("r{i}"), s))
            .collect()
    }

    #[test]
    fn separated_pairs_converge_fast() {
        let model = kmeans_1d(
            &pts(&[0.1, 0.1, 0.9, 0.9]),
            &KmeansConfig {
                k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(model.centroids, vec![0.1, 0.9]);
        assert!(model.iterations <= 2);
        assert_eq!(model.assignments, vec![0, 0, 1, 1]);
    }

    #[test]
    fn k1_centroid_is_the_mean() {
        let model = kmeans_1d(
            &pts(&[0.2, 0.4, 0.9]),
            &KmeansConfig {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((model.centroids[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_distinct_values_is_an_error() {
        let err = kmeans_1d(
            &pts(&[0.5, 0.5, 0.5]),
            &KmeansConfig {
                k: 2,
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(Error::TooFewDistinct { .. })));
    }

    #[test]
    fn clusters_are_contiguous_intervals_when_sorted() {
        let scores: Vec<f64> = (0..60).map(|i| (i as f64 * 37.0 % 101.0) / 101.0).collect();
        let model = kmeans_1d(
            &pts(&scores),
            &KmeansConfig {
                k: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let sorted_assign: Vec<usize> = order.iter().map(|&i| model.assignments[i]).collect();
        assert!(sorted_assign.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn default_thresholds_retain_everything() {
        let model = kmeans_1d(
            &pts(&[0.1, 0.15, 0.8, 0.85]),
            &KmeansConfig {
                k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let model = prune_clusters(model, &ThresholdSet::default()).unwrap();
        assert!(model.retained.iter().all(|&r| r));
    }

    #[test]
    fn zero_width_interval_prunes_spread_cluster() {
        let model = kmeans_1d(
            &pts(&[0.1, 0.2, 0.8, 0.8]),
            &KmeansConfig {
                k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let j = ThresholdSet { min: 0.0, max: 0.0 };
        let model = prune_clusters(model, &j).unwrap();
        // left cluster has dispersion 0.05, right has 0
        assert_eq!(model.retained, vec![false, true]);
    }

    #[test]
    fn pruning_everything_is_an_error() {
        let model = kmeans_1d(
            &pts(&[0.1, 0.2, 0.7, 0.8]),
            &KmeansConfig {
                k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let j = ThresholdSet { min: 0.0, max: 0.0 };
        assert!(matches!(
            prune_clusters(model, &j),
            Err(Error::AllClustersPruned)
        ));
    }

    #[test]
    fn three_retained_clusters_get_band_names() {
        let model = kmeans_1d(
            &pts(&[0.2, 0.2, 0.5, 0.5, 0.8, 0.8]),
            &KmeansConfig {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let labels = label_strata(&model);
        assert_eq!(labels[0].stratum, "low");
        assert_eq!(labels[2].stratum, "medium");
        assert_eq!(labels[4].stratum, "high");
    }

    #[test]
    fn two_retained_clusters_get_ordinal_names() {
        let model = kmeans_1d(
            &pts(&[0.1, 0.1, 0.9, 0.9]),
            &KmeansConfig {
                k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let labels = label_strata(&model);
        assert_eq!(labels[0].stratum, "s0");
        assert_eq!(labels[3].stratum, "s1");
    }

    #[test]
    fn pruned_middle_forces_ordinal_names() {
        // middle cluster spread wide, outer clusters tight
        let mut scores = vec![0.2, 0.2, 0.2, 0.8, 0.8, 0.8];
        scores.extend([0.4, 0.45, 0.5, 0.55, 0.6]);
        let model = kmeans_1d(
            &pts(&scores),
            &KmeansConfig {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let j = ThresholdSet {
            min: 0.0,
            max: 0.02,
        };
        let model = prune_clusters(model, &j).unwrap();
        assert_eq!(model.retained, vec![true, false, true]);
        let labels = label_strata(&model);
        let strata: Vec<&str> = labels.iter().map(|l| l.stratum.as_str()).collect();
        assert!(strata.contains(&"s0"));
        assert!(strata.contains(&"s1"));
        assert!(strata.contains(&"pruned"));
        assert!(!strata.contains(&"low"));
        assert!(!strata.contains(&"high"));
    }

    #[test]
    fn objective_never_increases_across_refits() {
        let scores: Vec<f64> = (0..200)
            .map(|i| ((i as f64 * 29.0 + 7.0) % 97.0) / 97.0)
            .collect();
        let mut prev = f64::INFINITY;
        for iters in 1..12 {
            let model = kmeans_1d(
                &pts(&scores),
                &KmeansConfig {
                    k: 3,
                    max_iters: iters,
                    ..Default::default()
                },
            )
            .unwrap();
            let obj = model.objective();
            assert!(obj <= prev + 1e-12, "objective rose at iter {iters}");
            prev = obj;
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let scores: Vec<f64> = (0..100).map(|i| (i as f64 * 13.0 % 71.0) / 71.0).collect();
        let config = KmeansConfig {
            k: 3,
            seed: 7,
            init: InitMode::Random,
            ..Default::default()
        };
        let a = kmeans_1d(&pts(&scores), &config).unwrap();
        let b = kmeans_1d(&pts(&scores), &config).unwrap();
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignments, b.assignments);
    }

    #[test]
    fn interval_filter_is_identity_on_unit_interval() {
        let records = pts(&[0.1, 0.5, 0.9]);
        let out = filter_dataset(&records, &KeepSelector::Interval(0.0, 1.0), None).unwrap();
        assert_eq!(out.kept.len(), 3);
        assert_eq!(out.manifest["input"], 3);
        assert_eq!(out.manifest["kept"], 3);
    }

    #[test]
    fn unknown_stratum_lists_available() {
        let records = pts(&[0.1, 0.9]);
        let assignments = vec![
            StratumAssignment {
                id: "r0".into(),
                stratum: "s0".into(),
                cluster: Some(0),
                score: 0.1,
            },
            StratumAssignment {
                id: "r1".into(),
                stratum: "s1".into(),
                cluster: Some(1),
                score: 0.9,
            },
        ];
        let err = filter_dataset(
            &records,
            &KeepSelector::Stratum("medium".into()),
            Some(&assignments),
        );
        match err {
            Err(Error::UnknownStratum { available, .. }) => {
                assert_eq!(available, vec!["s0".to_string(), "s1".to_string()]);
            }
            other => panic!("expected unknown stratum, got {other:?}"),
        }
    }

    #[test]
    fn manifest_arithmetic_reconciles() {
        let scores = vec![0.1, 0.12, 0.5, 0.52, 0.9, 0.91, 0.3, 0.7];
        let model = kmeans_1d(
            &pts(&scores),
            &KmeansConfig {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let j = ThresholdSet::default();
        let manifest = strata_manifest(&model, &j);
        let kept = manifest["kept"].as_u64().unwrap();
        let pruned = manifest["pruned"].as_u64().unwrap();
        assert_eq!(kept + pruned, scores.len() as u64);
    }
}
