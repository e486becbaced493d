//! Corpus scoring: structural score, the combined score, and the two-pass
//! pipeline over a corpus.
//!
//! Pass 1 parses every record and accumulates the feature statistics; pass 2
//! normalizes each record against those statistics and emits the combined
//! score. Records are analyzed in parallel but stats are folded in input
//! order, so output bytes are identical run to run.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::frontend::{parse_source, summarize_ast, AstSummary};
use crate::logical::{logical_metrics, sigmoid, LogicalMetrics};
use crate::stats::{CorpusStats, StatsAccumulator};

/// Everything measured about one snippet before corpus normalization.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub summary: AstSummary,
    pub metrics: LogicalMetrics,
}

/// Parses and measures one snippet; syntactically invalid input is an error
/// carrying the first diagnostic.
pub fn analyze_source(source: &str) -> Result<Analysis> {
    let tree = parse_source(source)?;
    let (_counts, metrics) = logical_metrics(source, &tree)?;
    Ok(Analysis {
        summary: summarize_ast(&tree),
        metrics,
    })
}

/// Z-score of one value; 0 by definition when the feature has zero spread.
fn zscore(x: f64, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        (x - mean) / std
    }
}

/// Structural score: sigmoid of the mean of the three per-corpus z-scores.
pub fn structural_score(summary: &AstSummary, stats: &CorpusStats) -> f64 {
    let f = &stats.features;
    let z_node = zscore(
        summary.node_count as f64,
        f.node_count.mean,
        f.node_count.std,
    );
    let z_type = zscore(
        summary.distinct_kinds as f64,
        f.distinct_kinds.mean,
        f.distinct_kinds.std,
    );
    let z_depth = zscore(summary.depth as f64, f.depth.mean, f.depth.std);
    sigmoid((z_node + z_type + z_depth) / 3.0)
}

/// The combined score: exact product of the two component scores.
pub fn cirs(structural: f64, logical: f64) -> f64 {
    structural * logical
}

#[derive(Debug, Clone, Serialize)]
pub struct CirsScore {
    pub structural: f64,
    pub logical: f64,
    pub score: f64,
    #[serde(flatten)]
    pub features: AstSummary,
    pub difficulty: f64,
    pub cyclomatic: usize,
}

#[derive(Debug, Clone)]
pub struct ScoredRecord {
    pub record: CorpusRecord,
    pub cirs: CirsScore,
}

#[derive(Debug, Clone)]
pub struct RejectedRecord {
    pub record: CorpusRecord,
    pub reason: String,
}

#[derive(Debug)]
pub struct ScoreOutcome {
    pub scored: Vec<ScoredRecord>,
    pub rejected: Vec<RejectedRecord>,
    pub stats: CorpusStats,
}

/// Runs the two-pass scoring pipeline over a corpus.
///
/// When `frozen_stats` is given the records are normalized against that
/// reference distribution instead of statistics recomputed from this input.
/// Errors when no record is valid.
pub fn score_corpus(
    records: Vec<CorpusRecord>,
    frozen_stats: Option<CorpusStats>,
) -> Result<ScoreOutcome> {
    // pass 1: parallel analysis, order preserved
    let analyses: Vec<(CorpusRecord, std::result::Result<Analysis, String>)> = records
        .into_par_iter()
        .map(|record| {
            let analysis = analyze_source(&record.unit.source).map_err(|e| e.to_string());
            (record, analysis)
        })
        .collect();

    let mut acc = StatsAccumulator::default();
    for (_, analysis) in &analyses {
        if let Ok(a) = analysis {
            acc.push(&a.summary);
        }
    }
    let stats = match frozen_stats {
        Some(s) => {
            if acc.is_empty() {
                return Err(Error::EmptyCorpus);
            }
            s
        }
        None => acc.finish()?,
    };

    // pass 2: normalize and combine
    let mut scored = Vec::new();
    let mut rejected = Vec::new();
    for (record, analysis) in analyses {
        match analysis {
            Ok(a) => {
                let structural = structural_score(&a.summary, &stats);
                let logical = a.metrics.logical_score;
                scored.push(ScoredRecord {
                    record,
                    cirs: CirsScore {
                        structural,
                        logical,
                        score: cirs(structural, logical),
                        features: a.summary,
                        difficulty: a.metrics.difficulty,
                        cyclomatic: a.metrics.cyclomatic,
                    },
                });
            }
            Err(reason) => rejected.push(RejectedRecord { record, reason }),
        }
    }
    Ok(ScoreOutcome {
        scored,
        rejected,
        stats,
    })
}

/// Parallel stats accumulation via chunked merge; used to check the
/// mergeable-reduction contract against the serial fold.
pub fn parallel_stats(summaries: &[AstSummary]) -> Result<CorpusStats> {
    summaries
        .par_chunks(64.max(summaries.len() / 64))
        .map(|chunk| {
            let mut acc = StatsAccumulator::default();
            chunk.iter().for_each(|s| acc.push(s));
            acc
        })
        .reduce(StatsAccumulator::default, |mut a, b| {
            a.merge(&b);
            a
        })
        .finish()
}

/// Formats one scored JSONL line: the input object with a `cirs` object
/// appended, floats fixed at 9 decimal places.
pub fn scored_line(record: &ScoredRecord) -> Result<String> {
    let mut line = serde_json::to_string(&record.record.raw)?;
    debug_assert!(line.ends_with('}'));
    line.pop();
    if !record.record.raw.is_empty() {
        line.push(',');
    }
    let c = &record.cirs;
    line.push_str(&format!(
        "\"cirs\":{{\"structural\":{:.9},\"logical\":{:.9},\"score\":{:.9},\
         \"node_count\":{},\"distinct_kinds\":{},\"depth\":{},\
         \"difficulty\":{:.9},\"cyclomatic\":{}}}}}",
        c.structural,
        c.logical,
        c.score,
        c.features.node_count,
        c.features.distinct_kinds,
        c.features.depth,
        c.difficulty,
        c.cyclomatic,
    ));
    Ok(line)
}

/// Formats one reject JSONL line: the input object plus `reject_reason`.
pub fn reject_line(record: &RejectedRecord) -> Result<String> {
    let mut raw = record.record.raw.clone();
    raw.insert(
        "reject_reason".to_string(),
        serde_json::Value::String(record.reason.clone()),
    );
    Ok(serde_json::to_string(&raw)?)
}
