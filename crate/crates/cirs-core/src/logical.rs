//! Logical complexity: sigmoid of difficulty times cyclomatic complexity.

use serde::{Deserialize, Serialize};

use crate::cyclomatic::cyclomatic;
use crate::error::Result;
use crate::frontend::{tokenize, SyntaxTree};
use crate::halstead::{difficulty, halstead_counts, HalsteadCounts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicalMetrics {
    pub difficulty: f64,
    pub cyclomatic: usize,
    pub logical_score: f64,
}

/// Numerically stable sigmoid clamped to the open interval (0, 1): large
/// positive arguments would otherwise round to exactly 1.0.
pub fn sigmoid(t: f64) -> f64 {
    let v = if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    };
    v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `sigmoid(D * V)`; in `[0.5, 1)` since D >= 0 and V >= 1.
pub fn logical_score(difficulty: f64, cyclomatic: usize) -> f64 {
    sigmoid(difficulty * cyclomatic as f64)
}

/// Computes all logical metrics for one snippet given its tree and source.
pub fn logical_metrics(
    source: &str,
    tree: &SyntaxTree,
) -> Result<(HalsteadCounts, LogicalMetrics)> {
    let tokens = tokenize(source)?;
    let counts = halstead_counts(&tokens)?;
    let d = difficulty(&counts);
    let v = cyclomatic(tree);
    Ok((
        counts,
        LogicalMetrics {
            difficulty: d,
            cyclomatic: v,
            logical_score: logical_score(d, v),
        },
    ))
}
