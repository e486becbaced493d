//! Reading scored JSONL back in: each line must carry an `id` and a
//! `cirs.score`. Raw lines are kept verbatim so filters can emit input
//! bytes untouched.

use std::io::BufRead;
use std::path::Path;

use anyhow::{anyhow, Context};

#[derive(Debug, Clone)]
pub struct ScoredLine {
    pub id: String,
    pub score: f64,
    pub raw: String,
}

pub fn read_scored(path: &Path) -> anyhow::Result<Vec<ScoredLine>> {
    let file =
        std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut lines = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let raw = line?;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| anyhow!("{}:{}: invalid JSON: {e}", path.display(), i + 1))?;
        let id = value
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| anyhow!("{}:{}: missing id", path.display(), i + 1))?
            .to_string();
        let score = value
            .pointer("/cirs/score")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| anyhow!("{}:{}: missing cirs.score", path.display(), i + 1))?;
        lines.push(ScoredLine { id, score, raw });
    }
    Ok(lines)
}
