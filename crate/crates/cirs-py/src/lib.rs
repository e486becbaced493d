//! Python bindings for the cirs library: syntax checking, per-snippet
//! analysis, corpus scoring, stratification, and the frozen rule tables.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use cirs_core::corpus::CorpusRecord;
use cirs_core::frontend::{validate_syntax as check_syntax, SourceUnit};
use cirs_core::score::{analyze_source, score_corpus as score_corpus_rs};
use cirs_core::stratify::{
    kmeans_1d, label_strata, prune_clusters, InitMode, KmeansConfig, ThresholdSet,
};

fn to_py_err(e: cirs_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .unbind()
                    .into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.unbind().into()
        }
    })
}

/// Checks whether `source` parses as Python 3. Returns
/// `{"valid": bool, "diagnostics": [{"line", "column", "message"}, ...]}`.
#[pyfunction]
fn validate_syntax(py: Python<'_>, source: &str) -> PyResult<Py<PyAny>> {
    let check = check_syntax(source);
    json_to_py(
        py,
        &serde_json::to_value(check).map_err(|e| PyValueError::new_err(e.to_string()))?,
    )
}

/// Measures one snippet: structural features and logical metrics.
/// Raises ValueError on invalid syntax.
#[pyfunction]
fn analyze(py: Python<'_>, source: &str) -> PyResult<Py<PyAny>> {
    let analysis = analyze_source(source).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("node_count", analysis.summary.node_count)?;
    dict.set_item("distinct_kinds", analysis.summary.distinct_kinds)?;
    dict.set_item("depth", analysis.summary.depth)?;
    dict.set_item("difficulty", analysis.metrics.difficulty)?;
    dict.set_item("cyclomatic", analysis.metrics.cyclomatic)?;
    dict.set_item("logical", analysis.metrics.logical_score)?;
    Ok(dict.unbind().into())
}

/// Scores a corpus of `(id, code)` pairs with corpus-relative
/// normalization. Returns `{"scored": [...], "rejected": [...], "stats": {...}}`.
#[pyfunction]
fn score_corpus(py: Python<'_>, records: Vec<(String, String)>) -> PyResult<Py<PyAny>> {
    let records: Vec<CorpusRecord> = records
        .into_iter()
        .enumerate()
        .map(|(i, (id, source))| {
            let mut raw = serde_json::Map::new();
            raw.insert("id".into(), serde_json::Value::String(id.clone()));
            raw.insert("code".into(), serde_json::Value::String(source.clone()));
            CorpusRecord {
                unit: SourceUnit {
                    id,
                    source,
                    question: None,
                    answer: None,
                },
                raw,
                line: i + 1,
            }
        })
        .collect();
    let outcome = score_corpus_rs(records, None).map_err(to_py_err)?;
    let scored: Vec<serde_json::Value> = outcome
        .scored
        .iter()
        .map(|r| {
            serde_json::json!({
                "id": r.record.unit.id,
                "cirs": serde_json::to_value(&r.cirs).unwrap(),
            })
        })
        .collect();
    let rejected: Vec<serde_json::Value> = outcome
        .rejected
        .iter()
        .map(|r| serde_json::json!({"id": r.record.unit.id, "reject_reason": r.reason}))
        .collect();
    json_to_py(
        py,
        &serde_json::json!({
            "scored": scored,
            "rejected": rejected,
            "stats": serde_json::to_value(&outcome.stats).unwrap(),
        }),
    )
}

/// Threshold-pruned 1-D k-means over `(id, score)` points. Returns the
/// fitted model and per-point stratum labels.
#[pyfunction]
#[pyo3(signature = (points, k=3, seed=0, j_min=0.0, j_max=None))]
fn stratify(
    py: Python<'_>,
    points: Vec<(String, f64)>,
    k: usize,
    seed: u64,
    j_min: f64,
    j_max: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let thresholds = ThresholdSet {
        min: j_min,
        max: j_max.unwrap_or(f64::INFINITY),
    };
    let config = KmeansConfig {
        k,
        seed,
        max_iters: 100,
        init: InitMode::Quantile,
        prune_each_iter: false,
        thresholds,
    };
    let model = kmeans_1d(&points, &config).map_err(to_py_err)?;
    let model = prune_clusters(model, &thresholds).map_err(to_py_err)?;
    let labels: Vec<serde_json::Value> = label_strata(&model)
        .iter()
        .map(|l| serde_json::to_value(l).unwrap())
        .collect();
    json_to_py(
        py,
        &serde_json::json!({
            "centroids": model.centroids,
            "dispersion": model.dispersion,
            "counts": model.counts,
            "retained": model.retained,
            "iterations": model.iterations,
            "assignments": labels,
        }),
    )
}

/// The frozen rule tables: grammar tag, AST kind vocabulary, Halstead
/// token classification, and cyclomatic decision points.
#[pyfunction]
fn rules(py: Python<'_>) -> PyResult<Py<PyAny>> {
    json_to_py(py, &cirs_core::rules::rule_tables())
}

#[pymodule]
fn cirs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(validate_syntax, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(score_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(stratify, m)?)?;
    m.add_function(wrap_pyfunction!(rules, m)?)?;
    Ok(())
}
