//! Template-driven data synthesis: sample three seed problems, render a
//! few-shot prompt, call a pluggable generation client, gate outputs on
//! syntax validity, and deduplicate.
//!
//! Prompt and completion share one tagged layout: each exemplar is a
//! `### Question:` block followed by a `### Solution:` block, and the
//! completion is parsed back with the same two tags.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::frontend::{tokenize, validate_syntax, TokenKind};

pub const QUESTION_TAG: &str = "### Question:";
pub const SOLUTION_TAG: &str = "### Solution:";

const PREAMBLE: &str = "You are given example math problems, each paired with a \
Python solution. Write one new problem and its Python solution in the same format.";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedProblem {
    pub id: String,
    pub dataset: String,
    pub question: String,
    #[serde(rename = "code")]
    pub solution: String,
}

#[derive(Debug, Clone)]
pub struct GenerationTemplate {
    pub exemplars: Vec<SeedProblem>,
    pub seed: u64,
}

/// Samples exactly three exemplars without replacement.
///
/// The draw is a partial Fisher-Yates shuffle over the pool indices driven
/// by ChaCha8 seeded with `seed`, so the same pool and seed always pick the
/// same exemplars in the same order.
pub fn build_template(pool: &[SeedProblem], seed: u64) -> Result<GenerationTemplate> {
    if pool.len() < 3 {
        return Err(Error::PoolTooSmall {
            got: pool.len(),
            need: 3,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    for i in 0..3 {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    Ok(GenerationTemplate {
        exemplars: indices[..3].iter().map(|&i| pool[i].clone()).collect(),
        seed,
    })
}

impl GenerationTemplate {
    pub fn render(&self) -> String {
        let mut out = String::from(PREAMBLE);
        out.push_str("\n\n");
        for ex in &self.exemplars {
            out.push_str(QUESTION_TAG);
            out.push('\n');
            out.push_str(ex.question.trim());
            out.push('\n');
            out.push_str(SOLUTION_TAG);
            out.push('\n');
            out.push_str(ex.solution.trim_end());
            out.push_str("\n\n");
        }
        out.push_str(QUESTION_TAG);
        out.push('\n');
        out
    }

    pub fn exemplar_ids(&self) -> Vec<String> {
        self.exemplars.iter().map(|e| e.id.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TransportError {
    pub message: String,
    pub transient: bool,
}

/// Pluggable text-generation backend: send a prompt, get completion text.
pub trait GenerationClient {
    fn complete(&mut self, prompt: &str) -> std::result::Result<String, TransportError>;

    /// Identity recorded in sample provenance.
    fn model_tag(&self) -> String {
        "unknown".to_string()
    }

    /// Provenance timestamp; deterministic clients return a fixed value.
    fn now(&self) -> String {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("{secs}")
    }

    /// Token usage as reported by the backend, if any.
    fn usage(&self) -> Option<Value> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 250,
        }
    }
}

/// One parsed (question, code) candidate from a completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub question: String,
    pub code: String,
}

/// Splits completion text into tagged question/solution pairs. Text with no
/// recognizable pair yields an empty list (a logged parse failure upstream).
pub fn parse_completion(text: &str) -> Vec<Candidate> {
    // the prompt ends with an open question tag, so completions may start
    // with the question body directly
    let mut candidates = Vec::new();
    let prefixed = format!("{QUESTION_TAG}\n{text}");
    for block in prefixed.split(QUESTION_TAG).skip(1) {
        let Some((question, rest)) = block.split_once(SOLUTION_TAG) else {
            continue;
        };
        let question = question.trim();
        let code = rest.trim();
        if question.is_empty() || code.is_empty() {
            continue;
        }
        candidates.push(Candidate {
            question: question.to_string(),
            code: code.to_string(),
        });
    }
    candidates
}

/// Calls the client with retry and exponential backoff on transient
/// transport errors, then parses the completion.
pub fn generate(
    template: &GenerationTemplate,
    client: &mut dyn GenerationClient,
    retry: &RetryPolicy,
) -> Result<(Vec<Candidate>, u32)> {
    let prompt = template.render();
    let mut attempts = 0;
    loop {
        attempts += 1;
        match client.complete(&prompt) {
            Ok(text) => {
                let candidates = parse_completion(&text);
                if candidates.is_empty() {
                    log::warn!(
                        "completion with no parseable question/solution pair (template seed {})",
                        template.seed
                    );
                }
                return Ok((candidates, attempts));
            }
            Err(e) if e.transient && attempts < retry.max_attempts => {
                let delay = retry.base_delay_ms.saturating_mul(1 << (attempts - 1));
                if delay > 0 {
                    std::thread::sleep(std::time::Duration::from_millis(delay));
                }
            }
            Err(e) => {
                return Err(Error::Transport {
                    attempts,
                    message: e.message,
                });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Accepted,
    RejectedSyntax,
    RejectedDuplicate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub template_seed_ids: Vec<String>,
    pub model_tag: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedSample {
    pub id: String,
    pub question: String,
    pub code: String,
    pub provenance: Provenance,
    pub status: SampleStatus,
}

/// Dedup identity for code: comments stripped, whitespace normalized.
/// Requires valid syntax, so it runs after the syntax gate.
pub fn normalize_code(source: &str) -> Result<String> {
    let tokens = tokenize(source)?;
    let mut parts = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::Comment | TokenKind::Newline | TokenKind::IndentMarker => {}
            _ => parts.push(t.lexeme),
        }
    }
    Ok(parts.join(" "))
}

/// Tracks what has been seen so "first occurrence wins" holds across the
/// whole run: normalized code, question text, and the seed solutions (an
/// accepted output must never replay a seed's exact solution).
#[derive(Debug, Default)]
pub struct DedupeState {
    seen_code: std::collections::HashSet<String>,
    seen_questions: std::collections::HashSet<String>,
    seed_solutions: std::collections::HashSet<String>,
}

impl DedupeState {
    pub fn with_seed_pool(pool: &[SeedProblem]) -> Self {
        let mut state = DedupeState::default();
        for p in pool {
            state.seed_solutions.insert(p.solution.trim().to_string());
        }
        state
    }
}

/// Gates one candidate: syntax first, then duplicate checks.
pub fn gate_candidate(candidate: &Candidate, state: &mut DedupeState) -> SampleStatus {
    if !validate_syntax(&candidate.code).valid {
        return SampleStatus::RejectedSyntax;
    }
    let normalized = match normalize_code(&candidate.code) {
        Ok(n) => n,
        Err(_) => return SampleStatus::RejectedSyntax,
    };
    if state.seed_solutions.contains(candidate.code.trim()) {
        return SampleStatus::RejectedDuplicate;
    }
    if state.seen_code.contains(&normalized)
        || state.seen_questions.contains(candidate.question.trim())
    {
        return SampleStatus::RejectedDuplicate;
    }
    state.seen_code.insert(normalized);
    state
        .seen_questions
        .insert(candidate.question.trim().to_string());
    SampleStatus::Accepted
}

/// Gates and deduplicates an ordered candidate stream.
pub fn gate_and_dedupe(
    candidates: &[Candidate],
    provenance: &Provenance,
    state: &mut DedupeState,
    next_id: &mut usize,
) -> Vec<GeneratedSample> {
    candidates
        .iter()
        .map(|c| {
            let status = gate_candidate(c, state);
            let id = format!("gen-{:06}", *next_id);
            *next_id += 1;
            GeneratedSample {
                id,
                question: c.question.clone(),
                code: c.code.clone(),
                provenance: provenance.clone(),
                status,
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct SynthOutcome {
    /// Every parsed sample with its gate status, in dispatch order.
    pub samples: Vec<GeneratedSample>,
    pub manifest: Value,
    pub reached_target: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub target_accepted: usize,
    /// Maximum number of client calls.
    pub budget: usize,
    pub seed: u64,
    pub retry: RetryPolicy,
}

/// The synthesis loop: template, generate, gate, repeat until the accepted
/// target is reached or the call budget runs out.
pub fn synthesize_corpus(
    pool: &[SeedProblem],
    config: &SynthConfig,
    client: &mut dyn GenerationClient,
) -> Result<SynthOutcome> {
    if pool.len() < 3 {
        return Err(Error::PoolTooSmall {
            got: pool.len(),
            need: 3,
        });
    }
    let mut state = DedupeState::with_seed_pool(pool);
    let mut samples: Vec<GeneratedSample> = Vec::new();
    let mut accepted = 0usize;
    let mut calls = 0usize;
    let mut parse_failures = 0usize;
    let mut next_id = 0usize;

    while accepted < config.target_accepted && calls < config.budget {
        let template = build_template(pool, config.seed.wrapping_add(calls as u64))?;
        calls += 1;
        let (candidates, _attempts) = generate(&template, client, &config.retry)?;
        if candidates.is_empty() {
            parse_failures += 1;
            continue;
        }
        let provenance = Provenance {
            template_seed_ids: template.exemplar_ids(),
            model_tag: client.model_tag(),
            timestamp: client.now(),
        };
        for sample in gate_and_dedupe(&candidates, &provenance, &mut state, &mut next_id) {
            if sample.status == SampleStatus::Accepted {
                accepted += 1;
            }
            samples.push(sample);
            if accepted >= config.target_accepted {
                break;
            }
        }
    }

    let rejected_syntax = samples
        .iter()
        .filter(|s| s.status == SampleStatus::RejectedSyntax)
        .count();
    let rejected_duplicate = samples
        .iter()
        .filter(|s| s.status == SampleStatus::RejectedDuplicate)
        .count();
    let parsed = samples.len();
    let manifest = serde_json::json!({
        "calls": calls,
        "parse_failures": parse_failures,
        "parsed_candidates": parsed,
        "accepted": accepted,
        "rejected_syntax": rejected_syntax,
        "rejected_duplicate": rejected_duplicate,
        "acceptance_rate": if parsed > 0 { accepted as f64 / parsed as f64 } else { 0.0 },
        "target": config.target_accepted,
        "budget": config.budget,
        "seed": config.seed,
        "model_tag": client.model_tag(),
        "usage": client.usage(),
        "reached_target": accepted >= config.target_accepted,
    });
    Ok(SynthOutcome {
        samples,
        manifest,
        reached_target: accepted >= config.target_accepted,
    })
}

/// Scripted client for tests and offline runs: a fixed sequence of steps.
pub struct ScriptedClient {
    pub steps: std::collections::VecDeque<ScriptStep>,
    pub tag: String,
}

#[derive(Debug, Clone)]
pub enum ScriptStep {
    Reply(String),
    TransientFailure(String),
    FatalFailure(String),
}

impl ScriptedClient {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        ScriptedClient {
            steps: steps.into(),
            tag: "scripted-mock".to_string(),
        }
    }
}

impl GenerationClient for ScriptedClient {
    fn complete(&mut self, _prompt: &str) -> std::result::Result<String, TransportError> {
        match self.steps.pop_front() {
            Some(ScriptStep::Reply(text)) => Ok(text),
            Some(ScriptStep::TransientFailure(m)) => Err(TransportError {
                message: m,
                transient: true,
            }),
            Some(ScriptStep::FatalFailure(m)) => Err(TransportError {
                message: m,
                transient: false,
            }),
            None => Err(TransportError {
                message: "script exhausted".to_string(),
                transient: false,
            }),
        }
    }

    fn model_tag(&self) -> String {
        self.tag.clone()
    }

    fn now(&self) -> String {
        "0".to_string()
    }
}

/// Deterministic self-contained generator: every call yields one fresh,
/// valid, unique problem/solution pair. Lets the full pipeline run with no
/// backend at all.
pub struct SyntheticClient {
    counter: u64,
}

impl SyntheticClient {
    pub fn new() -> Self {
        SyntheticClient { counter: 0 }
    }
}

impl Default for SyntheticClient {
    fn default() -> Self {
        Self::new()
    }
}

impl GenerationClient for SyntheticClient {
    fn complete(&mut self, _prompt: &str) -> std::result::Result<String, TransportError> {
        self.counter += 1;
        let n = self.counter;
        let a = n * 3 + 1;
        let b = n % 7 + 2;
        Ok(format!(
            "A worker packs {a} boxes per shift and works {b} shifts. \
             How many boxes are packed in total?\n{SOLUTION_TAG}\n\
             boxes_per_shift = {a}\nshifts = {b}\n\
             total = boxes_per_shift * shifts\nprint(total)\n"
        ))
    }

    fn model_tag(&self) -> String {
        "synthetic".to_string()
    }

    fn now(&self) -> String {
        "0".to_string()
    }
}

/// HTTP backend: POST `{"prompt": ...}` to the endpoint, bearer credential
/// read from the named environment variable (never logged). Expects either
/// a raw text body or JSON with a `completion` field.
pub struct HttpClient {
    pub endpoint: String,
    pub credential_env: Option<String>,
    pub tag: String,
    last_usage: Option<Value>,
}

impl HttpClient {
    pub fn new(endpoint: String, credential_env: Option<String>) -> Self {
        HttpClient {
            endpoint,
            credential_env,
            tag: "http".to_string(),
            last_usage: None,
        }
    }
}

impl GenerationClient for HttpClient {
    fn complete(&mut self, prompt: &str) -> std::result::Result<String, TransportError> {
        let mut request = ureq::post(&self.endpoint);
        if let Some(var) = &self.credential_env {
            if let Ok(secret) = std::env::var(var) {
                request = request.header("authorization", &format!("Bearer {secret}"));
            }
        }
        let response = request
            .send_json(serde_json::json!({"prompt": prompt}))
            .map_err(|e| TransportError {
                message: e.to_string(),
                transient: true,
            })?;
        let body = response
            .into_body()
            .read_to_string()
            .map_err(|e| TransportError {
                message: e.to_string(),
                transient: true,
            })?;
        if let Ok(json) = serde_json::from_str::<Value>(&body) {
            if let Some(usage) = json.get("usage") {
                self.last_usage = Some(usage.clone());
            }
            if let Some(completion) = json.get("completion").and_then(|c| c.as_str()) {
                return Ok(completion.to_string());
            }
        }
        Ok(body)
    }

    fn model_tag(&self) -> String {
        self.tag.clone()
    }

    fn usage(&self) -> Option<Value> {
        self.last_usage.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> Vec<SeedProblem> {
        (0..n)
            .map(|i| SeedProblem {
                id: format!("seed-{i}"),
                dataset: "gsm8k".to_string(),
                question: format!("What is {i} + {i}?"),
                solution: format!("print({i} + {i})"),
            })
            .collect()
    }

    fn reply(question: &str, code: &str) -> ScriptStep {
        ScriptStep::Reply(format!("{question}\n{SOLUTION_TAG}\n{code}\n"))
    }

    #[test]
    fn template_of_three_uses_all_three() {
        let p = pool(3);
        let t = build_template(&p, 42).unwrap();
        let mut ids = t.exemplar_ids();
        ids.sort();
        assert_eq!(ids, vec!["seed-0", "seed-1", "seed-2"]);
    }

    #[test]
    fn same_seed_renders_identical_prompt() {
        let p = pool(20);
        let a = build_template(&p, 9).unwrap().render();
        let b = build_template(&p, 9).unwrap().render();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_matches_reference_fisher_yates() {
        // independent re-implementation of the documented draw
        let p = pool(100);
        let t = build_template(&p, 777).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(777);
        let mut idx: Vec<usize> = (0..100).collect();
        for i in 0..3 {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        let expected: Vec<String> = idx[..3].iter().map(|&i| format!("seed-{i}")).collect();
        assert_eq!(t.exemplar_ids(), expected);
    }

    #[test]
    fn pool_smaller_than_three_is_an_error() {
        assert!(matches!(
            build_template(&pool(2), 0),
            Err(Error::PoolTooSmall { got: 2, need: 3 })
        ));
    }

    #[test]
    fn well_formed_completion_yields_one_candidate() {
        let mut client = ScriptedClient::new(vec![reply("Count apples.", "print(1 + 1)")]);
        let t = build_template(&pool(3), 0).unwrap();
        let (candidates, attempts) = generate(&t, &mut client, &RetryPolicy::default()).unwrap();
        assert_eq!(attempts, 1);
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].code, "print(1 + 1)");
    }

    #[test]
    fn prose_without_delimiter_yields_zero_candidates() {
        let mut client =
            ScriptedClient::new(vec![ScriptStep::Reply("no tags here at all".to_string())]);
        let t = build_template(&pool(3), 0).unwrap();
        let (candidates, _) = generate(&t, &mut client, &RetryPolicy::default()).unwrap();
        assert!(candidates.is_empty());
    }

    #[test]
    fn retries_then_succeeds_at_attempt_three() {
        let mut client = ScriptedClient::new(vec![
            ScriptStep::TransientFailure("503".to_string()),
            ScriptStep::TransientFailure("503".to_string()),
            reply("Q", "x = 1"),
        ]);
        let t = build_template(&pool(3), 0).unwrap();
        let retry = RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 0,
        };
        let (candidates, attempts) = generate(&t, &mut client, &retry).unwrap();
        assert_eq!(attempts, 3);
        assert_eq!(candidates.len(), 1);
    }

    #[test]
    fn exhausted_retries_carry_attempt_count() {
        let mut client = ScriptedClient::new(vec![
            ScriptStep::TransientFailure("503".to_string()),
            ScriptStep::TransientFailure("503".to_string()),
        ]);
        let t = build_template(&pool(3), 0).unwrap();
        let retry = RetryPolicy {
            max_attempts: 2,
            base_delay_ms: 0,
        };
        match generate(&t, &mut client, &retry) {
            Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("expected transport error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_gate_and_dedupe() {
        let mut state = DedupeState::default();
        let bad = Candidate {
            question: "q1".into(),
            code: "def f(:".into(),
        };
        let good = Candidate {
            question: "q2".into(),
            code: "x = 1\n".into(),
        };
        let dup = Candidate {
            question: "q3".into(),
            code: "x = 1   \n".into(),
        };
        assert_eq!(
            gate_candidate(&bad, &mut state),
            SampleStatus::RejectedSyntax
        );
        assert_eq!(gate_candidate(&good, &mut state), SampleStatus::Accepted);
        assert_eq!(
            gate_candidate(&dup, &mut state),
            SampleStatus::RejectedDuplicate
        );
    }

    #[test]
    fn duplicate_question_text_is_rejected() {
        let mut state = DedupeState::default();
        let a = Candidate {
            question: "same question".into(),
            code: "x = 1".into(),
        };
        let b = Candidate {
            question: "same question".into(),
            code: "y = 2".into(),
        };
        assert_eq!(gate_candidate(&a, &mut state), SampleStatus::Accepted);
        assert_eq!(
            gate_candidate(&b, &mut state),
            SampleStatus::RejectedDuplicate
        );
    }

    #[test]
    fn batch_manifest_arithmetic_reconciles() {
        let mut steps = Vec::new();
        for i in 0..7 {
            steps.push(reply(&format!("q{i}"), &format!("v{i} = {i}")));
        }
        steps.push(reply("bad1", "def f(:"));
        steps.push(reply("bad2", "while"));
        steps.push(reply("q0", "w = 0")); // duplicate question
        let mut client = ScriptedClient::new(steps);
        let outcome = synthesize_corpus(
            &pool(5),
            &SynthConfig {
                target_accepted: 7,
                budget: 10,
                seed: 1,
                retry: RetryPolicy {
                    max_attempts: 1,
                    base_delay_ms: 0,
                },
            },
            &mut client,
        )
        .unwrap();
        let m = &outcome.manifest;
        assert_eq!(m["accepted"], 7);
        assert_eq!(
            m["accepted"].as_u64().unwrap()
                + m["rejected_syntax"].as_u64().unwrap()
                + m["rejected_duplicate"].as_u64().unwrap(),
            m["parsed_candidates"].as_u64().unwrap()
        );
    }

    #[test]
    fn budget_exhaustion_yields_partial_corpus() {
        let mut client = ScriptedClient::new(vec![reply("q0", "a = 1"), reply("q1", "b = 2")]);
        let outcome = synthesize_corpus(
            &pool(4),
            &SynthConfig {
                target_accepted: 100,
                budget: 2,
                seed: 0,
                retry: RetryPolicy {
                    max_attempts: 1,
                    base_delay_ms: 0,
                },
            },
            &mut client,
        )
        .unwrap();
        assert!(!outcome.reached_target);
        assert_eq!(outcome.manifest["accepted"], 2);
        assert_eq!(outcome.manifest["calls"], 2);
    }

    #[test]
    fn seed_solutions_never_leak_into_accepted_output() {
        let p = pool(4);
        let mut client = ScriptedClient::new(vec![
            reply("replayed", &p[1].solution),
            reply("fresh", "total = 2 + 3\nprint(total)"),
        ]);
        let outcome = synthesize_corpus(
            &p,
            &SynthConfig {
                target_accepted: 1,
                budget: 5,
                seed: 0,
                retry: RetryPolicy {
                    max_attempts: 1,
                    base_delay_ms: 0,
                },
            },
            &mut client,
        )
        .unwrap();
        for s in &outcome.samples {
            if s.status == SampleStatus::Accepted {
                for seed in &p {
                    assert_ne!(s.code.trim(), seed.solution.trim());
                }
            }
        }
        assert_eq!(outcome.manifest["accepted"], 1);
        assert_eq!(outcome.manifest["rejected_duplicate"], 1);
    }

    #[test]
    fn deterministic_under_fixed_seed_and_mock() {
        let run = || {
            let mut client = SyntheticClient::new();
            let outcome = synthesize_corpus(
                &pool(6),
                &SynthConfig {
                    target_accepted: 5,
                    budget: 20,
                    seed: 3,
                    retry: RetryPolicy::default(),
                },
                &mut client,
            )
            .unwrap();
            (
                serde_json::to_string(&outcome.samples).unwrap(),
                outcome.manifest.to_string(),
            )
        };
        assert_eq!(run(), run());
    }
}
