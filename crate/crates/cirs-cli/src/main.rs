//! `cirs` — score code-rationale corpora, stratify them by score, filter
//! them to a band, and synthesize new corpora from seed problems.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 empty-result condition.
//! stdout carries machine-parseable summaries; diagnostics go to stderr.

mod config;
mod scored_io;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cirs_core::corpus::read_corpus_file;
use cirs_core::report::{histogram, summary_quantiles};
use cirs_core::score::{reject_line, score_corpus, scored_line};
use cirs_core::stats::CorpusStats;
use cirs_core::stratify::{
    filter_dataset, kmeans_1d, label_strata, prune_clusters, strata_manifest, InitMode,
    KeepSelector, KmeansConfig, ThresholdSet,
};
use cirs_core::synth::{
    synthesize_corpus, GenerationClient, HttpClient, RetryPolicy, SampleStatus, SeedProblem,
    SynthConfig, SyntheticClient,
};

use config::{load_file_config, resolve, resolve_opt, FileConfig};

const EXIT_OK: u8 = 0;
const EXIT_ERR: u8 = 1;
const EXIT_EMPTY: u8 = 2;

#[derive(Parser)]
#[command(
    name = "cirs",
    version,
    about = "Complexity-impacted scoring and stratification of code-rationale corpora"
)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel passes (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Log level for stderr diagnostics (error|warn|info|debug|trace).
    #[arg(long, global = true)]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a corpus: two passes, corpus stats then per-record scores.
    Score(ScoreArgs),
    /// Cluster scored records with 1-D k-means and label strata.
    Stratify(StratifyArgs),
    /// Keep the records of one stratum or score interval.
    Filter(FilterArgs),
    /// Generate a corpus from seed problems via a generation client.
    Synth(SynthArgs),
    /// Print the frozen rule tables (token classes, decision points, AST kinds) as JSON.
    Rules,
    /// Histogram and quantiles of the score distribution.
    Report(ReportArgs),
    /// score -> stratify -> filter in one run, composing via files.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// Input corpus JSONL ({"id", "code", "question"?, "answer"?}).
    #[arg(long)]
    input: PathBuf,
    /// Scored JSONL output.
    #[arg(long)]
    output: PathBuf,
    /// Frozen stats JSON to normalize against instead of this corpus.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Where to write the computed stats JSON (default: <output>.stats.json).
    #[arg(long)]
    stats_out: Option<PathBuf>,
    /// Reject JSONL output (default: <output>.rejects.jsonl).
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct StratifyArgs {
    /// Scored JSONL input.
    #[arg(long)]
    input: PathBuf,
    /// Assignment JSONL output.
    #[arg(long)]
    output: PathBuf,
    /// Manifest JSON output (default: <output>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Dispersion interval lower bound.
    #[arg(long)]
    j_min: Option<f64>,
    /// Dispersion interval upper bound (default: unbounded).
    #[arg(long)]
    j_max: Option<f64>,
    /// Derive J from score-distribution percentiles: two values, p_lo p_hi in [0,100].
    #[arg(long, num_args = 2, value_names = ["P_LO", "P_HI"])]
    auto_thresholds: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Apply cluster removal inside the iteration loop (the literal
    /// algorithm text) instead of once after convergence.
    #[arg(long)]
    prune_each_iter: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Quantile,
    Random,
}

#[derive(Args)]
struct FilterArgs {
    /// Scored JSONL input.
    #[arg(long)]
    input: PathBuf,
    /// Filtered JSONL output.
    #[arg(long)]
    output: PathBuf,
    /// Stratum name (e.g. medium) or score interval lo:hi, [lo, hi).
    #[arg(long)]
    keep: Option<String>,
    /// Assignment JSONL from `stratify` (required for stratum keeps).
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Stratify manifest to embed (thresholds/centroids) in the filter manifest.
    #[arg(long)]
    stratify_manifest: Option<PathBuf>,
    /// Manifest JSON output (default: <output>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Seed-problem JSONL ({"id", "dataset", "question", "code"}).
    #[arg(long)]
    seeds: PathBuf,
    /// Accepted-corpus JSONL output.
    #[arg(long)]
    output: PathBuf,
    /// All gated samples, including rejects (optional).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Manifest JSON output (default: <output>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Accepted samples to aim for.
    #[arg(long)]
    target: Option<usize>,
    /// Maximum generation-client calls.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Generation backend: "synthetic" (built-in deterministic client) or an HTTP(S) URL.
    #[arg(long)]
    endpoint: Option<String>,
    /// Environment variable holding the backend credential; never logged.
    #[arg(long)]
    credential_env: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Scored JSONL input.
    #[arg(long)]
    input: PathBuf,
    /// Also write the histogram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Input corpus JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for all artifacts.
    #[arg(long)]
    outdir: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    j_min: Option<f64>,
    #[arg(long)]
    j_max: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long)]
    prune_each_iter: bool,
    /// Stratum or interval to keep (default: medium).
    #[arg(long)]
    keep: Option<String>,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe (e.g. `head`) closes early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let file_cfg = match load_file_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERR);
        }
    };
    let level = resolve(
        cli.log_level.clone(),
        file_cfg.log_level.clone(),
        "warn".to_string(),
    );
    let _ = env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .try_init();
    if let Some(workers) = resolve_opt(cli.workers, file_cfg.workers) {
        let _ = rayon_pool(workers);
    }
    match run(cli.command, &file_cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERR)
        }
    }
}

fn rayon_pool(workers: usize) -> anyhow::Result<()> {
    // rayon is pulled in through the core crate; configure its global pool
    // via the env var it honors so the dependency stays behind the library.
    std::env::set_var("RAYON_NUM_THREADS", workers.to_string());
    Ok(())
}

fn run(command: Command, file_cfg: &FileConfig) -> anyhow::Result<u8> {
    match command {
        Command::Score(args) => cmd_score(args),
        Command::Stratify(args) => cmd_stratify(&args, file_cfg).map(|(code, _)| code),
        Command::Filter(args) => cmd_filter(args, file_cfg),
        Command::Synth(args) => cmd_synth(args, file_cfg),
        Command::Rules => {
            println!(
                "{}",
                serde_json::to_string_pretty(&cirs_core::rules::rule_tables())?
            );
            Ok(EXIT_OK)
        }
        Command::Report(args) => cmd_report(args),
        Command::Pipeline(args) => cmd_pipeline(args, file_cfg),
    }
}

fn default_sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    output.with_file_name(name)
}

fn write_lines(path: &Path, lines: &[String]) -> anyhow::Result<()> {
    let mut file =
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    for line in lines {
        writeln!(file, "{line}")?;
    }
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> anyhow::Result<u8> {
    let records =
        read_corpus_file(&args.input).map_err(|e| anyhow!("{}: {e}", args.input.display()))?;
    if records.is_empty() {
        eprintln!("warning: no records in {}", args.input.display());
        return Ok(EXIT_EMPTY);
    }
    let frozen = match &args.stats {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read stats {}", p.display()))?;
            Some(serde_json::from_str::<CorpusStats>(&text)?)
        }
        None => None,
    };
    let outcome = match score_corpus(records, frozen) {
        Ok(o) => o,
        Err(cirs_core::Error::EmptyCorpus) => {
            eprintln!("warning: corpus has no valid records");
            return Ok(EXIT_EMPTY);
        }
        Err(e) => return Err(e.into()),
    };

    let scored: Vec<String> = outcome
        .scored
        .iter()
        .map(|r| scored_line(r).map_err(Into::into))
        .collect::<anyhow::Result<_>>()?;
    write_lines(&args.output, &scored)?;

    let stats_out = args
        .stats_out
        .unwrap_or_else(|| default_sibling(&args.output, ".stats.json"));
    std::fs::write(&stats_out, serde_json::to_string_pretty(&outcome.stats)?)?;

    let rejects_path = args
        .rejects
        .unwrap_or_else(|| default_sibling(&args.output, ".rejects.jsonl"));
    let rejects: Vec<String> = outcome
        .rejected
        .iter()
        .map(|r| reject_line(r).map_err(Into::into))
        .collect::<anyhow::Result<_>>()?;
    write_lines(&rejects_path, &rejects)?;

    println!("scored\t{}", outcome.scored.len());
    println!("rejected\t{}", outcome.rejected.len());
    Ok(EXIT_OK)
}

fn build_kmeans_config(args: &StratifyArgs, file_cfg: &FileConfig, scores: &[f64]) -> KmeansConfig {
    let init = match resolve_opt(
        args.init.map(|i| match i {
            InitArg::Quantile => "quantile".to_string(),
            InitArg::Random => "random".to_string(),
        }),
        file_cfg.init.clone(),
    )
    .as_deref()
    {
        Some("random") => InitMode::Random,
        _ => InitMode::Quantile,
    };
    let thresholds = match &args.auto_thresholds {
        Some(p) if p.len() == 2 => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(f64::total_cmp);
            ThresholdSet {
                min: cirs_core::report::quantile(&sorted, p[0] / 100.0),
                max: cirs_core::report::quantile(&sorted, p[1] / 100.0),
            }
        }
        _ => ThresholdSet {
            min: resolve(args.j_min, file_cfg.j_min, 0.0),
            max: resolve(args.j_max, file_cfg.j_max, f64::INFINITY),
        },
    };
    KmeansConfig {
        k: resolve(args.k, file_cfg.k, 3),
        seed: resolve(args.seed, file_cfg.seed, 0),
        max_iters: resolve(args.max_iters, file_cfg.max_iters, 100),
        init,
        prune_each_iter: args.prune_each_iter || file_cfg.prune_each_iter.unwrap_or(false),
        thresholds,
    }
}

fn cmd_stratify(
    args: &StratifyArgs,
    file_cfg: &FileConfig,
) -> anyhow::Result<(u8, Option<serde_json::Value>)> {
    let lines = scored_io::read_scored(&args.input)?;
    if lines.is_empty() {
        eprintln!("warning: no scored records in {}", args.input.display());
        return Ok((EXIT_EMPTY, None));
    }
    let points: Vec<(String, f64)> = lines.iter().map(|l| (l.id.clone(), l.score)).collect();
    let scores: Vec<f64> = points.iter().map(|(_, s)| *s).collect();
    let config = build_kmeans_config(args, file_cfg, &scores);

    let model = kmeans_1d(&points, &config)?;
    let model = if config.prune_each_iter {
        model
    } else {
        prune_clusters(model, &config.thresholds)?
    };
    let labels = label_strata(&model);

    let out_lines: Vec<String> = labels
        .iter()
        .map(|l| serde_json::to_string(l).map_err(Into::into))
        .collect::<anyhow::Result<_>>()?;
    write_lines(&args.output, &out_lines)?;

    let mut manifest = strata_manifest(&model, &config.thresholds);
    manifest["config"] = effective_config_json(&config);
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_sibling(&args.output, ".manifest.json"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    // per-stratum counts table, ascending centroid then pruned
    for (name, entry) in manifest["strata"].as_object().unwrap() {
        if entry["retained"].as_bool() == Some(true) {
            println!("{name}\t{}", entry["count"]);
        }
    }
    let pruned = manifest["pruned"].as_u64().unwrap_or(0);
    if pruned > 0 {
        println!("pruned\t{pruned}");
    }
    Ok((EXIT_OK, Some(manifest)))
}

fn effective_config_json(config: &KmeansConfig) -> serde_json::Value {
    serde_json::json!({
        "k": config.k,
        "seed": config.seed,
        "max_iters": config.max_iters,
        "init": config.init.to_string(),
        "prune_each_iter": config.prune_each_iter,
        "j": [config.thresholds.min,
              if config.thresholds.max.is_finite() {
                  serde_json::Value::from(config.thresholds.max)
              } else {
                  serde_json::Value::Null
              }],
    })
}

fn parse_keep(keep: &str) -> anyhow::Result<KeepSelector> {
    if let Some((lo, hi)) = keep.split_once(':') {
        let lo: f64 = lo.trim().parse().context("interval lower bound")?;
        let hi: f64 = hi.trim().parse().context("interval upper bound")?;
        Ok(KeepSelector::Interval(lo, hi))
    } else {
        Ok(KeepSelector::Stratum(keep.trim().to_string()))
    }
}

fn cmd_filter(args: FilterArgs, file_cfg: &FileConfig) -> anyhow::Result<u8> {
    let lines = scored_io::read_scored(&args.input)?;
    let keep = resolve_opt(args.keep.clone(), file_cfg.keep.clone())
        .ok_or_else(|| anyhow!("--keep is required (stratum name or lo:hi interval)"))?;
    let selector = parse_keep(&keep)?;

    let assignments = match (&selector, &args.assignments) {
        (KeepSelector::Stratum(_), None) => {
            return Err(anyhow!("--assignments is required when keeping a stratum"));
        }
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let parsed: Vec<cirs_core::stratify::StratumAssignment> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<_, _>>()?;
            Some(parsed)
        }
        (_, None) => None,
    };

    let records: Vec<(String, f64)> = lines.iter().map(|l| (l.id.clone(), l.score)).collect();
    let outcome = filter_dataset(&records, &selector, assignments.as_deref())?;

    let kept: Vec<String> = outcome.kept.iter().map(|&i| lines[i].raw.clone()).collect();
    write_lines(&args.output, &kept)?;

    let mut manifest = outcome.manifest;
    if let Some(path) = &args.stratify_manifest {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        manifest["stratification"] = serde_json::from_str(&text)?;
    }
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_sibling(&args.output, ".manifest.json"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    println!("input\t{}", lines.len());
    println!("kept\t{}", kept.len());
    if kept.is_empty() {
        return Ok(EXIT_EMPTY);
    }
    Ok(EXIT_OK)
}

fn cmd_synth(args: SynthArgs, file_cfg: &FileConfig) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&args.seeds)
        .with_context(|| format!("cannot read {}", args.seeds.display()))?;
    let pool: Vec<SeedProblem> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()?;

    let endpoint = resolve(
        args.endpoint.clone(),
        file_cfg.endpoint.clone(),
        "synthetic".to_string(),
    );
    let credential_env = resolve_opt(args.credential_env.clone(), file_cfg.credential_env.clone());
    let mut client: Box<dyn GenerationClient> = if endpoint == "synthetic" {
        Box::new(SyntheticClient::new())
    } else {
        Box::new(HttpClient::new(endpoint.clone(), credential_env))
    };

    let config = SynthConfig {
        target_accepted: resolve(args.target, file_cfg.target, 10),
        budget: resolve(args.budget, file_cfg.budget, 100),
        seed: resolve(args.seed, file_cfg.seed, 0),
        retry: RetryPolicy::default(),
    };
    let outcome = synthesize_corpus(&pool, &config, client.as_mut())?;

    let accepted: Vec<String> = outcome
        .samples
        .iter()
        .filter(|s| s.status == SampleStatus::Accepted)
        .map(|s| {
            serde_json::to_string(&serde_json::json!({
                "id": s.id,
                "question": s.question,
                "code": s.code,
                "provenance": s.provenance,
            }))
            .map_err(Into::into)
        })
        .collect::<anyhow::Result<_>>()?;
    write_lines(&args.output, &accepted)?;

    if let Some(path) = &args.samples {
        let all: Vec<String> = outcome
            .samples
            .iter()
            .map(|s| serde_json::to_string(s).map_err(Into::into))
            .collect::<anyhow::Result<_>>()?;
        write_lines(path, &all)?;
    }

    let mut manifest = outcome.manifest;
    manifest["endpoint"] = serde_json::Value::String(endpoint);
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_sibling(&args.output, ".manifest.json"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    println!("accepted\t{}", accepted.len());
    if !outcome.reached_target {
        eprintln!(
            "warning: budget exhausted before target ({} accepted of {})",
            accepted.len(),
            config.target_accepted
        );
        return Ok(EXIT_EMPTY);
    }
    Ok(EXIT_OK)
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<u8> {
    let lines = scored_io::read_scored(&args.input)?;
    if lines.is_empty() {
        eprintln!("warning: no scored records in {}", args.input.display());
        return Ok(EXIT_EMPTY);
    }
    let scores: Vec<f64> = lines.iter().map(|l| l.score).collect();
    let hist = histogram(&scores);
    print!("{}", hist.render());
    let q = summary_quantiles(&scores).expect("nonempty");
    println!("p10\t{:.9}", q.p10);
    println!("p50\t{:.9}", q.p50);
    println!("p90\t{:.9}", q.p90);
    if let Some(path) = &args.csv {
        std::fs::write(path, hist.to_csv())?;
    }
    Ok(EXIT_OK)
}

fn cmd_pipeline(args: PipelineArgs, file_cfg: &FileConfig) -> anyhow::Result<u8> {
    std::fs::create_dir_all(&args.outdir)?;
    let scored = args.outdir.join("scored.jsonl");
    let code = cmd_score(ScoreArgs {
        input: args.input.clone(),
        output: scored.clone(),
        stats: None,
        stats_out: Some(args.outdir.join("stats.json")),
        rejects: Some(args.outdir.join("rejects.jsonl")),
    })?;
    if code != EXIT_OK {
        return Ok(code);
    }

    let assignments = args.outdir.join("assignments.jsonl");
    let stratify_manifest = args.outdir.join("stratify.manifest.json");
    let stratify_args = StratifyArgs {
        input: scored.clone(),
        output: assignments.clone(),
        manifest: Some(stratify_manifest.clone()),
        k: args.k,
        seed: args.seed,
        max_iters: None,
        j_min: args.j_min,
        j_max: args.j_max,
        auto_thresholds: None,
        init: args.init,
        prune_each_iter: args.prune_each_iter,
    };
    let (code, _manifest) = cmd_stratify(&stratify_args, file_cfg)?;
    if code != EXIT_OK {
        return Ok(code);
    }

    cmd_filter(
        FilterArgs {
            input: scored,
            output: args.outdir.join("filtered.jsonl"),
            keep: Some(resolve(
                args.keep.clone(),
                file_cfg.keep.clone(),
                "medium".to_string(),
            )),
            assignments: Some(assignments),
            stratify_manifest: Some(stratify_manifest),
            manifest: Some(args.outdir.join("filter.manifest.json")),
        },
        file_cfg,
    )
}
