use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rc_core::grade::{grade_answer, Strictness};
use rc_core::pipeline::{
    build_domain, bundled_axioms, config_key, eligible_theorems, manifest_path, read_jsonl, run_pipeline, DatasetRecord,
    DomainConfig, PipelineConfig, ProverMode,
};
use rc_core::prover::ExternalProverConfig;
use rc_core::rater::{rate_graph, score_table};
use rc_core::tasks::TaskKind;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "rcforge", version, about = "Generate and grade clausal reasoning tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Saturate, rate and generate a JSONL dataset with its manifest.
    Generate(GenerateArgs),
    /// Grade answers against a generated dataset.
    Grade(GradeArgs),
    /// Summarize a dataset, or a domain's derivation graph.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    prover: Option<Mode>,
    /// External prover executable, for external and routed modes.
    #[arg(long)]
    external: Option<PathBuf>,
    /// Argument conventions of the external prover.
    #[arg(long, value_enum, default_value = "rc-refute")]
    external_kind: Preset,
    /// Concurrent external prover processes.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory that relative axiom files resolve against; defaults to $TPTP.
    #[arg(long)]
    axiom_root: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Internal,
    External,
    Routed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Eprover,
    Vampire,
    RcRefute,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, short)]
    output: PathBuf,
    /// Override the per-configuration instance count.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct GradeArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset written by `generate`.
    #[arg(long)]
    dataset: PathBuf,
    /// JSONL of `{"id": ..., "answer": ...}` objects.
    #[arg(long)]
    answers: PathBuf,
    /// Per-answer reports as JSONL; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Score partial reconstructions instead of zeroing them.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset to summarize.
    dataset: Option<PathBuf>,
    /// Saturate and rate this domain instead.
    #[arg(long)]
    domain: Option<String>,
    /// Print every node's scores.
    #[arg(long)]
    scores: bool,
}

#[derive(Deserialize)]
struct Answer {
    id: String,
    answer: String,
}

#[derive(Serialize)]
struct GradeLine<'a> {
    id: &'a str,
    #[serde(flatten)]
    report: rc_core::grade::GradeReport,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.oracle.workers = w;
        }
        let tptp = std::env::var_os("TPTP").map(PathBuf::from);
        if let Some(r) = self.axiom_root.clone().or_else(|| cfg.axiom_root.clone()).or_else(|| tptp.clone()) {
            cfg.axiom_root = Some(r);
        }
        if cfg.tptp_root.is_none() {
            cfg.tptp_root = tptp;
        }
        if let Some(exe) = &self.external {
            cfg.oracle.external = Some(match self.external_kind {
                Preset::Eprover => ExternalProverConfig::eprover(exe),
                Preset::Vampire => ExternalProverConfig::vampire(exe),
                Preset::RcRefute => ExternalProverConfig::rc_refute(exe),
            });
        }
        if let Some(m) = self.prover {
            cfg.oracle.mode = match m {
                Mode::Internal => ProverMode::Internal,
                Mode::External => ProverMode::External,
                Mode::Routed => ProverMode::Routed,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let mut cfg = args.common.config()?;
    if let Some(c) = args.count {
        cfg.count = c;
    }
    let m = run_pipeline(&cfg, &args.output)?;
    writeln!(
        out,
        "{} of {} records to {} ({})",
        m.records,
        cfg.expected_records(),
        args.output.display(),
        manifest_path(&args.output).display()
    )?;
    for (key, n) in &m.shortfall {
        writeln!(out, "shortfall {key}: {n}")?;
    }
    Ok(())
}

fn grade(args: GradeArgs) -> Result<()> {
    let cfg = args.common.config()?;
    let oracle = cfg.build_oracle()?;
    let records: BTreeMap<String, DatasetRecord> =
        read_jsonl(&args.dataset)?.into_iter().map(|r| (r.id.clone(), r)).collect();
    let strictness = if args.lenient { Strictness::Lenient } else { Strictness::Strict };
    let file = std::fs::File::open(&args.answers).with_context(|| args.answers.display().to_string())?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| p.display().to_string())?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut totals: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let a: Answer = serde_json::from_str(&line).with_context(|| format!("answers line {}", n + 1))?;
        let Some(rec) = records.get(&a.id) else {
            bail!("answers line {}: unknown id {}", n + 1, a.id);
        };
        let report = grade_answer(&rec.task, &a.answer, oracle.as_ref(), strictness)?;
        let t = totals.entry(config_key(&rec.domain, rec.task_type, rec.level)).or_default();
        t.0 += report.score;
        t.1 += 1;
        serde_json::to_writer(&mut out, &GradeLine { id: &a.id, report })?;
        writeln!(out)?;
    }
    out.flush()?;
    for (key, (sum, n)) in &totals {
        eprintln!("{key}\t{n}\t{:.3}", sum / *n as f64);
    }
    Ok(())
}

fn inspect_dataset(path: &Path) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let records = read_jsonl(path)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(config_key(&r.domain, r.task_type, r.level)).or_default() += 1;
    }
    writeln!(out, "{} records", records.len())?;
    for (k, n) in &counts {
        writeln!(out, "{k}\t{n}")?;
    }
    let mpath = manifest_path(path);
    if let Ok(text) = std::fs::read_to_string(&mpath) {
        let m: rc_core::pipeline::Manifest = serde_json::from_str(&text)?;
        writeln!(out, "seed {}", m.global_seed)?;
        writeln!(out, "dataset sha256 {}", m.dataset_sha256)?;
        for (tool, v) in &m.tool_versions {
            writeln!(out, "{tool}\t{v}")?;
        }
        for (key, n) in &m.shortfall {
            writeln!(out, "shortfall {key}: {n}")?;
        }
    }
    Ok(())
}

fn inspect_domain(cfg: &PipelineConfig, code: &str, scores: bool) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let domain = match cfg.domains.iter().find(|d| d.code == code) {
        Some(d) => d.clone(),
        None if bundled_axioms(code).is_some() => DomainConfig {
            code: code.to_string(),
            file: None,
        },
        None => bail!("domain {code} is neither configured nor bundled"),
    };
    let dg = build_domain(cfg, &domain)?;
    let g = &dg.graph;
    writeln!(
        out,
        "{code}: {} axioms, {} derived, saturation {}",
        g.roots().count(),
        g.derived().count(),
        if dg.complete { "complete" } else { "cut off" }
    )?;
    for kind in TaskKind::ALL {
        let row: Vec<String> = cfg
            .levels
            .iter()
            .map(|&l| format!("L{l}={}", eligible_theorems(&dg, &cfg.spec(kind, l), cfg.rater.top_n).len()))
            .collect();
        writeln!(out, "eligible {kind}: {}", row.join(" "))?;
    }
    for &v in dg.ranked.iter().take(10) {
        writeln!(out, "{}\t{}", g.clause(v).name, g.clause(v).clause)?;
    }
    if scores {
        write!(out, "{}", score_table(g, &rate_graph(g, &cfg.rater)))?;
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    match (&args.dataset, &args.domain) {
        (Some(p), None) => inspect_dataset(p),
        (None, Some(code)) => inspect_domain(&args.common.config()?, code, args.scores),
        _ => bail!("give either a dataset path or --domain"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Grade(a) => grade(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe, as under `| head`, is not a failure
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rcforge: {e:#}");
            ExitCode::FAILURE
        }
    }
}
