//! Config to dataset: saturate, build, rate, rank, generate, emit.

mod emit;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{load_tptp_file, parse_tptp, AnnotatedClause, LoadError, ParseError, Statement};
use crate::graph::{build_graph, DerivationGraph, GraphError, NodeId};
use crate::prover::{
    run_external_saturation, saturate_internal, EntailmentOracle, ExternalOracle, ExternalProverConfig,
    InternalOracle, ProverError, ProverLimits, RoutingOracle, SaturationOutput,
};
use crate::rater::{rank_theorems, rate_graph, RaterConfig, RaterConfigError};
use crate::tasks::{
    gen_entailment, gen_reconstruction, gen_selection, instance_seed, render_prompt, DifficultySpec,
    TaskError, TaskInstance, TaskKind,
};

pub use emit::{config_key, emit_jsonl, manifest_path, read_jsonl, DatasetRecord, EmitError, Manifest, ManifestMeta};

/// Axiom sets shipped with the crate, about a dozen clauses each.
pub fn bundled_axioms(code: &str) -> Option<&'static str> {
    Some(match code {
        "ALG" => include_str!("../../data/axioms/ALG.ax"),
        "BOO" => include_str!("../../data/axioms/BOO.ax"),
        "FLD" => include_str!("../../data/axioms/FLD.ax"),
        "GEO" => include_str!("../../data/axioms/GEO.ax"),
        "GRP" => include_str!("../../data/axioms/GRP.ax"),
        "LAT" => include_str!("../../data/axioms/LAT.ax"),
        "SET" => include_str!("../../data/axioms/SET.ax"),
        "TOP" => include_str!("../../data/axioms/TOP.ax"),
        _ => return None,
    })
}

/// The default domains.
pub const BUNDLED_DOMAINS: [&str; 5] = ["ALG", "FLD", "GEO", "SET", "TOP"];

/// Further bundled sets, available by code but not generated by default.
pub const EXTRA_DOMAINS: [&str; 3] = ["BOO", "GRP", "LAT"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub code: String,
    /// Axiom file; relative paths resolve against `axiom_root`. Without a
    /// file the bundled set for `code` is used.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProverMode {
    #[default]
    Internal,
    External,
    /// Equality queries external, the rest internal.
    Routed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub mode: ProverMode,
    pub limits: ProverLimits,
    pub external: Option<ExternalProverConfig>,
    /// Concurrent external prover processes.
    pub workers: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            mode: ProverMode::Internal,
            limits: ProverLimits::default(),
            external: None,
            workers: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaturationConfig {
    pub limits: ProverLimits,
    /// Saturate with this prover instead of the internal one.
    pub external: Option<ExternalProverConfig>,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig {
            limits: ProverLimits {
                max_clauses: 2000,
                max_weight: 30,
                ..ProverLimits::default()
            },
            external: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Instances per (domain, kind, level).
    pub count: usize,
    pub kinds: Vec<TaskKind>,
    pub levels: Vec<u8>,
    pub entailment_k: [usize; 4],
    pub selection_k: [usize; 4],
    pub depths: [usize; 4],
    pub reconstruction_depths: [usize; 4],
    /// Generation attempts per instance before it counts as a shortfall.
    pub attempts: usize,
    pub axiom_root: Option<PathBuf>,
    /// Include root for TPTP `include` directives.
    pub tptp_root: Option<PathBuf>,
    pub domains: Vec<DomainConfig>,
    pub rater: RaterConfig,
    pub saturation: SaturationConfig,
    pub oracle: OracleConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            count: 50,
            kinds: TaskKind::ALL.to_vec(),
            levels: vec![1, 2, 3, 4],
            entailment_k: crate::tasks::ENTAILMENT_K,
            selection_k: crate::tasks::SELECTION_K,
            depths: [1, 2, 3, 4],
            reconstruction_depths: crate::tasks::RECONSTRUCTION_D,
            attempts: 8,
            axiom_root: None,
            tptp_root: None,
            domains: BUNDLED_DOMAINS
                .iter()
                .map(|c| DomainConfig {
                    code: c.to_string(),
                    file: None,
                })
                .collect(),
            rater: RaterConfig::default(),
            saturation: SaturationConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Rater(#[from] RaterConfigError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("bundled axioms for {code}: {source}")]
    Bundled { code: String, source: ParseError },
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.kinds.is_empty() {
            return bad("no task kinds".into());
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(1..=4).contains(l)) {
            return bad(format!("levels {:?} must be a nonempty subset of 1..=4", self.levels));
        }
        if self.levels.iter().collect::<HashSet<_>>().len() != self.levels.len() {
            return bad("repeated level".into());
        }
        if self.domains.is_empty() {
            return bad("no domains".into());
        }
        let mut codes = HashSet::new();
        for d in &self.domains {
            if !codes.insert(d.code.as_str()) {
                return bad(format!("domain {} listed twice", d.code));
            }
            if d.file.is_none() && bundled_axioms(&d.code).is_none() {
                return bad(format!("domain {} has no file and no bundled axioms", d.code));
            }
        }
        if self.depths.iter().chain(&self.reconstruction_depths).any(|&d| d == 0) {
            return bad("depths must be positive".into());
        }
        if self.attempts == 0 {
            return bad("attempts must be positive".into());
        }
        self.rater.validate()?;
        self.saturation.limits.validate()?;
        self.oracle.limits.validate()?;
        if self.oracle.mode != ProverMode::Internal && self.oracle.external.is_none() {
            return bad(format!("oracle mode {:?} needs [oracle.external]", self.oracle.mode));
        }
        Ok(())
    }

    pub fn spec(&self, kind: TaskKind, level: u8) -> DifficultySpec {
        let i = level as usize - 1;
        let (d, k) = match kind {
            TaskKind::Entailment => (self.depths[i], self.entailment_k[i]),
            TaskKind::Selection => (self.depths[i], self.selection_k[i]),
            TaskKind::Reconstruction => (self.reconstruction_depths[i], 0),
        };
        DifficultySpec { level, d, k, kind }
    }

    /// Records a run with no shortfall would emit.
    pub fn expected_records(&self) -> usize {
        self.domains.len() * self.kinds.len() * self.levels.len() * self.count
    }

    pub fn build_oracle(&self) -> Result<Box<dyn EntailmentOracle>, PipelineError> {
        let ext = || -> Result<ExternalOracle, PipelineError> {
            let mut c = self.oracle.external.clone().expect("validated");
            c.limits = self.oracle.limits;
            Ok(ExternalOracle::new(c, self.oracle.workers)?)
        };
        Ok(match self.oracle.mode {
            ProverMode::Internal => Box::new(InternalOracle::new(self.oracle.limits)),
            ProverMode::External => Box::new(ext()?),
            ProverMode::Routed => Box::new(RoutingOracle {
                internal: InternalOracle::new(self.oracle.limits),
                external: ext()?,
            }),
        })
    }
}

/// A domain's rated derivation graph.
pub struct DomainGraph {
    pub code: String,
    pub graph: DerivationGraph,
    /// Every derived node, best first.
    pub ranked: Vec<NodeId>,
    pub complete: bool,
}

fn resolve_file(cfg: &PipelineConfig, file: &Path) -> PathBuf {
    match &cfg.axiom_root {
        Some(root) if file.is_relative() => root.join(file),
        _ => file.to_path_buf(),
    }
}

pub fn load_domain_axioms(cfg: &PipelineConfig, domain: &DomainConfig) -> Result<Vec<AnnotatedClause>, PipelineError> {
    let axioms = match &domain.file {
        Some(f) => load_tptp_file(&resolve_file(cfg, f), cfg.tptp_root.as_deref())?,
        None => {
            let text = bundled_axioms(&domain.code).expect("validated");
            parse_tptp(text)
                .map_err(|source| PipelineError::Bundled {
                    code: domain.code.clone(),
                    source,
                })?
                .into_iter()
                .filter_map(|s| match s {
                    Statement::Record(r) => Some(r.annotated),
                    Statement::Include { .. } => None,
                })
                .collect()
        }
    };
    Ok(axioms
        .into_iter()
        .map(|a| a.with_domain(domain.code.clone()))
        .collect())
}

fn saturate(cfg: &PipelineConfig, domain: &DomainConfig, axioms: &[AnnotatedClause]) -> Result<SaturationOutput, PipelineError> {
    let Some(ext) = &cfg.saturation.external else {
        return Ok(saturate_internal(axioms, cfg.saturation.limits));
    };
    let mut config = ext.clone();
    config.limits = cfg.saturation.limits;
    if let Some(f) = &domain.file {
        return Ok(run_external_saturation(&resolve_file(cfg, f), &config)?);
    }
    let mut tmp = tempfile::Builder::new().suffix(".p").tempfile().map_err(ProverError::from)?;
    for a in axioms {
        use std::io::Write;
        writeln!(tmp, "{}", a.to_tptp()).map_err(ProverError::from)?;
    }
    Ok(run_external_saturation(tmp.path(), &config)?)
}

pub fn build_domain(cfg: &PipelineConfig, domain: &DomainConfig) -> Result<DomainGraph, PipelineError> {
    let axioms = load_domain_axioms(cfg, domain)?;
    let out = saturate(cfg, domain, &axioms)?;
    let mut graph = build_graph(&out)?;
    graph.set_domain(&domain.code);
    let scores = rate_graph(&graph, &cfg.rater);
    let all = RaterConfig {
        top_n: usize::MAX,
        ..cfg.rater.clone()
    };
    let ranked = rank_theorems(&graph, &scores, &all);
    info!(
        "{}: {} axioms, {} nodes, saturation {}",
        domain.code,
        axioms.len(),
        graph.len(),
        if out.complete { "complete" } else { "cut off" }
    );
    Ok(DomainGraph {
        code: domain.code.clone(),
        graph,
        ranked,
        complete: out.complete,
    })
}

/// The `top_n` best-ranked theorems a task of `spec` can be built on.
pub fn eligible_theorems(dg: &DomainGraph, spec: &DifficultySpec, top_n: usize) -> Vec<NodeId> {
    let g = &dg.graph;
    dg.ranked
        .iter()
        .copied()
        .filter(|&v| !g.clause(v).clause.is_empty())
        .filter(|&v| match spec.kind {
            TaskKind::Reconstruction => matches!(g.binary_proof_subgraph(v, spec.d), Ok(Some(_))),
            _ => g.node_depth(v).is_ok_and(|n| n >= spec.d),
        })
        .take(top_n)
        .collect()
}

/// Instances for one configuration, in index order, plus the shortfall.
pub fn generate_configuration(
    cfg: &PipelineConfig,
    dg: &DomainGraph,
    kind: TaskKind,
    level: u8,
    oracle: &dyn EntailmentOracle,
) -> Result<(Vec<DatasetRecord>, usize), PipelineError> {
    let spec = cfg.spec(kind, level);
    let eligible = eligible_theorems(dg, &spec, cfg.rater.top_n);
    let mut used: HashSet<NodeId> = HashSet::new();
    let mut prompts: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    let mut shortfall = 0;
    for index in 0..cfg.count {
        let mut made = false;
        for attempt in 0..cfg.attempts {
            if eligible.is_empty() {
                break;
            }
            let seed = instance_seed(cfg.seed, &dg.code, kind, level, index, attempt);
            let fresh: Vec<NodeId> = eligible.iter().copied().filter(|v| !used.contains(v)).collect();
            let pool = if fresh.is_empty() { &eligible } else { &fresh };
            let theorem = pool[(seed % pool.len() as u64) as usize];
            let made_task = match kind {
                TaskKind::Entailment => {
                    // alternate labels, but take either once half the attempts are spent
                    let want = (attempt < cfg.attempts.div_ceil(2)).then_some((index + level as usize) % 2 == 1);
                    gen_entailment(&dg.graph, theorem, spec, seed, oracle, want).map(TaskInstance::Entailment)
                }
                TaskKind::Selection => gen_selection(&dg.graph, theorem, spec, seed, oracle).map(TaskInstance::Selection),
                TaskKind::Reconstruction => gen_reconstruction(&dg.graph, theorem, spec, seed).map(TaskInstance::Reconstruction),
            };
            let task = match made_task {
                Ok(t) => t,
                Err(e) if e.is_discard() => {
                    debug!("{}/{kind}/L{level} #{index} attempt {attempt}: {e}", dg.code);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let prompt = render_prompt(&task);
            if !prompts.insert(prompt.clone()) {
                continue;
            }
            used.insert(theorem);
            out.push(DatasetRecord::new(&task, index, prompt));
            made = true;
            break;
        }
        if !made {
            warn!("{}/{kind}/L{level} #{index}: no instance after {} attempts", dg.code, cfg.attempts);
            shortfall += 1;
        }
    }
    Ok((out, shortfall))
}

/// Records of every configuration, in domain, kind and level order, plus
/// shortfall counts keyed like [`config_key`].
pub fn generate(
    cfg: &PipelineConfig,
    oracle: &dyn EntailmentOracle,
) -> Result<(Vec<DatasetRecord>, BTreeMap<String, usize>), PipelineError> {
    cfg.validate()?;
    let graphs = cfg
        .domains
        .par_iter()
        .map(|d| build_domain(cfg, d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut jobs = Vec::new();
    for dg in &graphs {
        for &kind in &cfg.kinds {
            for &level in &cfg.levels {
                jobs.push((dg, kind, level));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(dg, kind, level)| generate_configuration(cfg, dg, kind, level, oracle))
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    let mut shortfall = BTreeMap::new();
    for (&(dg, kind, level), (recs, short)) in jobs.iter().zip(results) {
        if short > 0 {
            shortfall.insert(config_key(&dg.code, kind, level), short);
        }
        records.extend(recs);
    }
    Ok((records, shortfall))
}

/// Generates the configured dataset and writes it to `out` with its manifest.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<Manifest, PipelineError> {
    let oracle = cfg.build_oracle()?;
    let (records, shortfall) = generate(cfg, oracle.as_ref())?;
    let saturation = match &cfg.saturation.external {
        Some(e) => format!("external({})", e.executable.display()),
        None => format!(
            "internal-resolution(max_clauses={},max_weight={})",
            cfg.saturation.limits.max_clauses, cfg.saturation.limits.max_weight
        ),
    };
    let meta = ManifestMeta {
        global_seed: cfg.seed,
        tool_versions: BTreeMap::from([
            ("rc-core".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("oracle".to_string(), oracle.describe()),
            ("saturation".to_string(), saturation),
        ]),
        domains: cfg.domains.iter().map(|d| d.code.clone()).collect(),
        shortfall,
    };
    Ok(emit_jsonl(&records, out, meta)?)
}
