//! Subprocess adapters for TPTP provers speaking TSTP and SZS.

use std::collections::HashMap;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::formula::{parse_tptp, Clause, Role, Statement};

use super::{
    canonical_query, negate_conjecture, DerivationRecord, EntailmentOracle, Limit, ProverError,
    ProverLimits, SaturationOutput, Verdict,
};

/// Output conventions of the external tool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    /// TSTP records with `% SZS status` (or `# SZS status`) lines.
    #[default]
    Tstp,
}

/// How to launch an external prover. Argument templates may contain
/// `{file}` (the problem path) and `{timeout}` (whole seconds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalProverConfig {
    pub executable: PathBuf,
    pub args: Vec<String>,
    #[serde(default)]
    pub saturation_args: Vec<String>,
    #[serde(default)]
    pub dialect: Dialect,
    #[serde(default)]
    pub limits: ProverLimits,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl ExternalProverConfig {
    pub fn eprover(executable: impl Into<PathBuf>) -> Self {
        ExternalProverConfig {
            executable: executable.into(),
            args: strings(&["--auto", "--tstp-format", "-s", "--cpu-limit={timeout}", "{file}"]),
            saturation_args: strings(&[
                "--tstp-format",
                "--print-saturated",
                "--output-level=4",
                "--cpu-limit={timeout}",
                "{file}",
            ]),
            dialect: Dialect::Tstp,
            limits: ProverLimits::default(),
        }
    }

    pub fn vampire(executable: impl Into<PathBuf>) -> Self {
        ExternalProverConfig {
            executable: executable.into(),
            args: strings(&["--input_syntax", "tptp", "--time_limit", "{timeout}", "{file}"]),
            saturation_args: Vec::new(),
            dialect: Dialect::Tstp,
            limits: ProverLimits::default(),
        }
    }

    /// The connection-tableau and finite-model checker shipped in this
    /// workspace.
    pub fn rc_refute(executable: impl Into<PathBuf>) -> Self {
        ExternalProverConfig {
            executable: executable.into(),
            args: strings(&["--timeout", "{timeout}", "{file}"]),
            saturation_args: Vec::new(),
            dialect: Dialect::Tstp,
            limits: ProverLimits::default(),
        }
    }

    /// Resolves the executable, looking through `PATH` for bare names.
    pub fn locate(&self) -> Result<PathBuf, ProverError> {
        let exe = &self.executable;
        if exe.components().count() > 1 || exe.is_absolute() {
            return if exe.is_file() {
                Ok(exe.clone())
            } else {
                Err(ProverError::MissingExecutable(exe.clone()))
            };
        }
        std::env::var_os("PATH")
            .into_iter()
            .flat_map(|p| std::env::split_paths(&p).collect::<Vec<_>>())
            .map(|dir| dir.join(exe))
            .find(|p| p.is_file())
            .ok_or_else(|| ProverError::MissingExecutable(exe.clone()))
    }

    fn expand(&self, template: &[String], file: &Path) -> Vec<String> {
        let secs = self.limits.timeout.as_secs_f64().ceil().max(1.0) as u64;
        template
            .iter()
            .map(|a| {
                a.replace("{file}", &file.to_string_lossy())
                    .replace("{timeout}", &secs.to_string())
            })
            .collect()
    }
}

struct RunOutput {
    stdout: String,
    timed_out: bool,
}

/// Extra wall-clock allowance on top of the prover's own time limit.
const KILL_GRACE: Duration = Duration::from_secs(2);

fn run(config: &ExternalProverConfig, template: &[String], file: &Path) -> Result<RunOutput, ProverError> {
    let exe = config.locate()?;
    let mut out = tempfile::tempfile()?;
    let mut child = Command::new(&exe)
        .args(config.expand(template, file))
        .stdin(Stdio::null())
        .stdout(out.try_clone()?)
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| ProverError::Spawn {
            exe: exe.clone(),
            source,
        })?;
    let timed_out = match child.wait_timeout(config.limits.timeout + KILL_GRACE)? {
        Some(_) => false,
        None => {
            let _ = child.kill();
            child.wait()?;
            true
        }
    };
    out.seek(SeekFrom::Start(0))?;
    let mut bytes = Vec::new();
    out.read_to_end(&mut bytes)?;
    Ok(RunOutput {
        stdout: String::from_utf8_lossy(&bytes).into_owned(),
        timed_out,
    })
}

/// The status word of the first `SZS status` line.
pub fn parse_szs_status(output: &str) -> Option<String> {
    output.lines().find_map(|line| {
        let rest = line.trim_start().strip_prefix(['%', '#'])?;
        let rest = rest.trim_start().strip_prefix("SZS status")?;
        rest.split_whitespace().next().map(str::to_string)
    })
}

fn status_verdict(status: Option<&str>, timed_out: bool) -> Verdict {
    match status {
        Some("Theorem" | "Unsatisfiable" | "ContradictoryAxioms") => Verdict::Entailed(None),
        Some("CounterSatisfiable" | "Satisfiable") => Verdict::NotEntailed,
        Some(other) => Verdict::ResourceOut(Limit::Status(other.to_string())),
        None if timed_out => Verdict::ResourceOut(Limit::Timeout),
        None => Verdict::ResourceOut(Limit::Status("NoStatus".into())),
    }
}

/// Parses the TSTP records in prover output into a derivation log.
///
/// With `allow_truncated`, an unfinished final record (a prover killed
/// mid-write) is ignored instead of reported.
pub fn parse_tstp_derivation(output: &str, allow_truncated: bool) -> Result<SaturationOutput, ProverError> {
    let mut records = Vec::new();
    let mut chunk = String::new();
    let mut chunk_line = 0;
    let lines: Vec<&str> = output.lines().collect();
    for (n, line) in lines.iter().enumerate() {
        let t = line.trim();
        if chunk.is_empty() {
            if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
                continue;
            }
            chunk_line = n + 1;
        }
        chunk.push_str(line);
        chunk.push('\n');
        if !t.ends_with(").") {
            continue;
        }
        let stmts = parse_tptp(&chunk).map_err(|e| ProverError::Parse {
            line: chunk_line + e.line - 1,
            text: lines
                .get(chunk_line + e.line - 2)
                .map_or_else(String::new, |s| s.to_string()),
            message: e.message,
        })?;
        for s in stmts {
            if let Statement::Record(r) = s {
                records.push(to_record(r));
            }
        }
        chunk.clear();
    }
    if !chunk.trim().is_empty() && !allow_truncated {
        return Err(ProverError::Parse {
            line: chunk_line,
            text: lines.get(chunk_line - 1).map_or_else(String::new, |s| s.to_string()),
            message: "unterminated record at end of output".into(),
        });
    }
    Ok(SaturationOutput {
        records,
        complete: true,
    })
}

fn to_record(r: crate::formula::TptpRecord) -> DerivationRecord {
    let a = r.annotated;
    let inference = r.source.as_ref().and_then(|s| s.inference());
    match inference {
        Some((rule, parents)) => DerivationRecord {
            name: a.name,
            role: Role::Derived,
            clause: a.clause,
            parents,
            rule,
        },
        None => {
            let role = match a.role {
                Role::NegatedConjecture | Role::Conjecture => a.role,
                _ => Role::Axiom,
            };
            let rule = match &r.source {
                Some(s) if s.is_introduced() => "introduced",
                _ => "input",
            };
            DerivationRecord {
                name: a.name,
                role,
                clause: a.clause,
                parents: Vec::new(),
                rule: rule.to_string(),
            }
        }
    }
}

/// Runs the prover in saturation mode and parses its derivation output.
/// A run cut off by the time limit returns whatever records were flushed,
/// marked incomplete.
pub fn run_external_saturation(
    axiom_file: &Path,
    config: &ExternalProverConfig,
) -> Result<SaturationOutput, ProverError> {
    if config.saturation_args.is_empty() {
        return Err(ProverError::Input(format!(
            "{} has no saturation argument template",
            config.executable.display()
        )));
    }
    let out = run(config, &config.saturation_args, axiom_file)?;
    let mut parsed = parse_tstp_derivation(&out.stdout, out.timed_out)?;
    let status = parse_szs_status(&out.stdout);
    parsed.complete = !out.timed_out && matches!(status.as_deref(), Some("Satisfiable" | "CounterSatisfiable"));
    Ok(parsed)
}

/// The refutation problem for `premises ⊨ conjecture` in TPTP CNF, with the
/// negated conjecture as ground `negated_conjecture` units.
pub fn write_problem(premises: &[Clause], conjecture: &Clause) -> String {
    let mut text = String::new();
    for (i, p) in premises.iter().enumerate() {
        text.push_str(&format!("cnf(p_{},axiom,{}).\n", i + 1, p));
    }
    for (i, n) in negate_conjecture(conjecture, premises).iter().enumerate() {
        text.push_str(&format!("cnf(goal_{},negated_conjecture,{}).\n", i + 1, n));
    }
    text
}

/// Asks the external prover whether `premises ⊨ conjecture`.
pub fn check_entailment_external(
    premises: &[Clause],
    conjecture: &Clause,
    config: &ExternalProverConfig,
) -> Result<Verdict, ProverError> {
    let mut file = tempfile::Builder::new().suffix(".p").tempfile()?;
    file.write_all(write_problem(premises, conjecture).as_bytes())?;
    file.flush()?;
    let out = run(config, &config.args, file.path())?;
    let status = parse_szs_status(&out.stdout);
    Ok(status_verdict(status.as_deref(), out.timed_out))
}

/// Counting semaphore bounding concurrent prover processes.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn with<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().expect("gate poisoned");
            while *free == 0 {
                free = self.cv.wait(free).expect("gate poisoned");
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().expect("gate poisoned") += 1;
        self.cv.notify_one();
        out
    }
}

/// External prover as an oracle, with at most `workers` processes at once.
pub struct ExternalOracle {
    config: ExternalProverConfig,
    gate: Gate,
    memo: Mutex<HashMap<String, Verdict>>,
}

impl ExternalOracle {
    pub fn new(config: ExternalProverConfig, workers: usize) -> Result<Self, ProverError> {
        config.locate()?;
        config.limits.validate()?;
        Ok(ExternalOracle {
            config,
            gate: Gate {
                free: Mutex::new(workers.max(1)),
                cv: Condvar::new(),
            },
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ExternalProverConfig {
        &self.config
    }
}

impl EntailmentOracle for ExternalOracle {
    fn check(&self, premises: &[Clause], conjecture: &Clause) -> Result<Verdict, ProverError> {
        let (sorted, key) = canonical_query(premises, conjecture);
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = self
            .gate
            .with(|| check_entailment_external(&sorted, &conjecture.normalized(), &self.config))?;
        // timeouts depend on machine load, so only definite answers are kept
        if v.definite().is_some() {
            self.memo.lock().expect("memo poisoned").insert(key, v.clone());
        }
        Ok(v)
    }

    fn describe(&self) -> String {
        format!("external({})", self.config.executable.display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_clause;

    #[test]
    fn szs_lines_in_both_comment_styles() {
        assert_eq!(parse_szs_status("% SZS status Theorem for x").as_deref(), Some("Theorem"));
        assert_eq!(
            parse_szs_status("foo\n# SZS status CounterSatisfiable\n").as_deref(),
            Some("CounterSatisfiable")
        );
        assert_eq!(parse_szs_status("no status here"), None);
    }

    #[test]
    fn status_mapping() {
        assert!(status_verdict(Some("Unsatisfiable"), false).is_entailed());
        assert!(status_verdict(Some("Theorem"), false).is_entailed());
        assert_eq!(status_verdict(Some("CounterSatisfiable"), false), Verdict::NotEntailed);
        assert_eq!(status_verdict(Some("Satisfiable"), false), Verdict::NotEntailed);
        assert_eq!(
            status_verdict(Some("GaveUp"), false),
            Verdict::ResourceOut(Limit::Status("GaveUp".into()))
        );
        assert_eq!(status_verdict(None, true), Verdict::ResourceOut(Limit::Timeout));
    }

    #[test]
    fn derivation_records() {
        let out = "# SZS status Satisfiable\n\
                   cnf(c_0_1, axiom, (p(a)), file('Axioms/SET001-0.ax', a1)).\n\
                   cnf(c_0_2, axiom, (~p(X1)|q(X1)),\n    file('Axioms/SET001-0.ax', a2)).\n\
                   cnf(c_0_3, plain, (q(a)), inference(resolution, [status(thm)], [c_0_1, c_0_2])).\n";
        let s = parse_tstp_derivation(out, false).unwrap();
        assert_eq!(s.records.len(), 3);
        assert_eq!(s.records[0].role, Role::Axiom);
        assert!(s.records[0].parents.is_empty());
        assert_eq!(s.records[2].parents, vec!["c_0_1", "c_0_2"]);
        assert_eq!(s.records[2].rule, "resolution");
        assert_eq!(s.records[2].role, Role::Derived);
    }

    #[test]
    fn truncated_and_malformed_output() {
        let out = "cnf(a, axiom, (p(a))).\ncnf(b, plain, (q(a)), inference(res";
        assert_eq!(parse_tstp_derivation(out, true).unwrap().records.len(), 1);
        assert!(parse_tstp_derivation(out, false).is_err());
        let bad = "cnf(a, axiom, (p(a))).\ncnf(b, plain, (q(a) | ), file(x)).\n";
        match parse_tstp_derivation(bad, false) {
            Err(ProverError::Parse { line, text, .. }) => {
                assert_eq!(line, 2);
                assert!(text.starts_with("cnf(b"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn problem_file_round_trips_through_parser() {
        let p = [parse_clause("(p(X1)|q(X1))").unwrap()];
        let text = write_problem(&p, &parse_clause("(q(X1))").unwrap());
        let stmts = parse_tptp(&text).unwrap();
        assert_eq!(stmts.len(), 2);
        assert!(text.contains("cnf(goal_1,negated_conjecture,(~q(esk_goal_1)))."));
    }

    #[test]
    fn missing_executable_is_reported() {
        let cfg = ExternalProverConfig::rc_refute("/nonexistent/prover");
        assert!(matches!(cfg.locate(), Err(ProverError::MissingExecutable(_))));
        assert!(ExternalOracle::new(cfg, 1).is_err());
    }
}
