use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use rc_core::formula::{parse_tptp, AnnotatedClause, Role, Statement};
use rc_refute::{refute, Options, Status};

/// Decides a TPTP CNF problem and prints an SZS status line.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Seconds before giving up.
    #[arg(long, default_value_t = 5)]
    timeout: u64,
    /// Longest tableau branch tried.
    #[arg(long, default_value_t = 40)]
    max_depth: usize,
    /// Largest counter-model domain; 0 disables the search.
    #[arg(long, default_value_t = 4)]
    model_size: usize,
    problem: PathBuf,
}

fn load(path: &Path, out: &mut Vec<AnnotatedClause>) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    for st in parse_tptp(&text).map_err(|e| format!("{}: {e}", path.display()))? {
        match st {
            Statement::Record(r) => out.push(r.annotated),
            Statement::Include { path: inc, .. } => {
                let root = std::env::var_os("TPTP")
                    .map(PathBuf::from)
                    .or_else(|| path.parent().map(Path::to_path_buf))
                    .unwrap_or_default();
                load(&root.join(inc), out)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut records = Vec::new();
    if let Err(e) = load(&args.problem, &mut records) {
        eprintln!("rc-refute: {e}");
        println!("% SZS status InputError for {}", args.problem.display());
        return ExitCode::FAILURE;
    }
    let goals: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.role, Role::NegatedConjecture | Role::Conjecture))
        .map(|(i, _)| i)
        .collect();
    let clauses: Vec<_> = records.into_iter().map(|r| r.clause).collect();
    let opts = Options {
        timeout: Duration::from_secs(args.timeout),
        max_depth: args.max_depth,
        model_size: args.model_size,
        ..Options::default()
    };
    let status = match (refute(&clauses, &goals, opts), goals.is_empty()) {
        (Status::Unsatisfiable, true) => "Unsatisfiable",
        (Status::Unsatisfiable, false) => "Theorem",
        (Status::Satisfiable, true) => "Satisfiable",
        (Status::Satisfiable, false) => "CounterSatisfiable",
        (Status::GaveUp, _) => "GaveUp",
    };
    println!("% SZS status {status} for {}", args.problem.display());
    ExitCode::SUCCESS
}
