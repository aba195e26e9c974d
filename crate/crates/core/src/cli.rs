//! The `theory-arena` command line.
//!
//! Exit codes: 0 on success, 2 for configuration, argument or schema
//! errors, 3 for failures while running.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;
use crate::debate::{run_adjudication, DebateTrace};
use crate::error::{ArenaError, Result};
use crate::models::ModelKind;
use crate::report::{read_rows, write_rows, write_series, write_summary};
use crate::stimulus::{enumerate_designs, StimulusSpace};
use crate::study::run_recovery_study;

/// Worker-thread cap for parallel stages; 0 or unset means one per core.
pub const THREADS_ENV: &str = "THEORY_ARENA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "theory-arena", version, about = "Closed-loop adjudication between categorization theories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one adjudication and write `trace.json`.
    Run(RunArgs),
    /// Run the recovery study over truths, lapse rates and replications.
    Study(StudyArgs),
    /// Print the first designs of the canonical enumeration as JSON.
    Designs(DesignsArgs),
    /// Turn a rows file into per-truth plot series.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub truths: Option<Vec<ModelKind>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DesignsArgs {
    /// TOML file with the space fields, at top level or under `[space]`.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub rows: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn exit_code(e: &ArenaError) -> i32 {
    match e {
        ArenaError::Config { .. } | ArenaError::Schema(_) | ArenaError::InvalidBudget | ArenaError::InvalidSpace(_) => 2,
        _ => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = thread_pool().and_then(|pool| {
        pool.install(|| match cli.command {
            Command::Run(a) => cmd_run(&a),
            Command::Study(a) => cmd_study(&a),
            Command::Designs(a) => cmd_designs(&a),
            Command::Report(a) => cmd_report(&a),
        })
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| ArenaError::Config {
            path: "<environment>".into(),
            field: THREADS_ENV.into(),
            reason: format!("{v:?} is not a non-negative integer"),
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ArenaError::Io(format!("thread pool: {e}")))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| ArenaError::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ArenaError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ArenaError::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path, cycles: Option<usize>) -> Result<FileConfig> {
    let mut cfg = FileConfig::load(path)?;
    if let Some(c) = cycles {
        cfg.cycles = c;
    }
    Ok(cfg)
}

/// One line per cycle plus the verdict.
pub fn cycle_summary(trace: &DebateTrace) -> String {
    let mut out = String::new();
    for c in &trace.cycles {
        let post: Vec<String> = c.posterior_after.0.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        let _ = writeln!(
            out,
            "cycle {}: pool {} selected {} (EIG {:.4} nats, {}) posterior {}",
            c.cycle,
            c.pool_size,
            c.selected.id,
            c.selected_eig.value,
            c.selected_eig.method,
            post.join(" ")
        );
    }
    let v = &trace.verdict;
    let _ = writeln!(
        out,
        "truth {} winner {} margin {:.4} recovered {} after {} cycle(s)",
        trace.truth, v.winner, v.margin, v.recovered, trace.cycles_executed
    );
    out
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.cycles)?;
    let seed = a.seed.unwrap_or(cfg.master_seed);
    let run = cfg
        .run_config_for(cfg.truth.theory, cfg.truth.epsilon, seed)
        .map_err(|e| e.at_path(&a.config.display().to_string()))?;
    let trace = run_adjudication(&run)?;
    write_json(&a.out.join("trace.json"), &trace)?;
    print!("{}", cycle_summary(&trace));
    Ok(())
}

pub fn trace_file_name(truth: &str, epsilon: f64, replication: usize) -> String {
    format!("{truth}_eps{epsilon}_rep{replication:03}.json")
}

fn cmd_study(a: &StudyArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.cycles)?;
    let mut study = cfg.study.clone();
    if let Some(t) = &a.truths {
        study.truths = t.clone();
    }
    if let Some(e) = &a.eps {
        study.epsilons = e.clone();
    }
    if let Some(r) = a.reps {
        study.replications = r;
    }
    let seed = a.seed.unwrap_or(cfg.master_seed);
    let result = run_recovery_study(&cfg, &study, seed).map_err(|e| e.at_path(&a.config.display().to_string()))?;
    write_rows(&a.out.join("recovery_rows.csv"), &result.table.rows)?;
    write_summary(&a.out.join("recovery_summary.csv"), &result.table.cells)?;
    for (row, trace) in result.table.rows.iter().zip(&result.traces) {
        if let Some(trace) = trace {
            let name = trace_file_name(&row.truth, row.epsilon, row.replication);
            write_json(&a.out.join("traces").join(name), trace)?;
        }
    }
    for c in &result.table.cells {
        println!(
            "{} eps={} runs={} recovery_rate={} mean_margin={:.4}",
            c.truth, c.epsilon, c.runs, c.recovery_rate, c.mean_margin
        );
    }
    let failed = result.table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see the error column of recovery_rows.csv");
    }
    Ok(())
}

fn load_space(path: &Path) -> Result<StimulusSpace> {
    let cfg_err = |field: &str, reason: String| ArenaError::Config {
        path: path.display().to_string(),
        field: field.into(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err("<file>", e.to_string()))?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err("<document>", e.to_string()))?;
    let value = match table.remove("space") {
        Some(v) => v,
        None => toml::Value::Table(table),
    };
    let space: StimulusSpace = value.try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        let field = msg.split('`').nth(1).unwrap_or("space").to_string();
        cfg_err(&field, msg)
    })?;
    space.validate().map_err(|e| e.at_path(&path.display().to_string()))?;
    Ok(space)
}

fn cmd_designs(a: &DesignsArgs) -> Result<()> {
    let space = match &a.space {
        Some(p) => load_space(p)?,
        None => StimulusSpace::default(),
    };
    let designs = enumerate_designs(&space, a.budget)?;
    println!("{}", serde_json::to_string_pretty(&designs).map_err(|e| ArenaError::Io(e.to_string()))?);
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let rows = read_rows(&a.rows).map_err(|e| match e {
        ArenaError::Io(m) => ArenaError::Schema(format!("cannot read rows file: {m}")),
        other => other,
    })?;
    for path in write_series(&a.out, &rows)? {
        println!("{}", path.display());
    }
    Ok(())
}
