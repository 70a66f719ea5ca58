//! Batch runner for the `hyperlab` experiments.
//!
//! Each run writes into `<out>/<kind>/`: CSV tables, a `<kind>.json` summary
//! and `manifest.json`. `report` collects those into `<out>/report.md` and
//! two-column plot data under `<out>/plots/`.

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{resolve, ExperimentConfig, Kind, Overrides};
use output::{json_bytes, sha256_hex, write_atomic, Diagnostic, Manifest, RunContext, Status, MANIFEST, SCHEMA};

#[derive(Debug, Parser)]
#[command(name = "hyperlab", version, about = "Weighted resolvent laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-section mode table.
    Spectrum(RunArgs),
    /// Conjugate-operator flow, unitarity and group law.
    Flow(RunArgs),
    /// Localized positive commutator check.
    Mourre(RunArgs),
    /// Limiting-absorption sweep over lambda and the scaling fit.
    Sweep(RunArgs),
    /// Seeded finite-dimensional suites.
    Testbed(RunArgs),
    /// Weight-class facts.
    Weights(RunArgs),
    /// Summarize a run directory.
    Report(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config; a run manifest is also accepted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a config value by dotted path, e.g. `sweep.k_max=40`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Exit with 3 when an acceptance criterion evaluated by the run fails.
    #[arg(long)]
    pub check: bool,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::Spectrum(a) => (Kind::Spectrum, a),
            Command::Flow(a) => (Kind::Flow, a),
            Command::Mourre(a) => (Kind::Mourre, a),
            Command::Sweep(a) => (Kind::Sweep, a),
            Command::Testbed(a) => (Kind::Testbed, a),
            Command::Weights(a) => (Kind::Weights, a),
            Command::Report(a) => (Kind::Report, a),
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::InvalidConfig.exit_code() } else { 0 };
        }
    };
    let (kind, a) = cli.command.split();
    let ov = Overrides { config: a.config, set: a.set, workers: a.workers, seed: a.seed, out: a.out };
    run(kind, &ov, a.check)
}

fn write_manifest(dir: &std::path::Path, manifest: &Manifest) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join(MANIFEST), &json_bytes(manifest))
}

/// Runs one experiment and returns its exit code:
/// 0 ok, 1 invalid config, 2 numerical or I/O failure, 3 failed check.
pub fn run(kind: Kind, ov: &Overrides, check: bool) -> i32 {
    run_to(kind, ov, check, &mut std::io::stdout())
}

/// [`run`] with the progress lines sent to `log` instead of stdout.
pub fn run_to(kind: Kind, ov: &Overrides, check: bool, log: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let cfg = match resolve(kind, ov) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            if kind != Kind::Report {
                let dir = ov.out.clone().unwrap_or_else(|| PathBuf::from("runs")).join(kind.name());
                let manifest = Manifest {
                    schema: SCHEMA,
                    tool: "hyperlab".into(),
                    version: env!("CARGO_PKG_VERSION").into(),
                    kind: kind.name().into(),
                    config_hash: None,
                    config: None,
                    status: Status::InvalidConfig,
                    exit_code: Status::InvalidConfig.exit_code(),
                    check,
                    wall_seconds: start.elapsed().as_secs_f64(),
                    tasks: Vec::new(),
                    outputs: Vec::new(),
                    diagnostics: vec![Diagnostic { code: Status::InvalidConfig, task: None, message: msg }],
                };
                if let Err(e) = write_manifest(&dir, &manifest) {
                    eprintln!("error: cannot write manifest: {e}");
                }
            }
            return Status::InvalidConfig.exit_code();
        }
    };
    if kind == Kind::Report {
        return match report::report(&cfg.out) {
            Ok(path) => {
                let _ = writeln!(log, "report written to {}", path.display());
                0
            }
            Err(msg) => {
                eprintln!("error: {msg}");
                Status::InvalidConfig.exit_code()
            }
        };
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return Status::NumericalFailure.exit_code();
        }
    };
    let mut ctx = RunContext::new(cfg.run_dir());
    let outcome = pool.install(|| execute(&cfg, &mut ctx));
    finish(&cfg, ctx, outcome, check, start, log)
}

fn execute(cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Value, Diagnostic> {
    match cfg.kind {
        Kind::Spectrum => experiments::spectrum(cfg, ctx),
        Kind::Flow => experiments::flow(cfg, ctx),
        Kind::Mourre => experiments::mourre(cfg, ctx),
        Kind::Sweep => experiments::sweep(cfg, ctx),
        Kind::Testbed => experiments::testbed(cfg, ctx),
        Kind::Weights => experiments::weights(cfg, ctx),
        Kind::Report => unreachable!("report is not an experiment"),
    }
}

fn finish(
    cfg: &ExperimentConfig,
    mut ctx: RunContext,
    outcome: Result<Value, Diagnostic>,
    check: bool,
    start: Instant,
    log: &mut dyn Write,
) -> i32 {
    let resolved = serde_json::to_value(cfg).expect("config serializes");
    let hash = sha256_hex(&serde_json::to_vec(&resolved).expect("config serializes"));
    match outcome {
        Ok(body) => {
            let mut summary = json!({ "schema": SCHEMA, "kind": cfg.kind.name(), "criteria": ctx.criteria });
            if let (Some(s), Value::Object(b)) = (summary.as_object_mut(), body) {
                s.extend(b);
            }
            let name = format!("{}.json", cfg.kind.name());
            if let Err(e) = ctx.write(&name, &json_bytes(&summary)) {
                ctx.diagnostics.push(Diagnostic { code: Status::IoError, task: None, message: e.to_string() });
            }
        }
        Err(d) => ctx.diagnostics.push(d),
    }
    let failed: Vec<String> =
        ctx.criteria.iter().filter(|c| !c.pass).map(|c| format!("criterion {} ({})", c.id, c.name)).collect();
    let mut status = ctx.diagnostics.first().map_or(Status::Ok, |d| d.code);
    if status == Status::Ok && check && !failed.is_empty() {
        status = Status::CheckFailed;
        ctx.diagnostics.push(Diagnostic {
            code: Status::CheckFailed,
            task: None,
            message: format!("failed: {}", failed.join(", ")),
        });
    }
    for c in &ctx.criteria {
        let _ = writeln!(log, "{} criterion {} ({}): {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
    }
    for d in &ctx.diagnostics {
        eprintln!("{:?}{}: {}", d.code, d.task.as_ref().map_or(String::new(), |t| format!(" [{t}]")), d.message);
    }
    let manifest = Manifest {
        schema: SCHEMA,
        tool: "hyperlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind.name().into(),
        config_hash: Some(hash),
        config: Some(resolved),
        status,
        exit_code: status.exit_code(),
        check,
        wall_seconds: start.elapsed().as_secs_f64(),
        tasks: ctx.tasks,
        outputs: ctx.outputs,
        diagnostics: ctx.diagnostics,
    };
    if let Err(e) = write_manifest(&ctx.dir, &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return Status::IoError.exit_code();
    }
    let _ = writeln!(log, "{} run written to {} ({:?})", cfg.kind.name(), ctx.dir.display(), status);
    status.exit_code()
}
