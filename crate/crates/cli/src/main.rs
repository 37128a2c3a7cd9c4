use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loop_index::cache::CACHE_ENV;
use loop_index::report::{exit_code_for, run_command, Command, RunConfig};
use loop_index::{Error, Result};

#[derive(Parser)]
#[command(name = "loop-index", version, about = "Fusion rings, super-Sugawara Dirac operators and index pairings for loop groups")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Root system data.
    Roots(Opts),
    /// Verlinde fusion ring.
    Fusion(Opts),
    /// Fusion ring together with the modular S-matrix.
    Smatrix(Opts),
    /// Truncated integrable highest-weight module.
    Module(Opts),
    /// Super-Virasoro and Dirac identities for one sector.
    SugawaraVerify(Opts),
    /// Dirac spectrum per energy block.
    Dirac(Opts),
    /// Fredholm index of the sector-i Dirac operator twisted by sector j.
    Index(Opts),
    /// Truncated JLO pairing.
    Jlo(Opts),
    /// Integer KK-model identities.
    KkVerify(Opts),
    /// Full verification pipeline.
    Report(Opts),
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algebra such as A1, B2, G2.
    #[arg(long)]
    algebra: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    /// Highest weight (Dynkin label) of the sector.
    #[arg(long, visible_alias = "i")]
    hw: Option<u32>,
    /// Second sector for `index` and `jlo`.
    #[arg(long)]
    j: Option<u32>,
    /// Maximal relative energy.
    #[arg(long)]
    cutoff: Option<u32>,
    /// Range of super-Virasoro modes checked.
    #[arg(long)]
    mode_range: Option<u32>,
    /// JLO truncation order (even).
    #[arg(long)]
    order: Option<u32>,
    /// JLO scale s in D -> sD.
    #[arg(long)]
    scale: Option<f64>,
    /// json, csv or md.
    #[arg(long)]
    format: Option<String>,
    /// Module cache directory (overrides the environment variable).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// double or high.
    #[arg(long)]
    precision: Option<String>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Which even lowest-energy fermion vector to use as the Ramond vacuum (0 or 1).
    #[arg(long)]
    vacuum_choice: Option<usize>,
    /// Extra fermion energy levels beyond the cutoff.
    #[arg(long)]
    headroom: Option<u32>,
    #[arg(long)]
    kk_samples: Option<usize>,
    #[arg(long)]
    kk_seed: Option<u64>,
    /// Include the S-matrix in fusion output.
    #[arg(long)]
    emit_s: bool,
    /// Additional `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write output to a file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Cmd {
    fn split(&self) -> (Command, &Opts) {
        match self {
            Cmd::Roots(o) => (Command::Roots, o),
            Cmd::Fusion(o) => (Command::Fusion, o),
            Cmd::Smatrix(o) => (Command::SMatrix, o),
            Cmd::Module(o) => (Command::Module, o),
            Cmd::SugawaraVerify(o) => (Command::SugawaraVerify, o),
            Cmd::Dirac(o) => (Command::Dirac, o),
            Cmd::Index(o) => (Command::Index, o),
            Cmd::Jlo(o) => (Command::Jlo, o),
            Cmd::KkVerify(o) => (Command::KkVerify, o),
            Cmd::Report(o) => (Command::Report, o),
        }
    }
}

/// Config file, then environment, then flags.
fn resolve(o: &Opts) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &o.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_config_str(&text)?;
    }
    if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()) {
        cfg.cache_dir = Some(PathBuf::from(dir));
    }
    let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
    set("algebra", o.algebra.clone())?;
    set("level", o.level.map(|x| x.to_string()))?;
    set("hw", o.hw.map(|x| x.to_string()))?;
    set("j", o.j.map(|x| x.to_string()))?;
    set("cutoff", o.cutoff.map(|x| x.to_string()))?;
    set("mode_range", o.mode_range.map(|x| x.to_string()))?;
    set("jlo_order", o.order.map(|x| x.to_string()))?;
    set("jlo_scale", o.scale.map(|x| x.to_string()))?;
    set("format", o.format.clone())?;
    set("cache_dir", o.cache_dir.as_ref().map(|p| p.display().to_string()))?;
    set("precision", o.precision.clone())?;
    set("threads", o.threads.map(|x| x.to_string()))?;
    set("vacuum_choice", o.vacuum_choice.map(|x| x.to_string()))?;
    set("headroom", o.headroom.map(|x| x.to_string()))?;
    set("kk_samples", o.kk_samples.map(|x| x.to_string()))?;
    set("kk_seed", o.kk_seed.map(|x| x.to_string()))?;
    if o.emit_s {
        cfg.emit_s = true;
    }
    for kv in &o.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn run(cmd: Command, o: &Opts) -> Result<i32> {
    let cfg = resolve(o)?;
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let report = run_command(cmd, &cfg)?;
    let text = report.render(cfg.format);
    match &o.output {
        Some(path) => fs::write(path, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    for c in report.failed_checks() {
        eprintln!("check failed: {} (value {}, required {})", c.name, c.value, c.requirement);
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, opts) = cli.command.split();
    let code = match run(cmd, opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}
