//! `eincausal`: JSON in, JSON or CSV out, for the causal geometry of domains
//! in the universal cover of Einstein universe.
//!
//! Exit codes: 0 pass or maximal, 2 fail or extendable, 3 full space,
//! 64 usage error, 1 output failure.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use input::{Failure, Session};

#[derive(Parser, Debug)]
#[command(name = "eincausal", version, about = "Causally convex domains of the universal cover of Einstein universe")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Grid: `circle:N`, `icosphere:K`, inline JSON or a JSON file. Checked
    /// against (or supplied to) the documents read.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Tolerance (meaning depends on the command).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for randomized checks.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the main artifact here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Write a JSON run report (inputs, verdicts, witnesses, timing) here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural invariants of a domain, and optionally a
    /// surface graph as a Cauchy hypersurface of it.
    Validate {
        domain: PathBuf,
        #[arg(long, value_enum, default_value_t = Lipschitz::AllPairs)]
        lipschitz: Lipschitz,
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Causal relation and Klein pairing of two points `{"p":…,"q":…}`.
    Classify { points: PathBuf },
    /// Dual of an achronal site set.
    Dual {
        #[arg(long = "achronal-set")]
        achronal_set: PathBuf,
        #[arg(long)]
        by_definition: bool,
        #[arg(long)]
        time_step: Option<f64>,
    },
    /// Shadow of a point on a surface graph.
    Shadow {
        /// Point JSON `{"x":[…],"t":…}`, inline or a file.
        #[arg(long)]
        point: String,
        #[arg(long)]
        surface: PathBuf,
        /// Second point: report whether the two shadows differ.
        #[arg(long)]
        other: Option<String>,
    },
    /// Cauchy development of a surface graph.
    CauchyDev { surface: PathBuf },
    /// Replace f± by the eikonal envelopes of the boundary trace.
    Maximalize { domain: PathBuf },
    /// Compare f± with the eikonal envelopes (tolerance `--tol`, default h).
    IsMaximal { domain: PathBuf },
    /// Geodesic certificates and the locality check for f±.
    Certify {
        domain: PathBuf,
        #[arg(long)]
        node: Option<usize>,
        #[arg(long, value_enum, default_value_t = SheetArg::Both)]
        sheet: SheetArg,
        /// Ball radius of the locality check (default 8h).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Brute-force oracles.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Enveloping spaces over immersed bases.
    #[command(subcommand)]
    Env(EnvCommand),
    /// CSV of f± and g± per node, for plotting.
    PlotData { domain: PathBuf },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Scan sampled diamonds of a domain (`--samples`, default 500).
    CausalConvexity { domain: PathBuf },
    /// Check a development against random causal curves (`--samples`
    /// probes, default 50).
    Development {
        surface: PathBuf,
        /// Claimed development; the computed one when omitted.
        #[arg(long)]
        claimed: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Subcommand, Debug)]
enum EnvCommand {
    /// Build one of the canonical bases.
    MakeBase {
        #[arg(long, value_enum)]
        kind: BaseKindArg,
        /// Removed node (sphere-minus-node).
        #[arg(long)]
        node: Option<usize>,
        /// Helix step.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        turns: Option<usize>,
    },
    /// Maximalize a domain over a base in the base path metric.
    Maximalize {
        #[arg(long)]
        base: PathBuf,
        domain: PathBuf,
    },
    /// Relation of two points `{"p":{"node":…,"t":…},"q":…}` of E, and of
    /// their developments.
    Classify {
        #[arg(long)]
        base: PathBuf,
        points: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Lipschitz {
    AllPairs,
    Edgewise,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum SheetArg {
    Upper,
    Lower,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum BaseKindArg {
    SphereMinusNode,
    FullSphere,
    Helix,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("EINCAUSAL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("EINCAUSAL_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("EINCAUSAL_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn dispatch(s: &mut Session, command: &Command) -> Result<commands::Outcome, Failure> {
    use commands as c;
    match command {
        Command::Validate { domain, lipschitz, surface } => c::validate(s, domain, *lipschitz, surface.as_deref()),
        Command::Classify { points } => c::classify(s, points),
        Command::Dual { achronal_set, by_definition, time_step } => {
            c::dual(s, achronal_set, *by_definition, *time_step)
        }
        Command::Shadow { point, surface, other } => c::shadow(s, point, surface, other.as_deref()),
        Command::CauchyDev { surface } => c::cauchy_dev(s, surface),
        Command::Maximalize { domain } => c::maximalize(s, domain),
        Command::IsMaximal { domain } => c::is_maximal(s, domain),
        Command::Certify { domain, node, sheet, radius } => c::certify(s, domain, *node, *sheet, *radius),
        Command::Oracle(OracleCommand::CausalConvexity { domain }) => c::oracle_convexity(s, domain),
        Command::Oracle(OracleCommand::Development { surface, claimed, trials }) => {
            c::oracle_development(s, surface, claimed.as_deref(), *trials)
        }
        Command::Env(EnvCommand::MakeBase { kind, node, h, turns }) => c::make_base(s, *kind, *node, *h, *turns),
        Command::Env(EnvCommand::Maximalize { base, domain }) => c::env_maximalize(s, base, domain),
        Command::Env(EnvCommand::Classify { base, points }) => c::env_classify(s, base, points),
        Command::PlotData { domain } => c::plot_data(s, domain),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Validate { .. } => "validate",
        Command::Classify { .. } => "classify",
        Command::Dual { .. } => "dual",
        Command::Shadow { .. } => "shadow",
        Command::CauchyDev { .. } => "cauchy-dev",
        Command::Maximalize { .. } => "maximalize",
        Command::IsMaximal { .. } => "is-maximal",
        Command::Certify { .. } => "certify",
        Command::Oracle(OracleCommand::CausalConvexity { .. }) => "oracle causal-convexity",
        Command::Oracle(OracleCommand::Development { .. }) => "oracle development",
        Command::Env(EnvCommand::MakeBase { .. }) => "env make-base",
        Command::Env(EnvCommand::Maximalize { .. }) => "env maximalize",
        Command::Env(EnvCommand::Classify { .. }) => "env classify",
        Command::PlotData { .. } => "plot-data",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(64);
    }
    let start = Instant::now();
    let mut session = Session::new(cli.global.clone());
    let result = dispatch(&mut session, &cli.command)
        .and_then(|outcome| session.finish(command_name(&cli.command), outcome, start.elapsed()));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
