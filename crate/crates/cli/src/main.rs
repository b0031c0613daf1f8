//! `aniso`: solve, estimate and adapt the manufactured test problems.
//!
//! Exit codes: 0 on success, 1 on a configuration error, 2 when a run fails.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "aniso", version, about = "Anisotropic mesh adaptation for P1 finite elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve on a fixed mesh and report exact errors.
    Solve(Common),
    /// Solve and dump per-element estimator quantities.
    Estimate(Common),
    /// Run one adaptation method to stabilization.
    Adapt(Common),
    /// Run a comparison over methods and tolerance ladders.
    Study(StudyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML file of key = value settings.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set metric.intersection=false`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// u1 or u2.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// residual-element, residual-metric, hessian-metric or hierarchical.
    #[arg(long)]
    method: Option<String>,
    /// h1 or l2-hybrid.
    #[arg(long)]
    norm: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "e-d")]
    e_d: Option<f64>,
    /// zhang-naga or zz.
    #[arg(long)]
    recovery: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "subdivision-eps")]
    subdivision_eps: Option<f64>,
    /// Output directory.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Initial mesh file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Cells per side of the generated uniform initial mesh.
    #[arg(long)]
    uniform: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Include wall-clock columns in CSV outputs.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug, Clone)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated methods (default: all).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Comma-separated tolerance ladder.
    #[arg(long, value_delimiter = ',')]
    tols: Vec<f64>,
    /// Comma-separated ladder for the Hessian metric method.
    #[arg(long = "e-ds", value_delimiter = ',')]
    e_ds: Vec<f64>,
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

impl Common {
    /// Flags as overrides, applied after `--set`.
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push(format!("{k}={v}"));
            }
        };
        push("case", self.case.as_deref().map(quoted));
        push("alpha", self.alpha.map(|x| format!("{x:e}")));
        push("method", self.method.as_deref().map(quoted));
        push("norm", self.norm.as_deref().map(quoted));
        push("tol", self.tol.map(|x| format!("{x:e}")));
        push("e_d", self.e_d.map(|x| format!("{x:e}")));
        push("recovery", self.recovery.as_deref().map(quoted));
        push("max_iters", self.max_iters.map(|x| x.to_string()));
        push("subdivision_eps", self.subdivision_eps.map(|x| format!("{x:e}")));
        push("output", self.output.as_ref().map(|p| quoted(&p.to_string_lossy())));
        push("mesh", self.mesh.as_ref().map(|p| quoted(&p.to_string_lossy())));
        push("uniform", self.uniform.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        if self.timings {
            o.push("timings=true".into());
        }
        o
    }

    fn load(&self, extra: Vec<String>) -> Result<RunConfig, ConfigError> {
        let mut o = self.overrides();
        o.extend(extra);
        RunConfig::load(self.config.as_deref(), &o)
    }
}

fn float_list(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", "))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (name, loaded) = match &cli.command {
        Command::Solve(c) => ("solve", c.load(Vec::new())),
        Command::Estimate(c) => ("estimate", c.load(Vec::new())),
        Command::Adapt(c) => ("adapt", c.load(Vec::new())),
        Command::Study(s) => {
            let mut extra = Vec::new();
            if !s.methods.is_empty() {
                let list: Vec<String> = s.methods.iter().map(|m| quoted(m)).collect();
                extra.push(format!("study.methods=[{}]", list.join(", ")));
            }
            if !s.tols.is_empty() {
                extra.push(format!("study.tols={}", float_list(&s.tols)));
            }
            if !s.e_ds.is_empty() {
                extra.push(format!("study.e_ds={}", float_list(&s.e_ds)));
            }
            ("study", s.common.load(extra))
        }
    };
    let cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match commands::run(name, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
