use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gradflow_cli::catalog::builtin_problems;
use gradflow_cli::config::{GridConfig, SchemeName};
use gradflow_cli::output::{convergence_table, emit_convergence, emit_outputs};
use gradflow_cli::{convergence_study, run, RunConfig};

#[derive(Parser)]
#[command(name = "solver", version, about = "Structure-preserving finite-volume solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write the energy, snapshot and limiter files.
    Run {
        #[command(flatten)]
        common: Common,
        /// Cells (1D) or cells per direction (2D).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Grid-refinement study against the exact solution.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated cell counts, coarse to fine.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
    },
    /// Print the built-in problems and their defaults.
    ListProblems,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[arg(long)]
    no_limiter: bool,
}

impl Common {
    fn load(&self) -> anyhow::Result<(RunConfig, PathBuf)> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(s) = self.scheme {
            config.scheme = Some(s);
        }
        if self.no_limiter {
            config.limiter = false;
        }
        let dir = self.output.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
        Ok((config, dir))
    }
}

fn prefix(config: &RunConfig, problem: &str) -> String {
    config.prefix.clone().unwrap_or_else(|| problem.to_string())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { common, n, t_end } => {
            let (mut config, dir) = common.load()?;
            if let Some(n) = n {
                let is_2d = gradflow_cli::catalog::resolve(&config)?.is_2d();
                config.grid = Some(if is_2d { GridConfig::square(n) } else { GridConfig::cells(n) });
            }
            if t_end.is_some() {
                config.t_end = t_end;
                config.snapshots = config
                    .snapshots
                    .map(|s| s.into_iter().filter(|&v| v <= t_end.unwrap()).collect());
            }
            config.validate()?;
            let art = run(&config).context("run failed")?;
            for w in &art.warnings {
                log::warn!("{w}");
            }
            let paths = emit_outputs(&art, &dir, &prefix(&config, &art.metadata.problem))?;
            let last = art.energy.last().expect("energy log has the initial row");
            let cells = art.coords.len();
            println!(
                "{}: {} steps of tau={:e} on {} cells, mass {:.16e} -> {:.16e}, energy {:.10e}",
                art.metadata.problem, art.metadata.steps, art.metadata.tau, cells, art.energy[0].mass, last.mass, last.energy
            );
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Converge { common, levels } => {
            let (config, dir) = common.load()?;
            let study = convergence_study(&config, &levels)?;
            print!("{}", convergence_table(&study));
            let prefix = prefix(&config, &study.metadata.problem);
            for p in emit_convergence(&study, &dir, &prefix)? {
                println!("wrote {}", p.display());
            }
        }
        Command::ListProblems => {
            for p in builtin_problems() {
                let d = &p.defaults;
                println!(
                    "{:<14} {}  [{} scheme, tau {}, t_end {}{}]",
                    p.id,
                    p.summary,
                    d.scheme,
                    d.tau,
                    d.t_end,
                    if p.has_exact() { ", exact solution" } else { "" }
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
