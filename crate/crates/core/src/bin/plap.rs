use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plap_lab::cli::{self, builtin_scenario, CliError, Outputs, ScenarioConfig};

#[derive(Parser)]
#[command(name = "plap", version, about = "Discrete generalized p-Laplacian energy lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single descent run; writes report.csv and solution.csv.
    Solve(Common),
    /// Multi-start run with clustering and cone classification.
    Experiment(Common),
    /// Energy along the q-power path between two fields; writes path.csv.
    Path {
        #[command(flatten)]
        common: Common,
        /// First endpoint: a field CSV or an expression such as `1`.
        #[arg(long)]
        u: Option<String>,
        /// Second endpoint.
        #[arg(long)]
        v: Option<String>,
    },
    /// First Dirichlet eigenvalue; writes eigen.csv.
    Eigen(Common),
    /// Structural audits of the configured model; writes audit.txt.
    Audit(Common),
    /// Lists the built-in scenarios.
    Scenarios,
}

#[derive(Args)]
struct Common {
    /// Scenario config file.
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario id, e.g. E1.
    #[arg(long, value_name = "ID")]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides solver.seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), _) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                ScenarioConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            (None, Some(id)) => {
                builtin_scenario(id).ok_or_else(|| CliError::Config(format!("unknown scenario '{id}'")))?
            }
            (None, None) => return Err(CliError::Config("pass --config PATH or --scenario ID".into())),
        };
        if let Some(s) = self.seed {
            cfg.solver.seed = s;
        }
        Ok(cfg)
    }

    fn finish(
        &self,
        cfg: &ScenarioConfig,
        outputs: &Outputs,
        summary: &str,
        status: Result<(), CliError>,
    ) -> Result<(), CliError> {
        let dir = cli::output_dir(cfg, self.out.as_deref());
        outputs.write_to(&dir)?;
        if !self.quiet {
            print!("{summary}");
            if !summary.ends_with('\n') {
                println!();
            }
            println!("wrote {}", dir.display());
        }
        status
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(c) => {
            let cfg = c.load()?;
            let o = cli::run_solve(&cfg)?;
            c.finish(&cfg, &o.outputs, &o.summary, o.status())
        }
        Command::Experiment(c) => {
            let cfg = c.load()?;
            let o = cli::run_experiment(&cfg)?;
            c.finish(&cfg, &o.outputs, &o.summary, o.status())
        }
        Command::Path { common, u, v } => {
            let cfg = common.load()?;
            let o = cli::run_path_check(&cfg, u.as_deref(), v.as_deref())?;
            common.finish(&cfg, &o.outputs, &o.summary, Ok(()))
        }
        Command::Eigen(c) => {
            let cfg = c.load()?;
            let o = cli::run_eigen(&cfg)?;
            c.finish(&cfg, &o.outputs, &o.summary, o.status())
        }
        Command::Audit(c) => {
            let cfg = c.load()?;
            let o = cli::run_audit(&cfg)?;
            c.finish(&cfg, &o.outputs, &o.summary, Ok(()))
        }
        Command::Scenarios => {
            for (id, _) in cli::BUILTIN_SCENARIOS {
                let cfg = builtin_scenario(id).expect("builtin");
                println!("{id}\t{}", cfg.description.unwrap_or_default());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
