use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use safe_explore::harness::{run_eval, run_sweep, seed_range, EvalPlan, RunSummary, Sweep};
use safe_explore::policy::PolicySpec;
use safe_explore::protocol::{serve_stdio, Server};
use safe_explore::EnvConfig;

#[derive(Parser)]
#[command(name = "safe-explore", version, about = "Shielded exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a policy over a seed range.
    Eval {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a policy over map-size or tree-count variants.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Square map side lengths, e.g. 50,75,100.
        #[arg(long, value_delimiter = ',', conflicts_with = "trees", required_unless_present = "trees")]
        map_sizes: Vec<usize>,
        /// Trunk counts, e.g. 45,60,75.
        #[arg(long, value_delimiter = ',')]
        trees: Vec<usize>,
    },
    /// Serve the environment protocol over TCP or stdio.
    Serve {
        /// Environment config (TOML); nominal values when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 7878, conflicts_with = "stdio")]
        port: u16,
        /// Serve a single session on stdin/stdout.
        #[arg(long)]
        stdio: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Environment config (TOML); nominal values when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// random, frontier, frontier-euclid, or gnn:<weights.json>.
    #[arg(long, default_value = "frontier")]
    policy: PolicySpec,
    /// Number of seeds.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Per-episode step cap (the config's n_s_star still applies).
    #[arg(long, default_value_t = 2500)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn load_config(path: Option<&PathBuf>) -> Result<EnvConfig> {
    match path {
        Some(p) => EnvConfig::load(p).with_context(|| format!("config {}", p.display())),
        None => Ok(EnvConfig::default()),
    }
}

impl RunArgs {
    fn plan(&self) -> EvalPlan {
        EvalPlan {
            policy: self.policy.clone(),
            seeds: seed_range(self.seed_base, self.seeds),
            steps: self.steps,
            workers: self.workers,
        }
    }
}

fn report(s: &RunSummary) {
    let reach = s.steps_to_coverage(0.8).map_or("-".to_string(), |n| n.to_string());
    println!(
        "{}: episodes={} mean_final_coverage={:.4} median_intervention_rate={:.4} steps_to_80={reach}",
        s.label,
        s.seeds.len(),
        s.mean_final_coverage(),
        s.median_intervention_rate(),
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval { run } => {
            let config = load_config(run.config.as_ref())?;
            let summary = run_eval(&config, &run.plan(), Some(&run.out))?;
            report(&summary);
        }
        Command::Sweep { run, map_sizes, trees } => {
            let config = load_config(run.config.as_ref())?;
            let sweep = if map_sizes.is_empty() { Sweep::TreeCount(trees) } else { Sweep::MapSize(map_sizes) };
            for summary in run_sweep(&config, &sweep, &run.plan(), Some(&run.out))? {
                report(&summary);
            }
        }
        Command::Serve { config, host, port, stdio } => {
            let config = load_config(config.as_ref())?;
            config.validate()?;
            if stdio {
                serve_stdio(&config).context("stdio session")?;
            } else {
                let server = Server::bind((host.as_str(), port), config)
                    .with_context(|| format!("binding {host}:{port}"))?;
                eprintln!("listening on {}", server.local_addr()?);
                server.run()?;
                bail!("listener stopped");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
