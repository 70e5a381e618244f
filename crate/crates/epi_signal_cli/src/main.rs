use clap::{Parser, Subcommand};
use epi_signal::config::{expand_grid, parse_config, ScenarioConfig};
use epi_signal::equilibria::{equilibrium_report, RcMode};
use epi_signal::output::{plot_data, to_json, write_atomic, write_json, write_run, write_stress};
use epi_signal::signaling::type_distribution;
use epi_signal::simulation::{monte_carlo, stress_grid, with_threads, SummaryStats};
use epi_signal::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "epi-signal",
    version,
    about = "Epidemic signaling game simulator"
)]
struct Cli {
    /// Worker threads; defaults to EPI_SIGNAL_THREADS, then the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo runs of one scenario: weekly.csv and summary.json.
    Run {
        config: PathBuf,
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
    },
    /// The 24-cell factorial grid, one output set per cell.
    Grid {
        config: PathBuf,
        #[arg(short, long, default_value = "results/grid")]
        out: PathBuf,
    },
    /// Stress factors against the baseline for every equilibrium.
    Stress {
        config: PathBuf,
        #[arg(short, long, default_value = "results/stress")]
        out: PathBuf,
    },
    /// Existence window, verdict and mixing probability as JSON.
    Equilibrium {
        config: PathBuf,
        /// Also write the JSON to this file.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Long-format CSV of every weekly.csv mean/σ row below a results directory.
    PlotData {
        results: PathBuf,
        /// Defaults to `<results>/plot_data.csv`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    parse_config(&text)
}

fn simulate(cfg: &ScenarioConfig, threads: Option<usize>) -> Result<SummaryStats> {
    let s = with_threads(threads, || monte_carlo(cfg, &cfg.seeds()))??;
    if s.invalid_runs == s.runs.len() {
        return Err(Error::Diverged);
    }
    Ok(s)
}

fn scenario_name(cfg: &ScenarioConfig) -> String {
    format!(
        "{}/{}",
        cfg.simulation.equilibrium.name(),
        cfg.policy.kind.name()
    )
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let s = simulate(&cfg, cli.threads)?;
            write_run(&out, &scenario_name(&cfg), &s, cfg.simulation.t_weeks)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Grid { config, out } => {
            let base = load(&config)?;
            let mut index = Vec::new();
            for (name, cfg) in expand_grid(&base) {
                let s = simulate(&cfg, cli.threads)?;
                write_run(&out.join(&name), &name, &s, cfg.simulation.t_weeks)?;
                index.push(epi_signal::output::RunSummary::new(
                    &name,
                    &s,
                    cfg.simulation.t_weeks,
                ));
            }
            write_json(&out.join("grid.json"), &index)?;
            eprintln!("wrote {} cells to {}", index.len(), out.display());
        }
        Command::Stress { config, out } => {
            let cfg = load(&config)?;
            let report = with_threads(cli.threads, || stress_grid(&cfg))??;
            write_stress(&out, &report)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Equilibrium { config, out } => {
            let cfg = load(&config)?;
            let pi = type_distribution(cfg.behavior.psi_init, cfg.behavior.eta_init);
            let report = equilibrium_report(
                &cfg.epi_params(),
                &cfg.game_params(),
                &pi,
                RcMode::default(),
            );
            let json = to_json(&report)?;
            print!("{json}");
            if let Some(path) = out {
                write_atomic(&path, json.as_bytes())?;
            }
        }
        Command::PlotData { results, out } => {
            let bytes = plot_data(&results)?;
            let path = out.unwrap_or_else(|| results.join("plot_data.csv"));
            write_atomic(&path, &bytes)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
