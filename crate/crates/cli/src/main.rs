use std::path::PathBuf;
use std::process::ExitCode;

use bliss_cli::commands::{
    cmd_benchmark, cmd_gen_maps, cmd_plan, cmd_sweep, cmd_validate, print_plan_summary, GenMapsArgs, PlanArgs,
    RunOverrides,
};
use bliss_cli::maps::MapFamily;
use bliss_cli::CliError;
use bliss_tamp::planners::PlannerKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bliss", version, about = "Plan blind moves and localization scans under a collision risk budget")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Rollouts per planner and map.
    #[arg(long)]
    runs: Option<usize>,
    /// First rollout seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver time limit per planning call, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl From<Overrides> for RunOverrides {
    fn from(o: Overrides) -> Self {
        RunOverrides { runs: o.runs, seed: o.seed, out: o.out, time_limit: o.time_limit }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan once and write the plan as JSON.
    Plan {
        #[arg(long, default_value = "milp")]
        planner: PlannerKind,
        /// Bundled family (standard, entrapped, narrow) or map file.
        #[arg(long)]
        map: String,
        /// Experiment config supplying the settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Render the plan to this SVG file.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the encoded model in LP format before solving.
        #[arg(long)]
        export_milp: Option<PathBuf>,
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Monte Carlo per planner and map; writes metrics.csv and summary.json.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Repeat the benchmark over the config's delta_sweep; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write bundled maps or a family of random maps.
    GenMaps {
        #[arg(long)]
        family: MapFamily,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = "maps")]
        out: PathBuf,
    },
    /// Parse and round-trip maps, configs, plans, traces and CSV files.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan { planner, map, config, out, svg, export_milp, time_limit } => {
            let file = cmd_plan(&PlanArgs { planner: Some(planner), map, config, out: out.clone(), svg, export_milp, time_limit })?;
            if out.is_none() {
                print!("{}", file.to_json());
            } else {
                print_plan_summary(&file);
            }
        }
        Command::Benchmark { config, overrides } => {
            let report = cmd_benchmark(&config, &overrides.into())?;
            println!("wrote {} and {}", report.csv_path.display(), report.summary_path.display());
        }
        Command::Sweep { config, overrides } => {
            let report = cmd_sweep(&config, &overrides.into())?;
            println!("wrote {} ({} rows)", report.csv_path.display(), report.rows.len());
        }
        Command::GenMaps { family, seed, count, out } => {
            for p in cmd_gen_maps(&GenMapsArgs { family, seed, count, out })? {
                println!("{}", p.display());
            }
        }
        Command::Validate { files } => {
            for f in files {
                let kind = cmd_validate(&f)?;
                println!("{}: ok ({kind:?})", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bliss: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
