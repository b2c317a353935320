use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use peelplan::job::{self, JobConfig, PlanDocument, RunOptions, ValidateOptions};
use peelplan::motion::CheckMode;

#[derive(Parser)]
#[command(name = "peelplan", version, about = "Plan the removal of support structures from printed parts")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Voxel,
    Mesh,
}

#[derive(Subcommand)]
enum Command {
    /// Compute removal rounds, visiting orders and tool paths.
    Plan {
        config: PathBuf,
        /// Write overlap fields (VTK) and fiber anchors.
        #[arg(long)]
        debug_fields: bool,
        /// Solve small visiting orders exactly.
        #[arg(long)]
        exact_tsp: bool,
        /// Collision model used while planning paths.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Output directory (overrides the configuration).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check a plan against its scene.
    Validate {
        plan: PathBuf,
        config: PathBuf,
        /// Also check fracture configurations at half the voxel spacing.
        #[arg(long)]
        refine: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write a built-in test scene and its configuration.
    Fixture {
        /// One of: two-square, l-part, forest, internal-void, u-trap, bracket, column, bare.
        name: String,
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> peelplan::Result<()> {
    match command {
        Command::Plan { config, debug_fields, exact_tsp, mode, output } => {
            let mut cfg = JobConfig::load(&config)?;
            cfg.exact_tsp |= exact_tsp;
            if let Some(m) = mode {
                cfg.mode = match m {
                    Mode::Voxel => CheckMode::Voxel,
                    Mode::Mesh => CheckMode::Mesh,
                };
            }
            let dir = output.unwrap_or_else(|| cfg.output_path());
            let result = job::run(&cfg, &RunOptions { debug_fields })?;
            job::write_outputs(&result, &dir)?;
            let s = &result.summary;
            println!("verdict: {}", s.verdict);
            for (t, removed) in s.removed_per_round.iter().enumerate() {
                println!("round {t}: removed components {removed:?}");
            }
            println!("legs: {}, tour cost: {:.6}", s.legs, s.tour_cost);
            println!("wrote {}", dir.join("plan.json").display());
            Ok(())
        }
        Command::Validate { plan, config, refine, json } => {
            let doc = PlanDocument::from_json(&std::fs::read_to_string(&plan)?)?;
            let cfg = JobConfig::load(&config)?;
            let report = job::validate(&doc, &cfg, &ValidateOptions { refine })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for a in &report.assertions {
                    if a.passed {
                        println!("PASS {} {}", a.kind, a.subject);
                    } else {
                        println!("FAIL {} {}: {}", a.kind, a.subject, a.detail);
                    }
                }
                let failed = report.failures().count();
                println!("{} assertions, {failed} failed", report.assertions.len());
            }
            Ok(())
        }
        Command::Fixture { name, dir } => {
            let fx = peelplan::fixtures::by_name(&name).ok_or_else(|| {
                peelplan::Error::Config(format!(
                    "unknown fixture {name}; expected one of {}",
                    peelplan::fixtures::NAMES.join(", ")
                ))
            })?;
            let path = job::write_fixture(&fx, &dir)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
