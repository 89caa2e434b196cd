use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use manipctl::cli::{self, CliError, Figure, Overrides, EXIT_OK};
use manipctl::verify::VerifyConfig;

#[derive(Parser)]
#[command(
    name = "manipctl",
    version,
    about = "Manipulator inverse-dynamics control experiments"
)]
struct Args {
    /// Directory for CSV outputs (overrides the scenario's [output] dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Integration step in seconds (overrides [sim] dt).
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Simulated duration in seconds (overrides [sim] duration).
    #[arg(long, global = true)]
    duration: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a preset: fig6, fig7, fig7-pd, fig8).
    Simulate { scenario: String },
    /// Closed-loop stability and final value for one joint's gains.
    Analyze {
        #[arg(allow_negative_numbers = true)]
        kd: f64,
        #[arg(allow_negative_numbers = true)]
        kp: f64,
        #[arg(allow_negative_numbers = true)]
        ki: f64,
    },
    /// Regenerate the series behind fig6, fig7, fig8 or fig9.
    Reproduce { figure: String },
    /// Run the dynamics, control, integrator and analysis self-checks.
    Verify,
}

fn run(args: Args) -> Result<(), CliError> {
    let overrides = Overrides {
        out_dir: args.out_dir,
        dt: args.dt,
        duration: args.duration,
    };
    match args.command {
        Command::Simulate { scenario } => {
            let scenario = cli::resolve_scenario(&scenario)?;
            let (report, _) = cli::run_scenario(&scenario, &overrides)?;
            println!("{report}");
        }
        Command::Analyze { kd, kp, ki } => {
            let report = cli::analyze_gains(kd, kp, ki)?;
            println!("{report}");
            if let Some(dir) = &overrides.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
                    path: dir.clone(),
                    message: e.to_string(),
                })?;
                let path = dir.join("analysis.csv");
                report.write_csv(&path)?;
                println!("wrote           {}", path.display());
            }
        }
        Command::Reproduce { figure } => {
            let figure: Figure = figure.parse()?;
            print!("{}", cli::reproduce(figure, &overrides)?);
        }
        Command::Verify => {
            let (outcomes, status) = cli::verify_all(&VerifyConfig::default());
            for o in &outcomes {
                println!("{o}");
            }
            status?;
            println!("all {} checks passed", outcomes.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
