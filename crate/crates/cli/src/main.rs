use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use poset_h2_core::io::{ConfigEcho, IoError, PlantFile, ResultFile};
use poset_h2_core::verify::{run_all, Tolerances, VerificationReport};
use poset_h2_core::{synthesize, FrequencyGrid, PlantData, SynthesisError, SynthesisOptions};

mod report;

const EXIT_INPUT: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(name = "poset-h2", version, about = "H2-optimal controllers for poset-causal systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the optimal controller and certify it.
    Synth {
        plant: String,
        #[arg(short, long)]
        out: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Re-run every check against a stored result.
    Verify {
        plant: String,
        result: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print a human-readable summary of a result file.
    Report { result: String },
}

#[derive(Args, Clone, Copy)]
struct Flags {
    /// Absolute tolerance for structural zeros in plant data.
    #[arg(long, default_value_t = 1e-9)]
    atol: f64,
    /// Number of frequency samples used by the transfer-function checks.
    #[arg(long, default_value_t = 20)]
    freq_samples: usize,
    /// Solve the per-element subproblems sequentially.
    #[arg(long)]
    no_parallel: bool,
    /// Required stability margin of the closed loop.
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
}

impl Flags {
    fn options(&self) -> SynthesisOptions {
        SynthesisOptions {
            atol: self.atol,
            parallel: !self.no_parallel,
            margin: self.margin,
            grid: FrequencyGrid::new(self.freq_samples),
        }
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { stability_margin: self.margin, ..Tolerances::default() }
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            atol: self.atol,
            freq_samples: self.freq_samples,
            parallel: !self.no_parallel,
            margin: self.margin,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = if e.is_validation() { EXIT_VALIDATION } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

impl From<SynthesisError> for Failure {
    fn from(e: SynthesisError) -> Self {
        IoError::Invalid(e).into()
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: EXIT_INPUT, message }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POSET_H2_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth { plant, out, flags } => cmd_synth(&plant, &out, flags),
        Command::Verify { plant, result, flags } => cmd_verify(&plant, &result, flags),
        Command::Report { result } => cmd_report(&result),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_plant(path: &str, atol: f64) -> Result<PlantData, Failure> {
    let plant = PlantFile::read(path)?.to_plant(atol)?;
    info!(
        "loaded {path}: {} elements, {} states, {} inputs",
        plant.poset().len(),
        plant.partition().n_states(),
        plant.partition().n_inputs()
    );
    Ok(plant)
}

fn verdict_outcome(report: &VerificationReport) -> Result<(), Failure> {
    let failed: Vec<&str> = report.failures().map(|v| v.check_name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERDICT,
            message: format!("failed checks: {}", failed.join(", ")),
        })
    }
}

fn cmd_synth(plant_path: &str, out_path: &str, flags: Flags) -> Result<(), Failure> {
    let plant = load_plant(plant_path, flags.atol)?;
    let opts = flags.options();
    let result = synthesize(&plant, &opts)?;
    debug!("assembled controller of degree {}", result.k_star.order());
    let report = run_all(&plant, &(&result).into(), &flags.tolerances(), &opts.grid);
    let file = ResultFile::new(&plant, &result, &report.verdicts, flags.echo());
    fs::write(out_path, file.to_json_string()).map_err(|e| input_error(format!("{out_path}: {e}")))?;
    println!(
        "controller degree {} (bound {}), {} of {} checks passed",
        file.degree,
        file.degree_bound,
        report.verdicts.iter().filter(|v| v.passed).count(),
        report.verdicts.len()
    );
    println!("{}", report::norm_line(&file.norms.into()));
    verdict_outcome(&report)
}

fn cmd_verify(plant_path: &str, result_path: &str, flags: Flags) -> Result<(), Failure> {
    let plant = load_plant(plant_path, flags.atol)?;
    let stored = ResultFile::read(result_path)?;
    let artifacts = stored.artifacts(&plant)?;
    let report = run_all(&plant, &artifacts, &flags.tolerances(), &FrequencyGrid::new(flags.freq_samples));
    print!("{}", report::verdict_table(report.verdicts.iter().map(Into::into)));
    verdict_outcome(&report)
}

fn cmd_report(result_path: &str) -> Result<(), Failure> {
    let stored = ResultFile::read(result_path)?;
    let text = report::render(&stored).map_err(|e| input_error(format!("{result_path}: {e}")))?;
    print!("{text}");
    Ok(())
}
