use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use roadgame_cli::analysis::{analyze, render_text, AnalysisOptions};
use roadgame_cli::input::{fixture_to_file, parse_instance};
use roadgame_cli::sweep::{sweep, to_csv};
use roadgame_cli::verify::{run_rendered, VerifyOptions};
use roadgame_core::fixtures;

const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILURES: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "roadgame",
    about = "Two-class routing games with affine costs: equilibria, optima, price of anarchy, and asymmetry bounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Random seed for multistart solvers and randomized checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid resolution per dimension for the exhaustive optimum
    #[arg(long, default_value_t = 200)]
    grid_steps: usize,
    /// Variational-inequality residual tolerance
    #[arg(long, default_value_t = 1e-8)]
    vi_tol: f64,
}

impl CommonOpts {
    fn analysis(&self) -> AnalysisOptions {
        AnalysisOptions {
            seed: self.seed,
            grid_steps: self.grid_steps,
            vi_tol: self.vi_tol,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a JSON instance: equilibria, optimum, ratios, bounds
    Analyze {
        /// Path to the instance file
        input: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Also write the full report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sweep a fixture family over its parameter and emit CSV
    Sweep {
        /// Fixture name (example1, example2, example3, mu-coupled)
        fixture: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        end: f64,
        #[arg(long)]
        step: f64,
        /// Output CSV path (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the built-in verification suite
    Verify {
        /// Only run checks whose group matches this name
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Write a built-in fixture as a JSON instance file
    Fixture {
        /// Fixture name (example1, example2, example3, pigou-footnote, mu-coupled)
        name: String,
        /// Family parameter (zeta, k or mu depending on the fixture)
        #[arg(long)]
        param: Option<f64>,
        /// Output path
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze { input, common, json } => cmd_analyze(&input, &common, json.as_deref()),
        Command::Sweep { fixture, start, end, step, output, common } => {
            cmd_sweep(&fixture, start, end, step, output.as_deref(), &common)
        }
        Command::Verify { filter, common } => cmd_verify(filter, &common),
        Command::Fixture { name, param, output } => cmd_fixture(&name, param, &output),
    };
    ExitCode::from(code)
}

fn cmd_analyze(input: &std::path::Path, common: &CommonOpts, json: Option<&std::path::Path>) -> u8 {
    let text = match fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return EXIT_VALIDATION;
        }
    };
    let instance = match parse_instance(&text) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let report = match analyze(&instance, &common.analysis()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    print!("{}", render_text(&report));
    if let Some(path) = json {
        let serialized = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = fs::write(path, serialized) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_VALIDATION;
        }
    }
    if !report.converged {
        eprintln!("error: solver did not reach the residual tolerance");
        return EXIT_NO_CONVERGENCE;
    }
    EXIT_OK
}

fn cmd_sweep(
    fixture: &str,
    start: f64,
    end: f64,
    step: f64,
    output: Option<&std::path::Path>,
    common: &CommonOpts,
) -> u8 {
    match sweep(fixture, start, end, step, &common.analysis()) {
        Ok(rows) => {
            let csv = to_csv(&rows);
            match output {
                Some(path) => {
                    if let Err(e) = fs::write(path, csv) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return EXIT_VALIDATION;
                    }
                }
                None => print!("{csv}"),
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

fn cmd_verify(filter: Option<String>, common: &CommonOpts) -> u8 {
    let (all_passed, lines) = run_rendered(&VerifyOptions { seed: common.seed, filter });
    for line in &lines {
        println!("{line}");
    }
    let passed = lines.iter().filter(|l| l.starts_with("[PASS]")).count();
    println!("{passed}/{} checks passed", lines.len());
    if all_passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILURES
    }
}

fn cmd_fixture(name: &str, param: Option<f64>, output: &std::path::Path) -> u8 {
    match fixtures::by_name(name, param) {
        Ok(fixture) => {
            let file = fixture_to_file(&fixture);
            let serialized = serde_json::to_string_pretty(&file).expect("fixture serializes");
            if let Err(e) = fs::write(output, serialized) {
                eprintln!("error: cannot write {}: {e}", output.display());
                return EXIT_VALIDATION;
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}
