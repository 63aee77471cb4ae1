//! Command-line interface for relaxed equalized-odds postprocessing:
//! fit solutions, apply and evaluate policies, sweep frontiers, unprocess
//! and select models. All randomness flows from `--seed`, so every command
//! is byte-for-byte reproducible.

mod output;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eqodds::analysis::{select_best, sweep, write_frontier_csv, SweepConfig};
use eqodds::data::{load_predictions, prevalences, DataFormat, LabeledPredictions, LossSpec};
use eqodds::fmt::format_sig12;
use eqodds::policy::{evaluate_policy, write_predictions_csv};
use eqodds::roc::RocHull;
use eqodds::solver::{group_geometry, solve_relaxed, unprocess, Alpha, RelaxedProblem};

use output::{
    eval_report_doc, policy_from_doc, selection_doc, solution_doc, ConfigEcho, EvalDoc, FitDoc,
    SelectDoc, SolutionFile, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(
    name = "eqodds",
    version,
    about = "Postprocess score classifiers to (relaxed) equalized odds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct CostArgs {
    /// Cost of a false positive
    #[arg(long, default_value_t = 1.0)]
    fp_cost: f64,
    /// Cost of a false negative
    #[arg(long, default_value_t = 1.0)]
    fn_cost: f64,
}

#[derive(Args)]
struct IoArgs {
    /// Predictions file with columns/keys score, label, group
    #[arg(long)]
    data: PathBuf,
    /// Input format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the relaxed program at a fixed slack and write a solution JSON
    Fit {
        #[command(flatten)]
        io: IoArgs,
        /// Gap slack in [0, 1]
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        costs: CostArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Apply a fitted solution to data and write a predictions CSV
    Predict {
        #[command(flatten)]
        io: IoArgs,
        /// Solution JSON produced by fit or unprocess
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Evaluate a fitted solution on data and write an evaluation JSON
    Eval {
        #[command(flatten)]
        io: IoArgs,
        /// Solution JSON produced by fit or unprocess
        #[arg(long)]
        solution: PathBuf,
        #[command(flatten)]
        costs: CostArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Trace the fairness-accuracy frontier over a slack grid
    Sweep {
        #[command(flatten)]
        io: IoArgs,
        /// Evaluation predictions file; defaults to the fit data
        #[arg(long)]
        eval_data: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        /// Upper end of the grid; defaults to the unprocessed violation
        #[arg(long)]
        alpha_max: Option<f64>,
        /// Bootstrap resamples per grid point; 0 disables intervals
        #[arg(long, default_value_t = 0)]
        bootstrap_n: usize,
        #[command(flatten)]
        costs: CostArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Remove the fairness constraint and write the implied unconstrained
    /// solution JSON
    Unprocess {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        costs: CostArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Unprocess candidate models on shared validation rows and pick the
    /// most accurate one
    Select {
        /// Candidate as id=path; repeat per model
        #[arg(long = "model", value_name = "ID=PATH", required = true)]
        models: Vec<String>,
        /// Input format; inferred from each file extension when omitted
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        costs: CostArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print the cost-calibrated decision threshold fp/(fp+fn)
    CalibratedThreshold {
        #[command(flatten)]
        costs: CostArgs,
    },
}

enum Failure {
    Usage(String),
    Module(eqodds::Error),
}

impl From<eqodds::Error> for Failure {
    fn from(e: eqodds::Error) -> Self {
        Failure::Module(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Module(e)) => {
            eprintln!("error: {e}");
            match e {
                eqodds::Error::Solver(_) => ExitCode::from(4),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Fit {
            io,
            alpha,
            costs,
            seed,
        } => {
            let alpha = Alpha::bounded(alpha).map_err(usage)?;
            let loss = costs.validated()?;
            let data = load_data(&io.data, io.format)?;
            let (hulls, prev) = fit_geometry(&data)?;
            let problem = RelaxedProblem::new(hulls.clone(), prev, loss, alpha)?;
            let solution = solve_relaxed(&problem)?;
            let doc = FitDoc {
                schema_version: SCHEMA_VERSION,
                config: ConfigEcho {
                    command: "fit".to_string(),
                    alpha: alpha.value(),
                    seed,
                    ..echo_io(&io, &costs)
                },
                solution: solution_doc(&solution, &hulls),
            };
            write_json(&doc, &io.out)
        }
        Command::Predict { io, solution, seed } => {
            let data = load_data(&io.data, io.format)?;
            let doc = load_solution(&solution)?;
            let policy = policy_from_doc(&doc.solution, seed)?;
            let mut out = open_out(&io.out)?;
            write_predictions_csv(&policy, data.rows(), &mut out)?;
            out.flush().map_err(io_failure)
        }
        Command::Eval {
            io,
            solution,
            costs,
            seed,
        } => {
            let loss = costs.validated()?;
            let data = load_data(&io.data, io.format)?;
            let doc = load_solution(&solution)?;
            let policy = policy_from_doc(&doc.solution, seed)?;
            let report = evaluate_policy(&policy, &data, &loss)?;
            let out_doc = EvalDoc {
                schema_version: SCHEMA_VERSION,
                config: ConfigEcho {
                    command: "eval".to_string(),
                    solution: Some(solution.display().to_string()),
                    seed,
                    ..echo_io(&io, &costs)
                },
                report: eval_report_doc(&report),
            };
            write_json(&out_doc, &io.out)
        }
        Command::Sweep {
            io,
            eval_data,
            grid_step,
            alpha_max,
            bootstrap_n,
            costs,
            seed,
        } => {
            if !(grid_step > 0.0 && grid_step <= 1.0) {
                return Err(Failure::Usage(format!(
                    "grid_step {grid_step} not in (0, 1]"
                )));
            }
            if let Some(a) = alpha_max {
                Alpha::bounded(a).map_err(usage)?;
            }
            let loss = costs.validated()?;
            let data_fit = load_data(&io.data, io.format)?;
            let data_eval = match &eval_data {
                Some(path) => load_data(path, io.format)?,
                None => data_fit.clone(),
            };
            let config = SweepConfig {
                grid_step,
                alpha_max,
                bootstrap_n,
                seed,
                ..SweepConfig::default()
            };
            let points = sweep(&data_fit, &data_eval, &loss, &config)?;
            let mut out = open_out(&io.out)?;
            write_frontier_csv(&points, &mut out)?;
            out.flush().map_err(io_failure)
        }
        Command::Unprocess { io, costs, seed } => {
            let loss = costs.validated()?;
            let data = load_data(&io.data, io.format)?;
            let (hulls, prev) = fit_geometry(&data)?;
            let solution = unprocess(&hulls, &prev, &loss)?;
            let doc = FitDoc {
                schema_version: SCHEMA_VERSION,
                config: ConfigEcho {
                    command: "unprocess".to_string(),
                    seed,
                    ..echo_io(&io, &costs)
                },
                solution: solution_doc(&solution, &hulls),
            };
            write_json(&doc, &io.out)
        }
        Command::Select {
            models,
            format,
            out,
            costs,
            seed,
        } => {
            let loss = costs.validated()?;
            let mut table = BTreeMap::new();
            for spec in &models {
                let (id, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Failure::Usage(format!("model spec `{spec}` is not id=path")))?;
                if id.is_empty() {
                    return Err(Failure::Usage(format!(
                        "model spec `{spec}` has an empty id"
                    )));
                }
                let data = load_data(Path::new(path), format)?;
                if table.insert(id.to_string(), data).is_some() {
                    return Err(Failure::Usage(format!("duplicate model id `{id}`")));
                }
            }
            let selection = select_best(&table, &loss)?;
            let doc = SelectDoc {
                schema_version: SCHEMA_VERSION,
                config: ConfigEcho {
                    command: "select".to_string(),
                    models: Some(models.clone()),
                    fp_cost: costs.fp_cost,
                    fn_cost: costs.fn_cost,
                    seed,
                    output: out.as_ref().map(|p| p.display().to_string()),
                    format: format_name(format),
                    data: None,
                    eval_data: None,
                    solution: None,
                    alpha: None,
                    grid_step: None,
                    alpha_max: None,
                    bootstrap_n: None,
                },
                selection: selection_doc(&selection),
            };
            write_json(&doc, &out)
        }
        Command::CalibratedThreshold { costs } => {
            let loss = costs.validated()?;
            println!("{}", format_sig12(loss.calibrated_threshold()));
            Ok(())
        }
    }
}

impl CostArgs {
    fn validated(&self) -> Result<LossSpec, Failure> {
        LossSpec::new(self.fp_cost, self.fn_cost).map_err(usage)
    }
}

fn usage(e: eqodds::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Module(eqodds::Error::Io(e))
}

fn format_name(format: Option<FormatArg>) -> String {
    match format {
        Some(FormatArg::Csv) => "csv".to_string(),
        Some(FormatArg::Json) => "json".to_string(),
        None => "auto".to_string(),
    }
}

/// Baseline config echo for commands with a primary data input; callers
/// override command-specific fields with struct update syntax.
fn echo_io(io: &IoArgs, costs: &CostArgs) -> ConfigEcho {
    ConfigEcho {
        command: String::new(),
        data: Some(io.data.display().to_string()),
        eval_data: None,
        solution: None,
        models: None,
        alpha: None,
        fp_cost: costs.fp_cost,
        fn_cost: costs.fn_cost,
        grid_step: None,
        alpha_max: None,
        bootstrap_n: None,
        seed: 42,
        output: io.out.as_ref().map(|p| p.display().to_string()),
        format: format_name(io.format),
    }
}

fn resolve_format(path: &Path, format: Option<FormatArg>) -> DataFormat {
    match format {
        Some(FormatArg::Csv) => DataFormat::Csv,
        Some(FormatArg::Json) => DataFormat::Json,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => DataFormat::Json,
            _ => DataFormat::Csv,
        },
    }
}

fn load_data(path: &Path, format: Option<FormatArg>) -> Result<LabeledPredictions, Failure> {
    let file = File::open(path).map_err(|e| with_path(path, e))?;
    load_predictions(BufReader::new(file), resolve_format(path, format)).map_err(Failure::Module)
}

fn load_solution(path: &Path) -> Result<SolutionFile, Failure> {
    let file = File::open(path).map_err(|e| with_path(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        Failure::Module(eqodds::Error::Parse {
            line: e.line(),
            reason: format!("{}: {e}", path.display()),
        })
    })
}

fn with_path(path: &Path, e: std::io::Error) -> Failure {
    Failure::Module(eqodds::Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    )))
}

fn fit_geometry(data: &LabeledPredictions) -> Result<(Vec<RocHull>, eqodds::Prevalences), Failure> {
    let prev = prevalences(data)?;
    let hulls = group_geometry(data, false)?
        .into_iter()
        .map(|(_, hull)| hull)
        .collect();
    Ok((hulls, prev))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| with_path(p, e))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn write_json<T: Serialize>(doc: &T, out: &Option<PathBuf>) -> Result<(), Failure> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, doc)
        .map_err(|e| Failure::Module(eqodds::Error::Io(std::io::Error::other(e))))?;
    writeln!(w).map_err(io_failure)?;
    w.flush().map_err(io_failure)
}
