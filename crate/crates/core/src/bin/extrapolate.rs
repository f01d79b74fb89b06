use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use extrap_core::harness::{
    load_results, read_curves, render_figure, render_table, render_table_csv, run_experiment, write_outputs,
    ExperimentConfig, FigureGroup, Mode, ModelKind,
};
use extrap_core::Error;

const USAGE_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "extrapolate", version, about = "Train/test extrapolation benchmark for regression models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study and write every artifact.
    Run(RunArgs),
    /// Re-render table.txt and table.csv from a saved results.json.
    Table(OutArgs),
    /// Re-render the SVG figures from saved results and curves.
    Plot(OutArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated model ids.
    #[arg(long, value_parser = parse_models)]
    models: Option<Roster>,
    #[arg(long, value_parser = ["tuned", "defaults"])]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    /// Directory holding results.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone)]
struct Roster(Vec<ModelKind>);

fn parse_models(s: &str) -> Result<Roster, String> {
    let ids: Vec<&str> = ModelKind::ALL.iter().map(|k| k.id()).collect();
    ModelKind::parse_list(s).map(Roster).map_err(|e| format!("{e} (known: {})", ids.join(", ")))
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownModel(_) | Error::InvalidArgument(_) | Error::Malformed(_) | Error::UnknownFunction(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
            other => other.into(),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(Roster(models)) = args.models {
        cfg.models = models;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode.parse::<Mode>()?;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    cfg.validate()?;

    let report = run_experiment(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_outputs(&report, &cfg.out_dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    if report.rows.is_empty() {
        eprintln!("no model finished; table.txt and table.csv not written");
    } else if let Ok(table) = render_table(&report.rows) {
        print!("{table}");
    }
    for t in &report.timings {
        eprintln!("{:<16} {:<8} {:>9.3}s", t.model.id(), t.phase, t.seconds);
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        let msg: Vec<String> = report.failures.iter().map(|f| format!("{}: {}", f.model, f.message)).collect();
        Err(Failure::Runtime(format!("{} model(s) failed\n  {}", msg.len(), msg.join("\n  "))))
    }
}

fn runtime<E: std::fmt::Display>(what: &Path) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", what.display()))
}

fn table(args: OutArgs) -> Result<(), Failure> {
    let saved = load_results(&args.out).map_err(runtime(&args.out))?;
    let text = render_table(&saved.rows).map_err(runtime(&args.out))?;
    let csv = render_table_csv(&saved.rows).map_err(runtime(&args.out))?;
    std::fs::write(args.out.join("table.txt"), &text).map_err(runtime(&args.out))?;
    std::fs::write(args.out.join("table.csv"), csv).map_err(runtime(&args.out))?;
    print!("{text}");
    Ok(())
}

fn plot(args: OutArgs) -> Result<(), Failure> {
    let saved = load_results(&args.out).map_err(runtime(&args.out))?;
    let curves_path = args.out.join(&saved.curves);
    let curves = read_curves(&curves_path).map_err(runtime(&curves_path))?;
    for (name, group) in [("figure_trees.svg", FigureGroup::Trees), ("figure_linear.svg", FigureGroup::Linear)] {
        let path = args.out.join(name);
        std::fs::write(&path, render_figure(&curves, saved.config.boundary, group)).map_err(runtime(&path))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Table(a) => table(a),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_ERROR)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(RUNTIME_ERROR)
        }
    }
}
