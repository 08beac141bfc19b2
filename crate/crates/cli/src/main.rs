use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cranjoint::algorithms::AlgorithmOptions;
use cranjoint::experiments::{
    emit_records, parse_grid, parse_seeds, run_single, run_sweep, to_csv_string, to_json_string,
    Format, Method, SweepParam, SweepSpec,
};
use cranjoint::scenario::{load_config, Scenario};
use cranjoint::Error;

#[derive(Parser)]
#[command(
    name = "cranjoint",
    version,
    about = "Joint clone and C-RAN energy minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario with one method and seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `joint` or `separate:<alpha>`
        #[arg(long)]
        method: String,
        #[arg(long)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        /// Record wall time.
        #[arg(long)]
        timing: bool,
    },
    /// Sweep one parameter over a grid for several methods and seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// F, D, Tmax or N
        #[arg(long)]
        param: String,
        /// Comma separated, strictly increasing.
        #[arg(long)]
        grid: String,
        /// Comma separated methods.
        #[arg(long, default_value = "joint")]
        methods: String,
        /// `a..b` (inclusive) and/or comma list.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
        #[arg(long)]
        timing: bool,
    },
}

fn load(path: &Path) -> Result<(String, Scenario), Error> {
    let text = std::fs::read_to_string(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    Ok((id, load_config(&text)?))
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            method,
            seed,
            out,
            format,
            timing,
        } => {
            let (id, scenario) = load(&config)?;
            let method: Method = method.parse()?;
            let rec = run_single(
                &id,
                &scenario,
                method,
                seed,
                "none",
                0.0,
                &AlgorithmOptions::default(),
                timing,
            );
            let text = match format {
                OutFormat::Csv => to_csv_string(std::slice::from_ref(&rec))?,
                OutFormat::Json => to_json_string(std::slice::from_ref(&rec))? + "\n",
            };
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Sweep {
            config,
            param,
            grid,
            methods,
            seeds,
            out,
            workers,
            format,
            timing,
        } => {
            let (id, base) = load(&config)?;
            let spec = SweepSpec {
                scenario_id: id,
                base,
                param: param.parse::<SweepParam>()?,
                grid: parse_grid(&grid)?,
                methods: methods
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<Vec<Method>, Error>>()?,
                seeds: parse_seeds(&seeds)?,
                workers,
                timing,
                options: AlgorithmOptions::default(),
            };
            let records = run_sweep(&spec)?;
            let format = match format {
                None => Format::Both,
                Some(OutFormat::Csv) => Format::Csv,
                Some(OutFormat::Json) => Format::Json,
            };
            emit_records(&records, &out, format)?;
            let ok = records.iter().filter(|r| r.is_optimal()).count();
            eprintln!(
                "{} records ({} optimal) written to {}",
                records.len(),
                ok,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
