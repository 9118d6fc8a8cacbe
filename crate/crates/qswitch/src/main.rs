use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qswitch::commands::{self, SimulateOptions};
use qswitch::Error;
use serde_json::Value;

/// Quantized output-feedback stabilization of switched linear systems.
///
/// Exit status: 0 ok, 1 bad input or io, 2 infeasible design,
/// 3 divergence, 4 monitor failure.
#[derive(Parser, Debug)]
#[command(name = "qswitch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the design certificate for a scenario
    Certificate { file: PathBuf },
    /// Simulate one or more scenarios and write CSV trajectories
    Simulate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Trajectory CSV; a directory when several files are given
        #[arg(long)]
        out: Option<PathBuf>,
        /// Check the invariant monitors and fail with status 4 if any trips
        #[arg(long)]
        monitor: bool,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Worker threads for batch runs
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare design constants with the published values and, if the
    /// design is feasible, write the trajectory series
    ReproducePaper {
        #[arg(long, default_value = "reproduce")]
        outdir: PathBuf,
        /// Use this scenario instead of the bundled published one
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Draw a switching signal that respects the scenario's dwell bound
    GenSignal {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
    },
}

fn print(v: &Value) {
    use std::io::Write;
    // a closed pipe downstream is not our failure
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

/// Prints the summary, reports `err` on stderr and picks the exit code.
fn finish(summary: Option<Value>, err: Option<Error>) -> ExitCode {
    match (summary, &err) {
        (Some(v), _) => print(&v),
        (None, Some(e)) => print(&e.to_json()),
        (None, None) => {}
    }
    match err {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Certificate { file } => match commands::certificate(&file) {
            Ok((v, violation)) => finish(Some(v), violation),
            Err(e) => finish(None, Some(e)),
        },
        Command::Simulate { files, out, monitor, h, horizon, jobs } => {
            let opts = SimulateOptions { out, monitor, h, horizon };
            if files.len() == 1 {
                return match commands::simulate_file(&files[0], &opts) {
                    Ok(v) => finish(Some(v), None),
                    Err(e) => finish(None, Some(e)),
                };
            }
            if let Some(dir) = &opts.out {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    return finish(None, Some(Error::Io(format!("{}: {e}", dir.display()))));
                }
            }
            let results = commands::simulate_batch(&files, &opts, jobs);
            let mut worst: Option<Error> = None;
            let mut items = Vec::new();
            for (path, r) in files.iter().zip(results) {
                let mut v = match r {
                    Ok(v) => v,
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        let v = e.to_json();
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                        v
                    }
                };
                v["scenario"] = Value::String(path.display().to_string());
                items.push(v);
            }
            print(&Value::Array(items));
            match worst {
                Some(e) => ExitCode::from(e.exit_code() as u8),
                None => ExitCode::SUCCESS,
            }
        }
        Command::ReproducePaper { outdir, scenario } => {
            match commands::reproduce(scenario.as_deref(), &outdir) {
                Ok((v, failure)) => finish(Some(v), failure),
                Err(e) => finish(None, Some(e)),
            }
        }
        Command::GenSignal { file, seed } => match commands::gen_signal(&file, seed) {
            Ok(v) => finish(Some(v), None),
            Err(e) => finish(None, Some(e)),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QSWITCH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors share status 1 with other bad input; 2 means infeasible
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    run(cli)
}
