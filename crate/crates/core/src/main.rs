use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use projlab::cli::config::Sequence;
use projlab::cli::{self, DiagnoseOptions, PRESETS};
use projlab::error::Result;

#[derive(Parser)]
#[command(name = "projlab", version, about = "Alternating projections on nonconvex sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its trace and summary.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute diagnostics for a run directory.
    Diagnose {
        dir: PathBuf,
        #[arg(long)]
        angle: bool,
        #[arg(long)]
        rate: bool,
        /// Fit the rate on the A-sequence instead of B.
        #[arg(long)]
        rate_on_a: bool,
        #[arg(long)]
        rate_window: Option<usize>,
        /// Three-point estimate as `c,gamma`.
        #[arg(long, value_parser = pair)]
        three_point: Option<[f64; 2]>,
        #[arg(long)]
        four_point: Option<f64>,
        /// Hölder check as `c,sigma`.
        #[arg(long, value_parser = pair)]
        holder: Option<[f64; 2]>,
        #[arg(long)]
        tail_fraction: Option<f64>,
    },
    /// Reach of a set at a point along a direction.
    Reach {
        /// Set descriptor as inline JSON or a file path.
        #[arg(long)]
        set: String,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        direction: String,
        #[arg(long, default_value_t = 1e3)]
        r_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run named experiments.
    Preset {
        names: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// List the known presets.
        #[arg(long)]
        list: bool,
        /// Print the preset configs instead of running them.
        #[arg(long)]
        dump: bool,
    },
}

fn pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|_| "expected two comma-separated numbers".into())
}

/// Prints to stdout; a closed pipe (as in `projlab ... | head`) is not an
/// error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run { config, out } => Ok(cli::cmd_run(&config, out.as_deref())? as u8),
        Command::Diagnose {
            dir,
            angle,
            rate,
            rate_on_a,
            rate_window,
            three_point,
            four_point,
            holder,
            tail_fraction,
        } => {
            let any = angle
                || rate
                || rate_on_a
                || rate_window.is_some()
                || three_point.is_some()
                || four_point.is_some()
                || holder.is_some()
                || tail_fraction.is_some();
            let opts = any.then(|| {
                let d = DiagnoseOptions::default();
                DiagnoseOptions {
                    angle,
                    rate: rate || rate_on_a,
                    rate_sequence: if rate_on_a { Sequence::A } else { Sequence::B },
                    rate_window,
                    three_point,
                    four_point,
                    holder,
                    tail_fraction: tail_fraction.unwrap_or(d.tail_fraction),
                    ..d
                }
            });
            let report = cli::cmd_diagnose(&dir, opts)?;
            emit(&serde_json::to_string_pretty(&report)?)?;
            Ok(0)
        }
        Command::Reach {
            set,
            point,
            direction,
            r_max,
            tol,
        } => {
            let reach = cli::cmd_reach(&set, &point, &direction, r_max, tol)?;
            emit(&cli::format_reach(&reach))?;
            Ok(0)
        }
        Command::Preset {
            names,
            out,
            jobs,
            list,
            dump,
        } => {
            if list {
                for name in PRESETS {
                    emit(name)?;
                }
                return Ok(0);
            }
            let names = if names.is_empty() {
                PRESETS.iter().map(|s| s.to_string()).collect()
            } else {
                names
            };
            if dump {
                for name in &names {
                    emit(&serde_json::to_string_pretty(&cli::preset(name)?)?)?;
                }
                return Ok(0);
            }
            let mut code = 0;
            for (name, result) in cli::run_presets(&names, &out, jobs) {
                match result {
                    Ok(s) => {
                        emit(&format!(
                            "{name}: {} after {} blocks ({:.2}s)",
                            s.stop_reason.as_str(),
                            s.iterations,
                            s.wall_time_s
                        ))?;
                        code = code.max(cli::commands::exit_code(s.stop_reason) as u8);
                    }
                    Err(e) => {
                        eprintln!("{name}: error: {e}");
                        code = code.max(1);
                    }
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match execute(args.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
