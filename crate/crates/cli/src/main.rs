//! `gtl`: typecheck, run, and benchmark gradually typed module programs.
//!
//! Exit codes: 0 success, 2 parse/type/link-static errors, 3 runtime errors
//! (including step-budget timeouts), 64 usage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use gtl_core::bench::{run_lattice, wall_clock_ms, CostWeights, LatticeError};
use gtl_core::runtime::{run_isolated, Mode, RunOptions, RuntimeError};
use gtl_core::syntax::{parse_program, Program};
use gtl_core::transient::instrument;
use gtl_core::types::{resolve_typedness, typecheck};

#[derive(Parser)]
#[command(name = "gtl", version, about = "Gradually typed language workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and typecheck a program without running it.
    Check {
        file: PathBuf,
        /// Typedness of the configurable modules: a bit string in module
        /// declaration order ('1' = typed), or `typed` / `untyped` for all.
        #[arg(long, default_value = "untyped")]
        config: String,
    },
    /// Evaluate a program under one interoperation semantics.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "untyped")]
        config: String,
        /// One of: erased, deep, shallow, sb.
        #[arg(long, default_value = "shallow")]
        mode: String,
        /// Print cost counters as `name=value` lines after the run.
        #[arg(long)]
        counters: bool,
        /// Print every injected check site (`kind loc shape`) before running.
        #[arg(long)]
        dump_checks: bool,
        /// On a failed check, print the witness, the site, and the filtered
        /// boundary list.
        #[arg(long)]
        dump_blame: bool,
        /// Weaken list checks to a head test and union checks to always-pass.
        #[arg(long)]
        lax_shapes: bool,
        /// Also execute checks introduced by loop expansion.
        #[arg(long)]
        check_desugared: bool,
        /// Seed the ownership map with every primitive at its declared type.
        #[arg(long)]
        init_trusted: bool,
        /// Abort with a timeout after this many evaluation steps.
        #[arg(long)]
        step_budget: Option<u64>,
        /// Repeat the evaluation nine times and report the mean wall-clock
        /// milliseconds of the final eight.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Run every typed/untyped configuration under all four semantics and
    /// print the per-configuration cost table as CSV.
    Lattice {
        file: PathBuf,
        /// Limit rows to one mode.
        #[arg(long)]
        mode: Option<String>,
        /// Print the overhead distribution (`mode,x,percent`) instead of the
        /// per-configuration table.
        #[arg(long)]
        cdf: bool,
        #[arg(long)]
        step_budget: Option<u64>,
        /// Also report the mean wall-clock milliseconds of eight lattice
        /// sweeps (after one warmup).
        #[arg(long)]
        wall_clock: bool,
    },
    /// Print the cost-of-blame summary row: worst shallow overhead, worst
    /// deep overhead, and blame-tracking overhead at the all-typed
    /// configuration.
    Report {
        file: PathBuf,
        #[arg(long)]
        step_budget: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

type Failure = (u8, String);

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Check { file, config } => {
            let p = load(&file)?;
            let bits = bits_for(&p, &config)?;
            let typed =
                resolve_typedness(&p, &bits).map_err(|e| (2, e.to_string()))?;
            typecheck(&p.desugar(), &typed).map_err(|e| (2, e.to_string()))?;
            println!("ok");
            Ok(())
        }
        Cmd::Run {
            file,
            config,
            mode,
            counters,
            dump_checks,
            dump_blame,
            lax_shapes,
            check_desugared,
            init_trusted,
            step_budget,
            wall_clock,
        } => {
            let p = load(&file)?;
            let bits = bits_for(&p, &config)?;
            let mode = parse_mode(&mode)?;
            let mut opts = RunOptions::new(mode);
            opts.lax_shapes = lax_shapes;
            opts.check_desugared = check_desugared;
            opts.init_trusted = init_trusted;
            opts.step_budget = step_budget;
            if dump_checks {
                print_check_sites(&p, &bits, &opts)?;
            }
            let outcome =
                run_isolated(&p, &bits, &opts).map_err(|e| (2, e.to_string()))?;
            for line in &outcome.printed {
                println!("{line}");
            }
            let status = match &outcome.result {
                Ok(v) => {
                    println!("{v}");
                    Ok(())
                }
                Err(e) => {
                    let mut msg = e.render();
                    if dump_blame {
                        if let RuntimeError::Shape { witness, blame: Some(b), .. } = e {
                            msg.push_str(&format!("\nwitness: {witness}"));
                            msg.push_str(&format!("\nsite: {}", b.site));
                            for line in &b.lines {
                                msg.push_str(&format!("\nboundary: {line}"));
                            }
                            msg.push_str(&format!("\nunfiltered: {}", b.unfiltered));
                        }
                    }
                    Err((3, msg))
                }
            };
            if counters {
                let c = &outcome.counters;
                println!("shape_checks={}", c.shape_checks);
                println!("flat_checks={}", c.flat_checks);
                println!("wrappers_allocated={}", c.wrappers_allocated);
                println!("wrapped_calls={}", c.wrapped_calls);
                println!("blame_ops={}", c.blame_ops);
                println!("steps={}", c.steps);
                println!("map_size={}", c.map_size);
            }
            if wall_clock {
                let ms = wall_clock_ms(|| {
                    let _ = run_isolated(&p, &bits, &opts);
                });
                println!("wall_clock_ms={ms:.3}");
            }
            status
        }
        Cmd::Lattice { file, mode, cdf, step_budget, wall_clock } => {
            let p = load(&file)?;
            let only = mode.as_deref().map(parse_mode).transpose()?;
            let report = run_lattice(&p, &CostWeights::default(), step_budget)
                .map_err(lattice_failure)?;
            if cdf {
                print!("{}", report.cdf_csv_for(only));
            } else {
                print!("{}", report.rows_csv_for(only));
            }
            if wall_clock {
                let ms = wall_clock_ms(|| {
                    let _ = run_lattice(&p, &CostWeights::default(), step_budget);
                });
                println!("wall_clock_ms={ms:.3}");
            }
            Ok(())
        }
        Cmd::Report { file, step_budget } => {
            let p = load(&file)?;
            let report = run_lattice(&p, &CostWeights::default(), step_budget)
                .map_err(lattice_failure)?;
            let name = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string());
            println!("fixture,worst_shallow,worst_deep,sb_at_fully_typed");
            println!("{name},{}", report.blame_cost_row());
            Ok(())
        }
    }
}

fn load(file: &PathBuf) -> Result<Program, Failure> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| (2, format!("{}: {e}", file.display())))?;
    parse_program(&text).map_err(|e| (2, e.to_string()))
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    // Flag-value misuse, independent of any program text: usage exit.
    Mode::parse(s)
        .ok_or_else(|| (64, format!("unknown mode `{s}` (expected erased, deep, shallow, or sb)")))
}

fn bits_for(p: &Program, config: &str) -> Result<Vec<bool>, Failure> {
    let n = p.configurable_modules().len();
    match config {
        "typed" => Ok(vec![true; n]),
        "untyped" => Ok(vec![false; n]),
        s => s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err((
                    64,
                    format!("bad config `{s}`: expected a 0/1 string, `typed`, or `untyped`"),
                )),
            })
            .collect(),
    }
}

/// The checks a shallow-mode run would execute, one line per site.
fn print_check_sites(p: &Program, bits: &[bool], opts: &RunOptions) -> Result<(), Failure> {
    if !matches!(opts.mode, Mode::Shallow | Mode::ShallowBlame) {
        return Ok(());
    }
    let p = p.desugar();
    let typed = resolve_typedness(&p, bits).map_err(|e| (2, e.to_string()))?;
    let info = typecheck(&p, &typed).map_err(|e| (2, e.to_string()))?;
    match instrument(&p, &info, opts.check_desugared) {
        Ok(instr) => {
            for site in &instr.sites {
                println!("{}", site.render());
            }
            Ok(())
        }
        // Link-time rejections surface when the program runs; the dump just
        // has nothing to show.
        Err(_) => Ok(()),
    }
}

fn lattice_failure(e: LatticeError) -> Failure {
    (2, e.to_string())
}
