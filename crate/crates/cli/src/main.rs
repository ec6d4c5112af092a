use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use sgsim_core::config::{parse_b0_list, parse_config, RunConfig};
use sgsim_core::params::{derive_scales, dimensionless_coeffs, preset, FieldConfig, Species};
use sgsim_core::runner::{run, sweep_b0, RunError};
use sgsim_core::verify::run_verification;

const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "sgsim", version, about = "Stern-Gerlach magnet simulations: Newtonian, quantum and event-by-event")]
struct Cli {
    /// Log level (error, warn, info, debug); RUST_LOG overrides it.
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        config: PathBuf,
        /// Overrides the `output` key.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a configuration once per B0 value and write a summary CSV.
    Sweep {
        config: PathBuf,
        /// Comma-separated field strengths in tesla, e.g. 1,0.1,0.01.
        #[arg(long)]
        b0: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the engines against analytic oracles.
    Verify,
    /// Print the species presets and their derived scales.
    Presets,
}

/// Reads and validates a configuration file; failures exit with the
/// configuration code.
fn load(path: &PathBuf, output: Option<PathBuf>) -> Result<RunConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        error!("{}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    let mut cfg = parse_config(&text).map_err(|e| fail(&e.into()))?;
    if let Some(dir) = output {
        cfg.output = dir;
    }
    Ok(cfg)
}

fn fail(e: &RunError) -> ExitCode {
    error!("{e}");
    ExitCode::from(e.exit_code() as u8)
}

fn cmd_run(config: PathBuf, output: Option<PathBuf>) -> ExitCode {
    let cfg = match load(&config, output) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match run(&cfg) {
        Ok(o) => {
            let (neg, pos) = o.side_weights;
            println!("classification: {}", o.report.shape);
            println!("side weights (vz<0, vz>0): {neg:.6} {pos:.6}");
            println!("radial peak: {:.4}", o.report.radial_peak);
            println!("wall time: {:.2} s", o.wall.as_secs_f64());
            println!("output: {}", cfg.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn cmd_sweep(config: PathBuf, b0: String, output: Option<PathBuf>) -> ExitCode {
    let cfg = match load(&config, output) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let values = match parse_b0_list(&b0) {
        Ok(v) => v,
        Err(e) => return fail(&e.into()),
    };
    match sweep_b0(&cfg, &values) {
        Ok(rows) => {
            for row in &rows {
                match &row.result {
                    Ok((rep, _)) => println!("B0 = {:<8} {}", row.b0, rep.shape),
                    Err(e) => println!("B0 = {:<8} failed: {e}", row.b0),
                }
            }
            println!("summary: {}", cfg.output.join(sgsim_core::runner::SWEEP_SUMMARY_FILE).display());
            if rows.iter().all(|r| r.result.is_ok()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => fail(&e),
    }
}

fn cmd_verify() -> ExitCode {
    let checks = run_verification();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

fn cmd_presets() -> ExitCode {
    let field = FieldConfig::standard(1.0).expect("standard field is valid");
    println!("magnet: B1 = {} T/m, entrance y = {} m, length {} m", field.b1, field.y_start, field.length());
    for sp in Species::ALL {
        let (p, beam) = preset(sp);
        let s = derive_scales(&p, &field, &beam).expect("presets are valid");
        let c = dimensionless_coeffs(&p, &field, s.t_star, s.v_star).expect("presets are valid");
        println!("{sp}: m = {:e} kg, gamma = {:e} 1/(T s), v_y = {} m/s", p.mass, p.gamma, beam.v_y);
        println!("  t* = {:.4e} s, v* = {:.4e} m/s, z* = {:.4e} m", s.t_star, s.v_star, s.z_star);
        println!("  a = {:.6}, b = {}, c = {:.6} * B0/T", c.a, c.b, c.c);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log)).init();
    match cli.command {
        Command::Run { config, output } => cmd_run(config, output),
        Command::Sweep { config, b0, output } => cmd_sweep(config, b0, output),
        Command::Verify => cmd_verify(),
        Command::Presets => cmd_presets(),
    }
}
