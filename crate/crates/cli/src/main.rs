//! `superdiff` — command-line front end for the superdiffusive tracer
//! laboratory.
//!
//! Subcommands: `sample-env` (draw one environment realization), `simulate`
//! (ensemble mean squared displacement), `bounds` (variational resolvent
//! bounds on a lambda sweep), `scaling` (Laplace transforms and exponent fits
//! of a measured series), `aw-check` (scaling-table consistency residual).
//!
//! Every knob can live in one TOML config file (`--config run.toml`, one
//! table per subcommand) and be overridden per-run by flags. Each run writes
//! a `<out>.manifest.json` echoing the resolved parameters, tool version and
//! seed; a run is reconstructible from its manifest alone, and identical
//! manifests produce bitwise-identical outputs. `SUPERDIFF_THREADS` caps the
//! worker pool. Exit codes: 0 ok, 2 usage, 3 numeric, 4 instability.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};
use commands::*;
use config::{need, parse_float_list, pick, FileConfig};
use error::{CliError, CliResult};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "superdiff",
    version,
    about = "Superdiffusive tracer laboratory: environment sampling, tracer ensembles, variational resolvent bounds, scaling checks"
)]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed for all stochastic subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw one environment realization and dump the grid as CSV.
    SampleEnv(SampleEnvArgs),
    /// Integrate an ensemble of tracers and write the MSD table.
    Simulate(SimulateArgs),
    /// Evaluate the variational resolvent bounds over a lambda sweep.
    Bounds(BoundsArgs),
    /// Laplace transforms and exponent fit of a measured MSD series.
    Scaling(ScalingArgs),
    /// Consistency residual of one scaling-table entry.
    AwCheck(AwCheckArgs),
}

#[derive(clap::Args)]
struct SampleEnvArgs {
    /// Environment model: gradient_gff, curl_gff or scalar_aniso.
    #[arg(long)]
    model: Option<String>,
    /// Period of the torus.
    #[arg(long = "box")]
    box_size: Option<f64>,
    /// Grid nodes per side.
    #[arg(long)]
    grid: Option<usize>,
    /// Gaussian mollifier width.
    #[arg(long)]
    sigma: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional compact binary dump path.
    #[arg(long)]
    binary: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Dynamics: srbp, srbp_aniso or dcgf.
    #[arg(long)]
    model: Option<String>,
    /// Euler-Maruyama step.
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of independent trajectories.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Period of the torus.
    #[arg(long = "box")]
    box_size: Option<f64>,
    /// Grid nodes per side (field and occupation grids).
    #[arg(long)]
    grid: Option<usize>,
    /// Gaussian mollifier width.
    #[arg(long)]
    sigma: Option<f64>,
    /// Spectral refresh cadence of the occupation drift, in steps.
    #[arg(long)]
    refresh: Option<usize>,
    /// Comma-separated output times; default is a log-spaced schedule.
    #[arg(long)]
    output_times: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BoundsArgs {
    /// Model: srbp, srbp_aniso or dcgf.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated resolvent parameters, e.g. 1e-2,1e-4.
    #[arg(long)]
    lambda_list: Option<String>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Radial cutoff of spectral integrals; default from the mollifier decay.
    #[arg(long)]
    pmax: Option<f64>,
    /// Gaussian mollifier width.
    #[arg(long)]
    sigma: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ScalingArgs {
    /// MSD CSV produced by `simulate`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated Laplace parameters.
    #[arg(long)]
    lambda_list: Option<String>,
    /// Fit the log-correction exponent.
    #[arg(long)]
    fit: bool,
    /// Also report the consistency residual for a table entry: D iso|aniso.
    #[arg(long = "aw-check", num_args = 2, value_names = ["D", "ISO"])]
    aw_check: Option<Vec<String>>,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AwCheckArgs {
    /// Dimension of the table entry.
    #[arg(long)]
    d: Option<u32>,
    /// Isotropic entry (default).
    #[arg(long, conflicts_with = "aniso")]
    iso: bool,
    /// Anisotropic entry (d = 2 only).
    #[arg(long)]
    aniso: bool,
    /// Lower end of the evaluation grid.
    #[arg(long)]
    t_min: Option<f64>,
    /// Upper end of the evaluation grid.
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid points.
    #[arg(long)]
    points: Option<usize>,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            eprintln!("superdiff: error[usage]: invalid command line");
            return 2;
        }
    };
    let run = configure_threads().and_then(|()| dispatch(cli));
    match run {
        Ok(()) => 0,
        Err(e) => {
            let one_line = e.message().replace('\n', "; ");
            eprintln!("superdiff: error[{}]: {}", e.class(), one_line);
            e.exit_code()
        }
    }
}

/// SUPERDIFF_THREADS caps the rayon pool (0 or unset: library default).
fn configure_threads() -> CliResult<()> {
    match std::env::var("SUPERDIFF_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| {
                CliError::usage(format!("SUPERDIFF_THREADS = `{raw}` is not a thread count"))
            })?;
            if n > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
            }
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, file.seed, 1);
    let out_dir = pick(cli.out_dir, file.out_dir.clone(), PathBuf::from("."));

    match cli.cmd {
        Cmd::SampleEnv(args) => {
            let f = file.sample_env;
            let params = SampleEnvParams {
                model: need(args.model, f.model, "model")?,
                box_size: pick(args.box_size, f.box_size, 64.0),
                grid: pick(args.grid, f.grid, 256),
                sigma: pick(args.sigma, f.sigma, 1.0),
                out: need(args.out, f.out, "out")?,
                binary: args.binary.or(f.binary),
            };
            run_sample_env(params, seed, &out_dir)
        }
        Cmd::Simulate(args) => {
            let f = file.simulate;
            let dt = pick(args.dt, f.dt, 0.01);
            let t_max = pick(args.t_max, f.t_max, 100.0);
            let output_times = match args.output_times {
                Some(text) => parse_float_list(&text)?,
                None => f
                    .output_times
                    .unwrap_or_else(|| superdiff_core::dynamics::default_output_times(t_max, dt)),
            };
            let params = SimulateParams {
                model: need(args.model, f.model, "model")?,
                dt,
                t_max,
                ensemble: pick(args.ensemble, f.ensemble, 100),
                box_size: pick(args.box_size, f.box_size, 64.0),
                grid: pick(args.grid, f.grid, 256),
                sigma: pick(args.sigma, f.sigma, 1.0),
                refresh: pick(args.refresh, f.refresh, 10),
                output_times,
                out: need(args.out, f.out, "out")?,
                wrap_fraction: None,
            };
            run_simulate(params, seed, &out_dir)
        }
        Cmd::Bounds(args) => {
            let f = file.bounds;
            let lambda_list = match args.lambda_list {
                Some(text) => parse_float_list(&text)?,
                None => need(None, f.lambda_list, "lambda_list")?,
            };
            let params = BoundsParams {
                model: need(args.model, f.model, "model")?,
                lambda_list,
                tol: pick(args.tol, f.tol, 1e-9),
                pmax: args.pmax.or(f.pmax),
                sigma: pick(args.sigma, f.sigma, 1.0),
                out: need(args.out, f.out, "out")?,
            };
            run_bounds(params, seed, &out_dir)
        }
        Cmd::Scaling(args) => {
            let f = file.scaling;
            let lambda_list = match args.lambda_list {
                Some(text) => parse_float_list(&text)?,
                None => f.lambda_list.unwrap_or_default(),
            };
            let aw = match args.aw_check {
                Some(pair) => Some(parse_aw_pair(&pair)?),
                None => match (f.aw_d, f.aw_iso) {
                    (Some(d), iso) => Some((d, iso.unwrap_or(true))),
                    (None, _) => None,
                },
            };
            let params = ScalingParams {
                input: need(args.input, f.input, "input")?,
                lambda_list,
                fit: args.fit || f.fit.unwrap_or(false),
                aw,
                out: need(args.out, f.out, "out")?,
            };
            run_scaling(params, seed, &out_dir)
        }
        Cmd::AwCheck(args) => {
            let f = file.aw_check;
            let iso = if args.iso {
                true
            } else if args.aniso {
                false
            } else {
                f.iso.unwrap_or(true)
            };
            let params = AwCheckParams {
                d: need(args.d, f.d, "d")?,
                iso,
                t_min: pick(args.t_min, f.t_min, 1e2),
                t_max: pick(args.t_max, f.t_max, 1e14),
                points: pick(args.points, f.points, 40),
                out: need(args.out, f.out, "out")?,
            };
            run_aw_check(params, seed, &out_dir)
        }
    }
}

fn parse_aw_pair(pair: &[String]) -> CliResult<(u32, bool)> {
    let d: u32 = pair[0]
        .parse()
        .map_err(|_| CliError::usage(format!("--aw-check: `{}` is not a dimension", pair[0])))?;
    let iso = match pair[1].as_str() {
        "iso" => true,
        "aniso" => false,
        other => {
            return Err(CliError::usage(format!(
                "--aw-check: expected `iso` or `aniso`, got `{other}`"
            )))
        }
    };
    Ok((d, iso))
}
