//! Execution of the five subcommands.
//!
//! Each function receives the fully resolved parameter struct produced by the
//! config/flag merge in `main`, runs the matching library operation, writes
//! the output files, and writes a JSON manifest next to the primary output.
//! All floats in CSV files are printed with 17 significant digits so that a
//! determinism check can compare files byte by byte. Sweeps fan out across
//! the rayon pool, but rows are collected and written in input order, so the
//! output never depends on scheduling.

use crate::config::{resolve_out, Manifest};
use crate::error::{CliError, CliResult};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use superdiff_core::covariance::CovarianceSpec;
use superdiff_core::dynamics::{run_ensemble, SimConfig, SimModel};
use superdiff_core::field::sample_field;
use superdiff_core::mollifier::Mollifier;
use superdiff_core::quad::log_space;
use superdiff_core::scaling::{aw_residual, fit_exponents, laplace_msd, MsdSeries, ScalingAnsatz};
use superdiff_core::variational::{
    functionals, lower_bound_aniso, lower_bound_dcgf, lower_bound_srbp, upper_bound, BoundQuery,
    RadialKernel, TestFunction,
};
use superdiff_core::EnvModel;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn open_out(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        CliError::io(format!("cannot write {}: {e}", path.display()))
    })?))
}

pub fn parse_env_model(name: &str) -> CliResult<EnvModel> {
    match name {
        "gradient_gff" => Ok(EnvModel::GradientGff),
        "curl_gff" => Ok(EnvModel::CurlGff),
        "scalar_aniso" => Ok(EnvModel::ScalarAniso),
        other => Err(CliError::usage(format!(
            "unknown environment model `{other}` (expected gradient_gff, curl_gff or scalar_aniso)"
        ))),
    }
}

pub fn parse_sim_model(name: &str) -> CliResult<SimModel> {
    match name {
        "srbp" => Ok(SimModel::Srbp),
        "srbp_aniso" => Ok(SimModel::SrbpAniso),
        "dcgf" => Ok(SimModel::Dcgf),
        other => Err(CliError::usage(format!(
            "unknown model `{other}` (expected srbp, srbp_aniso or dcgf)"
        ))),
    }
}

// ---------------------------------------------------------------- sample-env

#[derive(Debug, Serialize)]
pub struct SampleEnvParams {
    pub model: String,
    pub box_size: f64,
    pub grid: usize,
    pub sigma: f64,
    pub out: PathBuf,
    pub binary: Option<PathBuf>,
}

pub fn run_sample_env(params: SampleEnvParams, seed: u64, out_dir: &Path) -> CliResult<()> {
    let model = parse_env_model(&params.model)?;
    let moll = Mollifier::gaussian(params.sigma)?;
    let spec = CovarianceSpec::new(model, moll);
    let field = sample_field(&spec, params.box_size, params.grid, seed)?;

    let primary = resolve_out(out_dir, &params.out)?;
    let mut outputs = vec![params.out.display().to_string()];
    let mut w = open_out(&primary)?;
    field
        .write_csv(&mut w)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", primary.display())))?;
    w.flush().map_err(|e| CliError::io(e.to_string()))?;

    if let Some(bin) = &params.binary {
        let bin_path = resolve_out(out_dir, bin)?;
        let mut w = open_out(&bin_path)?;
        field
            .write_binary(&mut w)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", bin_path.display())))?;
        w.flush().map_err(|e| CliError::io(e.to_string()))?;
        outputs.push(bin.display().to_string());
    }

    let mut manifest = Manifest::new("sample-env", seed, params);
    manifest.outputs = outputs;
    manifest.write_next_to(&primary)?;
    Ok(())
}

// ------------------------------------------------------------------ simulate

#[derive(Debug, Serialize)]
pub struct SimulateParams {
    pub model: String,
    pub dt: f64,
    pub t_max: f64,
    pub ensemble: usize,
    pub box_size: f64,
    pub grid: usize,
    pub sigma: f64,
    pub refresh: usize,
    pub output_times: Vec<f64>,
    pub out: PathBuf,
    /// Filled after the run: fraction of members that left |X| < box/4.
    pub wrap_fraction: Option<f64>,
}

pub fn run_simulate(mut params: SimulateParams, seed: u64, out_dir: &Path) -> CliResult<()> {
    let model = parse_sim_model(&params.model)?;
    let cfg = SimConfig {
        model,
        mollifier: Mollifier::gaussian(params.sigma)?,
        box_size: params.box_size,
        grid_n: params.grid,
        dt: params.dt,
        t_max: params.t_max,
        output_times: params.output_times.clone(),
        seed,
        ensemble_size: params.ensemble,
        refresh_interval: params.refresh,
        field_enabled: true,
        repulsion_enabled: true,
    };
    let stats = run_ensemble(&cfg)?;
    params.wrap_fraction = Some(stats.wrap_fraction);

    let primary = resolve_out(out_dir, &params.out)?;
    let mut w = open_out(&primary)?;
    writeln!(w, "t,E_t,stderr,E1_t,E2_t").map_err(|e| CliError::io(e.to_string()))?;
    for (i, &t) in stats.times.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(t),
            fmt(stats.msd[i].mean),
            fmt(stats.msd[i].stderr),
            fmt(stats.msd1[i].mean),
            fmt(stats.msd2[i].mean)
        )
        .map_err(|e| CliError::io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))?;

    let name = params.out.display().to_string();
    let mut manifest = Manifest::new("simulate", seed, params);
    manifest.outputs = vec![name];
    manifest.write_next_to(&primary)?;
    Ok(())
}

// -------------------------------------------------------------------- bounds

#[derive(Debug, Serialize)]
pub struct BoundsParams {
    pub model: String,
    pub lambda_list: Vec<f64>,
    pub tol: f64,
    pub pmax: Option<f64>,
    pub sigma: f64,
    pub out: PathBuf,
}

struct BoundRow {
    lambda: f64,
    lower: f64,
    upper: f64,
    j1: f64,
    j2: f64,
    j3_schwarz: f64,
    j3_near_sup: f64,
    err: f64,
}

fn bound_row(model: SimModel, lambda: f64, params: &BoundsParams) -> CliResult<BoundRow> {
    let moll = Mollifier::gaussian(params.sigma)?;
    let mut query = BoundQuery::new(lambda, model, moll)?;
    query.quad = query.quad.with_rel_tol(params.tol);
    if let Some(pmax) = params.pmax {
        query.p_max = pmax;
        query.validate()?;
    }
    let upper = upper_bound(&query)?;
    let row = match model {
        SimModel::Dcgf => {
            let lower = lower_bound_dcgf(&query)?;
            let kernel = Arc::new(RadialKernel::dcgf(
                lambda,
                &query.mollifier,
                &query.quad,
                query.p_max,
            )?);
            let f = TestFunction::optimal_dcgf(lambda, kernel)?;
            let vals = functionals(&query, &f)?;
            BoundRow {
                lambda,
                lower: lower.value,
                upper: upper.value,
                j1: vals.j1,
                j2: vals.j2,
                j3_schwarz: vals.j3.unwrap_or(0.0),
                j3_near_sup: 0.0,
                err: lower.error + upper.error + vals.err,
            }
        }
        SimModel::Srbp => {
            let b = lower_bound_srbp(&query)?;
            let c = b.c_star;
            BoundRow {
                lambda,
                lower: b.value,
                upper: upper.value,
                j1: c * b.parts.j1,
                j2: c * c * b.parts.j2,
                j3_schwarz: c * c * b.parts.j31_bound.unwrap_or(0.0),
                j3_near_sup: c * c * b.parts.j32_prime.unwrap_or(0.0),
                err: b.err + upper.error + b.parts.err,
            }
        }
        SimModel::SrbpAniso => {
            let b = lower_bound_aniso(&query)?;
            let f = TestFunction::aniso_optimal(lambda, b.c_fit)?;
            let vals = functionals(&query, &f)?;
            BoundRow {
                lambda,
                lower: b.value,
                upper: upper.value,
                j1: vals.j1,
                j2: vals.j2,
                j3_schwarz: vals.j3.unwrap_or(0.0),
                j3_near_sup: 0.0,
                err: b.err + upper.error + vals.err,
            }
        }
    };
    Ok(row)
}

pub fn run_bounds(params: BoundsParams, seed: u64, out_dir: &Path) -> CliResult<()> {
    let model = parse_sim_model(&params.model)?;
    if params.lambda_list.is_empty() {
        return Err(CliError::usage("lambda_list must not be empty".into()));
    }
    // Fan the sweep out; rows come back in input order regardless of
    // scheduling.
    let rows: CliResult<Vec<BoundRow>> = params
        .lambda_list
        .par_iter()
        .map(|&lambda| bound_row(model, lambda, &params))
        .collect();
    let rows = rows?;

    let primary = resolve_out(out_dir, &params.out)?;
    let mut w = open_out(&primary)?;
    writeln!(
        w,
        "lambda,lower_bound,upper_bound,j1,j2,j3_schwarz,j3_near_sup,err_estimate"
    )
    .map_err(|e| CliError::io(e.to_string()))?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt(r.lambda),
            fmt(r.lower),
            fmt(r.upper),
            fmt(r.j1),
            fmt(r.j2),
            fmt(r.j3_schwarz),
            fmt(r.j3_near_sup),
            fmt(r.err)
        )
        .map_err(|e| CliError::io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))?;

    let name = params.out.display().to_string();
    let mut manifest = Manifest::new("bounds", seed, params);
    manifest.outputs = vec![name];
    manifest.write_next_to(&primary)?;
    Ok(())
}

// ------------------------------------------------------------------- scaling

#[derive(Debug, Serialize)]
pub struct ScalingParams {
    pub input: PathBuf,
    pub lambda_list: Vec<f64>,
    pub fit: bool,
    pub aw: Option<(u32, bool)>,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct LaplaceRow {
    lambda: f64,
    value: f64,
    tail_fraction: f64,
}

#[derive(Debug, Serialize)]
struct ScalingReport {
    gamma_hat: Option<f64>,
    ci: Option<(f64, f64)>,
    laplace: Vec<LaplaceRow>,
    aw_slope: Option<f64>,
    amplitude: Option<f64>,
    gamma_se: Option<f64>,
    points_used: usize,
}

/// Read a CSV produced by `simulate`: columns located by header name, rows in
/// file order. Only t, E_t and stderr are consumed here.
fn read_msd_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::io(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> CliResult<usize> {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::io(format!("{}: missing column `{name}`", path.display())))
    };
    let (ti, ei, si) = (col("t")?, col("E_t")?, col("stderr")?);
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut stderr = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> CliResult<f64> {
            fields
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| CliError::io(format!("{}: bad row {}", path.display(), ln + 2)))
        };
        times.push(get(ti)?);
        values.push(get(ei)?);
        stderr.push(get(si)?);
    }
    Ok((times, values, stderr))
}

pub fn run_scaling(params: ScalingParams, seed: u64, out_dir: &Path) -> CliResult<()> {
    let (times, values, stderr) = read_msd_csv(&params.input)?;
    // The asymptotic machinery works on log t; rows with t <= 1 are dropped.
    let keep: Vec<usize> = (0..times.len()).filter(|&i| times[i] > 1.0).collect();
    let series = MsdSeries::new(
        keep.iter().map(|&i| times[i]).collect(),
        keep.iter().map(|&i| values[i]).collect(),
        Some(keep.iter().map(|&i| stderr[i]).collect()),
    )?;

    let mut laplace = Vec::with_capacity(params.lambda_list.len());
    for &lambda in &params.lambda_list {
        let l = laplace_msd(&series, lambda)?;
        laplace.push(LaplaceRow {
            lambda,
            value: l.value,
            tail_fraction: l.tail_fraction,
        });
    }

    let fit = if params.fit {
        Some(fit_exponents(&series)?)
    } else {
        None
    };
    let aw_slope = match params.aw {
        Some((d, iso)) => {
            let ansatz = ScalingAnsatz::from_table(d, iso)?;
            Some(aw_residual(&ansatz, &log_space(1e2, 1e14, 40))?.slope)
        }
        None => None,
    };

    let report = ScalingReport {
        gamma_hat: fit.map(|f| f.gamma),
        ci: fit.map(|f| f.gamma_ci),
        laplace,
        aw_slope,
        amplitude: fit.map(|f| f.amplitude),
        gamma_se: fit.map(|f| f.gamma_se),
        points_used: series.times().len(),
    };
    let body = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::io(format!("report serialization failed: {e}")))?;
    let primary = resolve_out(out_dir, &params.out)?;
    std::fs::write(&primary, body + "\n")
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", primary.display())))?;

    let name = params.out.display().to_string();
    let mut manifest = Manifest::new("scaling", seed, params);
    manifest.outputs = vec![name];
    manifest.write_next_to(&primary)?;
    Ok(())
}

// ------------------------------------------------------------------ aw-check

#[derive(Debug, Serialize)]
pub struct AwCheckParams {
    pub d: u32,
    pub iso: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct AwCheckReport {
    nu: f64,
    gamma: f64,
    slope: f64,
    intercept: f64,
}

pub fn run_aw_check(params: AwCheckParams, seed: u64, out_dir: &Path) -> CliResult<()> {
    let ansatz = ScalingAnsatz::from_table(params.d, params.iso)?;
    let grid = log_space(params.t_min, params.t_max, params.points);
    let report = aw_residual(&ansatz, &grid)?;
    let body = serde_json::to_string_pretty(&AwCheckReport {
        nu: ansatz.nu,
        gamma: ansatz.gamma,
        slope: report.slope,
        intercept: report.intercept,
    })
    .map_err(|e| CliError::io(format!("report serialization failed: {e}")))?;
    let primary = resolve_out(out_dir, &params.out)?;
    std::fs::write(&primary, body + "\n")
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", primary.display())))?;

    let name = params.out.display().to_string();
    let mut manifest = Manifest::new("aw-check", seed, params);
    manifest.outputs = vec![name];
    manifest.write_next_to(&primary)?;
    Ok(())
}
