//! Run configuration: a single TOML file with one table per subcommand,
//! overridden field-by-field by command-line flags.
//!
//! Resolution order for every knob is flag > file > default (knobs without a
//! default are required and missing ones are usage errors). The fully
//! resolved parameter set is echoed into a JSON manifest next to each output
//! file, together with the tool version and the seed, so that any output is
//! reconstructible from its manifest alone.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// On-disk configuration file. Every field is optional; flags fill the gaps.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Base seed for all stochastic subcommands.
    pub seed: Option<u64>,
    /// Directory that relative output paths are resolved against.
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub sample_env: SampleEnvFile,
    #[serde(default)]
    pub simulate: SimulateFile,
    #[serde(default)]
    pub bounds: BoundsFile,
    #[serde(default)]
    pub scaling: ScalingFile,
    #[serde(default)]
    pub aw_check: AwCheckFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEnvFile {
    pub model: Option<String>,
    pub box_size: Option<f64>,
    pub grid: Option<usize>,
    pub sigma: Option<f64>,
    pub out: Option<PathBuf>,
    pub binary: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub model: Option<String>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub ensemble: Option<usize>,
    pub box_size: Option<f64>,
    pub grid: Option<usize>,
    pub sigma: Option<f64>,
    pub refresh: Option<usize>,
    pub output_times: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub model: Option<String>,
    pub lambda_list: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub pmax: Option<f64>,
    pub sigma: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingFile {
    pub input: Option<PathBuf>,
    pub lambda_list: Option<Vec<f64>>,
    pub fit: Option<bool>,
    pub aw_d: Option<u32>,
    pub aw_iso: Option<bool>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwCheckFile {
    pub d: Option<u32>,
    pub iso: Option<bool>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))
    }
}

/// Flag > file > default, for optional knobs.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag > file, for required knobs.
pub fn need<T>(flag: Option<T>, file: Option<T>, what: &str) -> CliResult<T> {
    flag.or(file).ok_or_else(|| {
        CliError::usage(format!(
            "missing required parameter `{what}` (flag or config file)"
        ))
    })
}

/// Comma-separated float list as it appears in `--lambda-list 1e-2,1e-4`.
pub fn parse_float_list(text: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let v: f64 = piece
            .parse()
            .map_err(|_| CliError::usage(format!("cannot parse `{piece}` as a number")))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::usage("empty number list".into()));
    }
    Ok(out)
}

/// Resolve an output path against the output directory and make sure its
/// parent exists.
pub fn resolve_out(out_dir: &Path, out: &Path) -> CliResult<PathBuf> {
    let path = if out.is_absolute() {
        out.to_path_buf()
    } else {
        out_dir.join(out)
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    Ok(path)
}

/// The manifest written next to every output: tool identity, subcommand,
/// seed, the fully resolved parameters, and the produced files.
#[derive(Debug, Serialize)]
pub struct Manifest<P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub params: P,
    pub outputs: Vec<String>,
}

impl<P: Serialize> Manifest<P> {
    pub fn new(subcommand: &'static str, seed: u64, params: P) -> Self {
        Manifest {
            tool: "superdiff",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            params,
            outputs: Vec::new(),
        }
    }

    /// Write the manifest as `<stem>.manifest.json` next to `primary_out`.
    pub fn write_next_to(&self, primary_out: &Path) -> CliResult<PathBuf> {
        let stem = primary_out.file_stem().ok_or_else(|| {
            CliError::usage(format!(
                "output path {} has no file name",
                primary_out.display()
            ))
        })?;
        let mut name = stem.to_os_string();
        name.push(".manifest.json");
        let path = primary_out.with_file_name(name);
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::io(format!("manifest serialization failed: {e}")))?;
        std::fs::write(&path, body + "\n")
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
