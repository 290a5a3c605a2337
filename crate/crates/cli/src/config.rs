//! Run configuration: command-line flags layered over an optional config file.

use std::path::{Path, PathBuf};

use clap::Args;
use infoflow_core::entropy::{DEFAULT_M, DEFAULT_R_FRAC};
use infoflow_core::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Config file (TOML key = value); flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Time scales in days, `a:b` or a comma list.
    #[arg(long)]
    pub scales: Option<String>,
    /// Lag lengths, `a:b` or a comma list.
    #[arg(long)]
    pub lags: Option<String>,
    /// Per-test significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Analyze a shuffled surrogate instead of the original ordering.
    #[arg(long)]
    pub shuffle: bool,
    /// Master seed for shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated: json, csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Drop tickers with missing or non-positive prices instead of failing.
    #[arg(long)]
    pub drop_incomplete: bool,
    #[arg(long)]
    pub apen_m: Option<usize>,
    #[arg(long)]
    pub apen_r: Option<f64>,
}

/// Either a bare `"1:5"` / `"1,3,5"` string or an explicit list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Text(String),
    List(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FormatSpec {
    Text(String),
    List(Vec<String>),
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    /// Path to a synthetic spec file.
    pub spec: Option<PathBuf>,
    /// Inline synthetic spec.
    pub synth: Option<SynthSpec>,
    pub scales: Option<GridSpec>,
    pub lags: Option<GridSpec>,
    pub alpha: Option<f64>,
    pub shuffle: Option<bool>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<FormatSpec>,
    pub threads: Option<usize>,
    pub drop_incomplete: Option<bool>,
    pub apen_m: Option<usize>,
    pub apen_r: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        // Relative paths inside a config file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.input, &mut cfg.spec, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Prices { path: PathBuf, drop_incomplete: bool },
    Synth { spec: SynthSpec },
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub scales: Vec<usize>,
    pub lags: Vec<usize>,
    pub alpha: f64,
    pub shuffle: bool,
    pub master_seed: u64,
    pub apen_m: usize,
    pub apen_r: f64,
    pub out: PathBuf,
    pub formats: Formats,
    pub threads: Option<usize>,
}

pub fn parse_grid(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("invalid grid `{text}`; use `a:b` or `a,b,c`"));
    let text = text.trim();
    let values: Vec<usize> = if let Some((a, b)) = text.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    check_grid(values, text)
}

fn check_grid(values: Vec<usize>, shown: &str) -> Result<Vec<usize>, CliError> {
    let mut seen = values.clone();
    seen.sort_unstable();
    seen.dedup();
    if values.is_empty() || values.contains(&0) || seen.len() != values.len() {
        return Err(CliError::Config(format!("grid `{shown}` must be non-empty, distinct, all >= 1")));
    }
    Ok(values)
}

fn resolve_grid(flag: Option<&str>, file: Option<&GridSpec>) -> Result<Vec<usize>, CliError> {
    match (flag, file) {
        (Some(s), _) => parse_grid(s),
        (None, Some(GridSpec::Text(s))) => parse_grid(s),
        (None, Some(GridSpec::List(v))) => check_grid(v.clone(), &format!("{v:?}")),
        (None, None) => Ok((1..=5).collect()),
    }
}

pub fn parse_formats<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Formats, CliError> {
    let mut f = Formats { json: false, csv: false };
    for item in items {
        match item.trim().to_ascii_lowercase().as_str() {
            "json" => f.json = true,
            "csv" => f.csv = true,
            "" => {}
            other => return Err(CliError::Config(format!("unknown format `{other}`"))),
        }
    }
    if !(f.json || f.csv) {
        return Err(CliError::Config("no output format selected".into()));
    }
    Ok(f)
}

/// Where the data comes from, as named on the command line.
#[derive(Debug, Clone, Default)]
pub struct SourceArgs {
    pub input: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    /// Subcommand requires a synthetic source.
    pub want_synth: bool,
}

pub fn load_spec(path: &Path) -> Result<SynthSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read spec {}: {e}", path.display())))?;
    // Accept either a bare spec or one nested under `[synth]`.
    #[derive(Deserialize)]
    struct Wrapped {
        synth: SynthSpec,
    }
    let spec = match toml::from_str::<Wrapped>(&text) {
        Ok(w) => w.synth,
        Err(_) => toml::from_str::<SynthSpec>(&text)
            .map_err(|e| CliError::Config(format!("spec {}: {e}", path.display())))?,
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

pub fn resolve(common: &CommonArgs, source: &SourceArgs) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };

    let drop_incomplete = common.drop_incomplete || file.drop_incomplete.unwrap_or(false);
    let input = source.input.clone().or(file.input.clone());
    let spec_path = source.spec.clone().or(file.spec.clone());
    let data = if source.want_synth {
        let spec = match (spec_path, &file.synth) {
            (Some(p), _) => load_spec(&p)?,
            (None, Some(s)) => {
                s.validate().map_err(|e| CliError::Config(e.to_string()))?;
                s.clone()
            }
            (None, None) => return Err(CliError::Config("synth needs --spec or a [synth] table".into())),
        };
        DataSource::Synth { spec }
    } else {
        match (input, spec_path, &file.synth) {
            (Some(path), _, _) => DataSource::Prices { path, drop_incomplete },
            (None, Some(p), _) => DataSource::Synth { spec: load_spec(&p)? },
            (None, None, Some(s)) => {
                s.validate().map_err(|e| CliError::Config(e.to_string()))?;
                DataSource::Synth { spec: s.clone() }
            }
            (None, None, None) => return Err(CliError::Config("no --input given".into())),
        }
    };

    let alpha = common.alpha.or(file.alpha).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let apen_m = common.apen_m.or(file.apen_m).unwrap_or(DEFAULT_M);
    if apen_m < 1 {
        return Err(CliError::Config("apen-m must be >= 1".into()));
    }
    let apen_r = common.apen_r.or(file.apen_r).unwrap_or(DEFAULT_R_FRAC);
    if !(apen_r.is_finite() && apen_r >= 0.0) {
        return Err(CliError::Config(format!("apen-r must be finite and >= 0, got {apen_r}")));
    }
    let formats = match (&common.format, &file.format) {
        (Some(s), _) => parse_formats(s.split(','))?,
        (None, Some(FormatSpec::Text(s))) => parse_formats(s.split(','))?,
        (None, Some(FormatSpec::List(v))) => parse_formats(v.iter().map(String::as_str))?,
        (None, None) => Formats { json: true, csv: true },
    };
    let threads = common.threads.or(file.threads);
    if threads == Some(0) {
        return Err(CliError::Config("threads must be >= 1".into()));
    }

    Ok(RunConfig {
        source: data,
        scales: resolve_grid(common.scales.as_deref(), file.scales.as_ref())?,
        lags: resolve_grid(common.lags.as_deref(), file.lags.as_ref())?,
        alpha,
        shuffle: common.shuffle || file.shuffle.unwrap_or(false),
        master_seed: common.seed.or(file.seed).unwrap_or(0),
        apen_m,
        apen_r,
        out: common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        formats,
        threads,
    })
}
