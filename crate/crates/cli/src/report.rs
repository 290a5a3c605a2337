//! Output tables and the run manifest.
//!
//! Every table is written as CSV and/or JSON. CSV files start with a
//! `# manifest_sha256=<hex>` comment line and print reals with 17
//! significant digits; JSON files wrap the same rows as
//! `{"manifest_sha256": ..., "rows": [...]}`.

use std::path::{Path, PathBuf};

use infoflow_core::synth::Coupling;
use infoflow_core::Provenance;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{DataSource, Formats, RunConfig};
use crate::pipeline::{Analysis, LoadedData};
use crate::CliError;

pub const TOOL: &str = "infoflow";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to reproduce a run's outputs. Thread count and output
/// location are deliberately absent: neither affects the results.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub source: DataSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub dropped_tickers: Vec<String>,
    pub scales: Vec<usize>,
    pub lags: Vec<usize>,
    pub alpha: f64,
    pub provenance: Provenance,
    pub master_seed: u64,
    pub apen_m: usize,
    pub apen_r: f64,
    pub formats: Formats,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, data: &LoadedData, shuffle: bool) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.to_owned(),
            source: cfg.source.clone(),
            input_sha256: data.input_sha256.clone(),
            dropped_tickers: data.dropped.iter().map(|d| d.ticker.clone()).collect(),
            scales: cfg.scales.clone(),
            lags: cfg.lags.clone(),
            alpha: cfg.alpha,
            provenance: if shuffle { Provenance::Shuffled(cfg.master_seed) } else { Provenance::Original },
            master_seed: cfg.master_seed,
            apen_m: cfg.apen_m,
            apen_r: cfg.apen_r,
            formats: cfg.formats,
        }
    }

    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct FrRow {
    k: usize,
    l: usize,
    fr_mutual: f64,
    fr_oneway: f64,
    fr_none: f64,
    fr_eff_forward: f64,
    fr_eff_backward: f64,
    n_tied: usize,
    n_unclassifiable: usize,
}

#[derive(Serialize)]
struct PairRow<'a> {
    ticker_i: &'a str,
    ticker_j: &'a str,
    k: usize,
    l: usize,
    class: &'static str,
    p_xy: Option<f64>,
    p_yx: Option<f64>,
}

#[derive(Serialize)]
struct ApEnRow<'a> {
    ticker: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct TruthRow<'a> {
    source: &'a str,
    target: &'a str,
    lag: usize,
    coefficient: f64,
}

/// One output table, held as header plus stringified CSV cells alongside
/// its JSON form.
struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    csv_rows: Vec<Vec<String>>,
    json_rows: serde_json::Value,
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn tables(analysis: &Analysis, data: &LoadedData) -> Vec<Table> {
    let mut out = Vec::new();

    let fr: Vec<FrRow> = analysis
        .curves
        .cells
        .iter()
        .map(|c| FrRow {
            k: c.k,
            l: c.l,
            fr_mutual: c.fr_mutual,
            fr_oneway: c.fr_oneway,
            fr_none: c.fr_none,
            fr_eff_forward: c.fr_eff_forward,
            fr_eff_backward: c.fr_eff_backward,
            n_tied: c.n_tied,
            n_unclassifiable: c.n_unclassifiable,
        })
        .collect();
    out.push(Table {
        name: "fr_curves",
        header: vec![
            "k", "l", "fr_mutual", "fr_oneway", "fr_none", "fr_eff_forward", "fr_eff_backward", "n_tied",
            "n_unclassifiable",
        ],
        csv_rows: fr
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    r.l.to_string(),
                    fmt_real(r.fr_mutual),
                    fmt_real(r.fr_oneway),
                    fmt_real(r.fr_none),
                    fmt_real(r.fr_eff_forward),
                    fmt_real(r.fr_eff_backward),
                    r.n_tied.to_string(),
                    r.n_unclassifiable.to_string(),
                ]
            })
            .collect(),
        json_rows: serde_json::to_value(&fr).expect("rows serialize"),
    });

    let mut pairs = Vec::new();
    for m in &analysis.matrices {
        let t = m.tickers();
        for p in m.pairs() {
            pairs.push(PairRow {
                ticker_i: &t[p.i],
                ticker_j: &t[p.j],
                k: m.k,
                l: m.l,
                class: p.class.map_or("unclassifiable", |c| c.as_str()),
                p_xy: p.p_xy,
                p_yx: p.p_yx,
            });
        }
    }
    out.push(Table {
        name: "pairs",
        header: vec!["ticker_i", "ticker_j", "k", "l", "class", "p_xy", "p_yx"],
        csv_rows: pairs
            .iter()
            .map(|r| {
                vec![
                    r.ticker_i.to_owned(),
                    r.ticker_j.to_owned(),
                    r.k.to_string(),
                    r.l.to_string(),
                    r.class.to_owned(),
                    opt_real(r.p_xy),
                    opt_real(r.p_yx),
                ]
            })
            .collect(),
        json_rows: serde_json::to_value(&pairs).expect("rows serialize"),
    });

    let apen: Vec<ApEnRow> = analysis
        .scores
        .values()
        .map(|s| ApEnRow { ticker: &s.ticker, value: s.value })
        .collect();
    out.push(Table {
        name: "apen",
        header: vec!["ticker", "value"],
        csv_rows: apen.iter().map(|r| vec![r.ticker.to_owned(), fmt_real(r.value)]).collect(),
        json_rows: serde_json::to_value(&apen).expect("rows serialize"),
    });

    if let Some(couplings) = &data.truth {
        let names = data.panel.tickers();
        let truth: Vec<TruthRow> = couplings
            .iter()
            .map(|c: &Coupling| TruthRow {
                source: &names[c.source],
                target: &names[c.target],
                lag: c.lag,
                coefficient: c.coefficient,
            })
            .collect();
        out.push(Table {
            name: "truth",
            header: vec!["source", "target", "lag", "coefficient"],
            csv_rows: truth
                .iter()
                .map(|r| vec![r.source.to_owned(), r.target.to_owned(), r.lag.to_string(), fmt_real(r.coefficient)])
                .collect(),
            json_rows: serde_json::to_value(&truth).expect("rows serialize"),
        });
    }
    out
}

fn csv_bytes(table: &Table, hash: &str) -> Result<Vec<u8>, CliError> {
    let mut buf = format!("# manifest_sha256={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&table.header).map_err(io)?;
        for row in &table.csv_rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("json serializes");
    v.push(b'\n');
    v
}

/// Renders every output file for one run, in memory.
pub fn render(manifest: &Manifest, analysis: &Analysis, data: &LoadedData) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let hash = manifest.sha256();
    let mut files = Vec::new();
    for table in tables(analysis, data) {
        if manifest.formats.csv {
            files.push((format!("{}.csv", table.name), csv_bytes(&table, &hash)?));
        }
        if manifest.formats.json {
            let doc = serde_json::json!({ "manifest_sha256": hash, "rows": table.json_rows });
            files.push((format!("{}.json", table.name), json_bytes(&doc)));
        }
    }
    let doc = serde_json::json!({ "manifest": manifest, "manifest_sha256": hash });
    files.push(("manifest.json".to_owned(), json_bytes(&doc)));
    Ok(files)
}

/// Writes all files under `dir`, removing whatever was written if any write fails.
pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            remove_all(&written);
            let _ = std::fs::remove_file(&path);
            return Err(CliError::Io(format!("{}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}

pub fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}
