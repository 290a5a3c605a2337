//! Data loading and the analysis pipeline behind every subcommand.

use indexmap::IndexMap;
use infoflow_core::market_data::{read_prices, DroppedTicker};
use infoflow_core::synth::Coupling;
use infoflow_core::{
    analyze_market, efficiency_rank, fr_curves, gen_var, log_returns, shuffle_panel, ApEnScore, FlowError,
    FlowMatrix, FrCurves, LoadOptions, ReturnPanel,
};
use sha2::{Digest, Sha256};

use crate::config::{DataSource, RunConfig};
use crate::CliError;

/// Daily returns plus what is needed to describe where they came from.
pub struct LoadedData {
    pub panel: ReturnPanel,
    pub dropped: Vec<DroppedTicker>,
    /// SHA-256 of the price file, when the data came from one.
    pub input_sha256: Option<String>,
    /// Ground-truth couplings of a synthetic panel.
    pub truth: Option<Vec<Coupling>>,
}

pub fn load(source: &DataSource) -> Result<LoadedData, CliError> {
    match source {
        DataSource::Prices { path, drop_incomplete } => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            let loaded = read_prices(bytes.as_slice(), LoadOptions { drop_incomplete: *drop_incomplete })
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let panel = log_returns(&loaded.panel).map_err(|e| CliError::Data(e.to_string()))?;
            Ok(LoadedData { panel, dropped: loaded.dropped, input_sha256: Some(digest), truth: None })
        }
        DataSource::Synth { spec } => {
            let panel = gen_var(spec).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(LoadedData { panel, dropped: Vec::new(), input_sha256: None, truth: Some(spec.couplings.clone()) })
        }
    }
}

pub struct Analysis {
    pub matrices: Vec<FlowMatrix>,
    pub curves: FrCurves,
    pub scores: IndexMap<String, ApEnScore>,
}

/// Runs the sweep on `panel` (already shuffled if requested).
pub fn analyze(panel: &ReturnPanel, cfg: &RunConfig) -> Result<Analysis, CliError> {
    let scores = efficiency_rank(panel, cfg.apen_m, cfg.apen_r)
        .map_err(|e| CliError::Data(format!("approximate entropy: {e}")))?;
    let matrices = analyze_market(panel, &cfg.scales, &cfg.lags, cfg.alpha).map_err(|e| match e {
        FlowError::InvalidGrid { .. } | FlowError::EmptyGrid(_) | FlowError::InvalidAlpha(_) => {
            CliError::Config(e.to_string())
        }
        e => CliError::Data(format!("pair sweep: {e}")),
    })?;
    for m in &matrices {
        let c = m.counts();
        if 2 * c.unclassifiable > m.pairs().len() {
            return Err(CliError::Degenerate(format!(
                "cell (k = {}, l = {}): {} of {} pairs have degenerate regressions",
                m.k,
                m.l,
                c.unclassifiable,
                m.pairs().len()
            )));
        }
    }
    let curves = fr_curves(&matrices, &scores).map_err(|e| match e {
        FlowError::EmptyCell { .. } => CliError::Degenerate(e.to_string()),
        e => CliError::Data(format!("frequency ratios: {e}")),
    })?;
    Ok(Analysis { matrices, curves, scores })
}

/// The panel to analyze for one run: the original, or its shuffled surrogate.
pub fn prepare(panel: &ReturnPanel, shuffle: bool, master_seed: u64) -> ReturnPanel {
    if shuffle {
        shuffle_panel(panel, master_seed)
    } else {
        panel.clone()
    }
}
