//! All-pairs information-flow sweep over time scales and lag lengths.
//!
//! Every unordered pair `(i, j)`, `i < j`, is tested in both directions for
//! each `(k, l)` cell and classified as mutual, one-way or no exchange. Pairs
//! are independent jobs; results are collected in pair-index order, so the
//! output does not depend on how the work was scheduled.

use std::sync::Arc;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::ApEnScore;
use crate::granger::{classify_p, FlowClass, GrangerError, TargetFit};
use crate::market_data::{aggregate_returns, MarketDataError, ReturnPanel};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("{0} grid is empty")]
    EmptyGrid(&'static str),
    #[error("{name} values must be distinct and >= 1, got {values:?}")]
    InvalidGrid { name: &'static str, values: Vec<usize> },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("need at least two tickers, have {0}")]
    TooFewTickers(usize),
    #[error("analysis starts from daily returns, got time scale {0}")]
    NotDaily(usize),
    #[error("cell (k = {k}, l = {l}): {have} aggregated observations, need {needed}")]
    CellTooShort { k: usize, l: usize, have: usize, needed: usize },
    #[error("cell (k = {k}, l = {l}): every pair is unclassifiable")]
    EmptyCell { k: usize, l: usize },
    #[error("count {count} exceeds the {total} pairs of {n_tickers} tickers")]
    CountOutOfRange { count: usize, total: usize, n_tickers: usize },
    #[error("no ApEn score for ticker {0}")]
    MissingScore(String),
    #[error("flow matrices do not share one ticker universe")]
    MismatchedUniverse,
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error(transparent)]
    Granger(#[from] GrangerError),
}

/// `N (N - 1) / 2`.
pub fn n_pairs(n_tickers: usize) -> usize {
    n_tickers * n_tickers.saturating_sub(1) / 2
}

/// Position of pair `(i, j)`, `i < j`, in lexicographic order.
pub fn pair_index(i: usize, j: usize, n_tickers: usize) -> usize {
    debug_assert!(i < j && j < n_tickers);
    i * n_tickers - i * (i + 1) / 2 + (j - i - 1)
}

/// Share of all `N (N - 1) / 2` links falling in one category.
pub fn frequency_ratio(count: usize, n_tickers: usize) -> Result<f64, FlowError> {
    if n_tickers < 2 {
        return Err(FlowError::TooFewTickers(n_tickers));
    }
    let total = n_pairs(n_tickers);
    if count > total {
        return Err(FlowError::CountOutOfRange { count, total, n_tickers });
    }
    Ok(count as f64 / total as f64)
}

/// Result for one unordered pair in one `(k, l)` cell. `class` is `None`
/// when either regression had a degenerate design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOutcome {
    pub i: usize,
    pub j: usize,
    pub class: Option<FlowClass>,
    /// p-value of `i -> j`.
    pub p_xy: Option<f64>,
    /// p-value of `j -> i`.
    pub p_yx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub k: usize,
    pub l: usize,
    tickers: Arc<[String]>,
    pairs: Vec<PairOutcome>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub mutual: usize,
    pub one_way: usize,
    pub none: usize,
    pub unclassifiable: usize,
}

impl FlowMatrix {
    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// All `N (N - 1) / 2` pairs in lexicographic `(i, j)` order.
    pub fn pairs(&self) -> &[PairOutcome] {
        &self.pairs
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairOutcome {
        &self.pairs[pair_index(i, j, self.n_tickers())]
    }

    /// Classified pairs keyed by `(i, j)`, `i < j`.
    pub fn classes(&self) -> impl Iterator<Item = ((usize, usize), FlowClass)> + '_ {
        self.pairs.iter().filter_map(|p| p.class.map(|c| ((p.i, p.j), c)))
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for p in &self.pairs {
            match p.class {
                Some(FlowClass::Mutual) => c.mutual += 1,
                Some(FlowClass::OneWayXY | FlowClass::OneWayYX) => c.one_way += 1,
                Some(FlowClass::NoExchange) => c.none += 1,
                None => c.unclassifiable += 1,
            }
        }
        c
    }

    /// Builds a matrix from explicit per-pair classes, `None` marking
    /// unclassifiable pairs. Pairs must be listed in lexicographic order.
    pub fn from_classes(
        k: usize,
        l: usize,
        tickers: Vec<String>,
        classes: &[Option<FlowClass>],
    ) -> Result<Self, FlowError> {
        let n = tickers.len();
        if n < 2 {
            return Err(FlowError::TooFewTickers(n));
        }
        let total = n_pairs(n);
        if classes.len() != total {
            return Err(FlowError::CountOutOfRange { count: classes.len(), total, n_tickers: n });
        }
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .zip(classes)
            .map(|((i, j), &class)| PairOutcome { i, j, class, p_xy: None, p_yx: None })
            .collect();
        Ok(Self { k, l, tickers: tickers.into(), pairs })
    }
}

fn check_grid(name: &'static str, values: &[usize]) -> Result<(), FlowError> {
    if values.is_empty() {
        return Err(FlowError::EmptyGrid(name));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != values.len() || sorted[0] < 1 {
        return Err(FlowError::InvalidGrid { name, values: values.to_vec() });
    }
    Ok(())
}

/// Observations a series needs for lag length `l`: `T - l - 2l - 1 >= 1`.
pub fn min_observations(l: usize) -> usize {
    3 * l + 2
}

/// Classifies every pair of a daily return panel for every `(k, l)` in
/// `k_set x l_set`. Matrices are returned in `k`-major order.
pub fn analyze_market(
    panel: &ReturnPanel,
    k_set: &[usize],
    l_set: &[usize],
    alpha: f64,
) -> Result<Vec<FlowMatrix>, FlowError> {
    check_grid("time scale", k_set)?;
    check_grid("lag", l_set)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FlowError::InvalidAlpha(alpha));
    }
    if panel.time_scale() != 1 {
        return Err(FlowError::NotDaily(panel.time_scale()));
    }
    let n = panel.n_tickers();
    if n < 2 {
        return Err(FlowError::TooFewTickers(n));
    }
    // Fail before doing any work if some cell cannot be fit.
    for &k in k_set {
        let have = panel.n_obs() / k;
        for &l in l_set {
            if have < min_observations(l) {
                return Err(FlowError::CellTooShort { k, l, have, needed: min_observations(l) });
            }
        }
    }

    let tickers: Arc<[String]> = panel.tickers().to_vec().into();
    let mut out = Vec::with_capacity(k_set.len() * l_set.len());
    for &k in k_set {
        let columns = aggregate_returns(panel, k)?.columns();
        for &l in l_set {
            let pairs = sweep_cell(&columns, l, alpha)?;
            out.push(FlowMatrix { k, l, tickers: tickers.clone(), pairs });
        }
    }
    Ok(out)
}

fn sweep_cell(columns: &[Vec<f64>], l: usize, alpha: f64) -> Result<Vec<PairOutcome>, FlowError> {
    let n = columns.len();
    let fits: Vec<Result<TargetFit, GrangerError>> =
        columns.par_iter().map(|y| TargetFit::new(y, l)).collect();
    for f in &fits {
        if let Err(e) = f {
            if !matches!(e, GrangerError::DegenerateDesign(_)) {
                return Err(e.clone().into());
            }
        }
    }

    let directed = |src: usize, tgt: usize| -> Result<Option<f64>, GrangerError> {
        match &fits[tgt] {
            Err(_) => Ok(None),
            Ok(fit) => match fit.test_source(&columns[src]) {
                Ok(r) => Ok(Some(r.p_value)),
                Err(GrangerError::DegenerateDesign(_)) => Ok(None),
                Err(e) => Err(e),
            },
        }
    };

    let pairs: Vec<Result<PairOutcome, GrangerError>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let p_xy = directed(i, j)?;
            let p_yx = directed(j, i)?;
            let class = match (p_xy, p_yx) {
                (Some(a), Some(b)) => Some(classify_p(a, b, alpha)),
                _ => None,
            };
            Ok(PairOutcome { i, j, class, p_xy, p_yx })
        })
        .collect();
    pairs.into_iter().map(|p| p.map_err(FlowError::from)).collect()
}

/// Frequency ratios for one `(k, l)` cell. Unclassifiable pairs are left
/// out of every denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrCell {
    pub k: usize,
    pub l: usize,
    pub fr_mutual: f64,
    pub fr_oneway: f64,
    pub fr_none: f64,
    /// One-way flows from the higher-ApEn member to the lower.
    pub fr_eff_forward: f64,
    /// One-way flows from the lower-ApEn member to the higher.
    pub fr_eff_backward: f64,
    /// One-way pairs whose members have exactly equal ApEn.
    pub n_tied: usize,
    pub n_unclassifiable: usize,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrCurves {
    pub cells: Vec<FrCell>,
}

impl FrCurves {
    pub fn cell(&self, k: usize, l: usize) -> Option<&FrCell> {
        self.cells.iter().find(|c| c.k == k && c.l == l)
    }

    /// Total tied one-way pairs over all cells.
    pub fn n_tied_pairs(&self) -> usize {
        self.cells.iter().map(|c| c.n_tied).sum()
    }
}

/// Category and efficiency-directed frequency ratios for every matrix.
pub fn fr_curves(matrices: &[FlowMatrix], scores: &IndexMap<String, ApEnScore>) -> Result<FrCurves, FlowError> {
    let Some(first) = matrices.first() else {
        return Ok(FrCurves { cells: Vec::new() });
    };
    if matrices.iter().any(|m| m.tickers() != first.tickers()) {
        return Err(FlowError::MismatchedUniverse);
    }
    let apen: Vec<f64> = first
        .tickers()
        .iter()
        .map(|t| scores.get(t).map(|s| s.value).ok_or_else(|| FlowError::MissingScore(t.clone())))
        .collect::<Result<_, _>>()?;

    let cells = matrices
        .iter()
        .map(|m| {
            let counts = m.counts();
            let (mut forward, mut backward, mut tied) = (0usize, 0usize, 0usize);
            for p in m.pairs() {
                let (src, tgt) = match p.class {
                    Some(FlowClass::OneWayXY) => (p.i, p.j),
                    Some(FlowClass::OneWayYX) => (p.j, p.i),
                    _ => continue,
                };
                if apen[src] > apen[tgt] {
                    forward += 1;
                } else if apen[src] < apen[tgt] {
                    backward += 1;
                } else {
                    tied += 1;
                }
            }
            let n_pairs = m.pairs().len();
            let denom = n_pairs - counts.unclassifiable;
            if denom == 0 {
                return Err(FlowError::EmptyCell { k: m.k, l: m.l });
            }
            let fr = |c: usize| c as f64 / denom as f64;
            Ok(FrCell {
                k: m.k,
                l: m.l,
                fr_mutual: fr(counts.mutual),
                fr_oneway: fr(counts.one_way),
                fr_none: fr(counts.none),
                fr_eff_forward: fr(forward),
                fr_eff_backward: fr(backward),
                n_tied: tied,
                n_unclassifiable: counts.unclassifiable,
                n_pairs,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(FrCurves { cells })
}
