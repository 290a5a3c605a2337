//! Price panels, log returns, time-scale aggregation and shuffled surrogates.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, Axis};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("malformed price file: {0}")]
    Malformed(String),
    #[error("non-monotone dates: {prev} followed by {next}")]
    NonMonotoneDates { prev: NaiveDate, next: NaiveDate },
    #[error("no usable tickers remain")]
    NoUsableTickers,
    #[error("ticker {ticker} has a missing or non-positive price on {date}")]
    IncompleteTicker { ticker: String, date: NaiveDate },
    #[error("need at least {needed} observations, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("time scale must be >= 1, got {0}")]
    InvalidTimeScale(usize),
    #[error("aggregation requires a daily (k = 1) panel, got k = {0}")]
    NotDaily(usize),
    #[error("panel invariant violated: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Date-aligned matrix of closing prices, one column per ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Array2<f64>,
}

impl PricePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        prices: Array2<f64>,
    ) -> Result<Self, MarketDataError> {
        if prices.dim() != (dates.len(), tickers.len()) {
            return Err(MarketDataError::Invalid(format!(
                "price matrix is {:?}, expected ({}, {})",
                prices.dim(),
                dates.len(),
                tickers.len()
            )));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(MarketDataError::NonMonotoneDates { prev: w[0], next: w[1] });
            }
        }
        check_unique(&tickers)?;
        if tickers.is_empty() {
            return Err(MarketDataError::NoUsableTickers);
        }
        for ((t, i), &p) in prices.indexed_iter() {
            if !(p.is_finite() && p > 0.0) {
                return Err(MarketDataError::IncompleteTicker {
                    ticker: tickers[i].clone(),
                    date: dates[t],
                });
            }
        }
        Ok(Self { dates, tickers, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// `T x N` price matrix.
    pub fn prices(&self) -> &Array2<f64> {
        &self.prices
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }
}

/// Whether a return panel holds the original ordering or a seeded permutation of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "master_seed", rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Shuffled(u64),
}

/// `T' x N` matrix of log returns at time scale `k` (days).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    tickers: Vec<String>,
    returns: Array2<f64>,
    time_scale: usize,
    provenance: Provenance,
}

impl ReturnPanel {
    pub fn new(
        tickers: Vec<String>,
        returns: Array2<f64>,
        time_scale: usize,
        provenance: Provenance,
    ) -> Result<Self, MarketDataError> {
        if time_scale < 1 {
            return Err(MarketDataError::InvalidTimeScale(time_scale));
        }
        if returns.ncols() != tickers.len() {
            return Err(MarketDataError::Invalid(format!(
                "{} return columns for {} tickers",
                returns.ncols(),
                tickers.len()
            )));
        }
        check_unique(&tickers)?;
        if let Some(((t, i), _)) = returns.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MarketDataError::Invalid(format!(
                "non-finite return for {} at row {t}",
                tickers[i]
            )));
        }
        Ok(Self { tickers, returns, time_scale, provenance })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn returns(&self) -> &Array2<f64> {
        &self.returns
    }

    pub fn time_scale(&self) -> usize {
        self.time_scale
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_obs(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    /// Contiguous copy of column `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.returns.column(i).to_vec()
    }

    /// All columns as contiguous vectors, in ticker order.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.returns.axis_iter(Axis(1)).map(|c| c.to_vec()).collect()
    }

    /// Restricts the panel to the given column indices, in the given order.
    pub fn select(&self, cols: &[usize]) -> ReturnPanel {
        ReturnPanel {
            tickers: cols.iter().map(|&c| self.tickers[c].clone()).collect(),
            returns: self.returns.select(Axis(1), cols),
            time_scale: self.time_scale,
            provenance: self.provenance,
        }
    }
}

fn check_unique(tickers: &[String]) -> Result<(), MarketDataError> {
    let mut seen = HashSet::with_capacity(tickers.len());
    for t in tickers {
        if !seen.insert(t.as_str()) {
            return Err(MarketDataError::Malformed(format!("duplicate ticker {t}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Drop tickers with missing or non-positive prices instead of failing.
    pub drop_incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTicker {
    pub ticker: String,
    pub first_bad_date: NaiveDate,
}

#[derive(Debug, Clone)]
pub struct LoadedPrices {
    pub panel: PricePanel,
    pub dropped: Vec<DroppedTicker>,
}

pub fn load_prices(path: impl AsRef<Path>, opts: LoadOptions) -> Result<LoadedPrices, MarketDataError> {
    let file = std::fs::File::open(path.as_ref())?;
    read_prices(file, opts)
}

/// Parses a wide `date,<ticker>,...` table. Empty cells are missing values.
pub fn read_prices<R: Read>(reader: R, opts: LoadOptions) -> Result<LoadedPrices, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| MarketDataError::Malformed(e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(MarketDataError::Malformed("header needs a date column and at least one ticker".into()));
    }
    if !header[0].eq_ignore_ascii_case("date") {
        return Err(MarketDataError::Malformed(format!(
            "first header column must be `date`, found `{}`",
            &header[0]
        )));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if let Some(t) = tickers.iter().find(|t| t.is_empty()) {
        return Err(MarketDataError::Malformed(format!("empty ticker name `{t}`")));
    }
    check_unique(&tickers)?;
    let n = tickers.len();

    let mut dates: Vec<NaiveDate> = Vec::new();
    // None marks a missing or unusable cell.
    let mut cells: Vec<Option<f64>> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MarketDataError::Malformed(e.to_string()))?;
        let line = row + 2;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| {
            MarketDataError::Malformed(format!("line {line}: bad date `{}`: {e}", &rec[0]))
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(MarketDataError::NonMonotoneDates { prev, next: date });
            }
        }
        dates.push(date);
        for (i, field) in rec.iter().skip(1).enumerate() {
            if field.is_empty() {
                cells.push(None);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                MarketDataError::Malformed(format!("line {line}: bad price `{field}` for {}", tickers[i]))
            })?;
            cells.push((v.is_finite() && v > 0.0).then_some(v));
        }
    }
    if dates.is_empty() {
        return Err(MarketDataError::Malformed("no data rows".into()));
    }
    let t_len = dates.len();

    let mut keep = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for (i, ticker) in tickers.iter().enumerate() {
        match (0..t_len).find(|&t| cells[t * n + i].is_none()) {
            None => keep.push(i),
            Some(t) if opts.drop_incomplete => dropped.push(DroppedTicker {
                ticker: ticker.clone(),
                first_bad_date: dates[t],
            }),
            Some(t) => {
                return Err(MarketDataError::IncompleteTicker {
                    ticker: ticker.clone(),
                    date: dates[t],
                })
            }
        }
    }
    if keep.is_empty() {
        return Err(MarketDataError::NoUsableTickers);
    }
    let prices = Array2::from_shape_fn((t_len, keep.len()), |(t, j)| {
        cells[t * n + keep[j]].expect("kept tickers are complete")
    });
    let kept = keep.iter().map(|&i| tickers[i].clone()).collect();
    let panel = PricePanel::new(dates, kept, prices)?;
    Ok(LoadedPrices { panel, dropped })
}

/// Daily log returns `ln P(t+1) - ln P(t)`.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel, MarketDataError> {
    let t_len = panel.n_dates();
    if t_len < 2 {
        return Err(MarketDataError::TooShort { needed: 2, have: t_len });
    }
    let logs = panel.prices.mapv(f64::ln);
    let returns = Array2::from_shape_fn((t_len - 1, panel.n_tickers()), |(t, i)| {
        logs[[t + 1, i]] - logs[[t, i]]
    });
    ReturnPanel::new(panel.tickers.clone(), returns, 1, Provenance::Original)
}

/// Non-overlapping `k`-day block sums of a daily return panel. A trailing
/// partial block is discarded.
pub fn aggregate_returns(panel: &ReturnPanel, k: usize) -> Result<ReturnPanel, MarketDataError> {
    if k < 1 {
        return Err(MarketDataError::InvalidTimeScale(k));
    }
    if panel.time_scale != 1 {
        return Err(MarketDataError::NotDaily(panel.time_scale));
    }
    let t_len = panel.n_obs();
    if t_len < k {
        return Err(MarketDataError::TooShort { needed: k, have: t_len });
    }
    if k == 1 {
        return Ok(panel.clone());
    }
    let blocks = t_len / k;
    let src = &panel.returns;
    let returns = Array2::from_shape_fn((blocks, panel.n_tickers()), |(j, i)| {
        let mut s = 0.0;
        for t in j * k..(j + 1) * k {
            s += src[[t, i]];
        }
        s
    });
    Ok(ReturnPanel {
        tickers: panel.tickers.clone(),
        returns,
        time_scale: k,
        provenance: panel.provenance,
    })
}

/// SplitMix64 finalizer.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for column `col` of a panel shuffled under `master_seed`:
/// `splitmix64(splitmix64(master_seed) ^ (col + 1) * 0x9E3779B97F4A7C15)`.
pub fn column_seed(master_seed: u64, col: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ (col as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
fn bounded(rng: &mut impl RngCore, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = (rng.next_u64() as u128) * (bound as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Fisher-Yates shuffle driven by a ChaCha8 stream seeded with `seed`.
pub fn permute_in_place<T>(values: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..values.len()).rev() {
        let j = bounded(&mut rng, i as u64 + 1) as usize;
        values.swap(i, j);
    }
}

/// Independently permutes every column. Column `i` uses
/// [`column_seed`]`(master_seed, i)`, so the result does not depend on
/// execution order.
pub fn shuffle_panel(panel: &ReturnPanel, master_seed: u64) -> ReturnPanel {
    let cols: Vec<Vec<f64>> = panel
        .columns()
        .into_par_iter()
        .enumerate()
        .map(|(i, mut c)| {
            permute_in_place(&mut c, column_seed(master_seed, i));
            c
        })
        .collect();
    let mut returns = Array2::zeros(panel.returns.raw_dim());
    for (i, c) in cols.iter().enumerate() {
        returns.column_mut(i).iter_mut().zip(c).for_each(|(d, s)| *d = *s);
    }
    ReturnPanel {
        tickers: panel.tickers.clone(),
        returns,
        time_scale: panel.time_scale,
        provenance: Provenance::Shuffled(master_seed),
    }
}
