//! Approximate entropy (ApEn) as an efficiency measure.
//!
//! `ApEn(m, r) = Phi^m(r) - Phi^{m+1}(r)`, where `Phi^m` averages
//! `ln C_i^m` over all length-`m` windows and `C_i^m` is the fraction of
//! windows within Chebyshev distance `r` of window `i`, self-match included.
//! Higher values mean a more random, hence more efficient, return series.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::ReturnPanel;

pub const DEFAULT_M: usize = 2;
pub const DEFAULT_R_FRAC: f64 = 0.20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("series of length {have} is too short for m = {m} (need {needed})")]
    TooShort { m: usize, needed: usize, have: usize },
    #[error("embedding dimension must be >= 1")]
    InvalidDimension,
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("ApEn is defined on daily returns, got time scale {0}")]
    NotDaily(usize),
    #[error("{ticker}: {source}")]
    Ticker {
        ticker: String,
        #[source]
        source: Box<EntropyError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApEnScore {
    pub ticker: String,
    pub m: usize,
    pub r_frac: f64,
    /// `r_frac` times the sample standard deviation of the series.
    pub r_abs: f64,
    pub value: f64,
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_std(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let ss: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

fn validate(series: &[f64], m: usize, needed: usize, r: f64) -> Result<(), EntropyError> {
    if m < 1 {
        return Err(EntropyError::InvalidDimension);
    }
    if series.len() < needed {
        return Err(EntropyError::TooShort { m, needed, have: series.len() });
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(EntropyError::InvalidTolerance(r));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(EntropyError::NonFinite);
    }
    Ok(())
}

/// For every length-`m` window, the number of windows (itself included)
/// within Chebyshev distance `r`.
///
/// Windows are sorted by their first element; the candidates for window `i`
/// then form one contiguous run, found by binary search with the same
/// `|a - b| <= r` test used for the remaining coordinates.
fn match_counts(series: &[f64], m: usize, r: f64) -> Vec<u32> {
    let n = series.len() - m + 1;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| series[a].total_cmp(&series[b]).then(a.cmp(&b)));
    let firsts: Vec<f64> = order.iter().map(|&i| series[i]).collect();

    let mut counts = vec![0u32; n];
    for (pos, &i) in order.iter().enumerate() {
        let u = series[i];
        let lo = firsts[..pos].partition_point(|&v| (u - v).abs() > r);
        let hi = pos + firsts[pos..].partition_point(|&v| (v - u).abs() <= r);
        let w = &series[i..i + m];
        let mut c = 0u32;
        for &j in &order[lo..hi] {
            if w[1..]
                .iter()
                .zip(&series[j + 1..j + m])
                .all(|(a, b)| (a - b).abs() <= r)
            {
                c += 1;
            }
        }
        counts[i] = c;
    }
    counts
}

/// `Phi^m(r)`: mean of `ln C_i^m(r)` over the `N - m + 1` windows.
pub fn phi(series: &[f64], m: usize, r_abs: f64) -> Result<f64, EntropyError> {
    validate(series, m, m + 1, r_abs)?;
    Ok(phi_unchecked(series, m, r_abs))
}

fn phi_unchecked(series: &[f64], m: usize, r: f64) -> f64 {
    let n = series.len() - m + 1;
    let total: f64 = match_counts(series, m, r)
        .into_iter()
        .map(|c| (c as f64 / n as f64).ln())
        .sum();
    total / n as f64
}

/// ApEn with tolerance `r_frac` times the sample standard deviation.
pub fn apen(series: &[f64], m: usize, r_frac: f64) -> Result<f64, EntropyError> {
    apen_score("", series, m, r_frac).map(|s| s.value)
}

/// ApEn with an absolute tolerance `r_abs`.
pub fn apen_with_tolerance(series: &[f64], m: usize, r_abs: f64) -> Result<f64, EntropyError> {
    validate(series, m, m + 2, r_abs)?;
    Ok(phi_unchecked(series, m, r_abs) - phi_unchecked(series, m + 1, r_abs))
}

pub fn apen_score(ticker: &str, series: &[f64], m: usize, r_frac: f64) -> Result<ApEnScore, EntropyError> {
    validate(series, m, m + 2, r_frac)?;
    let r_abs = r_frac * sample_std(series);
    let value = phi_unchecked(series, m, r_abs) - phi_unchecked(series, m + 1, r_abs);
    Ok(ApEnScore { ticker: ticker.to_owned(), m, r_frac, r_abs, value })
}

/// ApEn of every ticker's daily return column, in panel order.
pub fn efficiency_rank(
    panel: &ReturnPanel,
    m: usize,
    r_frac: f64,
) -> Result<IndexMap<String, ApEnScore>, EntropyError> {
    if panel.time_scale() != 1 {
        return Err(EntropyError::NotDaily(panel.time_scale()));
    }
    let scores: Vec<Result<ApEnScore, EntropyError>> = (0..panel.n_tickers())
        .into_par_iter()
        .map(|i| {
            let ticker = &panel.tickers()[i];
            apen_score(ticker, &panel.column(i), m, r_frac).map_err(|e| EntropyError::Ticker {
                ticker: ticker.clone(),
                source: Box::new(e),
            })
        })
        .collect();
    scores
        .into_iter()
        .map(|s| s.map(|s| (s.ticker.clone(), s)))
        .collect()
}
