//! Bivariate Granger causality.
//!
//! For a target `y` and source `x` at lag length `l`, the unrestricted model
//! regresses `y_t` on an intercept, `y_{t-1..t-l}` and `x_{t-1..t-l}`; the
//! restricted model drops the `x` lags. Both are fit on the same `T - l`
//! rows and compared with the Wald F statistic
//!
//! ```text
//! F = ((RSS_r - RSS_u) / l) / (RSS_u / (T - l - 2l - 1))
//! ```
//!
//! The restricted fit depends on the target only, so [`TargetFit`] caches it
//! and every source is tested by orthogonalizing its lag block against the
//! cached basis.

mod fdist;
mod ols;

pub use fdist::{f_cdf, f_sf};
pub use ols::{ols_rss, DesignMatrix};

use ols::{dot, OrthoBasis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrangerError {
    #[error("series lengths differ")]
    LengthMismatch,
    #[error("insufficient observations: need {needed}, have {have}")]
    InsufficientObservations { needed: usize, have: usize },
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("lag length must be >= 1")]
    InvalidLag,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mismatched pair metadata: {0}")]
    MismatchedPair(String),
}

/// Outcome of one directed test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub lag: usize,
    /// Infinite when the unrestricted fit is exact.
    pub f_stat: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub p_value: f64,
    /// Unrestricted residuals vanished relative to the target's variation;
    /// `p_value` is set to 0.
    pub degenerate: bool,
}

/// A [`GrangerResult`] tagged with the panel columns it was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedTest {
    pub source: usize,
    pub target: usize,
    pub result: GrangerResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    /// Both directions significant.
    Mutual,
    /// Only `x -> y` significant.
    #[serde(rename = "oneway_xy")]
    OneWayXY,
    /// Only `y -> x` significant.
    #[serde(rename = "oneway_yx")]
    OneWayYX,
    #[serde(rename = "none")]
    NoExchange,
}

impl FlowClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowClass::Mutual => "mutual",
            FlowClass::OneWayXY => "oneway_xy",
            FlowClass::OneWayYX => "oneway_yx",
            FlowClass::NoExchange => "none",
        }
    }

    /// Label seen from the other member of the pair.
    pub fn swapped(self) -> Self {
        match self {
            FlowClass::OneWayXY => FlowClass::OneWayYX,
            FlowClass::OneWayYX => FlowClass::OneWayXY,
            c => c,
        }
    }

    pub fn is_one_way(self) -> bool {
        matches!(self, FlowClass::OneWayXY | FlowClass::OneWayYX)
    }
}

/// Classifies an unordered pair from its two directed tests.
pub fn classify_pair(res_xy: &DirectedTest, res_yx: &DirectedTest, alpha: f64) -> Result<FlowClass, GrangerError> {
    if res_xy.source != res_yx.target || res_xy.target != res_yx.source || res_xy.source == res_xy.target {
        return Err(GrangerError::MismatchedPair(format!(
            "{}->{} vs {}->{}",
            res_xy.source, res_xy.target, res_yx.source, res_yx.target
        )));
    }
    if res_xy.result.lag != res_yx.result.lag {
        return Err(GrangerError::MismatchedPair(format!(
            "lags {} and {}",
            res_xy.result.lag, res_yx.result.lag
        )));
    }
    Ok(classify_p(res_xy.result.p_value, res_yx.result.p_value, alpha))
}

pub(crate) fn classify_p(p_xy: f64, p_yx: f64, alpha: f64) -> FlowClass {
    match (p_xy < alpha, p_yx < alpha) {
        (true, true) => FlowClass::Mutual,
        (true, false) => FlowClass::OneWayXY,
        (false, true) => FlowClass::OneWayYX,
        (false, false) => FlowClass::NoExchange,
    }
}

/// Lag column `j` (1-based) aligned with rows `lag..T`.
#[inline]
fn lagged(series: &[f64], lag: usize, j: usize) -> &[f64] {
    &series[lag - j..series.len() - j]
}

/// Restricted autoregression of one target series, reusable across sources.
#[derive(Debug, Clone)]
pub struct TargetFit {
    lag: usize,
    rows: usize,
    basis: OrthoBasis,
    resid: Vec<f64>,
    rss_restricted: f64,
    eps_rss: f64,
}

impl TargetFit {
    pub fn new(y: &[f64], lag: usize) -> Result<Self, GrangerError> {
        if lag < 1 {
            return Err(GrangerError::InvalidLag);
        }
        // T_eff - 2l - 1 >= 1 with T_eff = T - l.
        let needed = 3 * lag + 2;
        if y.len() < needed {
            return Err(GrangerError::InsufficientObservations { needed, have: y.len() });
        }
        let rows = y.len() - lag;
        let mut basis = OrthoBasis::new(rows);
        basis
            .push(vec![1.0; rows])
            .expect("intercept column is non-zero");
        for j in 1..=lag {
            basis
                .push(lagged(y, lag, j).to_vec())
                .map_err(|_| GrangerError::DegenerateDesign(format!("target lag {j} is collinear with the restricted model")))?;
        }
        let target = &y[lag..];
        let mut resid = target.to_vec();
        OrthoBasis::project_out(basis.vectors(), &mut resid);
        let rss_restricted = dot(&resid, &resid);
        let mean = target.iter().sum::<f64>() / rows as f64;
        let tss: f64 = target.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(Self { lag, rows, basis, resid, rss_restricted, eps_rss: 1e-12 * tss })
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn rss_restricted(&self) -> f64 {
        self.rss_restricted
    }

    pub fn df_den(&self) -> usize {
        self.rows - 2 * self.lag - 1
    }

    /// Tests `x -> y` for the target this fit was built from.
    pub fn test_source(&self, x: &[f64]) -> Result<GrangerResult, GrangerError> {
        if x.len() != self.rows + self.lag {
            return Err(GrangerError::LengthMismatch);
        }
        let mut extra = OrthoBasis::new(self.rows);
        for j in 1..=self.lag {
            extra
                .push_against(Some(&self.basis), lagged(x, self.lag, j).to_vec())
                .map_err(|_| GrangerError::DegenerateDesign(format!("source lag {j} is collinear with the target regressors")))?;
        }
        // RSS_r - RSS_u is the squared projection of the restricted residual
        // onto the source block; RSS_u is what remains of it.
        let mut resid = self.resid.clone();
        let mut explained = 0.0;
        for q in extra.vectors() {
            let c = dot(q, &self.resid);
            explained += c * c;
            resid.iter_mut().zip(q).for_each(|(r, qi)| *r -= c * qi);
        }
        for q in self.basis.vectors().chain(extra.vectors()) {
            let c = dot(q, &resid);
            resid.iter_mut().zip(q).for_each(|(r, qi)| *r -= c * qi);
        }
        let rss_u = dot(&resid, &resid);
        let df_num = self.lag;
        let df_den = self.df_den();
        if rss_u < self.eps_rss || rss_u == 0.0 {
            let f_stat = if rss_u == 0.0 { f64::INFINITY } else { (explained / df_num as f64) / (rss_u / df_den as f64) };
            return Ok(GrangerResult { lag: self.lag, f_stat, df_num, df_den, p_value: 0.0, degenerate: true });
        }
        let f_stat = (explained / df_num as f64) / (rss_u / df_den as f64);
        let p_value = f_sf(f_stat, df_num as u32, df_den as u32)?.clamp(0.0, 1.0);
        Ok(GrangerResult { lag: self.lag, f_stat, df_num, df_den, p_value, degenerate: false })
    }
}

/// Tests whether `x` Granger-causes `y` at lag length `lag`.
pub fn granger_f_test(x: &[f64], y: &[f64], lag: usize) -> Result<GrangerResult, GrangerError> {
    if x.len() != y.len() {
        return Err(GrangerError::LengthMismatch);
    }
    TargetFit::new(y, lag)?.test_source(x)
}
