//! Synthetic return panels with known causal structure, and brute-force
//! oracles for the optimized routines.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::granger::f_cdf;
use crate::market_data::{Provenance, ReturnPanel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("series of length {have} is too short for m = {m}")]
    TooShort { m: usize, have: usize },
}

/// `target` receives `coefficient * source(t - lag)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub source: usize,
    pub target: usize,
    pub lag: usize,
    pub coefficient: f64,
}

/// Lagged linear system driven by Gaussian noise:
///
/// ```text
/// r_i(t) = ar_i r_i(t-1) + sum_{c: target = i} coeff_c r_{src_c}(t - lag_c) + sigma e_i(t)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_tickers: usize,
    pub horizon: usize,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    /// One coefficient per ticker; empty means all zero.
    #[serde(default)]
    pub ar_coeffs: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    1.0
}

impl SynthSpec {
    /// `n` independent unit-variance white-noise tickers.
    pub fn independent(n_tickers: usize, horizon: usize, seed: u64) -> Self {
        Self { n_tickers, horizon, couplings: Vec::new(), noise_sigma: 1.0, ar_coeffs: Vec::new(), seed }
    }

    pub fn with_coupling(mut self, source: usize, target: usize, lag: usize, coefficient: f64) -> Self {
        self.couplings.push(Coupling { source, target, lag, coefficient });
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.n_tickers < 1 {
            return bad("n_tickers must be >= 1".into());
        }
        if self.horizon < 2 {
            return bad("horizon must be >= 2".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return bad(format!("noise_sigma must be positive, got {}", self.noise_sigma));
        }
        if !self.ar_coeffs.is_empty() && self.ar_coeffs.len() != self.n_tickers {
            return bad(format!("{} ar_coeffs for {} tickers", self.ar_coeffs.len(), self.n_tickers));
        }
        if let Some(a) = self.ar_coeffs.iter().find(|a| !(a.abs() < 1.0)) {
            return bad(format!("ar coefficient {a} is not stationary"));
        }
        for c in &self.couplings {
            if c.source >= self.n_tickers || c.target >= self.n_tickers {
                return bad(format!("coupling {}->{} out of range", c.source, c.target));
            }
            if c.source == c.target {
                return bad(format!("self-coupling on {}; use ar_coeffs", c.source));
            }
            if c.lag < 1 {
                return bad(format!("coupling {}->{} has lag 0", c.source, c.target));
            }
            if !c.coefficient.is_finite() {
                return bad(format!("coupling {}->{} has non-finite coefficient", c.source, c.target));
            }
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.couplings.iter().map(|c| c.lag).max().unwrap_or(1).max(1)
    }

    pub fn burn_in(&self) -> usize {
        10 * self.max_lag()
    }

    pub fn ticker_names(&self) -> Vec<String> {
        let width = (self.n_tickers.max(2) - 1).to_string().len().max(3);
        (0..self.n_tickers).map(|i| format!("S{i:0width$}")).collect()
    }
}

/// Drivers `0..n_drivers` feed followers `n_drivers..2 n_drivers` at lag 1.
///
/// Couplings are assigned round-robin: coupling `c` links driver
/// `c mod n_drivers` to follower `(c mod n_drivers + 4 floor(c / n_drivers)) mod n_drivers`,
/// so no driver-follower link repeats while `n_couplings <= n_drivers * ceil(n_drivers / 4)`.
pub fn driver_follower_spec(
    n_drivers: usize,
    n_couplings: usize,
    horizon: usize,
    coefficient: f64,
    seed: u64,
) -> SynthSpec {
    let mut spec = SynthSpec::independent(2 * n_drivers, horizon, seed);
    for c in 0..n_couplings {
        let d = c % n_drivers;
        let f = (d + 4 * (c / n_drivers)) % n_drivers;
        spec = spec.with_coupling(d, n_drivers + f, 1, coefficient);
    }
    spec
}

/// `n_pairs` white-noise drivers, each leading one persistent AR(1) follower
/// (`ar` close to 1) at lag 1. Drivers have high ApEn, followers low.
pub fn efficiency_spec(n_pairs: usize, horizon: usize, ar: f64, coefficient: f64, seed: u64) -> SynthSpec {
    let mut spec = SynthSpec::independent(2 * n_pairs, horizon, seed);
    spec.ar_coeffs = (0..2 * n_pairs).map(|i| if i < n_pairs { 0.0 } else { ar }).collect();
    for d in 0..n_pairs {
        spec = spec.with_coupling(d, n_pairs + d, 1, coefficient);
    }
    spec
}

/// Standard-normal innovations for ticker `i`: ChaCha8 seeded with `seed`,
/// stream `i`.
pub fn innovations(seed: u64, ticker: usize, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ticker as u64);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Simulates the spec and returns a daily return panel of `horizon` rows.
pub fn gen_var(spec: &SynthSpec) -> Result<ReturnPanel, SynthError> {
    spec.validate()?;
    let n = spec.n_tickers;
    let burn = spec.burn_in();
    let total = burn + spec.horizon;
    let noise: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| innovations(spec.seed, i, total))
        .collect();

    let mut incoming: Vec<Vec<Coupling>> = vec![Vec::new(); n];
    for c in &spec.couplings {
        incoming[c.target].push(*c);
    }
    let ar = |i: usize| spec.ar_coeffs.get(i).copied().unwrap_or(0.0);

    let mut paths = vec![vec![0.0f64; total]; n];
    for t in 0..total {
        for i in 0..n {
            let mut v = spec.noise_sigma * noise[i][t];
            if t >= 1 {
                v += ar(i) * paths[i][t - 1];
            }
            for c in &incoming[i] {
                if t >= c.lag {
                    v += c.coefficient * paths[c.source][t - c.lag];
                }
            }
            paths[i][t] = v;
        }
    }
    let returns = Array2::from_shape_fn((spec.horizon, n), |(t, i)| paths[i][burn + t]);
    ReturnPanel::new(spec.ticker_names(), returns, 1, Provenance::Original)
        .map_err(|e| SynthError::InvalidSpec(format!("simulation diverged: {e}")))
}

/// Approximate entropy written out as two plain double loops over all
/// window pairs, with no sorting or shared helpers.
pub fn apen_bruteforce(series: &[f64], m: usize, r_abs: f64) -> Result<f64, SynthError> {
    if m < 1 || series.len() < m + 2 {
        return Err(SynthError::TooShort { m, have: series.len() });
    }
    let phi = |dim: usize| -> f64 {
        let n = series.len() - dim + 1;
        let mut acc = 0.0;
        for i in 0..n {
            let mut b = 0u32;
            for j in 0..n {
                let mut d = 0.0f64;
                for k in 0..dim {
                    let diff = (series[i + k] - series[j + k]).abs();
                    if diff > d {
                        d = diff;
                    }
                }
                if d <= r_abs {
                    b += 1;
                }
            }
            acc += (b as f64 / n as f64).ln();
        }
        acc / n as f64
    };
    Ok(phi(m) - phi(m + 1))
}

/// One row of a published F critical-value table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCritical {
    pub alpha: f64,
    pub d1: u32,
    pub d2: u32,
    pub critical_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FCheckRow {
    pub row: FCritical,
    pub cdf: Option<f64>,
    pub error: f64,
    pub pass: bool,
}

pub const F_TABLE_TOLERANCE: f64 = 1e-3;

const fn fc(alpha: f64, d1: u32, d2: u32, critical_value: f64) -> FCritical {
    FCritical { alpha, d1, d2, critical_value }
}

/// Upper critical values of the F distribution, four decimals.
pub const PUBLISHED_F_CRITICAL: &[FCritical] = &[
    fc(0.05, 1, 10, 4.9646),
    fc(0.05, 2, 10, 4.1028),
    fc(0.05, 3, 10, 3.7083),
    fc(0.05, 4, 10, 3.4780),
    fc(0.05, 5, 10, 3.3258),
    fc(0.05, 1, 20, 4.3512),
    fc(0.05, 2, 20, 3.4928),
    fc(0.05, 3, 20, 3.0984),
    fc(0.05, 4, 20, 2.8661),
    fc(0.05, 5, 20, 2.7109),
    fc(0.05, 1, 100, 3.9361),
    fc(0.05, 2, 100, 3.0873),
    fc(0.05, 3, 100, 2.6955),
    fc(0.05, 4, 100, 2.4626),
    fc(0.05, 5, 100, 2.3053),
    fc(0.05, 1, 1000, 3.8508),
    fc(0.05, 2, 1000, 3.0047),
    fc(0.05, 3, 1000, 2.6138),
    fc(0.05, 4, 1000, 2.3808),
    fc(0.05, 5, 1000, 2.2231),
    fc(0.01, 1, 10, 10.0443),
    fc(0.01, 2, 10, 7.5594),
    fc(0.01, 3, 10, 6.5523),
    fc(0.01, 4, 10, 5.9943),
    fc(0.01, 5, 10, 5.6363),
    fc(0.01, 1, 20, 8.0960),
    fc(0.01, 2, 20, 5.8489),
    fc(0.01, 3, 20, 4.9382),
    fc(0.01, 4, 20, 4.4307),
    fc(0.01, 5, 20, 4.1027),
    fc(0.01, 1, 100, 6.8953),
    fc(0.01, 2, 100, 4.8239),
    fc(0.01, 3, 100, 3.9837),
    fc(0.01, 4, 100, 3.5127),
    fc(0.01, 5, 100, 3.2059),
    fc(0.01, 1, 1000, 6.6603),
    fc(0.01, 2, 1000, 4.6264),
    fc(0.01, 3, 1000, 3.8012),
    fc(0.01, 4, 1000, 3.3380),
    fc(0.01, 5, 1000, 3.0355),
];

/// Checks `|f_cdf(critical) - (1 - alpha)| <= 1e-3` for every row.
pub fn f_oracle_check(table: &[FCritical]) -> Vec<FCheckRow> {
    table
        .iter()
        .map(|&row| match f_cdf(row.critical_value, row.d1, row.d2) {
            Ok(cdf) => {
                let error = (cdf - (1.0 - row.alpha)).abs();
                FCheckRow { row, cdf: Some(cdf), error, pass: error <= F_TABLE_TOLERANCE }
            }
            Err(_) => FCheckRow { row, cdf: None, error: f64::INFINITY, pass: false },
        })
        .collect()
}
