//! Lead-lag information flow between assets.
//!
//! The pipeline turns a price panel into daily log returns, aggregates them
//! over a grid of time scales, runs bivariate Granger tests on every pair for
//! a grid of lag lengths, and summarizes the pair classifications as
//! frequency ratios. Approximate entropy ranks tickers by efficiency so
//! one-way flows can be split by whether they run from the more efficient
//! member to the less efficient one. Shuffled surrogates and a synthetic
//! generator with known couplings serve as controls.

pub mod entropy;
pub mod flow;
pub mod granger;
pub mod market_data;
pub mod synth;

pub use entropy::{apen, efficiency_rank, phi, ApEnScore, EntropyError};
pub use flow::{analyze_market, fr_curves, frequency_ratio, FlowError, FlowMatrix, FrCell, FrCurves, PairOutcome};
pub use granger::{classify_pair, f_cdf, granger_f_test, ols_rss, FlowClass, GrangerError, GrangerResult};
pub use market_data::{
    aggregate_returns, load_prices, log_returns, shuffle_panel, LoadOptions, MarketDataError, PricePanel,
    Provenance, ReturnPanel,
};
pub use synth::{apen_bruteforce, f_oracle_check, gen_var, SynthError, SynthSpec};
