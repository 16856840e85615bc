//! Model-free time-series analytics and dynamic portfolio rebalancing.
//!
//! A price series is split into a trend and a fast-fluctuation residual with
//! sliding-window algebraic estimators ([`estimators`]). Moments, returns,
//! volatility and Sharpe ratios are built on that trend ([`stats`]), and the
//! [`portfolio`] module rebalances holdings along the Sharpe-ratio gradient
//! without leverage.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod portfolio;
pub mod series;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use estimators::{
    classical_derivative, decompose, estimate_derivative, estimate_trend, fit_window, make_config,
    moving_average, Decomposition, EstimatorConfig, LocalFit,
};
pub use exec::Backend;
pub use series::{align, load_csv, log_transform, AlignedPanel, Calendar, Chronicle, Origin};
pub use stats::{
    asset_volatility, covariance, log_return, mean_return, predict_volatility, sharpe_ratio,
    variance, volatility, MomentConfig, ReturnSeries,
};
