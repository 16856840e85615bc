//! Windowed moments built on the trend estimator, logarithmic returns,
//! historical volatility, Sharpe ratio and short-horizon volatility
//! extrapolation.
//!
//! Every expectation E(.) here is [`estimate_trend`] under one shared
//! [`MomentConfig`], so identities such as cov(x, x) = var(x) hold exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{estimate_derivative, estimate_trend, EstimatorConfig};
use crate::series::{log_transform, Chronicle};

/// Volatility below this makes the Sharpe ratio undefined (reported missing).
pub const DEFAULT_VOL_EPSILON: f64 = 1e-9;

/// Trading days per year used for annualized figures.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentConfig {
    pub estimator: EstimatorConfig,
}

impl MomentConfig {
    pub fn new(estimator: EstimatorConfig) -> Self {
        Self { estimator }
    }

    fn expect(&self, x: &Chronicle) -> Result<Chronicle> {
        estimate_trend(x, &self.estimator)
    }
}

impl From<EstimatorConfig> for MomentConfig {
    fn from(estimator: EstimatorConfig) -> Self {
        Self { estimator }
    }
}

/// A second-moment series plus how many points were clamped from below zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedSeries {
    pub series: Chronicle,
    pub clamped: usize,
}

fn zip_with(
    a: &Chronicle,
    b: &Chronicle,
    label: String,
    f: impl Fn(f64, f64) -> f64,
) -> Chronicle {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(f(*x, *y)),
            _ => None,
        })
        .collect();
    a.with_values(label, values)
}

/// cov(XY) = E(XY) - E(X) E(Y).
pub fn covariance(x: &Chronicle, y: &Chronicle, cfg: &MomentConfig) -> Result<Chronicle> {
    x.check_same_grid(y)?;
    let xy = zip_with(x, y, String::new(), |a, b| a * b);
    let exy = cfg.expect(&xy)?;
    let ex = cfg.expect(x)?;
    let ey = cfg.expect(y)?;
    let ex_ey = zip_with(&ex, &ey, String::new(), |a, b| a * b);
    Ok(zip_with(
        &exy,
        &ex_ey,
        format!("cov({},{})", x.label(), y.label()),
        |a, b| a - b,
    ))
}

fn clamp_negative(raw: Chronicle, label: String) -> ClampedSeries {
    let mut clamped = 0;
    let values = raw
        .values()
        .iter()
        .map(|v| {
            v.map(|v| {
                if v < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    v
                }
            })
        })
        .collect();
    ClampedSeries {
        series: raw.with_values(label, values),
        clamped,
    }
}

/// var(X) = E(X^2) - E(X)^2, clamped at zero.
pub fn variance(x: &Chronicle, cfg: &MomentConfig) -> Result<ClampedSeries> {
    let raw = covariance(x, x, cfg)?;
    Ok(clamp_negative(raw, format!("var({})", x.label())))
}

pub fn volatility(x: &Chronicle, cfg: &MomentConfig) -> Result<ClampedSeries> {
    let var = variance(x, cfg)?;
    Ok(ClampedSeries {
        series: var.series.map(format!("vol({})", x.label()), f64::sqrt),
        clamped: var.clamped,
    })
}

/// Log returns over a horizon of `delta_t` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub delta_t: usize,
    /// R(t) = ln X(t) - ln X(t - delta_t).
    pub raw: Chronicle,
    /// r(t) = R(t) / (delta_t * step), per day.
    pub normalized: Chronicle,
}

pub fn log_return(x: &Chronicle, delta_t: usize) -> Result<ReturnSeries> {
    if delta_t == 0 {
        return Err(Error::Config("return horizon must be >= 1 sample".into()));
    }
    if x.len() <= delta_t {
        return Err(Error::Size {
            needed: delta_t + 1,
            available: x.len(),
        });
    }
    if let Some(i) = x.values().iter().position(|v| matches!(v, Some(p) if *p <= 0.0)) {
        return Err(Error::Domain {
            index: i,
            message: "prices must be positive".into(),
        });
    }
    let raw_values: Vec<Option<f64>> = (0..x.len())
        .map(|i| {
            let prev = i.checked_sub(delta_t).and_then(|j| x.get(j))?;
            Some((x.get(i)? / prev).ln())
        })
        .collect();
    let horizon = delta_t as f64 * x.step();
    let raw = x.with_values(format!("R{delta_t}({})", x.label()), raw_values);
    let normalized = raw.map(format!("r{delta_t}({})", x.label()), |v| v / horizon);
    Ok(ReturnSeries {
        delta_t,
        raw,
        normalized,
    })
}

/// Mean normalized return (E(ln X)(t) - E(ln X)(t - dT)) / dT, per day.
///
/// Computed as E(R_dT) / dT, which equals the difference of log trends because
/// E is linear and shift-equivariant. With `delta_t == 0` this is the
/// instantaneous rate, the derivative of E(ln X).
pub fn mean_return(x: &Chronicle, delta_t: usize, cfg: &MomentConfig) -> Result<Chronicle> {
    if delta_t == 0 {
        let lx = log_transform(x)?;
        let d = estimate_derivative(&lx, &cfg.estimator)?;
        return Ok(d.with_label(format!("rbar0({})", x.label())));
    }
    let ret = log_return(x, delta_t)?;
    let horizon = delta_t as f64 * x.step();
    Ok(cfg
        .expect(&ret.raw)?
        .map(format!("rbar{delta_t}({})", x.label()), |v| v / horizon))
}

/// Historical volatility sqrt(E(r^2) - rbar^2) of the normalized returns.
pub fn asset_volatility(x: &Chronicle, delta_t: usize, cfg: &MomentConfig) -> Result<ClampedSeries> {
    if delta_t == 0 {
        return Err(Error::Config("volatility needs a return horizon >= 1".into()));
    }
    let r = log_return(x, delta_t)?.normalized;
    let r2 = r.map(String::new(), |v| v * v);
    let er2 = cfg.expect(&r2)?;
    let rbar = mean_return(x, delta_t, cfg)?;
    let var = zip_with(&er2, &rbar, String::new(), |a, b| a - b * b);
    let var = clamp_negative(var, String::new());
    Ok(ClampedSeries {
        series: var.series.map(format!("vol{delta_t}({})", x.label()), f64::sqrt),
        clamped: var.clamped,
    })
}

/// SR = rbar / vol; missing where vol is below [`DEFAULT_VOL_EPSILON`].
pub fn sharpe_ratio(x: &Chronicle, delta_t: usize, cfg: &MomentConfig) -> Result<Chronicle> {
    sharpe_ratio_guarded(x, delta_t, cfg, DEFAULT_VOL_EPSILON)
}

pub fn sharpe_ratio_guarded(
    x: &Chronicle,
    delta_t: usize,
    cfg: &MomentConfig,
    vol_epsilon: f64,
) -> Result<Chronicle> {
    let rbar = mean_return(x, delta_t, cfg)?;
    let vol = asset_volatility(x, delta_t, cfg)?.series;
    let values = rbar
        .values()
        .iter()
        .zip(vol.values())
        .map(|(m, v)| match (m, v) {
            (Some(m), Some(v)) if *v >= vol_epsilon => Some(m / v),
            _ => None,
        })
        .collect();
    Ok(x.with_values(format!("sr{delta_t}({})", x.label()), values))
}

/// Linear extrapolation of the smoothed volatility `horizon` samples ahead.
///
/// The value at index `k` follows the estimator convention (it refers to time
/// `k - delay`): the fit of the window ending at `i` is pushed forward to
/// `i + horizon`. The result is `horizon` samples longer than `vol`.
pub fn predict_volatility(vol: &Chronicle, horizon: usize, cfg: &MomentConfig) -> Result<Chronicle> {
    if horizon < 1 {
        return Err(Error::Config("prediction horizon must be >= 1".into()));
    }
    let level = cfg.expect(vol)?;
    let slope = estimate_derivative(vol, &cfg.estimator)?;
    let reach = horizon as f64 * vol.step();
    let mut values = vec![None; vol.len() + horizon];
    for i in 0..vol.len() {
        if let (Some(a0), Some(a1)) = (level.get(i), slope.get(i)) {
            values[i + horizon] = Some(a0 + reach * a1);
        }
    }
    Chronicle::new(
        format!("pred{horizon}({})", vol.label()),
        vol.origin(),
        vol.step(),
        values,
    )
}
