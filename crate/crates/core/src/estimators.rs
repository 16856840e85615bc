//! Sliding-window algebraic estimators: trend E(X), its first derivative, the
//! fast-fluctuation residual, and the classical moving-average baselines.
//!
//! Each window of N samples is fitted by a polynomial of degree d in the
//! least-squares sense. Because the fit is linear in the samples, every
//! coefficient is a fixed weighted sum over the window; the weights are
//! computed once per configuration by solving the (d+1)x(d+1) discrete moment
//! system, which makes them exact on every polynomial of degree <= d.
//!
//! Output convention: the estimate produced from the window ending at index
//! `i` is stored at index `i` and refers to time `i - delay`. The first
//! `window - 1` outputs are missing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indices, Backend};
use crate::series::Chronicle;

pub const MAX_DEGREE: usize = 2;

/// Window geometry plus the precomputed per-coefficient filter weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    window: usize,
    degree: usize,
    eval_delay: usize,
    step: f64,
    /// `weights[j][k]` multiplies the k-th oldest sample to give coefficient j
    /// (units: value / day^j).
    weights: Vec<Vec<f64>>,
}

/// Unit-step configuration.
pub fn make_config(window: usize, degree: usize, eval_delay: usize) -> Result<EstimatorConfig> {
    EstimatorConfig::new(window, degree, eval_delay, 1.0)
}

impl EstimatorConfig {
    pub fn new(window: usize, degree: usize, eval_delay: usize, step: f64) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "degree {degree} unsupported (max {MAX_DEGREE})"
            )));
        }
        if window < degree + 1 {
            return Err(Error::Config(format!(
                "window {window} too short for degree {degree}"
            )));
        }
        if eval_delay >= window {
            return Err(Error::Config(format!(
                "eval delay {eval_delay} must be below window {window}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("step must be positive, got {step}")));
        }
        let weights = moment_weights(window, degree, eval_delay, step)?;
        Ok(Self {
            window,
            degree,
            eval_delay,
            step,
            weights,
        })
    }

    /// Degree-1 fit evaluated at mid-window, the default trend estimator.
    pub fn centered(window: usize, step: f64) -> Result<Self> {
        Self::new(window, 1, window / 2, step)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval_delay(&self) -> usize {
        self.eval_delay
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weights(&self, coefficient: usize) -> &[f64] {
        &self.weights[coefficient]
    }

    /// Same geometry on a different sampling interval.
    pub fn with_step(&self, step: f64) -> Result<Self> {
        Self::new(self.window, self.degree, self.eval_delay, step)
    }

    fn check_grid(&self, x: &Chronicle) -> Result<()> {
        if x.step() != self.step {
            return Err(Error::GridMismatch(format!(
                "estimator built for step {} applied to '{}' with step {}",
                self.step,
                x.label(),
                x.step()
            )));
        }
        Ok(())
    }
}

// Least-squares projection onto 1, u, u^2 with u the scaled offset from the
// evaluation sample, solved in scaled coordinates to keep the Gram matrix
// well conditioned.
fn moment_weights(window: usize, degree: usize, delay: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    let m = degree + 1;
    let eval = (window - 1 - delay) as f64;
    let scale = eval.max((window - 1) as f64 - eval).max(1.0);
    let u: Vec<f64> = (0..window).map(|k| (k as f64 - eval) / scale).collect();

    let mut gram = vec![vec![0.0; m]; m];
    for &uk in &u {
        let mut pows = [1.0; MAX_DEGREE * 2 + 1];
        for p in 1..pows.len() {
            pows[p] = pows[p - 1] * uk;
        }
        for (r, row) in gram.iter_mut().enumerate() {
            for (c, g) in row.iter_mut().enumerate() {
                *g += pows[r + c];
            }
        }
    }
    let inv = invert_small(&gram)
        .ok_or_else(|| Error::Config(format!("singular moment system for window {window}")))?;

    let mut weights = vec![vec![0.0; window]; m];
    for (j, row) in weights.iter_mut().enumerate() {
        let unit = (scale * step).powi(j as i32);
        for (k, w) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut p = 1.0;
            for inv_jc in &inv[j] {
                acc += inv_jc * p;
                p *= u[k];
            }
            *w = acc / unit;
        }
    }
    Ok(weights)
}

// Gauss-Jordan with partial pivoting; m <= 3.
fn invert_small(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..m {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let pivot = aug[col].clone();
                    for (v, pv) in aug[r].iter_mut().zip(&pivot) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[m..].to_vec()).collect())
}

/// Polynomial coefficients of one window, at the delayed evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFit {
    /// a_0 (value), a_1 (value/day), a_2 (value/day^2), up to the degree.
    pub coefficients: Vec<f64>,
    pub window_end_index: usize,
}

/// Fits one full window (oldest sample first).
pub fn fit_window(samples: &[f64], config: &EstimatorConfig) -> Result<LocalFit> {
    if samples.len() != config.window {
        return Err(Error::LengthMismatch {
            expected: config.window,
            got: samples.len(),
        });
    }
    let coefficients = config
        .weights
        .iter()
        .map(|w| dot(w, samples))
        .collect();
    Ok(LocalFit {
        coefficients,
        window_end_index: samples.len() - 1,
    })
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Applies an arbitrary causal FIR (oldest tap first) wherever its window is
/// fully observed.
pub(crate) fn apply_filter(x: &[Option<f64>], taps: &[f64], backend: Backend) -> Vec<Option<f64>> {
    let n = x.len();
    let len = taps.len();
    if len == 0 || n < len {
        return vec![None; n];
    }
    // missing[i] = number of missing samples in x[..i]
    let mut missing = Vec::with_capacity(n + 1);
    missing.push(0usize);
    for v in x {
        missing.push(missing.last().unwrap() + usize::from(v.is_none()));
    }
    let dense: Vec<f64> = x.iter().map(|v| v.unwrap_or(0.0)).collect();
    map_indices(backend, n, |i| {
        if i + 1 < len {
            return None;
        }
        let lo = i + 1 - len;
        if missing[i + 1] != missing[lo] {
            return None;
        }
        Some(dot(taps, &dense[lo..=i]))
    })
}

fn require_window(x: &Chronicle, window: usize) -> Result<()> {
    let mut run = 0usize;
    let mut best = 0usize;
    for v in x.values() {
        run = if v.is_some() { run + 1 } else { 0 };
        best = best.max(run);
    }
    if best < window {
        return Err(Error::Size {
            needed: window,
            available: best,
        });
    }
    Ok(())
}

fn coefficient_series(
    x: &Chronicle,
    config: &EstimatorConfig,
    coefficient: usize,
    label: String,
    backend: Backend,
) -> Result<Chronicle> {
    config.check_grid(x)?;
    require_window(x, config.window)?;
    Ok(x.with_values(label, apply_filter(x.values(), &config.weights[coefficient], backend)))
}

/// Trend E(X): fitted value at the delayed point of every trailing window.
pub fn estimate_trend(x: &Chronicle, config: &EstimatorConfig) -> Result<Chronicle> {
    estimate_trend_with(x, config, Backend::default())
}

pub fn estimate_trend_with(x: &Chronicle, config: &EstimatorConfig, backend: Backend) -> Result<Chronicle> {
    coefficient_series(x, config, 0, format!("trend({})", x.label()), backend)
}

/// First derivative (value/day) at the delayed point of every trailing window.
pub fn estimate_derivative(x: &Chronicle, config: &EstimatorConfig) -> Result<Chronicle> {
    estimate_derivative_with(x, config, Backend::default())
}

pub fn estimate_derivative_with(
    x: &Chronicle,
    config: &EstimatorConfig,
    backend: Backend,
) -> Result<Chronicle> {
    if config.degree < 1 {
        return Err(Error::Config("derivative needs degree >= 1".into()));
    }
    coefficient_series(x, config, 1, format!("d/dt({})", x.label()), backend)
}

/// Trailing unweighted mean.
pub fn moving_average(x: &Chronicle, window: usize) -> Result<Chronicle> {
    if window < 1 {
        return Err(Error::Config("moving average window must be >= 1".into()));
    }
    let taps = vec![1.0 / window as f64; window];
    Ok(x.with_values(
        format!("ma{window}({})", x.label()),
        apply_filter(x.values(), &taps, Backend::default()),
    ))
}

/// The technical-analysis derivative: trailing moving average followed by a
/// one-step backward difference, in value/day.
pub fn classical_derivative(x: &Chronicle, ma_window: usize) -> Result<Chronicle> {
    let ma = moving_average(x, ma_window)?;
    let step = x.step();
    let values = ma.values();
    let out = (0..values.len())
        .map(|i| match (i.checked_sub(1).and_then(|j| values[j]), values[i]) {
            (Some(prev), Some(cur)) => Some((cur - prev) / step),
            _ => None,
        })
        .collect();
    Ok(x.with_values(format!("fd(ma{ma_window}({}))", x.label()), out))
}

/// Input delayed by `delay` samples: `out[i] = x[i - delay]`.
pub fn delay_shift(x: &Chronicle, delay: usize) -> Chronicle {
    let values = (0..x.len())
        .map(|i| i.checked_sub(delay).and_then(|j| x.get(j)))
        .collect();
    x.with_values(x.label().to_string(), values)
}

/// X = E(X) + X_fluctuation on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Chronicle,
    pub fluctuation: Chronicle,
    pub config: EstimatorConfig,
}

pub fn decompose(x: &Chronicle, config: &EstimatorConfig) -> Result<Decomposition> {
    decompose_with(x, config, Backend::default())
}

pub fn decompose_with(x: &Chronicle, config: &EstimatorConfig, backend: Backend) -> Result<Decomposition> {
    let trend = estimate_trend_with(x, config, backend)?;
    let shifted = delay_shift(x, config.eval_delay);
    let fluctuation = shifted
        .values()
        .iter()
        .zip(trend.values())
        .map(|(s, t)| match (s, t) {
            (Some(s), Some(t)) => Some(s - t),
            _ => None,
        })
        .collect();
    Ok(Decomposition {
        fluctuation: x.with_values(format!("fluct({})", x.label()), fluctuation),
        trend,
        config: config.clone(),
    })
}

/// Decomposes many series at once, in parallel across series.
pub fn decompose_many(
    series: &[Chronicle],
    config: &EstimatorConfig,
    backend: Backend,
) -> Vec<Result<Decomposition>> {
    crate::exec::map_indices_min(backend, series.len(), 2, |i| {
        decompose_with(&series[i], config, Backend::Sequential)
    })
}
