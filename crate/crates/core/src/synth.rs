//! Seeded synthetic fixtures: ramps, noisy sines, gold-like price paths and
//! multi-asset panels. Every generator is deterministic in its seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::Result;
use crate::series::AlignedPanel;
use crate::stats::TRADING_DAYS_PER_YEAR;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn constant(n: usize, value: f64) -> Vec<f64> {
    vec![value; n]
}

pub fn ramp(n: usize, intercept: f64, slope: f64) -> Vec<f64> {
    (0..n).map(|i| intercept + slope * i as f64).collect()
}

/// +amplitude, -amplitude, +amplitude, ...
pub fn alternating(n: usize, amplitude: f64) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 0 { amplitude } else { -amplitude }).collect()
}

pub fn exponential(n: usize, start: f64, rate: f64) -> Vec<f64> {
    (0..n).map(|i| start * (rate * i as f64).exp()).collect()
}

/// Alternating-sign noise with seeded magnitudes in (0, amplitude].
pub fn alternating_noise(n: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let m: f64 = 1.0 - r.random::<f64>();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * amplitude * m
        })
        .collect()
}

/// A sine plus alternating noise, with its analytic derivative.
#[derive(Debug, Clone)]
pub struct NoisySine {
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
    pub values: Vec<f64>,
}

impl NoisySine {
    pub fn clean(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * t / self.period + self.phase).sin()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        self.amplitude * w * (w * t + self.phase).cos()
    }
}

/// Sine of the given period (in samples, unit step) with a seeded phase plus
/// alternating noise bounded by `noise`.
pub fn noisy_sine(n: usize, amplitude: f64, period: f64, noise: f64, seed: u64) -> NoisySine {
    let phase = rng(seed ^ 0x5eed).random::<f64>() * 2.0 * PI;
    let eps = alternating_noise(n, noise, seed);
    let mut s = NoisySine {
        amplitude,
        period,
        phase,
        values: Vec::new(),
    };
    s.values = (0..n).map(|i| s.clean(i as f64) + eps[i]).collect();
    s
}

/// Long-run exponential growth with a slow cycle and alternating day-to-day
/// noise, loosely shaped like a daily gold price.
pub fn gold_like(n: usize, seed: u64) -> Vec<f64> {
    let eps = alternating_noise(n, 4.0, seed);
    let mut r = rng(seed.wrapping_add(1));
    let jitter = Normal::new(0.0, 1.0).expect("valid normal");
    (0..n)
        .map(|i| {
            let t = i as f64;
            350.0 * (0.00025 * t).exp() + 25.0 * (2.0 * PI * t / 480.0).sin() + eps[i] + r.sample(jitter)
        })
        .collect()
}

/// Geometric random walk with the given annual drift and volatility.
pub fn geometric_walk(n: usize, start: f64, drift_per_year: f64, vol_per_year: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mu = drift_per_year / TRADING_DAYS_PER_YEAR;
    let sigma = vol_per_year / TRADING_DAYS_PER_YEAR.sqrt();
    let shock = Normal::new(0.0, sigma).expect("valid normal");
    let mut log_p = start.ln();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            log_p += mu + r.sample(shock);
        }
        out.push(log_p.exp());
    }
    out
}

/// Price whose one-step log return alternates around `mean` with spread
/// `spread(i)`, so its volatility is the spread itself.
pub fn alternating_returns(n: usize, start: f64, mean: f64, spread: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut p = start;
    for i in 0..n {
        if i > 0 {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            p *= (mean + sign * spread(i)).exp();
        }
        out.push(p);
    }
    out
}

/// Two assets sharing one noise path; "A" carries the higher drift.
pub fn dominance_pair(
    n: usize,
    drift_a_per_year: f64,
    drift_b_per_year: f64,
    vol_per_year: f64,
    seed: u64,
) -> Result<AlignedPanel> {
    let noise = geometric_walk(n, 1.0, 0.0, vol_per_year, seed);
    let grow = |drift: f64| -> Vec<f64> {
        noise
            .iter()
            .enumerate()
            .map(|(i, z)| 100.0 * z * (drift / TRADING_DAYS_PER_YEAR * i as f64).exp())
            .collect()
    };
    AlignedPanel::from_columns(
        vec!["A".into(), "B".into()],
        vec![grow(drift_a_per_year), grow(drift_b_per_year)],
    )
}

/// Independent geometric walks with seeded drifts in [-0.05, 0.20]/yr and
/// volatilities in [0.10, 0.35]/yr.
pub fn random_panel(n: usize, legs: usize, seed: u64) -> Result<AlignedPanel> {
    let mut r = rng(seed);
    let mut labels = Vec::with_capacity(legs);
    let mut columns = Vec::with_capacity(legs);
    for j in 0..legs {
        let drift = -0.05 + 0.25 * r.random::<f64>();
        let vol = 0.10 + 0.25 * r.random::<f64>();
        let start = 20.0 + 180.0 * r.random::<f64>();
        labels.push(format!("L{j}"));
        columns.push(geometric_walk(n, start, drift, vol, r.random()));
    }
    AlignedPanel::from_columns(labels, columns)
}
