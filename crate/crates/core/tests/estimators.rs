use chronicle::estimators::{
    classical_derivative, decompose, delay_shift, estimate_derivative, estimate_trend, make_config,
    EstimatorConfig,
};
use chronicle::series::{Chronicle, Origin};
use chronicle::synth;
use proptest::prelude::*;

fn chron(values: &[f64], step: f64) -> Chronicle {
    Chronicle::new("x", Origin::Abstract(0.0), step, values.iter().copied().map(Some).collect()).unwrap()
}

fn rms(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (a, b) in pairs {
        s += (a - b).powi(2);
        n += 1;
    }
    (s / n as f64).sqrt()
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1.0)
}

proptest! {
    #[test]
    fn polynomial_exactness(
        c0 in -10.0f64..10.0,
        c1 in -3.0f64..3.0,
        c2 in -0.05f64..0.05,
        degree in 0usize..=2,
        window in prop::sample::select(vec![5usize, 20, 100]),
        centered in any::<bool>(),
        step in prop::sample::select(vec![1.0f64, 0.5]),
    ) {
        let delay = if centered { window / 2 } else { 0 };
        let cfg = EstimatorConfig::new(window, degree, delay, step).unwrap();
        let coef = [c0, if degree >= 1 { c1 } else { 0.0 }, if degree >= 2 { c2 } else { 0.0 }];
        let p = |t: f64| coef[0] + coef[1] * t + coef[2] * t * t;
        let dp = |t: f64| coef[1] + 2.0 * coef[2] * t;
        let n = window + 150;
        let x = chron(&(0..n).map(|i| p(i as f64 * step)).collect::<Vec<_>>(), step);
        let trend = estimate_trend(&x, &cfg).unwrap();
        for i in window - 1..n {
            let t = (i - delay) as f64 * step;
            prop_assert!(close(trend.get(i).unwrap(), p(t), 1e-9));
        }
        if degree >= 1 {
            let d = estimate_derivative(&x, &cfg).unwrap();
            for i in window - 1..n {
                let t = (i - delay) as f64 * step;
                prop_assert!(close(d.get(i).unwrap(), dp(t), 1e-9));
            }
        }
    }

    #[test]
    fn linearity(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        xs in prop::collection::vec(-100.0f64..100.0, 60),
        ys in prop::collection::vec(-100.0f64..100.0, 60),
    ) {
        let cfg = make_config(20, 2, 7).unwrap();
        let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
        let ex = estimate_trend(&chron(&xs, 1.0), &cfg).unwrap();
        let ey = estimate_trend(&chron(&ys, 1.0), &cfg).unwrap();
        let ec = estimate_trend(&chron(&combo, 1.0), &cfg).unwrap();
        for i in 19..60 {
            let want = a * ex.get(i).unwrap() + b * ey.get(i).unwrap();
            prop_assert!((ec.get(i).unwrap() - want).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()) * 100.0);
        }
    }

    #[test]
    fn shift_equivariance(xs in prop::collection::vec(-10.0f64..10.0, 50), shift in 1usize..15) {
        let cfg = make_config(10, 1, 5).unwrap();
        let x = chron(&xs, 1.0);
        let mut shifted_vals = vec![0.0; shift];
        shifted_vals.extend(&xs);
        let xs2 = chron(&shifted_vals, 1.0);
        let a = estimate_trend(&x, &cfg).unwrap();
        let b = estimate_trend(&xs2, &cfg).unwrap();
        for i in 9..50 {
            prop_assert_eq!(a.get(i), b.get(i + shift));
        }
    }

    #[test]
    fn reconstruction(xs in prop::collection::vec(-1e3f64..1e3, 40..120), degree in 0usize..=2) {
        let cfg = make_config(12, degree, 6).unwrap();
        let x = chron(&xs, 1.0);
        let dec = decompose(&x, &cfg).unwrap();
        let shifted = delay_shift(&x, 6);
        for i in 0..xs.len() {
            match (dec.trend.get(i), dec.fluctuation.get(i)) {
                (Some(t), Some(f)) => prop_assert!((t + f - shifted.get(i).unwrap()).abs() <= 1e-12 * 1e3),
                (None, None) => prop_assert!(i < 11),
                _ => prop_assert!(false, "trend and fluctuation disagree on presence at {}", i),
            }
        }
    }
}

#[test]
fn ramp_with_alternating_noise() {
    // Exact filter response to (-1)^k sigma is the weighted alternating sum.
    let sigma = 0.3;
    let n = 400;
    let cfg = EstimatorConfig::centered(100, 1.0).unwrap();
    let alt: Vec<f64> = synth::alternating(n, sigma);
    let values: Vec<f64> = (0..n).map(|i| i as f64 + alt[i]).collect();
    let tr = estimate_trend(&chron(&values, 1.0), &cfg).unwrap();
    let err = rms((99..n).map(|i| (tr.get(i).unwrap(), (i - 50) as f64)));
    let w = cfg.weights(0);
    let response: f64 = w.iter().enumerate().map(|(k, w)| w * if k % 2 == 0 { 1.0 } else { -1.0 }).sum();
    assert!((err - sigma * response.abs()).abs() < 1e-9);
    assert!(err <= sigma / 5.0, "rms {err}");
}

#[test]
fn noise_attenuation_improves_with_window() {
    let n = 600;
    let values: Vec<f64> = (0..n).map(|i| 0.5 * i as f64).collect::<Vec<_>>();
    let noise = synth::alternating_noise(n, 1.0, 9);
    let x = chron(&values.iter().zip(&noise).map(|(a, b)| a + b).collect::<Vec<_>>(), 1.0);
    let mut prev = f64::INFINITY;
    for window in [10, 50, 100] {
        let cfg = EstimatorConfig::centered(window, 1.0).unwrap();
        let tr = estimate_trend(&x, &cfg).unwrap();
        let err = rms((99..n).map(|i| (tr.get(i).unwrap(), 0.5 * (i - window / 2) as f64)));
        assert!(err <= prev * 1.05, "window {window}: {err} vs {prev}");
        prev = err;
    }
}

fn derivative_errors(seed: u64, window: usize, compensate_baseline: bool) -> (f64, f64) {
    let n = 1200;
    let s = synth::noisy_sine(n, 1.0, 200.0, 0.05, seed);
    let x = chron(&s.values, 1.0);
    let cfg = EstimatorConfig::centered(window, 1.0).unwrap();
    let delay = cfg.eval_delay();
    let alg = estimate_derivative(&x, &cfg).unwrap();
    let cls = classical_derivative(&x, 50).unwrap();
    let start = 200;
    let lag = if compensate_baseline { 25.0 } else { 0.0 };
    let e_alg = rms((start..n).map(|i| (alg.get(i).unwrap(), s.derivative((i - delay) as f64))));
    let e_cls = rms((start..n).map(|i| (cls.get(i).unwrap(), s.derivative(i as f64 - lag))));
    (e_alg, e_cls)
}

#[test]
fn algebraic_derivative_beats_classical() {
    for seed in 0..5 {
        let (a, c) = derivative_errors(seed, 100, false);
        assert!(a < c, "seed {seed}: algebraic {a} classical {c}");
    }
}

#[test]
fn shorter_window_beats_even_delay_compensated_baseline() {
    for seed in 0..5 {
        let (a, c) = derivative_errors(seed, 50, true);
        assert!(a < c, "seed {seed}: algebraic {a} compensated classical {c}");
    }
}

#[test]
fn gold_like_fluctuation_has_small_local_mean() {
    let values = synth::gold_like(3000, 5);
    let x = chron(&values, 1.0);
    let dec = decompose(&x, &EstimatorConfig::centered(100, 1.0).unwrap()).unwrap();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    let f = dec.fluctuation.to_nan_vec();
    let first = 99;
    // Direct summation over every 100-step span of the defined residual.
    for start in first..f.len() - 100 {
        let m: f64 = f[start..start + 100].iter().sum::<f64>() / 100.0;
        assert!(m.abs() <= 0.05 * sd, "span at {start}: {m} vs sd {sd}");
    }
}

#[test]
fn constant_series_has_zero_fluctuation() {
    let x = chron(&[4.2; 50], 1.0);
    let dec = decompose(&x, &make_config(10, 1, 5).unwrap()).unwrap();
    assert!(dec.fluctuation.values().iter().flatten().all(|v| v.abs() < 1e-12));
}
