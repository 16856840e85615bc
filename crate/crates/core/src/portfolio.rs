//! Multi-leg portfolio state, the Sharpe objective as a function of holdings,
//! its finite-difference partials, the no-leverage rebalancing rule and the
//! backtest loop.
//!
//! A leg is one (asset, strategy) pair with its own price series; strategies
//! are simply more columns of the price panel.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::exec::{map_indices_min, Backend};
use crate::series::{format_value, AlignedPanel, Chronicle, Origin};
use crate::stats::{sharpe_ratio, MomentConfig, TRADING_DAYS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Leg {
    pub asset: usize,
    pub strategy: usize,
}

/// Holdings x_i^j >= 0 and current prices P_i^j, one entry per leg.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioState {
    pub legs: Vec<Leg>,
    pub holdings: Vec<f64>,
    pub prices: Vec<f64>,
    pub time_index: usize,
}

impl PortfolioState {
    /// One leg per entry, numbered as assets with a single strategy.
    pub fn new(holdings: Vec<f64>, prices: Vec<f64>, time_index: usize) -> Result<Self> {
        let legs = (0..holdings.len())
            .map(|asset| Leg { asset, strategy: 0 })
            .collect();
        Self::with_legs(legs, holdings, prices, time_index)
    }

    pub fn with_legs(legs: Vec<Leg>, holdings: Vec<f64>, prices: Vec<f64>, time_index: usize) -> Result<Self> {
        for len in [holdings.len(), prices.len()] {
            if len != legs.len() {
                return Err(Error::LengthMismatch {
                    expected: legs.len(),
                    got: len,
                });
            }
        }
        if let Some(i) = holdings.iter().position(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain {
                index: i,
                message: format!("holding {} must be finite and >= 0", holdings[i]),
            });
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Domain {
                index: i,
                message: format!("price {} must be positive", prices[i]),
            });
        }
        Ok(Self {
            legs,
            holdings,
            prices,
            time_index,
        })
    }

    pub fn value(&self) -> f64 {
        value_of(&self.holdings, &self.prices)
    }

    /// Fraction of portfolio value held in each leg.
    pub fn value_weights(&self) -> Vec<f64> {
        let v = self.value();
        self.holdings
            .iter()
            .zip(&self.prices)
            .map(|(x, p)| x * p / v)
            .collect()
    }
}

fn value_of(holdings: &[f64], prices: &[f64]) -> f64 {
    holdings.iter().zip(prices).map(|(x, p)| x * p).sum()
}

/// P = sum_i x_i P_i.
pub fn portfolio_value(state: &PortfolioState) -> Result<f64> {
    if state.holdings.len() != state.prices.len() {
        return Err(Error::LengthMismatch {
            expected: state.holdings.len(),
            got: state.prices.len(),
        });
    }
    Ok(state.value())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RebalancePolicy {
    /// Samples between rebalances; holdings are constant in between.
    pub delta_t: usize,
    /// Log-return horizon of the Sharpe objective, in samples.
    pub return_horizon: usize,
    /// Total traded value per rebalance, as a fraction of portfolio value.
    pub eta: f64,
    /// Finite-difference perturbation, as a fraction of portfolio value.
    pub epsilon: f64,
    /// Value-relative sensitivities below this are treated as zero.
    pub grad_tol: f64,
    /// Trailing samples of the synthetic portfolio series fed to the objective.
    pub sharpe_window: usize,
    pub moment_cfg: MomentConfig,
}

impl Default for RebalancePolicy {
    fn default() -> Self {
        let estimator = EstimatorConfig::centered(100, 1.0).expect("valid default estimator");
        Self {
            delta_t: 20,
            return_horizon: 20,
            eta: 0.05,
            epsilon: 0.01,
            grad_tol: 1e-3,
            sharpe_window: 250,
            moment_cfg: MomentConfig::new(estimator),
        }
    }
}

impl RebalancePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.delta_t == 0 || self.return_horizon == 0 {
            return Err(Error::Config("rebalance interval and return horizon must be >= 1".into()));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be >= 0, got {}", self.eta)));
        }
        for (name, v) in [("epsilon", self.epsilon), ("grad_tol", self.grad_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let need = self.moment_cfg.estimator.window() + self.return_horizon;
        if self.sharpe_window < need {
            return Err(Error::Config(format!(
                "sharpe window {} must cover the moment window plus the return horizon ({need})",
                self.sharpe_window
            )));
        }
        Ok(())
    }

    fn check_panel(&self, panel: &AlignedPanel) -> Result<()> {
        if self.moment_cfg.estimator.step() != panel.step() {
            return Err(Error::GridMismatch(format!(
                "moment estimator step {} differs from panel step {}",
                self.moment_cfg.estimator.step(),
                panel.step()
            )));
        }
        Ok(())
    }
}

/// Sharpe ratio at `t` of the portfolio series sum_i x_i P_i(s) over the
/// trailing window, with the holdings held fixed.
pub fn sharpe_objective(
    weights: &[f64],
    panel: &AlignedPanel,
    t: usize,
    policy: &RebalancePolicy,
) -> Result<f64> {
    if weights.len() != panel.width() {
        return Err(Error::LengthMismatch {
            expected: panel.width(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().all(|w| *w == 0.0) {
        return Err(Error::Degenerate("holdings must be >= 0 and not all zero".into()));
    }
    let window = policy.sharpe_window;
    if t >= panel.len() || t + 1 < window {
        return Err(Error::Degenerate(format!(
            "index {t} leaves no full {window}-sample window"
        )));
    }
    let start = t + 1 - window;
    let values: Vec<Option<f64>> = (start..=t)
        .map(|s| {
            let v: f64 = weights
                .iter()
                .zip(panel.columns())
                .map(|(x, col)| x * col[s])
                .sum();
            Some(v)
        })
        .collect();
    let series = Chronicle::new("portfolio", Origin::Abstract(0.0), panel.step(), values)?;
    let sr = sharpe_ratio(&series, policy.return_horizon, &policy.moment_cfg)?;
    sr.get(window - 1)
        .ok_or_else(|| Error::Degenerate(format!("Sharpe ratio undefined at index {t}")))
}

/// dy/dx_i per leg, and which legs fell back to a forward difference because
/// the backward perturbation would have made the holding negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partials {
    pub gradient: Vec<f64>,
    pub one_sided: Vec<bool>,
}

pub fn sharpe_partials(state: &PortfolioState, panel: &AlignedPanel, policy: &RebalancePolicy) -> Result<Partials> {
    sharpe_partials_with(state, panel, policy, Backend::default())
}

pub fn sharpe_partials_with(
    state: &PortfolioState,
    panel: &AlignedPanel,
    policy: &RebalancePolicy,
    backend: Backend,
) -> Result<Partials> {
    policy.check_panel(panel)?;
    let t = state.time_index;
    let x = &state.holdings;
    let value = state.value();
    let steps: Vec<f64> = state.prices.iter().map(|p| policy.epsilon * value / p).collect();
    let one_sided: Vec<bool> = x.iter().zip(&steps).map(|(xi, h)| !(xi > h)).collect();
    let base = if one_sided.iter().any(|b| *b) {
        Some(sharpe_objective(x, panel, t, policy)?)
    } else {
        None
    };
    let eval = |i: usize| -> Result<f64> {
        let h = steps[i];
        let mut bumped = x.clone();
        bumped[i] = x[i] + h;
        let up = sharpe_objective(&bumped, panel, t, policy)?;
        if one_sided[i] {
            return Ok((up - base.expect("computed above")) / h);
        }
        bumped[i] = x[i] - h;
        let down = sharpe_objective(&bumped, panel, t, policy)?;
        Ok((up - down) / (2.0 * h))
    };
    let gradient = map_indices_min(backend, x.len(), 2, eval)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Partials {
        gradient,
        one_sided,
    })
}

/// Why a rebalance left the holdings untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoTrade {
    ZeroStep,
    AllFrozen,
    SingleActiveLeg,
    FlatGradient,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rebalance {
    pub state: PortfolioState,
    /// dx_i per leg.
    pub trades: Vec<f64>,
    /// Legs that traded (including legs sold out by clipping).
    pub active: Vec<bool>,
    /// Final Lagrange level in value-relative units.
    pub lambda: f64,
    pub no_trade: Option<NoTrade>,
}

impl Rebalance {
    fn unchanged(state: &PortfolioState, reason: NoTrade) -> Self {
        Rebalance {
            state: state.clone(),
            trades: vec![0.0; state.holdings.len()],
            active: vec![false; state.holdings.len()],
            lambda: 0.0,
            no_trade: Some(reason),
        }
    }
}

/// Value-relative sensitivity dy/dw_i with w_i = x_i P_i / V.
pub fn value_sensitivities(state: &PortfolioState, gradient: &[f64]) -> Vec<f64> {
    let v = state.value();
    gradient.iter().zip(&state.prices).map(|(g, p)| g * v / p).collect()
}

/// One self-financing move along the projected Sharpe gradient.
///
/// With s_i = dy/dw_i, the traded value of each active leg is
/// u_i = kappa (s_i - lambda), where lambda is the mean sensitivity over the
/// active legs (so sum_i P_i dx_i = 0) and kappa scales total traded value to
/// eta * V. Legs with |s_i| < grad_tol stay put unless every other leg has a
/// negative sensitivity. A leg that would go short is sold out instead and its
/// proceeds are spread over the remaining active legs by lowering lambda.
pub fn rebalance_step(state: &PortfolioState, gradient: &[f64], policy: &RebalancePolicy) -> Result<Rebalance> {
    let n = state.holdings.len();
    if gradient.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: gradient.len(),
        });
    }
    if let Some(i) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::Domain {
            index: i,
            message: "non-finite partial derivative".into(),
        });
    }
    if policy.eta == 0.0 {
        return Ok(Rebalance::unchanged(state, NoTrade::ZeroStep));
    }
    let value = state.value();
    if !(value > 0.0) {
        return Ok(Rebalance::unchanged(state, NoTrade::Infeasible));
    }
    let sens = value_sensitivities(state, gradient);
    let frozen: Vec<bool> = sens.iter().map(|s| s.abs() < policy.grad_tol).collect();
    let unfrozen: Vec<usize> = (0..n).filter(|&i| !frozen[i]).collect();
    if unfrozen.is_empty() {
        return Ok(Rebalance::unchanged(state, NoTrade::AllFrozen));
    }
    let all_negative = unfrozen.iter().all(|&i| sens[i] < 0.0);
    let mut active: Vec<usize> = if all_negative && unfrozen.len() < n {
        (0..n).collect()
    } else {
        unfrozen
    };
    if active.len() < 2 {
        return Ok(Rebalance::unchanged(state, NoTrade::SingleActiveLeg));
    }

    let mean = |set: &[usize]| set.iter().map(|&i| sens[i]).sum::<f64>() / set.len() as f64;
    let lambda0 = mean(&active);
    let spread: f64 = active.iter().map(|&i| (sens[i] - lambda0).abs()).sum();
    if !(spread > 0.0) {
        return Ok(Rebalance::unchanged(state, NoTrade::FlatGradient));
    }
    let kappa = policy.eta * value / spread;

    let mut sold_out: Vec<usize> = Vec::new();
    let mut proceeds = 0.0;
    let lambda = loop {
        if active.is_empty() {
            return Ok(Rebalance::unchanged(state, NoTrade::Infeasible));
        }
        let lambda = mean(&active) - proceeds / (kappa * active.len() as f64);
        let (short, keep): (Vec<usize>, Vec<usize>) = active.iter().partition(|&&i| {
            let dx = kappa * (sens[i] - lambda) / state.prices[i];
            state.holdings[i] + dx < 0.0
        });
        if short.is_empty() {
            break lambda;
        }
        for &i in &short {
            proceeds += state.holdings[i] * state.prices[i];
        }
        sold_out.extend(short);
        active = keep;
    };

    let mut trades = vec![0.0; n];
    let mut holdings = state.holdings.clone();
    let mut traded = vec![false; n];
    for &i in &active {
        let dx = kappa * (sens[i] - lambda) / state.prices[i];
        trades[i] = dx;
        holdings[i] = (state.holdings[i] + dx).max(0.0);
        traded[i] = true;
    }
    for &i in &sold_out {
        trades[i] = -state.holdings[i];
        holdings[i] = 0.0;
        traded[i] = true;
    }
    Ok(Rebalance {
        state: PortfolioState {
            legs: state.legs.clone(),
            holdings,
            prices: state.prices.clone(),
            time_index: state.time_index,
        },
        trades,
        active: traded,
        lambda,
        no_trade: None,
    })
}

/// max_t 1 - E(t) / max_{s<=t} E(s).
pub fn max_drawdown(equity: &Chronicle) -> Result<f64> {
    if equity.is_empty() {
        return Err(Error::Size {
            needed: 1,
            available: 0,
        });
    }
    let values = equity.dense()?;
    max_drawdown_of(&values)
}

pub fn max_drawdown_of(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Size {
            needed: 1,
            available: 0,
        });
    }
    if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain {
            index: i,
            message: "equity must be positive".into(),
        });
    }
    let mut peak = values[0];
    let mut worst: f64 = 0.0;
    for &v in values {
        peak = peak.max(v);
        worst = worst.max(1.0 - v / peak);
    }
    Ok(worst)
}

/// Compound annual growth rate of an equity curve sampled every `step` days.
pub fn annualized_return(values: &[f64], step: f64) -> Option<f64> {
    let (first, last) = (*values.first()?, *values.last()?);
    if values.len() < 2 || !(first > 0.0) || !(last > 0.0) {
        return None;
    }
    let years = (values.len() - 1) as f64 * step / TRADING_DAYS_PER_YEAR;
    Some((last / first).powf(1.0 / years) - 1.0)
}

/// Mean over sample deviation of per-step log returns, scaled to one year.
pub fn annualized_sharpe(values: &[f64], step: f64) -> Option<f64> {
    if values.len() < 3 || values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let rets: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = rets.len() as f64;
    let mean = rets.iter().sum::<f64>() / n;
    let var = rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return None;
    }
    Some(mean / sd * (TRADING_DAYS_PER_YEAR / step).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub annualized_return: Option<f64>,
    pub annualized_sharpe: Option<f64>,
    pub max_drawdown: f64,
}

impl Metrics {
    pub fn of(values: &[f64], step: f64) -> Result<Self> {
        Ok(Self {
            annualized_return: annualized_return(values, step),
            annualized_sharpe: annualized_sharpe(values, step),
            max_drawdown: max_drawdown_of(values)?,
        })
    }

    fn to_json(self) -> Value {
        json!({
            "annualized_return": self.annualized_return,
            "annualized_sharpe": self.annualized_sharpe,
            "max_drawdown": self.max_drawdown,
        })
    }
}

/// Portfolio value just before and just after one rebalance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RebalanceRecord {
    pub time_index: usize,
    pub value_before: f64,
    pub value_after: f64,
    pub traded: bool,
    pub one_sided_legs: usize,
}

#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub labels: Vec<String>,
    pub equity: Chronicle,
    /// Holdings per leg after any rebalance at each grid index.
    pub weights_history: Vec<Vec<f64>>,
    pub annualized_return: Option<f64>,
    pub annualized_sharpe: Option<f64>,
    pub max_drawdown: f64,
    pub baseline_equity: Chronicle,
    pub baseline_metrics: Metrics,
    pub rebalances: Vec<RebalanceRecord>,
    /// Rebalance dates skipped because the objective was undefined.
    pub skipped: usize,
}

impl BacktestReport {
    pub fn metrics(&self) -> Metrics {
        Metrics {
            annualized_return: self.annualized_return,
            annualized_sharpe: self.annualized_sharpe,
            max_drawdown: self.max_drawdown,
        }
    }

    /// Value fraction per leg at grid index `t`, using the panel prices.
    pub fn value_weights(&self, panel: &AlignedPanel, t: usize) -> Vec<f64> {
        let prices = panel.row(t);
        let x = &self.weights_history[t];
        let v = value_of(x, &prices);
        x.iter().zip(&prices).map(|(x, p)| x * p / v).collect()
    }

    /// `time,equity,baseline_equity,x_<label>...`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Format(format!("csv write failed: {e}"));
        let mut header = vec!["time".to_string(), "equity".into(), "baseline_equity".into()];
        header.extend(self.labels.iter().map(|l| format!("x_{l}")));
        w.write_record(&header).map_err(csv_err)?;
        for t in 0..self.equity.len() {
            let mut rec = vec![
                self.equity.time_label(t),
                format_value(self.equity.get(t)),
                format_value(self.baseline_equity.get(t)),
            ];
            rec.extend(self.weights_history[t].iter().map(|x| format!("{x}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn metrics_json(&self) -> Value {
        json!({
            "metrics": self.metrics().to_json(),
            "baseline_metrics": self.baseline_metrics.to_json(),
            "rebalances": self.rebalances.len(),
            "skipped_rebalances": self.skipped,
        })
    }

    /// Scalars plus every history as arrays.
    pub fn to_json(&self) -> Value {
        let mut holdings = Map::new();
        for (j, label) in self.labels.iter().enumerate() {
            let col: Vec<f64> = self.weights_history.iter().map(|row| row[j]).collect();
            holdings.insert(label.clone(), json!(col));
        }
        let mut obj = self.metrics_json();
        let m = obj.as_object_mut().expect("object");
        m.insert(
            "time".into(),
            json!((0..self.equity.len()).map(|t| self.equity.time_label(t)).collect::<Vec<_>>()),
        );
        m.insert("labels".into(), json!(self.labels));
        m.insert("equity".into(), json!(self.equity.values()));
        m.insert("baseline_equity".into(), json!(self.baseline_equity.values()));
        m.insert("holdings".into(), Value::Object(holdings));
        m.insert("rebalance_log".into(), json!(self.rebalances));
        obj
    }
}

struct Simulation {
    equity: Vec<f64>,
    holdings: Vec<Vec<f64>>,
    rebalances: Vec<RebalanceRecord>,
    skipped: usize,
}

fn first_rebalance(policy: &RebalancePolicy) -> usize {
    let earliest = (policy.sharpe_window - 1).max(policy.delta_t);
    earliest.div_ceil(policy.delta_t) * policy.delta_t
}

fn simulate(
    panel: &AlignedPanel,
    policy: &RebalancePolicy,
    initial_capital: f64,
    backend: Backend,
) -> Result<Simulation> {
    let width = panel.width();
    let p0 = panel.row(0);
    let mut x: Vec<f64> = p0
        .iter()
        .map(|p| initial_capital / (width as f64 * p))
        .collect();
    let legs: Vec<Leg> = (0..width).map(|asset| Leg { asset, strategy: 0 }).collect();
    let start = first_rebalance(policy);

    let mut equity = Vec::with_capacity(panel.len());
    let mut holdings = Vec::with_capacity(panel.len());
    let mut rebalances = Vec::new();
    let mut skipped = 0;
    for t in 0..panel.len() {
        let prices = panel.row(t);
        let value = value_of(&x, &prices);
        equity.push(value);
        if policy.eta > 0.0 && t >= start && t % policy.delta_t == 0 {
            let state = PortfolioState::with_legs(legs.clone(), x.clone(), prices, t)?;
            match sharpe_partials_with(&state, panel, policy, backend) {
                Ok(partials) => {
                    let step = rebalance_step(&state, &partials.gradient, policy)?;
                    let after = step.state.value();
                    rebalances.push(RebalanceRecord {
                        time_index: t,
                        value_before: value,
                        value_after: after,
                        traded: step.no_trade.is_none(),
                        one_sided_legs: partials.one_sided.iter().filter(|b| **b).count(),
                    });
                    x = step.state.holdings;
                }
                Err(Error::Degenerate(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        holdings.push(x.clone());
    }
    Ok(Simulation {
        equity,
        holdings,
        rebalances,
        skipped,
    })
}

/// Equal-value start, rebalance every `delta_t` samples once the trailing
/// Sharpe window is available, hold in between. The static equal-weight
/// portfolio (eta = 0) runs on the same data as the baseline.
pub fn run_backtest(panel: &AlignedPanel, policy: &RebalancePolicy, initial_capital: f64) -> Result<BacktestReport> {
    run_backtest_with(panel, policy, initial_capital, Backend::default())
}

pub fn run_backtest_with(
    panel: &AlignedPanel,
    policy: &RebalancePolicy,
    initial_capital: f64,
    backend: Backend,
) -> Result<BacktestReport> {
    policy.validate()?;
    policy.check_panel(panel)?;
    if !(initial_capital > 0.0 && initial_capital.is_finite()) {
        return Err(Error::Config(format!(
            "initial capital must be positive, got {initial_capital}"
        )));
    }
    for (j, col) in panel.columns().iter().enumerate() {
        if let Some(i) = col.iter().position(|p| !(*p > 0.0)) {
            return Err(Error::Domain {
                index: i,
                message: format!("price of '{}' must be positive", panel.labels()[j]),
            });
        }
    }
    let first = first_rebalance(policy);
    if first + 1 >= panel.len() {
        return Err(Error::Size {
            needed: first + 2,
            available: panel.len(),
        });
    }

    let dynamic = simulate(panel, policy, initial_capital, backend)?;
    let static_policy = RebalancePolicy {
        eta: 0.0,
        ..policy.clone()
    };
    let baseline = simulate(panel, &static_policy, initial_capital, backend)?;

    let step = panel.step();
    let metrics = Metrics::of(&dynamic.equity, step)?;
    let baseline_metrics = Metrics::of(&baseline.equity, step)?;
    let to_chronicle = |label: &str, v: &[f64]| panel.grid_chronicle(label, v.iter().copied().map(Some).collect());

    Ok(BacktestReport {
        labels: panel.labels().to_vec(),
        equity: to_chronicle("equity", &dynamic.equity),
        weights_history: dynamic.holdings,
        annualized_return: metrics.annualized_return,
        annualized_sharpe: metrics.annualized_sharpe,
        max_drawdown: metrics.max_drawdown,
        baseline_equity: to_chronicle("baseline_equity", &baseline.equity),
        baseline_metrics,
        rebalances: dynamic.rebalances,
        skipped: dynamic.skipped,
    })
}
