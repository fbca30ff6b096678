//! Continuous-time model with a linear payoff rate: closed-form decoupling
//! field, exact path sampling of the gross-equity SDE, expected-equity and
//! debt-value formulas, and the discretization bridge into the discrete
//! engine.

use crate::model::{ContractSchedule, PayoffSpec};
use crate::rng::SubstreamRng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContinuousError {
    #[error("time must lie in [0, T]")]
    TimeOutOfRange,
    #[error("interval must satisfy 0 <= a <= b <= T")]
    BadInterval,
    #[error("model requires gamma > 0, T > 0, sigma >= 0, X_0 >= 0")]
    InvalidModel,
}

/// Continuous payoff at rate `gamma * y^+` per unit time over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRateModel {
    pub gamma: f64,
    pub horizon: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl LinearRateModel {
    pub fn new(gamma: f64, horizon: f64, sigma: f64, x0: f64) -> Result<Self, ContinuousError> {
        if !(gamma > 0.0 && gamma.is_finite())
            || !(horizon > 0.0 && horizon.is_finite())
            || !(sigma >= 0.0 && sigma.is_finite())
            || !(x0 >= 0.0 && x0.is_finite())
        {
            return Err(ContinuousError::InvalidModel);
        }
        Ok(Self { gamma, horizon, sigma, x0 })
    }
}

/// Decoupling field `u(t, x)`: net equity as a function of time and gross
/// equity. `x / (1 + gamma (T - t))` for `x >= 0`, and `x` itself for
/// `x <= 0`.
pub fn decoupling_linear(t: f64, x: f64, model: &LinearRateModel) -> Result<f64, ContinuousError> {
    if !(t >= 0.0 && t <= model.horizon) {
        return Err(ContinuousError::TimeOutOfRange);
    }
    if x <= 0.0 {
        return Ok(x);
    }
    Ok(x / (1.0 + model.gamma * (model.horizon - t)))
}

/// Bounds `[q, 1]` on the spatial gradient of the decoupling field, with
/// `q = exp(-T gamma)`.
pub fn gradient_bounds(model: &LinearRateModel) -> (f64, f64) {
    ((-model.horizon * model.gamma).exp(), 1.0)
}

/// `E[X_s] = X_0 e^{mu s} (1 + gamma (T - s)) / (1 + gamma T)`, the solution
/// of the linear ODE the mean gross equity satisfies. Volatility does not
/// enter.
pub fn expected_gross_equity(
    s: f64,
    mu: f64,
    model: &LinearRateModel,
) -> Result<f64, ContinuousError> {
    if !(s >= 0.0 && s <= model.horizon) {
        return Err(ContinuousError::TimeOutOfRange);
    }
    let t = model.horizon;
    Ok(model.x0 * (mu * s).exp() * (1.0 + model.gamma * (t - s)) / (1.0 + model.gamma * t))
}

/// Value of the debt maturing over `[a, b]`:
/// `gamma X_0 / (1 + gamma T) * integral of e^{mu s} over [a, b]`.
pub fn ebdo_value_interval(
    a: f64,
    b: f64,
    mu: f64,
    model: &LinearRateModel,
) -> Result<f64, ContinuousError> {
    if !(a >= 0.0 && a <= b && b <= model.horizon) {
        return Err(ContinuousError::BadInterval);
    }
    let front = model.gamma * model.x0 / (1.0 + model.gamma * model.horizon);
    let integral = if mu.abs() < 1e-12 {
        // Series around mu = 0 to avoid 0/0.
        (b - a) * (1.0 + 0.5 * mu * (a + b))
    } else {
        ((mu * b).exp() - (mu * a).exp()) / mu
    };
    Ok(front * integral)
}

/// Exact strong solution of the gross-equity SDE sampled at the given times:
/// `X_s = X_0 e^{(mu - sigma^2/2) s} ((1 + gamma (T - s)) / (1 + gamma T)) e^{sigma W_s}`,
/// with `W` built from independent Gaussian increments. No discretization
/// error.
pub fn sample_path_exact(
    model: &LinearRateModel,
    mu: f64,
    times: &[f64],
    rng: &mut SubstreamRng,
) -> Result<Vec<f64>, ContinuousError> {
    let t_horizon = model.horizon;
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev && t <= t_horizon) {
            return Err(ContinuousError::TimeOutOfRange);
        }
        prev = t;
    }
    let mut w = 0.0;
    let mut prev_t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &s in times {
        let dt = s - prev_t;
        if dt > 0.0 {
            w += dt.sqrt() * rng.next_gaussian();
        }
        prev_t = s;
        let drift = (mu - 0.5 * model.sigma * model.sigma) * s;
        let shrink = (1.0 + model.gamma * (t_horizon - s)) / (1.0 + model.gamma * t_horizon);
        out.push(model.x0 * (drift + model.sigma * w).exp() * shrink);
    }
    Ok(out)
}

/// Lump the continuous payoff rate into `n` maturities `i T / n`, each with
/// payoff `(gamma T / n) y`, producing a discrete problem instance whose
/// solution approximates the continuous one.
pub fn discretize_rate(model: &LinearRateModel, n: usize) -> ContractSchedule {
    assert!(n >= 1);
    let dt = model.horizon / n as f64;
    let maturities: Vec<f64> = (1..=n).map(|i| i as f64 * dt).collect();
    let payoffs: Vec<PayoffSpec> = (0..n)
        .map(|_| PayoffSpec::Call { alpha: model.gamma * dt, strike: 0.0 })
        .collect();
    ContractSchedule::new(model.x0, model.sigma, maturities, payoffs)
        .expect("discretized schedule is well formed")
}

/// Maximum over a time grid of `|mean(Y_t) - Y_0| / stderr` across sampled
/// paths at zero drift; within 4 for a martingale up to Gaussian tails.
pub fn martingale_check(
    model: &LinearRateModel,
    n_paths: usize,
    n_times: usize,
    seed: u64,
) -> Result<f64, ContinuousError> {
    assert!(n_paths >= 2 && n_times >= 1);
    let times: Vec<f64> =
        (1..=n_times).map(|k| k as f64 * model.horizon / n_times as f64).collect();
    let y0 = decoupling_linear(0.0, model.x0, model)?;
    let mut sums = vec![0.0f64; n_times];
    let mut sumsqs = vec![0.0f64; n_times];
    for p in 0..n_paths {
        let mut rng = SubstreamRng::new(seed, p as u64);
        let xs = sample_path_exact(model, 0.0, &times, &mut rng)?;
        for (k, (&x, &t)) in xs.iter().zip(&times).enumerate() {
            let y = decoupling_linear(t, x, model)?;
            sums[k] += y;
            sumsqs[k] += y * y;
        }
    }
    let np = n_paths as f64;
    let mut stat: f64 = 0.0;
    for k in 0..n_times {
        let mean = sums[k] / np;
        let var = ((sumsqs[k] / np - mean * mean).max(0.0)) / (np - 1.0);
        let se = var.sqrt();
        let dev = (mean - y0).abs();
        let z = if se > 0.0 {
            dev / se
        } else if dev <= 1e-9 * model.x0.max(1.0) {
            0.0
        } else {
            f64::INFINITY
        };
        stat = stat.max(z);
    }
    Ok(stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LinearRateModel {
        LinearRateModel::new(1.0, 1.0, 0.2, 100.0).unwrap()
    }

    #[test]
    fn decoupling_closed_form() {
        let m = model();
        assert_eq!(decoupling_linear(0.0, 100.0, &m).unwrap(), 50.0);
        assert_eq!(decoupling_linear(1.0, 37.5, &m).unwrap(), 37.5);
        assert_eq!(decoupling_linear(0.3, -5.0, &m).unwrap(), -5.0);
        assert_eq!(decoupling_linear(1.5, 1.0, &m), Err(ContinuousError::TimeOutOfRange));
    }

    #[test]
    fn decoupling_sandwich_and_terminal() {
        let m = model();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            for x in [0.0, 1.0, 40.0, 300.0] {
                let y = decoupling_linear(t, x, &m).unwrap();
                assert!(y >= 0.0 && y <= x);
            }
            assert_eq!(decoupling_linear(m.horizon, 12.3, &m).unwrap(), 12.3);
        }
    }

    #[test]
    fn gradient_bounds_contain_analytic_slope() {
        let m = model();
        let (q, hi) = gradient_bounds(&m);
        assert!((q - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(hi, 1.0);
        for k in 0..=50 {
            let t = k as f64 / 50.0;
            let slope = 1.0 / (1.0 + m.gamma * (m.horizon - t));
            assert!(slope >= q && slope <= hi);
        }
        let m2 = LinearRateModel::new(0.5, 2.0, 0.0, 10.0).unwrap();
        let (q2, _) = gradient_bounds(&m2);
        assert!((q2 - (-1.0f64).exp()).abs() < 1e-15);
        assert!((1.0 / (1.0 + m2.gamma * m2.horizon) - 0.5).abs() < 1e-15);
        assert!(0.5 >= q2);
    }

    #[test]
    fn expected_equity_formula() {
        let m = model();
        assert_eq!(expected_gross_equity(0.0, 0.3, &m).unwrap(), 100.0);
        let at_t = expected_gross_equity(1.0, 0.0, &m).unwrap();
        assert!((at_t - 50.0).abs() < 1e-12);
        let gbm = LinearRateModel::new(1e-12, 1.0, 0.2, 100.0).unwrap();
        // gamma -> 0 limit approaches the plain geometric Brownian mean.
        let v = expected_gross_equity(0.5, 0.1, &gbm).unwrap();
        assert!((v - 100.0 * (0.05f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn value_interval_formula_and_conservation() {
        let m = model();
        assert_eq!(ebdo_value_interval(0.3, 0.3, 0.0, &m).unwrap(), 0.0);
        let total = ebdo_value_interval(0.0, 1.0, 0.0, &m).unwrap();
        let y0 = decoupling_linear(0.0, m.x0, &m).unwrap();
        assert!((total + y0 - m.x0).abs() <= 1e-12 * m.x0);
        let half = ebdo_value_interval(0.0, 0.5, 0.0, &m).unwrap();
        assert!((half - 25.0).abs() < 1e-12);
        // Continuity at mu = 0.
        let eps = ebdo_value_interval(0.0, 1.0, 1e-13, &m).unwrap();
        assert!((eps - total).abs() < 1e-10);
        assert_eq!(ebdo_value_interval(0.5, 0.2, 0.0, &m), Err(ContinuousError::BadInterval));
    }

    #[test]
    fn deterministic_path_hits_the_closed_form() {
        let m = LinearRateModel::new(1.0, 1.0, 0.0, 100.0).unwrap();
        let times = [0.0, 0.25, 0.5, 1.0];
        let mut rng = SubstreamRng::new(3, 0);
        let xs = sample_path_exact(&m, 0.0, &times, &mut rng).unwrap();
        assert_eq!(xs[0], 100.0);
        for (&x, &t) in xs.iter().zip(&times) {
            let want = 100.0 * (1.0 + m.gamma * (m.horizon - t)) / (1.0 + m.gamma * m.horizon);
            assert!((x - want).abs() < 1e-12);
        }
        assert!((xs[3] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_means_match_expected_equity() {
        let m = model();
        let times = [0.4, 1.0];
        let n = 100_000;
        let mut sums = [0.0f64; 2];
        let mut sumsqs = [0.0f64; 2];
        for p in 0..n {
            let mut rng = SubstreamRng::new(5, p as u64);
            let xs = sample_path_exact(&m, 0.0, &times, &mut rng).unwrap();
            for k in 0..2 {
                sums[k] += xs[k];
                sumsqs[k] += xs[k] * xs[k];
            }
        }
        for k in 0..2 {
            let mean = sums[k] / n as f64;
            let var = (sumsqs[k] / n as f64 - mean * mean) / (n - 1) as f64;
            let se = var.sqrt();
            let want = expected_gross_equity(times[k], 0.0, &m).unwrap();
            assert!((mean - want).abs() <= 4.0 * se, "t={} {mean} vs {want}", times[k]);
        }
    }

    #[test]
    fn discretization_construction() {
        let m = model();
        let s = discretize_rate(&m, 2);
        assert_eq!(s.maturities, vec![0.5, 1.0]);
        for p in &s.payoffs {
            match p {
                PayoffSpec::Call { alpha, strike } => {
                    assert!((alpha - 0.5).abs() < 1e-15);
                    assert_eq!(*strike, 0.0);
                }
                _ => panic!("expected call payoff"),
            }
        }
    }

    #[test]
    fn martingale_statistic_behaves() {
        let det = LinearRateModel::new(1.0, 1.0, 0.0, 100.0).unwrap();
        assert_eq!(martingale_check(&det, 1000, 4, 1).unwrap(), 0.0);
        let m = model();
        let stat = martingale_check(&m, 100_000, 5, 42).unwrap();
        assert!(stat <= 4.0, "stat {stat}");
        // gamma -> 0: plain driftless geometric Brownian motion.
        let gbm = LinearRateModel::new(1e-9, 1.0, 0.2, 100.0).unwrap();
        let stat = martingale_check(&gbm, 50_000, 4, 9).unwrap();
        assert!(stat <= 4.0, "stat {stat}");
    }
}
