//! Domain types for the valuation problem: schedules of performance-based
//! debt contracts, the log-normal shock law between maturities, and the
//! result and path-sample containers.

use crate::plf::{MonotonePLF, PlfError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("maturities must be strictly increasing")]
    NonIncreasingMaturities,
    #[error("gross equity must be nonnegative")]
    NegativeEquity,
    #[error("volatility must be nonnegative and finite")]
    NegativeVolatility,
    #[error("payoff must vanish at zero net equity")]
    PayoffNonzeroAtZero,
    #[error("payoff must be monotonically increasing")]
    DecreasingPayoff,
    #[error("period duration must be nonnegative")]
    NegativeDuration,
    #[error("schedule must contain at least one contract")]
    EmptySchedule,
    #[error("first maturity must be nonnegative")]
    NegativeMaturity,
}

/// Aggregate payoff owed at one maturity, as a function of net equity.
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffSpec {
    /// `h(y) = alpha * (y - strike)^+`, the canonical participation payoff.
    Call { alpha: f64, strike: f64 },
    /// An arbitrary monotone piecewise-linear payoff.
    Explicit(MonotonePLF),
}

impl PayoffSpec {
    /// Render the payoff as a piecewise-linear function, checking the
    /// normalization `h(0) = 0` and monotonicity.
    pub fn to_plf(&self) -> Result<MonotonePLF, ModelError> {
        match self {
            PayoffSpec::Call { alpha, strike } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(ModelError::DecreasingPayoff);
                }
                MonotonePLF::call_payoff(*alpha, *strike).map_err(|_| ModelError::DecreasingPayoff)
            }
            // MonotonePLF construction already enforces both conditions.
            PayoffSpec::Explicit(plf) => Ok(plf.clone()),
        }
    }

    /// Map raw knot points into a payoff, naming the violated condition.
    pub fn from_points(points: &[(f64, f64)], tail_slope: f64) -> Result<Self, ModelError> {
        let knots: Vec<f64> = points.iter().map(|p| p.0).collect();
        let values: Vec<f64> = points.iter().map(|p| p.1).collect();
        if values.first().copied() != Some(0.0) || knots.first().copied() != Some(0.0) {
            return Err(ModelError::PayoffNonzeroAtZero);
        }
        match MonotonePLF::new(knots, values, tail_slope) {
            Ok(plf) => Ok(PayoffSpec::Explicit(plf)),
            Err(PlfError::BadValues) | Err(PlfError::BadTailSlope) => {
                Err(ModelError::DecreasingPayoff)
            }
            Err(_) => Err(ModelError::NonIncreasingMaturities),
        }
    }
}

/// A complete problem instance: gross equity today, volatility, and the
/// ordered maturities with their payoff functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractSchedule {
    pub gross_equity: f64,
    pub sigma: f64,
    pub maturities: Vec<f64>,
    pub payoffs: Vec<PayoffSpec>,
}

impl ContractSchedule {
    pub fn new(
        gross_equity: f64,
        sigma: f64,
        maturities: Vec<f64>,
        payoffs: Vec<PayoffSpec>,
    ) -> Result<Self, ModelError> {
        let s = Self { gross_equity, sigma, maturities, payoffs };
        s.validate()?;
        Ok(s)
    }

    /// Check every problem precondition; each failure names the violated
    /// condition.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.maturities.is_empty() || self.maturities.len() != self.payoffs.len() {
            return Err(ModelError::EmptySchedule);
        }
        if !(self.gross_equity.is_finite() && self.gross_equity >= 0.0) {
            return Err(ModelError::NegativeEquity);
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(ModelError::NegativeVolatility);
        }
        if !(self.maturities[0].is_finite() && self.maturities[0] >= 0.0) {
            return Err(ModelError::NegativeMaturity);
        }
        if self.maturities.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(ModelError::NonIncreasingMaturities);
        }
        for p in &self.payoffs {
            let plf = p.to_plf()?;
            if plf.eval(0.0).expect("zero is in domain") != 0.0 {
                return Err(ModelError::PayoffNonzeroAtZero);
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.maturities.len()
    }

    /// Inter-maturity durations, with the first period starting at time 0.
    pub fn period_durations(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.maturities
            .iter()
            .map(|&t| {
                let dt = t - prev;
                prev = t;
                dt
            })
            .collect()
    }

    /// Payoffs rendered as piecewise-linear functions.
    pub fn payoff_plfs(&self) -> Result<Vec<MonotonePLF>, ModelError> {
        self.payoffs.iter().map(|p| p.to_plf()).collect()
    }
}

/// Parameters of `ln Z` for one inter-maturity period; `s = 0` denotes the
/// point mass at `e^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalLaw {
    pub m: f64,
    pub s: f64,
}

impl LogNormalLaw {
    /// `E[Z] = e^{m + s^2/2}`.
    pub fn mean(&self) -> f64 {
        (self.m + 0.5 * self.s * self.s).exp()
    }
}

/// Shock law for one period: `m = (mu - sigma^2/2) dt`, `s = sigma sqrt(dt)`.
pub fn law_for_period(mu: f64, sigma: f64, dt: f64) -> Result<LogNormalLaw, ModelError> {
    if !(dt >= 0.0) {
        return Err(ModelError::NegativeDuration);
    }
    if !(sigma >= 0.0) {
        return Err(ModelError::NegativeVolatility);
    }
    Ok(LogNormalLaw { m: (mu - 0.5 * sigma * sigma) * dt, s: sigma * dt.sqrt() })
}

/// Output of a full valuation run.
#[derive(Debug, Clone)]
pub struct ValuationResult {
    /// Net equity today, `f_0(X_0)`.
    pub net_equity: f64,
    /// The value functions `f_0 .. f_n`.
    pub value_functions: Vec<MonotonePLF>,
    /// Deterministic per-maturity contract values `E[h_i(Y_i)]`.
    pub contract_values: Vec<f64>,
    /// `X_0 - Y_0 - sum of contract values`; meaningful only at zero drift.
    pub conservation_residual: f64,
}

/// One realization of the forward recursion.
#[derive(Debug, Clone)]
pub struct PathSample {
    /// Gross equity at each maturity, `X_0 .. X_n`.
    pub x: Vec<f64>,
    /// Net equity at each maturity, `Y_0 .. Y_n`.
    pub y: Vec<f64>,
    /// Post-payoff gross equity, `X'_0 .. X'_n`.
    pub x_after: Vec<f64>,
    /// Multiplicative shocks `Z_1 .. Z_n`.
    pub shocks: Vec<f64>,
}
