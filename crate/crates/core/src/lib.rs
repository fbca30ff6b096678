//! Valuation engine for equity-based debt obligations: debt whose payoff is
//! an increasing function of the issuer's net equity at maturity.
//!
//! The engine solves the implicit split of gross equity into net equity and
//! outstanding debt value by a backward recursion over monotone
//! piecewise-linear value functions, prices contracts by seeded Monte Carlo
//! under risk-neutral or subjective drift, and cross-validates against the
//! continuous-time closed form of the linear-rate model.

pub mod continuous;
pub mod discrete;
pub mod gauss;
pub mod model;
pub mod plf;
pub mod rng;

pub use discrete::{
    build_value_functions, contract_value_functions, estimate_values_mc, net_equity,
    simulate_path, value_schedule, EngineError, GridSpec, McEstimates, ValueFunctionTable,
};
pub use model::{
    law_for_period, ContractSchedule, LogNormalLaw, ModelError, PathSample, PayoffSpec,
    ValuationResult,
};
pub use plf::{MonotonePLF, PlfError};
