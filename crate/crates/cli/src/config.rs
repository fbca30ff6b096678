//! JSON problem files, schema `ebdo/1`:
//!
//! ```json
//! {
//!   "schema": "ebdo/1",
//!   "gross_equity": 100.0,
//!   "sigma": 0.2,
//!   "contracts": [
//!     {"maturity": 1.0, "payoff": {"kind": "call", "alpha": 1.0, "strike": 0.0}},
//!     {"maturity": 2.0, "payoff": {"kind": "plf",
//!       "points": [[0.0, 0.0], [50.0, 10.0]], "tail_slope": 0.5}}
//!   ]
//! }
//! ```

use crate::CliError;
use ebdo_core::{ContractSchedule, PayoffSpec};
use serde::Deserialize;
use std::path::Path;

pub const SCHEMA: &str = "ebdo/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: String,
    gross_equity: f64,
    sigma: f64,
    contracts: Vec<ContractEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContractEntry {
    maturity: f64,
    payoff: PayoffEntry,
}

#[derive(Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum PayoffEntry {
    #[serde(rename = "call")]
    Call { alpha: f64, strike: f64 },
    #[serde(rename = "plf")]
    Plf { points: Vec<[f64; 2]>, tail_slope: f64 },
}

pub fn load_schedule(path: &Path) -> Result<ContractSchedule, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if cfg.schema != SCHEMA {
        return Err(CliError::Input(format!(
            "field \"schema\": expected \"{SCHEMA}\", got \"{}\"",
            cfg.schema
        )));
    }
    let mut maturities = Vec::with_capacity(cfg.contracts.len());
    let mut payoffs = Vec::with_capacity(cfg.contracts.len());
    for (idx, c) in cfg.contracts.into_iter().enumerate() {
        maturities.push(c.maturity);
        let payoff = match c.payoff {
            PayoffEntry::Call { alpha, strike } => PayoffSpec::Call { alpha, strike },
            PayoffEntry::Plf { points, tail_slope } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                PayoffSpec::from_points(&pts, tail_slope).map_err(|e| {
                    CliError::Input(format!("contracts[{idx}].payoff: {e}"))
                })?
            }
        };
        payoffs.push(payoff);
    }
    ContractSchedule::new(cfg.gross_equity, cfg.sigma, maturities, payoffs)
        .map_err(|e| CliError::Input(e.to_string()))
}
