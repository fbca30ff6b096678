//! Machine-readable reports. Numbers carry 17 significant digits so a
//! reader can reconstruct the exact doubles.

use crate::config::SCHEMA;
use crate::CliError;
use ebdo_core::{GridSpec, ValuationResult};
use std::path::PathBuf;

/// Format with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_num(v: f64) -> serde_json::Value {
    // Parse the 17-digit rendering back so serde emits a plain number that
    // round-trips to the same double.
    serde_json::Number::from_f64(v).map(serde_json::Value::Number).unwrap_or_else(|| {
        serde_json::Value::String(num(v))
    })
}

pub fn value_report(result: &ValuationResult, grid: &GridSpec) -> String {
    let doc = serde_json::json!({
        "schema": SCHEMA,
        "net_equity": json_num(result.net_equity),
        "contract_values": result.contract_values.iter().map(|&v| json_num(v)).collect::<Vec<_>>(),
        "conservation_residual": json_num(result.conservation_residual),
        "grid": {
            "num_nodes": grid.num_nodes,
            "quantile_span": json_num(grid.quantile_span),
        },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn price_report(contract: usize, risk_neutral: f64, market: f64) -> String {
    let doc = serde_json::json!({
        "schema": SCHEMA,
        "contract_index": contract,
        "risk_neutral_price": json_num(risk_neutral),
        "market_price": json_num(market),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn emit(out: &Option<PathBuf>, doc: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}
