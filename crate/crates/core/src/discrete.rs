//! Discrete-time solution of the valuation problem: backward construction
//! of the value functions `f_i`, forward path simulation, Monte Carlo
//! pricing and deterministic per-contract value functions.

use crate::gauss::{expected_plf, inv_std_normal_cdf};
use crate::model::{
    law_for_period, ContractSchedule, LogNormalLaw, ModelError, PathSample, ValuationResult,
};
use crate::plf::{MonotonePLF, PlfError, EPS_SLOPE};
use crate::rng::SubstreamRng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("grid too coarse: fitted value function is not strictly increasing at the nodes")]
    GridTooCoarse,
    #[error("grid spec invalid: need num_nodes >= 8 and quantile_span in (0.5, 1)")]
    InvalidGrid,
    #[error(transparent)]
    Plf(#[from] PlfError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Node layout for fitting the value functions.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub num_nodes: usize,
    /// Terminal log-normal quantile mass the node range must cover.
    pub quantile_span: f64,
    /// Reference gross equity the range is centered on.
    pub anchor: f64,
}

impl GridSpec {
    pub fn new(num_nodes: usize, quantile_span: f64, anchor: f64) -> Result<Self, EngineError> {
        let g = Self { num_nodes, quantile_span, anchor };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.num_nodes < 8
            || !(self.quantile_span > 0.5 && self.quantile_span < 1.0)
            || !(self.anchor >= 0.0)
        {
            return Err(EngineError::InvalidGrid);
        }
        Ok(())
    }

    pub fn default_for(anchor: f64) -> Self {
        Self { num_nodes: 2048, quantile_span: 0.9999, anchor }
    }
}

/// All functions produced by the backward construction, immutable once
/// built and safe to share across threads.
#[derive(Debug, Clone)]
pub struct ValueFunctionTable {
    /// `f_0 .. f_n`, with `f_n = Id` exactly.
    f: Vec<MonotonePLF>,
    /// Inverses `f_i^{-1}`.
    f_inv: Vec<MonotonePLF>,
    /// Transfer maps `g_1 .. g_n`; `g[i-1]` maps `X_i` to `Y_i`.
    g: Vec<MonotonePLF>,
    /// `f_i^{-1} ∘ g_i`, mapping `X_i` to `X'_i`.
    x_after_map: Vec<MonotonePLF>,
    /// Payoffs `h_1 .. h_n` as piecewise-linear functions.
    payoffs: Vec<MonotonePLF>,
    /// Nodes on which `f_{i-1}` was fitted, per period `i`.
    fit_nodes: Vec<Vec<f64>>,
    durations: Vec<f64>,
    sigma: f64,
}

impl ValueFunctionTable {
    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn value_function(&self, i: usize) -> &MonotonePLF {
        &self.f[i]
    }

    pub fn transfer_map(&self, i: usize) -> &MonotonePLF {
        &self.g[i - 1]
    }

    pub fn x_after_map(&self, i: usize) -> &MonotonePLF {
        &self.x_after_map[i - 1]
    }

    pub fn payoff(&self, i: usize) -> &MonotonePLF {
        &self.payoffs[i - 1]
    }
}

/// Merge extra nodes into a sorted base set, dropping near-duplicates.
fn merged_nodes(base: &[f64], extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut xs = base.to_vec();
    xs.extend(extra);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&prev) if x - prev <= 1e-12 * prev.abs().max(x.abs()) => {}
            _ => out.push(x),
        }
    }
    out
}

/// Log-spaced base nodes covering the requested quantile range of the
/// terminal shock product, with 0 always included.
fn base_grid_nodes(schedule: &ContractSchedule, grid: &GridSpec) -> Vec<f64> {
    let anchor = if grid.anchor > 0.0 { grid.anchor } else { 1.0 };
    let durations = schedule.period_durations();
    let m_tot: f64 = durations
        .iter()
        .map(|&dt| -0.5 * schedule.sigma * schedule.sigma * dt)
        .sum();
    let s_tot = schedule.sigma * schedule.maturities.last().unwrap().sqrt();
    let (lo, hi) = if s_tot > 0.0 {
        let z = inv_std_normal_cdf(0.5 * (1.0 - grid.quantile_span));
        (anchor * (m_tot + s_tot * z).exp(), anchor * (m_tot - s_tot * z).exp())
    } else {
        let c = anchor * m_tot.exp();
        (0.5 * c, 2.0 * c)
    };
    let mut nodes = Vec::with_capacity(grid.num_nodes + 1);
    nodes.push(0.0);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    for k in 0..grid.num_nodes {
        let t = k as f64 / (grid.num_nodes - 1) as f64;
        nodes.push((ln_lo + t * (ln_hi - ln_lo)).exp());
    }
    nodes
}

/// Fit `x' -> E[inner(x' Z)]` as a piecewise-linear function on `nodes`.
///
/// The expectation is exact per node; the tail slope carries the mean shock
/// so that the fitted function is exact beyond the last node too. With
/// `strict`, node values must be strictly increasing (grid check for value
/// functions); otherwise rounding-level decreases are flattened.
fn fit_expectation(
    inner: &MonotonePLF,
    law: &LogNormalLaw,
    nodes: &[f64],
    strict: bool,
) -> Result<MonotonePLF, EngineError> {
    let mut values: Vec<f64> = nodes
        .par_iter()
        .map(|&x| expected_plf(inner, x, law))
        .collect();
    for j in 1..values.len() {
        let dx = nodes[j] - nodes[j - 1];
        if strict {
            if values[j] - values[j - 1] < EPS_SLOPE * dx {
                return Err(EngineError::GridTooCoarse);
            }
        } else if values[j] < values[j - 1] {
            if values[j - 1] - values[j] <= 1e-9 * values[j - 1].abs().max(1.0) {
                values[j] = values[j - 1];
            } else {
                return Err(EngineError::GridTooCoarse);
            }
        }
    }
    let tail = inner.tail_slope() * law.mean();
    let (knots, values) = prune_collinear(nodes, &values);
    Ok(MonotonePLF::new(knots, values, tail)?)
}

/// Drop interior nodes that lie on the chord of their kept neighbours to
/// within rounding noise. Fitted value functions are often linear over wide
/// spans (linear payoffs make them globally linear), and keeping thousands
/// of collinear knots makes every later backward step quadratic.
fn prune_collinear(nodes: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    const TOL: f64 = 1e-13;
    let mut ks: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut vs: Vec<f64> = Vec::with_capacity(nodes.len());
    for (&x, &v) in nodes.iter().zip(values) {
        while ks.len() >= 2 {
            let (ax, ay) = (ks[ks.len() - 2], vs[vs.len() - 2]);
            let (bx, by) = (ks[ks.len() - 1], vs[vs.len() - 1]);
            let chord = ay + (v - ay) * (bx - ax) / (x - ax);
            if (by - chord).abs() <= TOL * by.abs().max(1.0) {
                ks.pop();
                vs.pop();
            } else {
                break;
            }
        }
        ks.push(x);
        vs.push(v);
    }
    (ks, vs)
}

/// Nodes for one backward step: the base grid plus, for near-deterministic
/// periods, the preimages of the transfer map's kinks (the expectation does
/// not smooth them out there).
fn level_nodes(base: &[f64], transfer: &MonotonePLF, law: &LogNormalLaw) -> Vec<f64> {
    if law.s < 1e-3 {
        let shift = (-law.m).exp();
        merged_nodes(base, transfer.knots().iter().skip(1).map(|&k| k * shift))
    } else {
        base.to_vec()
    }
}

/// Backward construction of the value functions under zero drift.
pub fn build_value_functions(
    schedule: &ContractSchedule,
    grid: &GridSpec,
) -> Result<ValueFunctionTable, EngineError> {
    schedule.validate()?;
    grid.validate()?;
    let n = schedule.n();
    let payoffs = schedule.payoff_plfs()?;
    let durations = schedule.period_durations();
    let laws: Vec<LogNormalLaw> = durations
        .iter()
        .map(|&dt| law_for_period(0.0, schedule.sigma, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let base = base_grid_nodes(schedule, grid);

    let mut f: Vec<Option<MonotonePLF>> = vec![None; n + 1];
    let mut g: Vec<Option<MonotonePLF>> = vec![None; n];
    let mut fit_nodes: Vec<Vec<f64>> = vec![Vec::new(); n];
    f[n] = Some(MonotonePLF::identity());
    for i in (1..=n).rev() {
        let gi = MonotonePLF::payoff_transfer(f[i].as_ref().unwrap(), &payoffs[i - 1])?;
        let nodes = level_nodes(&base, &gi, &laws[i - 1]);
        f[i - 1] = Some(fit_expectation(&gi, &laws[i - 1], &nodes, true)?);
        fit_nodes[i - 1] = nodes;
        g[i - 1] = Some(gi);
    }
    let f: Vec<MonotonePLF> = f.into_iter().map(Option::unwrap).collect();
    let g: Vec<MonotonePLF> = g.into_iter().map(Option::unwrap).collect();
    let f_inv: Vec<MonotonePLF> =
        f.iter().map(|fi| fi.invert()).collect::<Result<_, _>>()?;
    let x_after_map: Vec<MonotonePLF> =
        (1..=n).map(|i| f_inv[i].compose(&g[i - 1])).collect();
    Ok(ValueFunctionTable {
        f,
        f_inv,
        g,
        x_after_map,
        payoffs,
        fit_nodes,
        durations,
        sigma: schedule.sigma,
    })
}

/// Net equity today, `f_0(X_0)`, clamped into `[0, X_0]`.
pub fn net_equity(table: &ValueFunctionTable, x0: f64) -> Result<f64, EngineError> {
    if !(x0 >= 0.0) {
        return Err(ModelError::NegativeEquity.into());
    }
    let y0 = table.f[0].eval(x0)?;
    Ok(y0.clamp(0.0, x0))
}

/// One forward-recursion path. `mu` is a simulation drift only; the maps in
/// `table` stay the zero-drift accounting maps. `X'_i` is evaluated through
/// `f_i^{-1}(Y_i)`, which is nonnegative by construction.
pub fn simulate_path(
    table: &ValueFunctionTable,
    schedule: &ContractSchedule,
    mu: f64,
    rng: &mut SubstreamRng,
) -> PathSample {
    let n = table.n();
    let x0 = schedule.gross_equity;
    let mut x = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    let mut x_after = Vec::with_capacity(n + 1);
    let mut shocks = Vec::with_capacity(n);
    x.push(x0);
    y.push(table.f[0].eval_nonneg(x0));
    x_after.push(x0);
    for i in 1..=n {
        let dt = table.durations[i - 1];
        let m = (mu - 0.5 * schedule.sigma * schedule.sigma) * dt;
        let s = schedule.sigma * dt.sqrt();
        let z = (m + s * rng.next_gaussian()).exp();
        let xi = x_after[i - 1] * z;
        let yi = table.g[i - 1].eval_nonneg(xi);
        let xai = table.f_inv[i].eval_nonneg(yi);
        shocks.push(z);
        x.push(xi);
        y.push(yi);
        x_after.push(xai);
    }
    PathSample { x, y, x_after, shocks }
}

/// Monte Carlo estimates over independent paths.
#[derive(Debug, Clone)]
pub struct McEstimates {
    /// Per-maturity `E[h_i(Y_i)]` sample means.
    pub payoff_mean: Vec<f64>,
    pub payoff_stderr: Vec<f64>,
    /// Per-maturity `E[Y_i]` sample means.
    pub y_mean: Vec<f64>,
    pub y_stderr: Vec<f64>,
    /// Sample mean and standard error of the total payoff per path.
    pub total_payoff_mean: f64,
    pub total_payoff_stderr: f64,
    pub n_paths: usize,
}

impl McEstimates {
    /// `E[Y_n]` estimate with its standard error.
    pub fn terminal_equity(&self) -> (f64, f64) {
        (*self.y_mean.last().unwrap(), *self.y_stderr.last().unwrap())
    }
}

const MC_BLOCK: usize = 4096;

struct BlockSums {
    payoff: Vec<f64>,
    payoff_sq: Vec<f64>,
    y: Vec<f64>,
    y_sq: Vec<f64>,
    total: f64,
    total_sq: f64,
}

/// Per-maturity payoff and net-equity estimates from `n_paths` seeded paths.
///
/// Paths are grouped into fixed blocks and block sums are combined in block
/// order, so the result is identical for identical `(seed, n_paths)` at any
/// level of parallelism.
pub fn estimate_values_mc(
    table: &ValueFunctionTable,
    schedule: &ContractSchedule,
    mu: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimates, EngineError> {
    assert!(n_paths >= 2, "need at least two paths");
    let n = table.n();
    let n_blocks = n_paths.div_ceil(MC_BLOCK);
    let blocks: Vec<BlockSums> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(n_paths);
            let mut s = BlockSums {
                payoff: vec![0.0; n],
                payoff_sq: vec![0.0; n],
                y: vec![0.0; n],
                y_sq: vec![0.0; n],
                total: 0.0,
                total_sq: 0.0,
            };
            for p in lo..hi {
                let mut rng = SubstreamRng::new(seed, p as u64);
                let path = simulate_path(table, schedule, mu, &mut rng);
                let mut tot = 0.0;
                for i in 1..=n {
                    let hv = table.payoffs[i - 1].eval_nonneg(path.y[i]);
                    s.payoff[i - 1] += hv;
                    s.payoff_sq[i - 1] += hv * hv;
                    s.y[i - 1] += path.y[i];
                    s.y_sq[i - 1] += path.y[i] * path.y[i];
                    tot += hv;
                }
                s.total += tot;
                s.total_sq += tot * tot;
            }
            s
        })
        .collect();

    let mut acc = BlockSums {
        payoff: vec![0.0; n],
        payoff_sq: vec![0.0; n],
        y: vec![0.0; n],
        y_sq: vec![0.0; n],
        total: 0.0,
        total_sq: 0.0,
    };
    for b in &blocks {
        for i in 0..n {
            acc.payoff[i] += b.payoff[i];
            acc.payoff_sq[i] += b.payoff_sq[i];
            acc.y[i] += b.y[i];
            acc.y_sq[i] += b.y_sq[i];
        }
        acc.total += b.total;
        acc.total_sq += b.total_sq;
    }

    let np = n_paths as f64;
    let stat = |sum: f64, sumsq: f64| -> (f64, f64) {
        let mean = sum / np;
        let var = ((sumsq / np - mean * mean).max(0.0)) / (np - 1.0);
        (mean, var.sqrt())
    };
    let mut payoff_mean = Vec::with_capacity(n);
    let mut payoff_stderr = Vec::with_capacity(n);
    let mut y_mean = Vec::with_capacity(n);
    let mut y_stderr = Vec::with_capacity(n);
    for i in 0..n {
        let (m, se) = stat(acc.payoff[i], acc.payoff_sq[i]);
        payoff_mean.push(m);
        payoff_stderr.push(se);
        let (m, se) = stat(acc.y[i], acc.y_sq[i]);
        y_mean.push(m);
        y_stderr.push(se);
    }
    let (total_payoff_mean, total_payoff_stderr) = stat(acc.total, acc.total_sq);
    Ok(McEstimates {
        payoff_mean,
        payoff_stderr,
        y_mean,
        y_stderr,
        total_payoff_mean,
        total_payoff_stderr,
        n_paths,
    })
}

/// Deterministic per-contract value functions `w_j` with
/// `w_j(X_0) = E[h_j(Y_j)]` under drift `mu`.
///
/// Built by the same backward machinery as the value functions and fitted
/// on the same per-level node sets, so the conservation identity holds at
/// the level of the fitted functions, not just in the limit.
pub fn contract_value_functions(
    table: &ValueFunctionTable,
    mu: f64,
) -> Result<Vec<MonotonePLF>, EngineError> {
    let n = table.n();
    let laws_mu: Vec<LogNormalLaw> = table
        .durations
        .iter()
        .map(|&dt| law_for_period(mu, table.sigma, dt))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let inner = table.payoffs[j - 1].compose(&table.g[j - 1]);
        let mut w = fit_expectation(&inner, &laws_mu[j - 1], &table.fit_nodes[j - 1], false)?;
        for i in (1..j).rev() {
            let inner = w.compose(&table.x_after_map[i - 1]);
            w = fit_expectation(&inner, &laws_mu[i - 1], &table.fit_nodes[i - 1], false)?;
        }
        out.push(w);
    }
    Ok(out)
}

/// Full deterministic valuation: net equity, per-contract values at zero
/// drift, and the conservation residual.
pub fn value_schedule(
    schedule: &ContractSchedule,
    grid: &GridSpec,
) -> Result<ValuationResult, EngineError> {
    let table = build_value_functions(schedule, grid)?;
    let y0 = net_equity(&table, schedule.gross_equity)?;
    let w = contract_value_functions(&table, 0.0)?;
    let contract_values: Vec<f64> = w
        .iter()
        .map(|wj| wj.eval_nonneg(schedule.gross_equity).max(0.0))
        .collect();
    let conservation_residual =
        schedule.gross_equity - y0 - contract_values.iter().sum::<f64>();
    Ok(ValuationResult {
        net_equity: y0,
        value_functions: table.f.clone(),
        contract_values,
        conservation_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PayoffSpec;

    fn linear_schedule(x0: f64, sigma: f64, alphas: &[f64]) -> ContractSchedule {
        let maturities = (1..=alphas.len()).map(|i| 0.5 * i as f64).collect();
        let payoffs = alphas.iter().map(|&a| PayoffSpec::Call { alpha: a, strike: 0.0 }).collect();
        ContractSchedule::new(x0, sigma, maturities, payoffs).unwrap()
    }

    #[test]
    fn single_linear_contract_halves_equity() {
        let s = linear_schedule(100.0, 0.2, &[1.0]);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        // f_0 = x/2 at every node.
        let f0 = table.value_function(0);
        for (&k, &v) in f0.knots().iter().zip(f0.values()) {
            assert!((v - k / 2.0).abs() <= 1e-12 * k.max(1.0));
        }
        assert!((net_equity(&table, 100.0).unwrap() - 50.0).abs() <= 1e-10);
        assert_eq!(net_equity(&table, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_chain_collapses_additively() {
        // Independent oracle: with h_i(y) = a_i y and E[Z_i] = 1, the
        // implicit relation Y_i (1 + sum of remaining a_j) = X_i collapses
        // every level, so f_0(x) = x / (1 + a_1 + ... + a_n). Verified by a
        // scalar fixed-point iteration below, independent of the PLF path.
        let alphas = [0.5, 1.0, 0.25];
        let mut divisor = 1.0f64;
        for &a in alphas.iter().rev() {
            // solve y * divisor + a * y = x for x = 1 via bisection
            let target = 1.0;
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid * divisor + a * mid < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            divisor = 1.0 / (0.5 * (lo + hi));
        }
        assert!((divisor - 2.75).abs() < 1e-10);

        let s = linear_schedule(100.0, 0.3, &alphas);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        let y0 = net_equity(&table, 100.0).unwrap();
        assert!(
            (y0 - 100.0 / 2.75).abs() <= 1e-8 * y0,
            "y0 = {y0}, want {}",
            100.0 / 2.75
        );
    }

    #[test]
    fn deterministic_kinked_payoff_is_exact() {
        let payoff = PayoffSpec::Call { alpha: 1.0, strike: 50.0 };
        let s = ContractSchedule::new(100.0, 0.0, vec![1.0], vec![payoff]).unwrap();
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        // Point-mass shocks make f_0 equal to the transfer map.
        assert!((net_equity(&table, 100.0).unwrap() - 75.0).abs() <= 1e-10);
    }

    #[test]
    fn deterministic_path_recursion() {
        let s = linear_schedule(100.0, 0.0, &[1.0]);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        let mut rng = SubstreamRng::new(0, 0);
        let p = simulate_path(&table, &s, 0.0, &mut rng);
        assert_eq!(p.shocks, vec![1.0]);
        assert!((p.x[1] - 100.0).abs() < 1e-12);
        assert!((p.y[1] - 50.0).abs() < 1e-10);
        assert!((p.x_after[1] - 50.0).abs() < 1e-10);

        // Drifted point mass: Z = 2 over the half-year period.
        let mut rng = SubstreamRng::new(0, 0);
        let p = simulate_path(&table, &s, 2.0 * std::f64::consts::LN_2, &mut rng);
        assert!((p.x[1] - 200.0).abs() < 1e-9);
        assert!((p.y[1] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn path_invariants_hold() {
        let s = ContractSchedule::new(
            80.0,
            0.35,
            vec![0.4, 1.0, 1.7],
            vec![
                PayoffSpec::Call { alpha: 0.5, strike: 10.0 },
                PayoffSpec::Call { alpha: 1.0, strike: 0.0 },
                PayoffSpec::Call { alpha: 0.8, strike: 40.0 },
            ],
        )
        .unwrap();
        let table = build_value_functions(&s, &GridSpec::default_for(80.0)).unwrap();
        let h = s.payoff_plfs().unwrap();
        for p in 0..2000 {
            let mut rng = SubstreamRng::new(11, p);
            let path = simulate_path(&table, &s, 0.1, &mut rng);
            assert_eq!(path.x_after[0], path.x[0]);
            let n = s.n();
            assert_eq!(path.x_after[n], path.y[n]);
            for i in 1..=n {
                assert!(path.x[i] >= 0.0 && path.y[i] >= 0.0 && path.x_after[i] >= 0.0);
                let xi = path.x_after[i - 1] * path.shocks[i - 1];
                assert!((path.x[i] - xi).abs() <= 1e-12 * xi.max(1.0));
                let xai = path.x[i] - h[i - 1].eval(path.y[i]).unwrap();
                assert!(
                    (path.x_after[i] - xai).abs() <= 1e-12 * path.x[i].max(1.0),
                    "path {p} level {i}: {} vs {}",
                    path.x_after[i],
                    xai
                );
            }
        }
    }

    #[test]
    fn mc_is_deterministic_and_reconciles() {
        let s = linear_schedule(100.0, 0.25, &[0.4, 0.6]);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        let a = estimate_values_mc(&table, &s, 0.0, 30_000, 42).unwrap();
        let b = estimate_values_mc(&table, &s, 0.0, 30_000, 42).unwrap();
        assert_eq!(a.payoff_mean, b.payoff_mean);
        assert_eq!(a.y_mean, b.y_mean);
        let y0 = net_equity(&table, 100.0).unwrap();
        let resid = (y0 + a.total_payoff_mean - 100.0).abs();
        assert!(resid <= 4.0 * a.total_payoff_stderr, "resid {resid}");
        let (eyn, se) = a.terminal_equity();
        assert!((eyn - y0).abs() <= 4.0 * se);
    }

    #[test]
    fn sigma_zero_mc_has_no_noise() {
        let s = linear_schedule(100.0, 0.0, &[1.0]);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        let e = estimate_values_mc(&table, &s, 0.0, 1000, 1).unwrap();
        assert_eq!(e.payoff_stderr, vec![0.0]);
        assert!((e.payoff_mean[0] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn contract_values_match_closed_form_and_mc() {
        let s = linear_schedule(100.0, 0.2, &[1.0]);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        let w = contract_value_functions(&table, 0.0).unwrap();
        assert!((w[0].eval(100.0).unwrap() - 50.0).abs() <= 1e-8);
        assert_eq!(w[0].eval(0.0).unwrap(), 0.0);

        let s = ContractSchedule::new(
            100.0,
            0.3,
            vec![0.5, 1.25],
            vec![
                PayoffSpec::Call { alpha: 0.7, strike: 30.0 },
                PayoffSpec::Call { alpha: 1.0, strike: 60.0 },
            ],
        )
        .unwrap();
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        let w = contract_value_functions(&table, 0.0).unwrap();
        let mc = estimate_values_mc(&table, &s, 0.0, 100_000, 7).unwrap();
        for j in 0..2 {
            let det = w[j].eval(100.0).unwrap();
            assert!(
                (det - mc.payoff_mean[j]).abs() <= 4.0 * mc.payoff_stderr[j],
                "contract {j}: {det} vs {} +- {}",
                mc.payoff_mean[j],
                mc.payoff_stderr[j]
            );
        }
    }

    #[test]
    fn comparative_statics() {
        let grid = GridSpec::default_for(100.0);
        let s1 = linear_schedule(100.0, 0.25, &[0.5]);
        let s2 = linear_schedule(120.0, 0.25, &[0.5]);
        let t1 = build_value_functions(&s1, &grid).unwrap();
        let t2 = build_value_functions(&s2, &GridSpec::default_for(120.0)).unwrap();
        assert!(net_equity(&t2, 120.0).unwrap() > net_equity(&t1, 100.0).unwrap());

        let s3 = linear_schedule(100.0, 0.25, &[0.5, 0.3]);
        let t3 = build_value_functions(&s3, &grid).unwrap();
        assert!(net_equity(&t3, 100.0).unwrap() < net_equity(&t1, 100.0).unwrap());
    }

    #[test]
    fn refinement_is_consistent() {
        let payoff = PayoffSpec::Call { alpha: 1.0, strike: 50.0 };
        let s = ContractSchedule::new(100.0, 0.2, vec![1.0], vec![payoff]).unwrap();
        let coarse = build_value_functions(&s, &GridSpec::new(1024, 0.9999, 100.0).unwrap()).unwrap();
        let fine = build_value_functions(&s, &GridSpec::new(4096, 0.9999, 100.0).unwrap()).unwrap();
        let rebuilt = build_value_functions(&s, &GridSpec::new(4096, 0.9999, 100.0).unwrap()).unwrap();
        let yc = net_equity(&coarse, 100.0).unwrap();
        let yf = net_equity(&fine, 100.0).unwrap();
        let yr = net_equity(&rebuilt, 100.0).unwrap();
        assert_eq!(yf, yr);
        assert!((yc - yf).abs() <= 1e-6 * yf);
    }

    #[test]
    fn f0_slopes_stay_in_unit_interval() {
        let s = linear_schedule(100.0, 0.3, &[0.5, 1.0, 0.25]);
        let table = build_value_functions(&s, &GridSpec::default_for(100.0)).unwrap();
        for slope in table.value_function(0).slopes() {
            assert!(slope > 0.0 && slope <= 1.0 + 1e-12, "slope {slope}");
        }
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(4, 0.9999, 100.0).is_err());
        assert!(GridSpec::new(64, 0.4, 100.0).is_err());
        assert!(GridSpec::new(64, 1.0, 100.0).is_err());
        assert!(GridSpec::new(64, 0.99, 100.0).is_ok());
    }
}
