//! Algebra of monotone piecewise-linear functions on `[0, inf)`.
//!
//! Every payoff function, value function and transfer map in the engine is
//! represented as a [`MonotonePLF`]: a continuous, nondecreasing function
//! that vanishes at zero, is linear between consecutive knots and linear
//! with a fixed `tail_slope` beyond the last knot. The class is closed
//! under addition, composition and (for strictly increasing members)
//! inversion, which is exactly what the backward value recursion needs.

use thiserror::Error;

/// Minimum segment slope for a function to count as strictly increasing.
/// Below this, inversion is numerically meaningless in double precision.
pub const EPS_SLOPE: f64 = 1e-12;

/// Relative x-distance below which two knots are coalesced into one.
const KNOT_MERGE_REL: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlfError {
    #[error("argument is negative; domain is [0, inf)")]
    NegativeArgument,
    #[error("function is not strictly increasing (segment slope below {EPS_SLOPE:e})")]
    NotStrictlyIncreasing,
    #[error("knot and value sequences must be nonempty and of equal length")]
    BadShape,
    #[error("knots must start at 0 and be strictly increasing")]
    BadKnots,
    #[error("values must start at 0 and be nondecreasing")]
    BadValues,
    #[error("tail slope must be finite and nonnegative")]
    BadTailSlope,
}

/// Monotone piecewise-linear function on `[0, inf)` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePLF {
    knots: Vec<f64>,
    values: Vec<f64>,
    tail_slope: f64,
}

impl MonotonePLF {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, tail_slope: f64) -> Result<Self, PlfError> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(PlfError::BadShape);
        }
        if knots[0] != 0.0 || !knots.iter().all(|k| k.is_finite()) {
            return Err(PlfError::BadKnots);
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PlfError::BadKnots);
        }
        if values[0] != 0.0 || !values.iter().all(|v| v.is_finite()) {
            return Err(PlfError::BadValues);
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(PlfError::BadValues);
        }
        if !tail_slope.is_finite() || tail_slope < 0.0 {
            return Err(PlfError::BadTailSlope);
        }
        Ok(Self { knots, values, tail_slope })
    }

    /// The identity on `[0, inf)`.
    pub fn identity() -> Self {
        Self { knots: vec![0.0], values: vec![0.0], tail_slope: 1.0 }
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self { knots: vec![0.0], values: vec![0.0], tail_slope: 0.0 }
    }

    /// `x -> slope * x`.
    pub fn linear(slope: f64) -> Result<Self, PlfError> {
        Self::new(vec![0.0], vec![0.0], slope)
    }

    /// The call-style payoff `y -> alpha * (y - strike)^+`.
    pub fn call_payoff(alpha: f64, strike: f64) -> Result<Self, PlfError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(PlfError::BadTailSlope);
        }
        if !(strike.is_finite() && strike >= 0.0) {
            return Err(PlfError::BadKnots);
        }
        if strike == 0.0 {
            Self::new(vec![0.0], vec![0.0], alpha)
        } else {
            Self::new(vec![0.0, strike], vec![0.0, 0.0], alpha)
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    /// Evaluate at `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64, PlfError> {
        if !(x >= 0.0) {
            return Err(PlfError::NegativeArgument);
        }
        Ok(self.eval_nonneg(x))
    }

    /// Evaluation without the domain check; callers guarantee `x >= 0`.
    pub(crate) fn eval_nonneg(&self, x: f64) -> f64 {
        let last = self.knots.len() - 1;
        if x >= self.knots[last] {
            return self.values[last] + self.tail_slope * (x - self.knots[last]);
        }
        // First knot strictly greater than x; x < knots[last] so hi <= last.
        let hi = self.knots.partition_point(|&k| k <= x);
        let lo = hi - 1;
        if x == self.knots[lo] {
            return self.values[lo];
        }
        let t = (x - self.knots[lo]) / (self.knots[hi] - self.knots[lo]);
        self.values[lo] + t * (self.values[hi] - self.values[lo])
    }

    /// Slope of segment `i` (between knots `i` and `i+1`).
    fn segment_slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
    }

    /// Smallest slope over all finite segments and the tail.
    pub fn min_slope(&self) -> f64 {
        let mut m = self.tail_slope;
        for i in 0..self.knots.len() - 1 {
            m = m.min(self.segment_slope(i));
        }
        m
    }

    /// All segment slopes including the tail, left to right.
    pub fn slopes(&self) -> Vec<f64> {
        let mut s: Vec<f64> = (0..self.knots.len() - 1).map(|i| self.segment_slope(i)).collect();
        s.push(self.tail_slope);
        s
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.min_slope() >= EPS_SLOPE
    }

    /// Pointwise sum. Knots are the merged union; the sum is exact at knots
    /// and therefore everywhere, both operands being linear between merged
    /// knots.
    pub fn add(&self, other: &Self) -> Self {
        let xs = merge_knots(&self.knots, &other.knots);
        let values: Vec<f64> =
            xs.iter().map(|&x| self.eval_nonneg(x) + other.eval_nonneg(x)).collect();
        Self { knots: xs, values, tail_slope: self.tail_slope + other.tail_slope }
    }

    /// Inverse of a strictly increasing function: knots and values swap,
    /// the tail slope reciprocates.
    pub fn invert(&self) -> Result<Self, PlfError> {
        if !self.is_strictly_increasing() {
            return Err(PlfError::NotStrictlyIncreasing);
        }
        Ok(Self {
            knots: self.values.clone(),
            values: self.knots.clone(),
            tail_slope: 1.0 / self.tail_slope,
        })
    }

    /// Composition `self ∘ inner`. Knots are the knots of `inner` together
    /// with the `inner`-preimages of the knots of `self`; between those the
    /// composition is genuinely linear, so the result is exact.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut xs = inner.knots.clone();
        for &zeta in &self.knots[1..] {
            if let Some(x) = inner.first_preimage(zeta) {
                xs.push(x);
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let xs = coalesce(xs);
        let values: Vec<f64> =
            xs.iter().map(|&x| self.eval_nonneg(inner.eval_nonneg(x))).collect();
        let tail_slope = if inner.tail_slope == 0.0 {
            // inner is eventually constant, so the composition is too.
            0.0
        } else {
            // Beyond the last collected knot, inner has passed every knot of
            // self (their preimages are included), so both run on their tails.
            self.tail_slope * inner.tail_slope
        };
        Self { knots: xs, values, tail_slope }
    }

    /// Transfer map `g = (f_next^{-1} + h)^{-1}` sending pre-payoff gross
    /// equity to net equity.
    pub fn payoff_transfer(f_next: &Self, h: &Self) -> Result<Self, PlfError> {
        f_next.invert()?.add(h).invert()
    }

    /// Smallest `x >= 0` with `self(x) = y`, or `None` if `y` is never attained.
    fn first_preimage(&self, y: f64) -> Option<f64> {
        if y <= self.values[0] {
            return Some(0.0);
        }
        // First index with value >= y; the segment just before it crosses y
        // with positive slope.
        let idx = self.values.partition_point(|&v| v < y);
        if idx < self.values.len() {
            let slope = self.segment_slope(idx - 1);
            return Some(self.knots[idx - 1] + (y - self.values[idx - 1]) / slope);
        }
        let last = self.knots.len() - 1;
        if self.tail_slope > 0.0 {
            return Some(self.knots[last] + (y - self.values[last]) / self.tail_slope);
        }
        None
    }
}

/// Sorted union of two knot sequences with near-duplicates coalesced.
fn merge_knots(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut xs = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if x <= y {
                    i += 1;
                    x
                } else {
                    j += 1;
                    y
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        xs.push(next);
    }
    coalesce(xs)
}

/// Drop knots that collide with their left neighbour within relative
/// tolerance, keeping the left one.
fn coalesce(xs: Vec<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&prev) => {
                let scale = prev.abs().max(x.abs());
                if x - prev > KNOT_MERGE_REL * scale && x > prev {
                    out.push(x);
                }
            }
            None => out.push(x),
        }
    }
    out
}
