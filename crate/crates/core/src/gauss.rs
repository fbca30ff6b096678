//! Standard-normal helpers and closed-form expectations of piecewise-linear
//! functions of log-normal shocks.
//!
//! The expectation `E[g(x' Z)]` with `Z = e^N`, `N ~ Normal(m, s^2)` reduces
//! segment by segment to differences of the standard normal CDF, so no
//! quadrature is involved anywhere in the engine.

use crate::model::LogNormalLaw;
use crate::plf::MonotonePLF;

const SQRT_2PI: f64 = 2.506628274631000502415765284811;

/// Standard normal CDF via `erfc`; absolute error well below 1e-14.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley refinement step, giving close to full double precision.
pub fn inv_std_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must be in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement.
    let e = std_normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// `Phi(b) - Phi(a)` with a midpoint-density substitute when the interval is
/// too narrow for the direct difference to survive cancellation.
fn cdf_diff(a: f64, b: f64) -> f64 {
    if a.is_finite() && b.is_finite() && (b - a).abs() < 1e-10 {
        return (b - a) * std_normal_pdf(0.5 * (a + b));
    }
    std_normal_cdf(b) - std_normal_cdf(a)
}

/// `E[g(x' Z)]` for `Z = e^N`, `N ~ Normal(law.m, law.s^2)`.
///
/// Each segment of `g` with intercept `alpha` and slope `beta` on
/// `[z0, z1)` contributes
/// `alpha (Phi(b) - Phi(a)) + beta x' e^{m + s^2/2} (Phi(b - s) - Phi(a - s))`
/// with `a = (ln(z0/x') - m)/s` and `b` likewise; the last segment runs to
/// infinity with the tail slope. A point-mass law (`s = 0`) short-circuits
/// to direct evaluation, and `x' = 0` to `g(0) = 0`.
pub fn expected_plf(g: &MonotonePLF, x_prime: f64, law: &LogNormalLaw) -> f64 {
    assert!(x_prime >= 0.0, "scale must be nonnegative");
    if x_prime == 0.0 {
        return 0.0;
    }
    if law.s == 0.0 {
        return g.eval(x_prime * law.m.exp()).expect("nonnegative argument");
    }
    let knots = g.knots();
    let values = g.values();
    let mean_z = (law.m + 0.5 * law.s * law.s).exp();
    let std_bound = |zeta: f64| -> f64 {
        if zeta == 0.0 {
            f64::NEG_INFINITY
        } else {
            ((zeta / x_prime).ln() - law.m) / law.s
        }
    };
    // Segments outside +-12 standard deviations of ln Z carry less than
    // 1e-23 of the mass; skip them.
    let z_lo = x_prime * (law.m - 12.0 * law.s).exp();
    let z_hi = x_prime * (law.m + 12.0 * law.s).exp();
    let seg_of = |z: f64| knots.partition_point(|&k| k <= z).saturating_sub(1);
    let i_start = seg_of(z_lo);
    let i_end = seg_of(z_hi).max(i_start);
    let mut acc = 0.0;
    for i in i_start..=i_end {
        let (z1, slope) = if i + 1 < knots.len() {
            (knots[i + 1], (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]))
        } else {
            (f64::INFINITY, g.tail_slope())
        };
        let intercept = values[i] - slope * knots[i];
        let a = std_bound(knots[i]);
        let b = if z1.is_finite() { std_bound(z1) } else { f64::INFINITY };
        if intercept != 0.0 {
            acc += intercept * cdf_diff(a, b);
        }
        if slope != 0.0 {
            acc += slope * x_prime * mean_z * cdf_diff(a - law.s, b - law.s);
        }
    }
    acc
}
