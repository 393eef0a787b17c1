//! Normal-distribution special functions with tail-safe evaluation.
//!
//! `erfc` itself comes from libm; everything here exists to keep
//! far-tail ratios finite where `erfc` underflows to zero.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Argument above which the continued fraction replaces `exp(x²)·erfc(x)`.
const CF_SWITCH: f64 = 5.0;
const CF_DEPTH: usize = 80;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < CF_SWITCH {
        // overflows to +inf for x < about -26.6, which is the correct limit
        (x * x).exp() * erfc(x)
    } else {
        // erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut f = x;
        for k in (1..=CF_DEPTH).rev() {
            f = x + (k as f64 * 0.5) / f;
        }
        1.0 / (PI.sqrt() * f)
    }
}

/// Natural log of `erfc(x)`, finite for every finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x < CF_SWITCH {
        erfc(x).ln()
    } else {
        -x * x + erfcx(x).ln()
    }
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail Q(z) = 1 − Φ(z).
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// ln Q(z).
pub fn ln_normal_sf(z: f64) -> f64 {
    ln_erfc(z * FRAC_1_SQRT_2) - std::f64::consts::LN_2
}

/// Inverse Mills ratio φ(z)/Q(z), the hazard of the standard normal.
pub fn inverse_mills(z: f64) -> f64 {
    let s = erfcx(z * FRAC_1_SQRT_2);
    if s.is_infinite() {
        0.0
    } else {
        (2.0 / PI).sqrt() / s
    }
}

/// `λ(z) − z` for the inverse Mills ratio λ, without cancellation for large `z`.
pub fn inverse_mills_excess(z: f64) -> f64 {
    if z < CF_SWITCH {
        inverse_mills(z) - z
    } else {
        // λ(z) = z + 1/(z + 2/(z + 3/(z + ...)))
        let mut t = z;
        for k in (2..=CF_DEPTH).rev() {
            t = z + k as f64 / t;
        }
        1.0 / t
    }
}

/// `ln(Σ exp(a_i))`, with `-inf` entries ignored.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
