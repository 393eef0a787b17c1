//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // split into panels first so narrow peaks are not missed by the first estimate
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            recurse(
                f,
                lo,
                hi,
                fa,
                fm,
                fb,
                simpson(fa, fm, fb, lo, hi),
                tol / panels as f64,
                40,
            )
        })
        .sum()
}

pub fn gaussian(q: f64, mean: f64, var: f64) -> f64 {
    (-(q - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// P(t ≥ threshold) for t ~ N(mean, var), by quadrature.
pub fn upper_tail_by_quadrature(threshold: f64, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let hi = mean + 40.0 * sd;
    if threshold >= hi {
        return 0.0;
    }
    let lo = threshold.max(mean - 40.0 * sd);
    integrate(&|t| gaussian(t, mean, var), lo, hi, 1e-15)
}

/// Moments of `s` given `t ≥ threshold` for a bivariate Gaussian, by
/// integrating the conditional moments of `s | t` over the kept tap range.
pub fn truncated_by_quadrature(
    sm: f64,
    sv: f64,
    tm: f64,
    tv: f64,
    c: f64,
    threshold: f64,
) -> (f64, f64, f64) {
    let sd = tv.sqrt();
    let lo = threshold.max(tm - 40.0 * sd);
    let hi = tm + 40.0 * sd;
    let beta = c / tv;
    let cond_var = sv - c * c / tv;
    let w = integrate(&|t| gaussian(t, tm, tv), lo, hi, 1e-14);
    let m1 = integrate(
        &|t| gaussian(t, tm, tv) * (sm + beta * (t - tm)),
        lo,
        hi,
        1e-14,
    ) / w;
    let m2 = integrate(
        &|t| {
            let m = sm + beta * (t - tm);
            gaussian(t, tm, tv) * (cond_var + m * m)
        },
        lo,
        hi,
        1e-14,
    ) / w;
    (m1, m2 - m1 * m1, w)
}

/// Two-component distilled signal statistics in the `r` parameterization:
/// returns `(mean, variance, success_probability)`.
pub fn two_component_closed_form(
    signal_var: f64,
    transmittance: f64,
    x1: f64,
    gamma: f64,
    g0: f64,
    g1: f64,
) -> (f64, f64, f64) {
    let r = (1.0 - gamma) * g0 / (gamma * g1);
    let mean = transmittance.sqrt() * x1 / (1.0 + r);
    let var = signal_var + transmittance * x1 * x1 * r / ((1.0 + r) * (1.0 + r));
    (mean, var, (1.0 - gamma) * g0 + gamma * g1)
}

use cvdistill_core::{
    db_to_snu, states::make_noisy_state_xp, DetectorModel, Displacement, KeepSide, MixtureState,
    PostSelectionRule, QuadratureAngle, SimulationConfig, TapSplitter,
};

pub struct Canonical {
    pub state: MixtureState,
    pub splitter: TapSplitter,
    pub var_sq: f64,
    pub var_anti: f64,
    pub x1: f64,
    pub p1: f64,
}

/// The −3.1 dB / +27 dB, γ = 0.5 configuration with R fixed by the +17.5 dB
/// tap variance and x̄₁ by the +1.4 dB noisy x variance.
pub fn canonical() -> Canonical {
    let var_sq = db_to_snu(-3.1);
    let var_anti = db_to_snu(27.0);
    let r = (db_to_snu(17.5) - 1.0) / (var_anti - 1.0);
    let x1 = ((db_to_snu(1.4) - var_sq) / 0.25).sqrt();
    let p1 = 60.0;
    Canonical {
        state: make_noisy_state_xp(var_sq, var_anti, 0.5, Displacement { x: x1, p: p1 }).unwrap(),
        splitter: TapSplitter::from_reflectance(r).unwrap(),
        var_sq,
        var_anti,
        x1,
        p1,
    }
}

pub fn phase_tap_rule(threshold: f64) -> PostSelectionRule {
    PostSelectionRule::new(QuadratureAngle::PHASE, threshold, KeepSide::Above)
}

pub fn canonical_sim(threshold: f64, samples: usize, seed: u64) -> SimulationConfig {
    let c = canonical();
    SimulationConfig {
        state: c.state,
        splitter: c.splitter,
        rule: phase_tap_rule(threshold),
        verification_angle: QuadratureAngle::AMPLITUDE,
        detector: DetectorModel::default(),
        sample_count: samples,
        seed,
    }
}
