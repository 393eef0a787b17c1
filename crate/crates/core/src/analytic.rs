//! Closed-form distillation theory.
//!
//! The input mixture is split on a tap beam splitter, one quadrature of the
//! tap port is measured, and the signal is kept only when the tap outcome
//! passes a threshold. Every component of the mixture stays Gaussian through
//! the splitter, so the post-selected signal is a reweighted mixture whose
//! weights are the per-component acceptance probabilities ("filter weights").
//! For two components with the tap measuring the anti-squeezed quadrature
//! this reproduces
//!
//! ```text
//! Π = (1−γ)·g₀ + γ·g₁,   r = (1−γ)·g₀ / (γ·g₁)
//! Δ²X_s,distilled = Δ²X_s + T·x̄₁²·r/(1+r)²
//! ```
//!
//! When the tap and signal projections are correlated inside a component
//! (general tap angles), each component is handled by truncated bivariate
//! Gaussian moments instead; see [`conditional_truncated_stats`].

use std::cmp::Ordering;
use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{self, erfc, ln_erfc, log_sum_exp};
use crate::states::{GaussianComponent, MixtureState, QuadratureAngle};

const SPLIT_SUM_TOL: f64 = 1e-12;
/// Relative size of the within-component tap/signal covariance, compared to
/// `sqrt(signal_var·tap_var)`, below which the projections count as independent.
const INDEPENDENCE_TOL: f64 = 1e-9;
const EMPTY_SELECTION: f64 = 1e-300;

/// Tap beam splitter with transmittance `T` to the signal and reflectance
/// `R = 1 − T` to the tap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplitterRepr", into = "SplitterRepr")]
pub struct TapSplitter {
    transmittance: f64,
    reflectance: f64,
}

#[derive(Serialize, Deserialize)]
struct SplitterRepr {
    transmittance: f64,
    reflectance: f64,
}

impl TryFrom<SplitterRepr> for TapSplitter {
    type Error = Error;
    fn try_from(r: SplitterRepr) -> Result<Self> {
        TapSplitter::with_ratios(r.transmittance, r.reflectance)
    }
}

impl From<TapSplitter> for SplitterRepr {
    fn from(s: TapSplitter) -> Self {
        SplitterRepr {
            transmittance: s.transmittance,
            reflectance: s.reflectance,
        }
    }
}

impl TapSplitter {
    pub fn from_transmittance(transmittance: f64) -> Result<Self> {
        Self::with_ratios(transmittance, 1.0 - transmittance)
    }

    pub fn from_reflectance(reflectance: f64) -> Result<Self> {
        Self::with_ratios(1.0 - reflectance, reflectance)
    }

    pub fn with_ratios(transmittance: f64, reflectance: f64) -> Result<Self> {
        if !(transmittance > 0.0 && reflectance > 0.0) {
            return Err(Error::domain(format!(
                "splitter ratios must be strictly positive (T = {transmittance}, R = {reflectance})"
            )));
        }
        if (transmittance + reflectance - 1.0).abs() > SPLIT_SUM_TOL {
            return Err(Error::domain(format!(
                "T + R = {} is not 1",
                transmittance + reflectance
            )));
        }
        Ok(TapSplitter {
            transmittance,
            reflectance,
        })
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn reflectance(&self) -> f64 {
        self.reflectance
    }
}

/// Which side of the threshold is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeepSide {
    #[default]
    Above,
    Below,
}

impl KeepSide {
    /// Whether a tap outcome passes. `Above` keeps `t ≥ threshold`, `Below`
    /// keeps `t < threshold`, so the two sides partition every dataset.
    pub fn passes(self, tap_value: f64, threshold: f64) -> bool {
        match self {
            KeepSide::Above => tap_value >= threshold,
            KeepSide::Below => tap_value < threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostSelectionRule {
    /// Measured tap quadrature, from the squeezed (x) axis.
    pub tap_angle: QuadratureAngle,
    /// Threshold on the tap outcome, SNU amplitude.
    pub threshold: f64,
    #[serde(default)]
    pub keep_side: KeepSide,
}

impl PostSelectionRule {
    pub fn new(tap_angle: QuadratureAngle, threshold: f64, keep_side: KeepSide) -> Self {
        PostSelectionRule {
            tap_angle,
            threshold,
            keep_side,
        }
    }

    pub fn with_threshold(self, threshold: f64) -> Self {
        PostSelectionRule { threshold, ..self }
    }

    pub fn with_tap_angle(self, tap_angle: QuadratureAngle) -> Self {
        PostSelectionRule { tap_angle, ..self }
    }
}

/// Homodyne detector with quantum efficiency `η`, modeled as a loss beam
/// splitter that mixes in vacuum: `V → ηV + (1−η)`, `mean → √η·mean`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DetectorModel {
    efficiency: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { efficiency: 1.0 }
    }
}

impl TryFrom<f64> for DetectorModel {
    type Error = Error;
    fn try_from(eta: f64) -> Result<Self> {
        DetectorModel::new(eta)
    }
}

impl From<DetectorModel> for f64 {
    fn from(d: DetectorModel) -> f64 {
        d.efficiency
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::domain(format!(
                "detector efficiency {efficiency} outside (0, 1]"
            )));
        }
        Ok(DetectorModel { efficiency })
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn apply(&self, c: &GaussianComponent) -> GaussianComponent {
        let eta = self.efficiency;
        if eta == 1.0 {
            return *c;
        }
        let s = eta.sqrt();
        GaussianComponent::from_parts(
            s * c.mean_x(),
            s * c.mean_p(),
            eta * c.var_x() + (1.0 - eta),
            eta * c.var_p() + (1.0 - eta),
        )
    }
}

/// Outcome of a post-selection, analytic or estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillationResult {
    pub distilled_mean: f64,
    pub distilled_variance: f64,
    pub success_probability: f64,
    /// Standard error of `distilled_variance`; zero for analytic results.
    pub standard_error: f64,
}

/// Both output ports of the tap splitter for one input component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitOutput {
    pub signal: GaussianComponent,
    pub tap: GaussianComponent,
    /// `Cov(x_signal, x_tap)`.
    pub cross_cov_x: f64,
    /// `Cov(p_signal, p_tap)`.
    pub cross_cov_p: f64,
}

/// Beam-splitter transform of one component with vacuum in the unused port.
///
/// Signal: `x_s = √T·x + √R·x_v`; tap: `x_t = √R·x − √T·x_v` (same for p).
/// Hence signal variance `T·V + R`, tap variance `R·V + T` and cross
/// covariance `√(TR)·(V − 1)` per quadrature.
pub fn split_component_stats(component: &GaussianComponent, splitter: &TapSplitter) -> SplitOutput {
    let t = splitter.transmittance;
    let r = splitter.reflectance;
    let (st, sr) = (t.sqrt(), r.sqrt());
    let signal = GaussianComponent::from_parts(
        st * component.mean_x(),
        st * component.mean_p(),
        t * component.var_x() + r,
        t * component.var_p() + r,
    );
    let tap = GaussianComponent::from_parts(
        sr * component.mean_x(),
        sr * component.mean_p(),
        r * component.var_x() + t,
        r * component.var_p() + t,
    );
    let k = (t * r).sqrt();
    SplitOutput {
        signal,
        tap,
        cross_cov_x: k * (component.var_x() - 1.0),
        cross_cov_p: k * (component.var_p() - 1.0),
    }
}

/// The signal-port mixture after the splitter and detector.
pub fn transmitted_state(
    state: &MixtureState,
    splitter: &TapSplitter,
    detector: &DetectorModel,
) -> MixtureState {
    state.map_components(|c| detector.apply(&split_component_stats(c, splitter).signal))
}

/// The tap-port mixture after the splitter and detector.
pub fn tap_state(
    state: &MixtureState,
    splitter: &TapSplitter,
    detector: &DetectorModel,
) -> MixtureState {
    state.map_components(|c| detector.apply(&split_component_stats(c, splitter).tap))
}

/// Joint Gaussian statistics of the measured signal and tap projections for
/// one mixture component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasuredPair {
    pub signal_mean: f64,
    pub signal_variance: f64,
    pub tap_mean: f64,
    pub tap_variance: f64,
    pub cross_covariance: f64,
}

pub fn measured_pair(
    component: &GaussianComponent,
    splitter: &TapSplitter,
    detector: &DetectorModel,
    tap_angle: QuadratureAngle,
    verification_angle: QuadratureAngle,
) -> MeasuredPair {
    let split = split_component_stats(component, splitter);
    let signal = detector.apply(&split.signal);
    let tap = detector.apply(&split.tap);
    let (cv, sv) = verification_angle.direction();
    let (ct, st) = tap_angle.direction();
    // independent loss on both ports scales the cross covariance by √η·√η
    let eta = detector.efficiency();
    let cross = eta * (cv * ct * split.cross_cov_x + sv * st * split.cross_cov_p);
    MeasuredPair {
        signal_mean: signal.projected_mean(verification_angle),
        signal_variance: signal.projected_variance(verification_angle),
        tap_mean: tap.projected_mean(tap_angle),
        tap_variance: tap.projected_variance(tap_angle),
        cross_covariance: cross,
    }
}

/// Probability that a Gaussian tap outcome passes the threshold:
/// `½·erfc((threshold − mean)/√(2·variance))` for [`KeepSide::Above`], and
/// the complement for [`KeepSide::Below`].
pub fn filter_weight(
    threshold: f64,
    projected_tap_mean: f64,
    tap_variance: f64,
    keep_side: KeepSide,
) -> f64 {
    0.5 * erfc(filter_argument(
        threshold,
        projected_tap_mean,
        tap_variance,
        keep_side,
    ))
}

/// `ln` of [`filter_weight`], finite far into the rejected tail.
pub fn ln_filter_weight(
    threshold: f64,
    projected_tap_mean: f64,
    tap_variance: f64,
    keep_side: KeepSide,
) -> f64 {
    ln_erfc(filter_argument(
        threshold,
        projected_tap_mean,
        tap_variance,
        keep_side,
    )) - std::f64::consts::LN_2
}

fn filter_argument(threshold: f64, mean: f64, variance: f64, keep_side: KeepSide) -> f64 {
    let z = (threshold - mean) / (2.0 * variance).sqrt();
    match keep_side {
        KeepSide::Above => z,
        KeepSide::Below => -z,
    }
}

/// Combines per-component conditional moments into the post-selected
/// mixture moments. `ln_acceptance[i]` is `ln(w_i) + ln(g_i)`.
fn combine_posterior(
    ln_acceptance: &[f64],
    means: &[f64],
    variances: &[f64],
    success_probability: f64,
) -> Result<DistillationResult> {
    let ln_total = log_sum_exp(ln_acceptance);
    if ln_total == f64::NEG_INFINITY || ln_total.is_nan() {
        return Err(Error::EmptySelection {
            probability: success_probability,
        });
    }
    let posterior: Vec<f64> = ln_acceptance.iter().map(|l| (l - ln_total).exp()).collect();
    let mean: f64 = posterior.iter().zip(means).map(|(w, m)| w * m).sum();
    let variance: f64 = posterior
        .iter()
        .zip(means.iter().zip(variances))
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, (m, v))| w * (v + (m - mean) * (m - mean)))
        .sum();
    Ok(DistillationResult {
        distilled_mean: mean,
        distilled_variance: variance,
        success_probability: success_probability.clamp(0.0, 1.0),
        standard_error: 0.0,
    })
}

/// Weighted signal sub-distributions after post-selection on independent
/// projections: `(posterior weight, mean, variance)` per component.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorMixture {
    pub components: Vec<(f64, f64, f64)>,
    pub success_probability: f64,
}

impl PosteriorMixture {
    pub fn pdf(&self, q: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, v)| w * crate::states::gaussian_pdf(q, m, v))
            .sum()
    }
}

/// Post-selected signal distribution on the independence path.
pub fn distilled_signal_mixture(
    state: &MixtureState,
    splitter: &TapSplitter,
    rule: &PostSelectionRule,
    verification_angle: QuadratureAngle,
    detector: &DetectorModel,
) -> Result<PosteriorMixture> {
    let pairs = independent_pairs(state, splitter, rule, verification_angle, detector)?;
    let (ln_acc, success) = filter_acceptance(state, &pairs, rule);
    let ln_total = log_sum_exp(&ln_acc);
    if ln_total == f64::NEG_INFINITY {
        return Err(Error::EmptySelection {
            probability: success,
        });
    }
    let components = ln_acc
        .iter()
        .zip(&pairs)
        .map(|(l, p)| ((l - ln_total).exp(), p.signal_mean, p.signal_variance))
        .collect();
    Ok(PosteriorMixture {
        components,
        success_probability: success,
    })
}

fn independent_pairs(
    state: &MixtureState,
    splitter: &TapSplitter,
    rule: &PostSelectionRule,
    verification_angle: QuadratureAngle,
    detector: &DetectorModel,
) -> Result<Vec<MeasuredPair>> {
    state
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let pair = measured_pair(c, splitter, detector, rule.tap_angle, verification_angle);
            let scale = (pair.signal_variance * pair.tap_variance).sqrt();
            if pair.cross_covariance.abs() > INDEPENDENCE_TOL * scale {
                Err(Error::CorrelatedProjections {
                    component: i,
                    covariance: pair.cross_covariance,
                })
            } else {
                Ok(pair)
            }
        })
        .collect()
}

fn filter_acceptance(
    state: &MixtureState,
    pairs: &[MeasuredPair],
    rule: &PostSelectionRule,
) -> (Vec<f64>, f64) {
    let mut success = 0.0;
    let ln_acc = state
        .weights()
        .iter()
        .zip(pairs)
        .map(|(&w, p)| {
            success +=
                w * filter_weight(rule.threshold, p.tap_mean, p.tap_variance, rule.keep_side);
            if w == 0.0 {
                f64::NEG_INFINITY
            } else {
                w.ln()
                    + ln_filter_weight(rule.threshold, p.tap_mean, p.tap_variance, rule.keep_side)
            }
        })
        .collect();
    (ln_acc, success)
}

/// Distilled signal moments when tap and signal projections are independent
/// within every component.
///
/// Each component is reweighted by its filter weight `g_i`; the success
/// probability is `Σ w_i·g_i`. Correlated projections (general tap angles)
/// are rejected with [`Error::CorrelatedProjections`]; use [`angle_sweep`]
/// or [`conditional_truncated_stats`] for those.
pub fn distilled_stats(
    state: &MixtureState,
    splitter: &TapSplitter,
    rule: &PostSelectionRule,
    verification_angle: QuadratureAngle,
    detector: &DetectorModel,
) -> Result<DistillationResult> {
    let pairs = independent_pairs(state, splitter, rule, verification_angle, detector)?;
    let (ln_acc, success) = filter_acceptance(state, &pairs, rule);
    let means: Vec<f64> = pairs.iter().map(|p| p.signal_mean).collect();
    let vars: Vec<f64> = pairs.iter().map(|p| p.signal_variance).collect();
    combine_posterior(&ln_acc, &means, &vars, success)
}

/// Moments of the signal conditioned on the tap passing the threshold, for a
/// single bivariate Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMoments {
    pub mean: f64,
    pub variance: f64,
    pub weight: f64,
}

/// Truncated-bivariate-Gaussian moments.
///
/// With `α = (threshold − tap_mean)/σ_t` and hazard `λ = φ(α)/(1 − Φ(α))`,
/// keeping the upper side gives
///
/// ```text
/// weight   = 1 − Φ(α)
/// mean     = signal_mean + (c/σ_t)·λ
/// variance = signal_variance − (c²/σ_t²)·λ·(λ − α)
/// ```
///
/// The lower side is the same with the tap axis reflected.
#[allow(clippy::too_many_arguments)]
pub fn conditional_truncated_stats(
    signal_mean: f64,
    signal_variance: f64,
    tap_mean: f64,
    tap_variance: f64,
    cross_covariance: f64,
    threshold: f64,
    keep_side: KeepSide,
) -> Result<TruncatedMoments> {
    let (m, ln_weight) = truncated_moments_ln(
        signal_mean,
        signal_variance,
        tap_mean,
        tap_variance,
        cross_covariance,
        threshold,
        keep_side,
    )?;
    let weight = ln_weight.exp();
    if !(weight >= EMPTY_SELECTION) {
        return Err(Error::EmptySelection {
            probability: weight,
        });
    }
    Ok(TruncatedMoments {
        mean: m.mean,
        variance: m.variance,
        weight,
    })
}

/// Returns the moments together with `ln(weight)`, without the empty-selection
/// cut-off.
fn truncated_moments_ln(
    signal_mean: f64,
    signal_variance: f64,
    tap_mean: f64,
    tap_variance: f64,
    cross_covariance: f64,
    threshold: f64,
    keep_side: KeepSide,
) -> Result<(TruncatedMoments, f64)> {
    if !(tap_variance > 0.0) || !tap_variance.is_finite() {
        return Err(Error::domain(format!(
            "degenerate tap variance {tap_variance}"
        )));
    }
    if !(signal_variance > 0.0) || !signal_variance.is_finite() {
        return Err(Error::domain(format!(
            "non-positive signal variance {signal_variance}"
        )));
    }
    let bound = (signal_variance * tap_variance).sqrt();
    if cross_covariance.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "|cross covariance| {} exceeds sqrt(signal_var·tap_var) = {bound}",
            cross_covariance.abs()
        )));
    }
    // reflect the tap axis so that the kept region is always the upper tail
    let (tap_mean, threshold, cov) = match keep_side {
        KeepSide::Above => (tap_mean, threshold, cross_covariance),
        KeepSide::Below => (-tap_mean, -threshold, -cross_covariance),
    };
    let sigma = tap_variance.sqrt();
    let alpha = (threshold - tap_mean) / sigma;
    let ln_weight = special::ln_erfc(alpha * FRAC_1_SQRT_2) - std::f64::consts::LN_2;
    let lambda = special::inverse_mills(alpha);
    let (mean, variance) = if lambda == 0.0 || cov == 0.0 {
        (signal_mean, signal_variance)
    } else {
        let excess = special::inverse_mills_excess(alpha);
        (
            signal_mean + cov / sigma * lambda,
            signal_variance - cov * cov / tap_variance * lambda * excess,
        )
    };
    Ok((
        TruncatedMoments {
            mean,
            variance,
            weight: ln_weight.exp(),
        },
        ln_weight,
    ))
}

/// General post-selection for arbitrary tap angles: per-component truncated
/// moments combined over the mixture.
pub fn correlated_distilled_stats(
    state: &MixtureState,
    splitter: &TapSplitter,
    rule: &PostSelectionRule,
    verification_angle: QuadratureAngle,
    detector: &DetectorModel,
) -> Result<DistillationResult> {
    let mut ln_acc = Vec::with_capacity(state.len());
    let mut means = Vec::with_capacity(state.len());
    let mut vars = Vec::with_capacity(state.len());
    let mut success = 0.0;
    for (w, c) in state.iter() {
        let p = measured_pair(c, splitter, detector, rule.tap_angle, verification_angle);
        let (m, ln_g) = truncated_moments_ln(
            p.signal_mean,
            p.signal_variance,
            p.tap_mean,
            p.tap_variance,
            p.cross_covariance,
            rule.threshold,
            rule.keep_side,
        )?;
        success += w * m.weight;
        ln_acc.push(if w == 0.0 {
            f64::NEG_INFINITY
        } else {
            w.ln() + ln_g
        });
        means.push(m.mean);
        vars.push(m.variance);
    }
    combine_posterior(&ln_acc, &means, &vars, success)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub result: DistillationResult,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleRow {
    /// Tap angle β in radians.
    pub beta: f64,
    pub result: DistillationResult,
}

/// [`distilled_stats`] at every threshold, rows sorted by threshold.
pub fn threshold_sweep(
    state: &MixtureState,
    splitter: &TapSplitter,
    rule_template: &PostSelectionRule,
    verification_angle: QuadratureAngle,
    detector: &DetectorModel,
    thresholds: &[f64],
) -> Result<Vec<ThresholdRow>> {
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .par_iter()
        .map(|&threshold| {
            let rule = rule_template.with_threshold(threshold);
            distilled_stats(state, splitter, &rule, verification_angle, detector)
                .map(|result| ThresholdRow { threshold, result })
        })
        .collect()
}

/// Distillation as a function of the measured tap quadrature angle β, rows
/// sorted by β. Uses truncated moments so that any β is valid.
#[allow(clippy::too_many_arguments)]
pub fn angle_sweep(
    state: &MixtureState,
    splitter: &TapSplitter,
    threshold: f64,
    keep_side: KeepSide,
    verification_angle: QuadratureAngle,
    detector: &DetectorModel,
    betas: &[f64],
) -> Result<Vec<AngleRow>> {
    let mut sorted = betas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    sorted
        .par_iter()
        .map(|&beta| {
            let rule = PostSelectionRule::new(QuadratureAngle::new(beta), threshold, keep_side);
            correlated_distilled_stats(state, splitter, &rule, verification_angle, detector)
                .map(|result| AngleRow { beta, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{
        db_to_snu, make_noisy_state_xp, quadrature_stats, snu_to_db, Displacement,
    };
    use approx::assert_relative_eq;

    fn canonical() -> (MixtureState, TapSplitter) {
        let var_sq = db_to_snu(-3.1);
        let var_anti = db_to_snu(27.0);
        let x1 = ((db_to_snu(1.4) - var_sq) / 0.25).sqrt();
        let state =
            make_noisy_state_xp(var_sq, var_anti, 0.5, Displacement { x: x1, p: 60.0 }).unwrap();
        let r = (db_to_snu(17.5) - 1.0) / (var_anti - 1.0);
        (state, TapSplitter::from_reflectance(r).unwrap())
    }

    fn phase_rule(threshold: f64) -> PostSelectionRule {
        PostSelectionRule::new(QuadratureAngle::PHASE, threshold, KeepSide::Above)
    }

    #[test]
    fn splitter_validation() {
        assert!(TapSplitter::from_transmittance(1.0).is_err());
        assert!(TapSplitter::from_transmittance(0.0).is_err());
        assert!(TapSplitter::with_ratios(0.5, 0.6).is_err());
        let s = TapSplitter::from_reflectance(0.25).unwrap();
        assert_eq!(s.transmittance() + s.reflectance(), 1.0);
    }

    #[test]
    fn detector_validation() {
        assert!(DetectorModel::new(0.0).is_err());
        assert!(DetectorModel::new(1.01).is_err());
        let d = DetectorModel::new(0.85).unwrap();
        let c = d.apply(&GaussianComponent::vacuum());
        assert_relative_eq!(c.var_x(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn vacuum_is_invariant_under_splitting() {
        let s = TapSplitter::from_reflectance(0.3).unwrap();
        let out = split_component_stats(&GaussianComponent::vacuum(), &s);
        assert_relative_eq!(out.signal.var_x(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(out.tap.var_p(), 1.0, max_relative = 1e-15);
        assert_eq!(out.cross_cov_x, 0.0);
        assert_eq!(out.cross_cov_p, 0.0);
    }

    #[test]
    fn tap_variance_matches_measured_value() {
        let (state, splitter) = canonical();
        assert_relative_eq!(splitter.reflectance(), 0.11043, epsilon = 1e-5);
        let out = split_component_stats(&state.components()[0], &splitter);
        assert_relative_eq!(out.tap.var_p(), 56.23, max_relative = 1e-4);
        assert_relative_eq!(snu_to_db(out.tap.var_p()).unwrap(), 17.5, epsilon = 1e-12);
        assert_relative_eq!(out.signal.var_x(), 0.5461, max_relative = 1e-4);
        assert_relative_eq!(
            snu_to_db(out.signal.var_x()).unwrap(),
            -2.63,
            epsilon = 5e-3
        );
    }

    #[test]
    fn filter_weight_examples() {
        assert_eq!(filter_weight(1.5, 1.5, 4.0, KeepSide::Above), 0.5);
        assert_eq!(
            filter_weight(f64::NEG_INFINITY, 0.0, 4.0, KeepSide::Above),
            1.0
        );
        let v: f64 = 3.0;
        let w = filter_weight(2.0 + (2.0 * v).sqrt(), 2.0, v, KeepSide::Above);
        assert_relative_eq!(w, 0.078_649_603_525_142_58, max_relative = 1e-13);
        let below = filter_weight(2.0 + (2.0 * v).sqrt(), 2.0, v, KeepSide::Below);
        assert_relative_eq!(w + below, 1.0, max_relative = 1e-15);
        assert!(ln_filter_weight(1e6, 0.0, 1.0, KeepSide::Above).is_finite());
    }

    #[test]
    fn no_selection_reduces_to_transmitted_state() {
        let (state, splitter) = canonical();
        let d = DetectorModel::default();
        let res = distilled_stats(
            &state,
            &splitter,
            &phase_rule(-1e6),
            QuadratureAngle::AMPLITUDE,
            &d,
        )
        .unwrap();
        let (_, var) = quadrature_stats(
            &transmitted_state(&state, &splitter, &d),
            QuadratureAngle::AMPLITUDE,
        );
        assert!((res.distilled_variance - var).abs() < 1e-9);
        assert_eq!(res.success_probability, 1.0);
        assert_relative_eq!(var, 1.3384, max_relative = 1e-4);
        assert_relative_eq!(snu_to_db(var).unwrap(), 1.27, epsilon = 5e-3);
    }

    #[test]
    fn high_threshold_recovers_squeezing() {
        let (state, splitter) = canonical();
        // tap centres at 0 and √R·60 ≈ 19.9; keep well above the displaced one
        let res = distilled_stats(
            &state,
            &splitter,
            &phase_rule(60.0),
            QuadratureAngle::AMPLITUDE,
            &DetectorModel::default(),
        )
        .unwrap();
        assert_relative_eq!(res.distilled_variance, 0.5461, max_relative = 1e-3);
        assert!(res.success_probability > 0.0);
        // far beyond where erfc underflows the posterior is still defined
        let res = distilled_stats(
            &state,
            &splitter,
            &phase_rule(1e4),
            QuadratureAngle::AMPLITUDE,
            &DetectorModel::default(),
        )
        .unwrap();
        assert_relative_eq!(res.distilled_variance, 0.54612, max_relative = 1e-4);
        assert_eq!(res.success_probability, 0.0);
    }

    #[test]
    fn correlated_projections_are_rejected() {
        let (state, splitter) = canonical();
        let rule = PostSelectionRule::new(QuadratureAngle::new(0.4), 0.0, KeepSide::Above);
        let err = distilled_stats(
            &state,
            &splitter,
            &rule,
            QuadratureAngle::AMPLITUDE,
            &DetectorModel::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CorrelatedProjections { .. }));
        assert!(err.to_string().contains("conditional_truncated_stats"));
    }

    #[test]
    fn degenerate_gamma_gives_single_component() {
        let state = make_noisy_state_xp(0.5, 4.0, 0.0, Displacement { x: 2.0, p: 3.0 }).unwrap();
        let splitter = TapSplitter::from_reflectance(0.2).unwrap();
        let res = distilled_stats(
            &state,
            &splitter,
            &phase_rule(0.5),
            QuadratureAngle::AMPLITUDE,
            &DetectorModel::default(),
        )
        .unwrap();
        assert_relative_eq!(
            res.distilled_variance,
            0.8 * 0.5 + 0.2,
            max_relative = 1e-14
        );
        assert_eq!(res.distilled_mean, 0.0);
    }

    #[test]
    fn truncated_examples() {
        let m = conditional_truncated_stats(1.0, 2.0, 0.5, 3.0, 0.0, 1.2, KeepSide::Above).unwrap();
        assert_eq!((m.mean, m.variance), (1.0, 2.0));
        assert_relative_eq!(
            m.weight,
            filter_weight(1.2, 0.5, 3.0, KeepSide::Above),
            max_relative = 1e-14
        );

        let m = conditional_truncated_stats(
            1.0,
            2.0,
            0.5,
            3.0,
            1.5,
            f64::NEG_INFINITY,
            KeepSide::Above,
        )
        .unwrap();
        assert_eq!((m.mean, m.variance, m.weight), (1.0, 2.0, 1.0));

        assert!(matches!(
            conditional_truncated_stats(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, KeepSide::Above),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            conditional_truncated_stats(0.0, 1.0, 0.0, 1.0, 0.5, 60.0, KeepSide::Above),
            Err(Error::EmptySelection { .. })
        ));
        assert!(
            conditional_truncated_stats(0.0, 1.0, 0.0, 1.0, 1.5, 0.0, KeepSide::Above).is_err()
        );
    }

    #[test]
    fn truncated_lower_side_mirrors_upper_side() {
        let up =
            conditional_truncated_stats(0.3, 2.0, 0.1, 3.0, 1.1, 0.7, KeepSide::Above).unwrap();
        let down =
            conditional_truncated_stats(0.3, 2.0, -0.1, 3.0, -1.1, -0.7, KeepSide::Below).unwrap();
        assert_relative_eq!(up.mean, down.mean, max_relative = 1e-14);
        assert_relative_eq!(up.variance, down.variance, max_relative = 1e-14);
        assert_relative_eq!(up.weight, down.weight, max_relative = 1e-14);
    }

    #[test]
    fn threshold_sweep_is_ordered() {
        let (state, splitter) = canonical();
        let rows = threshold_sweep(
            &state,
            &splitter,
            &phase_rule(0.0),
            QuadratureAngle::AMPLITUDE,
            &DetectorModel::default(),
            &[5.0, -1.0, 2.0],
        )
        .unwrap();
        let ts: Vec<f64> = rows.iter().map(|r| r.threshold).collect();
        assert_eq!(ts, vec![-1.0, 2.0, 5.0]);
    }

    #[test]
    fn angle_sweep_at_phase_matches_independent_path() {
        let (state, splitter) = canonical();
        let d = DetectorModel::new(0.85).unwrap();
        for &th in &[-5.0, 3.0, 10.0, 25.0] {
            let a = angle_sweep(
                &state,
                &splitter,
                th,
                KeepSide::Above,
                QuadratureAngle::AMPLITUDE,
                &d,
                &[std::f64::consts::FRAC_PI_2],
            )
            .unwrap();
            let b = distilled_stats(
                &state,
                &splitter,
                &phase_rule(th),
                QuadratureAngle::AMPLITUDE,
                &d,
            )
            .unwrap();
            assert_relative_eq!(
                a[0].result.distilled_variance,
                b.distilled_variance,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                a[0].result.distilled_mean,
                b.distilled_mean,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                a[0].result.success_probability,
                b.success_probability,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn orthogonal_displacement_gives_no_discrimination() {
        // displacement purely along p, tap measures x: both components look identical
        let state = make_noisy_state_xp(0.5, 4.0, 0.5, Displacement { x: 0.0, p: 3.0 }).unwrap();
        let splitter = TapSplitter::from_reflectance(0.2).unwrap();
        let d = DetectorModel::default();
        let rows = angle_sweep(
            &state,
            &splitter,
            0.3,
            KeepSide::Above,
            QuadratureAngle::PHASE,
            &d,
            &[0.0],
        )
        .unwrap();
        let r = rows[0].result;
        // conditioning shifts both components identically, so the between-
        // component spread is the unselected one
        let m0 = measured_pair(
            &state.components()[0],
            &splitter,
            &d,
            QuadratureAngle::AMPLITUDE,
            QuadratureAngle::PHASE,
        );
        let t0 = conditional_truncated_stats(
            m0.signal_mean,
            m0.signal_variance,
            m0.tap_mean,
            m0.tap_variance,
            m0.cross_covariance,
            0.3,
            KeepSide::Above,
        )
        .unwrap();
        let spread = 0.25 * 0.8 * 9.0;
        assert_relative_eq!(
            r.distilled_variance,
            t0.variance + spread,
            max_relative = 1e-12
        );
    }
}
