//! Gaussian-mixture phase-space states.
//!
//! All quantities are in shot-noise units (SNU): the vacuum has variance 1 in
//! every quadrature, so a squeezed quadrature has variance below 1 and every
//! physical component satisfies `var_x · var_p ≥ 1`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the uncertainty product so that states produced by lossy
/// transformations of minimum-uncertainty inputs are not rejected by rounding.
const UNCERTAINTY_SLACK: f64 = 1e-9;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Direction of a dB ⇄ SNU variance conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbDirection {
    ToSnu,
    ToDb,
}

/// Converts a variance between dB relative to shot noise and linear SNU.
///
/// `V_dB = 10·log10(V_SNU)`. Converting a non-positive variance to dB is a
/// domain error.
pub fn db_variance_conversion(value: f64, direction: DbDirection) -> Result<f64> {
    match direction {
        DbDirection::ToSnu => {
            if !value.is_finite() {
                return Err(Error::domain(format!("dB value {value} is not finite")));
            }
            Ok(db_to_snu(value))
        }
        DbDirection::ToDb => snu_to_db(value),
    }
}

pub fn db_to_snu(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn snu_to_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::domain(format!(
            "variance {variance} must be positive and finite to convert to dB"
        )));
    }
    Ok(10.0 * variance.log10())
}

/// Measurement angle in phase space, measured from the amplitude (x) axis.
///
/// `theta = 0` measures x, `theta = π/2` measures p. Always stored in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "f64", from = "f64")]
pub struct QuadratureAngle(f64);

impl QuadratureAngle {
    pub const AMPLITUDE: QuadratureAngle = QuadratureAngle(0.0);
    pub const PHASE: QuadratureAngle = QuadratureAngle(PI / 2.0);

    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if t >= TAU {
            t = 0.0;
        }
        QuadratureAngle(t)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// `(cos θ, sin θ)`, with exact zeros on the four axis angles.
    pub fn direction(self) -> (f64, f64) {
        let t = self.0;
        if t == 0.0 {
            (1.0, 0.0)
        } else if t == PI / 2.0 {
            (0.0, 1.0)
        } else if t == PI {
            (-1.0, 0.0)
        } else if t == 1.5 * PI {
            (0.0, -1.0)
        } else {
            (t.cos(), t.sin())
        }
    }
}

impl From<f64> for QuadratureAngle {
    fn from(theta: f64) -> Self {
        QuadratureAngle::new(theta)
    }
}

impl From<QuadratureAngle> for f64 {
    fn from(a: QuadratureAngle) -> f64 {
        a.0
    }
}

/// One Gaussian constituent: quadrature means and diagonal variances (SNU).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianComponent {
    mean_x: f64,
    mean_p: f64,
    var_x: f64,
    var_p: f64,
}

impl GaussianComponent {
    pub fn new(mean_x: f64, mean_p: f64, var_x: f64, var_p: f64) -> Result<Self> {
        if !(mean_x.is_finite() && mean_p.is_finite()) {
            return Err(Error::domain("component means must be finite"));
        }
        if !(var_x > 0.0 && var_p > 0.0) || !var_x.is_finite() || !var_p.is_finite() {
            return Err(Error::domain(format!(
                "component variances must be positive and finite (var_x = {var_x}, var_p = {var_p})"
            )));
        }
        if var_x * var_p < 1.0 - UNCERTAINTY_SLACK {
            return Err(Error::domain(format!(
                "uncertainty relation violated: var_x·var_p = {} < 1",
                var_x * var_p
            )));
        }
        Ok(GaussianComponent {
            mean_x,
            mean_p,
            var_x,
            var_p,
        })
    }

    /// The vacuum state at the origin.
    pub fn vacuum() -> Self {
        GaussianComponent {
            mean_x: 0.0,
            mean_p: 0.0,
            var_x: 1.0,
            var_p: 1.0,
        }
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }
    pub fn mean_p(&self) -> f64 {
        self.mean_p
    }
    pub fn var_x(&self) -> f64 {
        self.var_x
    }
    pub fn var_p(&self) -> f64 {
        self.var_p
    }

    pub fn projected_mean(&self, angle: QuadratureAngle) -> f64 {
        let (c, s) = angle.direction();
        self.mean_x * c + self.mean_p * s
    }

    pub fn projected_variance(&self, angle: QuadratureAngle) -> f64 {
        let (c, s) = angle.direction();
        self.var_x * c * c + self.var_p * s * s
    }

    pub fn density(&self, x: f64, p: f64) -> f64 {
        let dx = x - self.mean_x;
        let dp = p - self.mean_p;
        let exponent = -dx * dx / (2.0 * self.var_x) - dp * dp / (2.0 * self.var_p);
        exponent.exp() / (2.0 * PI * (self.var_x * self.var_p).sqrt())
    }

    /// Rotates the component counter-clockwise by `quarter_turns`·90° in
    /// phase space. Quarter turns are the only rotations that keep the
    /// covariance diagonal.
    pub fn rotated_quarter_turns(&self, quarter_turns: i32) -> Self {
        let mut c = *self;
        for _ in 0..quarter_turns.rem_euclid(4) {
            c = GaussianComponent {
                mean_x: -c.mean_p,
                mean_p: c.mean_x,
                var_x: c.var_p,
                var_p: c.var_x,
            };
        }
        c
    }

    /// Unchecked constructor for values that are valid by construction.
    pub(crate) fn from_parts(mean_x: f64, mean_p: f64, var_x: f64, var_p: f64) -> Self {
        GaussianComponent {
            mean_x,
            mean_p,
            var_x,
            var_p,
        }
    }
}

/// Convex combination of Gaussian components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureState {
    components: Vec<GaussianComponent>,
    weights: Vec<f64>,
}

impl MixtureState {
    pub fn new(components: Vec<GaussianComponent>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(Error::domain(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::domain(format!("mixture weight {w} outside [0, 1]")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::domain(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(MixtureState {
            components,
            weights,
        })
    }

    pub fn single(component: GaussianComponent) -> Self {
        MixtureState {
            components: vec![component],
            weights: vec![1.0],
        }
    }

    pub fn vacuum() -> Self {
        Self::single(GaussianComponent::vacuum())
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `(weight, component)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &GaussianComponent)> {
        self.weights.iter().copied().zip(self.components.iter())
    }

    /// Applies `f` to every component, keeping the weights.
    pub fn map_components(&self, f: impl Fn(&GaussianComponent) -> GaussianComponent) -> Self {
        MixtureState {
            components: self.components.iter().map(f).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Displacement of the noisy component, in Cartesian form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub x: f64,
    pub p: f64,
}

impl Displacement {
    pub fn from_polar(magnitude: f64, angle: f64) -> Self {
        Displacement {
            x: magnitude * angle.cos(),
            p: magnitude * angle.sin(),
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.x.hypot(self.p)
    }

    pub fn angle(&self) -> f64 {
        self.p.atan2(self.x)
    }
}

/// Builds the two-component noisy state: an undisplaced squeezed state with
/// weight `1 − γ` and a copy displaced by `magnitude` along `angle` with
/// weight `γ`.
pub fn make_noisy_state(
    var_sq: f64,
    var_anti: f64,
    gamma: f64,
    displacement_magnitude: f64,
    displacement_angle: f64,
) -> Result<MixtureState> {
    let d = Displacement::from_polar(displacement_magnitude, displacement_angle);
    make_noisy_state_xp(var_sq, var_anti, gamma, d)
}

/// [`make_noisy_state`] with the displacement given as `(x̄₁, p̄₁)`.
pub fn make_noisy_state_xp(
    var_sq: f64,
    var_anti: f64,
    gamma: f64,
    displacement: Displacement,
) -> Result<MixtureState> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma {gamma} outside [0, 1]")));
    }
    let base = GaussianComponent::new(0.0, 0.0, var_sq, var_anti)?;
    let displaced = GaussianComponent::new(displacement.x, displacement.p, var_sq, var_anti)?;
    MixtureState::new(vec![base, displaced], vec![1.0 - gamma, gamma])
}

/// Mean and variance of the quadrature at `angle`.
pub fn quadrature_stats(state: &MixtureState, angle: QuadratureAngle) -> (f64, f64) {
    let mean: f64 = state.iter().map(|(w, c)| w * c.projected_mean(angle)).sum();
    // Σ w_i (v_i + (m_i − mean)²) is the same quantity as Σ w_i (v_i + m_i²) − mean²
    // without the cancellation.
    let variance = state
        .iter()
        .map(|(w, c)| {
            let dm = c.projected_mean(angle) - mean;
            w * (c.projected_variance(angle) + dm * dm)
        })
        .sum();
    (mean, variance)
}

/// Wigner function of the mixture at `(x, p)`.
pub fn wigner_density(state: &MixtureState, x: f64, p: f64) -> f64 {
    state.iter().map(|(w, c)| w * c.density(x, p)).sum()
}

/// Marginal density of the quadrature at `angle`, evaluated at `q`.
pub fn marginal_pdf(state: &MixtureState, angle: QuadratureAngle, q: f64) -> f64 {
    state
        .iter()
        .map(|(w, c)| w * gaussian_pdf(q, c.projected_mean(angle), c.projected_variance(angle)))
        .sum()
}

pub(crate) fn gaussian_pdf(q: f64, mean: f64, variance: f64) -> f64 {
    let d = q - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}
