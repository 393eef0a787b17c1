use std::path::Path;

use cvdistill_core::states::make_noisy_state_xp;
use cvdistill_core::{
    db_to_snu, DetectorModel, Displacement, KeepSide, MixtureState, PostSelectionRule,
    QuadratureAngle, SimulationConfig, TapSplitter,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const CANONICAL_JSON: &str = include_str!("../../../canonical.json");

/// The JSON experiment description.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfigFile {
    pub var_sq_db: f64,
    pub var_anti_db: f64,
    pub gamma: f64,
    pub displacement: DisplacementSpec,
    #[serde(rename = "tap_R")]
    pub tap_r: f64,
    #[serde(default = "one")]
    pub detector_eta: f64,
    #[serde(default = "ninety")]
    pub tap_angle_deg: f64,
    #[serde(default)]
    pub verification_angle_deg: f64,
    pub threshold: f64,
    #[serde(default)]
    pub keep_side: KeepSide,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Free-form documentation; ignored.
    #[serde(default, rename = "notes")]
    _notes: serde::de::IgnoredAny,
}

fn one() -> f64 {
    1.0
}

fn ninety() -> f64 {
    90.0
}

fn default_samples() -> usize {
    1_000_000
}

/// Either `{x, p}` or `{magnitude, angle_deg}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementSpec {
    x: Option<f64>,
    p: Option<f64>,
    magnitude: Option<f64>,
    angle_deg: Option<f64>,
}

impl DisplacementSpec {
    fn resolve(&self) -> CliResult<Displacement> {
        match (self.x, self.p, self.magnitude, self.angle_deg) {
            (Some(x), Some(p), None, None) => Ok(Displacement { x, p }),
            (None, None, Some(m), Some(a)) => Ok(Displacement::from_polar(m, a.to_radians())),
            _ => Err(CliError::validation(
                "displacement: expected either {x, p} or {magnitude, angle_deg}",
            )),
        }
    }
}

/// A validated configuration in library types.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub var_sq: f64,
    pub gamma: f64,
    pub displacement: Displacement,
    pub state: MixtureState,
    pub splitter: TapSplitter,
    pub rule: PostSelectionRule,
    pub verification_angle: QuadratureAngle,
    pub detector: DetectorModel,
    pub samples: usize,
    pub seed: u64,
}

impl Experiment {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            state: self.state.clone(),
            splitter: self.splitter,
            rule: self.rule,
            verification_angle: self.verification_angle,
            detector: self.detector,
            sample_count: self.samples,
            seed: self.seed,
        }
    }
}

fn field<T>(name: &str, r: cvdistill_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::validation(format!("{name}: {e}")))
}

fn finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(format!(
            "{name}: must be finite, got {v}"
        )))
    }
}

impl ExperimentConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::validation(format!("invalid config: {inner}"))
            } else {
                CliError::validation(format!("{path}: {inner}"))
            }
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn canonical() -> Self {
        Self::parse(CANONICAL_JSON).expect("bundled canonical.json is valid")
    }

    pub fn validate(&self) -> CliResult<Experiment> {
        for (name, v) in [
            ("var_sq_db", self.var_sq_db),
            ("var_anti_db", self.var_anti_db),
            ("tap_angle_deg", self.tap_angle_deg),
            ("verification_angle_deg", self.verification_angle_deg),
            ("threshold", self.threshold),
        ] {
            finite(name, v)?;
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CliError::validation(format!(
                "gamma: must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.tap_r > 0.0 && self.tap_r < 1.0) {
            return Err(CliError::validation(format!(
                "tap_R: must lie in (0, 1), got {}",
                self.tap_r
            )));
        }
        if self.samples == 0 {
            return Err(CliError::validation("samples: must be at least 1"));
        }
        let displacement = self.displacement.resolve()?;
        finite("displacement", displacement.x)?;
        finite("displacement", displacement.p)?;
        let var_sq = db_to_snu(self.var_sq_db);
        let var_anti = db_to_snu(self.var_anti_db);
        let state = field(
            "var_sq_db/var_anti_db",
            make_noisy_state_xp(var_sq, var_anti, self.gamma, displacement),
        )?;
        let splitter = field("tap_R", TapSplitter::from_reflectance(self.tap_r))?;
        let detector = field("detector_eta", DetectorModel::new(self.detector_eta))?;
        Ok(Experiment {
            var_sq,
            gamma: self.gamma,
            displacement,
            state,
            splitter,
            rule: PostSelectionRule::new(
                QuadratureAngle::from_degrees(self.tap_angle_deg),
                self.threshold,
                self.keep_side,
            ),
            verification_angle: QuadratureAngle::from_degrees(self.verification_angle_deg),
            detector,
            samples: self.samples,
            seed: self.seed,
        })
    }
}

pub fn load_experiment(path: &Path) -> CliResult<Experiment> {
    ExperimentConfigFile::load(path)?.validate()
}
