//! Shared fixtures for the benchmarks.

use cvdistill_core::states::make_noisy_state_xp;
use cvdistill_core::{
    db_to_snu, DetectorModel, Displacement, GaussianComponent, KeepSide, MixtureState,
    PostSelectionRule, QuadratureAngle, SimulationConfig, TapSplitter,
};

pub fn canonical_state() -> MixtureState {
    let var_sq = db_to_snu(-3.1);
    let x1 = ((db_to_snu(1.4) - var_sq) / 0.25).sqrt();
    make_noisy_state_xp(
        var_sq,
        db_to_snu(27.0),
        0.5,
        Displacement { x: x1, p: 60.0 },
    )
    .unwrap()
}

pub fn canonical_splitter() -> TapSplitter {
    TapSplitter::from_reflectance((db_to_snu(17.5) - 1.0) / (db_to_snu(27.0) - 1.0)).unwrap()
}

pub fn phase_rule(threshold: f64) -> PostSelectionRule {
    PostSelectionRule::new(QuadratureAngle::PHASE, threshold, KeepSide::Above)
}

pub fn canonical_simulation(samples: usize) -> SimulationConfig {
    SimulationConfig {
        state: canonical_state(),
        splitter: canonical_splitter(),
        rule: phase_rule(21.4),
        verification_angle: QuadratureAngle::AMPLITUDE,
        detector: DetectorModel::default(),
        sample_count: samples,
        seed: 1,
    }
}

pub fn squeezed_state() -> MixtureState {
    MixtureState::single(GaussianComponent::new(0.0, 0.0, 0.49, 10.0).unwrap())
}
