//! Squeezing distillation from non-Gaussian mixtures of displaced squeezed
//! states.
//!
//! A squeezed vacuum corrupted by random displacements is a convex mixture of
//! Gaussian components. Splitting off a small tap beam, measuring one of its
//! quadratures and keeping the signal only when the tap passes a threshold
//! recovers part of the lost squeezing. This crate provides
//!
//! * [`states`]: mixture states, densities, marginals and quadrature moments,
//! * [`analytic`]: the closed-form distilled variance and success probability,
//! * [`montecarlo`]: phase-space simulation of the full protocol,
//! * [`tomography`]: Wigner-function reconstruction by filtered back-projection,
//! * [`ingest`]: two-channel record files, binning and modulation sync.
//!
//! Variances are in shot-noise units (vacuum = 1) throughout.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod ingest;
pub mod montecarlo;
pub mod rng;
pub mod special;
pub mod states;
pub mod tomography;

pub use analytic::{
    angle_sweep, conditional_truncated_stats, distilled_stats, filter_weight,
    split_component_stats, threshold_sweep, DetectorModel, DistillationResult, KeepSide,
    PostSelectionRule, TapSplitter,
};
pub use error::{Error, Result};
pub use montecarlo::{
    mc_sweep, postselect_estimate, sample_protocol, PairedSamples, SimulationConfig,
};
pub use states::{
    db_to_snu, make_noisy_state, quadrature_stats, snu_to_db, wigner_density, Displacement,
    GaussianComponent, MixtureState, QuadratureAngle,
};
pub use tomography::{GridSpec, ProjectionSet, WignerGrid};
