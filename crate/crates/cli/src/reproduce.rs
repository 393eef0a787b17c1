use std::path::{Path, PathBuf};

use cvdistill_core::analytic::{distilled_signal_mixture, tap_state, transmitted_state};
use cvdistill_core::states::{make_noisy_state_xp, marginal_pdf};
use cvdistill_core::tomography::{
    analytic_wigner_grid, collect_projections, inverse_radon, projection_angles, GridSpec,
    ProjectionSource, DEFAULT_CUTOFF,
};
use cvdistill_core::{
    quadrature_stats, sample_protocol, Displacement, KeepSide, MixtureState, PostSelectionRule,
    QuadratureAngle, SimulationConfig, TapSplitter,
};
use rayon::prelude::*;

use crate::commands::{angle_table, default_threshold_range, linspace, threshold_table};
use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::report::{write_grid, Table};

const MARGINAL_BINS: usize = 200;
const FIG3_STEPS: usize = 61;
const FIG4_THRESHOLDS: [(&str, f64); 2] = [
    ("fig4a_beta_threshold_1.3.csv", 1.3),
    ("fig4b_beta_threshold_5.3.csv", 5.3),
];

// Wigner-function state: the configured squeezing with a moderate
// anti-squeezing and displacement so that both peaks fit a ±6 SNU grid.
const FIG5_VAR_ANTI: f64 = 4.0;
const FIG5_P: f64 = 3.0;
const FIG5_R: f64 = 0.3;
const FIG5_THRESHOLD: f64 = 2.5;
const FIG5_EXTENT: f64 = 6.0;
const FIG5_POINTS: usize = 101;
const FIG5_RANGE: f64 = 9.0;
const FIG5_BINS: usize = 128;

pub struct ReproduceOptions {
    pub per_angle: usize,
    pub angles: usize,
}

pub fn reproduce(
    exp: &Experiment,
    fig: u8,
    opts: &ReproduceOptions,
    dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    match fig {
        2 => fig2(exp, dir),
        3 => {
            let (min, max) = default_threshold_range(exp);
            let path = dir.join("fig3_threshold.csv");
            threshold_table(exp, &linspace(min, max, FIG3_STEPS), true)?.write(&path)?;
            Ok(vec![path])
        }
        4 => FIG4_THRESHOLDS
            .iter()
            .map(|&(name, threshold)| {
                let path = dir.join(name);
                angle_table(exp, threshold, &linspace(0.0, 180.0, 181))?.write(&path)?;
                Ok(path)
            })
            .collect(),
        5 => fig5(exp, opts, dir),
        other => Err(CliError::validation(format!(
            "--fig: expected 2, 3, 4 or 5, got {other}"
        ))),
    }
}

/// Unit-area histogram of `values` over `bins` equal bins in `[lo, hi)`,
/// normalized by the total count.
fn density_histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let j = ((v - lo) / width).floor();
        if j >= 0.0 && (j as usize) < bins {
            counts[j as usize] += 1;
        }
    }
    let norm = values.len().max(1) as f64 * width;
    counts.into_iter().map(|c| c as f64 / norm).collect()
}

fn centers(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    (0..bins).map(|j| lo + (j as f64 + 0.5) * width).collect()
}

fn fig2(exp: &Experiment, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let samples = sample_protocol(&exp.simulation())?;

    let tap = tap_state(&exp.state, &exp.splitter, &exp.detector);
    let angle = exp.rule.tap_angle;
    let (tm, tv) = quadrature_stats(&tap, angle);
    let (lo, hi) = (tm - 5.0 * tv.sqrt(), tm + 5.0 * tv.sqrt());
    let mc = density_histogram(&samples.tap_values, lo, hi, MARGINAL_BINS);
    let mut table = Table::new(&[
        "tap_snu",
        "density_per_snu",
        "off_component_density_per_snu",
        "on_component_density_per_snu",
        "mc_density_per_snu",
    ]);
    let part = |i: usize, q: f64| {
        let (w, c) = (tap.weights()[i], tap.components()[i]);
        w * marginal_pdf(&MixtureState::single(c), angle, q)
    };
    for (j, q) in centers(lo, hi, MARGINAL_BINS).into_iter().enumerate() {
        let comp = |i: usize| {
            if i < tap.len() {
                Some(part(i, q))
            } else {
                None
            }
        };
        table.push(vec![
            Some(q),
            Some(marginal_pdf(&tap, angle, q)),
            comp(0),
            comp(1),
            Some(mc[j]),
        ]);
    }
    let tap_path = dir.join("fig2a_tap_marginal.csv");
    table.write(&tap_path)?;

    let signal = transmitted_state(&exp.state, &exp.splitter, &exp.detector);
    let v = exp.verification_angle;
    let posterior =
        distilled_signal_mixture(&exp.state, &exp.splitter, &exp.rule, v, &exp.detector).ok();
    let kept: Vec<f64> = samples
        .signal_values
        .iter()
        .zip(&samples.tap_values)
        .filter(|(_, &t)| exp.rule.keep_side.passes(t, exp.rule.threshold))
        .map(|(&s, _)| s)
        .collect();
    let (lo, hi) = (-5.0, 5.0);
    let mc_noisy = density_histogram(&samples.signal_values, lo, hi, MARGINAL_BINS);
    let mc_kept = density_histogram(&kept, lo, hi, MARGINAL_BINS);
    let mut table = Table::new(&[
        "signal_snu",
        "shot_noise_density_per_snu",
        "noisy_density_per_snu",
        "distilled_density_per_snu",
        "mc_noisy_density_per_snu",
        "mc_distilled_density_per_snu",
    ]);
    for (j, q) in centers(lo, hi, MARGINAL_BINS).into_iter().enumerate() {
        table.push(vec![
            Some(q),
            Some(marginal_pdf(&MixtureState::vacuum(), v, q)),
            Some(marginal_pdf(&signal, v, q)),
            posterior.as_ref().map(|p| p.pdf(q)),
            Some(mc_noisy[j]),
            if kept.is_empty() {
                None
            } else {
                Some(mc_kept[j])
            },
        ]);
    }
    let signal_path = dir.join("fig2b_signal_marginal.csv");
    table.write(&signal_path)?;
    Ok(vec![tap_path, signal_path])
}

fn fig5(exp: &Experiment, opts: &ReproduceOptions, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let state = make_noisy_state_xp(
        exp.var_sq,
        FIG5_VAR_ANTI.max(1.0 / exp.var_sq),
        exp.gamma,
        Displacement {
            x: exp.displacement.x,
            p: FIG5_P,
        },
    )?;
    let splitter = TapSplitter::from_reflectance(FIG5_R)?;
    let rule = PostSelectionRule::new(QuadratureAngle::PHASE, FIG5_THRESHOLD, KeepSide::Above);
    let grid = GridSpec::symmetric(FIG5_EXTENT, FIG5_POINTS);
    let mut written = Vec::new();

    let analytic = analytic_wigner_grid(&state, &grid)?;
    let path = dir.join("fig5a_noisy_analytic.csv");
    write_grid(&path, &analytic)?;
    written.push(path);

    let set = collect_projections(
        ProjectionSource::State(&state),
        opts.angles,
        opts.per_angle,
        FIG5_BINS,
        FIG5_RANGE,
        exp.seed,
    )?;
    let path = dir.join("fig5a_noisy_reconstructed.csv");
    write_grid(&path, &inverse_radon(&set, &grid, DEFAULT_CUTOFF)?)?;
    written.push(path);

    // distilled signal: post-selected verification outcomes at every projection angle
    let angles = projection_angles(opts.angles);
    let kept: Vec<Vec<f64>> = angles
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let cfg = SimulationConfig {
                state: state.clone(),
                splitter,
                rule,
                verification_angle: QuadratureAngle::new(theta),
                detector: exp.detector,
                sample_count: opts.per_angle,
                seed: exp.seed.wrapping_add(1 + k as u64),
            };
            sample_protocol(&cfg).map(|s| {
                s.signal_values
                    .iter()
                    .zip(&s.tap_values)
                    .filter(|(_, &t)| rule.keep_side.passes(t, rule.threshold))
                    .map(|(&v, _)| v)
                    .collect()
            })
        })
        .collect::<cvdistill_core::Result<_>>()?;
    let set = collect_projections(
        ProjectionSource::Samples(&kept),
        opts.angles,
        0,
        FIG5_BINS,
        FIG5_RANGE,
        exp.seed,
    )?;
    let path = dir.join("fig5b_distilled_reconstructed.csv");
    write_grid(&path, &inverse_radon(&set, &grid, DEFAULT_CUTOFF)?)?;
    written.push(path);
    Ok(written)
}
