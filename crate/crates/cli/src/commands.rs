use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use cvdistill_core::analytic::{correlated_distilled_stats, tap_state, transmitted_state};
use cvdistill_core::ingest::{bin_and_sync, read_record_file, records_to_pairs, ModulationFilter};
use cvdistill_core::montecarlo::{
    mean_and_variance, postselect_estimate_with, sweep_samples, VarianceErrorModel,
};
use cvdistill_core::tomography::{
    analytic_wigner_grid, collect_projections, inverse_radon, GridSpec, ProjectionSource,
};
use cvdistill_core::{
    angle_sweep, distilled_stats, quadrature_stats, sample_protocol, DistillationResult, Error,
    KeepSide, MixtureState, PostSelectionRule,
};

use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::report::{
    self, db, db_error, result_cells, AnalyticReport, IngestReport, SimulationReport, Table,
};

pub fn keep_side_name(k: KeepSide) -> String {
    match k {
        KeepSide::Above => "above".into(),
        KeepSide::Below => "below".into(),
    }
}

/// Analytic distillation for any tap angle.
pub fn analytic(
    exp: &Experiment,
    rule: &PostSelectionRule,
) -> cvdistill_core::Result<DistillationResult> {
    match distilled_stats(
        &exp.state,
        &exp.splitter,
        rule,
        exp.verification_angle,
        &exp.detector,
    ) {
        Err(Error::CorrelatedProjections { .. }) => correlated_distilled_stats(
            &exp.state,
            &exp.splitter,
            rule,
            exp.verification_angle,
            &exp.detector,
        ),
        other => other,
    }
}

/// `None` when nothing passes the threshold.
fn analytic_row(
    exp: &Experiment,
    rule: &PostSelectionRule,
) -> CliResult<Option<DistillationResult>> {
    match analytic(exp, rule) {
        Ok(r) => Ok(Some(r)),
        Err(Error::EmptySelection { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn unselected_variance(exp: &Experiment) -> f64 {
    quadrature_stats(
        &transmitted_state(&exp.state, &exp.splitter, &exp.detector),
        exp.verification_angle,
    )
    .1
}

/// Mean and standard deviation of the measured tap quadrature.
pub fn tap_moments(exp: &Experiment) -> (f64, f64) {
    let (m, v) = quadrature_stats(
        &tap_state(&exp.state, &exp.splitter, &exp.detector),
        exp.rule.tap_angle,
    );
    (m, v.sqrt())
}

pub fn analyze(exp: &Experiment) -> CliResult<()> {
    let r = analytic(exp, &exp.rule)?;
    let unselected = unselected_variance(exp);
    let tap_var = tap_moments(exp).1.powi(2);
    report::print_json(&AnalyticReport {
        threshold_snu: exp.rule.threshold,
        keep_side: keep_side_name(exp.rule.keep_side),
        tap_angle_deg: exp.rule.tap_angle.degrees(),
        verification_angle_deg: exp.verification_angle.degrees(),
        distilled_mean_snu: r.distilled_mean,
        distilled_variance_snu: r.distilled_variance,
        distilled_variance_db: db(r.distilled_variance),
        success_probability: r.success_probability,
        unselected_variance_snu: unselected,
        unselected_variance_db: db(unselected),
        tap_variance_snu: tap_var,
        tap_variance_db: db(tap_var),
    })
}

pub fn simulate(exp: &Experiment, error_model: VarianceErrorModel) -> CliResult<()> {
    let samples = sample_protocol(&exp.simulation())?;
    let est = postselect_estimate_with(&samples, &exp.rule, error_model)?;
    let (_, unselected) = mean_and_variance(&samples.signal_values);
    let n = samples.len() as f64;
    let p = est.success_probability;
    let analytic = analytic_row(exp, &exp.rule)?;
    report::print_json(&SimulationReport {
        samples: samples.len(),
        seed: exp.seed,
        threshold_snu: exp.rule.threshold,
        accepted: (p * n).round() as usize,
        success_probability: p,
        success_probability_stderr: (p * (1.0 - p) / n).sqrt(),
        distilled_mean_snu: est.distilled_mean,
        distilled_variance_snu: est.distilled_variance,
        distilled_variance_db: db(est.distilled_variance),
        standard_error_snu: est.standard_error,
        standard_error_db: db_error(est.distilled_variance, est.standard_error),
        unselected_variance_snu: unselected,
        unselected_variance_db: db(unselected),
        analytic_variance_snu: analytic.map(|a| a.distilled_variance),
        analytic_variance_db: analytic.map(|a| db(a.distilled_variance)),
        analytic_success_probability: analytic.map(|a| a.success_probability),
    })
}

pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![min];
    }
    (0..steps)
        .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
        .collect()
}

pub const THRESHOLD_COLUMNS: [&str; 5] = [
    "threshold_snu",
    "distilled_mean_snu",
    "variance_snu",
    "variance_db",
    "success_probability",
];
pub const MC_COLUMNS: [&str; 6] = [
    "mc_accepted",
    "mc_success_probability",
    "mc_variance_snu",
    "mc_variance_db",
    "mc_standard_error_snu",
    "mc_standard_error_db",
];

/// Analytic rows, plus Monte Carlo columns on one simulated dataset when `mc` is set.
pub fn threshold_table(exp: &Experiment, thresholds: &[f64], mc: bool) -> CliResult<Table> {
    let mut header = THRESHOLD_COLUMNS.to_vec();
    if mc {
        header.extend(MC_COLUMNS);
    }
    let mut table = Table::new(&header);
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mc_rows = if mc {
        let samples = sample_protocol(&exp.simulation())?;
        Some(sweep_samples(
            &samples,
            &exp.rule,
            &sorted,
            VarianceErrorModel::default(),
        ))
    } else {
        None
    };
    for (i, &t) in sorted.iter().enumerate() {
        let r = analytic_row(exp, &exp.rule.with_threshold(t))?;
        let mut row = vec![Some(t)];
        row.extend(result_cells(r.as_ref()));
        if let Some(rows) = &mc_rows {
            let m = &rows[i];
            row.push(Some(m.accepted as f64));
            row.push(Some(m.success_probability));
            match m.estimate {
                Some(e) => row.extend([
                    Some(e.distilled_variance),
                    Some(db(e.distilled_variance)),
                    Some(e.standard_error),
                    Some(db_error(e.distilled_variance, e.standard_error)),
                ]),
                None => row.extend([None, None, None, None]),
            }
        }
        table.push(row);
    }
    Ok(table)
}

pub fn default_threshold_range(exp: &Experiment) -> (f64, f64) {
    let (_, sigma) = tap_moments(exp);
    (-2.0 * sigma, 4.0 * sigma)
}

pub fn sweep_threshold(
    exp: &Experiment,
    min: Option<f64>,
    max: Option<f64>,
    steps: usize,
    mc: bool,
    out: &Path,
) -> CliResult<()> {
    let (dmin, dmax) = default_threshold_range(exp);
    let (min, max) = (min.unwrap_or(dmin), max.unwrap_or(dmax));
    if !(min.is_finite() && max.is_finite() && min <= max) || steps == 0 {
        return Err(CliError::validation(format!(
            "invalid threshold range [{min}, {max}] with {steps} steps"
        )));
    }
    let table = threshold_table(exp, &linspace(min, max, steps), mc)?;
    table.write(out)?;
    eprintln!("wrote {} rows to {}", table.len(), out.display());
    Ok(())
}

pub const ANGLE_COLUMNS: [&str; 6] = [
    "beta_deg",
    "beta_rad",
    "distilled_mean_snu",
    "variance_snu",
    "variance_db",
    "success_probability",
];

pub fn angle_table(exp: &Experiment, threshold: f64, betas_deg: &[f64]) -> CliResult<Table> {
    let betas: Vec<f64> = betas_deg.iter().map(|b| b.to_radians()).collect();
    let rows = angle_sweep(
        &exp.state,
        &exp.splitter,
        threshold,
        exp.rule.keep_side,
        exp.verification_angle,
        &exp.detector,
        &betas,
    )?;
    let mut table = Table::new(&ANGLE_COLUMNS);
    for r in rows {
        let mut row = vec![Some(r.beta.to_degrees()), Some(r.beta)];
        row.extend(result_cells(Some(&r.result)));
        table.push(row);
    }
    Ok(table)
}

pub fn sweep_angle(
    exp: &Experiment,
    threshold: f64,
    min_deg: f64,
    max_deg: f64,
    steps: usize,
    out: &Path,
) -> CliResult<()> {
    if !(min_deg.is_finite() && max_deg.is_finite() && min_deg <= max_deg) || steps == 0 {
        return Err(CliError::validation(format!(
            "invalid angle range [{min_deg}, {max_deg}] with {steps} steps"
        )));
    }
    let table = angle_table(exp, threshold, &linspace(min_deg, max_deg, steps))?;
    table.write(out)?;
    eprintln!("wrote {} rows to {}", table.len(), out.display());
    Ok(())
}

/// Histogram half-width that covers the grid and ±6σ of every component.
pub fn auto_range(state: &MixtureState, grid: &GridSpec) -> f64 {
    let support = state
        .components()
        .iter()
        .map(|c| c.mean_x().hypot(c.mean_p()) + 6.0 * c.var_x().max(c.var_p()).sqrt())
        .fold(0.0f64, f64::max);
    support.max(grid.max_radius())
}

pub struct TomoOptions {
    pub angles: usize,
    pub per_angle: usize,
    pub bins: usize,
    pub range: Option<f64>,
    pub extent: f64,
    pub points: usize,
    pub cutoff: f64,
    pub analytic: bool,
}

pub fn tomo(exp: &Experiment, opts: &TomoOptions, out: &Path) -> CliResult<()> {
    if !opts.extent.is_finite() || opts.extent <= 0.0 || opts.points < 2 {
        return Err(CliError::validation(
            "grid: --extent must be positive and --points at least 2",
        ));
    }
    let grid = GridSpec::symmetric(opts.extent, opts.points);
    let w = if opts.analytic {
        analytic_wigner_grid(&exp.state, &grid)?
    } else {
        let range = opts.range.unwrap_or_else(|| auto_range(&exp.state, &grid));
        let set = collect_projections(
            ProjectionSource::State(&exp.state),
            opts.angles,
            opts.per_angle,
            opts.bins,
            range,
            exp.seed,
        )?;
        if let Some(warning) = set.warning() {
            eprintln!("warning: {warning}");
        }
        inverse_radon(&set, &grid, opts.cutoff)?
    };
    report::write_grid(out, &w)?;
    eprintln!(
        "wrote {}x{} grid to {}",
        opts.points,
        opts.points,
        out.display()
    );
    Ok(())
}

pub struct IngestOptions {
    pub threshold: f64,
    pub keep_side: KeepSide,
    pub filter: ModulationFilter,
    pub permissive: bool,
    pub error_model: VarianceErrorModel,
}

pub fn ingest(record: &Path, opts: &IngestOptions, out: &Path) -> CliResult<()> {
    let file = File::open(record).map_err(|e| CliError::io(record, e))?;
    let (header, raw) = read_record_file(BufReader::new(file)).map_err(|e| match e {
        Error::Io(io) => CliError::io(record, io),
        other => CliError::validation(format!("{}: {other}", record.display())),
    })?;
    let binned = bin_and_sync(&header, &raw, opts.permissive)?;
    let pairs = records_to_pairs(&binned.records, opts.filter)?;
    let rule = PostSelectionRule::new(
        cvdistill_core::QuadratureAngle::PHASE,
        opts.threshold,
        opts.keep_side,
    );
    let est = postselect_estimate_with(&pairs, &rule, opts.error_model)?;
    let (_, unselected) = mean_and_variance(&pairs.signal_values);
    let filter = match opts.filter {
        ModulationFilter::All => "all",
        ModulationFilter::OnOnly => "on",
        ModulationFilter::OffOnly => "off",
    };
    let result = IngestReport {
        record_file: record.display().to_string(),
        raw_samples: raw.len(),
        samples_per_bin: header.samples_per_bin()?,
        skipped_samples: binned.skipped_samples,
        candidate_bins: binned.candidate_bins(),
        rejected_bins: binned.rejected_bins,
        selected_modulation: filter.into(),
        pairs: pairs.len(),
        threshold_snu: opts.threshold,
        keep_side: keep_side_name(opts.keep_side),
        unselected_variance_snu: unselected,
        unselected_variance_db: db(unselected),
        accepted: (est.success_probability * pairs.len() as f64).round() as usize,
        success_probability: est.success_probability,
        distilled_mean_snu: est.distilled_mean,
        distilled_variance_snu: est.distilled_variance,
        distilled_variance_db: db(est.distilled_variance),
        standard_error_snu: est.standard_error,
        standard_error_db: db_error(est.distilled_variance, est.standard_error),
    };
    report::write_json(out, &result)?;
    eprintln!(
        "distilled variance {:.4} SNU ({:+.3} dB), success probability {:.4}; wrote {}",
        result.distilled_variance_snu,
        result.distilled_variance_db,
        result.success_probability,
        out.display()
    );
    Ok(())
}
