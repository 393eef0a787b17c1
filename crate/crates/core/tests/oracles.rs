mod common;

use common::{
    canonical, canonical_sim, integrate, phase_tap_rule, truncated_by_quadrature,
    two_component_closed_form,
};
use cvdistill_core::analytic::{
    conditional_truncated_stats, correlated_distilled_stats, transmitted_state,
};
use cvdistill_core::montecarlo::{
    mean_and_variance, sample_protocol, sample_protocol_sequential, UNLABELED,
};
use cvdistill_core::states::marginal_pdf;
use cvdistill_core::{
    distilled_stats, mc_sweep, postselect_estimate, quadrature_stats, split_component_stats,
    threshold_sweep, DetectorModel, KeepSide, PostSelectionRule, QuadratureAngle, SimulationConfig,
};

const X: QuadratureAngle = QuadratureAngle::AMPLITUDE;

#[test]
fn distilled_stats_matches_closed_form_with_quadrature_weights() {
    let c = canonical();
    let t = c.splitter.transmittance();
    let r = c.splitter.reflectance();
    let signal_var = t * c.var_sq + r;
    let tap_var = r * c.var_anti + t;
    let tap_mean1 = r.sqrt() * c.p1;
    for threshold in [-10.0, 0.0, 5.0, 9.97, 15.0, 22.0, 30.0] {
        let g0 = common::upper_tail_by_quadrature(threshold, 0.0, tap_var);
        let g1 = common::upper_tail_by_quadrature(threshold, tap_mean1, tap_var);
        let (mean, var, pi) = two_component_closed_form(signal_var, t, c.x1, 0.5, g0, g1);
        let got = distilled_stats(
            &c.state,
            &c.splitter,
            &phase_tap_rule(threshold),
            X,
            &DetectorModel::default(),
        )
        .unwrap();
        assert!(
            (got.distilled_variance - var).abs() < 1e-10,
            "{threshold}: {} vs {var}",
            got.distilled_variance
        );
        assert!((got.distilled_mean - mean).abs() < 1e-10);
        assert!((got.success_probability - pi).abs() < 1e-12);
    }
}

#[test]
fn transmitted_variance_matches_quadrature_of_marginal() {
    let c = canonical();
    let sig = transmitted_state(&c.state, &c.splitter, &DetectorModel::default());
    let (mean, var) = quadrature_stats(&sig, X);
    let m1 = integrate(&|q| q * marginal_pdf(&sig, X, q), -20.0, 20.0, 1e-13);
    let m2 = integrate(&|q| q * q * marginal_pdf(&sig, X, q), -20.0, 20.0, 1e-13);
    assert!((m1 - mean).abs() < 1e-9);
    assert!((m2 - m1 * m1 - var).abs() < 1e-9);
    assert!((var - 1.33838).abs() < 1e-4, "{var}");
}

#[test]
fn truncated_moments_match_quadrature() {
    let cases = [
        (0.3, 1.2, -0.4, 2.0, 0.9, 0.5),
        (0.0, 1.0, 0.0, 1.0, -0.7, -1.0),
        (2.0, 5.0, 1.0, 3.0, 3.5, 4.0),
        (-1.0, 0.6, 0.5, 0.8, 0.2, 2.5),
        (0.0, 2.0, 0.0, 50.0, 9.0, 30.0),
    ];
    for (sm, sv, tm, tv, c, th) in cases {
        let got = conditional_truncated_stats(sm, sv, tm, tv, c, th, KeepSide::Above).unwrap();
        let (m, v, w) = truncated_by_quadrature(sm, sv, tm, tv, c, th);
        assert!(
            (got.weight - w).abs() < 1e-10 * w.max(1e-3),
            "weight {} vs {w}",
            got.weight
        );
        assert!((got.mean - m).abs() < 1e-8, "mean {} vs {m}", got.mean);
        assert!(
            (got.variance - v).abs() < 1e-8,
            "var {} vs {v}",
            got.variance
        );

        // lower side by reflection of the tap axis
        let below = conditional_truncated_stats(sm, sv, tm, tv, c, th, KeepSide::Below).unwrap();
        let (m, v, w) = truncated_by_quadrature(sm, sv, -tm, tv, -c, -th);
        assert!((below.weight - w).abs() < 1e-10);
        assert!((below.mean - m).abs() < 1e-8);
        assert!((below.variance - v).abs() < 1e-8);
    }
}

#[test]
fn vacuum_samples_have_unit_variance() {
    let n = 200_000;
    let cfg = SimulationConfig {
        state: cvdistill_core::MixtureState::vacuum(),
        sample_count: n,
        ..canonical_sim(0.0, n, 4)
    };
    let s = sample_protocol(&cfg).unwrap();
    let tol = 3.0 * (2.0 / n as f64).sqrt();
    assert!((mean_and_variance(&s.signal_values).1 - 1.0).abs() < tol);
    assert!((mean_and_variance(&s.tap_values).1 - 1.0).abs() < tol);
}

#[test]
fn canonical_signal_variance_and_labels() {
    let n = 400_000;
    let s = sample_protocol(&canonical_sim(0.0, n, 7)).unwrap();
    let (_, var) = mean_and_variance(&s.signal_values);
    let all = postselect_estimate(&s, &phase_tap_rule(f64::NEG_INFINITY)).unwrap();
    assert_eq!(all.distilled_variance, var);
    assert_eq!(all.success_probability, 1.0);
    assert!(
        (var - 1.33838).abs() < 3.0 * all.standard_error,
        "{var} ± {}",
        all.standard_error
    );

    assert!(s.component_labels.iter().all(|&l| l != UNLABELED && l < 2));
    let ones = s.component_labels.iter().filter(|&&l| l == 1).count() as f64;
    let se = (0.25 / n as f64).sqrt();
    assert!((ones / n as f64 - 0.5).abs() < 3.0 * se);
}

#[test]
fn sequential_and_parallel_sampling_agree() {
    let cfg = canonical_sim(0.0, 150_000, 99);
    let a = sample_protocol(&cfg).unwrap();
    let b = sample_protocol_sequential(&cfg).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let c = pool.install(|| sample_protocol(&cfg)).unwrap();
    assert_eq!(a, c);
}

#[test]
fn cross_covariance_sign_matches_split_stats() {
    let c = canonical();
    let component = c.state.components()[0];
    let split = split_component_stats(&component, &c.splitter);
    // a single-component state measured on the same quadrature in both ports
    let n = 400_000;
    let cfg = SimulationConfig {
        state: cvdistill_core::MixtureState::single(component),
        rule: PostSelectionRule::new(X, 0.0, KeepSide::Above),
        ..canonical_sim(0.0, n, 3)
    };
    let s = sample_protocol(&cfg).unwrap();
    let (ms, _) = mean_and_variance(&s.signal_values);
    let (mt, _) = mean_and_variance(&s.tap_values);
    let cov: f64 = s
        .signal_values
        .iter()
        .zip(&s.tap_values)
        .map(|(a, b)| (a - ms) * (b - mt))
        .sum::<f64>()
        / (n - 1) as f64;
    assert!(
        split.cross_cov_x < 0.0,
        "squeezed x gives negative covariance"
    );
    assert!(cov < 0.0);
    let se = (split.signal.var_x() * split.tap.var_x() / n as f64).sqrt();
    assert!(
        (cov - split.cross_cov_x).abs() < 4.0 * se,
        "{cov} vs {}",
        split.cross_cov_x
    );
}

#[test]
fn midpoint_threshold_estimate_matches_analytic() {
    let c = canonical();
    let mid = 0.5 * c.splitter.reflectance().sqrt() * c.p1;
    let cfg = canonical_sim(mid, 1_000_000, 12);
    let s = sample_protocol(&cfg).unwrap();
    let mc = postselect_estimate(&s, &cfg.rule).unwrap();
    let an = distilled_stats(
        &c.state,
        &c.splitter,
        &cfg.rule,
        X,
        &DetectorModel::default(),
    )
    .unwrap();
    assert!((mc.distilled_variance - an.distilled_variance).abs() < 3.0 * mc.standard_error);
    let p = an.success_probability;
    let binom = (p * (1.0 - p) / s.len() as f64).sqrt();
    assert!((mc.success_probability - p).abs() < 3.0 * binom);
}

#[test]
fn mc_sweep_tracks_threshold_sweep() {
    let c = canonical();
    let cfg = canonical_sim(0.0, 1_000_000, 5);
    let sigma_t = (c.splitter.reflectance() * c.var_anti + c.splitter.transmittance()).sqrt();
    let thresholds: Vec<f64> = (0..12)
        .map(|k| -2.0 * sigma_t + k as f64 * 0.5 * sigma_t)
        .collect();
    let mc = mc_sweep(&cfg, &thresholds).unwrap();
    let an = threshold_sweep(
        &c.state,
        &c.splitter,
        &cfg.rule,
        X,
        &DetectorModel::default(),
        &thresholds,
    )
    .unwrap();
    let mut previous = 1.0;
    for (m, a) in mc.iter().zip(&an) {
        assert_eq!(m.threshold, a.threshold);
        let est = m.estimate.unwrap();
        assert!(
            (est.distilled_variance - a.result.distilled_variance).abs() < 3.5 * est.standard_error,
            "threshold {}: {} vs {}",
            m.threshold,
            est.distilled_variance,
            a.result.distilled_variance
        );
        assert!(m.success_probability <= previous);
        previous = m.success_probability;
    }
}

#[test]
fn threshold_beyond_samples_is_insufficient() {
    let s = sample_protocol(&canonical_sim(0.0, 1000, 1)).unwrap();
    let err = postselect_estimate(&s, &phase_tap_rule(1e6)).unwrap_err();
    assert!(matches!(
        err,
        cvdistill_core::Error::InsufficientSamples {
            kept: 0,
            total: 1000
        }
    ));
}

#[test]
fn correlated_path_matches_mc_at_oblique_tap_angle() {
    let c = canonical();
    let rule = PostSelectionRule::new(QuadratureAngle::from_degrees(60.0), 8.0, KeepSide::Above);
    let cfg = SimulationConfig {
        rule,
        ..canonical_sim(0.0, 1_000_000, 31)
    };
    let s = sample_protocol(&cfg).unwrap();
    let mc = postselect_estimate(&s, &rule).unwrap();
    let an = correlated_distilled_stats(&c.state, &c.splitter, &rule, X, &DetectorModel::default())
        .unwrap();
    assert!((mc.distilled_variance - an.distilled_variance).abs() < 3.0 * mc.standard_error);
    assert!(matches!(
        distilled_stats(&c.state, &c.splitter, &rule, X, &DetectorModel::default()),
        Err(cvdistill_core::Error::CorrelatedProjections { .. })
    ));
}
