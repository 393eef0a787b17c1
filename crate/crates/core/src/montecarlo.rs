//! Monte Carlo simulation of the distillation protocol.
//!
//! Each draw picks a mixture component, samples `(x, p)` from it, mixes it
//! with an independent vacuum on the tap splitter, applies detector loss to
//! both ports and records the projections onto the verification and tap
//! angles. Post-selection then operates on the recorded pairs exactly as it
//! would on experimental data.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{DetectorModel, DistillationResult, PostSelectionRule, TapSplitter};
use crate::error::{Error, Result};
use crate::rng::{self, BOOTSTRAP_STREAM_BASE};
use crate::states::{MixtureState, QuadratureAngle};

/// Label used when the generating component is unknown (measured data).
pub const UNLABELED: usize = usize::MAX;

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub state: MixtureState,
    pub splitter: TapSplitter,
    pub rule: PostSelectionRule,
    pub verification_angle: QuadratureAngle,
    pub detector: DetectorModel,
    pub sample_count: usize,
    pub seed: u64,
}

/// Simultaneously recorded signal and tap outcomes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairedSamples {
    pub signal_values: Vec<f64>,
    pub tap_values: Vec<f64>,
    /// Generating component per draw, or [`UNLABELED`].
    pub component_labels: Vec<usize>,
}

impl PairedSamples {
    pub fn new(
        signal_values: Vec<f64>,
        tap_values: Vec<f64>,
        component_labels: Vec<usize>,
    ) -> Result<Self> {
        if signal_values.len() != tap_values.len() || signal_values.len() != component_labels.len()
        {
            return Err(Error::domain(format!(
                "paired sample lengths differ: {} signal, {} tap, {} labels",
                signal_values.len(),
                tap_values.len(),
                component_labels.len()
            )));
        }
        Ok(PairedSamples {
            signal_values,
            tap_values,
            component_labels,
        })
    }

    /// Pairs without component labels.
    pub fn unlabeled(signal_values: Vec<f64>, tap_values: Vec<f64>) -> Result<Self> {
        let n = signal_values.len();
        Self::new(signal_values, tap_values, vec![UNLABELED; n])
    }

    pub fn len(&self) -> usize {
        self.signal_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal_values.is_empty()
    }
}

/// Draws `config.sample_count` signal/tap pairs.
///
/// Draws are generated in blocks of [`rng::BLOCK_SIZE`]; block `k` uses
/// ChaCha20 stream `k` of `config.seed`. Blocks run in parallel but are
/// concatenated in block order, so the output is bit-identical for any
/// number of worker threads.
pub fn sample_protocol(config: &SimulationConfig) -> Result<PairedSamples> {
    let sampler = ProtocolSampler::new(config)?;
    let blocks: Vec<(usize, usize)> = rng::blocks(config.sample_count).collect();
    let parts: Vec<Block> = blocks
        .par_iter()
        .enumerate()
        .map(|(k, &(_, len))| sampler.block(k as u64, len))
        .collect();
    Ok(concat(parts, config.sample_count))
}

/// Single-threaded [`sample_protocol`]; produces identical output.
pub fn sample_protocol_sequential(config: &SimulationConfig) -> Result<PairedSamples> {
    let sampler = ProtocolSampler::new(config)?;
    let parts: Vec<Block> = rng::blocks(config.sample_count)
        .enumerate()
        .map(|(k, (_, len))| sampler.block(k as u64, len))
        .collect();
    Ok(concat(parts, config.sample_count))
}

type Block = (Vec<f64>, Vec<f64>, Vec<usize>);

fn concat(parts: Vec<Block>, n: usize) -> PairedSamples {
    let mut out = PairedSamples {
        signal_values: Vec::with_capacity(n),
        tap_values: Vec::with_capacity(n),
        component_labels: Vec::with_capacity(n),
    };
    for (s, t, l) in parts {
        out.signal_values.extend(s);
        out.tap_values.extend(t);
        out.component_labels.extend(l);
    }
    out
}

struct ComponentDraw {
    mean_x: f64,
    mean_p: f64,
    sd_x: f64,
    sd_p: f64,
}

struct ProtocolSampler {
    seed: u64,
    cumulative: Vec<f64>,
    components: Vec<ComponentDraw>,
    sqrt_t: f64,
    sqrt_r: f64,
    verify: (f64, f64),
    tap: (f64, f64),
    sqrt_eta: f64,
    sqrt_loss: f64,
}

impl ProtocolSampler {
    fn new(config: &SimulationConfig) -> Result<Self> {
        if config.sample_count == 0 {
            return Err(Error::domain("sample_count must be at least 1"));
        }
        let mut acc = 0.0;
        let cumulative = config
            .state
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let components = config
            .state
            .components()
            .iter()
            .map(|c| ComponentDraw {
                mean_x: c.mean_x(),
                mean_p: c.mean_p(),
                sd_x: c.var_x().sqrt(),
                sd_p: c.var_p().sqrt(),
            })
            .collect();
        let eta = config.detector.efficiency();
        Ok(ProtocolSampler {
            seed: config.seed,
            cumulative,
            components,
            sqrt_t: config.splitter.transmittance().sqrt(),
            sqrt_r: config.splitter.reflectance().sqrt(),
            verify: config.verification_angle.direction(),
            tap: config.rule.tap_angle.direction(),
            sqrt_eta: eta.sqrt(),
            sqrt_loss: (1.0 - eta).sqrt(),
        })
    }

    fn pick(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| {
                // u can exceed a cumulative sum that rounds below 1; take the
                // last component with non-zero weight
                let mut last = self.cumulative.len() - 1;
                while last > 0 && self.cumulative[last] == self.cumulative[last - 1] {
                    last -= 1;
                }
                last
            })
    }

    fn block(&self, stream: u64, len: usize) -> Block {
        let mut rng = rng::substream(self.seed, stream);
        let mut signal = Vec::with_capacity(len);
        let mut tap = Vec::with_capacity(len);
        let mut labels = Vec::with_capacity(len);
        let (cv, sv) = self.verify;
        let (ct, st) = self.tap;
        for _ in 0..len {
            let u: f64 = rng.random();
            let k = self.pick(u);
            let c = &self.components[k];
            // always six normals per draw so the stream layout does not
            // depend on the configuration
            let n: [f64; 6] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let x = c.mean_x + c.sd_x * n[0];
            let p = c.mean_p + c.sd_p * n[1];
            let (xv, pv) = (n[2], n[3]);
            let xs = self.sqrt_t * x + self.sqrt_r * xv;
            let ps = self.sqrt_t * p + self.sqrt_r * pv;
            let xt = self.sqrt_r * x - self.sqrt_t * xv;
            let pt = self.sqrt_r * p - self.sqrt_t * pv;
            // loss on each quadrature with independent vacua projects to a
            // single unit-variance vacuum term
            let s = self.sqrt_eta * (cv * xs + sv * ps) + self.sqrt_loss * n[4];
            let t = self.sqrt_eta * (ct * xt + st * pt) + self.sqrt_loss * n[5];
            signal.push(s);
            tap.push(t);
            labels.push(k);
        }
        (signal, tap, labels)
    }
}

/// How the standard error of the selected-sample variance is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum VarianceErrorModel {
    /// `sqrt((m₄ − s⁴·(k−3)/(k−1))/k)` from the sample fourth central moment;
    /// valid for non-Gaussian (e.g. bimodal) selections.
    #[default]
    Moments,
    /// `s²·sqrt(2/(k−1))`, exact only for Gaussian data.
    NormalTheory,
    /// Standard deviation of the variance over resamples with replacement.
    Bootstrap { resamples: usize, seed: u64 },
}

impl VarianceErrorModel {
    pub fn bootstrap(seed: u64) -> Self {
        VarianceErrorModel::Bootstrap {
            resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            seed,
        }
    }
}

/// Post-selects `samples` with `rule` and estimates the distilled moments.
///
/// The tap values are already projections, so only `rule.threshold` and
/// `rule.keep_side` are used.
pub fn postselect_estimate(
    samples: &PairedSamples,
    rule: &PostSelectionRule,
) -> Result<DistillationResult> {
    postselect_estimate_with(samples, rule, VarianceErrorModel::default())
}

pub fn postselect_estimate_with(
    samples: &PairedSamples,
    rule: &PostSelectionRule,
    error_model: VarianceErrorModel,
) -> Result<DistillationResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { kept: 0, total: 0 });
    }
    let kept: Vec<f64> = samples
        .signal_values
        .iter()
        .zip(&samples.tap_values)
        .filter(|(_, &t)| rule.keep_side.passes(t, rule.threshold))
        .map(|(&s, _)| s)
        .collect();
    estimate_kept(&kept, samples.len(), error_model)
}

fn estimate_kept(
    kept: &[f64],
    total: usize,
    error_model: VarianceErrorModel,
) -> Result<DistillationResult> {
    let k = kept.len();
    if k < 2 {
        return Err(Error::InsufficientSamples { kept: k, total });
    }
    let (mean, variance) = mean_and_variance(kept);
    let standard_error = match error_model {
        VarianceErrorModel::NormalTheory => variance * (2.0 / (k as f64 - 1.0)).sqrt(),
        VarianceErrorModel::Moments => {
            let kf = k as f64;
            let m4 = kept.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / kf;
            let var_of_var = (m4 - variance * variance * (kf - 3.0) / (kf - 1.0)) / kf;
            var_of_var.max(0.0).sqrt()
        }
        VarianceErrorModel::Bootstrap { resamples, seed } => {
            bootstrap_variance_error(kept, resamples, seed)
        }
    };
    Ok(DistillationResult {
        distilled_mean: mean,
        distilled_variance: variance,
        success_probability: k as f64 / total as f64,
        standard_error,
    })
}

/// Sample mean and unbiased sample variance (two-pass).
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

fn bootstrap_variance_error(values: &[f64], resamples: usize, seed: u64) -> f64 {
    if resamples < 2 {
        return 0.0;
    }
    let n = values.len();
    let replicates: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::substream(seed, BOOTSTRAP_STREAM_BASE + b as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let v = values[rng.random_range(0..n)];
                sum += v;
                sum_sq += v * v;
            }
            let nf = n as f64;
            let m = sum / nf;
            (sum_sq - nf * m * m) / (nf - 1.0)
        })
        .collect();
    mean_and_variance(&replicates).1.sqrt()
}

/// One row of a Monte Carlo threshold sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSweepRow {
    pub threshold: f64,
    pub accepted: usize,
    pub success_probability: f64,
    /// `None` when fewer than two samples were accepted.
    pub estimate: Option<DistillationResult>,
}

/// Post-selects one simulated dataset at every threshold (rows sorted by
/// threshold). Rows with fewer than two accepted samples carry no estimate
/// instead of failing the sweep.
pub fn mc_sweep(config: &SimulationConfig, thresholds: &[f64]) -> Result<Vec<McSweepRow>> {
    let samples = sample_protocol(config)?;
    Ok(sweep_samples(
        &samples,
        &config.rule,
        thresholds,
        VarianceErrorModel::default(),
    ))
}

/// [`mc_sweep`] on an existing dataset.
pub fn sweep_samples(
    samples: &PairedSamples,
    rule_template: &PostSelectionRule,
    thresholds: &[f64],
    error_model: VarianceErrorModel,
) -> Vec<McSweepRow> {
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .par_iter()
        .map(|&threshold| {
            let rule = rule_template.with_threshold(threshold);
            let accepted = samples
                .tap_values
                .iter()
                .filter(|&&t| rule.keep_side.passes(t, threshold))
                .count();
            let estimate = postselect_estimate_with(samples, &rule, error_model).ok();
            McSweepRow {
                threshold,
                accepted,
                success_probability: if samples.is_empty() {
                    0.0
                } else {
                    accepted as f64 / samples.len() as f64
                },
                estimate,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::KeepSide;
    use crate::states::{make_noisy_state_xp, Displacement};

    fn config(state: MixtureState, n: usize) -> SimulationConfig {
        SimulationConfig {
            state,
            splitter: TapSplitter::from_reflectance(0.2).unwrap(),
            rule: PostSelectionRule::new(QuadratureAngle::PHASE, 0.0, KeepSide::Above),
            verification_angle: QuadratureAngle::AMPLITUDE,
            detector: DetectorModel::default(),
            sample_count: n,
            seed: 42,
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(sample_protocol(&config(MixtureState::vacuum(), 0)).is_err());
    }

    #[test]
    fn vacuum_in_vacuum_out() {
        let n = 200_000;
        let s = sample_protocol(&config(MixtureState::vacuum(), n)).unwrap();
        let (_, vs) = mean_and_variance(&s.signal_values);
        let (_, vt) = mean_and_variance(&s.tap_values);
        let tol = 3.0 * (2.0 / n as f64).sqrt();
        assert!((vs - 1.0).abs() < tol, "{vs}");
        assert!((vt - 1.0).abs() < tol, "{vt}");
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let state = make_noisy_state_xp(0.5, 4.0, 0.3, Displacement { x: 1.0, p: 2.0 }).unwrap();
        let cfg = config(state, 3 * rng::BLOCK_SIZE + 17);
        let a = sample_protocol(&cfg).unwrap();
        let b = sample_protocol_sequential(&cfg).unwrap();
        assert_eq!(a, b);
        let c = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| sample_protocol(&cfg).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn zero_weight_component_never_drawn() {
        let state = make_noisy_state_xp(0.5, 4.0, 0.0, Displacement { x: 1.0, p: 2.0 }).unwrap();
        let s = sample_protocol(&config(state, 10_000)).unwrap();
        assert!(s.component_labels.iter().all(|&l| l == 0));
        let state = make_noisy_state_xp(0.5, 4.0, 1.0, Displacement { x: 1.0, p: 2.0 }).unwrap();
        let s = sample_protocol(&config(state, 10_000)).unwrap();
        assert!(s.component_labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn insufficient_selection_reported() {
        let s = sample_protocol(&config(MixtureState::vacuum(), 1000)).unwrap();
        let rule = PostSelectionRule::new(QuadratureAngle::PHASE, 100.0, KeepSide::Above);
        match postselect_estimate(&s, &rule) {
            Err(Error::InsufficientSamples { kept, total }) => assert_eq!((kept, total), (0, 1000)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_threshold_keeps_everything() {
        let s = sample_protocol(&config(MixtureState::vacuum(), 5000)).unwrap();
        let rule =
            PostSelectionRule::new(QuadratureAngle::PHASE, f64::NEG_INFINITY, KeepSide::Above);
        let r = postselect_estimate(&s, &rule).unwrap();
        let (m, v) = mean_and_variance(&s.signal_values);
        assert_eq!(
            (
                r.distilled_mean,
                r.distilled_variance,
                r.success_probability
            ),
            (m, v, 1.0)
        );
    }

    #[test]
    fn error_models_agree_for_gaussian_data() {
        let s = sample_protocol(&config(MixtureState::vacuum(), 50_000)).unwrap();
        let rule =
            PostSelectionRule::new(QuadratureAngle::PHASE, f64::NEG_INFINITY, KeepSide::Above);
        let a = postselect_estimate_with(&s, &rule, VarianceErrorModel::Moments)
            .unwrap()
            .standard_error;
        let b = postselect_estimate_with(&s, &rule, VarianceErrorModel::NormalTheory)
            .unwrap()
            .standard_error;
        let c = postselect_estimate_with(&s, &rule, VarianceErrorModel::bootstrap(1))
            .unwrap()
            .standard_error;
        assert!((a / b - 1.0).abs() < 0.05, "{a} {b}");
        assert!((c / b - 1.0).abs() < 0.2, "{c} {b}");
        let c2 = postselect_estimate_with(&s, &rule, VarianceErrorModel::bootstrap(1))
            .unwrap()
            .standard_error;
        assert_eq!(c, c2);
    }

    #[test]
    fn sweep_flags_empty_rows() {
        let cfg = config(MixtureState::vacuum(), 2000);
        let rows = mc_sweep(&cfg, &[50.0, 0.0]).unwrap();
        assert_eq!(rows[0].threshold, 0.0);
        assert!(rows[0].estimate.is_some());
        assert!(rows[1].estimate.is_none());
        assert_eq!(rows[1].accepted, 0);
    }
}
