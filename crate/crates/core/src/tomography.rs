//! Wigner-function reconstruction from quadrature histograms by filtered
//! back-projection.
//!
//! The marginal of quadrature `q = x·cosθ + p·sinθ` is the Radon transform of
//! the Wigner function along lines of constant `q`. Inverting it: each
//! histogram is convolved with a band-limited ramp filter, smeared back along
//! its lines and the results are summed over `θ ∈ [0, π)`:
//!
//! ```text
//! W(x, p) ≈ (π / N_θ) · Σ_θ Q_θ(x·cosθ + p·sinθ)
//! ```

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, TOMOGRAPHY_STREAM_BASE};
use crate::states::{wigner_density, MixtureState, QuadratureAngle};

pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_CUTOFF: f64 = 0.7;
/// Fraction of samples allowed outside the histogram range before a warning
/// is attached.
const OUTSIDE_WARN_FRACTION: f64 = 0.01;
const UNIFORM_TOL: f64 = 1e-9;

/// Per-angle normalized histograms of quadrature outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSet {
    angles: Vec<f64>,
    bin_edges: Vec<f64>,
    histograms: Vec<Vec<f64>>,
    samples_per_angle: usize,
    warning: Option<String>,
}

impl ProjectionSet {
    pub fn new(
        angles: Vec<f64>,
        bin_edges: Vec<f64>,
        histograms: Vec<Vec<f64>>,
        samples_per_angle: usize,
    ) -> Result<Self> {
        if angles.len() < 2 {
            return Err(Error::domain("need at least 2 projection angles"));
        }
        if angles.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "projection angles must be strictly increasing",
            ));
        }
        if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("bin edges must be strictly increasing"));
        }
        let width = (bin_edges[bin_edges.len() - 1] - bin_edges[0]) / (bin_edges.len() - 1) as f64;
        if bin_edges
            .windows(2)
            .any(|w| ((w[1] - w[0]) - width).abs() > UNIFORM_TOL * width.max(1.0))
        {
            return Err(Error::domain("bin edges must be uniformly spaced"));
        }
        if histograms.len() != angles.len() {
            return Err(Error::domain(format!(
                "{} histograms for {} angles",
                histograms.len(),
                angles.len()
            )));
        }
        if histograms.iter().any(|h| h.len() != bin_edges.len() - 1) {
            return Err(Error::domain("every histogram must have one value per bin"));
        }
        Ok(ProjectionSet {
            angles,
            bin_edges,
            histograms,
            samples_per_angle,
            warning: None,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }
    pub fn histograms(&self) -> &[Vec<f64>] {
        &self.histograms
    }
    pub fn samples_per_angle(&self) -> usize {
        self.samples_per_angle
    }
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Bin-wise sum of two sets with identical angles and bins.
    pub fn add(&self, other: &ProjectionSet) -> Result<ProjectionSet> {
        if self.angles != other.angles || self.bin_edges != other.bin_edges {
            return Err(Error::domain("projection sets differ in angles or bins"));
        }
        let histograms = self
            .histograms
            .iter()
            .zip(&other.histograms)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(ProjectionSet {
            angles: self.angles.clone(),
            bin_edges: self.bin_edges.clone(),
            histograms,
            samples_per_angle: self.samples_per_angle + other.samples_per_angle,
            warning: None,
        })
    }

    /// Writes the set as CSV: `#`-prefixed metadata, a header row, then one
    /// row per angle (`angle_rad` followed by the bin densities).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# format: cvdistill-projections v1")?;
        writeln!(w, "# angles: {}", self.angles.len())?;
        writeln!(w, "# bins: {}", self.bin_edges.len() - 1)?;
        writeln!(w, "# samples_per_angle: {}", self.samples_per_angle)?;
        writeln!(w, "# bin_edges: {}", join(&self.bin_edges, ";"))?;
        let header: Vec<String> = (0..self.bin_edges.len() - 1)
            .map(|j| format!("bin_{j}"))
            .collect();
        writeln!(w, "angle_rad,{}", header.join(","))?;
        for (a, h) in self.angles.iter().zip(&self.histograms) {
            writeln!(w, "{a:?},{}", join(h, ","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<ProjectionSet> {
        let mut edges = None;
        let mut samples = None;
        let mut angles = Vec::new();
        let mut hists = Vec::new();
        let mut seen_header = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let ln = i + 1;
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .split_once(':')
                    .ok_or_else(|| Error::parse(ln, "metadata line without ':'"))?;
                match k.trim() {
                    "bin_edges" => edges = Some(parse_list(v, ';', ln)?),
                    "samples_per_angle" => {
                        samples = Some(
                            v.trim()
                                .parse::<usize>()
                                .map_err(|e| Error::parse(ln, e.to_string()))?,
                        )
                    }
                    _ => {}
                }
            } else if !seen_header {
                if !line.starts_with("angle_rad") {
                    return Err(Error::parse(ln, "expected 'angle_rad,...' header row"));
                }
                seen_header = true;
            } else if !line.trim().is_empty() {
                let v = parse_list(&line, ',', ln)?;
                angles.push(v[0]);
                hists.push(v[1..].to_vec());
            }
        }
        let edges = edges.ok_or_else(|| Error::parse(0, "missing bin_edges metadata"))?;
        ProjectionSet::new(angles, edges, hists, samples.unwrap_or(0))
    }
}

/// Where projection samples come from.
pub enum ProjectionSource<'a> {
    /// Exact marginal sampling of a mixture state.
    State(&'a MixtureState),
    /// Measured (or simulated) outcomes, one sample list per equally spaced
    /// angle.
    Samples(&'a [Vec<f64>]),
}

/// Equally spaced angles `k·π/n`, `k = 0..n`.
pub fn projection_angles(n_angles: usize) -> Vec<f64> {
    (0..n_angles)
        .map(|k| k as f64 * PI / n_angles as f64)
        .collect()
}

/// Builds normalized histograms over `[-range, range]` at `n_angles` equally
/// spaced angles.
///
/// For a state source, `n_per_angle` marginal outcomes are drawn per angle
/// (angle `k` uses its own substream of `seed`). For a sample source the
/// number of angles is the number of sample lists and `n_per_angle`/`seed`
/// are ignored. A warning is attached when more than 1% of the outcomes fall
/// outside the range.
pub fn collect_projections(
    source: ProjectionSource<'_>,
    n_angles: usize,
    n_per_angle: usize,
    bins: usize,
    range: f64,
    seed: u64,
) -> Result<ProjectionSet> {
    if bins < 8 {
        return Err(Error::domain(format!("need at least 8 bins, got {bins}")));
    }
    if !(range > 0.0) {
        return Err(Error::domain(format!(
            "histogram range {range} must be positive"
        )));
    }
    let n_angles = match source {
        ProjectionSource::State(_) => n_angles,
        ProjectionSource::Samples(s) => s.len(),
    };
    if n_angles < 2 {
        return Err(Error::domain("need at least 2 projection angles"));
    }
    let angles = projection_angles(n_angles);
    let edges: Vec<f64> = (0..=bins)
        .map(|j| -range + 2.0 * range * j as f64 / bins as f64)
        .collect();

    let binned: Vec<(Vec<f64>, usize, usize)> = match source {
        ProjectionSource::State(state) => {
            if n_per_angle == 0 {
                return Err(Error::domain("n_per_angle must be positive"));
            }
            angles
                .par_iter()
                .enumerate()
                .map(|(k, &theta)| {
                    let samples = sample_marginal(
                        state,
                        QuadratureAngle::new(theta),
                        n_per_angle,
                        seed,
                        k as u64,
                    );
                    histogram(&samples, range, bins)
                })
                .collect()
        }
        ProjectionSource::Samples(sets) => {
            sets.par_iter().map(|s| histogram(s, range, bins)).collect()
        }
    };

    let total: usize = binned.iter().map(|b| b.2).sum();
    let outside: usize = binned.iter().map(|b| b.2 - b.1).sum();
    let per_angle = binned.iter().map(|b| b.2).min().unwrap_or(0);
    let histograms = binned.into_iter().map(|b| b.0).collect();
    let mut set = ProjectionSet::new(angles, edges, histograms, per_angle)?;
    if total > 0 && outside as f64 > OUTSIDE_WARN_FRACTION * total as f64 {
        set.warning = Some(format!(
            "{:.2}% of outcomes fall outside ±{range}; widen the histogram range",
            100.0 * outside as f64 / total as f64
        ));
    }
    Ok(set)
}

/// Exact draws from the 1-D marginal of `state` at `angle`.
pub fn sample_marginal(
    state: &MixtureState,
    angle: QuadratureAngle,
    n: usize,
    seed: u64,
    stream: u64,
) -> Vec<f64> {
    let mut rng = rng::substream(seed, TOMOGRAPHY_STREAM_BASE + stream);
    let params: Vec<(f64, f64, f64)> = state
        .iter()
        .map(|(w, c)| {
            (
                w,
                c.projected_mean(angle),
                c.projected_variance(angle).sqrt(),
            )
        })
        .collect();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = params.len() - 1;
            for (i, p) in params.iter().enumerate() {
                acc += p.0;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            let z: f64 = rng.sample(StandardNormal);
            params[pick].1 + params[pick].2 * z
        })
        .collect()
}

/// Unit-area histogram; returns `(densities, in_range, total)`.
fn histogram(samples: &[f64], range: f64, bins: usize) -> (Vec<f64>, usize, usize) {
    let mut counts = vec![0usize; bins];
    let width = 2.0 * range / bins as f64;
    for &s in samples {
        let j = ((s + range) / width).floor();
        if j >= 0.0 && (j as usize) < bins {
            counts[j as usize] += 1;
        }
    }
    let inside: usize = counts.iter().sum();
    let norm = if inside == 0 {
        0.0
    } else {
        1.0 / (inside as f64 * width)
    };
    (
        counts.iter().map(|&c| c as f64 * norm).collect(),
        inside,
        samples.len(),
    )
}

/// Rectangular reconstruction grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    /// `n × n` points over `[-extent, extent]²`.
    pub fn symmetric(extent: f64, n: usize) -> Self {
        GridSpec {
            x_min: -extent,
            x_max: extent,
            nx: n,
            p_min: -extent,
            p_max: extent,
            np: n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 || !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(Error::domain(
                "grid needs at least 2 points per axis and increasing bounds",
            ));
        }
        Ok(())
    }

    pub fn x_axis(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.nx)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.np)
    }

    /// Largest distance of a grid point from the origin.
    pub fn max_radius(&self) -> f64 {
        self.x_min
            .abs()
            .max(self.x_max.abs())
            .hypot(self.p_min.abs().max(self.p_max.abs()))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Wigner density sampled on a uniform grid; `values[i][j]` is the density at
/// `(x_axis[j], p_axis[i])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    x_axis: Vec<f64>,
    p_axis: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl WignerGrid {
    pub fn new(x_axis: Vec<f64>, p_axis: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_uniform(&x_axis, "x")?;
        check_uniform(&p_axis, "p")?;
        if values.len() != p_axis.len() || values.iter().any(|row| row.len() != x_axis.len()) {
            return Err(Error::domain("grid values do not match the axes"));
        }
        Ok(WignerGrid {
            x_axis,
            p_axis,
            values,
        })
    }

    pub fn x_axis(&self) -> &[f64] {
        &self.x_axis
    }
    pub fn p_axis(&self) -> &[f64] {
        &self.p_axis
    }
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip][ix]
    }

    pub fn cell_area(&self) -> f64 {
        (self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0])
    }

    /// Σ values · cell area.
    pub fn mass(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interior strict local maxima (8-neighbourhood) whose value is at least
    /// `min_fraction` of the global maximum, as `(x, p, value)`, largest first.
    pub fn local_maxima(&self, min_fraction: f64) -> Vec<(f64, f64, f64)> {
        let floor = min_fraction
            * self
                .values
                .iter()
                .flatten()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut out = Vec::new();
        for i in 1..self.p_axis.len() - 1 {
            for j in 1..self.x_axis.len() - 1 {
                let v = self.values[i][j];
                if v < floor {
                    continue;
                }
                let is_max = (-1i32..=1).all(|di| {
                    (-1i32..=1).all(|dj| {
                        (di == 0 && dj == 0)
                            || self.values[(i as i32 + di) as usize][(j as i32 + dj) as usize] < v
                    })
                });
                if is_max {
                    out.push((self.x_axis[j], self.p_axis[i], v));
                }
            }
        }
        out.sort_by(|a, b| b.2.total_cmp(&a.2));
        out
    }

    /// CSV with the x axis in the header row and one row per p value:
    /// `p\x,x0,x1,...` then `p_i,W(x0,p_i),W(x1,p_i),...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# units: x and p in SNU amplitude, W in 1/SNU^2")?;
        writeln!(w, "p\\x,{}", join(&self.x_axis, ","))?;
        for (p, row) in self.p_axis.iter().zip(&self.values) {
            writeln!(w, "{p:?},{}", join(row, ","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<WignerGrid> {
        let mut lines = r.lines().enumerate();
        let header = loop {
            let (_, line) = lines
                .next()
                .ok_or_else(|| Error::parse(1, "empty grid file"))?;
            let line = line?;
            if !line.starts_with('#') {
                break line;
            }
        };
        let rest = header
            .strip_prefix("p\\x,")
            .ok_or_else(|| Error::parse(1, "expected 'p\\x,...' header"))?;
        let x_axis = parse_list(rest, ',', 1)?;
        let mut p_axis = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v = parse_list(&line, ',', i + 1)?;
            if v.len() != x_axis.len() + 1 {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {} columns, found {}", x_axis.len() + 1, v.len()),
                ));
            }
            p_axis.push(v[0]);
            values.push(v[1..].to_vec());
        }
        WignerGrid::new(x_axis, p_axis, values)
    }
}

fn check_uniform(axis: &[f64], name: &str) -> Result<()> {
    if axis.len() < 2 || axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(format!(
            "{name} axis must be strictly increasing with ≥ 2 points"
        )));
    }
    let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if axis
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > UNIFORM_TOL * step.abs().max(1.0))
    {
        return Err(Error::domain(format!("{name} axis is not uniform")));
    }
    Ok(())
}

/// Band-limited ramp filter in the DFT domain: the FFT of the discrete
/// Ram-Lak kernel times a raised-cosine window that reaches zero at
/// `cutoff · Nyquist`.
fn ramp_filter(n_fft: usize, dt: f64, cutoff: f64) -> Vec<f64> {
    let mut kernel = vec![Complex::new(0.0, 0.0); n_fft];
    for (i, k) in kernel.iter_mut().enumerate() {
        let n = if i <= n_fft / 2 {
            i as i64
        } else {
            i as i64 - n_fft as i64
        };
        k.re = if n == 0 {
            1.0 / (4.0 * dt * dt)
        } else if n % 2 != 0 {
            -1.0 / ((PI * n as f64 * dt).powi(2))
        } else {
            0.0
        };
    }
    FftPlanner::new()
        .plan_fft_forward(n_fft)
        .process(&mut kernel);
    let nu_c = cutoff * 0.5 / dt;
    kernel
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let k = if i <= n_fft / 2 {
                i as f64
            } else {
                i as f64 - n_fft as f64
            };
            let nu = (k / (n_fft as f64 * dt)).abs();
            let window = if nu < nu_c {
                0.5 * (1.0 + (PI * nu / nu_c).cos())
            } else {
                0.0
            };
            // the kernel is real and even, so its transform is real
            h.re * window * dt
        })
        .collect()
}

/// Ramp-filters every histogram; returns the filtered projections on the
/// histogram bin centres.
fn filter_projections(projections: &ProjectionSet, cutoff: f64) -> Vec<Vec<f64>> {
    let bins = projections.bin_edges.len() - 1;
    let n_fft = (2 * bins).next_power_of_two();
    let dt = projections.bin_width();
    let filter = ramp_filter(n_fft, dt, cutoff);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);
    projections
        .histograms
        .iter()
        .map(|h| {
            let mut buf: Vec<Complex<f64>> = h
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(n_fft)
                .collect();
            fwd.process(&mut buf);
            for (b, f) in buf.iter_mut().zip(&filter) {
                *b *= *f;
            }
            inv.process(&mut buf);
            buf[..bins].iter().map(|c| c.re / n_fft as f64).collect()
        })
        .collect()
}

/// Filtered back-projection of `projections` onto `grid`.
///
/// `filter_cutoff` is the fraction of the histogram Nyquist frequency at
/// which the raised-cosine window reaches zero. Every grid point must lie
/// within the histogram support for all angles, i.e. the grid's largest
/// radius may not exceed the histogram range.
pub fn inverse_radon(
    projections: &ProjectionSet,
    grid: &GridSpec,
    filter_cutoff: f64,
) -> Result<WignerGrid> {
    if !(filter_cutoff > 0.0 && filter_cutoff <= 1.0) {
        return Err(Error::domain(format!(
            "filter cutoff {filter_cutoff} outside (0, 1]"
        )));
    }
    grid.validate()?;
    let lo = projections.bin_edges[0];
    let hi = projections.bin_edges[projections.bin_edges.len() - 1];
    let radius = grid.max_radius();
    if -radius < lo || radius > hi {
        return Err(Error::domain(format!(
            "grid reaches radius {radius:.3} but the histograms only cover [{lo}, {hi}]"
        )));
    }
    let filtered = filter_projections(projections, filter_cutoff);
    let dirs: Vec<(f64, f64)> = projections
        .angles
        .iter()
        .map(|&a| (a.cos(), a.sin()))
        .collect();
    let dt = projections.bin_width();
    let first_center = lo + 0.5 * dt;
    let bins = filtered[0].len();
    let scale = PI / projections.angles.len() as f64;
    let x_axis = grid.x_axis();
    let p_axis = grid.p_axis();

    let values: Vec<Vec<f64>> = p_axis
        .par_iter()
        .map(|&p| {
            x_axis
                .iter()
                .map(|&x| {
                    let sum: f64 = dirs
                        .iter()
                        .zip(&filtered)
                        .map(|(&(c, s), q)| {
                            let u = (x * c + p * s - first_center) / dt;
                            interpolate(q, u, bins)
                        })
                        .sum();
                    sum * scale
                })
                .collect()
        })
        .collect();
    WignerGrid::new(x_axis, p_axis, values)
}

/// Linear interpolation of `q` at fractional index `u`; the filtered
/// projection is taken as constant beyond the outermost bin centres.
fn interpolate(q: &[f64], u: f64, n: usize) -> f64 {
    if u <= 0.0 {
        return q[0];
    }
    if u >= (n - 1) as f64 {
        return q[n - 1];
    }
    let i = u.floor() as usize;
    let f = u - i as f64;
    q[i] * (1.0 - f) + q[i + 1] * f
}

/// Pointwise [`wigner_density`] on a grid.
pub fn analytic_wigner_grid(state: &MixtureState, grid: &GridSpec) -> Result<WignerGrid> {
    grid.validate()?;
    let x_axis = grid.x_axis();
    let p_axis = grid.p_axis();
    let values = p_axis
        .iter()
        .map(|&p| {
            x_axis
                .iter()
                .map(|&x| wigner_density(state, x, p))
                .collect()
        })
        .collect();
    WignerGrid::new(x_axis, p_axis, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDistance {
    /// Largest absolute difference (density units).
    pub l_inf: f64,
    /// Mean absolute difference times the total grid area.
    pub l1: f64,
    /// `l_inf / max|b|`.
    pub peak_ratio: f64,
}

/// Distance between two grids on identical axes; `b` is the reference.
pub fn grid_distance(a: &WignerGrid, b: &WignerGrid) -> Result<GridDistance> {
    if a.x_axis != b.x_axis || a.p_axis != b.p_axis {
        return Err(Error::domain("grids have different axes"));
    }
    let mut l_inf: f64 = 0.0;
    let mut sum = 0.0;
    for (ra, rb) in a.values.iter().zip(&b.values) {
        for (va, vb) in ra.iter().zip(rb) {
            let d = (va - vb).abs();
            l_inf = l_inf.max(d);
            sum += d;
        }
    }
    let n = (a.x_axis.len() * a.p_axis.len()) as f64;
    let area =
        (a.x_axis[a.x_axis.len() - 1] - a.x_axis[0]) * (a.p_axis[a.p_axis.len() - 1] - a.p_axis[0]);
    let peak = b.max_abs();
    Ok(GridDistance {
        l_inf,
        l1: sum / n * area,
        peak_ratio: if peak > 0.0 {
            l_inf / peak
        } else {
            f64::INFINITY
        },
    })
}

fn join(values: &[f64], sep: &str) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(sep)
}

fn parse_list(s: &str, sep: char, line: usize) -> Result<Vec<f64>> {
    s.split(sep)
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(line, format!("bad number '{}': {e}", f.trim())))
        })
        .collect()
}
