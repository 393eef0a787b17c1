//! Two-channel measurement records.
//!
//! A record file holds already-demodulated per-sample quadrature values of
//! the tap and signal detectors as integers (16-bit ADC counts) plus a
//! header describing the sample rate, bin length and the on/off toggle of
//! the displacement modulation:
//!
//! ```text
//! # format: cvdistill-record v1
//! # sample_rate_hz: 10000000
//! # bin_length_us: 1.0
//! # toggle_hz: 500000
//! # toggle_phase_samples: 0
//! # value_scale: 3.0518e-4
//! index,tap_raw,signal_raw
//! 0,123,-456
//! ```
//!
//! Binning averages consecutive samples into one value per bin. The
//! modulation is a square wave with half-period `sample_rate / (2·toggle_hz)`
//! samples; `toggle_phase_samples` is the position of an on→off edge, so the
//! modulation is off for the half-period starting there and on for the one
//! before it.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::PairedSamples;

pub const FORMAT_LINE: &str = "cvdistill-record v1";
pub const COLUMN_HEADER: &str = "index,tap_raw,signal_raw";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub sample_rate_hz: u64,
    pub bin_length_us: f64,
    pub toggle_hz: f64,
    pub toggle_phase_samples: i64,
    /// SNU per raw unit.
    pub value_scale: f64,
}

impl Default for RecordHeader {
    fn default() -> Self {
        RecordHeader {
            sample_rate_hz: 10_000_000,
            bin_length_us: 1.0,
            toggle_hz: 500_000.0,
            toggle_phase_samples: 0,
            value_scale: 3.0518e-4,
        }
    }
}

impl RecordHeader {
    /// Samples per bin; must be a positive integer.
    pub fn samples_per_bin(&self) -> Result<usize> {
        let n = self.sample_rate_hz as f64 * self.bin_length_us * 1e-6;
        integral(n).filter(|&n| n >= 1).ok_or_else(|| {
            Error::domain(format!(
                "sample_rate·bin_length = {n} is not a positive integer number of samples"
            ))
        })
    }

    /// Samples per toggle half-period; must be a positive integer.
    pub fn half_period_samples(&self) -> Result<usize> {
        if !(self.toggle_hz > 0.0) {
            return Err(Error::domain(format!(
                "toggle frequency {} must be positive",
                self.toggle_hz
            )));
        }
        let n = self.sample_rate_hz as f64 / (2.0 * self.toggle_hz);
        integral(n).filter(|&n| n >= 1).ok_or_else(|| {
            Error::domain(format!(
                "toggle half-period of {n} samples is not a positive integer"
            ))
        })
    }

    /// Checks the strict invariants: integral samples per bin and a toggle
    /// half-period that is a whole number of bins.
    pub fn validate(&self) -> Result<()> {
        self.validate_permissive()?;
        let bin = self.samples_per_bin()?;
        let half = self.half_period_samples()?;
        if half % bin != 0 {
            return Err(Error::domain(format!(
                "toggle half-period ({half} samples) is not a multiple of the bin length ({bin} samples)"
            )));
        }
        Ok(())
    }

    /// Invariants that hold even in permissive mode.
    pub fn validate_permissive(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::domain("sample rate must be positive"));
        }
        if !(self.value_scale.is_finite() && self.value_scale != 0.0) {
            return Err(Error::domain(format!(
                "value_scale {} must be finite and non-zero",
                self.value_scale
            )));
        }
        self.samples_per_bin()?;
        self.half_period_samples()?;
        Ok(())
    }

    /// Whether the modulation is on at sample `n`.
    pub fn modulation_on(&self, n: i64) -> Result<bool> {
        let half = self.half_period_samples()? as i64;
        Ok((n - self.toggle_phase_samples)
            .div_euclid(half)
            .rem_euclid(2)
            == 1)
    }
}

fn integral(x: f64) -> Option<usize> {
    let r = x.round();
    if x.is_finite() && r >= 0.0 && (x - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

/// One raw `(tap, signal)` sample pair in ADC units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPair {
    pub tap: i32,
    pub signal: i32,
}

/// Writes a record file. Numbers are printed in shortest round-trip form so
/// that reading the file back reproduces the header exactly.
pub fn write_record_file<W: Write>(
    mut w: W,
    header: &RecordHeader,
    samples: &[RawPair],
) -> Result<()> {
    writeln!(w, "# format: {FORMAT_LINE}")?;
    writeln!(w, "# sample_rate_hz: {}", header.sample_rate_hz)?;
    writeln!(w, "# bin_length_us: {:?}", header.bin_length_us)?;
    if header.toggle_hz.fract() == 0.0 && header.toggle_hz.abs() < 1e15 {
        writeln!(w, "# toggle_hz: {:.0}", header.toggle_hz)?;
    } else {
        writeln!(w, "# toggle_hz: {:?}", header.toggle_hz)?;
    }
    writeln!(w, "# toggle_phase_samples: {}", header.toggle_phase_samples)?;
    writeln!(w, "# value_scale: {:e}", header.value_scale)?;
    writeln!(w, "{COLUMN_HEADER}")?;
    for (i, s) in samples.iter().enumerate() {
        writeln!(w, "{i},{},{}", s.tap, s.signal)?;
    }
    Ok(())
}

/// Parses a record file. Errors carry the 1-based line number.
pub fn read_record_file<R: BufRead>(r: R) -> Result<(RecordHeader, Vec<RawPair>)> {
    let mut format = None;
    let mut sample_rate = None;
    let mut bin_length = None;
    let mut toggle_hz = None;
    let mut phase = None;
    let mut scale = None;
    let mut seen_columns = false;
    let mut samples = Vec::new();

    for (i, line) in r.lines().enumerate() {
        let ln = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if !seen_columns {
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta
                    .split_once(':')
                    .ok_or_else(|| Error::parse(ln, format!("malformed header line '{line}'")))?;
                let value = value.trim();
                match key.trim() {
                    "format" => format = Some(value.to_string()),
                    "sample_rate_hz" => {
                        sample_rate = Some(parse_field::<u64>(value, ln, "sample_rate_hz")?)
                    }
                    "bin_length_us" => {
                        bin_length = Some(parse_field::<f64>(value, ln, "bin_length_us")?)
                    }
                    "toggle_hz" => toggle_hz = Some(parse_field::<f64>(value, ln, "toggle_hz")?),
                    "toggle_phase_samples" => {
                        phase = Some(parse_field::<i64>(value, ln, "toggle_phase_samples")?)
                    }
                    "value_scale" => scale = Some(parse_field::<f64>(value, ln, "value_scale")?),
                    other => {
                        return Err(Error::parse(ln, format!("unknown header field '{other}'")))
                    }
                }
                continue;
            }
            if line.trim() != COLUMN_HEADER {
                return Err(Error::parse(
                    ln,
                    format!("expected column header '{COLUMN_HEADER}'"),
                ));
            }
            match format.as_deref() {
                Some(FORMAT_LINE) => {}
                Some(other) => {
                    return Err(Error::parse(ln, format!("unsupported format '{other}'")))
                }
                None => return Err(Error::parse(ln, "missing '# format:' header line")),
            }
            seen_columns = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                ln,
                format!("expected 3 columns, found {}", fields.len()),
            ));
        }
        parse_field::<u64>(fields[0].trim(), ln, "index")?;
        samples.push(RawPair {
            tap: parse_field(fields[1].trim(), ln, "tap_raw")?,
            signal: parse_field(fields[2].trim(), ln, "signal_raw")?,
        });
    }
    if !seen_columns {
        return Err(Error::parse(0, "missing column header line"));
    }
    let missing = |name: &str| Error::parse(0, format!("missing header field '{name}'"));
    let header = RecordHeader {
        sample_rate_hz: sample_rate.ok_or_else(|| missing("sample_rate_hz"))?,
        bin_length_us: bin_length.ok_or_else(|| missing("bin_length_us"))?,
        toggle_hz: toggle_hz.ok_or_else(|| missing("toggle_hz"))?,
        toggle_phase_samples: phase.ok_or_else(|| missing("toggle_phase_samples"))?,
        value_scale: scale.ok_or_else(|| missing("value_scale"))?,
    };
    Ok((header, samples))
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| Error::parse(line, format!("field '{name}': cannot parse '{s}': {e}")))
}

/// One averaged time bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedRecord {
    pub bin_index: usize,
    pub tap_value: f64,
    pub signal_value: f64,
    pub modulation_on: bool,
}

/// Binned data plus the bookkeeping of rejected bins.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedData {
    pub records: Vec<BinnedRecord>,
    /// Candidate bins that contained a toggle edge.
    pub rejected_bins: usize,
    /// Leading samples dropped to align the first bin to the toggle phase.
    pub skipped_samples: usize,
}

impl BinnedData {
    pub fn candidate_bins(&self) -> usize {
        self.records.len() + self.rejected_bins
    }
}

/// Averages samples into bins aligned to the toggle phase.
///
/// Bin boundaries sit at `toggle_phase_samples + k·samples_per_bin`; leading
/// samples before the first boundary are skipped. With a valid header every
/// bin lies entirely inside one modulation half-period. `permissive` accepts
/// headers whose half-period is not a whole number of bins; bins that then
/// straddle a toggle edge are rejected and counted.
pub fn bin_and_sync(
    header: &RecordHeader,
    samples: &[RawPair],
    permissive: bool,
) -> Result<BinnedData> {
    if permissive {
        header.validate_permissive()?;
    } else {
        header.validate()?;
    }
    let per_bin = header.samples_per_bin()?;
    let half = header.half_period_samples()? as i64;
    let offset = header.toggle_phase_samples.rem_euclid(per_bin as i64) as usize;
    if samples.len() < offset + per_bin {
        return Err(Error::NoCompleteBins {
            samples: samples.len(),
            per_bin,
        });
    }
    let mut records = Vec::new();
    let mut rejected = 0;
    for (k, chunk) in samples[offset..].chunks_exact(per_bin).enumerate() {
        let start = (offset + k * per_bin) as i64;
        let end = start + per_bin as i64;
        // position of the first toggle edge strictly after `start`
        let since = (start - header.toggle_phase_samples).rem_euclid(half);
        let next_edge = start + (half - since);
        if next_edge < end {
            rejected += 1;
            continue;
        }
        let (tap_sum, signal_sum) = chunk.iter().fold((0.0, 0.0), |(t, s), p| {
            (t + p.tap as f64, s + p.signal as f64)
        });
        let n = per_bin as f64;
        records.push(BinnedRecord {
            bin_index: k,
            tap_value: tap_sum / n * header.value_scale,
            signal_value: signal_sum / n * header.value_scale,
            modulation_on: header.modulation_on(start)?,
        });
    }
    Ok(BinnedData {
        records,
        rejected_bins: rejected,
        skipped_samples: offset,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationFilter {
    #[default]
    All,
    OnOnly,
    OffOnly,
}

/// Pairs from binned records, optionally restricted by modulation state.
/// Component labels are unknown for measured data.
pub fn records_to_pairs(
    records: &[BinnedRecord],
    filter: ModulationFilter,
) -> Result<PairedSamples> {
    let (signal, tap): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| match filter {
            ModulationFilter::All => true,
            ModulationFilter::OnOnly => r.modulation_on,
            ModulationFilter::OffOnly => !r.modulation_on,
        })
        .map(|r| (r.signal_value, r.tap_value))
        .unzip();
    if signal.is_empty() {
        return Err(Error::EmptyRecords);
    }
    PairedSamples::unlabeled(signal, tap)
}

/// A value scale that maps the largest |value| in `samples` to just inside
/// the 16-bit range.
pub fn suggest_value_scale(samples: &PairedSamples) -> f64 {
    let max = samples
        .signal_values
        .iter()
        .chain(&samples.tap_values)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        1.0
    } else {
        max / (i16::MAX as f64 - 1.0)
    }
}

fn quantize(v: f64, scale: f64) -> Result<i32> {
    let q = (v / scale).round();
    if !(q >= i16::MIN as f64 && q <= i16::MAX as f64) {
        return Err(Error::domain(format!(
            "value {v} does not fit 16 bits at scale {scale}"
        )));
    }
    Ok(q as i32)
}

/// Rounds every value to the nearest multiple of `scale`, i.e. the values an
/// exported record file decodes to.
pub fn quantize_samples(samples: &PairedSamples, scale: f64) -> Result<PairedSamples> {
    let q = |v: &Vec<f64>| -> Result<Vec<f64>> {
        v.iter()
            .map(|&x| Ok(quantize(x, scale)? as f64 * scale))
            .collect()
    };
    PairedSamples::new(
        q(&samples.signal_values)?,
        q(&samples.tap_values)?,
        samples.component_labels.clone(),
    )
}

/// Converts paired values to raw per-sample data: each pair becomes one bin,
/// i.e. `samples_per_bin` identical raw samples. The returned header has
/// phase 0 so bins start at the first sample.
pub fn export_samples(
    samples: &PairedSamples,
    template: &RecordHeader,
) -> Result<(RecordHeader, Vec<RawPair>)> {
    let header = RecordHeader {
        toggle_phase_samples: 0,
        ..*template
    };
    header.validate()?;
    let per_bin = header.samples_per_bin()?;
    let mut raw = Vec::with_capacity(samples.len() * per_bin);
    for (&s, &t) in samples.signal_values.iter().zip(&samples.tap_values) {
        let pair = RawPair {
            tap: quantize(t, header.value_scale)?,
            signal: quantize(s, header.value_scale)?,
        };
        raw.extend(std::iter::repeat_n(pair, per_bin));
    }
    Ok((header, raw))
}
