//! Recording types, the portable `.ssvp` dataset format and result emitters.
//!
//! Layout of a `.ssvp` file (all integers and floats little-endian):
//!
//! ```text
//! 0..4    magic "SSVP"
//! 4       version (1)
//! 5..8    zero padding
//! 8..32   u32 x6: Nc, Ns, Nt, Nf, sample rate (mHz), visual latency (ms)
//!         f32 x Nf stimulus frequencies (Hz)
//!         f32 x Nf stimulus phases (rad)
//!         Nc channel labels, 8 ASCII bytes each, space padded
//!         f32 payload, index = ((f*Nt + t)*Nc + c)*Ns + s
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SSVP";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 32;
const LABEL_LEN: usize = 8;

/// One multichannel epoch: `n_channels` rows by `n_samples` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EegEpoch {
    data: DMatrix<f64>,
    sample_rate_hz: f64,
}

impl EegEpoch {
    pub fn new(data: DMatrix<f64>, sample_rate_hz: f64) -> Result<Self> {
        if data.nrows() < 1 {
            return Err(Error::invalid("epoch needs at least one channel"));
        }
        if data.ncols() < 2 {
            return Err(Error::invalid("epoch needs at least two samples"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("epoch contains non-finite samples"));
        }
        Ok(Self {
            data,
            sample_rate_hz,
        })
    }

    /// Builds an epoch from per-channel sample vectors.
    pub fn from_rows(rows: &[Vec<f64>], sample_rate_hz: f64) -> Result<Self> {
        let n_channels = rows.len();
        let n_samples = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_samples) {
            return Err(Error::invalid("channels have different lengths"));
        }
        let data = DMatrix::from_fn(n_channels, n_samples, |c, s| rows[c][s]);
        Self::new(data, sample_rate_hz)
    }

    pub(crate) fn from_parts_unchecked(data: DMatrix<f64>, sample_rate_hz: f64) -> Self {
        debug_assert!(data.nrows() >= 1 && data.ncols() >= 1);
        Self {
            data,
            sample_rate_hz,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.row(c).iter().copied().collect()
    }

    /// Same epoch multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: &self.data * factor,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Columns `range` of this epoch.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n_samples() {
            return Err(Error::arg(format!(
                "sample range {range:?} outside epoch of {} samples",
                self.n_samples()
            )));
        }
        let data = self.data.columns(range.start, range.len()).into_owned();
        Self::new(data, self.sample_rate_hz)
    }

    pub(crate) fn same_shape(&self, other: &EegEpoch) -> bool {
        self.data.shape() == other.data.shape()
    }
}

/// Array dimensions of a [`SsvepDataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_channels: usize,
    pub n_samples: usize,
    pub n_trials: usize,
    pub n_freqs: usize,
}

impl Dims {
    pub fn len(&self) -> usize {
        self.n_channels * self.n_samples * self.n_trials * self.n_freqs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn checked_len(&self) -> Option<usize> {
        self.n_channels
            .checked_mul(self.n_samples)?
            .checked_mul(self.n_trials)?
            .checked_mul(self.n_freqs)
    }
}

/// Stimulus and recording metadata carried alongside the sample array.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub stim_frequencies_hz: Vec<f64>,
    pub stim_phases_rad: Vec<f64>,
    pub sample_rate_hz: f64,
    pub visual_latency_s: f64,
    pub channel_labels: Vec<String>,
}

/// A complete recording: channels x samples x trials x stimulus frequencies.
///
/// Samples are held as `f32` in the on-disk linearization order so that a
/// write/read cycle is bit-exact. Metadata is normalized on construction to
/// the precision the file format stores (f32 frequencies and phases, whole
/// milli-hertz sample rate, whole millisecond latency).
#[derive(Debug, Clone, PartialEq)]
pub struct SsvepDataset {
    dims: Dims,
    meta: DatasetMeta,
    data: Vec<f32>,
}

fn to_f32_precision(v: f64) -> f64 {
    v as f32 as f64
}

impl SsvepDataset {
    pub fn new(dims: Dims, mut meta: DatasetMeta, data: Vec<f32>) -> Result<Self> {
        let expected = dims
            .checked_len()
            .ok_or_else(|| Error::invalid("dimensions overflow"))?;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "payload has {} samples, dimensions need {expected}",
                data.len()
            )));
        }
        if dims.n_channels == 0 || dims.n_samples < 2 || dims.n_freqs == 0 {
            return Err(Error::invalid(format!("degenerate dimensions {dims:?}")));
        }
        if dims.n_trials < 2 {
            return Err(Error::invalid(
                "at least two trials are needed for leave-one-out evaluation",
            ));
        }
        if meta.stim_frequencies_hz.len() != dims.n_freqs
            || meta.stim_phases_rad.len() != dims.n_freqs
        {
            return Err(Error::invalid(format!(
                "{} frequencies and {} phases for Nf = {}",
                meta.stim_frequencies_hz.len(),
                meta.stim_phases_rad.len(),
                dims.n_freqs
            )));
        }
        if meta.channel_labels.len() != dims.n_channels {
            return Err(Error::invalid(format!(
                "{} channel labels for Nc = {}",
                meta.channel_labels.len(),
                dims.n_channels
            )));
        }
        for label in &meta.channel_labels {
            if !label.is_ascii() || label.len() > LABEL_LEN || label.ends_with(' ') {
                return Err(Error::invalid(format!(
                    "channel label {label:?} must be at most {LABEL_LEN} ASCII bytes without trailing spaces"
                )));
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite samples"));
        }

        for f in meta.stim_frequencies_hz.iter_mut() {
            *f = to_f32_precision(*f);
        }
        for p in meta.stim_phases_rad.iter_mut() {
            *p = to_f32_precision(*p);
        }
        if meta
            .stim_frequencies_hz
            .iter()
            .any(|f| !(f.is_finite() && *f > 0.0))
        {
            return Err(Error::invalid("stimulus frequencies must be positive"));
        }
        if meta.stim_frequencies_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "stimulus frequencies must be strictly increasing",
            ));
        }
        if meta.stim_phases_rad.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("stimulus phases must be finite"));
        }

        let mhz = (meta.sample_rate_hz * 1000.0).round();
        if !(mhz >= 1.0 && mhz <= u32::MAX as f64) {
            return Err(Error::invalid(format!(
                "sample rate {} Hz not representable",
                meta.sample_rate_hz
            )));
        }
        meta.sample_rate_hz = mhz / 1000.0;
        let ms = (meta.visual_latency_s * 1000.0).round();
        if !(ms >= 0.0 && ms <= u32::MAX as f64) {
            return Err(Error::invalid(format!(
                "visual latency {} s not representable",
                meta.visual_latency_s
            )));
        }
        meta.visual_latency_s = ms / 1000.0;

        Ok(Self { dims, meta, data })
    }

    /// Builds a dataset from a generator closure `(c, s, t, f) -> sample`.
    pub fn from_fn(
        dims: Dims,
        meta: DatasetMeta,
        mut sample: impl FnMut(usize, usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for f in 0..dims.n_freqs {
            for t in 0..dims.n_trials {
                for c in 0..dims.n_channels {
                    for s in 0..dims.n_samples {
                        data.push(sample(c, s, t, f));
                    }
                }
            }
        }
        Self::new(dims, meta, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn stim_frequencies_hz(&self) -> &[f64] {
        &self.meta.stim_frequencies_hz
    }

    pub fn stim_phases_rad(&self) -> &[f64] {
        &self.meta.stim_phases_rad
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.meta.sample_rate_hz
    }

    pub fn visual_latency_s(&self) -> f64 {
        self.meta.visual_latency_s
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.meta.channel_labels
    }

    /// Lowest stimulus frequency; the filterbank's base frequency.
    pub fn base_frequency_hz(&self) -> f64 {
        self.meta.stim_frequencies_hz[0]
    }

    /// Raw payload in file order.
    pub fn payload(&self) -> &[f32] {
        &self.data
    }

    fn index(&self, c: usize, s: usize, t: usize, f: usize) -> usize {
        let d = &self.dims;
        ((f * d.n_trials + t) * d.n_channels + c) * d.n_samples + s
    }

    pub fn sample(&self, c: usize, s: usize, t: usize, f: usize) -> f32 {
        self.data[self.index(c, s, t, f)]
    }

    /// Samples `range` of record (`trial`, `freq`) as an f64 epoch.
    pub fn epoch(&self, trial: usize, freq: usize, range: Range<usize>) -> Result<EegEpoch> {
        let d = self.dims;
        if trial >= d.n_trials || freq >= d.n_freqs {
            return Err(Error::arg(format!(
                "record (trial {trial}, freq {freq}) outside {} trials x {} frequencies",
                d.n_trials, d.n_freqs
            )));
        }
        if range.start >= range.end || range.end > d.n_samples {
            return Err(Error::arg(format!(
                "sample range {range:?} outside record of {} samples",
                d.n_samples
            )));
        }
        let base = self.index(0, 0, trial, freq);
        let block = &self.data[base..base + d.n_channels * d.n_samples];
        let data = DMatrix::from_fn(d.n_channels, range.len(), |c, s| {
            block[c * d.n_samples + range.start + s] as f64
        });
        Ok(EegEpoch::from_parts_unchecked(data, self.meta.sample_rate_hz))
    }

    /// Copy of this dataset with the record for each (trial, slot) taken
    /// from (trial, `source(trial, slot)`). Metadata is kept.
    pub fn remap_records(&self, mut source: impl FnMut(usize, usize) -> usize) -> Result<Self> {
        let d = self.dims;
        let block = d.n_channels * d.n_samples;
        let mut data = vec![0.0f32; self.data.len()];
        for f in 0..d.n_freqs {
            for t in 0..d.n_trials {
                let from = source(t, f);
                if from >= d.n_freqs {
                    return Err(Error::arg(format!("source slot {from} out of range")));
                }
                let dst = self.index(0, 0, t, f);
                let src = self.index(0, 0, t, from);
                data[dst..dst + block].copy_from_slice(&self.data[src..src + block]);
            }
        }
        Self::new(d, self.meta.clone(), data)
    }
}

/// Serializes `dataset` into the portable byte layout.
pub fn encode_dataset(dataset: &SsvepDataset) -> Vec<u8> {
    let d = dataset.dims;
    let meta = &dataset.meta;
    let mut out =
        Vec::with_capacity(HEADER_LEN + 8 * d.n_freqs + LABEL_LEN * d.n_channels + 4 * d.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&[0, 0, 0]);
    let sample_rate_mhz = (meta.sample_rate_hz * 1000.0).round() as u32;
    let latency_ms = (meta.visual_latency_s * 1000.0).round() as u32;
    for v in [
        d.n_channels as u32,
        d.n_samples as u32,
        d.n_trials as u32,
        d.n_freqs as u32,
        sample_rate_mhz,
        latency_ms,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in &meta.stim_frequencies_hz {
        out.extend_from_slice(&(*f as f32).to_le_bytes());
    }
    for p in &meta.stim_phases_rad {
        out.extend_from_slice(&(*p as f32).to_le_bytes());
    }
    for label in &meta.channel_labels {
        let mut field = [b' '; LABEL_LEN];
        field[..label.len()].copy_from_slice(label.as_bytes());
        out.extend_from_slice(&field);
    }
    for v in &dataset.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

fn read_f32(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

/// Parses the portable byte layout.
pub fn decode_dataset(bytes: &[u8]) -> Result<SsvepDataset> {
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(Error::Format("missing SSVP magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    if bytes[5..8] != [0, 0, 0] {
        return Err(Error::Format("non-zero header padding".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corruption("truncated header".into()));
    }
    let field = |i: usize| read_u32(bytes, 8 + 4 * i) as usize;
    let dims = Dims {
        n_channels: field(0),
        n_samples: field(1),
        n_trials: field(2),
        n_freqs: field(3),
    };
    let sample_rate_mhz = field(4);
    let latency_ms = field(5);

    let n_values = dims
        .checked_len()
        .ok_or_else(|| Error::Corruption("header dimensions overflow".into()))?;
    let expected = n_values
        .checked_mul(4)
        .and_then(|p| p.checked_add(HEADER_LEN + 8 * dims.n_freqs + LABEL_LEN * dims.n_channels))
        .ok_or_else(|| Error::Corruption("header dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Corruption(format!(
            "file is {} bytes, header {:?} implies {expected}",
            bytes.len(),
            dims
        )));
    }

    let mut at = HEADER_LEN;
    let mut take_f32s = |n: usize| {
        let vals: Vec<f64> = (0..n).map(|i| read_f32(bytes, at + 4 * i) as f64).collect();
        at += 4 * n;
        vals
    };
    let stim_frequencies_hz = take_f32s(dims.n_freqs);
    let stim_phases_rad = take_f32s(dims.n_freqs);
    let mut channel_labels = Vec::with_capacity(dims.n_channels);
    for _ in 0..dims.n_channels {
        let raw = &bytes[at..at + LABEL_LEN];
        if !raw.is_ascii() {
            return Err(Error::Format("channel label is not ASCII".into()));
        }
        let label = std::str::from_utf8(raw).expect("ascii is utf-8");
        channel_labels.push(label.trim_end_matches(' ').to_string());
        at += LABEL_LEN;
    }
    let data: Vec<f32> = bytes[at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();

    let meta = DatasetMeta {
        stim_frequencies_hz,
        stim_phases_rad,
        sample_rate_hz: sample_rate_mhz as f64 / 1000.0,
        visual_latency_s: latency_ms as f64 / 1000.0,
        channel_labels,
    };
    SsvepDataset::new(dims, meta, data)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<SsvepDataset> {
    let bytes = fs::read(path)?;
    decode_dataset(&bytes)
}

/// Writes `dataset` to `path`. The dataset type cannot hold non-finite
/// samples, so validation happens before any byte is written.
pub fn write_dataset(dataset: &SsvepDataset, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_dataset(dataset);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    #[serde(rename = "subject")]
    pub subject_id: String,
    pub window_s: f64,
    pub accuracy: f64,
    pub itr_bits_per_min: f64,
    pub n_correct: usize,
    pub n_total: usize,
}

impl EvalRow {
    pub fn new(
        subject_id: impl Into<String>,
        window_s: f64,
        itr_bits_per_min: f64,
        n_correct: usize,
        n_total: usize,
    ) -> Result<Self> {
        if n_total == 0 || n_correct > n_total {
            return Err(Error::arg(format!("{n_correct} correct of {n_total}")));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            window_s,
            accuracy: n_correct as f64 / n_total as f64,
            itr_bits_per_min,
            n_correct,
            n_total,
        })
    }
}

/// Writes `rows` as CSV with header
/// `subject,window_s,accuracy,itr_bits_per_min,n_correct,n_total`.
/// Floats use the shortest representation that parses back to the same value.
pub fn write_results_csv(rows: &[EvalRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::arg("no result rows to write"));
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
