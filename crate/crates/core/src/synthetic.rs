//! Seeded synthetic SSVEP recordings with known ground truth.
//!
//! Class `i` drives `Nc` latent sources
//! `u_j(t) = sum_h h^-1 sin(2 pi h f_i t + h (phi_i + 2 pi j / Nc))`, which are
//! mixed into the channels by a fixed random matrix and overlaid with white
//! Gaussian noise. Source 0 is the plain harmonic stimulus waveform.
//!
//! Randomness is split into independent ChaCha streams: stream 0 draws the
//! mixing matrix, stream `1 + f * Nt + t` the noise of record `(t, f)`, so the
//! output does not depend on generation order.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataio::{DatasetMeta, Dims, SsvepDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mixing {
    /// Seeded random matrix with singular values in [1, 3].
    #[default]
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub frequencies_hz: Vec<f64>,
    pub phases_rad: Vec<f64>,
    pub n_channels: usize,
    pub n_trials: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub n_harmonics: usize,
    /// Per-channel signal-to-noise ratio; `f64::INFINITY` for no noise.
    pub snr_db: f64,
    pub seed: u64,
    pub mixing: Mixing,
}

/// The twelve stimulus frequencies 9.25, 9.75, ..., 14.75 Hz.
pub fn standard_frequencies() -> Vec<f64> {
    (0..12).map(|i| 9.25 + 0.5 * i as f64).collect()
}

/// Phases cycling through 0, pi/2, pi, 3pi/2.
pub fn quadrature_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i % 4) as f64 * PI / 2.0).collect()
}

impl SynthSpec {
    /// Twelve classes, 8 channels, 15 trials of 4 s at 256 Hz, three harmonics.
    pub fn standard(snr_db: f64, seed: u64) -> Self {
        let frequencies_hz = standard_frequencies();
        let phases_rad = quadrature_phases(frequencies_hz.len());
        Self {
            frequencies_hz,
            phases_rad,
            n_channels: 8,
            n_trials: 15,
            duration_s: 4.0,
            sample_rate_hz: 256.0,
            n_harmonics: 3,
            snr_db,
            seed,
            mixing: Mixing::Random,
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.frequencies_hz.is_empty() || self.frequencies_hz.len() != self.phases_rad.len() {
            return Err(Error::arg(format!(
                "{} frequencies and {} phases",
                self.frequencies_hz.len(),
                self.phases_rad.len()
            )));
        }
        if self.n_harmonics == 0 {
            return Err(Error::arg("at least one harmonic is required"));
        }
        if self.n_channels == 0 {
            return Err(Error::arg("at least one channel is required"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::arg("sample rate must be positive"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::arg("duration must be positive"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::arg("SNR must be a number or +inf"));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        for f in &self.frequencies_hz {
            if self.n_harmonics as f64 * f >= nyquist {
                return Err(Error::arg(format!(
                    "harmonic {} of {f} Hz is at or above Nyquist ({nyquist} Hz)",
                    self.n_harmonics
                )));
            }
        }
        Ok(())
    }
}

fn rng_for_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mixing_matrix(spec: &SynthSpec) -> DMatrix<f64> {
    let nc = spec.n_channels;
    match spec.mixing {
        Mixing::Identity => DMatrix::identity(nc, nc),
        Mixing::Random => {
            let mut rng = rng_for_stream(spec.seed, 0);
            let g: DMatrix<f64> = DMatrix::from_fn(nc, nc, |_, _| StandardNormal.sample(&mut rng));
            let svd = g.svd(true, true);
            let u = svd.u.expect("requested U");
            let v_t = svd.v_t.expect("requested V^T");
            let sv = DMatrix::from_fn(nc, nc, |r, c| {
                if r == c {
                    rng.gen_range(1.0..3.0)
                } else {
                    0.0
                }
            });
            u * sv * v_t
        }
    }
}

fn clean_record(spec: &SynthSpec, mix: &DMatrix<f64>, freq: f64, phase: f64) -> DMatrix<f64> {
    let nc = spec.n_channels;
    let ns = spec.n_samples();
    let fs = spec.sample_rate_hz;
    let sources = DMatrix::from_fn(nc, ns, |j, n| {
        let t = n as f64 / fs;
        let offset = 2.0 * PI * j as f64 / nc as f64;
        (1..=spec.n_harmonics)
            .map(|h| {
                let h = h as f64;
                (2.0 * PI * h * freq * t + h * (phase + offset)).sin() / h
            })
            .sum()
    });
    match spec.mixing {
        Mixing::Identity => sources,
        Mixing::Random => mix * sources,
    }
}

/// Adds white Gaussian noise whose empirical power on each channel is exactly
/// the channel's signal power divided by the requested SNR.
fn add_noise(record: &mut DMatrix<f64>, snr_db: f64, rng: &mut ChaCha8Rng) {
    if snr_db == f64::INFINITY {
        return;
    }
    let ns = record.ncols();
    let ratio = 10f64.powf(-snr_db / 10.0);
    for mut row in record.row_iter_mut() {
        let signal_power = row.iter().map(|v| v * v).sum::<f64>() / ns as f64;
        let noise: Vec<f64> = (0..ns).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let noise_power = noise.iter().map(|v| v * v).sum::<f64>() / ns as f64;
        let scale = (signal_power * ratio / noise_power).sqrt();
        for (v, n) in row.iter_mut().zip(&noise) {
            *v += scale * n;
        }
    }
}

pub fn generate_ssvep(spec: &SynthSpec) -> Result<SsvepDataset> {
    spec.validate()?;
    let nf = spec.frequencies_hz.len();
    let dims = Dims {
        n_channels: spec.n_channels,
        n_samples: spec.n_samples(),
        n_trials: spec.n_trials,
        n_freqs: nf,
    };
    let mix = mixing_matrix(spec);
    let clean: Vec<DMatrix<f64>> = (0..nf)
        .map(|f| clean_record(spec, &mix, spec.frequencies_hz[f], spec.phases_rad[f]))
        .collect();

    let records: Vec<Vec<f32>> = (0..nf * spec.n_trials)
        .into_par_iter()
        .map(|k| {
            let (f, t) = (k / spec.n_trials, k % spec.n_trials);
            let mut record = clean[f].clone();
            let mut rng = rng_for_stream(spec.seed, 1 + (f * spec.n_trials + t) as u64);
            add_noise(&mut record, spec.snr_db, &mut rng);
            // row-major channel blocks
            record.transpose().iter().map(|v| *v as f32).collect()
        })
        .collect();

    let meta = DatasetMeta {
        stim_frequencies_hz: spec.frequencies_hz.clone(),
        stim_phases_rad: spec.phases_rad.clone(),
        sample_rate_hz: spec.sample_rate_hz,
        visual_latency_s: 0.0,
        channel_labels: (0..spec.n_channels).map(|c| format!("ch{}", c + 1)).collect(),
    };
    SsvepDataset::new(dims, meta, records.concat())
}
