//! Fixtures shared by the criterion benchmarks.

use ssvep_core::{generate_ssvep, EegEpoch, SsvepDataset, SynthSpec};

/// Twelve-class, 8-channel synthetic dataset at the given SNR.
pub fn dataset(snr_db: f64) -> SsvepDataset {
    generate_ssvep(&SynthSpec::standard(snr_db, 42)).expect("valid spec")
}

/// One-second window of record `(trial, freq)` starting at sample 0.
pub fn epoch(data: &SsvepDataset, trial: usize, freq: usize) -> EegEpoch {
    let n = data.sample_rate_hz().round() as usize;
    data.epoch(trial, freq, 0..n).expect("window fits")
}
