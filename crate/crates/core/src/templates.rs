//! Leave-one-out folds, window extraction and split-mean templates.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::dataio::{EegEpoch, SsvepDataset};
use crate::error::{Error, Result};

/// Per-frequency templates built from one set of training trials.
///
/// `y1` averages the first `ceil(T/2)` training trials, `y2` the remaining
/// `floor(T/2)` and `overall` all `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateBank {
    pub y1: Vec<EegEpoch>,
    pub y2: Vec<EegEpoch>,
    pub overall: Vec<EegEpoch>,
}

impl TemplateBank {
    pub fn n_freqs(&self) -> usize {
        self.overall.len()
    }

    /// Reorders the frequency axis: slot `i` of the result is slot `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let pick = |v: &[EegEpoch]| perm.iter().map(|&i| v[i].clone()).collect();
        Self {
            y1: pick(&self.y1),
            y2: pick(&self.y2),
            overall: pick(&self.overall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test_trial: usize,
    pub train_trials: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

pub fn loocv_folds(n_trials: usize) -> Result<FoldPlan> {
    if n_trials < 2 {
        return Err(Error::arg(format!(
            "leave-one-out needs at least 2 trials, got {n_trials}"
        )));
    }
    let folds = (0..n_trials)
        .map(|test_trial| Fold {
            test_trial,
            train_trials: (0..n_trials).filter(|t| *t != test_trial).collect(),
        })
        .collect();
    Ok(FoldPlan { folds })
}

/// Sample range `[round(start_s * fs), round(start_s * fs) + round(duration_s * fs))`.
pub fn window_range(dataset: &SsvepDataset, start_s: f64, duration_s: f64) -> Result<Range<usize>> {
    let fs = dataset.sample_rate_hz();
    if !(start_s.is_finite() && start_s >= 0.0 && duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::arg(format!(
            "window start {start_s} s / duration {duration_s} s must be non-negative / positive"
        )));
    }
    let start = (start_s * fs).round() as usize;
    let len = (duration_s * fs).round() as usize;
    let ns = dataset.dims().n_samples;
    if len == 0 || start + len > ns {
        return Err(Error::arg(format!(
            "window [{start}, {}) does not fit a record of {ns} samples",
            start + len
        )));
    }
    Ok(start..start + len)
}

/// Window of record (`trial`, `freq_index`) starting `start_s` seconds in.
pub fn extract_window(
    dataset: &SsvepDataset,
    trial: usize,
    freq_index: usize,
    start_s: f64,
    duration_s: f64,
) -> Result<EegEpoch> {
    let range = window_range(dataset, start_s, duration_s)?;
    dataset.epoch(trial, freq_index, range)
}

fn mean_of(dataset: &SsvepDataset, trials: &[usize], freq: usize, window: &Range<usize>) -> Result<EegEpoch> {
    let d = dataset.dims();
    let mut acc = DMatrix::zeros(d.n_channels, window.len());
    for &t in trials {
        acc += dataset.epoch(t, freq, window.clone())?.into_data();
    }
    acc /= trials.len() as f64;
    EegEpoch::new(acc, dataset.sample_rate_hz())
}

pub fn build_templates(
    dataset: &SsvepDataset,
    train_trials: &[usize],
    window: Range<usize>,
) -> Result<TemplateBank> {
    if train_trials.is_empty() {
        return Err(Error::arg("no training trials"));
    }
    let d = dataset.dims();
    if window.start >= window.end || window.end > d.n_samples {
        return Err(Error::arg(format!(
            "window {window:?} outside record of {} samples",
            d.n_samples
        )));
    }
    if let Some(t) = train_trials.iter().find(|t| **t >= d.n_trials) {
        return Err(Error::arg(format!("training trial {t} out of range")));
    }
    let split = train_trials.len().div_ceil(2);
    let (first, second) = train_trials.split_at(split);
    let second = if second.is_empty() { first } else { second };

    let mut bank = TemplateBank {
        y1: Vec::with_capacity(d.n_freqs),
        y2: Vec::with_capacity(d.n_freqs),
        overall: Vec::with_capacity(d.n_freqs),
    };
    for f in 0..d.n_freqs {
        bank.y1.push(mean_of(dataset, first, f, &window)?);
        bank.y2.push(mean_of(dataset, second, f, &window)?);
        bank.overall.push(mean_of(dataset, train_trials, f, &window)?);
    }
    Ok(bank)
}
