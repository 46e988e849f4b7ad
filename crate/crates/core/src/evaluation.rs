//! Leave-one-out benchmarks, the single-band baseline, and ITR.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::canonical::sscca_recognize_baseline;
use crate::dataio::{EvalRow, SsvepDataset};
use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::fusion::{loocv_feature_tables, score_features, FusionParams};
use crate::templates::{build_templates, loocv_folds, window_range};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// One 9.25-80 Hz band, all-trial template, largest first correlation.
    BaselineSscca,
    /// Filterbank with split templates and two-stage fusion.
    ProposedFusion,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::BaselineSscca => "baseline_sscca",
            Method::ProposedFusion => "proposed_fusion",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "baseline_sscca" => Ok(Method::BaselineSscca),
            "proposed" | "proposed_fusion" => Ok(Method::ProposedFusion),
            other => Err(Error::arg(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub method: Method,
    pub params: FusionParams,
    pub window_s: f64,
    pub start_s: f64,
    /// Accuracy of each held-out trial across all frequencies, in fold order.
    pub fold_accuracies: Vec<f64>,
}

impl EvalReport {
    pub fn n_correct(&self) -> usize {
        (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn n_total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.n_correct() as f64 / self.n_total() as f64
    }

    /// Standard error of the per-fold accuracies.
    pub fn standard_error(&self) -> f64 {
        let n = self.fold_accuracies.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = self.fold_accuracies.iter().sum::<f64>() / n;
        let var = self.fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    /// Relabels every row with `subject`.
    pub fn with_subject(mut self, subject: &str) -> Self {
        for row in &mut self.rows {
            row.subject_id = subject.to_string();
        }
        self
    }
}

/// Wolpaw information transfer rate in bits per minute. Below-chance
/// accuracies give 0.
pub fn itr_bits_per_min(accuracy: f64, n_classes: usize, selection_time_s: f64) -> f64 {
    if n_classes < 2 || selection_time_s.is_nan() || selection_time_s <= 0.0 {
        return 0.0;
    }
    let n = n_classes as f64;
    let p = accuracy.clamp(0.0, 1.0);
    if p <= 1.0 / n {
        return 0.0;
    }
    let mut bits = n.log2();
    if p > 0.0 {
        bits += p * p.log2();
    }
    if p < 1.0 {
        bits += (1.0 - p) * ((1.0 - p) / (n - 1.0)).log2();
    }
    bits.max(0.0) * 60.0 / selection_time_s
}

/// `(true, predicted)` pairs per fold, fold order then frequency order.
fn baseline_predictions(
    dataset: &SsvepDataset,
    params: &FusionParams,
    window_s: f64,
    start_s: f64,
) -> Result<Vec<Vec<(usize, usize)>>> {
    params.validate()?;
    let d = dataset.dims();
    if d.n_freqs < 2 {
        return Err(Error::arg("need at least two stimulus frequencies"));
    }
    let window = window_range(dataset, start_s, window_s)?;
    let filterbank =
        FilterBank::with_defaults(dataset.base_frequency_hz(), 1, dataset.sample_rate_hz())?;
    loocv_folds(d.n_trials)?
        .folds
        .par_iter()
        .map(|fold| {
            let bank = build_templates(dataset, &fold.train_trials, window.clone())?;
            let templates = bank
                .overall
                .iter()
                .map(|t| filterbank.apply(t).map(|s| s.bands.into_iter().next().expect("one band")))
                .collect::<Result<Vec<_>>>()?;
            (0..d.n_freqs)
                .map(|f| {
                    let z = dataset.epoch(fold.test_trial, f, window.clone())?;
                    let z = filterbank.apply(&z)?.bands.remove(0);
                    let (pred, _) = sscca_recognize_baseline(&z, &templates, params.tau, params.ridge)?;
                    Ok((f, pred))
                })
                .collect()
        })
        .collect()
}

fn proposed_predictions(
    dataset: &SsvepDataset,
    params: &FusionParams,
    window_s: f64,
    start_s: f64,
) -> Result<Vec<Vec<(usize, usize)>>> {
    let tables = loocv_feature_tables(dataset, params, window_s, start_s)?;
    let nf = dataset.dims().n_freqs;
    let flat = tables
        .par_iter()
        .map(|(truth, t)| Ok((*truth, score_features(t, params)?.chosen)))
        .collect::<Result<Vec<_>>>()?;
    Ok(flat.chunks(nf).map(<[_]>::to_vec).collect())
}

/// Leave-one-out accuracy of `method` on `dataset` using windows of
/// `window_s` seconds starting `start_s` seconds into each record.
pub fn evaluate_loocv(
    dataset: &SsvepDataset,
    method: Method,
    params: &FusionParams,
    window_s: f64,
    start_s: f64,
) -> Result<EvalReport> {
    let per_fold = match method {
        Method::BaselineSscca => baseline_predictions(dataset, params, window_s, start_s)?,
        Method::ProposedFusion => proposed_predictions(dataset, params, window_s, start_s)?,
    };
    let nf = dataset.dims().n_freqs;
    let mut confusion = vec![vec![0usize; nf]; nf];
    let mut fold_accuracies = Vec::with_capacity(per_fold.len());
    for fold in &per_fold {
        let mut hits = 0;
        for &(truth, pred) in fold {
            confusion[truth][pred] += 1;
            hits += usize::from(truth == pred);
        }
        fold_accuracies.push(hits as f64 / fold.len() as f64);
    }
    let n_total: usize = confusion.iter().flatten().sum();
    let n_correct: usize = (0..nf).map(|i| confusion[i][i]).sum();
    let accuracy = n_correct as f64 / n_total as f64;
    let row = EvalRow::new(
        "all",
        window_s,
        itr_bits_per_min(accuracy, nf, window_s),
        n_correct,
        n_total,
    )?;
    Ok(EvalReport {
        rows: vec![row],
        confusion,
        method,
        params: *params,
        window_s,
        start_s,
        fold_accuracies,
    })
}

/// Baseline and proposed reports for every window, ordered by window then
/// method.
pub fn compare_methods(
    dataset: &SsvepDataset,
    params: &FusionParams,
    windows_s: &[f64],
    start_s: f64,
) -> Result<Vec<EvalReport>> {
    if windows_s.is_empty() {
        return Err(Error::arg("no windows given"));
    }
    let mut out = Vec::with_capacity(2 * windows_s.len());
    for &w in windows_s {
        for method in [Method::BaselineSscca, Method::ProposedFusion] {
            out.push(evaluate_loocv(dataset, method, params, w, start_s)?);
        }
    }
    Ok(out)
}
