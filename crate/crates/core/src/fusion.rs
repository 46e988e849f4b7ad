//! Two-stage non-linear feature fusion and final frequency decision.
//!
//! For every stimulus frequency `i` and subband `m`, the test subband is
//! correlated against both split templates. The two coefficient vectors are
//! pooled, the top `Nc` kept in descending order and collapsed with the
//! channel weights `phi_k = exp(-a1 k) + b1` into `delta_m^i`. Subbands are then
//! combined with `w_m = m^-a2 + b2` into `psi_i`, and the frequency with the
//! largest `psi_i` is chosen.

use rayon::prelude::*;

use crate::canonical::{argmax_first, sscca_correlations, DEFAULT_RIDGE, DEFAULT_TAU};
use crate::dataio::{EegEpoch, SsvepDataset};
use crate::error::{Error, Result};
use crate::filterbank::{FilterBank, SubbandSet, DEFAULT_SUBBANDS};
use crate::templates::{build_templates, loocv_folds, window_range, TemplateBank};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub sn: usize,
    pub tau: usize,
    pub ridge: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            a1: 0.6,
            b1: 0.2,
            a2: 2.0,
            b2: 0.25,
            sn: DEFAULT_SUBBANDS,
            tau: DEFAULT_TAU,
            ridge: DEFAULT_RIDGE,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if self.sn == 0 {
            return Err(Error::arg("at least one subband is required"));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::arg(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        for (name, v) in [("a1", self.a1), ("b1", self.b1), ("a2", self.a2), ("b2", self.b2)] {
            if !v.is_finite() {
                return Err(Error::arg(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// `phi_k = exp(-a1 k) + b1` for ranks `k = 1..=nc`.
    pub fn channel_weights(&self, nc: usize) -> Vec<f64> {
        (1..=nc).map(|k| (-self.a1 * k as f64).exp() + self.b1).collect()
    }

    /// `w_m = m^-a2 + b2` for subbands `m = 1..=sn`.
    pub fn band_weights(&self) -> Vec<f64> {
        (1..=self.sn)
            .map(|m| (m as f64).powf(-self.a2) + self.b2)
            .collect()
    }
}

/// Top `Nc` pooled canonical correlations of one subband, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Wraps `values`, which must be descending and lie in `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) {
            return Err(Error::invalid("feature values must lie in [0, 1]"));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("feature values must be descending"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fused score per frequency and the chosen index.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionScores {
    pub psi: Vec<f64>,
    pub chosen: usize,
}

impl DecisionScores {
    fn from_psi(psi: Vec<f64>) -> Self {
        let chosen = argmax_first(&psi);
        Self { psi, chosen }
    }
}

fn padded(correlations: &[f64], nc: usize) -> impl Iterator<Item = f64> + '_ {
    correlations
        .iter()
        .copied()
        .chain(std::iter::repeat(0.0))
        .take(nc)
}

pub fn subband_feature(
    z_m: &EegEpoch,
    y1_m: &EegEpoch,
    y2_m: &EegEpoch,
    params: &FusionParams,
) -> Result<FeatureVector> {
    if !y1_m.same_shape(y2_m) {
        return Err(Error::arg("split templates differ in shape"));
    }
    let nc = y1_m.n_channels();
    let r1 = sscca_correlations(z_m, y1_m, params.tau, params.ridge)?;
    let r2 = sscca_correlations(z_m, y2_m, params.tau, params.ridge)?;
    let mut pooled: Vec<f64> = padded(r1.correlations(), nc)
        .chain(padded(r2.correlations(), nc))
        .collect();
    pooled.sort_by(|a, b| b.total_cmp(a));
    pooled.truncate(nc);
    Ok(FeatureVector { values: pooled })
}

/// `delta = sum_k phi_k * values[k - 1]`.
pub fn channel_fuse(feature: &FeatureVector, params: &FusionParams) -> f64 {
    params
        .channel_weights(feature.len())
        .iter()
        .zip(&feature.values)
        .map(|(w, v)| w * v)
        .sum()
}

/// `psi = sum_m w_m * deltas[m - 1]`.
pub fn band_fuse(deltas: &[f64], params: &FusionParams) -> Result<f64> {
    if deltas.len() != params.sn {
        return Err(Error::arg(format!(
            "{} subband scores for {} subbands",
            deltas.len(),
            params.sn
        )));
    }
    Ok(params
        .band_weights()
        .iter()
        .zip(deltas)
        .map(|(w, d)| w * d)
        .sum())
}

/// Template bank already split into subbands.
#[derive(Debug, Clone)]
pub struct PreparedBank {
    pub y1: Vec<SubbandSet>,
    pub y2: Vec<SubbandSet>,
}

impl PreparedBank {
    pub fn new(bank: &TemplateBank, filterbank: &FilterBank) -> Result<Self> {
        if bank.y1.len() != bank.y2.len() || bank.n_freqs() != bank.y1.len() {
            return Err(Error::arg("template lists differ in length"));
        }
        let split = |v: &[EegEpoch]| v.iter().map(|e| filterbank.apply(e)).collect::<Result<Vec<_>>>();
        Ok(Self {
            y1: split(&bank.y1)?,
            y2: split(&bank.y2)?,
        })
    }

    pub fn n_freqs(&self) -> usize {
        self.y1.len()
    }
}

/// Feature vectors indexed `[frequency][subband]` for one decomposed test epoch.
pub fn feature_table(
    z_bands: &SubbandSet,
    bank: &PreparedBank,
    params: &FusionParams,
) -> Result<Vec<Vec<FeatureVector>>> {
    if bank.n_freqs() < 2 {
        return Err(Error::arg("need templates for at least two frequencies"));
    }
    if z_bands.len() != params.sn || bank.y1.iter().any(|s| s.len() != params.sn) {
        return Err(Error::arg("subband count disagrees with parameters"));
    }
    if !z_bands.bands[0].same_shape(&bank.y1[0].bands[0]) {
        return Err(Error::arg(format!(
            "test epoch is {:?}, templates are {:?}",
            z_bands.bands[0].data().shape(),
            bank.y1[0].bands[0].data().shape()
        )));
    }
    (0..bank.n_freqs())
        .map(|i| {
            (0..params.sn)
                .map(|m| {
                    subband_feature(
                        &z_bands.bands[m],
                        &bank.y1[i].bands[m],
                        &bank.y2[i].bands[m],
                        params,
                    )
                })
                .collect()
        })
        .collect()
}

/// Applies both fusion stages to a feature table.
pub fn score_features(table: &[Vec<FeatureVector>], params: &FusionParams) -> Result<DecisionScores> {
    let psi = table
        .iter()
        .map(|bands| {
            let deltas: Vec<f64> = bands.iter().map(|f| channel_fuse(f, params)).collect();
            band_fuse(&deltas, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecisionScores::from_psi(psi))
}

/// Classifies a test epoch against a template bank whose subbands are
/// already computed with `filterbank`.
pub fn recognize_prepared(
    z: &EegEpoch,
    bank: &PreparedBank,
    filterbank: &FilterBank,
    params: &FusionParams,
) -> Result<DecisionScores> {
    let z_bands = filterbank.apply(z)?;
    score_features(&feature_table(&z_bands, bank, params)?, params)
}

pub fn recognize(
    z: &EegEpoch,
    bank: &TemplateBank,
    f0_hz: f64,
    params: &FusionParams,
) -> Result<DecisionScores> {
    params.validate()?;
    if bank.n_freqs() < 2 {
        return Err(Error::arg("need templates for at least two frequencies"));
    }
    let filterbank = FilterBank::with_defaults(f0_hz, params.sn, z.sample_rate_hz())?;
    let prepared = PreparedBank::new(bank, &filterbank)?;
    recognize_prepared(z, &prepared, &filterbank, params)
}

/// Candidate values for each fusion weight parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// `count` values `(first + i * step) / denom`, exact where the ratio is.
fn ratios(first: u32, step: u32, count: u32, denom: f64) -> Vec<f64> {
    (0..count).map(|i| (first + i * step) as f64 / denom).collect()
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            a1: ratios(1, 1, 8, 5.0),
            b1: ratios(0, 1, 6, 10.0),
            a2: ratios(1, 1, 6, 2.0),
            b2: ratios(0, 1, 3, 4.0),
        }
    }
}

impl ParamGrid {
    pub fn singleton(p: &FusionParams) -> Self {
        Self {
            a1: vec![p.a1],
            b1: vec![p.b1],
            a2: vec![p.a2],
            b2: vec![p.b2],
        }
    }

    /// All tuples in lexicographic grid order (a1 outermost, b2 innermost),
    /// other fields taken from `base`.
    pub fn tuples(&self, base: &FusionParams) -> Vec<FusionParams> {
        let mut out = Vec::with_capacity(self.a1.len() * self.b1.len() * self.a2.len() * self.b2.len());
        for &a1 in &self.a1 {
            for &b1 in &self.b1 {
                for &a2 in &self.a2 {
                    for &b2 in &self.b2 {
                        out.push(FusionParams { a1, b1, a2, b2, ..*base });
                    }
                }
            }
        }
        out
    }
}

/// Full result of a grid search.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best: FusionParams,
    pub best_accuracy: f64,
    /// Every evaluated tuple with its leave-one-out accuracy, in grid order.
    pub table: Vec<(FusionParams, f64)>,
}

/// Feature tables of every held-out (trial, frequency) pair, with the true
/// frequency index, in fold order then frequency order.
pub(crate) fn loocv_feature_tables(
    dataset: &SsvepDataset,
    params: &FusionParams,
    window_s: f64,
    start_s: f64,
) -> Result<Vec<(usize, Vec<Vec<FeatureVector>>)>> {
    params.validate()?;
    let d = dataset.dims();
    if d.n_freqs < 2 {
        return Err(Error::arg("need at least two stimulus frequencies"));
    }
    let window = window_range(dataset, start_s, window_s)?;
    let filterbank =
        FilterBank::with_defaults(dataset.base_frequency_hz(), params.sn, dataset.sample_rate_hz())?;
    let plan = loocv_folds(d.n_trials)?;
    let per_fold = plan
        .folds
        .par_iter()
        .map(|fold| {
            let bank = build_templates(dataset, &fold.train_trials, window.clone())?;
            let prepared = PreparedBank::new(&bank, &filterbank)?;
            (0..d.n_freqs)
                .map(|f| {
                    let z = dataset.epoch(fold.test_trial, f, window.clone())?;
                    let bands = filterbank.apply(&z)?;
                    Ok((f, feature_table(&bands, &prepared, params)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_fold.into_iter().flatten().collect())
}

/// Exhaustive search over `grids` for the weight tuple with the best
/// leave-one-out accuracy. `base` supplies `sn`, `tau` and `ridge`. Ties go to
/// the first tuple in grid order.
pub fn grid_search(
    dataset: &SsvepDataset,
    grids: &ParamGrid,
    base: &FusionParams,
    window_s: f64,
    start_s: f64,
) -> Result<GridSearchOutcome> {
    for (name, g) in [("a1", &grids.a1), ("b1", &grids.b1), ("a2", &grids.a2), ("b2", &grids.b2)] {
        if g.is_empty() {
            return Err(Error::arg(format!("grid for {name} is empty")));
        }
    }
    let tuples = grids.tuples(base);
    for t in &tuples {
        t.validate()?;
    }
    // correlations do not depend on the weights, so they are computed once
    let tables = loocv_feature_tables(dataset, base, window_s, start_s)?;
    let total = tables.len() as f64;
    let table = tuples
        .par_iter()
        .map(|p| {
            let mut correct = 0usize;
            for (truth, t) in &tables {
                if score_features(t, p)?.chosen == *truth {
                    correct += 1;
                }
            }
            Ok((*p, correct as f64 / total))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, (_, acc)) in table.iter().enumerate() {
        if *acc > table[best].1 {
            best = i;
        }
    }
    Ok(GridSearchOutcome {
        best: table[best].0,
        best_accuracy: table[best].1,
        table,
    })
}
