//! Canonical correlation analysis between multichannel epochs, time-delay
//! embedding, and the single-coefficient spatio-spectral recognizer.
//!
//! Correlations are the square roots of the eigenvalues of the whitened
//! cross-covariance product
//! `Czz^{-1/2} Czy Cyy^{-1} Cyz Czz^{-1/2}` (or its transposed twin when the
//! second block is smaller), which is symmetric and therefore handled by a
//! symmetric eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataio::EegEpoch;
use crate::error::{Error, Result};

/// Relative ridge added to each auto-covariance block by default.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Default embedding delay in samples.
pub const DEFAULT_TAU: usize = 1;

/// Eigenvalues below this fraction of the largest count as numerically zero
/// when estimating the effective rank of a covariance block.
const RANK_TOL: f64 = 1e-10;

/// Canonical correlations in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaResult {
    correlations: Vec<f64>,
}

impl CcaResult {
    pub fn correlations(&self) -> &[f64] {
        &self.correlations
    }

    pub fn rank(&self) -> usize {
        self.correlations.len()
    }

    /// Largest correlation, the classic CCA statistic.
    pub fn rho1(&self) -> f64 {
        self.correlations.first().copied().unwrap_or(0.0)
    }
}

/// Epoch stacked on top of its `tau`-shifted copy: `[Z(n); Z(n + tau)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedEpoch {
    data: DMatrix<f64>,
    tau_samples: usize,
    sample_rate_hz: f64,
}

impl EmbeddedEpoch {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn tau_samples(&self) -> usize {
        self.tau_samples
    }

    pub fn into_epoch(self) -> Result<EegEpoch> {
        EegEpoch::new(self.data, self.sample_rate_hz)
    }
}

fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    out
}

struct Whitener {
    inv_sqrt: DMatrix<f64>,
    rank: usize,
}

fn whitener(cov: &DMatrix<f64>, ridge: f64, which: &str) -> Result<Whitener> {
    let dim = cov.nrows();
    let raw = SymmetricEigen::new(cov.clone()).eigenvalues;
    let max_eig = raw.iter().copied().fold(0.0f64, f64::max);
    if max_eig.is_nan() || max_eig <= 0.0 {
        return Err(Error::Numerical(format!("{which} signal has zero variance")));
    }
    let rank = raw.iter().filter(|l| **l > RANK_TOL * max_eig).count();

    let mut reg = cov.clone();
    if ridge > 0.0 {
        let shift = ridge * cov.trace() / dim as f64;
        for i in 0..dim {
            reg[(i, i)] += shift;
        }
    }
    let eig = SymmetricEigen::new(reg);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if ridge == 0.0 && rank < dim || min_eig.is_nan() || min_eig <= 0.0 {
        return Err(Error::Numerical(format!(
            "{which} covariance is singular (effective rank {rank} of {dim}); use a ridge > 0"
        )));
    }
    let scale = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let inv_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&scale) * eig.eigenvectors.transpose();
    Ok(Whitener { inv_sqrt, rank })
}

/// Canonical correlations between the rows of `z` and the rows of `y`
/// (channels x samples). `ridge` is relative: each auto-covariance block gets
/// `ridge * trace(C) / dim` added to its diagonal.
pub fn cca_matrices(z: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> Result<CcaResult> {
    let n = z.ncols();
    if y.ncols() != n {
        return Err(Error::arg(format!(
            "sample counts differ: {} vs {}",
            n,
            y.ncols()
        )));
    }
    let (dz, dy) = (z.nrows(), y.nrows());
    if n <= dz + dy {
        return Err(Error::arg(format!(
            "{n} samples are not enough for {dz} + {dy} channels"
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::arg(format!("ridge must be non-negative, got {ridge}")));
    }

    let zc = centered(z);
    let yc = centered(y);
    let norm = 1.0 / (n - 1) as f64;
    let czz = &zc * zc.transpose() * norm;
    let cyy = &yc * yc.transpose() * norm;
    let czy = &zc * yc.transpose() * norm;

    let wz = whitener(&czz, ridge, "first")?;
    let wy = whitener(&cyy, ridge, "second")?;
    let k = &wz.inv_sqrt * czy * &wy.inv_sqrt;
    let m = if dz <= dy {
        &k * k.transpose()
    } else {
        k.transpose() * &k
    };
    let sym = (&m + m.transpose()) * 0.5;
    let mut correlations: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .map(|l| l.clamp(0.0, 1.0).sqrt())
        .collect();
    correlations.sort_by(|a, b| b.total_cmp(a));
    correlations.truncate(wz.rank.min(wy.rank));
    Ok(CcaResult { correlations })
}

/// Canonical correlations between two epochs.
pub fn canonical_correlations(z: &EegEpoch, y: &EegEpoch, ridge: f64) -> Result<CcaResult> {
    cca_matrices(z.data(), y.data(), ridge)
}

/// Stacks `z` over its copy shifted by `tau` samples, dropping the last `tau`
/// columns: row `j` is `z_j(n)` and row `Nc + j` is `z_j(n + tau)`.
pub fn embed_delay(z: &EegEpoch, tau: usize) -> Result<EmbeddedEpoch> {
    let (nc, ns) = (z.n_channels(), z.n_samples());
    if tau >= ns {
        return Err(Error::arg(format!(
            "delay {tau} must be shorter than the epoch ({ns} samples)"
        )));
    }
    let src = z.data();
    let data = DMatrix::from_fn(2 * nc, ns - tau, |r, n| {
        if r < nc {
            src[(r, n)]
        } else {
            src[(r - nc, n + tau)]
        }
    });
    Ok(EmbeddedEpoch {
        data,
        tau_samples: tau,
        sample_rate_hz: z.sample_rate_hz(),
    })
}

/// Spatio-spectral CCA: `z` is delay-embedded, `y` is trimmed to the same
/// length and left unembedded.
pub fn sscca_correlations(z: &EegEpoch, y: &EegEpoch, tau: usize, ridge: f64) -> Result<CcaResult> {
    if z.n_samples() != y.n_samples() {
        return Err(Error::arg(format!(
            "sample counts differ: {} vs {}",
            z.n_samples(),
            y.n_samples()
        )));
    }
    let embedded = embed_delay(z, tau)?;
    let keep = z.n_samples() - tau;
    let y_trimmed = y.data().columns(0, keep).into_owned();
    cca_matrices(embedded.data(), &y_trimmed, ridge)
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Classifies `z` by the largest first canonical correlation against each
/// template. Returns the chosen index and all scores.
pub fn sscca_recognize_baseline(
    z: &EegEpoch,
    templates: &[EegEpoch],
    tau: usize,
    ridge: f64,
) -> Result<(usize, Vec<f64>)> {
    if templates.len() < 2 {
        return Err(Error::arg("need at least two templates"));
    }
    if templates.iter().any(|t| !t.same_shape(&templates[0])) {
        return Err(Error::arg("templates differ in shape"));
    }
    if z.n_samples() != templates[0].n_samples() {
        return Err(Error::arg(format!(
            "test epoch has {} samples, templates {}",
            z.n_samples(),
            templates[0].n_samples()
        )));
    }
    let scores = templates
        .iter()
        .map(|t| sscca_correlations(z, t, tau, ridge).map(|r| r.rho1()))
        .collect::<Result<Vec<_>>>()?;
    Ok((argmax_first(&scores), scores))
}
