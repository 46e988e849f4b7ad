//! Frequency recognition for short steady-state visual evoked potential
//! (SSVEP) epochs.
//!
//! The pipeline splits each epoch into harmonic subbands with a Chebyshev
//! Type I filterbank, correlates every subband against split-mean EEG
//! templates with delay-embedded canonical correlation analysis, and fuses the
//! ranked coefficients in two weighted stages before picking the stimulus
//! frequency with the largest fused score.
//!
//! ```no_run
//! use ssvep_core::{evaluate_loocv, generate_ssvep, FusionParams, Method, SynthSpec};
//!
//! let data = generate_ssvep(&SynthSpec::standard(-5.0, 42))?;
//! let report = evaluate_loocv(&data, Method::ProposedFusion, &FusionParams::default(), 1.0, 0.0)?;
//! println!("accuracy {:.3}", report.accuracy());
//! # Ok::<(), ssvep_core::Error>(())
//! ```

pub mod canonical;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod filterbank;
pub mod fusion;
pub mod synthetic;
pub mod templates;

pub use canonical::{
    canonical_correlations, embed_delay, sscca_correlations, sscca_recognize_baseline, CcaResult,
    EmbeddedEpoch,
};
pub use dataio::{
    read_dataset, write_dataset, write_results_csv, DatasetMeta, Dims, EegEpoch, EvalRow,
    SsvepDataset,
};
pub use error::{Error, Result};
pub use evaluation::{compare_methods, evaluate_loocv, itr_bits_per_min, EvalReport, Method};
pub use filterbank::{
    decompose, design_chebyshev1, filter_zero_phase, BandpassSpec, FilterBank, FilterCoefficients,
    SubbandSet,
};
pub use fusion::{
    band_fuse, channel_fuse, grid_search, recognize, subband_feature, DecisionScores,
    FeatureVector, FusionParams, GridSearchOutcome, ParamGrid,
};
pub use synthetic::{generate_ssvep, Mixing, SynthSpec};
pub use templates::{build_templates, extract_window, loocv_folds, FoldPlan, TemplateBank};
