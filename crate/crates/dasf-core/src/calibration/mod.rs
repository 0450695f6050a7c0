//! Calibration of the DC correction model: correlated synthetic leaf
//! generation, construction of the (DC0, BRF710, BRF2260) training cloud
//! against the forward models, nonlinear least-squares refit of the
//! exponential DC model, and the within-leaf relation fits.

mod fit;
mod sampler;
mod training;

pub use fit::{fit_dc_model, fit_dc_model_two_stage, FitReport};
pub use sampler::{sample_leaves, ConstituentStats, CorrelationMatrix, StatRange};
pub use training::{build_training_set, fit_within_leaf_relations, WithinLeafRelations};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canopy::CanopyError;
use crate::estimators::EstimatorError;
use crate::leaf::{LeafBiochem, LeafError};
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("correlation matrix invalid: {0}")]
    BadCorrelation(String),
    #[error("constituent statistics invalid: {0}")]
    BadStats(String),
    #[error("rejection sampling exhausted {0} redraws for one sample (infeasible bounds)")]
    RejectionCap(usize),
    #[error("need at least {need} records with spread in both BRFs, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("training records have degenerate spread in {0}")]
    DegenerateSpread(&'static str),
    #[error("nonlinear fit did not converge after {iterations} iterations (best RMSE {rmse:.3e})")]
    NonConvergence { iterations: usize, rmse: f64 },
    #[error("dry-matter bin with only {got} leaves (need >= {need})")]
    InsufficientBin { got: usize, need: usize },
    #[error(transparent)]
    Leaf(#[from] LeafError),
    #[error(transparent)]
    Canopy(#[from] CanopyError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Synthetic leaf set drawn from the truncated correlated normal model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticLeafSet {
    pub leaves: Vec<LeafBiochem>,
    pub seed: u64,
    pub n_requested: usize,
    pub n_retained: usize,
}

/// One leaf of the training cloud with its forward-model observables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub leaf: LeafBiochem,
    pub brf710: f64,
    pub brf2260: f64,
    pub dc0: f64,
    pub dasf0: f64,
    pub k: f64,
    pub b: f64,
}
