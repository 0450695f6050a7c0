//! The experiment harness: one-axis sensitivity sweeps with rRMSE
//! reporting against the oracle scattering factor, and evaluation of
//! measured multi-angular spectral libraries.

mod measured;
mod sweep;

pub use measured::{
    ingest_measured_library, validate_measured, Direction, DirectionCell, HistogramBin,
    MeasuredCanopy, MethodErrorStats, Species, SpeciesReport,
};
pub use sweep::{
    rrmse, run_sweep, write_sweep_csv, MethodDistribution, MetricReport, SweepAxis, SweepConfig,
};

use thiserror::Error;

use crate::calibration::CalibrationError;
use crate::canopy::CanopyError;
use crate::estimators::EstimatorError;
use crate::leaf::LeafError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("series length mismatch: {est} vs {reference}")]
    LengthMismatch { est: usize, reference: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("reference series has non-positive mean {0}")]
    ZeroMeanReference(f64),
    #[error("measured library: {0}")]
    Library(String),
    #[error("canopy {0} has spectra but no leaf data")]
    MissingLeafData(String),
    #[error("negative directional scattering coefficient {dsc} for canopy {canopy}")]
    NegativeDsc { canopy: String, dsc: f64 },
    #[error("leaf reflectance+transmittance {sum} exceeds 1 for canopy {canopy}")]
    AlbedoOverUnity { canopy: String, sum: f64 },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Canopy(#[from] CanopyError),
    #[error(transparent)]
    Leaf(#[from] LeafError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
