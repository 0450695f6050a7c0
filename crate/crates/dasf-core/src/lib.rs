//! Estimation of the directional area scattering factor (DASF) from canopy
//! reflectance using spectral invariants.
//!
//! DASF is the bidirectional reflectance factor a canopy would have if its
//! foliage did not absorb: a pure structure quantity, equal to
//! `rho(Omega) * i0 / (1 - p)` in spectral-invariant terms. This crate
//! implements the full retrieval chain over a black background:
//!
//! * [`spectral`] - the fixed 1 nm wavelength grid, spectra, band windows
//!   and ordinary least-squares line fitting shared by everything else.
//! * [`leaf`] - a generalized plate model for leaf reflectance and
//!   transmittance, the fixed reference leaf albedo, and the within-leaf
//!   spectral-invariant machinery (transformed albedo, fundamental
//!   scattering term, within-leaf recollision probability).
//! * [`canopy`] - a four-stream turbid-medium canopy reflectance model and
//!   the exact spectral-invariant forward model used as an analytic oracle.
//! * [`estimators`] - the standard estimator (`sDASF = b/(1-k)` from the
//!   BRF/albedo-vs-BRF regression over 710-790 nm), the dry-matter bias
//!   factors, the exponential DC correction model driven by BRF at 710 and
//!   2260 nm, and the improved estimator (`iDASF = b/(1-k-DC)`).
//! * [`calibration`] - correlated synthetic leaf generation, training-cloud
//!   construction and the nonlinear least-squares refit of the DC model.
//! * [`validation`] - LAI/LIDF/view-angle sweeps with rRMSE reporting, the
//!   non-absorbing-canopy anchor, and ingestion of measured multi-angular
//!   spectral libraries.
//!
//! All operations are pure; loaded constants and spectra are safe to share
//! across threads. Batch evaluations parallelize with deterministic,
//! input-ordered results.

pub mod calibration;
pub mod canopy;
pub mod estimators;
pub mod leaf;
pub mod spectral;
pub mod validation;

pub use spectral::{BandWindow, LineFit, Spectrum, ViewGeometry, WavelengthGrid};
