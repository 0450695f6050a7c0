//! Training-cloud construction and the within-leaf relation fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canopy::{canopy_brf, CanopyStructure};
use crate::estimators::{dasf0_from_true_albedo, dc0, regress_brf, AlbedoReference};
use crate::leaf::{leaf_invariant_fit, prospect, reference_albedo, LeafBiochem, OpticalConstants};
use crate::spectral::{linear_fit, BandWindow, Spectrum, ViewGeometry};

use super::{CalibrationError, SyntheticLeafSet, TrainingRecord};

/// Per-leaf observables against the Table-2 style canopy: oracle scattering
/// factor and correction, reference-albedo regression, and the two DC-model
/// predictor bands. Black background throughout.
pub fn build_training_set(
    leaves: &SyntheticLeafSet,
    canopy: &CanopyStructure,
    geometry: &ViewGeometry,
    oc: &OpticalConstants,
) -> Result<Vec<TrainingRecord>, CalibrationError> {
    let window = BandWindow::default();
    let omega_r = reference_albedo(oc)?;
    let soil = Spectrum::constant(oc.grid(), 0.0);
    leaves
        .leaves
        .par_iter()
        .map(|leaf| -> Result<TrainingRecord, CalibrationError> {
            let optics = prospect(leaf, oc)?;
            let brf = canopy_brf(&optics, canopy, geometry, &soil)?;
            let oracle = dasf0_from_true_albedo(&brf, &optics.albedo, window)?;
            let reg = regress_brf(&brf, &omega_r, window, AlbedoReference::ReferenceAlbedo)?;
            Ok(TrainingRecord {
                leaf: *leaf,
                brf710: brf.at(710)?,
                brf2260: brf.at(2260)?,
                dc0: dc0(&reg, oracle.value)?,
                dasf0: oracle.value,
                k: reg.k,
                b: reg.b,
            })
        })
        .collect()
}

/// A fitted line with the published coefficients it is compared against.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LineWithReference {
    pub slope: f64,
    pub intercept: f64,
    pub reference_slope: f64,
    pub reference_intercept: f64,
}

/// Report of the within-leaf spectral-invariant relation fits over a
/// synthetic leaf set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WithinLeafRelations {
    /// slope/intercept of the p-vs-p0 line slope as a function of dry matter
    pub k_of_lma: LineWithReference,
    /// slope/intercept of the p-vs-p0 line intercept as a function of dry matter
    pub b_of_lma: LineWithReference,
    /// recollision probability at reference dry matter vs 1/cab
    pub p0_of_inv_cab: LineWithReference,
    /// leaf recollision probability vs 1/cab
    pub p_of_inv_cab: LineWithReference,
    /// scattering intercept vs 1/cab
    pub r_of_inv_cab: LineWithReference,
    pub epsilon_min: f64,
    pub epsilon_max: f64,
    pub n_leaves: usize,
    pub n_bins: usize,
}

const MIN_LEAVES_PER_BIN: usize = 10;

/// Reproduces the within-leaf relation fits: per-leaf (r, p) against the
/// reference albedo, p-vs-p0 lines in dry-matter bins, and the 1/cab laws.
pub fn fit_within_leaf_relations(
    leaves: &SyntheticLeafSet,
    oc: &OpticalConstants,
) -> Result<WithinLeafRelations, CalibrationError> {
    let window = BandWindow::default();
    let omega_r = reference_albedo(oc)?;

    struct PerLeaf {
        lma: f64,
        inv_cab: f64,
        p: f64,
        r: f64,
        p0: f64,
        epsilon: f64,
    }

    let per_leaf: Vec<PerLeaf> = leaves
        .leaves
        .par_iter()
        .map(|leaf| -> Result<PerLeaf, CalibrationError> {
            let optics = prospect(leaf, oc)?;
            let fit = leaf_invariant_fit(&optics.albedo, &omega_r, window)?;
            // same chlorophyll at the reference dry-matter and water contents
            let base = LeafBiochem { lma: 0.002, ewt: 0.005, car: 0.0, ..*leaf };
            let optics0 = prospect(&base, oc)?;
            let fit0 = leaf_invariant_fit(&optics0.albedo, &omega_r, window)?;
            Ok(PerLeaf {
                lma: leaf.lma,
                inv_cab: 1.0 / leaf.cab,
                p: fit.p,
                r: fit.r,
                p0: fit0.p,
                epsilon: fit.epsilon,
            })
        })
        .collect::<Result<_, _>>()?;

    // quantile bins over dry matter
    let mut order: Vec<usize> = (0..per_leaf.len()).collect();
    order.sort_by(|&a, &b| per_leaf[a].lma.total_cmp(&per_leaf[b].lma));
    let n_bins = (per_leaf.len() / 40).clamp(4, 8);
    let mut centers = Vec::new();
    let mut k_bins = Vec::new();
    let mut b_bins = Vec::new();
    for chunk in order.chunks(order.len().div_ceil(n_bins)) {
        if chunk.len() < MIN_LEAVES_PER_BIN {
            return Err(CalibrationError::InsufficientBin {
                got: chunk.len(),
                need: MIN_LEAVES_PER_BIN,
            });
        }
        let xs: Vec<f64> = chunk.iter().map(|&i| per_leaf[i].p0).collect();
        let ys: Vec<f64> = chunk.iter().map(|&i| per_leaf[i].p).collect();
        let fit = linear_fit(&xs, &ys)?;
        centers.push(chunk.iter().map(|&i| per_leaf[i].lma).sum::<f64>() / chunk.len() as f64);
        k_bins.push(fit.slope);
        b_bins.push(fit.intercept);
    }

    let k_line = linear_fit(&centers, &k_bins)?;
    let b_line = linear_fit(&centers, &b_bins)?;
    let inv_cab: Vec<f64> = per_leaf.iter().map(|l| l.inv_cab).collect();
    let p0_line = linear_fit(&inv_cab, &per_leaf.iter().map(|l| l.p0).collect::<Vec<_>>())?;
    let p_line = linear_fit(&inv_cab, &per_leaf.iter().map(|l| l.p).collect::<Vec<_>>())?;
    let r_line = linear_fit(&inv_cab, &per_leaf.iter().map(|l| l.r).collect::<Vec<_>>())?;

    Ok(WithinLeafRelations {
        k_of_lma: LineWithReference {
            slope: k_line.slope,
            intercept: k_line.intercept,
            reference_slope: 9.18,
            reference_intercept: 0.98,
        },
        b_of_lma: LineWithReference {
            slope: b_line.slope,
            intercept: b_line.intercept,
            reference_slope: -9.16,
            reference_intercept: 0.02,
        },
        p0_of_inv_cab: LineWithReference {
            slope: p0_line.slope,
            intercept: p0_line.intercept,
            reference_slope: -15.54,
            reference_intercept: 1.04,
        },
        p_of_inv_cab: LineWithReference {
            slope: p_line.slope,
            intercept: p_line.intercept,
            reference_slope: -16.63,
            reference_intercept: 1.04,
        },
        r_of_inv_cab: LineWithReference {
            slope: r_line.slope,
            intercept: r_line.intercept,
            reference_slope: 15.07,
            reference_intercept: -0.02,
        },
        epsilon_min: per_leaf.iter().map(|l| l.epsilon).fold(f64::MAX, f64::min),
        epsilon_max: per_leaf.iter().map(|l| l.epsilon).fold(f64::MIN, f64::max),
        n_leaves: per_leaf.len(),
        n_bins,
    })
}
