//! One-axis sensitivity sweeps: LAI, inclination kind and view zenith,
//! each against the Table-2 style defaults, with per-configuration rRMSE
//! of both estimators against the oracle scattering factor.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::SyntheticLeafSet;
use crate::canopy::{
    canopy_brf, non_absorbing_brf, CanopyStructure, LidfKind,
};
use crate::estimators::{
    dasf0_from_true_albedo, idasf, sdasf, DcModelCoefficients,
};
use crate::leaf::{prospect, reference_albedo, LeafOptics, OpticalConstants};
use crate::spectral::{BandWindow, Spectrum, ViewGeometry};

use super::ValidationError;

/// Relative root mean square error in percent of the reference mean.
pub fn rrmse(est: &[f64], reference: &[f64]) -> Result<f64, ValidationError> {
    if est.len() != reference.len() {
        return Err(ValidationError::LengthMismatch { est: est.len(), reference: reference.len() });
    }
    if est.is_empty() {
        return Err(ValidationError::EmptySeries);
    }
    let n = est.len() as f64;
    let mean_ref = reference.iter().sum::<f64>() / n;
    if mean_ref <= 0.0 {
        return Err(ValidationError::ZeroMeanReference(mean_ref));
    }
    let mse = est
        .iter()
        .zip(reference)
        .map(|(&e, &r)| (e - r) * (e - r))
        .sum::<f64>()
        / n;
    Ok(100.0 * mse.sqrt() / mean_ref)
}

/// Base configuration held fixed on the axes that do not vary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepBase {
    pub lai: f64,
    pub lidf: LidfKind,
    pub hotspot: f64,
    pub sza_deg: f64,
    pub vza_deg: f64,
    pub raa_deg: f64,
    /// relative azimuth used on the view-zenith axis (principal plane)
    pub vza_axis_raa_deg: f64,
}

impl Default for SweepBase {
    fn default() -> Self {
        Self {
            lai: 5.0,
            lidf: LidfKind::Uniform,
            hotspot: 0.01,
            sza_deg: 30.0,
            vza_deg: 0.0,
            raa_deg: 0.0,
            vza_axis_raa_deg: 180.0,
        }
    }
}

/// Sweep axes and their values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lai_values: Vec<f64>,
    pub lidf_kinds: Vec<LidfKind>,
    pub vza_values: Vec<f64>,
    pub base: SweepBase,
    pub window: BandWindow,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lai_values: (1..=7).map(f64::from).collect(),
            lidf_kinds: LidfKind::ALL.to_vec(),
            vza_values: (0..=6).map(|i| 10.0 * i as f64).collect(),
            base: SweepBase::default(),
            window: BandWindow::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Lai,
    Lidf,
    Vza,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lai => "lai",
            SweepAxis::Lidf => "lidf",
            SweepAxis::Vza => "vza",
        }
    }
}

/// Mean and 5/25/50/75/95 percent quantiles of one method's estimates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MethodDistribution {
    pub mean: f64,
    pub quantiles: [f64; 5],
}

fn distribution(values: &[f64]) -> MethodDistribution {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        if sorted.len() == 1 {
            return sorted[0];
        }
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
    };
    MethodDistribution {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        quantiles: [q(0.05), q(0.25), q(0.50), q(0.75), q(0.95)],
    }
}

/// One sweep configuration's outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub axis: SweepAxis,
    pub value: String,
    pub dasf0: MethodDistribution,
    pub sdasf: MethodDistribution,
    pub idasf: MethodDistribution,
    pub rrmse_sdasf_pct: f64,
    pub rrmse_idasf_pct: f64,
    pub non_absorbing_brf: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

struct Configuration {
    axis: SweepAxis,
    value: String,
    structure: CanopyStructure,
    geometry: ViewGeometry,
}

fn configurations(cfg: &SweepConfig) -> Result<Vec<Configuration>, ValidationError> {
    let base = &cfg.base;
    let (ba, bb) = base.lidf.ab();
    let mut out = Vec::new();
    for &lai in &cfg.lai_values {
        out.push(Configuration {
            axis: SweepAxis::Lai,
            value: format!("{lai}"),
            structure: CanopyStructure::new(lai, ba, bb, base.hotspot)?,
            geometry: ViewGeometry::new(base.sza_deg, base.vza_deg, base.raa_deg)?,
        });
    }
    for &kind in &cfg.lidf_kinds {
        let (a, b) = kind.ab();
        out.push(Configuration {
            axis: SweepAxis::Lidf,
            value: kind.name().to_string(),
            structure: CanopyStructure::new(base.lai, a, b, base.hotspot)?,
            geometry: ViewGeometry::new(base.sza_deg, base.vza_deg, base.raa_deg)?,
        });
    }
    for &vza in &cfg.vza_values {
        out.push(Configuration {
            axis: SweepAxis::Vza,
            value: format!("{vza}"),
            structure: CanopyStructure::new(base.lai, ba, bb, base.hotspot)?,
            geometry: ViewGeometry::new(base.sza_deg, vza, base.vza_axis_raa_deg)?,
        });
    }
    Ok(out)
}

/// Runs every (leaf, configuration) pair: forward reflectance, the three
/// estimates, pooled rRMSE per configuration per method, and the
/// non-absorbing anchor. Estimator failures are excluded and counted.
pub fn run_sweep(
    cfg: &SweepConfig,
    leaves: &SyntheticLeafSet,
    coeffs: &DcModelCoefficients,
    oc: &OpticalConstants,
) -> Result<Vec<MetricReport>, ValidationError> {
    let omega_r = reference_albedo(oc)?;
    let soil = Spectrum::constant(oc.grid(), 0.0);
    let optics: Vec<LeafOptics> = leaves
        .leaves
        .par_iter()
        .map(|leaf| prospect(leaf, oc))
        .collect::<Result<_, _>>()?;

    let configs = configurations(cfg)?;
    configs
        .par_iter()
        .map(|conf| -> Result<MetricReport, ValidationError> {
            let mut d0 = Vec::with_capacity(optics.len());
            let mut sd = Vec::with_capacity(optics.len());
            let mut id = Vec::with_capacity(optics.len());
            let mut n_failed = 0usize;
            for leaf in &optics {
                let brf = canopy_brf(leaf, &conf.structure, &conf.geometry, &soil)?;
                let oracle = dasf0_from_true_albedo(&brf, &leaf.albedo, cfg.window);
                let standard = sdasf(&brf, &omega_r, cfg.window);
                let improved = idasf(&brf, &omega_r, coeffs, cfg.window);
                match (oracle, standard, improved) {
                    (Ok(o), Ok(s), Ok(i)) => {
                        d0.push(o.value);
                        sd.push(s.value);
                        id.push(i.value);
                    }
                    _ => n_failed += 1,
                }
            }
            if d0.is_empty() {
                return Err(ValidationError::EmptySeries);
            }
            Ok(MetricReport {
                axis: conf.axis,
                value: conf.value.clone(),
                dasf0: distribution(&d0),
                sdasf: distribution(&sd),
                idasf: distribution(&id),
                rrmse_sdasf_pct: rrmse(&sd, &d0)?,
                rrmse_idasf_pct: rrmse(&id, &d0)?,
                non_absorbing_brf: non_absorbing_brf(&conf.structure, &conf.geometry)?,
                n_ok: d0.len(),
                n_failed,
            })
        })
        .collect()
}

/// Writes the sweep report CSV
/// (`axis,value,method,rrmse_pct,mean_dasf,mean_dasf0,non_absorbing_brf,n_ok,n_failed`).
pub fn write_sweep_csv(reports: &[MetricReport], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "axis,value,method,rrmse_pct,mean_dasf,mean_dasf0,non_absorbing_brf,n_ok,n_failed")?;
    for r in reports {
        for (method, rrmse_pct, mean) in [
            ("sdasf", r.rrmse_sdasf_pct, r.sdasf.mean),
            ("idasf", r.rrmse_idasf_pct, r.idasf.mean),
        ] {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.axis.name(),
                r.value,
                method,
                rrmse_pct,
                mean,
                r.dasf0.mean,
                r.non_absorbing_brf,
                r.n_ok,
                r.n_failed
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rrmse_basics() {
        let r = vec![1.0, 1.0];
        assert_abs_diff_eq!(rrmse(&r, &r).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rrmse(&[0.9, 1.1], &r).unwrap(), 10.0, epsilon = 1e-9);
        let c = vec![0.5; 8];
        let est: Vec<f64> = c.iter().map(|v| 1.1 * v).collect();
        assert_abs_diff_eq!(rrmse(&est, &c).unwrap(), 10.0, epsilon = 1e-9);
        assert!(rrmse(&[1.0], &[0.0]).is_err());
        assert!(rrmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rrmse(&[], &[]).is_err());
    }

    #[test]
    fn rrmse_scale_invariance() {
        let est = [0.4, 0.55, 0.62];
        let rf = [0.5, 0.5, 0.6];
        let base = rrmse(&est, &rf).unwrap();
        for c in [0.1, 3.0, 17.5] {
            let se: Vec<f64> = est.iter().map(|v| c * v).collect();
            let sr: Vec<f64> = rf.iter().map(|v| c * v).collect();
            assert_abs_diff_eq!(rrmse(&se, &sr).unwrap(), base, epsilon = 1e-9);
        }
    }

    #[test]
    fn default_config_has_20_configurations() {
        let cfg = SweepConfig::default();
        let confs = configurations(&cfg).unwrap();
        assert_eq!(confs.len(), 20);
        assert_eq!(confs.iter().filter(|c| c.axis == SweepAxis::Lai).count(), 7);
        assert_eq!(confs.iter().filter(|c| c.axis == SweepAxis::Lidf).count(), 6);
        assert_eq!(confs.iter().filter(|c| c.axis == SweepAxis::Vza).count(), 7);
        // view-zenith axis runs in the principal plane
        assert!(confs
            .iter()
            .filter(|c| c.axis == SweepAxis::Vza)
            .all(|c| c.geometry.raa_deg == 180.0));
    }

    #[test]
    fn quantiles_are_ordered() {
        let d = distribution(&[0.3, 0.1, 0.5, 0.2, 0.4, 0.6, 0.15]);
        for w in d.quantiles.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(d.quantiles[0] >= 0.1 && d.quantiles[4] <= 0.6);
    }
}
