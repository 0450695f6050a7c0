//! Canopy-level forward models over a black (or user-supplied) background:
//! a four-stream turbid-medium reflectance model driven by leaf optics and
//! structure, and the exact spectral-invariant parameterization used as an
//! analytic oracle for the estimators.

mod lidf;
mod sail;

pub use lidf::{lidf_density, LIDF_CLASS_CENTERS};
pub use sail::canopy_brf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::leaf::{plate_stack, LeafError, LeafOptics};
use crate::spectral::{SpectralError, Spectrum, ViewGeometry, WavelengthGrid};

#[derive(Debug, Error)]
pub enum CanopyError {
    #[error("inadmissible inclination parameters a = {a}, b = {b} (need |a| + |b| <= 1)")]
    InadmissibleLidf { a: f64, b: f64 },
    #[error("canopy structure out of range: {0}")]
    InvalidStructure(String),
    #[error("spectral-invariant parameters out of range: {0}")]
    InvalidParams(String),
    #[error("leaf, soil and canopy spectra must share a grid")]
    GridMismatch,
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Leaf(#[from] LeafError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Turbid-medium canopy structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanopyStructure {
    pub lai: f64,
    pub lidf_a: f64,
    pub lidf_b: f64,
    pub hotspot: f64,
}

impl CanopyStructure {
    pub fn new(lai: f64, lidf_a: f64, lidf_b: f64, hotspot: f64) -> Result<Self, CanopyError> {
        if !(lai > 0.0 && lai <= 15.0) {
            return Err(CanopyError::InvalidStructure(format!("lai {lai} outside (0, 15]")));
        }
        if lidf_a.abs() + lidf_b.abs() > 1.0 + 1e-9 {
            return Err(CanopyError::InadmissibleLidf { a: lidf_a, b: lidf_b });
        }
        if !(hotspot >= 0.0 && hotspot.is_finite()) {
            return Err(CanopyError::InvalidStructure(format!("hotspot {hotspot} must be >= 0")));
        }
        Ok(Self { lai, lidf_a, lidf_b, hotspot })
    }

    /// Defaults except LAI: uniform inclinations, hotspot 0.01.
    pub fn with_lai(lai: f64) -> Result<Self, CanopyError> {
        Self::new(lai, 0.0, 0.0, 0.01)
    }
}

/// The six named leaf inclination distributions and their (a, b) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LidfKind {
    Planophile,
    Erectophile,
    Plagiophile,
    Extremophile,
    Spherical,
    Uniform,
}

impl LidfKind {
    pub const ALL: [LidfKind; 6] = [
        LidfKind::Planophile,
        LidfKind::Erectophile,
        LidfKind::Plagiophile,
        LidfKind::Extremophile,
        LidfKind::Spherical,
        LidfKind::Uniform,
    ];

    pub fn ab(self) -> (f64, f64) {
        match self {
            LidfKind::Planophile => (1.0, 0.0),
            LidfKind::Erectophile => (-1.0, 0.0),
            LidfKind::Plagiophile => (0.0, -1.0),
            LidfKind::Extremophile => (0.0, 1.0),
            LidfKind::Spherical => (-0.35, -0.15),
            LidfKind::Uniform => (0.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LidfKind::Planophile => "planophile",
            LidfKind::Erectophile => "erectophile",
            LidfKind::Plagiophile => "plagiophile",
            LidfKind::Extremophile => "extremophile",
            LidfKind::Spherical => "spherical",
            LidfKind::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for LidfKind {
    type Err = CanopyError;

    fn from_str(s: &str) -> Result<Self, CanopyError> {
        LidfKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_lowercase())
            .ok_or_else(|| CanopyError::InvalidStructure(format!("unknown lidf kind {s:?}")))
    }
}

/// The spectrally invariant pair defining a canopy in the analytic forward
/// model: the escape-weighted interceptance `rho(Omega) * i0` and the
/// recollision probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiForwardParams {
    pub rho_i0: f64,
    pub p: f64,
}

impl SiForwardParams {
    pub fn new(rho_i0: f64, p: f64) -> Result<Self, CanopyError> {
        if !(rho_i0 > 0.0 && (0.0..1.0).contains(&p)) {
            return Err(CanopyError::InvalidParams(format!("rho_i0 {rho_i0}, p {p}")));
        }
        let dasf = rho_i0 / (1.0 - p);
        if dasf > 1.5 {
            return Err(CanopyError::InvalidParams(format!(
                "implied scattering factor {dasf:.3} exceeds the physical bound 1.5"
            )));
        }
        Ok(Self { rho_i0, p })
    }

    pub fn dasf(&self) -> f64 {
        self.rho_i0 / (1.0 - self.p)
    }
}

/// Exact spectral-invariant forward model:
/// `BRF = rho_i0 * albedo / (1 - p * albedo)`.
pub fn si_forward_brf(
    params: &SiForwardParams,
    albedo: &Spectrum,
) -> Result<Spectrum, CanopyError> {
    for (nm, &w) in albedo.grid().wavelengths().zip(albedo.values()) {
        if 1.0 - params.p * w <= 0.0 {
            return Err(CanopyError::Numeric(format!(
                "denominator 1 - p*albedo <= 0 at {nm} nm"
            )));
        }
    }
    Ok(albedo.map(|w| params.rho_i0 * w / (1.0 - params.p * w)))
}

/// Canopy reflectance of a structurally identical canopy whose leaves do
/// not absorb (plate model with zero absorbers and the leaf-surface
/// refractive index fixed at 1.5), over a black background. The result is
/// wavelength-flat; the flat value is returned.
pub fn non_absorbing_brf(cs: &CanopyStructure, g: &ViewGeometry) -> Result<f64, CanopyError> {
    let (r, t) = plate_stack(1.5, 0.0, 1.5)
        .map_err(|msg| CanopyError::Numeric(format!("non-absorbing leaf: {msg}")))?;
    let grid = WavelengthGrid::default();
    let leaf = LeafOptics::new(
        Spectrum::constant(grid, r),
        Spectrum::constant(grid, t),
        0.0,
    )?;
    let brf = canopy_brf(&leaf, cs, g, &Spectrum::constant(grid, 0.0))?;
    Ok(brf.values()[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaf::tests::constants;
    use crate::leaf::{prospect, reference_albedo, LeafBiochem};
    use crate::spectral::BandWindow;
    use approx::assert_abs_diff_eq;

    fn black() -> Spectrum {
        Spectrum::constant(WavelengthGrid::default(), 0.0)
    }

    fn table_defaults() -> (CanopyStructure, ViewGeometry) {
        (CanopyStructure::with_lai(5.0).unwrap(), ViewGeometry::new(30.0, 0.0, 0.0).unwrap())
    }

    #[test]
    fn dark_leaf_gives_zero_brf() {
        let grid = WavelengthGrid::default();
        let leaf = LeafOptics::new(
            Spectrum::constant(grid, 0.0),
            Spectrum::constant(grid, 0.0),
            0.0,
        )
        .unwrap();
        let (cs, g) = table_defaults();
        let brf = canopy_brf(&leaf, &cs, &g, &black()).unwrap();
        assert!(brf.values().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn sparse_canopy_brf_vanishes() {
        let oc = constants();
        let leaf = prospect(&LeafBiochem::reference(), &oc).unwrap();
        let (_, g) = table_defaults();
        let cs = CanopyStructure::with_lai(1e-4).unwrap();
        let brf = canopy_brf(&leaf, &cs, &g, &black()).unwrap();
        assert!(brf.at(800).unwrap() < 1e-3);
    }

    #[test]
    fn brf_rises_with_lai_at_800nm() {
        let oc = constants();
        let leaf = prospect(&LeafBiochem::reference(), &oc).unwrap();
        let (_, g) = table_defaults();
        let mut prev = 0.0;
        for lai in 1..=7 {
            let cs = CanopyStructure::with_lai(lai as f64).unwrap();
            let v = canopy_brf(&leaf, &cs, &g, &black()).unwrap().at(800).unwrap();
            assert!(v > prev, "BRF(800) should rise with LAI: {v} after {prev}");
            prev = v;
        }
    }

    #[test]
    fn matches_reference_pipeline_default_config() {
        // anchors frozen from the independent NumPy implementation
        let oc = constants();
        let leaf = prospect(&LeafBiochem::reference(), &oc).unwrap();
        let (cs, g) = table_defaults();
        let brf = canopy_brf(&leaf, &cs, &g, &black()).unwrap();
        assert_abs_diff_eq!(brf.at(710).unwrap(), 0.1779692280, epsilon = 1e-6);
        assert_abs_diff_eq!(brf.at(750).unwrap(), 0.4129553412, epsilon = 1e-6);
        assert_abs_diff_eq!(brf.at(790).unwrap(), 0.5297125908, epsilon = 1e-6);
        assert_abs_diff_eq!(brf.at(2260).unwrap(), 0.1337320164, epsilon = 1e-6);
    }

    #[test]
    fn matches_reference_pipeline_oblique_configs() {
        let oc = constants();
        let leaf = prospect(&LeafBiochem::reference(), &oc).unwrap();
        let cases = [
            // (lai, a, b, vza, raa, brf750, brf2260)
            (5.0, 0.0, 0.0, 30.0, 180.0, 0.399169386695, 0.126034542609),
            (5.0, -0.35, -0.15, 20.0, 90.0, 0.361338384096, 0.111930008169),
            (3.0, 1.0, 0.0, 45.0, 0.0, 0.451013860783, 0.168009082495),
            (1.0, -1.0, 0.0, 60.0, 180.0, 0.161504274291, 0.081838109875),
        ];
        for (lai, a, b, vza, raa, brf750, brf2260) in cases {
            let cs = CanopyStructure::new(lai, a, b, 0.01).unwrap();
            let g = ViewGeometry::new(30.0, vza, raa).unwrap();
            let brf = canopy_brf(&leaf, &cs, &g, &black()).unwrap();
            assert_abs_diff_eq!(brf.at(750).unwrap(), brf750, epsilon = 1e-6);
            assert_abs_diff_eq!(brf.at(2260).unwrap(), brf2260, epsilon = 1e-6);
        }
    }

    #[test]
    fn brf_monotone_under_albedo_scaling() {
        let oc = constants();
        let leaf = prospect(&LeafBiochem::reference(), &oc).unwrap();
        let (cs, g) = table_defaults();
        let brf1 = canopy_brf(&leaf, &cs, &g, &black()).unwrap();
        let scaled = LeafOptics::new(
            leaf.reflectance.map(|v| v * 0.9),
            leaf.transmittance.map(|v| v * 0.9),
            0.0,
        )
        .unwrap();
        let brf2 = canopy_brf(&scaled, &cs, &g, &black()).unwrap();
        for (&hi, &lo) in brf1.values().iter().zip(brf2.values()) {
            assert!(hi >= lo - 1e-12);
        }
    }

    #[test]
    fn nadir_view_invariant_to_azimuth() {
        let oc = constants();
        let leaf = prospect(&LeafBiochem::reference(), &oc).unwrap();
        let cs = CanopyStructure::with_lai(5.0).unwrap();
        let base = canopy_brf(&leaf, &cs, &ViewGeometry::new(30.0, 0.0, 0.0).unwrap(), &black())
            .unwrap();
        for raa in [45.0, 90.0, 180.0, 270.0] {
            let other =
                canopy_brf(&leaf, &cs, &ViewGeometry::new(30.0, 0.0, raa).unwrap(), &black())
                    .unwrap();
            for (&a, &b) in base.values().iter().zip(other.values()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn si_forward_special_cases() {
        let grid = WavelengthGrid::default();
        let one = Spectrum::constant(grid, 1.0);
        let params = SiForwardParams::new(0.4, 0.6).unwrap();
        let brf = si_forward_brf(&params, &one).unwrap();
        assert_abs_diff_eq!(brf.values()[0], 1.0, epsilon = 1e-12);

        let zero = Spectrum::constant(grid, 0.0);
        assert!(si_forward_brf(&params, &zero).unwrap().values().iter().all(|&v| v == 0.0));

        let ramp = Spectrum::from_fn(grid, |nm| 0.3 + 0.5 * (nm as f64 - 400.0) / 2100.0);
        let p0 = SiForwardParams::new(0.4, 0.0).unwrap();
        let lin = si_forward_brf(&p0, &ramp).unwrap();
        for (&b, &w) in lin.values().iter().zip(ramp.values()) {
            assert_abs_diff_eq!(b, 0.4 * w, epsilon = 1e-12);
        }
    }

    #[test]
    fn si_params_reject_nonphysical() {
        assert!(SiForwardParams::new(0.6, 0.9).is_err()); // implied DASF 6.0
        assert!(SiForwardParams::new(0.0, 0.5).is_err());
        assert!(SiForwardParams::new(0.4, 1.0).is_err());
    }

    #[test]
    fn non_absorbing_is_flat_and_bounded() {
        let (cs, g) = table_defaults();
        // flatness of the underlying spectrum
        let (r, t) = plate_stack(1.5, 0.0, 1.5).unwrap();
        let grid = WavelengthGrid::default();
        let leaf = LeafOptics::new(
            Spectrum::constant(grid, r),
            Spectrum::constant(grid, t),
            0.0,
        )
        .unwrap();
        let brf = canopy_brf(&leaf, &cs, &g, &black()).unwrap();
        let max = brf.values().iter().cloned().fold(f64::MIN, f64::max);
        let min = brf.values().iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min < 1e-6, "non-absorbing BRF must be flat");

        let v = non_absorbing_brf(&cs, &g).unwrap();
        assert!(v > 0.0 && v < 1.2, "{v}");
        assert_abs_diff_eq!(v, max, epsilon = 1e-12);
        // oracle anchor
        assert_abs_diff_eq!(v, 0.6340368949, epsilon = 1e-6);
    }

    #[test]
    fn non_absorbing_rises_with_lai() {
        let g = ViewGeometry::new(30.0, 0.0, 0.0).unwrap();
        let mut prev = 0.0;
        for lai in 1..=7 {
            let cs = CanopyStructure::with_lai(lai as f64).unwrap();
            let v = non_absorbing_brf(&cs, &g).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert_abs_diff_eq!(prev, 0.7311268263, epsilon = 1e-6);
    }

    #[test]
    fn dasf_recovery_through_regression_window() {
        // forward model then the BRF/albedo-vs-BRF fixed point recovers
        // rho_i0/(1-p) regardless of the albedo used
        let oc = constants();
        let omega = reference_albedo(&oc).unwrap();
        let params = SiForwardParams::new(0.3, 0.5).unwrap();
        let brf = si_forward_brf(&params, &omega).unwrap();
        let window = BandWindow::default();
        let b = brf.slice_band(window).unwrap();
        let w = omega.slice_band(window).unwrap();
        let y: Vec<f64> = b.values().iter().zip(w.values()).map(|(&x, &wv)| x / wv).collect();
        let fit = crate::spectral::linear_fit(b.values(), &y).unwrap();
        assert_abs_diff_eq!(fit.intercept / (1.0 - fit.slope), 0.6, epsilon = 1e-9);
    }
}
