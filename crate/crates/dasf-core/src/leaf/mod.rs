//! Leaf-level forward model: a generalized plate model driven by specific
//! absorption coefficients, plus the within-leaf spectral-invariant
//! machinery used by the DASF bias analysis.
//!
//! The plate model follows the classical construction: per-plate absorption
//! `k = sum_i C_i k_i(lambda) / N`, isotropic plate transmission through the
//! exponential-integral function, elementary-layer reflectance and
//! transmittance from average Fresnel transmissivities at the leaf surface,
//! and `N - 1` additional layers stacked with the Stokes doubling relations.

mod expint;
mod invariants;

pub use expint::{exp1, plate_transmission};
pub use invariants::{
    albedo_from_fundamental, fit_p_leaf, fundamental_from_albedo, leaf_invariant_fit,
    power_approx, transformed_albedo_model, within_leaf_models, FundamentalTerm,
    WithinLeafFit, WithinLeafModels,
};

use std::path::Path;

use thiserror::Error;

use crate::spectral::{SpectralError, Spectrum, WavelengthGrid};

#[derive(Debug, Error)]
pub enum LeafError {
    #[error("constants file {path}: {msg}")]
    Constants { path: String, msg: String },
    #[error("biochemistry out of range: {0}")]
    Biochem(String),
    #[error("chlorophyll {0} ug/cm2 is below the 10 ug/cm2 green-leaf floor")]
    NotGreen(f64),
    #[error("plate model failure at {nm} nm: {msg}")]
    Numeric { nm: u32, msg: String },
    #[error("non-physical configuration: {0}")]
    NonPhysical(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Refractive index and specific absorption coefficients on the full grid.
///
/// Units: `k_cab`, `k_car`, `k_anth` in cm^2/ug; `k_brown` unitless;
/// `k_ewt` in cm^-1; `k_lma` in cm^2/g.
#[derive(Debug, Clone)]
pub struct OpticalConstants {
    grid: WavelengthGrid,
    pub n: Vec<f64>,
    pub k_cab: Vec<f64>,
    pub k_car: Vec<f64>,
    pub k_anth: Vec<f64>,
    pub k_brown: Vec<f64>,
    pub k_ewt: Vec<f64>,
    pub k_lma: Vec<f64>,
}

const CONSTANTS_COLUMNS: [&str; 8] =
    ["wavelength_nm", "n", "k_cab", "k_car", "k_anth", "k_brown", "k_ewt", "k_lma"];

impl OpticalConstants {
    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    /// Loads the constants CSV (`wavelength_nm,n,k_cab,k_car,k_anth,k_brown,
    /// k_ewt,k_lma`), requiring full ascending coverage of the default grid,
    /// nonnegative coefficients and n > 1.
    pub fn load(path: &Path) -> Result<Self, LeafError> {
        let err = |msg: String| LeafError::Constants { path: path.display().to_string(), msg };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
        let mut col = [0usize; 8];
        for (i, name) in CONSTANTS_COLUMNS.iter().enumerate() {
            col[i] = headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| err(format!("missing column {name}")))?;
        }
        let grid = WavelengthGrid::default();
        let mut oc = OpticalConstants {
            grid,
            n: Vec::with_capacity(grid.len()),
            k_cab: Vec::with_capacity(grid.len()),
            k_car: Vec::with_capacity(grid.len()),
            k_anth: Vec::with_capacity(grid.len()),
            k_brown: Vec::with_capacity(grid.len()),
            k_ewt: Vec::with_capacity(grid.len()),
            k_lma: Vec::with_capacity(grid.len()),
        };
        let mut expected = grid.start_nm();
        for rec in reader.records() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let nm: u32 = rec[col[0]]
                .parse()
                .map_err(|_| err(format!("bad wavelength {:?}", &rec[col[0]])))?;
            if nm != expected {
                return Err(err(format!("expected wavelength {expected}, found {nm} (gap, repeat or disorder)")));
            }
            expected += grid.step_nm();
            let n = rec[col[1]]
                .parse::<f64>()
                .map_err(|_| err(format!("bad value {:?} at {nm} nm", &rec[col[1]])))?;
            if !(n.is_finite() && n > 1.0) {
                return Err(err(format!("refractive index {n} at {nm} nm must exceed 1")));
            }
            oc.n.push(n);
            for (i, series) in [
                (2, &mut oc.k_cab),
                (3, &mut oc.k_car),
                (4, &mut oc.k_anth),
                (5, &mut oc.k_brown),
                (6, &mut oc.k_ewt),
                (7, &mut oc.k_lma),
            ] {
                let v = rec[col[i]]
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad value at {nm} nm")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(err(format!("negative or non-finite coefficient at {nm} nm")));
                }
                series.push(v);
            }
        }
        if oc.n.len() != grid.len() {
            return Err(err(format!("coverage gap: {} of {} rows", oc.n.len(), grid.len())));
        }
        Ok(oc)
    }
}

/// Leaf biochemistry for the plate model. Units follow the constants table:
/// `cab`/`car`/`anth` in ug/cm^2, `ewt` in cm, `lma` in g/cm^2.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LeafBiochem {
    pub n_struct: f64,
    pub cab: f64,
    pub car: f64,
    pub anth: f64,
    pub brown: f64,
    pub ewt: f64,
    pub lma: f64,
}

impl LeafBiochem {
    pub fn validate(&self) -> Result<(), LeafError> {
        if !(self.n_struct >= 1.0 && self.n_struct.is_finite()) {
            return Err(LeafError::Biochem(format!("plate count N = {} must be >= 1", self.n_struct)));
        }
        for (name, v) in [
            ("cab", self.cab),
            ("car", self.car),
            ("anth", self.anth),
            ("brown", self.brown),
            ("ewt", self.ewt),
            ("lma", self.lma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(LeafError::Biochem(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }

    /// The fixed reference biochemistry behind the reference leaf albedo.
    pub fn reference() -> Self {
        Self { n_struct: 1.5, cab: 16.0, car: 0.0, anth: 0.0, brown: 0.0, ewt: 0.005, lma: 0.002 }
    }
}

/// Leaf directional-hemispherical reflectance, transmittance and albedo.
#[derive(Debug, Clone)]
pub struct LeafOptics {
    pub reflectance: Spectrum,
    pub transmittance: Spectrum,
    pub albedo: Spectrum,
    pub surface_fraction: f64,
}

impl LeafOptics {
    pub fn new(
        reflectance: Spectrum,
        transmittance: Spectrum,
        surface_fraction: f64,
    ) -> Result<Self, LeafError> {
        if !(0.0..=0.05).contains(&surface_fraction) {
            return Err(LeafError::NonPhysical(format!(
                "surface fraction {surface_fraction} outside [0, 0.05]"
            )));
        }
        for ((nm, &r), &t) in reflectance
            .grid()
            .wavelengths()
            .zip(reflectance.values())
            .zip(transmittance.values())
        {
            if r < 0.0 || t < 0.0 || r + t > 1.0 + 1e-9 {
                return Err(LeafError::NonPhysical(format!(
                    "R = {r}, T = {t} at {nm} nm violates 0 <= R, T and R + T <= 1"
                )));
            }
        }
        let albedo = reflectance.zip_with(&transmittance, |r, t| r + t);
        Ok(Self { reflectance, transmittance, albedo, surface_fraction })
    }
}

/// Average transmissivity of a dielectric interface for radiation incident
/// within a cone of half-angle `alpha_deg`, after Stern's integration of the
/// Fresnel coefficients.
pub fn tav(alpha_deg: f64, n: f64) -> f64 {
    let n2 = n * n;
    let np = n2 + 1.0;
    let nm = n2 - 1.0;
    let a = (n + 1.0) * (n + 1.0) / 2.0;
    let k = -nm * nm / 4.0;
    let sa = alpha_deg.to_radians().sin();
    let b1 = if alpha_deg >= 90.0 {
        0.0
    } else {
        ((sa * sa - np / 2.0) * (sa * sa - np / 2.0) + k).max(0.0).sqrt()
    };
    let b2 = sa * sa - np / 2.0;
    let b = b1 - b2;
    let b3 = b * b * b;
    let a3 = a * a * a;
    let ts = (k * k / (6.0 * b3) + k / b - b / 2.0) - (k * k / (6.0 * a3) + k / a - a / 2.0);
    let tp1 = -2.0 * n2 * (b - a) / (np * np);
    let tp2 = -2.0 * n2 * np * (b / a).ln() / (nm * nm);
    let tp3 = n2 * (1.0 / b - 1.0 / a) / 2.0;
    let tp4 = 16.0 * n2 * n2 * (n2 * n2 + 1.0) * ((2.0 * np * b - nm * nm) / (2.0 * np * a - nm * nm)).ln()
        / (np * np * np * nm * nm);
    let tp5 = 16.0 * n2 * n2 * n2 * (1.0 / (2.0 * np * b - nm * nm) - 1.0 / (2.0 * np * a - nm * nm))
        / (np * np * np);
    (ts + tp1 + tp2 + tp3 + tp4 + tp5) / (2.0 * sa * sa)
}

/// One-wavelength plate stack: reflectance and transmittance of a leaf with
/// `n_struct` plates, refractive index `n` and per-plate optical depth `k`.
pub(crate) fn plate_stack(n: f64, k: f64, n_struct: f64) -> Result<(f64, f64), String> {
    let trans = plate_transmission(k);
    if !trans.is_finite() || trans < 0.0 {
        return Err(format!("plate transmission failed for optical depth {k}"));
    }
    let talf = tav(40.0, n);
    let ralf = 1.0 - talf;
    let t12 = tav(90.0, n);
    let r12 = 1.0 - t12;
    let t21 = t12 / (n * n);
    let r21 = 1.0 - t21;

    // single elementary plate, lit from the rough top side / from inside
    let denom = 1.0 - r21 * r21 * trans * trans;
    let ta = talf * trans * t21 / denom;
    let ra = ralf + r21 * trans * ta;
    let t = t12 * trans * t21 / denom;
    let r = r12 + r21 * trans * t;

    // N - 1 further plates by Stokes doubling
    let (rsub, tsub) = if 1.0 - r - t < 1e-12 {
        // conservative limit
        let tsub = t / (t + (1.0 - t) * (n_struct - 1.0));
        (1.0 - tsub, tsub)
    } else {
        let d2 = (1.0 + r + t) * (1.0 + r - t) * (1.0 - r + t) * (1.0 - r - t);
        if d2 < 0.0 {
            return Err(format!("Stokes discriminant negative (r = {r}, t = {t})"));
        }
        let d = d2.sqrt();
        let alpha = (1.0 + r * r - t * t + d) / (2.0 * r);
        let beta = (1.0 - r * r + t * t + d) / (2.0 * t);
        let b_nm1 = beta.powf(n_struct - 1.0);
        let b_n2 = b_nm1 * b_nm1;
        if b_n2.is_infinite() {
            // opaque sub-stack
            (1.0 / alpha, 0.0)
        } else {
            let denom = alpha * alpha * b_n2 - 1.0;
            ((alpha * (b_n2 - 1.0)) / denom, (b_nm1 * (alpha * alpha - 1.0)) / denom)
        }
    };

    let denom = 1.0 - rsub * r;
    let tran = ta * tsub / denom;
    let refl = ra + ta * rsub * t / denom;
    if !(refl.is_finite() && tran.is_finite()) {
        return Err(format!("non-finite plate stack output (r = {r}, t = {t})"));
    }
    Ok((refl, tran))
}

/// Generalized plate model: leaf reflectance, transmittance and albedo from
/// biochemistry and the optical-constants table.
pub fn prospect(bio: &LeafBiochem, oc: &OpticalConstants) -> Result<LeafOptics, LeafError> {
    bio.validate()?;
    let grid = oc.grid();
    let mut refl = Vec::with_capacity(grid.len());
    let mut tran = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let absorb = bio.cab * oc.k_cab[i]
            + bio.car * oc.k_car[i]
            + bio.anth * oc.k_anth[i]
            + bio.brown * oc.k_brown[i]
            + bio.ewt * oc.k_ewt[i]
            + bio.lma * oc.k_lma[i];
        let k = absorb / bio.n_struct;
        let (r, t) = plate_stack(oc.n[i], k, bio.n_struct).map_err(|msg| LeafError::Numeric {
            nm: grid.start_nm() + i as u32 * grid.step_nm(),
            msg,
        })?;
        refl.push(r);
        tran.push(t);
    }
    LeafOptics::new(Spectrum::new(grid, refl)?, Spectrum::new(grid, tran)?, 0.0)
}

/// The reference leaf albedo: plate model at the fixed reference
/// biochemistry (chlorophyll 16 ug/cm^2, water 0.005 cm, dry matter
/// 0.002 g/cm^2, N = 1.5, no other pigments).
pub fn reference_albedo(oc: &OpticalConstants) -> Result<Spectrum, LeafError> {
    Ok(prospect(&LeafBiochem::reference(), oc)?.albedo)
}
