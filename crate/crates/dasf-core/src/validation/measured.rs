//! Ingestion and evaluation of measured multi-angular spectral libraries:
//! canopy directional scattering coefficients and leaf
//! directional-hemispherical reflectance/transmittance factors, turned into
//! per-direction reflectance and an average leaf albedo, then scored
//! against the oracle scattering factor.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::estimators::{
    dasf0_from_true_albedo, idasf, sdasf, DcModelCoefficients,
};
use crate::leaf::{reference_albedo, OpticalConstants};
use crate::spectral::{spectrum_from_rows, BandWindow, Spectrum};

use super::ValidationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Pine,
    Oak,
    Other,
}

impl Species {
    fn parse(s: &str) -> (Species, bool) {
        match s.to_lowercase().as_str() {
            "pine" => (Species::Pine, true),
            "oak" => (Species::Oak, true),
            _ => (Species::Other, false),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Pine => "pine",
            Species::Oak => "oak",
            Species::Other => "other",
        }
    }
}

/// Viewing direction; zenith is signed (positive backscatter half,
/// negative forward half).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub vza_deg: f64,
    pub raa_deg: f64,
}

/// One measured canopy: average leaf albedo and per-direction reflectance.
#[derive(Debug, Clone)]
pub struct MeasuredCanopy {
    pub canopy_id: String,
    pub species: Species,
    pub leaf_albedo: Spectrum,
    pub brf: Vec<(Direction, Spectrum)>,
}

fn key(v: f64) -> i64 {
    (v * 1000.0).round() as i64
}

/// Reads the two library CSVs. Canopy spectra rows are
/// `canopy_id,species,vza_deg,raa_deg,wavelength_nm,dsc` with reflectance
/// recovered as `pi * dsc`; leaf rows are
/// `canopy_id,sample_id,side,wavelength_nm,dhrf,dhtf` averaged over samples
/// and sides into one albedo per canopy. Returns canopies sorted by id plus
/// any tolerated-input warnings.
pub fn ingest_measured_library(
    spectra_path: &Path,
    leaf_path: &Path,
) -> Result<(Vec<MeasuredCanopy>, Vec<String>), ValidationError> {
    let mut warnings = Vec::new();

    // leaf albedo: mean of dhrf + dhtf over (sample, side) per wavelength
    let mut leaf_acc: BTreeMap<String, BTreeMap<u32, (f64, usize)>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(leaf_path)
        .map_err(|e| ValidationError::Library(format!("{}: {e}", leaf_path.display())))?;
    for rec in reader.records() {
        let rec = rec.map_err(|e| ValidationError::Library(e.to_string()))?;
        if rec.len() < 6 {
            return Err(ValidationError::Library("leaf csv needs 6 columns".into()));
        }
        let canopy = rec[0].to_string();
        let nm: u32 = rec[3]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad wavelength {:?}", &rec[3])))?;
        let dhrf: f64 = rec[4]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad dhrf {:?}", &rec[4])))?;
        let dhtf: f64 = rec[5]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad dhtf {:?}", &rec[5])))?;
        let sum = dhrf + dhtf;
        if sum > 1.0 + 1e-6 {
            return Err(ValidationError::AlbedoOverUnity { canopy, sum });
        }
        if dhrf < 0.0 || dhtf < 0.0 {
            return Err(ValidationError::Library(format!(
                "negative leaf factor for canopy {canopy} at {nm} nm"
            )));
        }
        let slot = leaf_acc.entry(canopy).or_default().entry(nm).or_insert((0.0, 0));
        slot.0 += sum;
        slot.1 += 1;
    }

    // canopy spectra grouped by id and direction
    struct Partial {
        species: Species,
        directions: Vec<(Direction, Vec<(u32, f64)>)>,
        index: BTreeMap<(i64, i64), usize>,
    }
    let mut canopies: BTreeMap<String, Partial> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(spectra_path)
        .map_err(|e| ValidationError::Library(format!("{}: {e}", spectra_path.display())))?;
    for rec in reader.records() {
        let rec = rec.map_err(|e| ValidationError::Library(e.to_string()))?;
        if rec.len() < 6 {
            return Err(ValidationError::Library("spectra csv needs 6 columns".into()));
        }
        let id = rec[0].to_string();
        let (species, known) = Species::parse(&rec[1]);
        if !known {
            let msg = format!("canopy {id}: unknown species {:?} treated as other", &rec[1]);
            if !warnings.contains(&msg) {
                warnings.push(msg);
            }
        }
        let vza: f64 = rec[2]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad vza {:?}", &rec[2])))?;
        let raa: f64 = rec[3]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad raa {:?}", &rec[3])))?;
        let nm: u32 = rec[4]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad wavelength {:?}", &rec[4])))?;
        let dsc: f64 = rec[5]
            .parse()
            .map_err(|_| ValidationError::Library(format!("bad dsc {:?}", &rec[5])))?;
        if dsc < 0.0 {
            return Err(ValidationError::NegativeDsc { canopy: id, dsc });
        }
        let entry = canopies.entry(id).or_insert_with(|| Partial {
            species,
            directions: Vec::new(),
            index: BTreeMap::new(),
        });
        let dir_key = (key(vza), key(raa));
        let slot = match entry.index.get(&dir_key) {
            Some(&i) => i,
            None => {
                entry.directions.push((Direction { vza_deg: vza, raa_deg: raa }, Vec::new()));
                entry.index.insert(dir_key, entry.directions.len() - 1);
                entry.directions.len() - 1
            }
        };
        entry.directions[slot].1.push((nm, std::f64::consts::PI * dsc));
    }

    let mut out = Vec::new();
    for (id, partial) in canopies {
        let leaf = leaf_acc.remove(&id).ok_or_else(|| ValidationError::MissingLeafData(id.clone()))?;
        let rows: Vec<(u32, f64)> =
            leaf.into_iter().map(|(nm, (sum, n))| (nm, sum / n as f64)).collect();
        let leaf_albedo = spectrum_from_rows(&rows)?;
        let mut brf = Vec::with_capacity(partial.directions.len());
        for (dir, mut rows) in partial.directions {
            rows.sort_by_key(|&(nm, _)| nm);
            brf.push((dir, spectrum_from_rows(&rows)?));
        }
        out.push(MeasuredCanopy { canopy_id: id, species: partial.species, leaf_albedo, brf });
    }
    if out.is_empty() {
        return Err(ValidationError::Library("no canopies in input".into()));
    }
    Ok((out, warnings))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Absolute-error statistics of one estimator over one species.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodErrorStats {
    pub mae: f64,
    pub n: usize,
    pub histogram: Vec<HistogramBin>,
}

/// One cell of the per-direction maps: improvement of the corrected
/// estimator (negative = better) and the oracle scattering factor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DirectionCell {
    pub vza_deg: f64,
    pub raa_deg: f64,
    pub delta_ae: f64,
    pub mean_dasf0: f64,
    pub n: usize,
}

/// Per-species evaluation of a measured library.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeciesReport {
    pub species: Species,
    pub n_canopies: usize,
    pub n_observations: usize,
    pub n_failed: usize,
    pub sdasf: MethodErrorStats,
    pub idasf: MethodErrorStats,
    pub angle_map: Vec<DirectionCell>,
}

fn histogram(errors: &[f64]) -> Vec<HistogramBin> {
    const WIDTH: f64 = 0.005;
    const BINS: usize = 24;
    let mut bins: Vec<HistogramBin> = (0..BINS)
        .map(|i| HistogramBin { lo: i as f64 * WIDTH, hi: (i + 1) as f64 * WIDTH, count: 0 })
        .collect();
    for &e in errors {
        let idx = ((e / WIDTH).floor() as usize).min(BINS - 1);
        bins[idx].count += 1;
    }
    bins
}

/// Scores every (canopy, direction) observation: oracle from each canopy's
/// own leaf albedo, both estimators from the reference albedo, absolute
/// errors aggregated per species and per direction.
pub fn validate_measured(
    canopies: &[MeasuredCanopy],
    coeffs: &DcModelCoefficients,
    oc: &OpticalConstants,
) -> Result<Vec<SpeciesReport>, ValidationError> {
    let window = BandWindow::default();
    let omega_r_full = reference_albedo(oc)?;

    struct Acc {
        n_canopies: usize,
        ae_s: Vec<f64>,
        ae_i: Vec<f64>,
        n_failed: usize,
        cells: BTreeMap<(i64, i64), (Direction, f64, f64, usize)>,
    }
    let mut by_species: BTreeMap<&'static str, (Species, Acc)> = BTreeMap::new();

    for canopy in canopies {
        let (_, acc) = by_species.entry(canopy.species.name()).or_insert((
            canopy.species,
            Acc {
                n_canopies: 0,
                ae_s: Vec::new(),
                ae_i: Vec::new(),
                n_failed: 0,
                cells: BTreeMap::new(),
            },
        ));
        acc.n_canopies += 1;
        // estimators need the reference albedo on the measured grid
        let grid = canopy.leaf_albedo.grid();
        let mut vals = Vec::with_capacity(grid.len());
        for nm in grid.wavelengths() {
            vals.push(omega_r_full.at(nm)?);
        }
        let omega_r = Spectrum::new(grid, vals)?;
        for (dir, brf) in &canopy.brf {
            let oracle = dasf0_from_true_albedo(brf, &canopy.leaf_albedo, window);
            let standard = sdasf(brf, &omega_r, window);
            let improved = idasf(brf, &omega_r, coeffs, window);
            match (oracle, standard, improved) {
                (Ok(o), Ok(s), Ok(i)) => {
                    let ae_s = (s.value - o.value).abs();
                    let ae_i = (i.value - o.value).abs();
                    acc.ae_s.push(ae_s);
                    acc.ae_i.push(ae_i);
                    let cell = acc
                        .cells
                        .entry((key(dir.vza_deg), key(dir.raa_deg)))
                        .or_insert((*dir, 0.0, 0.0, 0));
                    cell.1 += ae_i - ae_s;
                    cell.2 += o.value;
                    cell.3 += 1;
                }
                _ => acc.n_failed += 1,
            }
        }
    }

    let mut reports = Vec::new();
    for (_, (species, acc)) in by_species {
        if acc.ae_s.is_empty() {
            return Err(ValidationError::Library(format!(
                "no scorable observations for species {}",
                species.name()
            )));
        }
        let mae = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        reports.push(SpeciesReport {
            species,
            n_canopies: acc.n_canopies,
            n_observations: acc.ae_s.len(),
            n_failed: acc.n_failed,
            sdasf: MethodErrorStats {
                mae: mae(&acc.ae_s),
                n: acc.ae_s.len(),
                histogram: histogram(&acc.ae_s),
            },
            idasf: MethodErrorStats {
                mae: mae(&acc.ae_i),
                n: acc.ae_i.len(),
                histogram: histogram(&acc.ae_i),
            },
            angle_map: acc
                .cells
                .into_values()
                .map(|(dir, dae, d0, n)| DirectionCell {
                    vza_deg: dir.vza_deg,
                    raa_deg: dir.raa_deg,
                    delta_ae: dae / n as f64,
                    mean_dasf0: d0 / n as f64,
                    n,
                })
                .collect(),
        });
    }
    Ok(reports)
}
