//! Wavelength grid, spectra, band windows, view geometry and line fitting.
//!
//! Everything downstream works on a fixed integer-nanometre grid (default
//! 400-2500 nm at 1 nm). There is no interpolation anywhere: a requested
//! wavelength must be a grid point, which removes a silent source of
//! numeric drift between modules.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid wavelength grid {start}..{end} step {step}")]
    InvalidGrid { start: u32, end: u32, step: u32 },
    #[error("wavelength {nm} nm is not on the {start}-{end} nm (step {step}) grid")]
    OffGrid { nm: u32, start: u32, end: u32, step: u32 },
    #[error("band window {lo}-{hi} nm is invalid")]
    InvalidWindow { lo: u32, hi: u32 },
    #[error("expected {expected} values for the grid, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at {nm} nm")]
    NonFinite { nm: u32 },
    #[error("view geometry out of range: sza {sza}, vza {vza}")]
    InvalidGeometry { sza: f64, vza: f64 },
    #[error("series length mismatch: {x} vs {y}")]
    SeriesLengthMismatch { x: usize, y: usize },
    #[error("need at least 3 samples for a line fit, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate regressor: variance {0:.3e} below 1e-12 (flat band)")]
    DegenerateX(f64),
    #[error("spectrum csv: {0}")]
    Csv(String),
}

/// Fixed integer wavelength grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    start_nm: u32,
    end_nm: u32,
    step_nm: u32,
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self { start_nm: 400, end_nm: 2500, step_nm: 1 }
    }
}

impl WavelengthGrid {
    pub fn new(start_nm: u32, end_nm: u32, step_nm: u32) -> Result<Self, SpectralError> {
        if start_nm >= end_nm || step_nm == 0 || (end_nm - start_nm) % step_nm != 0 {
            return Err(SpectralError::InvalidGrid { start: start_nm, end: end_nm, step: step_nm });
        }
        Ok(Self { start_nm, end_nm, step_nm })
    }

    pub fn start_nm(&self) -> u32 {
        self.start_nm
    }

    pub fn end_nm(&self) -> u32 {
        self.end_nm
    }

    pub fn step_nm(&self) -> u32 {
        self.step_nm
    }

    pub fn len(&self) -> usize {
        ((self.end_nm - self.start_nm) / self.step_nm) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid index of a wavelength, or an off-grid error.
    pub fn index_of(&self, nm: u32) -> Result<usize, SpectralError> {
        if nm < self.start_nm || nm > self.end_nm || (nm - self.start_nm) % self.step_nm != 0 {
            return Err(SpectralError::OffGrid {
                nm,
                start: self.start_nm,
                end: self.end_nm,
                step: self.step_nm,
            });
        }
        Ok(((nm - self.start_nm) / self.step_nm) as usize)
    }

    pub fn contains(&self, nm: u32) -> bool {
        self.index_of(nm).is_ok()
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).map(move |i| self.start_nm + i * self.step_nm)
    }
}

/// Wavelength-indexed series of unitless values on a [`WavelengthGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpectralError::NonFinite {
                    nm: grid.start_nm + i as u32 * grid.step_nm,
                });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: WavelengthGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Builds a spectrum by evaluating `f` at every grid wavelength.
    pub fn from_fn(grid: WavelengthGrid, mut f: impl FnMut(u32) -> f64) -> Self {
        let values = grid.wavelengths().map(&mut f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact grid value; no interpolation at any step.
    pub fn at(&self, nm: u32) -> Result<f64, SpectralError> {
        Ok(self.values[self.grid.index_of(nm)?])
    }

    /// Contiguous sub-spectrum covering `[lo_nm, hi_nm]` inclusive.
    pub fn slice_band(&self, window: BandWindow) -> Result<Spectrum, SpectralError> {
        let lo = self.grid.index_of(window.lo_nm)?;
        let hi = self.grid.index_of(window.hi_nm)?;
        let grid = if window.lo_nm == window.hi_nm {
            WavelengthGrid::single(window.lo_nm)
        } else {
            WavelengthGrid::new(window.lo_nm, window.hi_nm, self.grid.step_nm)?
        };
        Ok(Spectrum { grid, values: self.values[lo..=hi].to_vec() })
    }

    /// Applies `f` pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Spectrum {
        Spectrum { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two spectra on the same grid.
    pub fn zip_with(&self, other: &Spectrum, f: impl Fn(f64, f64) -> f64) -> Spectrum {
        debug_assert_eq!(self.grid, other.grid);
        let values =
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Spectrum { grid: self.grid, values }
    }
}

// A degenerate single-point grid violates start < end, so slice_band builds
// it through a private path above; index_of still works on it.
impl WavelengthGrid {
    pub(crate) fn single(nm: u32) -> Self {
        Self { start_nm: nm, end_nm: nm, step_nm: 1 }
    }
}

/// Regression window, defaulting to the weakly absorbing 710-790 nm band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandWindow {
    pub lo_nm: u32,
    pub hi_nm: u32,
}

impl Default for BandWindow {
    fn default() -> Self {
        Self { lo_nm: 710, hi_nm: 790 }
    }
}

impl BandWindow {
    pub fn new(lo_nm: u32, hi_nm: u32) -> Result<Self, SpectralError> {
        if lo_nm > hi_nm {
            return Err(SpectralError::InvalidWindow { lo: lo_nm, hi: hi_nm });
        }
        Ok(Self { lo_nm, hi_nm })
    }
}

/// Sun/view directions; the relative azimuth is view minus sun, stored
/// normalized to [0, 360).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewGeometry {
    pub sza_deg: f64,
    pub vza_deg: f64,
    pub raa_deg: f64,
}

impl ViewGeometry {
    pub fn new(sza_deg: f64, vza_deg: f64, raa_deg: f64) -> Result<Self, SpectralError> {
        if !(0.0..90.0).contains(&sza_deg) || !(0.0..90.0).contains(&vza_deg) {
            return Err(SpectralError::InvalidGeometry { sza: sza_deg, vza: vza_deg });
        }
        Ok(Self { sza_deg, vza_deg, raa_deg: raa_deg.rem_euclid(360.0) })
    }
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x`.
///
/// Residuals are orthogonal to `x` and to the constant; `r2 = 1 - SSres/SStot`
/// (defined as 1 when `y` is constant). A regressor with variance below
/// 1e-12 is rejected: on canopy spectra that signals a flat band.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit, SpectralError> {
    if x.len() != y.len() {
        return Err(SpectralError::SeriesLengthMismatch { x: x.len(), y: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(SpectralError::TooFewSamples(n));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let var_x = sxx / nf;
    if var_x <= 1e-12 {
        return Err(SpectralError::DegenerateX(var_x));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LineFit { slope, intercept, r2, n })
}

/// Reads a spectrum CSV (`wavelength_nm,value`, ascending rows). The grid is
/// inferred from the rows and must be contiguous with a constant step.
pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum, SpectralError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| SpectralError::Csv(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| SpectralError::Csv(e.to_string()))?;
    if headers.len() < 2 || &headers[0] != "wavelength_nm" {
        return Err(SpectralError::Csv(format!(
            "{}: expected header wavelength_nm,value",
            path.display()
        )));
    }
    let mut rows: Vec<(u32, f64)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| SpectralError::Csv(e.to_string()))?;
        let nm: u32 = rec[0]
            .parse()
            .map_err(|_| SpectralError::Csv(format!("bad wavelength {:?}", &rec[0])))?;
        let v: f64 =
            rec[1].parse().map_err(|_| SpectralError::Csv(format!("bad value {:?}", &rec[1])))?;
        rows.push((nm, v));
    }
    spectrum_from_rows(&rows)
}

/// Builds a spectrum from `(wavelength, value)` rows, validating that they
/// form an ascending constant-step grid.
pub fn spectrum_from_rows(rows: &[(u32, f64)]) -> Result<Spectrum, SpectralError> {
    if rows.len() < 2 {
        return Err(SpectralError::Csv("need at least 2 rows".into()));
    }
    let step = rows[1].0.checked_sub(rows[0].0).filter(|&s| s > 0).ok_or_else(|| {
        SpectralError::Csv(format!("non-ascending wavelengths at {} nm", rows[1].0))
    })?;
    for w in rows.windows(2) {
        if w[1].0 <= w[0].0 || w[1].0 - w[0].0 != step {
            return Err(SpectralError::Csv(format!(
                "grid gap or disorder between {} and {} nm",
                w[0].0, w[1].0
            )));
        }
    }
    let grid = WavelengthGrid::new(rows[0].0, rows[rows.len() - 1].0, step)?;
    Spectrum::new(grid, rows.iter().map(|&(_, v)| v).collect())
}

/// Writes a spectrum as `wavelength_nm,value` rows.
pub fn write_spectrum_csv(spectrum: &Spectrum, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "wavelength_nm,value")?;
    for (nm, v) in spectrum.grid().wavelengths().zip(spectrum.values()) {
        writeln!(out, "{nm},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp() -> Spectrum {
        Spectrum::from_fn(WavelengthGrid::default(), |nm| nm as f64 / 2500.0)
    }

    #[test]
    fn default_grid_has_2101_points() {
        let g = WavelengthGrid::default();
        assert_eq!(g.len(), 2101);
        assert_eq!(g.index_of(400).unwrap(), 0);
        assert_eq!(g.index_of(2500).unwrap(), 2100);
    }

    #[test]
    fn slice_band_default_window_gives_81_points() {
        let s = ramp();
        let sub = s.slice_band(BandWindow::default()).unwrap();
        assert_eq!(sub.values().len(), 81);
        assert_eq!(sub.at(710).unwrap(), 710.0 / 2500.0);
        assert_eq!(sub.at(790).unwrap(), 790.0 / 2500.0);
    }

    #[test]
    fn slice_band_degenerate_window() {
        let s = ramp();
        let sub = s.slice_band(BandWindow::new(710, 710).unwrap()).unwrap();
        assert_eq!(sub.values().len(), 1);
        assert_eq!(sub.at(710).unwrap(), 710.0 / 2500.0);
    }

    #[test]
    fn slice_band_outside_grid_errors() {
        let s = ramp();
        assert!(s.slice_band(BandWindow::new(300, 500).unwrap()).is_err());
    }

    #[test]
    fn at_matches_slice_then_at_over_window() {
        let s = ramp();
        let sub = s.slice_band(BandWindow::default()).unwrap();
        for nm in (710..=790).step_by(7) {
            assert_eq!(s.at(nm).unwrap(), sub.at(nm).unwrap());
        }
    }

    #[test]
    fn at_constant_and_ramp() {
        let c = Spectrum::constant(WavelengthGrid::default(), 0.5);
        assert_eq!(c.at(2260).unwrap(), 0.5);
        assert_abs_diff_eq!(ramp().at(710).unwrap(), 0.284, epsilon = 1e-12);
        assert!(ramp().at(2501).is_err());
        assert!(ramp().at(399).is_err());
    }

    #[test]
    fn linear_fit_exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_fit_constant_y() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 5.0, epsilon = 1e-12);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn linear_fit_degenerate_x() {
        assert!(matches!(
            linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(SpectralError::DegenerateX(_))
        ));
    }

    #[test]
    fn linear_fit_length_mismatch() {
        assert!(linear_fit(&[1.0, 2.0], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn view_geometry_normalizes_azimuth() {
        let g = ViewGeometry::new(30.0, 0.0, -90.0).unwrap();
        assert_eq!(g.raa_deg, 270.0);
        assert!(ViewGeometry::new(90.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn spectrum_rejects_non_finite() {
        let mut v = vec![0.0; 2101];
        v[7] = f64::NAN;
        assert!(Spectrum::new(WavelengthGrid::default(), v).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = ramp();
        let mut buf = Vec::new();
        write_spectrum_csv(&s, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, buf).unwrap();
        let back = read_spectrum_csv(&path).unwrap();
        assert_eq!(back, s);
    }
}
