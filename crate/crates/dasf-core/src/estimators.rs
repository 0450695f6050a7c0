//! DASF estimators and the dry-matter bias machinery.
//!
//! The standard route regresses `BRF/albedo` on `BRF` over the weakly
//! absorbing window and takes the fixed point `b/(1-k)`. When the regression
//! uses the fixed reference leaf albedo, variation of leaf dry matter biases
//! that fixed point; the improved route subtracts a correction `DC` modeled
//! from the canopy BRF at 710 and 2260 nm: `b/(1 - k - DC)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canopy::SiForwardParams;
use crate::spectral::{linear_fit, BandWindow, SpectralError, Spectrum};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("albedo must be positive over the regression window (found {0} at {1} nm)")]
    NonPositiveAlbedo(f64, u32),
    #[error("regression slope k = {k} leaves no scattering headroom (1 - k <= 1e-9)")]
    SlopeAtUnity { k: f64 },
    #[error(
        "correction overflows the regression: 1 - k - DC = {denom:.3e} <= 1e-6 \
         (k = {k:.4}, b = {b:.4}, DC = {dc:.4})"
    )]
    CorrectionOverflow { denom: f64, k: f64, b: f64, dc: f64 },
    #[error("estimate {value} outside the physical range (0, 1.5]")]
    NonPhysicalEstimate { value: f64 },
    #[error("DC model input out of range: brf710 = {brf710}, brf2260 = {brf2260}")]
    DcInputOutOfRange { brf710: f64, brf2260: f64 },
    #[error("bias factors out of range: {0}")]
    InvalidBiasInputs(String),
    #[error("reference scattering factor must be positive, got {0}")]
    NonPositiveDasf(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Which albedo the regression ran against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlbedoReference {
    ReferenceAlbedo,
    TrueAlbedo,
}

/// Slope and intercept of the BRF/albedo-vs-BRF line over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DasfRegression {
    pub k: f64,
    pub b: f64,
    pub r2: f64,
    pub window: BandWindow,
    pub reference: AlbedoReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DasfMethod {
    Sdasf,
    Idasf,
    Dasf0,
}

impl DasfMethod {
    pub fn name(self) -> &'static str {
        match self {
            DasfMethod::Sdasf => "sdasf",
            DasfMethod::Idasf => "idasf",
            DasfMethod::Dasf0 => "dasf0",
        }
    }
}

/// A DASF value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DasfEstimate {
    pub value: f64,
    pub method: DasfMethod,
    /// correction applied (0 for the standard and oracle routes)
    pub dc_used: f64,
}

impl DasfEstimate {
    fn checked(value: f64, method: DasfMethod, dc_used: f64) -> Result<Self, EstimatorError> {
        if !(value.is_finite() && value > 0.0 && value <= 1.5) {
            return Err(EstimatorError::NonPhysicalEstimate { value });
        }
        Ok(Self { value, method, dc_used })
    }
}

/// Coefficients of the exponential DC model
/// `DC = exp(c1*BRF710 + c2*BRF2260 + c3) + c4`.
///
/// The default is the published calibration; `calibration::fit_dc_model`
/// refits them for a given forward configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcModelCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Default for DcModelCoefficients {
    fn default() -> Self {
        Self { c1: 9.3894, c2: -15.1453, c3: -3.5058, c4: -0.0227 }
    }
}

/// Closed-form dry-matter bias factors for a leaf whose chlorophyll and dry
/// matter are `t_c` and `t_m` times the reference contents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasFactors {
    pub t_c: f64,
    pub t_m: f64,
    pub cm_km: f64,
    pub p_leaf: f64,
    /// dry-matter albedo scale `exp((t_c - t_m) cm_km)`
    pub a: f64,
    /// chlorophyll power-approximation parameter `(t_c - 1)/t_c`
    pub q: f64,
    /// regression-intercept scale `A (1 - q)`
    pub d: f64,
    /// denominator shift `(1 - A)/(A (1 - p_leaf))`
    pub c: f64,
    /// composite correction `D * C`
    pub dc: f64,
}

/// Regression of `BRF/albedo` on `BRF` over the window.
pub fn regress_brf(
    brf: &Spectrum,
    albedo: &Spectrum,
    window: BandWindow,
    reference: AlbedoReference,
) -> Result<DasfRegression, EstimatorError> {
    let b = brf.slice_band(window)?;
    let w = albedo.slice_band(window)?;
    for (nm, &wv) in w.grid().wavelengths().zip(w.values()) {
        if wv <= 0.0 {
            return Err(EstimatorError::NonPositiveAlbedo(wv, nm));
        }
    }
    let y: Vec<f64> = b.values().iter().zip(w.values()).map(|(&x, &wv)| x / wv).collect();
    let fit = linear_fit(b.values(), &y)?;
    Ok(DasfRegression { k: fit.slope, b: fit.intercept, r2: fit.r2, window, reference })
}

fn fixed_point(reg: &DasfRegression, dc: f64) -> Result<f64, EstimatorError> {
    let denom = 1.0 - reg.k - dc;
    if dc == 0.0 {
        if denom <= 1e-9 {
            return Err(EstimatorError::SlopeAtUnity { k: reg.k });
        }
    } else if denom <= 1e-6 {
        return Err(EstimatorError::CorrectionOverflow { denom, k: reg.k, b: reg.b, dc });
    }
    Ok(reg.b / denom)
}

/// Standard estimator: `b/(1 - k)` against the reference leaf albedo.
pub fn sdasf(
    brf: &Spectrum,
    reference_albedo: &Spectrum,
    window: BandWindow,
) -> Result<DasfEstimate, EstimatorError> {
    let reg = regress_brf(brf, reference_albedo, window, AlbedoReference::ReferenceAlbedo)?;
    DasfEstimate::checked(fixed_point(&reg, 0.0)?, DasfMethod::Sdasf, 0.0)
}

/// Evaluates the exponential DC model at a BRF pair.
pub fn dc_model(
    brf710: f64,
    brf2260: f64,
    coeffs: &DcModelCoefficients,
) -> Result<f64, EstimatorError> {
    if !((0.0..=1.5).contains(&brf710) && (0.0..=1.5).contains(&brf2260)) {
        return Err(EstimatorError::DcInputOutOfRange { brf710, brf2260 });
    }
    Ok((coeffs.c1 * brf710 + coeffs.c2 * brf2260 + coeffs.c3).exp() + coeffs.c4)
}

/// Improved estimator: `b/(1 - k - DC)` with DC from the canopy BRF at
/// 710 and 2260 nm.
pub fn idasf(
    brf: &Spectrum,
    reference_albedo: &Spectrum,
    coeffs: &DcModelCoefficients,
    window: BandWindow,
) -> Result<DasfEstimate, EstimatorError> {
    let reg = regress_brf(brf, reference_albedo, window, AlbedoReference::ReferenceAlbedo)?;
    let dc = dc_model(brf.at(710)?, brf.at(2260)?, coeffs)?;
    DasfEstimate::checked(fixed_point(&reg, dc)?, DasfMethod::Idasf, dc)
}

/// Oracle estimate from the canopy's own average leaf albedo:
/// `b0/(1 - k0)`.
pub fn dasf0_from_true_albedo(
    brf: &Spectrum,
    true_albedo: &Spectrum,
    window: BandWindow,
) -> Result<DasfEstimate, EstimatorError> {
    let reg = regress_brf(brf, true_albedo, window, AlbedoReference::TrueAlbedo)?;
    DasfEstimate::checked(fixed_point(&reg, 0.0)?, DasfMethod::Dasf0, 0.0)
}

/// Oracle correction implied by a reference-albedo regression and a known
/// scattering factor: `DC0 = 1 - k - b/DASF0`.
pub fn dc0(reg: &DasfRegression, dasf0: f64) -> Result<f64, EstimatorError> {
    if dasf0 <= 0.0 {
        return Err(EstimatorError::NonPositiveDasf(dasf0));
    }
    Ok(1.0 - reg.k - reg.b / dasf0)
}

/// Closed-form bias factors from the relative contents and the within-leaf
/// recollision probability.
pub fn bias_factors(
    t_c: f64,
    t_m: f64,
    cm_km: f64,
    p_leaf: f64,
) -> Result<BiasFactors, EstimatorError> {
    if t_c <= 0.0 {
        return Err(EstimatorError::InvalidBiasInputs(format!("t_c {t_c} must be positive")));
    }
    if !(0.0..1.0).contains(&p_leaf) {
        return Err(EstimatorError::InvalidBiasInputs(format!("p_leaf {p_leaf} outside [0, 1)")));
    }
    let a = ((t_c - t_m) * cm_km).exp();
    let q = (t_c - 1.0) / t_c;
    let d = a * (1.0 - q);
    let c = (1.0 - a) / (a * (1.0 - p_leaf));
    Ok(BiasFactors { t_c, t_m, cm_km, p_leaf, a, q, d, c, dc: d * c })
}

/// Analytic biased estimate `rho_i0/(1 - p + C)` the standard route lands on
/// under the given bias factors.
pub fn dasf_prime_analytic(
    params: &SiForwardParams,
    bf: &BiasFactors,
) -> Result<f64, EstimatorError> {
    let denom = 1.0 - params.p + bf.c;
    if denom <= 0.0 {
        return Err(EstimatorError::InvalidBiasInputs(format!(
            "1 - p + C = {denom:.3e} not positive"
        )));
    }
    Ok(params.rho_i0 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WavelengthGrid;
    use approx::assert_abs_diff_eq;

    fn window_ramp() -> Spectrum {
        Spectrum::from_fn(WavelengthGrid::default(), |nm| {
            0.55 + 0.4 * ((nm as f64 - 400.0) / 2100.0)
        })
    }

    /// BRF synthesized without dry-matter deviation: intercept
    /// `rho_i0 (1-q)`, slope `q + p (1-q)`.
    fn brf_neutral(wr: &Spectrum, rho_i0: f64, p: f64, q: f64) -> Spectrum {
        wr.map(|w| rho_i0 * (1.0 - q) * w / (1.0 - (q + p * (1.0 - q)) * w))
    }

    /// BRF synthesized with dry-matter deviation: intercept `A rho_i0 (1-q)`,
    /// slope `B + p A (1-q)`.
    fn brf_biased(
        wr: &Spectrum,
        rho_i0: f64,
        p: f64,
        t_c: f64,
        t_m: f64,
        cm_km: f64,
        p_leaf: f64,
    ) -> Spectrum {
        let a = ((t_c - t_m) * cm_km).exp();
        let q = (t_c - 1.0) / t_c;
        let b = (q - p_leaf + p_leaf * a * (1.0 - q)) / (1.0 - p_leaf);
        wr.map(|w| a * rho_i0 * (1.0 - q) * w / (1.0 - (b + p * a * (1.0 - q)) * w))
    }

    #[test]
    fn regression_recovers_neutral_construction() {
        let wr = window_ramp();
        let brf = brf_neutral(&wr, 0.4, 0.6, 0.0);
        let reg =
            regress_brf(&brf, &wr, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
                .unwrap();
        assert_abs_diff_eq!(reg.k, 0.6, epsilon = 1e-9);
        assert_abs_diff_eq!(reg.b, 0.4, epsilon = 1e-9);

        let brf_q = brf_neutral(&wr, 0.4, 0.6, 0.5);
        let reg_q =
            regress_brf(&brf_q, &wr, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
                .unwrap();
        assert_abs_diff_eq!(reg_q.k, 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(reg_q.b, 0.2, epsilon = 1e-9);
    }

    #[test]
    fn proportional_spectra_have_zero_slope() {
        let wr = window_ramp();
        let brf = wr.map(|w| 0.37 * w);
        let reg =
            regress_brf(&brf, &wr, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
                .unwrap();
        assert_abs_diff_eq!(reg.k, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(reg.b, 0.37, epsilon = 1e-9);
    }

    #[test]
    fn sdasf_is_q_invariant_on_neutral_constructions() {
        let wr = window_ramp();
        for q in [0.0, 0.5] {
            let brf = brf_neutral(&wr, 0.4, 0.6, q);
            let est = sdasf(&brf, &wr, BandWindow::default()).unwrap();
            assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-9);
            assert_eq!(est.dc_used, 0.0);
        }
    }

    #[test]
    fn sdasf_lands_on_biased_fixture() {
        let wr = window_ramp();
        let brf = brf_biased(&wr, 0.4, 0.6, 1.0, 2.0, 0.05, 0.9);
        let reg =
            regress_brf(&brf, &wr, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
                .unwrap();
        // direct evaluation of the construction constants
        assert_abs_diff_eq!(reg.b, 0.38049176980028565, epsilon = 1e-9);
        assert_abs_diff_eq!(reg.k, 0.13180247520685462, epsilon = 1e-9);
        let est = sdasf(&brf, &wr, BandWindow::default()).unwrap();
        assert_abs_diff_eq!(est.value, 0.4382548428607196, epsilon = 1e-9);
    }

    #[test]
    fn flat_brf_is_rejected() {
        let wr = window_ramp();
        let flat = Spectrum::constant(WavelengthGrid::default(), 0.2);
        assert!(matches!(
            sdasf(&flat, &wr, BandWindow::default()),
            Err(EstimatorError::Spectral(SpectralError::DegenerateX(_)))
        ));
    }

    #[test]
    fn slope_at_unity_is_rejected() {
        // y = 1*x + b exactly: BRF/w = 1*BRF + b  <=>  BRF = b*w/(1-w)
        let wr = window_ramp();
        let brf = wr.map(|w| 0.05 * w / (1.0 - w));
        let err = sdasf(&brf, &wr, BandWindow::default()).unwrap_err();
        assert!(matches!(err, EstimatorError::SlopeAtUnity { .. }));
    }

    #[test]
    fn dc_model_paper_values() {
        let c = DcModelCoefficients::default();
        assert_abs_diff_eq!(dc_model(0.0, 0.0, &c).unwrap(), 0.007322745537901795, epsilon = 1e-12);
        assert_abs_diff_eq!(
            dc_model(0.05, 0.05, &c).unwrap(),
            -0.00018548349928648386,
            epsilon = 1e-12
        );
        assert!(dc_model(2.0, 0.0, &c).is_err());
        assert!(dc_model(0.1, -0.1, &c).is_err());
    }

    #[test]
    fn dc_model_monotonicity() {
        let c = DcModelCoefficients::default();
        let base = dc_model(0.1, 0.05, &c).unwrap();
        assert!(dc_model(0.12, 0.05, &c).unwrap() > base);
        assert!(dc_model(0.1, 0.07, &c).unwrap() < base);
    }

    #[test]
    fn idasf_with_analytic_dc_recovers_truth() {
        let wr = window_ramp();
        let brf = brf_biased(&wr, 0.4, 0.6, 1.0, 2.0, 0.05, 0.9);
        let reg =
            regress_brf(&brf, &wr, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
                .unwrap();
        let bf = bias_factors(1.0, 2.0, 0.05, 0.9).unwrap();
        let corrected = reg.b / (1.0 - reg.k - bf.dc);
        assert_abs_diff_eq!(corrected, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn idasf_zero_correction_equals_sdasf() {
        let wr = window_ramp();
        let brf = brf_neutral(&wr, 0.3, 0.5, 0.2);
        // coefficients forcing DC = 0 exactly
        let coeffs = DcModelCoefficients { c1: 0.0, c2: 0.0, c3: f64::NEG_INFINITY, c4: 0.0 };
        let i = idasf(&brf, &wr, &coeffs, BandWindow::default()).unwrap();
        let s = sdasf(&brf, &wr, BandWindow::default()).unwrap();
        assert_abs_diff_eq!(i.value, s.value, epsilon = 1e-12);
        assert_eq!(i.dc_used, 0.0);
    }

    #[test]
    fn idasf_denominator_guard_reports_diagnostics() {
        let wr = window_ramp();
        let brf = brf_neutral(&wr, 0.36, 0.6, 0.0);
        // huge constant correction
        let coeffs = DcModelCoefficients { c1: 0.0, c2: 0.0, c3: 0.0, c4: 0.0 };
        let err = idasf(&brf, &wr, &coeffs, BandWindow::default()).unwrap_err();
        match err {
            EstimatorError::CorrectionOverflow { dc, k, .. } => {
                assert_abs_diff_eq!(dc, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(k, 0.6, epsilon = 1e-9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn arithmetic_identity_for_idasf() {
        // k=0.6, b=0.36, DC=0.04 -> 0.36/0.36 = 1.0
        let reg = DasfRegression {
            k: 0.6,
            b: 0.36,
            r2: 1.0,
            window: BandWindow::default(),
            reference: AlbedoReference::ReferenceAlbedo,
        };
        assert_abs_diff_eq!(fixed_point(&reg, 0.04).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dc0(&reg, 1.0).unwrap(), 0.04, epsilon = 1e-12);
        assert!(dc0(&reg, 0.0).is_err());
    }

    #[test]
    fn dasf0_exact_on_forward_model() {
        let wr = window_ramp();
        let params = SiForwardParams::new(0.3, 0.5).unwrap();
        let brf = crate::canopy::si_forward_brf(&params, &wr).unwrap();
        let est = dasf0_from_true_albedo(&brf, &wr, BandWindow::default()).unwrap();
        assert_abs_diff_eq!(est.value, 0.6, epsilon = 1e-9);

        // independent of the albedo spectrum used
        let other = Spectrum::from_fn(WavelengthGrid::default(), |nm| {
            0.3 + 0.6 * ((nm as f64 - 400.0) / 2100.0).powi(2)
        });
        let brf2 = crate::canopy::si_forward_brf(&params, &other).unwrap();
        let est2 = dasf0_from_true_albedo(&brf2, &other, BandWindow::default()).unwrap();
        assert_abs_diff_eq!(est2.value, est.value, epsilon = 1e-9);
    }

    #[test]
    fn dc0_vanishes_without_dry_matter_deviation() {
        let wr = window_ramp();
        let brf = brf_neutral(&wr, 0.4, 0.6, 0.35);
        let reg =
            regress_brf(&brf, &wr, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
                .unwrap();
        assert_abs_diff_eq!(dc0(&reg, 1.0).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bias_factors_worked_fixture() {
        let bf = bias_factors(1.0, 2.0, 0.05, 0.9).unwrap();
        assert_abs_diff_eq!(bf.a, 0.951229424500714, epsilon = 1e-12);
        assert_abs_diff_eq!(bf.c, 0.5127109637602403, epsilon = 1e-12);
        assert_abs_diff_eq!(bf.d, 0.951229424500714, epsilon = 1e-12);
        assert_abs_diff_eq!(bf.dc, 0.4877057549928598, epsilon = 1e-12);
        assert_eq!(bf.q, 0.0);
    }

    #[test]
    fn bias_factors_neutral_case() {
        let bf = bias_factors(2.0, 2.0, 0.07, 0.8).unwrap();
        assert_abs_diff_eq!(bf.a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bf.c, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bf.dc, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bias_sign_follows_dry_matter_excess() {
        // more dry matter than chlorophyll (needle-like): positive dc,
        // standard route underestimates
        let needle = bias_factors(1.0, 4.0, 0.05, 0.8).unwrap();
        assert!(needle.dc > 0.0);
        let inverse = bias_factors(4.0, 1.0, 0.05, 0.8).unwrap();
        assert!(inverse.dc < 0.0);
    }

    #[test]
    fn dasf_prime_analytic_values() {
        let params = SiForwardParams::new(0.4, 0.6).unwrap();
        let bf0 = bias_factors(2.0, 2.0, 0.05, 0.9).unwrap();
        assert_abs_diff_eq!(dasf_prime_analytic(&params, &bf0).unwrap(), 1.0, epsilon = 1e-12);
        let bf = bias_factors(1.0, 2.0, 0.05, 0.9).unwrap();
        assert_abs_diff_eq!(
            dasf_prime_analytic(&params, &bf).unwrap(),
            0.4382548428607196,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pipeline_equals_closed_form_on_biased_construction() {
        let wr = window_ramp();
        let params = SiForwardParams::new(0.4, 0.6).unwrap();
        let brf = brf_biased(&wr, params.rho_i0, params.p, 1.0, 2.0, 0.05, 0.9);
        let est = sdasf(&brf, &wr, BandWindow::default()).unwrap();
        let bf = bias_factors(1.0, 2.0, 0.05, 0.9).unwrap();
        let analytic = dasf_prime_analytic(&params, &bf).unwrap();
        assert_abs_diff_eq!(est.value, analytic, epsilon = 1e-9);
    }
}
