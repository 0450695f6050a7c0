//! Within-leaf spectral-invariant machinery: the transformed-albedo
//! relation against a fixed reference leaf, the fundamental scattering
//! term, and the dry-matter-aware transformed-albedo model.

use crate::spectral::{linear_fit, BandWindow, Spectrum};

use super::{LeafError, OpticalConstants};

/// Result of regressing a leaf's transformed albedo against the reference:
/// `albedo/reference = r + p * albedo` over the fit window.
///
/// For green leaves `p` sits in [0, 1) and `r` near `1 - p`; leaves with
/// less chlorophyll than the reference produce negative `p`, so the fields
/// are reported as fitted rather than clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WithinLeafFit {
    pub r: f64,
    pub p: f64,
    pub epsilon: f64,
}

/// Fundamental scattering term `W` and the within-leaf recollision
/// probability linking it to the transformed albedo.
#[derive(Debug, Clone)]
pub struct FundamentalTerm {
    pub w_leaf: Spectrum,
    pub p_leaf: f64,
}

/// Fits `albedo/reference = r + p * albedo` over the window.
pub fn leaf_invariant_fit(
    albedo: &Spectrum,
    reference: &Spectrum,
    window: BandWindow,
) -> Result<WithinLeafFit, LeafError> {
    let a = albedo.slice_band(window)?;
    let r = reference.slice_band(window)?;
    if r.values().iter().any(|&v| v <= 0.0) {
        return Err(LeafError::NonPhysical(
            "reference albedo must be positive over the fit window".into(),
        ));
    }
    let y: Vec<f64> =
        a.values().iter().zip(r.values()).map(|(&w, &wr)| w / wr).collect();
    let fit = linear_fit(a.values(), &y)?;
    Ok(WithinLeafFit { r: fit.intercept, p: fit.slope, epsilon: fit.intercept + fit.slope - 1.0 })
}

/// Inverts the fundamental-term relation: `W = albedo / (1 - p + p*albedo)`.
pub fn fundamental_from_albedo(
    albedo: &Spectrum,
    p_leaf: f64,
) -> Result<FundamentalTerm, LeafError> {
    if !(0.0..1.0).contains(&p_leaf) {
        return Err(LeafError::NonPhysical(format!("p_leaf {p_leaf} outside [0, 1)")));
    }
    if albedo.values().iter().any(|&w| w <= 0.0 || w > 1.0) {
        return Err(LeafError::NonPhysical("albedo must lie in (0, 1]".into()));
    }
    let w_leaf = albedo.map(|w| w / (1.0 - p_leaf + p_leaf * w));
    Ok(FundamentalTerm { w_leaf, p_leaf })
}

/// `albedo = (1 - p) W / (1 - p W)`.
pub fn albedo_from_fundamental(f: &FundamentalTerm) -> Spectrum {
    let p = f.p_leaf;
    f.w_leaf.map(|w| (1.0 - p) * w / (1.0 - p * w))
}

/// Rational approximation of `W^t_c` in the weakly absorbing window:
/// `(1 - q) W / (1 - q W)` with `q = (t_c - 1)/t_c`.
pub fn power_approx(w_reference: &Spectrum, t_c: f64) -> Result<Spectrum, LeafError> {
    if t_c <= 0.0 {
        return Err(LeafError::NonPhysical(format!("t_c {t_c} must be positive")));
    }
    let q = (t_c - 1.0) / t_c;
    Ok(w_reference.map(|w| (1.0 - q) * w / (1.0 - q * w)))
}

/// The empirical within-leaf relations of the bias analysis, as functions
/// of chlorophyll and dry-matter content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WithinLeafModels {
    /// recollision probability at the reference dry-matter content
    pub p0: f64,
    /// recollision probability of the leaf
    pub p: f64,
    /// scattering intercept of the leaf
    pub r: f64,
    /// slope of the p-vs-p0 line as a function of dry matter
    pub k_line: f64,
    /// intercept of the p-vs-p0 line as a function of dry matter
    pub b_line: f64,
}

/// Evaluates the fitted within-leaf relation lines for a green leaf.
pub fn within_leaf_models(cab: f64, lma: f64) -> Result<WithinLeafModels, LeafError> {
    if cab < 10.0 {
        return Err(LeafError::NotGreen(cab));
    }
    Ok(WithinLeafModels {
        p0: 1.04 - 15.54 / cab,
        p: 1.04 - 16.63 / cab,
        r: 15.07 / cab - 0.02,
        k_line: 9.18 * lma + 0.98,
        b_line: -9.16 * lma + 0.02,
    })
}

/// Transformed albedo of a leaf whose chlorophyll and dry matter are
/// `t_c` and `t_m` times the reference contents:
/// `A (1 - q) w_r / (1 - B w_r)` with `A = exp((t_c - t_m) cm_km)`,
/// `q = (t_c - 1)/t_c` and `B = (q - p_leaf + p_leaf A (1 - q))/(1 - p_leaf)`.
pub fn transformed_albedo_model(
    reference: &Spectrum,
    t_c: f64,
    t_m: f64,
    cm_km: f64,
    p_leaf: f64,
) -> Result<Spectrum, LeafError> {
    if t_c <= 0.0 || t_m <= 0.0 {
        return Err(LeafError::NonPhysical(format!("t_c {t_c}, t_m {t_m} must be positive")));
    }
    if !(0.0..1.0).contains(&p_leaf) {
        return Err(LeafError::NonPhysical(format!("p_leaf {p_leaf} outside [0, 1)")));
    }
    let a = ((t_c - t_m) * cm_km).exp();
    let q = (t_c - 1.0) / t_c;
    let b = (q - p_leaf + p_leaf * a * (1.0 - q)) / (1.0 - p_leaf);
    for (nm, &wr) in reference.grid().wavelengths().zip(reference.values()) {
        if b * wr >= 1.0 {
            return Err(LeafError::NonPhysical(format!(
                "B*w_r = {:.4} >= 1 at {nm} nm",
                b * wr
            )));
        }
    }
    Ok(reference.map(|wr| a * (1.0 - q) * wr / (1.0 - b * wr)))
}

/// Recovers the within-leaf recollision probability of a simulated leaf by
/// one-dimensional search: the `p` in [0, 0.999] for which `ln W(p)` is best
/// explained (largest R^2) by the chlorophyll absorption basis over the
/// window.
pub fn fit_p_leaf(
    albedo: &Spectrum,
    oc: &OpticalConstants,
    window: BandWindow,
) -> Result<f64, LeafError> {
    let a = albedo.slice_band(window)?;
    let lo = oc.grid().index_of(window.lo_nm)?;
    let hi = oc.grid().index_of(window.hi_nm)?;
    let k_cab = &oc.k_cab[lo..=hi];
    if a.values().iter().any(|&w| w <= 0.0 || w > 1.0) {
        return Err(LeafError::NonPhysical("albedo must lie in (0, 1]".into()));
    }

    // fraction of ln W variance unexplained by {k_cab, 1}
    let objective = |p: f64| -> f64 {
        let y: Vec<f64> =
            a.values().iter().map(|&w| (w / (1.0 - p + p * w)).ln()).collect();
        match linear_fit(k_cab, &y) {
            Ok(fit) => 1.0 - fit.r2,
            Err(_) => f64::INFINITY,
        }
    };

    // golden-section search
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut lo_p, mut hi_p) = (0.0_f64, 0.999_f64);
    let mut c = hi_p - inv_phi * (hi_p - lo_p);
    let mut d = lo_p + inv_phi * (hi_p - lo_p);
    let mut fc = objective(c);
    let mut fd = objective(d);
    for _ in 0..120 {
        if fc < fd {
            hi_p = d;
            d = c;
            fd = fc;
            c = hi_p - inv_phi * (hi_p - lo_p);
            fc = objective(c);
        } else {
            lo_p = c;
            c = d;
            fc = fd;
            d = lo_p + inv_phi * (hi_p - lo_p);
            fd = objective(d);
        }
        if hi_p - lo_p < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo_p + hi_p))
}
