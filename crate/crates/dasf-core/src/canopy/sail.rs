//! Four-stream turbid-medium bidirectional reflectance: extinction and
//! scattering coefficients from the inclination distribution, a hotspot
//! correction on the single-scattering term, and the classical two-stream
//! closed forms for the diffuse fluxes.

use crate::leaf::LeafOptics;
use crate::spectral::{Spectrum, ViewGeometry};

use super::{lidf_density, CanopyError, CanopyStructure};
use crate::canopy::lidf::LIDF_CLASS_CENTERS;

/// Directional cross sections of one inclination class.
struct ClassGeometry {
    chi_s: f64,
    chi_o: f64,
    frho: f64,
    ftau: f64,
}

fn class_geometry(tts: f64, tto: f64, psi_deg: f64, ttl: f64) -> ClassGeometry {
    let cts = tts.to_radians().cos();
    let cto = tto.to_radians().cos();
    let sts = tts.to_radians().sin();
    let sto = tto.to_radians().sin();
    let psir = psi_deg.to_radians();
    let cospsi = psir.cos();
    let cttl = ttl.to_radians().cos();
    let sttl = ttl.to_radians().sin();
    let cs = cttl * cts;
    let co = cttl * cto;
    let ss = sttl * sts;
    let so = sttl * sto;

    let cosbts = if ss.abs() > 1e-6 { -cs / ss } else { 5.0 };
    let cosbto = if so.abs() > 1e-6 { -co / so } else { 5.0 };

    let (bts, ds) = if cosbts.abs() < 1.0 { (cosbts.acos(), ss) } else { (std::f64::consts::PI, cs) };
    let chi_s = 2.0 / std::f64::consts::PI * ((bts - std::f64::consts::FRAC_PI_2) * cs + bts.sin() * ss);

    let (bto, doo) = if cosbto.abs() < 1.0 {
        (cosbto.acos(), so)
    } else if tto < 90.0 {
        (std::f64::consts::PI, co)
    } else {
        (0.0, -co)
    };
    let chi_o = 2.0 / std::f64::consts::PI * ((bto - std::f64::consts::FRAC_PI_2) * co + bto.sin() * so);

    let btran1 = (bts - bto).abs();
    let btran2 = std::f64::consts::PI - (bts + bto - std::f64::consts::PI).abs();
    let (bt1, bt2, bt3) = if psir <= btran1 {
        (psir, btran1, btran2)
    } else if psir <= btran2 {
        (btran1, psir, btran2)
    } else {
        (btran1, btran2, psir)
    };

    let t1 = 2.0 * cs * co + ss * so * cospsi;
    let t2 = if bt2 > 0.0 {
        bt2.sin() * (2.0 * ds * doo + ss * so * bt1.cos() * bt3.cos())
    } else {
        0.0
    };
    let denom = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    ClassGeometry {
        chi_s,
        chi_o,
        frho: (((std::f64::consts::PI - bt2) * t1 + t2) / denom).max(0.0),
        ftau: ((-bt2 * t1 + t2) / denom).max(0.0),
    }
}

/// Wavelength-independent part of the four-stream evaluation for one
/// (structure, geometry) pair.
pub(crate) struct SailOperator {
    lai: f64,
    ks: f64,
    ko: f64,
    sdb: f64,
    sdf: f64,
    dob: f64,
    dof: f64,
    ddb: f64,
    ddf: f64,
    sob: f64,
    sof: f64,
    tss: f64,
    too: f64,
    sumint: f64,
    tsstoo: f64,
}

impl SailOperator {
    pub fn new(cs: &CanopyStructure, g: &ViewGeometry) -> Result<Self, CanopyError> {
        let freq = lidf_density(cs.lidf_a, cs.lidf_b)?;
        let tts = g.sza_deg;
        let tto = g.vza_deg;
        // azimuth difference folded to [0, 180]
        let psi = if g.raa_deg > 180.0 { 360.0 - g.raa_deg } else { g.raa_deg };

        let cts = tts.to_radians().cos();
        let cto = tto.to_radians().cos();
        let ctscto = cts * cto;
        let tants = tts.to_radians().tan();
        let tanto = tto.to_radians().tan();
        let dso = (tants * tants + tanto * tanto
            - 2.0 * tants * tanto * psi.to_radians().cos())
        .max(0.0)
        .sqrt();

        let (mut ks, mut ko, mut bf, mut sob, mut sof) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ttl, f) in LIDF_CLASS_CENTERS.into_iter().zip(freq) {
            let cg = class_geometry(tts, tto, psi, ttl);
            ks += f * cg.chi_s / cts;
            ko += f * cg.chi_o / cto;
            sob += f * cg.frho * std::f64::consts::PI / ctscto;
            sof += f * cg.ftau * std::f64::consts::PI / ctscto;
            let ctl = ttl.to_radians().cos();
            bf += f * ctl * ctl;
        }

        let lai = cs.lai;
        let tss = (-ks * lai).exp();
        let too = (-ko * lai).exp();

        // hotspot correction of the sun->observer bidirectional path
        let alf = if cs.hotspot > 0.0 {
            ((dso / cs.hotspot) * 2.0 / (ks + ko)).min(200.0)
        } else {
            200.0
        };
        let (sumint, tsstoo) = if alf < 1e-12 {
            ((1.0 - tss) / (ks * lai), tss)
        } else {
            let fhot = lai * (ko * ks).sqrt();
            let fint = (1.0 - (-alf).exp()) * 0.05;
            let (mut x1, mut y1, mut f1) = (0.0, 0.0, 1.0);
            let mut sumint = 0.0;
            for istep in 1..=20 {
                let x2 = if istep < 20 {
                    -(1.0 - istep as f64 * fint).ln() / alf
                } else {
                    1.0
                };
                let y2 = -(ko + ks) * lai * x2 + fhot * (1.0 - (-alf * x2).exp()) / alf;
                let f2 = y2.exp();
                if (y2 - y1).abs() > 1e-300 {
                    sumint += (f2 - f1) * (x2 - x1) / (y2 - y1);
                } else {
                    sumint += f1 * (x2 - x1);
                }
                x1 = x2;
                y1 = y2;
                f1 = f2;
            }
            (sumint, f1)
        };

        Ok(Self {
            lai,
            ks,
            ko,
            sdb: 0.5 * (ks + bf),
            sdf: 0.5 * (ks - bf),
            dob: 0.5 * (ko + bf),
            dof: 0.5 * (ko - bf),
            ddb: 0.5 * (1.0 + bf),
            ddf: 0.5 * (1.0 - bf),
            sob,
            sof,
            tss,
            too,
            sumint,
            tsstoo,
        })
    }

    /// Bidirectional reflectance factor at one wavelength.
    pub fn brf(&self, rho: f64, tau: f64, rsoil: f64) -> Result<f64, CanopyError> {
        let lai = self.lai;
        let sigb = self.ddb * rho + self.ddf * tau;
        let sigf = self.ddf * rho + self.ddb * tau;
        let att = 1.0 - sigf;
        // conservative-scattering guard: approach leaf albedo 1 from below
        // so the two-stream closed forms stay finite
        let sigb = sigb.min(att - 1e-9);
        let m = ((att + sigb) * (att - sigb)).max(0.0).sqrt();
        let sb = self.sdb * rho + self.sdf * tau;
        let sf = self.sdf * rho + self.sdb * tau;
        let vb = self.dob * rho + self.dof * tau;
        let vf = self.dof * rho + self.dob * tau;
        let w = self.sob * rho + self.sof * tau;

        let e1 = (-m * lai).exp();
        let e2 = e1 * e1;
        let rinf = if sigb > 0.0 { (att - m) / sigb } else { 0.0 };
        let rinf2 = rinf * rinf;
        let re = rinf * e1;
        let denom = 1.0 - rinf2 * e2;

        let j1ks = jfunc1(self.ks, m, lai);
        let j2ks = jfunc2(self.ks, m, lai);
        let j1ko = jfunc1(self.ko, m, lai);
        let j2ko = jfunc2(self.ko, m, lai);

        let pss = (sf + sb * rinf) * j1ks;
        let qss = (sf * rinf + sb) * j2ks;
        let pv = (vf + vb * rinf) * j1ko;
        let qv = (vf * rinf + vb) * j2ko;

        let rdd = rinf * (1.0 - e2) / denom;
        let tsd = (pss - re * qss) / denom;
        let tdo = (pv - re * qv) / denom;
        let rdo = (qv - re * pv) / denom;

        let z = jfunc2(self.ks, self.ko, lai);
        let g1 = (z - j1ks * self.too) / (self.ko + m);
        let g2 = (z - j1ko * self.tss) / (self.ks + m);

        let tv1 = (vf * rinf + vb) * g1;
        let tv2 = (vf + vb * rinf) * g2;
        let t1 = tv1 * (sf + sb * rinf);
        let t2 = tv2 * (sf * rinf + sb);
        let t3 = (rdo * qss + tdo * pss) * rinf;
        let rsod = if rinf2 < 1.0 { (t1 + t2 - t3) / (1.0 - rinf2) } else { 0.0 };

        let rsos = w * lai * self.sumint;
        let rso = rsos + rsod;

        let dn = 1.0 - rsoil * rdd;
        let rsost = rso + self.tsstoo * rsoil;
        let rsodt = ((self.tss + tsd) * tdo + (tsd + self.tss * rsoil * rdd) * self.too)
            * rsoil
            / dn;
        let brf = rsost + rsodt;
        if !brf.is_finite() {
            return Err(CanopyError::Numeric(format!(
                "four-stream evaluation diverged (rho {rho}, tau {tau}, lai {lai})"
            )));
        }
        Ok(brf.max(0.0))
    }
}

fn jfunc1(k: f64, l: f64, t: f64) -> f64 {
    let del = (k - l) * t;
    if del.abs() > 1e-3 {
        ((-l * t).exp() - (-k * t).exp()) / (k - l)
    } else {
        0.5 * t * ((-k * t).exp() + (-l * t).exp()) * (1.0 - del * del / 12.0)
    }
}

fn jfunc2(k: f64, l: f64, t: f64) -> f64 {
    (1.0 - (-(k + l) * t).exp()) / (k + l)
}

/// Canopy bidirectional reflectance factor for a leaf/structure/geometry
/// triple over a soil spectrum (all-zero soil is the black-background case).
pub fn canopy_brf(
    leaf: &LeafOptics,
    cs: &CanopyStructure,
    g: &ViewGeometry,
    soil: &Spectrum,
) -> Result<Spectrum, CanopyError> {
    if soil.grid() != leaf.reflectance.grid() {
        return Err(CanopyError::GridMismatch);
    }
    let op = SailOperator::new(cs, g)?;
    let grid = leaf.reflectance.grid();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        out.push(op.brf(
            leaf.reflectance.values()[i],
            leaf.transmittance.values()[i],
            soil.values()[i],
        )?);
    }
    Ok(Spectrum::new(grid, out)?)
}
