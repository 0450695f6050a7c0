//! Truncated correlated-normal sampling of leaf biochemistry.
//!
//! Constituent order everywhere: (cab, car, lma, ewt). Truncation is by
//! rejection and redraw rather than clipping, so the marginals are
//! truncated normals and the correlation targets survive.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::leaf::LeafBiochem;

use super::{CalibrationError, SyntheticLeafSet};

const REDRAW_CAP: usize = 1000;
const GREEN_LEAF_CAB_FLOOR: f64 = 10.0;

/// Mean, standard deviation and truncation bounds of one constituent in its
/// native units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatRange {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl StatRange {
    fn validate(&self, name: &str) -> Result<(), CalibrationError> {
        if !(self.min < self.max && self.std > 0.0 && (self.min..=self.max).contains(&self.mean))
        {
            return Err(CalibrationError::BadStats(format!(
                "{name}: mean {}, std {}, range [{}, {}]",
                self.mean, self.std, self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Distribution parameters of the four sampled constituents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstituentStats {
    pub cab: StatRange,
    pub car: StatRange,
    pub lma: StatRange,
    pub ewt: StatRange,
}

impl Default for ConstituentStats {
    /// Default leaf population: chlorophyll/carotenoid/water statistics of
    /// the ANGERS-style experimental pool, dry matter spanning broadleaf
    /// through sclerophyll values.
    fn default() -> Self {
        Self {
            cab: StatRange { mean: 42.0, std: 15.0, min: 0.3, max: 106.7 },
            car: StatRange { mean: 9.5, std: 4.3, min: 0.0, max: 25.3 },
            lma: StatRange { mean: 0.0090, std: 0.0036, min: 0.0010, max: 0.0331 },
            ewt: StatRange { mean: 0.0130, std: 0.0050, min: 0.0010, max: 0.0340 },
        }
    }
}

impl ConstituentStats {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        self.cab.validate("cab")?;
        self.car.validate("car")?;
        self.lma.validate("lma")?;
        self.ewt.validate("ewt")
    }

    fn ranges(&self) -> [StatRange; 4] {
        [self.cab, self.car, self.lma, self.ewt]
    }
}

/// Symmetric positive semi-definite correlation matrix over
/// (cab, car, lma, ewt).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix(pub [[f64; 4]; 4]);

impl Default for CorrelationMatrix {
    fn default() -> Self {
        Self([
            [1.00, 0.85, 0.19, 0.19],
            [0.85, 1.00, 0.42, 0.26],
            [0.19, 0.42, 1.00, 0.63],
            [0.19, 0.26, 0.63, 1.00],
        ])
    }
}

impl CorrelationMatrix {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self(m)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let m = &self.0;
        for i in 0..4 {
            if (m[i][i] - 1.0).abs() > 1e-12 {
                return Err(CalibrationError::BadCorrelation("diagonal must be 1".into()));
            }
            for j in 0..i {
                if (m[i][j] - m[j][i]).abs() > 1e-12 {
                    return Err(CalibrationError::BadCorrelation("must be symmetric".into()));
                }
                if m[i][j].abs() > 1.0 {
                    return Err(CalibrationError::BadCorrelation(format!(
                        "entry {} out of [-1, 1]",
                        m[i][j]
                    )));
                }
            }
        }
        let eig = Matrix4::from_fn(|i, j| m[i][j]).symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
            return Err(CalibrationError::BadCorrelation(
                "not positive semi-definite".into(),
            ));
        }
        Ok(())
    }

    /// Symmetric square root of the implied covariance for the given
    /// per-constituent standard deviations.
    fn covariance_sqrt(&self, stds: [f64; 4]) -> Result<Matrix4<f64>, CalibrationError> {
        self.validate()?;
        let cov = Matrix4::from_fn(|i, j| self.0[i][j] * stds[i] * stds[j]);
        let eig = cov.symmetric_eigen();
        let mut d = Matrix4::zeros();
        for i in 0..4 {
            d[(i, i)] = eig.eigenvalues[i].max(0.0).sqrt();
        }
        Ok(eig.eigenvectors * d * eig.eigenvectors.transpose())
    }
}

/// Draws `n` leaves from the truncated correlated normal, then drops
/// non-green leaves (chlorophyll below 10 ug/cm^2). Deterministic in `seed`.
pub fn sample_leaves(
    stats: &ConstituentStats,
    corr: &CorrelationMatrix,
    n: usize,
    seed: u64,
) -> Result<SyntheticLeafSet, CalibrationError> {
    stats.validate()?;
    let ranges = stats.ranges();
    let means = Vector4::new(ranges[0].mean, ranges[1].mean, ranges[2].mean, ranges[3].mean);
    let sqrtm =
        corr.covariance_sqrt([ranges[0].std, ranges[1].std, ranges[2].std, ranges[3].std])?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaves = Vec::with_capacity(n);
    for _ in 0..n {
        let mut accepted = None;
        for _ in 0..REDRAW_CAP {
            let z = Vector4::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let x = means + sqrtm * z;
            let ok = (0..4).all(|i| (ranges[i].min..=ranges[i].max).contains(&x[i]));
            if ok {
                accepted = Some(x);
                break;
            }
        }
        let x = accepted.ok_or(CalibrationError::RejectionCap(REDRAW_CAP))?;
        if x[0] >= GREEN_LEAF_CAB_FLOOR {
            leaves.push(LeafBiochem {
                n_struct: 1.5,
                cab: x[0],
                car: x[1],
                anth: 0.0,
                brown: 0.0,
                ewt: x[3],
                lma: x[2],
            });
        }
    }
    let n_retained = leaves.len();
    Ok(SyntheticLeafSet { leaves, seed, n_requested: n, n_retained })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_correlation(leaves: &[LeafBiochem]) -> [[f64; 4]; 4] {
        let cols: Vec<Vec<f64>> = vec![
            leaves.iter().map(|l| l.cab).collect(),
            leaves.iter().map(|l| l.car).collect(),
            leaves.iter().map(|l| l.lma).collect(),
            leaves.iter().map(|l| l.ewt).collect(),
        ];
        let n = leaves.len() as f64;
        let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n).collect();
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut sij = 0.0;
                let mut sii = 0.0;
                let mut sjj = 0.0;
                for k in 0..leaves.len() {
                    let a = cols[i][k] - means[i];
                    let b = cols[j][k] - means[j];
                    sij += a * b;
                    sii += a * a;
                    sjj += b * b;
                }
                out[i][j] = sij / (sii * sjj).sqrt();
            }
        }
        out
    }

    #[test]
    fn deterministic_under_seed() {
        let stats = ConstituentStats::default();
        let corr = CorrelationMatrix::default();
        let a = sample_leaves(&stats, &corr, 300, 7).unwrap();
        let b = sample_leaves(&stats, &corr, 300, 7).unwrap();
        assert_eq!(a.leaves, b.leaves);
        let c = sample_leaves(&stats, &corr, 300, 8).unwrap();
        assert_ne!(a.leaves, c.leaves);
    }

    #[test]
    fn retained_set_is_green_and_bounded() {
        let stats = ConstituentStats::default();
        let set = sample_leaves(&stats, &CorrelationMatrix::default(), 500, 11).unwrap();
        assert!(set.n_retained <= set.n_requested);
        for leaf in &set.leaves {
            assert!(leaf.cab >= 10.0);
            assert!(leaf.cab <= stats.cab.max);
            assert!((stats.car.min..=stats.car.max).contains(&leaf.car));
            assert!((stats.lma.min..=stats.lma.max).contains(&leaf.lma));
            assert!((stats.ewt.min..=stats.ewt.max).contains(&leaf.ewt));
            assert_eq!(leaf.anth, 0.0);
            assert_eq!(leaf.brown, 0.0);
        }
    }

    #[test]
    fn sample_correlations_track_targets() {
        let set = sample_leaves(
            &ConstituentStats::default(),
            &CorrelationMatrix::default(),
            2000,
            42,
        )
        .unwrap();
        let got = sample_correlation(&set.leaves);
        let want = CorrelationMatrix::default().0;
        for i in 0..4 {
            for j in 0..4 {
                // truncation plus the green-leaf cut shift correlations a
                // little; +-0.05 covers the sampling and truncation error
                assert!(
                    (got[i][j] - want[i][j]).abs() < 0.05,
                    "corr[{i}][{j}] = {:.3}, target {:.3}",
                    got[i][j],
                    want[i][j]
                );
            }
        }
    }

    #[test]
    fn identity_correlation_gives_near_zero_cross_terms() {
        let set = sample_leaves(
            &ConstituentStats::default(),
            &CorrelationMatrix::identity(),
            2000,
            3,
        )
        .unwrap();
        let got = sample_correlation(&set.leaves);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(got[i][j].abs() < 0.05, "corr[{i}][{j}] = {:.3}", got[i][j]);
                }
            }
        }
    }

    #[test]
    fn retained_means_near_configured_means() {
        let stats = ConstituentStats::default();
        let set = sample_leaves(&stats, &CorrelationMatrix::default(), 2000, 9).unwrap();
        let n = set.n_retained as f64;
        // cab is cut at 10, so check the unconstrained constituents
        let mean_ewt = set.leaves.iter().map(|l| l.ewt).sum::<f64>() / n;
        assert!((mean_ewt - stats.ewt.mean).abs() < 3.0 * stats.ewt.std / n.sqrt() + 0.002);
    }

    #[test]
    fn non_psd_correlation_rejected() {
        let mut m = CorrelationMatrix::identity();
        m.0[0][1] = 0.99;
        m.0[1][0] = 0.99;
        m.0[0][2] = 0.99;
        m.0[2][0] = 0.99;
        m.0[1][2] = -0.9;
        m.0[2][1] = -0.9;
        assert!(m.validate().is_err());
        assert!(sample_leaves(&ConstituentStats::default(), &m, 10, 1).is_err());
    }

    #[test]
    fn infeasible_bounds_hit_rejection_cap() {
        let mut stats = ConstituentStats::default();
        // essentially unreachable acceptance window
        stats.cab = StatRange { mean: 33.9, std: 1000.0, min: 33.9 - 1e-9, max: 33.9 + 1e-9 };
        assert!(matches!(
            sample_leaves(&stats, &CorrelationMatrix::identity(), 5, 1),
            Err(CalibrationError::RejectionCap(_))
        ));
    }
}
