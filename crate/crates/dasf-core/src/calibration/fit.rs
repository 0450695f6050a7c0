//! Nonlinear least-squares refit of the exponential DC model.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::estimators::DcModelCoefficients;

use super::{CalibrationError, TrainingRecord};

const MAX_ITERATIONS: usize = 500;
const RELATIVE_RMSE_TOL: f64 = 1e-9;

/// Convergence report of a DC-model fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitReport {
    pub rmse: f64,
    /// coefficient of determination against the oracle corrections
    pub r2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_records: usize,
}

struct Cloud {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

/// Sorted copy of the observables so the reduction order (and hence the
/// result, bit for bit) does not depend on record order.
fn cloud(records: &[TrainingRecord]) -> Result<Cloud, CalibrationError> {
    if records.len() < 50 {
        return Err(CalibrationError::TooFewRecords { need: 50, got: records.len() });
    }
    let mut rows: Vec<(f64, f64, f64)> =
        records.iter().map(|r| (r.brf710, r.brf2260, r.dc0)).collect();
    rows.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
    });
    let cloud = Cloud {
        x: rows.iter().map(|r| r.0).collect(),
        y: rows.iter().map(|r| r.1).collect(),
        d: rows.iter().map(|r| r.2).collect(),
    };
    for (name, series) in [("brf710", &cloud.x), ("brf2260", &cloud.y)] {
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if var < 1e-12 {
            return Err(CalibrationError::DegenerateSpread(name));
        }
    }
    Ok(cloud)
}

fn sse(cloud: &Cloud, c: &DcModelCoefficients) -> f64 {
    let mut acc = 0.0;
    for i in 0..cloud.x.len() {
        let e = (c.c1 * cloud.x[i] + c.c2 * cloud.y[i] + c.c3).exp();
        let r = cloud.d[i] - (e + c.c4);
        acc += r * r;
    }
    acc
}

fn r2_against_targets(cloud: &Cloud, residual_ss: f64) -> f64 {
    let n = cloud.d.len() as f64;
    let mean = cloud.d.iter().sum::<f64>() / n;
    let ss_tot: f64 = cloud.d.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if ss_tot > 0.0 {
        1.0 - residual_ss / ss_tot
    } else {
        1.0
    }
}

/// Fits `dc0 ~ exp(c1*brf710 + c2*brf2260 + c3) + c4` by damped
/// Gauss-Newton from `init`, minimizing the root mean square error.
///
/// Accepted steps never increase the objective; convergence is declared
/// when the relative RMSE change drops below 1e-9. On non-convergence the
/// best coefficients so far are reported inside the error.
pub fn fit_dc_model(
    records: &[TrainingRecord],
    init: DcModelCoefficients,
) -> Result<(DcModelCoefficients, FitReport), CalibrationError> {
    let cloud = cloud(records)?;
    let n = cloud.x.len();
    let mut c = init;
    let mut current_sse = sse(&cloud, &c);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // residuals and normal equations
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for i in 0..n {
            let e = (c.c1 * cloud.x[i] + c.c2 * cloud.y[i] + c.c3).exp();
            let r = cloud.d[i] - (e + c.c4);
            let j = Vector4::new(-cloud.x[i] * e, -cloud.y[i] * e, -e, -1.0);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = DcModelCoefficients {
                c1: c.c1 + step[0],
                c2: c.c2 + step[1],
                c3: c.c3 + step[2],
                c4: c.c4 + step[3],
            };
            let trial_sse = sse(&cloud, &trial);
            if trial_sse.is_finite() && trial_sse < current_sse {
                let rel = (current_sse.sqrt() - trial_sse.sqrt()) / current_sse.sqrt().max(1e-300);
                c = trial;
                current_sse = trial_sse;
                lambda = (lambda / 10.0).max(1e-12);
                if rel < RELATIVE_RMSE_TOL {
                    converged = true;
                }
                accepted = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            // no downhill step available: treat the current point as final
            converged = true;
        }
        if converged {
            break;
        }
    }

    let rmse = (current_sse / n as f64).sqrt();
    let report = FitReport {
        rmse,
        r2: r2_against_targets(&cloud, current_sse),
        iterations,
        converged,
        n_records: n,
    };
    if !converged {
        return Err(CalibrationError::NonConvergence { iterations, rmse });
    }
    Ok((c, report))
}

/// Two-stage alternative: for a trial offset `c4`, the inner linear
/// combination and scale come from ordinary least squares of
/// `ln(dc0 - c4)` on (brf710, brf2260, 1); the offset is then chosen by
/// golden-section search on the full-model RMSE.
pub fn fit_dc_model_two_stage(
    records: &[TrainingRecord],
) -> Result<(DcModelCoefficients, FitReport), CalibrationError> {
    let cloud = cloud(records)?;
    let n = cloud.x.len();
    let d_min = cloud.d.iter().cloned().fold(f64::MAX, f64::min);

    let solve_inner = |c4: f64| -> Option<DcModelCoefficients> {
        // weighted OLS in log space
        let mut ata = [[0.0f64; 3]; 3];
        let mut atb = [0.0f64; 3];
        for i in 0..n {
            let z = cloud.d[i] - c4;
            if z <= 0.0 {
                return None;
            }
            let row = [cloud.x[i], cloud.y[i], 1.0];
            let target = z.ln();
            for a in 0..3 {
                for b in 0..3 {
                    ata[a][b] += row[a] * row[b];
                }
                atb[a] += row[a] * target;
            }
        }
        let m = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
        let v = nalgebra::Vector3::new(atb[0], atb[1], atb[2]);
        let sol = m.lu().solve(&v)?;
        Some(DcModelCoefficients { c1: sol[0], c2: sol[1], c3: sol[2], c4 })
    };

    let objective = |c4: f64| -> f64 {
        solve_inner(c4).map_or(f64::INFINITY, |c| sse(&cloud, &c))
    };

    // golden-section over the offset below the smallest target
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (d_min - 0.5, d_min - 1e-6);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (objective(a), objective(b));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = objective(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = objective(b);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let c4 = 0.5 * (lo + hi);
    let c = solve_inner(c4).ok_or(CalibrationError::NonConvergence {
        iterations: 200,
        rmse: f64::INFINITY,
    })?;
    let final_sse = sse(&cloud, &c);
    let report = FitReport {
        rmse: (final_sse / n as f64).sqrt(),
        r2: r2_against_targets(&cloud, final_sse),
        iterations: 200,
        converged: true,
        n_records: n,
    };
    Ok((c, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaf::LeafBiochem;
    use approx::assert_abs_diff_eq;

    fn record(brf710: f64, brf2260: f64, dc0: f64) -> TrainingRecord {
        TrainingRecord {
            leaf: LeafBiochem::reference(),
            brf710,
            brf2260,
            dc0,
            dasf0: 0.5,
            k: 0.6,
            b: 0.2,
        }
    }

    fn synthetic_cloud(c: &DcModelCoefficients, noise: f64, seed: u64) -> Vec<TrainingRecord> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                let x = 0.02 + 0.016 * i as f64;
                let y = 0.02 + 0.007 * j as f64;
                let clean = (c.c1 * x + c.c2 * y + c.c3).exp() + c.c4;
                let eps: f64 = rng.sample(rand_distr::StandardNormal);
                out.push(record(x, y, clean + noise * eps));
            }
        }
        out
    }

    #[test]
    fn recovers_generator_exactly_on_noiseless_cloud() {
        let truth = DcModelCoefficients::default();
        let records = synthetic_cloud(&truth, 0.0, 1);
        let init = DcModelCoefficients { c1: 5.0, c2: -5.0, c3: -2.0, c4: 0.0 };
        let (c, report) = fit_dc_model(&records, init).unwrap();
        assert!(report.rmse < 1e-10, "rmse {}", report.rmse);
        assert_abs_diff_eq!(c.c1, truth.c1, epsilon = 1e-6);
        assert_abs_diff_eq!(c.c2, truth.c2, epsilon = 1e-6);
        assert_abs_diff_eq!(c.c3, truth.c3, epsilon = 1e-6);
        assert_abs_diff_eq!(c.c4, truth.c4, epsilon = 1e-6);
        assert!(report.converged);
    }

    #[test]
    fn noisy_cloud_keeps_high_r2_against_clean_component() {
        let truth = DcModelCoefficients::default();
        let noisy = synthetic_cloud(&truth, 0.005, 2);
        let (c, _) = fit_dc_model(&noisy, DcModelCoefficients::default()).unwrap();
        // score the fitted model against the clean component
        let clean = synthetic_cloud(&truth, 0.0, 2);
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        let mean = clean.iter().map(|r| r.dc0).sum::<f64>() / clean.len() as f64;
        for r in &clean {
            let pred = (c.c1 * r.brf710 + c.c2 * r.brf2260 + c.c3).exp() + c.c4;
            ss_res += (pred - r.dc0) * (pred - r.dc0);
            ss_tot += (r.dc0 - mean) * (r.dc0 - mean);
        }
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 >= 0.95, "r2 {r2}");
    }

    #[test]
    fn order_invariant() {
        let truth = DcModelCoefficients::default();
        let records = synthetic_cloud(&truth, 0.003, 3);
        let mut shuffled = records.clone();
        shuffled.reverse();
        shuffled.swap(7, 91);
        let init = DcModelCoefficients { c1: 8.0, c2: -12.0, c3: -3.0, c4: 0.0 };
        let (a, _) = fit_dc_model(&records, init).unwrap();
        let (b, _) = fit_dc_model(&shuffled, init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_records_rejected() {
        let records: Vec<_> = (0..10).map(|i| record(0.1 + 0.01 * i as f64, 0.05, 0.01)).collect();
        assert!(matches!(
            fit_dc_model(&records, DcModelCoefficients::default()),
            Err(CalibrationError::TooFewRecords { .. })
        ));
    }

    #[test]
    fn degenerate_spread_rejected() {
        let records: Vec<_> = (0..60).map(|_| record(0.1, 0.05, 0.01)).collect();
        assert!(matches!(
            fit_dc_model(&records, DcModelCoefficients::default()),
            Err(CalibrationError::DegenerateSpread(_))
        ));
    }

    #[test]
    fn two_stage_recovers_generator_on_noiseless_cloud() {
        let truth = DcModelCoefficients::default();
        let records = synthetic_cloud(&truth, 0.0, 4);
        let (c, report) = fit_dc_model_two_stage(&records).unwrap();
        assert!(report.rmse < 1e-7, "rmse {}", report.rmse);
        assert_abs_diff_eq!(c.c1, truth.c1, epsilon = 1e-3);
        assert_abs_diff_eq!(c.c2, truth.c2, epsilon = 1e-3);
    }
}
