//! Property tests for the algebraic invariants.

use dasf_core::estimators::{regress_brf, AlbedoReference};
use dasf_core::leaf::{albedo_from_fundamental, fundamental_from_albedo};
use dasf_core::spectral::{linear_fit, BandWindow, Spectrum, WavelengthGrid};
use proptest::prelude::*;

fn window_spectrum(lo: f64, amp: f64, bend: f64) -> Spectrum {
    Spectrum::from_fn(WavelengthGrid::default(), move |nm| {
        let t = (nm as f64 - 400.0) / 2100.0;
        lo + amp * (t + bend * t * t) / (1.0 + bend)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_fit_is_exact_on_affine_data(
        slope in -10.0f64..10.0,
        intercept in -5.0f64..5.0,
        xs in proptest::collection::vec(-100.0f64..100.0, 3..40),
    ) {
        let spread = xs.iter().cloned().fold(f64::MIN, f64::max)
            - xs.iter().cloned().fold(f64::MAX, f64::min);
        prop_assume!(spread > 0.1);
        let ys: Vec<f64> = xs.iter().map(|&x| slope * x + intercept).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9 * (1.0 + slope.abs()));
        prop_assert!((fit.intercept - intercept).abs() < 1e-8 * (1.0 + intercept.abs()));
        prop_assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn linear_fit_invariant_to_pair_order(
        pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..30),
        seed in 0u64..1000,
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / n;
        prop_assume!(var > 1e-6);

        let mut shuffled = pairs.clone();
        // deterministic permutation from the seed
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let xs2: Vec<f64> = shuffled.iter().map(|p| p.0).collect();
        let ys2: Vec<f64> = shuffled.iter().map(|p| p.1).collect();

        let a = linear_fit(&xs, &ys).unwrap();
        let b = linear_fit(&xs2, &ys2).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-9);
        prop_assert!((a.intercept - b.intercept).abs() < 1e-9);
    }

    #[test]
    fn slice_then_at_equals_at(
        lo in 0.05f64..0.9,
        amp in 0.01f64..0.09,
        nm_off in 0u32..81,
    ) {
        let s = window_spectrum(lo, amp, 0.3);
        let sub = s.slice_band(BandWindow::default()).unwrap();
        let nm = 710 + nm_off;
        prop_assert_eq!(s.at(nm).unwrap(), sub.at(nm).unwrap());
    }

    #[test]
    fn fundamental_term_roundtrips(
        p_leaf in 0.0f64..0.99,
        lo in 0.05f64..0.5,
        amp in 0.05f64..0.45,
        bend in 0.0f64..2.0,
    ) {
        let albedo = window_spectrum(lo, amp, bend);
        let f = fundamental_from_albedo(&albedo, p_leaf).unwrap();
        let back = albedo_from_fundamental(&f);
        for (&a, &b) in back.values().iter().zip(albedo.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(f.w_leaf.values().iter().all(|&w| w > 0.0 && w <= 1.0 + 1e-12));
    }

    #[test]
    fn regression_fixed_point_recovers_forward_params(
        rho_i0 in 0.11f64..0.59,
        p in 0.31f64..0.89,
        q in 0.0f64..0.75,
        lo in 0.3f64..0.6,
        amp in 0.2f64..0.39,
        bend in 0.0f64..3.0,
    ) {
        prop_assume!(rho_i0 / (1.0 - p) <= 1.5);
        let omega = window_spectrum(lo, amp, bend);
        let slope = q + p * (1.0 - q);
        let brf = omega.map(|w| rho_i0 * (1.0 - q) * w / (1.0 - slope * w));
        let reg = regress_brf(&brf, &omega, BandWindow::default(), AlbedoReference::ReferenceAlbedo)
            .unwrap();
        let dasf = reg.b / (1.0 - reg.k);
        prop_assert!((dasf - rho_i0 / (1.0 - p)).abs() < 1e-9);
    }
}
