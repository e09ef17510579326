use proptest::prelude::*;
use thicklab::geometry::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn covering_is_sound(r in 0.5f64..2.0, eps in 0.2f64..1.0, half in 3.0f64..12.0) {
        let rho = DensityFn::power(r, eps);
        let cov = covering_generate(&rho, &Bounds::interval(-half, half)).unwrap();
        let rep = cov.verify(2000);
        prop_assert!(rep.covered && rep.disjoint);
        prop_assert!(rep.max_multiplicity as u64 <= overlap_bound(1));
    }

    #[test]
    fn covering_2d_is_sound(r in 1.0f64..2.0) {
        let rho = DensityFn::power(r, 0.5);
        let cov = covering_generate(&rho, &Bounds::cube(2, -3.0, 3.0)).unwrap();
        let rep = cov.verify(60);
        prop_assert!(rep.covered && rep.disjoint && rep.max_multiplicity as u64 <= overlap_bound(2));
    }

    #[test]
    fn thickness_monotone_in_set(period in 1.0f64..4.0, frac in 0.2f64..0.8, grow in 0.01f64..0.2, radius in 0.5f64..3.0) {
        let small = ControlSet::periodic(1, period, frac, 0.0).unwrap();
        let big = ControlSet::periodic(1, period, (frac + grow).min(1.0), 0.0).unwrap();
        let rho = DensityFn::constant(radius);
        let centers = sample_centers(&small, &Bounds::interval(-10.0, 10.0), 60).unwrap();
        let q = QuadSpec::default();
        let a = thickness_estimate(&small, &rho, &centers, &q).unwrap();
        let b = thickness_estimate(&big, &rho, &centers, &q).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            prop_assert!(x <= &(y + 1e-9));
        }
    }

    #[test]
    fn measure_bounded_by_ball(c in -5.0f64..5.0, r in 0.1f64..4.0) {
        let omega = ControlSet::balls(2, vec![(vec![0.0, 0.0], 1.5), (vec![2.0, 1.0], 0.7)]).unwrap();
        let m = intersection_measure(&omega, &[c, 0.5], r, &QuadSpec::default()).unwrap();
        prop_assert!(m >= -1e-12 && m <= ball_volume(2, r) * (1.0 + 1e-6));
    }
}
