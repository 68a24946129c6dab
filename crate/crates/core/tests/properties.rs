//! Property tests over randomized parameters and uncertainties.

use proptest::prelude::*;

use rpf_core::model::{
    build_dual_homodyne_measurement, build_homodyne_measurement, build_process_model,
    frequency_response, realize_plant, Delta, ResonantParams, UncertaintyModel,
};
use rpf_core::solvers::is_hurwitz;

fn params_strategy() -> impl Strategy<Value = ResonantParams> {
    (
        -10.0f64..10.0,
        1e-3f64..1.5,
        prop_oneof![1e-1f64..1e2, 1e2f64..1e5],
    )
        .prop_map(|(kappa, zeta, omega_r)| ResonantParams {
            kappa,
            zeta,
            omega_r,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn plant_matrix_is_hurwitz_for_positive_damping(p in params_strategy()) {
        let m = build_process_model(&p).unwrap();
        prop_assert!(is_hurwitz(&m.a));
    }

    #[test]
    fn resonance_lift_is_inverse_two_zeta(
        kappa in 0.1f64..10.0,
        zeta in 1e-4f64..0.01,
        omega_r in 1.0f64..1e5,
    ) {
        // |G(j omega_r)| / |G(0)| = 1/(2 zeta) exactly; checked in dB.
        let p = ResonantParams { kappa, zeta, omega_r };
        let resp = frequency_response(&p, &[0.0, omega_r]).unwrap();
        let lift = resp[1].0 - resp[0].0;
        let expect = 20.0 * (1.0 / (2.0 * zeta)).log10();
        prop_assert!((lift - expect).abs() < 0.01, "lift {lift} vs {expect}");
    }

    #[test]
    fn zero_uncertainty_levels_leave_the_plant_unchanged(
        p in params_strategy(),
        d1 in -1.0f64..1.0,
        d2 in -1.0f64..1.0,
    ) {
        prop_assume!(d1 * d1 + d2 * d2 <= 1.0);
        let m = build_process_model(&p).unwrap();
        let unc = UncertaintyModel::new(&p, 0.0, 0.0).unwrap();
        let d = Delta::new(d1, d2).unwrap();
        let realized = realize_plant(&m, &unc, &d).unwrap();
        prop_assert_eq!(realized.a, m.a);
    }

    #[test]
    fn realized_plant_is_affine_in_delta(
        p in params_strategy(),
        mu1 in 0.0f64..0.999,
        mu2 in 0.0f64..0.999,
        d1 in -0.7f64..0.7,
        d2 in -0.7f64..0.7,
    ) {
        prop_assume!(d1 * d1 + d2 * d2 <= 1.0);
        let m = build_process_model(&p).unwrap();
        let unc = UncertaintyModel::new(&p, mu1, mu2).unwrap();
        let d = Delta::new(d1, d2).unwrap();
        let realized = realize_plant(&m, &unc, &d).unwrap();
        // Entry (2,1) linear in d1 with slope -mu1 omega_r^2; entry (2,2)
        // linear in d2 with slope -2 mu2 zeta omega_r; row 1 untouched.
        let s1 = -mu1 * p.omega_r * p.omega_r;
        let s2 = -2.0 * mu2 * p.zeta * p.omega_r;
        let scale1 = m.a[(1, 0)].abs().max(s1.abs()).max(1e-300);
        let scale2 = m.a[(1, 1)].abs().max(s2.abs()).max(1e-300);
        prop_assert!(((realized.a[(1, 0)] - m.a[(1, 0)]) - s1 * d1).abs() <= 1e-12 * scale1);
        prop_assert!(((realized.a[(1, 1)] - m.a[(1, 1)]) - s2 * d2).abs() <= 1e-12 * scale2);
        prop_assert_eq!(realized.a[(0, 0)], m.a[(0, 0)]);
        prop_assert_eq!(realized.a[(0, 1)], m.a[(0, 1)]);
    }

    #[test]
    fn dual_homodyne_noise_is_exactly_twice_homodyne(alpha in 1e-3f64..1e12) {
        let single = build_homodyne_measurement(alpha).unwrap();
        let dual = build_dual_homodyne_measurement(alpha).unwrap();
        prop_assert_eq!(dual.jsj() / single.jsj(), 2.0);
    }

    #[test]
    fn delta_constraint_is_the_closed_unit_disc(d1 in -2.0f64..2.0, d2 in -2.0f64..2.0) {
        let inside = d1 * d1 + d2 * d2 <= 1.0;
        prop_assert_eq!(Delta::new(d1, d2).is_ok(), inside);
    }
}
