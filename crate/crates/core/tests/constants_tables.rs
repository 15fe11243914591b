use levy_drift_core::analyzer::{
    c_tot_envelope, closed_constants, combine_c_ker, combine_c_tot, KerRegime, TotRegime,
};
use levy_drift_core::kernels::{a_big, a_small};
use levy_drift_core::ConeSpec;
use proptest::prelude::*;

#[test]
fn pinned_closed_constants() {
    let (s, b) = closed_constants(0.5, 0.9, 0.75).unwrap();
    // 0.9² is not representable, so equality holds up to rounding
    assert!((s - -0.026875).abs() <= 4.0 * f64::EPSILON * 0.026875, "{s:e}");
    assert_eq!(b, -0.125);
}

#[test]
fn cone_bounds_are_enforced() {
    // eps_small must exceed 1/sqrt(2 - p)
    let lo = 1.0 / (2.0f64 - 0.5).sqrt();
    assert!(ConeSpec::new(0.5, lo, 0.75).is_err());
    assert!(ConeSpec::new(0.5, lo + 1e-9, 0.75).is_ok());
    assert!(ConeSpec::new(0.5, 0.9, 0.5).is_err());
    assert!(ConeSpec::new(0.5, 0.9, 1.0).is_err());
    assert!(ConeSpec::new(0.5, 1.0, 0.75).is_err());
}

fn valid_pair() -> impl Strategy<Value = (f64, f64, f64)> {
    (1e-3f64..0.999).prop_flat_map(|p| {
        let lo = 1.0 / (2.0 - p).sqrt();
        (Just(p), (lo + 1e-9)..1.0, (0.5 + 1e-9)..1.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_constants_are_negative((p, es, eb) in valid_pair()) {
        let (s, b) = closed_constants(p, es, eb).unwrap();
        prop_assert!(s < 0.0, "a_small({p}, {es}) = {s}");
        prop_assert!(b < 0.0, "a_big({p}, {eb}) = {b}");
        prop_assert_eq!(s, a_small(p, es));
        prop_assert_eq!(b, a_big(p, eb));
    }
}

fn regime() -> impl Strategy<Value = KerRegime> {
    prop_oneof![
        Just(KerRegime::SmallDominates),
        Just(KerRegime::BigDominates),
        Just(KerRegime::Comparable)
    ]
}

proptest! {
    /// With both sums negative every branch of the table stays negative, and
    /// the comparable branch lies between the two sums' scaled values.
    #[test]
    fn ker_table_preserves_negativity(
        s in -1.0f64..-1e-3, b in -1.0f64..-1e-3,
        c_inf in 0.0f64..10.0, spread in 0.0f64..10.0, reg in regime(),
    ) {
        let c_sup = c_inf + spread;
        let c = combine_c_ker(s, 0.0, b, 0.0, c_inf, c_sup, reg, 1e-9).unwrap();
        prop_assert!(c < 0.0);
        prop_assert!(c >= s.min(b) - 1e-12);
    }

    #[test]
    fn ker_table_is_a_mixture_for_equal_ratios(
        s in -1.0f64..1.0, b in -1.0f64..1.0, k in 0.0f64..50.0,
    ) {
        prop_assume!(s.abs() > 1e-6 && b.abs() > 1e-6);
        let c = combine_c_ker(s, 0.0, b, 0.0, k, k, KerRegime::Comparable, 1e-9).unwrap();
        let mix = s / (1.0 + k) + b * k / (1.0 + k);
        prop_assert!((c - mix).abs() <= 1e-12);
    }

    /// The comparable-regime value never exceeds the worst corner of the ratio
    /// box, which is what the envelope reports.
    #[test]
    fn tot_table_below_envelope(
        ck in -1.0f64..1.0, cd in -1.0f64..1.0,
        c_inf in 0.0f64..10.0, spread in 0.0f64..10.0,
    ) {
        prop_assume!(cd.abs() > 1e-6);
        let c_sup = c_inf + spread;
        let c = combine_c_tot(ck, cd, c_inf, c_sup, TotRegime::Comparable, 1e-9).unwrap();
        let env = c_tot_envelope(ck, cd, c_inf, c_sup);
        prop_assert!(c <= env + 1e-12);
        // the envelope itself is attained on the box
        let mut best = f64::NEG_INFINITY;
        for i in 0..=20 {
            for j in 0..=20 {
                let s = c_inf + spread * i as f64 / 20.0;
                let t = c_inf + spread * j as f64 / 20.0;
                best = best.max(ck / (1.0 + s) + cd * t / (1.0 + t));
            }
        }
        prop_assert!((best - env).abs() <= 1e-12 * (1.0 + env.abs()));
    }

    #[test]
    fn dominant_branches_pass_through(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        prop_assert_eq!(combine_c_ker(a, 0.0, b, 0.0, 0.0, 0.0, KerRegime::SmallDominates, 0.0).unwrap(), a);
        prop_assert_eq!(combine_c_ker(a, 0.0, b, 0.0, 0.0, 0.0, KerRegime::BigDominates, 0.0).unwrap(), b);
        prop_assert_eq!(combine_c_tot(a, b, 0.0, 0.0, TotRegime::KerDominates, 0.0).unwrap(), a);
        prop_assert_eq!(combine_c_tot(a, b, 0.0, 0.0, TotRegime::DriftDominates, 0.0).unwrap(), b);
    }
}

#[test]
fn invalid_ratio_box_is_inconclusive() {
    assert!(combine_c_ker(-0.1, 0.0, -0.1, 0.0, 2.0, 1.0, KerRegime::Comparable, 1e-9).is_err());
    assert!(combine_c_ker(-0.1, 0.0, -0.1, 0.0, -1.0, 1.0, KerRegime::Comparable, 1e-9).is_err());
    assert!(combine_c_tot(-0.1, -0.1, 0.0, f64::INFINITY, TotRegime::Comparable, 1e-9).is_err());
}
