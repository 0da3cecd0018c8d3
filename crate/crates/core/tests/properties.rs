use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use wm_core::cf_dynamics::{cf_expand, gauss_map, CFExpansion};
use wm_core::cotangent::{c0, RationalPoint};
use wm_core::special_fn::{
    bernoulli1, bernoulli2, f_bounded, g_wilton_plus_h, phi2_bounded, phi2_rational,
};
use wm_core::wilton::ell;
use wm_core::ToleranceConfig;

fn to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap()
}

fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut a, mut b) = (a.clone(), b.clone());
    while b != BigUint::ZERO {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn irrational_point() -> impl Strategy<Value = f64> {
    (1e-6f64..1.0 - 1e-6).prop_filter("not dyadic-short", |x| (x * 1024.0).fract() != 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn convergents_approximate_the_point(x in irrational_point()) {
        let cfg = ToleranceConfig::default();
        let exp = cf_expand(x, 12, &cfg).unwrap();
        for k in 0..exp.convergents.len().saturating_sub(1) {
            let c = &exp.convergents[k];
            let q_next = to_f64(&exp.convergents[k + 1].denominator);
            let q = to_f64(&c.denominator);
            if q * q_next > 1e9 {
                break;
            }
            let err = (x - to_f64(&c.numerator) / q).abs();
            prop_assert!(err <= 1.0 / (q * q_next) * (1.0 + 1e-6), "k={k} err={err}");
        }
    }

    #[test]
    fn convergents_are_reduced(x in irrational_point()) {
        let cfg = ToleranceConfig::default();
        let exp = cf_expand(x, 30, &cfg).unwrap();
        for c in &exp.convergents {
            prop_assert_eq!(gcd(&c.numerator, &c.denominator), BigUint::from(1u32));
        }
    }

    #[test]
    fn betas_halve_every_two_steps(x in irrational_point()) {
        let cfg = ToleranceConfig::default();
        let exp = cf_expand(x, 30, &cfg).unwrap();
        for k in 0..exp.depth.saturating_sub(2) {
            let k = k as isize;
            prop_assert!(exp.beta(k + 2) < exp.beta(k) / 2.0);
        }
    }

    #[test]
    fn expansion_round_trips_through_json(x in irrational_point()) {
        let cfg = ToleranceConfig::default();
        let exp = cf_expand(x, 8, &cfg).unwrap();
        let text = serde_json::to_string(&exp).unwrap();
        let back: CFExpansion = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.partial_quotients, exp.partial_quotients);
        prop_assert_eq!(back.convergents, exp.convergents);
        prop_assert_eq!(back.betas, exp.betas);
    }

    #[test]
    fn bernoulli_ranges(t in -1e3f64..1e3) {
        let b1 = bernoulli1(t);
        let b2 = bernoulli2(t);
        prop_assert!((-0.5..0.5).contains(&b1));
        prop_assert!((-1.0 / 12.0 - 1e-15..=1.0 / 6.0 + 1e-15).contains(&b2));
    }

    #[test]
    fn phi2_is_periodic_and_bounded(p in 0u64..500, q in 1u64..500) {
        let bound = std::f64::consts::PI.powi(2) / 36.0 + 1e-12;
        let a = phi2_rational(p, q);
        let b = phi2_rational(p + q, q);
        prop_assert!((a - b).abs() < 1e-13);
        prop_assert!(a.abs() <= bound);
    }

    #[test]
    fn phi2_bounded_respects_its_error(x in 0.0f64..50.0) {
        let v = phi2_bounded(x, 1e-6);
        prop_assert!(v.error <= 1e-6);
        prop_assert!(v.value.abs() <= std::f64::consts::PI.powi(2) / 36.0 + v.error);
    }

    #[test]
    fn c0_is_antisymmetric(b in 3u64..3000, r in 1u64..3000) {
        let r = r % b;
        prop_assume!(r != 0 && gcd_u64(r, b) == 1);
        let s = c0(RationalPoint::new(r, b).unwrap()) + c0(RationalPoint::new(b - r, b).unwrap());
        prop_assert!(s.abs() < 1e-9 * b as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn g_satisfies_first_step_identity(x in 0.02f64..0.98) {
        let cfg = ToleranceConfig::default();
        let tol = 1e-6;
        let (Ok(a), Ok(gx)) = (gauss_map(x), g_wilton_plus_h(x, &cfg, tol)) else {
            return Err(TestCaseError::reject("effectively rational"));
        };
        let Ok(ga) = g_wilton_plus_h(a, &cfg, tol) else {
            return Err(TestCaseError::reject("effectively rational"));
        };
        let f = f_bounded(x, tol).unwrap();
        let rhs = ell(x).unwrap() - 2.0 * f.value - x * ga.value;
        // α(x) carries a rounding error of order ulp(1/x).
        let slack = gx.est_error + x * ga.est_error + 2.0 * f.error + 1e-8;
        prop_assert!((gx.value - rhs).abs() < slack, "diff {}", (gx.value - rhs).abs());
    }
}
