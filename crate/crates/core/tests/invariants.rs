use brolin::escape::EscapeRateEvaluator;
use brolin::io::{encode_pgm, map_to_json, parse_map_str};
use brolin::maps::{ProjectivePoint, RationalMap, Tolerances};
use brolin::poly::Poly;
use brolin::verdict::suite_maps;
use brolin::Complex64;
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b))
}

/// A rational map of degree 2 to 4, skipping near-degenerate draws.
fn rational_map() -> impl Strategy<Value = RationalMap> {
    (2usize..=4, 0usize..=4)
        .prop_flat_map(|(d, dd)| {
            let dd = dd.min(d);
            (prop::collection::vec(coeff(), d + 1), prop::collection::vec(coeff(), dd + 1), Just(d), Just(dd))
        })
        .prop_filter_map("degenerate map", |(mut num, mut den, d, dd)| {
            if num[d].norm() < 0.2 {
                num[d] = Complex64::new(1.0, 0.0);
            }
            if den[dd].norm() < 0.2 {
                den[dd] = Complex64::new(1.0, 0.0);
            }
            RationalMap::new(Poly::new(num), Poly::new(den)).ok()
        })
}

fn unit_point() -> impl Strategy<Value = ProjectivePoint> {
    (coeff(), coeff()).prop_filter_map("zero vector", |(a, b)| ProjectivePoint::new(a, b).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fibers_have_total_multiplicity_d(f in rational_map(), a in unit_point()) {
        let fiber = f.preimages(&a).unwrap();
        prop_assert_eq!(fiber.total_multiplicity(), f.degree());
        for (p, _) in fiber.iter() {
            let image = f.evaluate(p).unwrap();
            prop_assert!(image.chordal_distance(&a) < 1e-6, "f(p) = {:?} vs {:?}", image, a);
        }
    }

    #[test]
    fn composed_lift_is_evaluate_twice(f in rational_map(), pts in prop::collection::vec(unit_point(), 50)) {
        let lift = f.lift();
        let twice = lift.compose(lift).unwrap();
        for w in pts {
            let (a0, a1) = lift.eval(w.z0(), w.z1());
            let (b0, b1) = lift.eval(a0, a1);
            let (c0, c1) = twice.eval(w.z0(), w.z1());
            let scale = b0.norm().hypot(b1.norm()).max(1e-300);
            prop_assert!((b0 - c0).norm().hypot((b1 - c1).norm()) <= 1e-9 * scale);
        }
    }

    #[test]
    fn exceptional_points_are_totally_invariant(f in rational_map()) {
        let e = f.exceptional_set().unwrap();
        prop_assert!(e.len() <= 2);
        let f2 = f.iterate(2).unwrap();
        for a in &e {
            prop_assert!(f2.preimages(a).unwrap().is_single(a, 1e-6));
        }
    }

    #[test]
    fn square_polynomial_implications(f in rational_map()) {
        if f.is_polynomial() || f.classify_special_form().is_some() {
            prop_assert!(f.is_square_polynomial().unwrap());
        }
    }

    #[test]
    fn rebuilding_from_the_lift_is_stable(f in rational_map()) {
        let g = RationalMap::from_lift(f.lift(), *f.tolerances()).unwrap();
        let tau = f.tolerances().gcd;
        for (a, b) in g.lift().f0().iter().zip(f.lift().f0()).chain(g.lift().f1().iter().zip(f.lift().f1())) {
            prop_assert!((a - b).norm() <= tau);
        }
    }

    #[test]
    fn truncation_stays_inside_tail_bound(f in rational_map(), w in unit_point(), k in 3usize..30) {
        let ev = EscapeRateEvaluator::new(f.lift()).unwrap();
        let a = ev.escape_rate_truncated(w.z0(), w.z1(), k).unwrap();
        let b = ev.escape_rate_truncated(w.z0(), w.z1(), k + 8).unwrap();
        prop_assert!((a - b).abs() <= ev.tail_bound(k) + 1e-13);
    }

    #[test]
    fn potential_ignores_lift_scale(f in rational_map(), z in coeff()) {
        let ev = EscapeRateEvaluator::new(f.lift()).unwrap();
        let p = ev.potential(z).unwrap();
        for c in [Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)] {
            let scaled = EscapeRateEvaluator::new(&f.lift().scaled(c)).unwrap();
            let q = scaled.potential(z).unwrap();
            prop_assert!((p - q).abs() <= 2.0 * ev.tol() + 1e-12, "{} vs {}", p, q);
        }
    }

    #[test]
    fn map_json_round_trips(f in rational_map()) {
        let g = parse_map_str(&map_to_json(&f), Tolerances::default()).unwrap();
        prop_assert_eq!(f.numerator(), g.numerator());
        prop_assert_eq!(f.denominator(), g.denominator());
        let h = parse_map_str(&map_to_json(&g), Tolerances::default()).unwrap();
        prop_assert_eq!(map_to_json(&g), map_to_json(&h));
    }

    #[test]
    fn pgm_is_deterministic(values in prop::collection::vec(-1e3f64..1e3, 12)) {
        let (a, sa) = encode_pgm(&values, 4, 3).unwrap();
        let (b, sb) = encode_pgm(&values, 4, 3).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(sa, sb);
    }
}

#[test]
fn potential_approaches_log_modulus() {
    for (id, f) in suite_maps() {
        let ev = EscapeRateEvaluator::new(f.lift()).unwrap();
        let errs: Vec<f64> = [1e3, 1e4, 1e5]
            .iter()
            .map(|&r| {
                let z = Complex64::from_polar(r, 0.7);
                (ev.potential(z).unwrap() - r.ln()).abs()
            })
            .collect();
        // non-increasing down to rounding
        assert!(errs[1] <= errs[0] + 1e-12 && errs[2] <= errs[1] + 1e-12, "{id}: {errs:?}");
        assert!(errs[2] < 1e-2, "{id}: {errs:?}");
    }
}

#[test]
fn functional_residuals_for_the_suite() {
    for (id, f) in suite_maps() {
        let ev = EscapeRateEvaluator::new(f.lift()).unwrap();
        let r = ev.functional_equation_residuals(100, 42).unwrap();
        assert!(r.max() < 1e-8, "{id}: {r:?}");
    }
}
