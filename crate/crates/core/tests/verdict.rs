use brolin::equilibrium::{energy, sample_julia, SamplerConfig};
use brolin::escape::EscapeRateEvaluator;
use brolin::lemniscate::{lemniscate_value, normalization_constant, trace_level_set, NormalizedLemniscate};
use brolin::maps::RationalMap;
use brolin::poly::Poly;
use brolin::verdict::{
    auto_bbox, discrepancy_probes, evaluator_at_depth, julia_potential_spread, measure_discrepancy, run_verdict,
    suite_maps, Status, VerdictConfig, VerdictReport, TAU_SPREAD,
};
use brolin::Complex64;

fn suite(id: &str) -> RationalMap {
    suite_maps().into_iter().find(|(n, _)| *n == id).unwrap().1
}

fn verdict(id: &str) -> VerdictReport {
    run_verdict(id, &suite(id), &VerdictConfig::default())
}

#[test]
fn basilica_is_consistent() {
    let r = verdict("z^2-1");
    assert!(r.algebraic.as_ref().unwrap().is_square_poly);
    assert!(r.spread.unwrap().spread < 0.02);
    assert_eq!(r.status, Status::Consistent);
    assert!(r.consistent);
    assert!(r.lemniscate.is_none());
}

#[test]
fn special_form_map_is_consistent() {
    let r = verdict("2/(z-1)^3+1");
    let a = r.algebraic.as_ref().unwrap();
    assert!(!a.is_poly && a.is_square_poly);
    let (coef, shift) = a.special_form.unwrap();
    assert!((coef[0] - 2.0).abs() < 1e-9 && coef[1].abs() < 1e-9);
    assert!((shift[0] - 1.0).abs() < 1e-9 && shift[1].abs() < 1e-9);
    assert!(r.spread.unwrap().spread < TAU_SPREAD);
    assert!(r.consistent);

    let l = r.lemniscate.unwrap();
    assert!(l.composition_residual < 1e-10);
    let c = l.checks.unwrap();
    assert!(c.julia_containment < 0.02, "{c:?}");
    for v in [Some(c.julia_containment), c.level_coincidence, c.forward_invariance, c.doubling] {
        assert!(v.unwrap() < 5e-3, "{c:?}");
    }
}

#[test]
fn non_square_map_separates() {
    let r = verdict("(z^3+0.1)/z");
    assert!(!r.algebraic.as_ref().unwrap().is_square_poly);
    assert!(r.spread.unwrap().spread > 5.0 * TAU_SPREAD);
    assert_eq!(r.status, Status::Consistent);
    let l = r.lemniscate.unwrap();
    assert!(l.composition_residual < 1e-10);
    assert!(l.checks.unwrap().julia_containment > 0.05);
}

#[test]
fn lattes_map_is_refused() {
    // (z^2 + 1)^2 / (4 z (z^2 - 1)): Julia set is the whole sphere
    let f =
        RationalMap::new(Poly::from_real(&[1.0, 0.0, 2.0, 0.0, 1.0]), Poly::from_real(&[0.0, -4.0, 0.0, 4.0])).unwrap();
    let r = run_verdict("lattes", &f, &VerdictConfig::default());
    assert_eq!(r.infinity_in_fatou, Some(false));
    assert_eq!(r.status, Status::Refused);
    assert_eq!(r.stage_failure.unwrap().stage, "fatou_check");
}

#[test]
fn reports_are_reproducible() {
    let cfg = VerdictConfig { grid: (256, 256), walkers: 20_000, tree_points: 50_000, ..Default::default() };
    let f = suite("(z^3+0.1)/z");
    let mut a = run_verdict("m", &f, &cfg);
    let mut b = run_verdict("m", &f, &cfg);
    a.timings_ms.clear();
    b.timings_ms.clear();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn spread_examples() {
    for (id, bound) in [("z^2-1", 0.02), ("1/z^2", 0.02)] {
        let f = suite(id);
        let mu = sample_julia(&f, &SamplerConfig::default()).unwrap();
        let ev = EscapeRateEvaluator::new(f.lift()).unwrap();
        let s = julia_potential_spread(&ev, &mu).unwrap();
        assert!(s.spread >= 0.0 && s.spread < bound, "{id}: {s:?}");
    }
}

#[test]
fn identical_clouds_have_zero_discrepancy() {
    let mu = sample_julia(&suite("z^2-1"), &SamplerConfig::default()).unwrap();
    let probes = discrepancy_probes(&mu, &mu, Complex64::new(0.0, 0.0));
    assert_eq!(measure_discrepancy(&mu, &mu, &probes), 0.0);
}

#[test]
fn circle_lemniscate() {
    let f = suite("1/z^2");
    let ev = EscapeRateEvaluator::new(f.lift()).unwrap();
    let mu = sample_julia(&f, &SamplerConfig::default()).unwrap();
    let i = energy(&mu, &ev).unwrap();
    let c = normalization_constant(&ev, i).unwrap();
    assert!((c - 1.0).abs() < 1e-3, "c = {c}");

    // rescaling the lift by 2 moves c by 2^-1 and keeps G^{cF}(0, 1) at -I
    let ev2 = EscapeRateEvaluator::new(&f.lift().scaled(Complex64::new(2.0, 0.0))).unwrap();
    let c2 = normalization_constant(&ev2, i).unwrap();
    assert!((c2 * 2.0 - c).abs() < 1e-9, "{c2} vs {c}");

    let l = NormalizedLemniscate::new(&f, c, 1).unwrap();
    let trace = trace_level_set(&l, auto_bbox(&mu), 256, 256).unwrap();
    assert!(trace.vertex_count() > 100);
    for v in trace.vertices() {
        assert!((lemniscate_value(&l, v) - 1.0).abs() < 1e-3);
        assert!((v.norm() - 1.0).abs() < 1e-3);
    }
}

fn spread_at(f: &RationalMap, samples: usize, depth: usize) -> f64 {
    let mu = sample_julia(f, &SamplerConfig { n_samples: samples, ..Default::default() }).unwrap();
    let ev = evaluator_at_depth(f, 1e-12, depth).unwrap();
    julia_potential_spread(&ev, &mu).unwrap().spread
}

#[test]
fn threshold_matches_the_algebra_across_the_suite() {
    for (id, f) in suite_maps() {
        let square = f.is_square_polynomial().unwrap();
        assert_eq!(spread_at(&f, 10_000, 64) < TAU_SPREAD, square, "{id}");
    }
}

#[test]
fn refinement_is_monotone() {
    // equality-case spreads sit at the rounding floor of the escape-rate
    // series, so the 20% slack gets an absolute floor of 1e-9
    for (id, f) in suite_maps() {
        let coarse = spread_at(&f, 10_000, 32);
        let fine = spread_at(&f, 100_000, 64);
        if f.is_square_polynomial().unwrap() {
            assert!(fine <= 1.2 * coarse + 1e-9, "{id}: {coarse:e} -> {fine:e}");
        } else {
            assert!(fine >= 0.5 * coarse, "{id}: {coarse:e} -> {fine:e}");
        }
    }
}
