use brolin::equilibrium::{sample_julia, SamplerConfig};
use brolin::harmonic::{
    default_delta, exterior_probes, frostman_residual, label_grid, sample_harmonic, witness_probes, CellLabel,
    GridLabeling, HarmonicConfig, HarmonicSample,
};
use brolin::measure::{ks_uniform, EmpiricalMeasure};
use brolin::verdict::{auto_bbox, dense_witnesses, suite_maps};
use brolin::Complex64;

fn witnesses(id: &str) -> (EmpiricalMeasure, EmpiricalMeasure) {
    let f = suite_maps().into_iter().find(|(n, _)| *n == id).unwrap().1;
    let mu = sample_julia(&f, &SamplerConfig::default()).unwrap();
    let dense = dense_witnesses(&f, &mu, 500_000).unwrap();
    (mu, dense)
}

fn grid(id: &str, n: usize) -> GridLabeling {
    let (mu, dense) = witnesses(id);
    let bbox = auto_bbox(&mu);
    label_grid(&dense, bbox, n, n, default_delta(&bbox, n, n)).unwrap()
}

fn run(g: &GridLabeling, cfg: HarmonicConfig) -> HarmonicSample {
    sample_harmonic(g, &cfg).unwrap()
}

#[test]
fn bounded_fatou_components_are_not_basin() {
    let g = grid("z^2-1", 256);
    let at = |z: Complex64| g.labels()[g.cell_of(z).unwrap()];
    assert_eq!(at(Complex64::new(0.0, 0.0)), CellLabel::Complement);
    assert_eq!(at(Complex64::new(-1.0, 0.0)), CellLabel::Complement);
    assert_eq!(at(Complex64::new(0.0, 1.2)), CellLabel::DInf);

    let g = grid("1/z^2", 256);
    let at = |z: Complex64| g.labels()[g.cell_of(z).unwrap()];
    assert_eq!(at(Complex64::new(0.0, 0.0)), CellLabel::Complement);
    assert_eq!(at(Complex64::new(0.5, -0.3)), CellLabel::Complement);
    assert_eq!(at(Complex64::new(1.4, 0.0)), CellLabel::DInf);
}

#[test]
fn hits_are_conserved_and_supported() {
    let g = grid("z^2-1", 512);
    let n = 20_000;
    let s = run(&g, HarmonicConfig { n_walkers: n, ..Default::default() });
    assert_eq!(s.hits.len() + s.walker_stats.abandoned, n);
    assert!((s.walker_stats.abandoned as f64) < 1e-3 * n as f64);
    let reach = g.delta() + s.walker_stats.eps_hit;
    for &z in s.hits.points() {
        let (d, _) = g.nearest_witness_with_distance(z).unwrap();
        assert!(d <= reach, "hit {z} is {d} from the witnesses");
    }
}

#[test]
fn circle_hits_are_uniform() {
    let g = grid("1/z^2", 512);
    let s = run(&g, HarmonicConfig::default());
    let angles: Vec<f64> =
        s.hits.points().iter().map(|z| (z.arg() + std::f64::consts::PI) / std::f64::consts::TAU).collect();
    let ks = ks_uniform(&angles);
    assert!(ks < 0.01, "KS {ks}");
}

fn angle_histogram(hits: &EmpiricalMeasure, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for (z, w) in hits.iter() {
        let t = (z.arg() + std::f64::consts::PI) / std::f64::consts::TAU;
        h[((t * bins as f64) as usize).min(bins - 1)] += w;
    }
    h
}

#[test]
fn launch_radius_does_not_matter() {
    let g = grid("z^2-1", 512);
    let a = run(&g, HarmonicConfig::default());
    let rho = a.walker_stats.r_launch;
    let b = run(&g, HarmonicConfig { r_launch: Some(2.0 * rho), ..Default::default() });
    let (ha, hb) = (angle_histogram(&a.hits, 32), angle_histogram(&b.hits, 32));
    let tv = 0.5 * ha.iter().zip(&hb).map(|(x, y)| (x - y).abs()).sum::<f64>();
    assert!(tv < 3e-2, "total variation {tv}");
}

#[test]
fn frostman_holds_and_improves_with_the_grid() {
    let (mu, dense) = witnesses("z^2-1");
    let bbox = auto_bbox(&mu);
    let probes = witness_probes(&dense, 100);
    let mut devs = Vec::new();
    for n in [512usize, 1024] {
        let g = label_grid(&dense, bbox, n, n, default_delta(&bbox, n, n)).unwrap();
        let s = run(&g, HarmonicConfig::default());
        let h = 0.5 * g.cell_diagonal();
        let r = frostman_residual(&s.hits, &probes, &exterior_probes(&g, 64), h);
        assert!(r.min_margin > 0.0);
        devs.push(r.max_dev);
    }
    assert!(devs[0] < 0.05, "{devs:?}");
    assert!((devs[1] - devs[0]).abs() < 0.5 * devs[0], "{devs:?}");
}
