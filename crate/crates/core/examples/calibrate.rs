//! Recomputes the spread threshold and the equality band.
//!
//! Runs the suite at every reference setting and prints one line per run
//! plus the derived constants. The output is checked in as
//! `calibration/tau_spread.log`.
//!
//! ```text
//! cargo run --release -p brolin --example calibrate > calibration/tau_spread.log
//! ```

use brolin::verdict::{run_suite, VerdictConfig, CALIBRATION_VERSION, EQUALITY_BAND, TAU_SPREAD};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let quick = args.iter().any(|a| a == "--quick");
    let seeds: &[u64] = if quick { &[42] } else { &[42, 7] };
    let sizes: &[usize] = if quick { &[10_000] } else { &[10_000, 100_000] };
    let depths: &[usize] = if quick { &[64] } else { &[32, 64] };

    let mut worst_spread = 0.0f64;
    let mut worst_disc = 0.0f64;
    let mut nonequality = Vec::new();
    println!("seed,samples,depth,map_id,is_square_poly,spread,discrepancy,energy,status,seconds");
    for &seed in seeds {
        for &samples in sizes {
            for &depth in depths {
                let cfg = VerdictConfig { seed, samples, depth, ..Default::default() };
                let start = std::time::Instant::now();
                let reports = run_suite(&cfg);
                let secs = start.elapsed().as_secs_f64() / reports.len() as f64;
                for r in &reports {
                    let sq = r.algebraic.as_ref().map(|a| a.is_square_poly);
                    let spread = r.spread.map(|s| s.spread).unwrap_or(f64::NAN);
                    let disc = r.harmonic_discrepancy.unwrap_or(f64::NAN);
                    println!(
                        "{seed},{samples},{depth},{},{:?},{spread:.6e},{disc:.6e},{:.6e},{:?},{secs:.1}",
                        r.map_id,
                        sq,
                        r.energy.unwrap_or(f64::NAN),
                        r.stage_failure.as_ref().map_or(format!("{:?}", r.status), |s| s.error.clone()),
                    );
                    if sq == Some(true) {
                        worst_spread = worst_spread.max(spread);
                        worst_disc = worst_disc.max(disc);
                    } else {
                        nonequality.push((spread, disc));
                    }
                }
            }
        }
    }
    println!("# max equality-case spread      {worst_spread:.6e}");
    println!("# tau_spread = 3 x max           {:.6e}", 3.0 * worst_spread);
    println!("# max equality-case discrepancy {worst_disc:.6e}");
    for (s, d) in nonequality {
        println!("# non-equality spread {s:.6e} discrepancy {d:.6e}");
    }
    println!("# frozen {CALIBRATION_VERSION}: TAU_SPREAD = {TAU_SPREAD:e}, EQUALITY_BAND = {EQUALITY_BAND:e}");
}
