use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use brolin::equilibrium::{energy, sample_julia, SamplerConfig};
use brolin::harmonic::{default_delta, label_grid, sample_harmonic, BBox, HarmonicConfig};
use brolin::io::{
    emit_raster, map_to_json, parse_map_file, points_csv, sample_field, trace_csv, write_text, Config, ReportEnvelope,
    ToleranceSet,
};
use brolin::lemniscate::{
    claim_checks, composition_identity_residual, normalization_constant, trace_level_set, NormalizedLemniscate,
};
use brolin::verdict::{
    auto_bbox, classify, dense_witnesses, evaluator_at_depth, infinity_distance, run_suite, run_verdict, suite_csv,
    DELTA_INF,
};
use brolin::{Error, Map, Result};

#[derive(Parser)]
#[command(name = "brolin", version, about = "Potential theory of rational maps")]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file overriding named tolerances.
    #[arg(long, global = true)]
    tol_file: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; the report envelope goes beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the potential `p = G(1, z) - G(0, 1)` on a grid.
    EscapeRate {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, value_parser = parse_pair, default_value = "256,256")]
        grid: (usize, usize),
        #[arg(long, value_parser = parse_bbox, default_value = "-2,-2,2,2", allow_hyphen_values = true)]
        bbox: BBox,
        #[arg(long, default_value_t = 64)]
        depth: usize,
    },
    /// Backward-orbit sample of the equilibrium measure.
    JuliaSample {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 30)]
        burn_in: usize,
    },
    /// Walk-on-spheres sample of harmonic measure from infinity.
    HarmonicSample {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, default_value_t = 100_000)]
        walkers: usize,
        #[arg(long, value_parser = parse_pair, default_value = "1024,1024")]
        grid: (usize, usize),
        #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
        bbox: Option<BBox>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Size of the preimage tree used as witnesses.
        #[arg(long, default_value_t = 500_000)]
        tree_points: usize,
    },
    /// Trace the normalized lemniscate of `(cF)^n`.
    Lemniscate {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
        bbox: Option<BBox>,
        #[arg(long, value_parser = parse_pair, default_value = "256,256")]
        grid: (usize, usize),
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Add the claim statistics to the report.
        #[arg(long)]
        checks: bool,
    },
    /// Algebraic flags: polynomial, square polynomial, special form, exceptional set.
    Classify {
        #[command(flatten)]
        map: MapArg,
    },
    /// Full pipeline on one map.
    Verdict {
        #[command(flatten)]
        map: MapArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Full pipeline on the built-in calibration maps.
    Suite {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MapArg {
    /// Map JSON: {"numerator": [[re, im], ...], "denominator": [...]}.
    #[arg(long)]
    map: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NY")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn parse_bbox(s: &str) -> std::result::Result<BBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    match v[..] {
        [x0, y0, x1, y1] => BBox::new(x0, y0, x1, y1).map_err(|e| e.to_string()),
        _ => Err("expected X0,Y0,X1,Y1".into()),
    }
}

struct Ctx {
    seed: u64,
    tol: ToleranceSet,
    tol_given: bool,
    seed_given: bool,
    out: Option<PathBuf>,
    started: Instant,
}

impl Ctx {
    fn load_map(&self, m: &MapArg) -> Result<Map> {
        parse_map_file(&m.map, self.tol.map_tolerances())
    }

    /// Writes `body` to `--out` (or stdout) and the envelope beside it.
    fn emit<P: serde::Serialize>(
        &self,
        command: &str,
        config: serde_json::Value,
        body: Option<&str>,
        payload: P,
    ) -> Result<()> {
        let mut env = ReportEnvelope::new(command, config, self.tol, payload);
        env.timings_ms.push(("total".into(), self.started.elapsed().as_millis() as u64));
        match (&self.out, body) {
            (Some(path), Some(text)) => {
                write_text(path, text)?;
                env.write(&envelope_path(path))
            }
            (Some(path), None) => env.write(path),
            (None, Some(text)) => {
                print!("{text}");
                eprintln!("{}", env.to_json());
                Ok(())
            }
            (None, None) => {
                println!("{}", env.to_json());
                Ok(())
            }
        }
    }
}

fn envelope_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn load_config(ctx: &Ctx, path: Option<&Path>) -> Result<Config> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if ctx.tol_given || path.is_none() {
        cfg = Config { out: cfg.out.clone(), ..Config::with_tolerances(cfg.run, ctx.tol) };
    }
    if path.is_none() || ctx.seed_given {
        cfg.run.seed = ctx.seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn witnesses(f: &Map, ctx: &Ctx, samples: usize) -> Result<brolin::measure::EmpiricalMeasure> {
    let cfg = SamplerConfig { n_samples: samples, seed: ctx.seed, ..Default::default() };
    let mu = sample_julia(f, &cfg)?;
    let dist = infinity_distance(&mu);
    if dist <= DELTA_INF {
        return Err(Error::InfinityInJulia { min_distance: dist });
    }
    Ok(mu)
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    let tol = match &cli.tol_file {
        Some(p) => ToleranceSet::load(p)?,
        None => ToleranceSet::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(42),
        tol,
        tol_given: cli.tol_file.is_some(),
        seed_given: cli.seed.is_some(),
        out: cli.out,
        started: Instant::now(),
    };

    match cli.command {
        Command::EscapeRate { map, grid: (nx, ny), bbox, depth } => {
            let f = ctx.load_map(&map)?;
            if nx == 0 || ny == 0 {
                return Err(Error::Validation("grid must be nonempty".into()));
            }
            let ev = evaluator_at_depth(&f, ctx.tol.escape_tol, depth)?;
            let field = sample_field(&bbox, nx, ny, |z| ev.potential(z).unwrap_or(f64::NAN));
            if let Some(k) = field.iter().position(|v| !v.is_finite()) {
                let x = bbox.x0 + ((k % nx) as f64 + 0.5) * bbox.width() / nx as f64;
                let y = bbox.y0 + ((k / nx) as f64 + 0.5) * bbox.height() / ny as f64;
                ev.potential(brolin::Complex64::new(x, y))?;
                return Err(Error::Validation(format!("potential is not finite at {x} + {y}i")));
            }
            let config = json!({ "map": map_to_json(&f), "grid": [nx, ny], "bbox": bbox, "depth": depth });
            let mut payload = json!({ "base_height": ev.base_height(), "tol": ev.tol() });
            match &ctx.out {
                Some(path) if path.extension().is_some_and(|e| e == "pgm") => {
                    let scale = emit_raster(&field, nx, ny, path)?;
                    payload["min"] = json!(scale.min);
                    payload["max"] = json!(scale.max);
                    let env = ReportEnvelope::new("escape-rate", config, ctx.tol, payload);
                    env.write(&envelope_path(path))?;
                }
                _ => {
                    let (hx, hy) = (bbox.width() / nx as f64, bbox.height() / ny as f64);
                    let mut csv = String::from("x,y,p\n");
                    for (k, p) in field.iter().enumerate() {
                        let x = bbox.x0 + ((k % nx) as f64 + 0.5) * hx;
                        let y = bbox.y0 + ((k / nx) as f64 + 0.5) * hy;
                        csv.push_str(&format!("{x:e},{y:e},{p:e}\n"));
                    }
                    ctx.emit("escape-rate", config, Some(&csv), payload)?;
                }
            }
        }
        Command::JuliaSample { map, samples, burn_in } => {
            let f = ctx.load_map(&map)?;
            let cfg = SamplerConfig { n_samples: samples, burn_in, seed: ctx.seed, full_tree_depth: 0 };
            let mu = sample_julia(&f, &cfg)?;
            let payload = json!({ "points": mu.len(), "infinity_distance": infinity_distance(&mu) });
            let config = json!({ "map": map_to_json(&f), "samples": samples, "burn_in": burn_in, "seed": ctx.seed });
            ctx.emit("julia-sample", config, Some(&points_csv(&mu)), payload)?;
        }
        Command::HarmonicSample { map, walkers, grid: (nx, ny), bbox, samples, tree_points } => {
            let f = ctx.load_map(&map)?;
            let mu = witnesses(&f, &ctx, samples)?;
            let dense = dense_witnesses(&f, &mu, tree_points)?;
            let bbox = bbox.unwrap_or_else(|| auto_bbox(&mu));
            let grid = label_grid(&dense, bbox, nx, ny, default_delta(&bbox, nx, ny))?;
            let hc = HarmonicConfig { n_walkers: walkers, seed: ctx.seed, ..Default::default() };
            let sample = sample_harmonic(&grid, &hc)?;
            let s = sample.walker_stats;
            let payload = json!({
                "mean_steps": s.mean_steps,
                "max_steps": s.max_steps,
                "abandoned": s.abandoned,
                "R_launch": s.r_launch,
                "eps_hit": s.eps_hit,
                "delta": s.delta,
            });
            let config = json!({
                "map": map_to_json(&f), "walkers": walkers, "grid": [nx, ny], "bbox": bbox,
                "samples": samples, "tree_points": tree_points, "seed": ctx.seed,
            });
            ctx.emit("harmonic-sample", config, Some(&points_csv(&sample.hits)), payload)?;
        }
        Command::Lemniscate { map, order, bbox, grid: (nx, ny), samples, checks } => {
            let f = ctx.load_map(&map)?;
            let ev = evaluator_at_depth(&f, ctx.tol.escape_tol, brolin::escape::DEFAULT_MAX_DEPTH)?;
            let mu = witnesses(&f, &ctx, samples)?;
            let i = energy(&mu, &ev)?;
            let c = normalization_constant(&ev, i)?;
            let l = NormalizedLemniscate::new(&f, c, order)?;
            let bbox = bbox.unwrap_or_else(|| auto_bbox(&mu));
            let trace = trace_level_set(&l, bbox, nx, ny)?;
            let mut payload = json!({
                "c": c,
                "order": order,
                "energy": i,
                "polylines": trace.polylines.len(),
                "vertices": trace.vertex_count(),
                "max_vertex_error": trace.max_vertex_error,
            });
            if checks {
                let first = l.with_order(1)?;
                let t1 = if order == 1 { trace.clone() } else { trace_level_set(&first, bbox, nx, ny)? };
                let t2 = match trace_level_set(&first.with_order(2)?, bbox, nx, ny) {
                    Ok(t) => Some(t),
                    Err(Error::EmptyLevelSet) => None,
                    Err(e) => return Err(e),
                };
                let cc = claim_checks(&f, &first, &mu, Some(&t1), t2.as_ref(), &ev, i)?;
                payload["checks"] = json!(cc);
                payload["composition_residual"] = json!(composition_identity_residual(&f, c, ctx.seed)?);
            }
            let config = json!({
                "map": map_to_json(&f), "order": order, "bbox": bbox, "grid": [nx, ny],
                "samples": samples, "checks": checks, "seed": ctx.seed,
            });
            ctx.emit("lemniscate", config, Some(&trace_csv(&trace)), payload)?;
        }
        Command::Classify { map } => {
            let f = ctx.load_map(&map)?;
            let algebraic = classify(&f)?;
            let exceptional: Vec<serde_json::Value> = f
                .exceptional_set()?
                .iter()
                .map(|p| match p.to_affine() {
                    Some(z) => json!([z.re, z.im]),
                    None => json!("inf"),
                })
                .collect();
            let payload = json!({ "d": f.degree(), "algebraic": algebraic, "exceptional_set": exceptional });
            ctx.emit("classify", json!({ "map": map_to_json(&f) }), None, payload)?;
        }
        Command::Verdict { map, config } => {
            let cfg = load_config(&ctx, config.as_deref())?;
            let f = parse_map_file(&map.map, cfg.tolerances.map_tolerances())?;
            let id = map.map.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned());
            let report = run_verdict(&id, &f, &cfg.run);
            let code = report.stage_failure.as_ref().map_or(0, |s| s.exit_code);
            let out = ctx.out.clone().or(cfg.out.clone());
            let mut env = ReportEnvelope::new("verdict", cfg.echo(), cfg.tolerances, report);
            env.timings_ms = env.payload.timings_ms.clone();
            match out {
                Some(path) => env.write(&path)?,
                None => println!("{}", env.to_json()),
            }
            return Ok(code);
        }
        Command::Suite { config } => {
            let cfg = load_config(&ctx, config.as_deref())?;
            let reports = run_suite(&cfg.run);
            let csv = suite_csv(&reports, cfg.run.tau_spread);
            let ctx = Ctx { out: ctx.out.clone().or(cfg.out.clone()), ..ctx };
            ctx.emit("suite", cfg.echo(), Some(&csv), reports)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
