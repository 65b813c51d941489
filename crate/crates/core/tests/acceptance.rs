//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances are the constants below.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use nullmetric::cli::{execute, ExperimentConfig, Pipeline, Report};
use nullmetric::convergence::{holder_fit, lower_bound_check, sample_points, uniform_distance};
use nullmetric::examples::{disk_integral, ExampleId, Family, GluedPoint, GluedSpace, DEFAULT_SPLINE_LAMBDA};
use nullmetric::geodesic::{diameter, distance_matrix, DistanceMatrix, Graph, PointId};
use nullmetric::manifold::{conformal_reduce, disk_mesh, MetricField, StaticSpacetime};
use nullmetric::nulldist::{null_distance_matrix, null_distance_oracle, GridParams, SpacetimeGrid, SpacetimePoint};
use nullmetric::swif::{area_factor, flat_bound, z_distance, FlatBoundInputs, ZPoint, ZSpace};
use nullmetric::FixedLength;

const AXIOM_TRIPLES: usize = 10_000;
const GEODESIC_REL: f64 = 0.02;
const ORACLE_REL: f64 = 0.03;
const TRANSFER_ABS: f64 = 1e-12;
const HOLDER_ABS: f64 = 1e-9;
const LOWER_ABS: f64 = 1e-8;
const CONSTANT_DIGITS: f64 = 1e-12;
const FLAT_BOUND_DIGITS: f64 = 1e-6;
const SANDWICH_REL: f64 = 0.03;
const SPLINE_VOLUME_REL: f64 = 0.05;
const SPLINE_NORM_GROWTH: f64 = 10.0;
const SPLINE_GH_FLOOR: f64 = 0.02;
const TRIALS: usize = 200;
const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: nullmetric::Error) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------

/// Zero diagonal, symmetry and the triangle inequality on random triples,
/// compared in fixed point so that nothing is forgiven.
fn triple_violations(d: &DistanceMatrix, rng: &mut ChaCha8Rng) -> usize {
    let n = d.len();
    (0..AXIOM_TRIPLES)
        .filter(|_| {
            let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            d.fixed(a, a) != FixedLength::ZERO
                || d.fixed(a, b) != d.fixed(b, a)
                || d.fixed(a, c) > d.fixed(a, b) + d.fixed(b, c)
        })
        .count()
}

fn metric_axioms() -> Outcome {
    let mut rng = common::rng(SEED);
    let family = Family::new(ExampleId::SpaceCollapse, 1);
    let mesh = Arc::new(family.mesh(10.0).map_err(err)?);
    let sigma = conformal_reduce(&family.spacetime(10.0, mesh.clone()).map_err(err)?).sigma;
    let samples = sample_points(mesh.len(), 60, SEED);
    let spatial = distance_matrix(&mesh, &sigma, &samples).map_err(err)?;
    let points: Vec<SpacetimePoint> = (0..=4)
        .flat_map(|k| (0..samples.len()).map(move |i| SpacetimePoint::new(k as f64 / 4.0, i)))
        .collect();
    let null = null_distance_matrix(&spatial, &points).map_err(err)?;

    let small = Arc::new(disk_mesh(0).map_err(err)?);
    let g = Graph::from_mesh(&small, &MetricField::identity(&small)).map_err(err)?;
    let ids: Vec<(GluedPoint, GluedPoint)> = (0..8)
        .map(|_| {
            let (a, b) = (rng.random_range(0..small.len()), rng.random_range(0..small.len()));
            (GluedPoint::new(0, a), GluedPoint::new(1, b))
        })
        .collect();
    let glued = GluedSpace::new(&[g.clone(), g], &ids).map_err(err)?;
    let gpts: Vec<GluedPoint> = (0..2)
        .flat_map(|c| (0..small.len()).map(move |v| GluedPoint::new(c, v)))
        .collect();
    let glued_m = glued.matrix(&gpts).map_err(err)?;

    let flat = StaticSpacetime::product(0.0, 1.0, small.clone(), MetricField::identity(&small)).map_err(err)?;
    let grid = SpacetimeGrid::new(
        &flat,
        GridParams {
            time_step: 1.0 / 8.0,
            window: 8,
        },
    )
    .map_err(err)?;
    let levels = grid.time_levels();
    let opts: Vec<SpacetimePoint> = sample_points(small.len() * levels.len(), 24, SEED)
        .into_iter()
        .map(|i| SpacetimePoint::new(levels[i / small.len()], i % small.len()))
        .collect();
    let oracle_m = grid.oracle_matrix(&opts).map_err(err)?;

    let z = ZSpace::new(&grid, &grid, 0.25, 2, vec![true; small.len()]).map_err(err)?;
    let zpts: Vec<ZPoint> = opts
        .iter()
        .take(14)
        .enumerate()
        .map(|(i, &point)| ZPoint {
            point,
            level: i % (z.copy_level() + 1),
        })
        .collect();
    let mut zv = Vec::with_capacity(zpts.len() * zpts.len());
    for &p in &zpts {
        for &q in &zpts {
            zv.push(z.distance_fixed(p, q).map_err(err)?);
        }
    }
    let z_m = DistanceMatrix::from_fixed((0..zpts.len()).map(PointId::vertex).collect(), zv).map_err(err)?;

    let cases = [
        ("spatial", &spatial),
        ("null", &null),
        ("glued", &glued_m),
        ("oracle", &oracle_m),
        ("z", &z_m),
    ];
    let counts: Vec<(&str, usize)> = cases
        .iter()
        .map(|(name, d)| (*name, triple_violations(d, &mut rng)))
        .collect();
    check(
        counts.iter().all(|c| c.1 == 0),
        format!(
            "{AXIOM_TRIPLES} triples per matrix, violations {}",
            counts
                .iter()
                .map(|(n, c)| format!("{n}={c}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

fn flat_geodesics() -> Outcome {
    let mesh = disk_mesh(5).map_err(err)?;
    let picks = sample_points(mesh.len(), 200, SEED);
    let d = distance_matrix(&mesh, &MetricField::identity(&mesh), &picks).map_err(err)?;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let (a, b) = (2 * k, 2 * k + 1);
        let (x, y) = (mesh.coord(picks[a]), mesh.coord(picks[b]));
        let exact = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        if exact > 0.0 {
            worst = worst.max((d.get(a, b) - exact).abs() / exact);
        }
    }
    check(
        worst <= GEODESIC_REL,
        format!(
            "100 pairs on {} vertices, max relative error {worst:.5} (allowed {GEODESIC_REL})",
            mesh.len()
        ),
    )
}

fn oracle_case(st: &StaticSpacetime, level: u32, pairs: usize) -> Result<(f64, usize, f64), String> {
    let spacing = 1.0 / (4u32 << level) as f64;
    let grid = SpacetimeGrid::new(st, GridParams::for_spacing(st, spacing, 32)).map_err(err)?;
    let n = grid.spatial_len();
    let levels = grid.time_levels();
    let cell = grid.cell_size();
    let picks = sample_points(n * levels.len(), 2 * pairs, SEED);
    let at = |i: usize| SpacetimePoint::new(levels[i / n], i % n);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = 0;
    for c in picks.chunks(2) {
        let (p, q) = (at(c[0]), at(c[1]));
        let formula = grid.formula(p, q).map_err(err)?;
        let oracle = null_distance_oracle(&grid, p, q).map_err(err)?;
        let excess = (oracle - formula).abs() - (ORACLE_REL * formula + cell);
        worst_excess = worst_excess.max(excess);
        failures += usize::from(excess > 0.0);
    }
    Ok((worst_excess, failures, cell))
}

fn formula_vs_oracle() -> Outcome {
    let flat = nullmetric::examples::flat_slab(Arc::new(disk_mesh(3).map_err(err)?)).map_err(err)?;
    let family = Family::new(ExampleId::SpaceCollapse, 2);
    let ex31 = family
        .spacetime(10.0, Arc::new(family.mesh(10.0).map_err(err)?))
        .map_err(err)?;
    let (fw, ff, fc) = oracle_case(&flat, 3, 50)?;
    let (ew, ef, ec) = oracle_case(&ex31, 2, 50)?;
    check(
        ff == 0 && ef == 0,
        format!(
            "50 pairs each; flat: {ff} over tolerance, worst margin {fw:+.4} (cell {fc:.4}); \
             collapse j=10: {ef} over, worst margin {ew:+.4} (cell {ec:.4})"
        ),
    )
}

fn conformal_invariance() -> Outcome {
    let j = 10.0;
    let collapse = Family::new(ExampleId::SpaceCollapse, 1);
    let blowup = Family::new(ExampleId::TimeBlowup, 1);
    let mesh = Arc::new(collapse.mesh(j).map_err(err)?);
    let a = collapse.spacetime(j, mesh.clone()).map_err(err)?;
    let b = blowup.spacetime(j, mesh.clone()).map_err(err)?;
    let params = GridParams::for_spacing(&a, 1.0 / 8.0, 16);
    let ga = SpacetimeGrid::new(&a, params).map_err(err)?;
    let gb = SpacetimeGrid::new(&b, params).map_err(err)?;
    let levels = ga.time_levels();
    let n = ga.spatial_len();
    let picks = sample_points(n * levels.len(), 100, SEED);
    let at = |i: usize| SpacetimePoint::new(levels[i / n], i % n);
    let mut differ = 0;
    for c in picks.chunks(2) {
        let (p, q) = (at(c[0]), at(c[1]));
        let x = null_distance_oracle(&ga, p, q).map_err(err)?;
        let y = null_distance_oracle(&gb, p, q).map_err(err)?;
        differ += usize::from(x.to_bits() != y.to_bits());
    }
    check(
        ga.same_as(&gb) && differ == 0,
        format!(
            "grids identical: {}, 50 pairs, {differ} differ bitwise",
            ga.same_as(&gb)
        ),
    )
}

/// Euclidean metric of jittered copies of the same points, so both sides
/// are genuine metrics with a known sup deviation.
fn perturbed_pair(rng: &mut ChaCha8Rng, n: usize) -> (DistanceMatrix, DistanceMatrix) {
    let (pts, d1) = common::random_metric(rng, n);
    let eps: f64 = rng.random_range(0.0..0.2);
    let moved: Vec<[f64; 2]> = pts
        .iter()
        .map(|p| [p[0] + rng.random_range(-eps..=eps), p[1] + rng.random_range(-eps..=eps)])
        .collect();
    let d2 = common::matrix_from(n, |i, k| {
        ((moved[i][0] - moved[k][0]).powi(2) + (moved[i][1] - moved[k][1]).powi(2)).sqrt()
    });
    (d1, d2)
}

fn random_times(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<SpacetimePoint> {
    (0..count)
        .map(|i| SpacetimePoint::new(rng.random_range(0..=16) as f64 / 16.0, i % n))
        .collect()
}

fn deviation_transfer() -> Outcome {
    let mut rng = common::rng(SEED);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..TRIALS {
        let (d1, d2) = perturbed_pair(&mut rng, 16);
        let k = uniform_distance(&d1, &d2).map_err(err)?;
        let pts = random_times(&mut rng, 16, 48);
        let n1 = null_distance_matrix(&d1, &pts).map_err(err)?;
        let n2 = null_distance_matrix(&d2, &pts).map_err(err)?;
        worst = worst.max(uniform_distance(&n1, &n2).map_err(err)? - 2.0 * k);
    }
    check(
        worst <= TRANSFER_ABS,
        format!("{TRIALS} trials, max (null deviation - 2K) = {worst:.3e}"),
    )
}

fn holder_transfer() -> Outcome {
    let mut rng = common::rng(SEED);
    let mut worst = f64::NEG_INFINITY;
    let mut fitted = 0;
    for _ in 0..TRIALS {
        let (_, d0) = common::random_metric(&mut rng, 12);
        let beta: f64 = rng.random_range(0.3..=1.0);
        let scale: f64 = rng.random_range(0.2..3.0);
        let alpha: f64 = rng.random_range(0.2..=1.0);
        let d1 = common::matrix_from(12, |i, k| scale * d0.get(i, k).powf(beta));
        let spatial = holder_fit(&d0, &d1, alpha).map_err(err)?;
        if spatial.unbounded {
            continue;
        }
        fitted += 1;
        let (t0, t1) = (0.0, rng.random_range(0.1..3.0));
        let pts: Vec<SpacetimePoint> = (0..36)
            .map(|i| SpacetimePoint::new(t0 + (t1 - t0) * rng.random::<f64>(), i % 12))
            .collect();
        let n0 = null_distance_matrix(&d0, &pts).map_err(err)?;
        let n1 = null_distance_matrix(&d1, &pts).map_err(err)?;
        let slab = holder_fit(&n0, &n1, alpha).map_err(err)?;
        let bound = spatial.constant.max((t1 - t0).powf(1.0 - alpha));
        worst = worst.max(slab.constant - bound);
    }
    check(
        fitted == TRIALS && worst <= HOLDER_ABS,
        format!("{fitted}/{TRIALS} trials fitted, max (slab C - bound) = {worst:.3e}"),
    )
}

fn lower_bound() -> Outcome {
    let collapse = Family::new(ExampleId::SpaceCollapse, 1);
    let mesh = Arc::new(collapse.mesh(10.0).map_err(err)?);
    let limits = [
        ("flat", MetricField::identity(&mesh)),
        (
            "collapse j=10",
            conformal_reduce(&collapse.spacetime(10.0, mesh.clone()).map_err(err)?).sigma,
        ),
    ];
    let samples = sample_points(mesh.len(), 40, SEED);
    let points: Vec<SpacetimePoint> = (0..=8)
        .flat_map(|k| (0..samples.len()).map(move |i| SpacetimePoint::new(k as f64 / 8.0, i)))
        .collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, sigma) in &limits {
        let dinf =
            null_distance_matrix(&distance_matrix(&mesh, sigma, &samples).map_err(err)?, &points).map_err(err)?;
        let diam = diameter(&dinf);
        for j in [10.0, 100.0] {
            let c = 1.0 - 1.0 / j;
            let dj = distance_matrix(&mesh, &sigma.scaled(c), &samples).map_err(err)?;
            let nj = null_distance_matrix(&dj, &points).map_err(err)?;
            let margin = (1.0 - c.sqrt()) * diam + LOWER_ABS;
            let r = lower_bound_check(&nj, &dinf, margin).map_err(err)?;
            ok &= r.passed;
            lines.push(format!("{name} j={j}: {:.5} <= {:.5}", r.violation, margin));
        }
    }
    check(ok, lines.join("; "))
}

fn constants() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3u32 {
        let omega = PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0 + 1.0);
        let want = 2f64.powi(n as i32) / omega;
        worst = worst.max((area_factor(n).map_err(err)? - want).abs() / want);
    }
    let named = [(1, 1.0), (2, 4.0 / PI), (3, 6.0 / PI)];
    for (n, want) in named {
        worst = worst.max((area_factor(n).map_err(err)? - want).abs() / want);
    }
    let inputs = FlatBoundInputs {
        n: 2,
        v: PI,
        vp: 0.0,
        a: 4.0 * PI,
        h: 0.1,
        delta: 0.0,
    };
    let got = flat_bound(&inputs).map_err(err)?;
    let want = 3.2 / PI + 2.4;
    let rel = (got - want).abs() / want;
    check(
        worst <= CONSTANT_DIGITS && rel <= FLAT_BOUND_DIGITS,
        format!("area factors max relative error {worst:.2e}; flat bound {got:.7} vs {want:.7}"),
    )
}

fn z_sandwich() -> Outcome {
    let j = 10.0;
    let height = 0.2;
    let steps = 4;
    let family = Family::new(ExampleId::SpaceCollapse, 2);
    let mesh = Arc::new(family.mesh(j).map_err(err)?);
    let collapsed = family.spacetime(j, mesh.clone()).map_err(err)?;
    let flat = nullmetric::examples::flat_slab(mesh.clone()).map_err(err)?;
    let params = GridParams::for_spacing(&collapsed, 0.25, 16);
    let g1 = SpacetimeGrid::new(&collapsed, params).map_err(err)?;
    let g2 = SpacetimeGrid::new(&flat, params).map_err(err)?;
    let z = ZSpace::new(&g1, &g2, height, steps, vec![true; mesh.len()]).map_err(err)?;
    let cell = g1.cell_size().max(g2.cell_size());
    let levels = g1.time_levels();
    let n = mesh.len();
    let mut rng = common::rng(SEED);
    let mut worst_low = f64::NEG_INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    let pairs = 60;
    for _ in 0..pairs {
        let mut pick = || {
            let point = SpacetimePoint::new(levels[rng.random_range(0..levels.len())], rng.random_range(0..n));
            ZPoint {
                point,
                level: rng.random_range(0..=z.copy_level()),
            }
        };
        let (p, q) = (pick(), pick());
        let h = |zp: ZPoint| zp.level.min(z.top_level()) as f64 * z.height_step();
        let dh = (h(p) - h(q)).abs();
        let d = z_distance(&z, p, q).map_err(err)?;
        let low = g1.formula(p.point, q.point).map_err(err)? + dh;
        let high = g2.formula(p.point, q.point).map_err(err)? + dh;
        worst_low = worst_low.max(low - d - (SANDWICH_REL * low + cell));
        worst_high = worst_high.max(d - high - (SANDWICH_REL * high + cell));
    }
    check(
        worst_low <= 0.0 && worst_high <= 0.0,
        format!(
            "{pairs} pairs, dt {}, cell {cell:.4}; worst excess below {worst_low:+.4}, above {worst_high:+.4}",
            params.time_step
        ),
    )
}

fn run(target: ExampleId, pipeline: Pipeline, ladder: &[f64]) -> Result<Report, String> {
    let cfg = ExperimentConfig {
        target: Some(target.as_str().into()),
        pipelines: vec![pipeline],
        j_ladder: Some(ladder.to_vec()),
        seed: Some(7),
        ..ExperimentConfig::default()
    };
    let mut reports = execute(&cfg).map_err(err)?;
    Ok(reports.remove(0))
}

fn column(report: &Report, name: &str) -> Vec<f64> {
    report
        .rows
        .iter()
        .map(|r| r[name].as_f64().unwrap_or(f64::NAN))
        .collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",")
}

fn example_endpoints() -> Outcome {
    let lam = DEFAULT_SPLINE_LAMBDA;
    // (a) spline: quadrature oracles, then the library's own quadrature against them
    let vol = common::spline_disk_integral(1e4, lam, 2.0);
    let norm = |j: f64| common::spline_disk_integral(j, lam, 3.0).powf(2.0 / 3.0);
    let growth = norm(1e4) / norm(10.0);
    let family = Family::new(ExampleId::Spline, 1);
    let lib_vol = disk_integral(&family.profile(1e4).map_err(err)?, 2.0);
    let ladder = ExampleId::Spline.default_ladder();
    let swif = column(&run(ExampleId::Spline, Pipeline::Swif, ladder)?, "bound");
    let gh_flat = column(&run(ExampleId::Spline, Pipeline::GhToLimit, ladder)?, "gh_to_flat");
    let a_ok = (vol - PI).abs() / PI <= SPLINE_VOLUME_REL
        && (lib_vol - vol).abs() <= 1e-6 * vol
        && growth >= SPLINE_NORM_GROWTH
        && strictly_decreasing(&swif)
        && gh_flat.iter().all(|&g| g >= SPLINE_GH_FLOOR);

    // (b) bubble: the bound stalls well above the floor
    let bubble = run(ExampleId::Bubble, Pipeline::Swif, ExampleId::Bubble.default_ladder())?;
    let gaps: Vec<f64> = column(&bubble, "bound")
        .iter()
        .zip(column(&bubble, "floor"))
        .map(|(b, f)| b - f)
        .collect();
    let excess = column(&bubble, "excess_volume");
    let b_ok = gaps.last() >= Some(&(0.5 * gaps[0])) && excess.iter().all(|&e| e >= 0.8 * PI);

    // (c) collapse and lapse blow-up: GH bound to the quotient limit
    let c31 = column(
        &run(
            ExampleId::SpaceCollapse,
            Pipeline::GhToLimit,
            &[10.0, 20.0, 50.0, 100.0],
        )?,
        "gh_to_limit",
    );
    let c32 = column(
        &run(ExampleId::TimeBlowup, Pipeline::GhToLimit, &[10.0, 20.0, 50.0, 100.0])?,
        "gh_to_limit",
    );
    let c_ok = strictly_decreasing(&c31) && strictly_decreasing(&c32);

    check(
        a_ok && b_ok && c_ok,
        format!(
            "(a) vol(1e4) {vol:.4} (library {lib_vol:.4}), norm growth {growth:.1}, swif [{}], gh_to_flat [{}]: {}; \
             (b) bubble gaps [{}], excess [{}]: {}; (c) ex31 [{}] ex32 [{}]: {}",
            fmt(&swif),
            fmt(&gh_flat),
            if a_ok { "ok" } else { "no" },
            fmt(&gaps),
            fmt(&excess),
            if b_ok { "ok" } else { "no" },
            fmt(&c31),
            fmt(&c32),
            if c_ok { "ok" } else { "no" },
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("metric axioms", metric_axioms),
        ("flat geodesic accuracy", flat_geodesics),
        ("formula vs oracle", formula_vs_oracle),
        ("conformal invariance", conformal_invariance),
        ("2K deviation transfer", deviation_transfer),
        ("Holder transfer", holder_transfer),
        ("convergence from below", lower_bound),
        ("constants", constants),
        ("Z sandwich", z_sandwich),
        ("example endpoints", example_endpoints),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let started = Instant::now();
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS [{}] {name}: {d} ({secs:.1}s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL [{}] {name}: {d} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {failed} failed, total {:.1}s",
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
