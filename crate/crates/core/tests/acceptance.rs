//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so every line is printed even when an earlier criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fhs_core::decomposition::{coverage_report, decompose};
use fhs_core::field::FieldSpec;
use fhs_core::fractional::{frac_mean_curvature_boundary, frac_mean_curvature_volume, seminorm_p};
use fhs_core::harness::{flat_hardy_check, scaled_ratios, sweep, verify_main, FlatHardyConfig, SweepFamily};
use fhs_core::levelset::{
    check_series, generalized_holder_check, series_lhs, series_rhs, weighted_holder_points, DyadicDecomposition,
};
use fhs_core::measure::{conjectured_constant, paper_constant, thm12_certificate, weighted_area};
use fhs_core::params::{check_holder_split, classify_case, construct_holder_split, validate, CaseTag, FracParams};
use fhs_core::{mesh_boundary, refine, scale_mesh, ConvexBody, Halfspace, Point, SubsetMask, Transform};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_polytope(seed: u64) -> ConvexBody {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hs = Vec::new();
    for i in 0..3 {
        for sign in [1.0, -1.0] {
            let mut nu = Point::zeros();
            nu[i] = sign;
            hs.push(Halfspace::new(nu, rng.gen_range(0.8..1.5)).unwrap());
        }
    }
    for _ in 0..rng.gen_range(4..12) {
        let v = Point::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm() > 0.2 {
            hs.push(Halfspace::new(v.normalize(), rng.gen_range(0.7..1.2)).unwrap());
        }
    }
    ConvexBody::polytope(2, hs).unwrap()
}

/// Bodies in R^3 with the origin inside, on, or near the boundary.
fn test_bodies() -> Vec<ConvexBody> {
    let ball = |r: f64| ConvexBody::ball(2, r).unwrap();
    let ell = |a: [f64; 3]| ConvexBody::ellipsoid(2, a).unwrap();
    let cube = |s: f64| ConvexBody::cube(2, s).unwrap();
    let cyl = |r: f64, h: f64, rho: f64| ConvexBody::cylinder(2, r, h, rho).unwrap();
    vec![
        ball(1.0),
        ball(1.0).translated(Point::new(0.0, 0.0, -0.5)),
        ball(1.0).translated(Point::new(0.0, 0.0, -1.0)),
        ball(1.0).translated(Point::new(0.0, 0.0, -1.05)),
        ball(2.0).translated(Point::new(0.3, 0.2, 0.1)),
        ball(0.5).translated(Point::new(0.0, 0.0, -0.51)),
        ell([1.0, 1.5, 0.7]),
        ell([2.0, 1.0, 0.5]).translated(Point::new(0.0, 0.0, -0.5)),
        ell([0.5, 0.5, 2.0]).translated(Point::new(0.4, 0.0, 0.0)),
        cube(1.0),
        cube(1.0).translated(Point::new(-1.0, 0.0, 0.0)),
        cube(0.5).translated(Point::new(0.3, 0.3, 0.3)),
        cube(1.0).translated(Point::new(-1.0, -1.0, -1.0)),
        random_polytope(1),
        random_polytope(2),
        random_polytope(3).translated(Point::new(0.5, 0.0, 0.0)),
        random_polytope(4),
        cyl(1.0, 1.0, 0.3),
        cyl(1.0, 0.2, 0.2),
        cyl(0.5, 1.0, 0.2).translated(Point::new(0.0, 0.0, -1.0)),
        cyl(1.0, 0.5, 0.5).translated(Point::new(0.5, 0.0, 0.0)),
    ]
}

fn criterion_1() -> Outcome {
    let dec = DyadicDecomposition::from_sequence(-1, vec![1.0]).unwrap();
    let lhs = series_lhs(&dec, 2, 0.5, 1.0).unwrap();
    let rhs = series_rhs(&dec, 2, 0.5, 1.0).unwrap();
    ensure(
        rel(lhs, 1.0) <= 1e-12 && rel(rhs, 2f64.powf(1.0 / 3.0)) <= 1e-12,
        || format!("indicator case lhs={lhs} rhs={rhs}"),
    )?;
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 1000;
    for n in [1usize, 2] {
        for s in [0.25, 0.5, 0.75] {
            for p in [1.0, 1.5, 2.0] {
                if s * p >= n as f64 {
                    continue;
                }
                let summary = check_series(1000, seed, n, s, p).map_err(|e| e.to_string())?;
                ensure(summary.failed == 0, || {
                    format!(
                        "n={n} s={s} p={p}: {} failures, worst seed {}",
                        summary.failed, summary.worst_case_seed
                    )
                })?;
                cases += summary.cases;
                worst = worst.max(summary.worst_ratio);
                seed += 1000;
            }
        }
    }
    Ok(format!(
        "{cases} sequences, worst lhs/rhs {worst:.4}; indicator lhs={lhs} rhs={rhs:.6}"
    ))
}

fn subsets_for(mesh: &fhs_core::SurfaceMesh, body: &ConvexBody, rng: &mut ChaCha8Rng) -> Vec<SubsetMask> {
    let mut out = vec![SubsetMask::full(mesh.len())];
    let near = body.project_to_boundary(&Point::zeros());
    for r in [0.2, 0.6] {
        out.push(SubsetMask::cap(mesh, &near, r));
    }
    for _ in 0..5 {
        let c = mesh.centroids[rng.gen_range(0..mesh.len())];
        out.push(SubsetMask::cap(mesh, &c, rng.gen_range(0.1..1.5)));
    }
    for p in [0.1, 0.3, 0.6, 0.9] {
        out.push(SubsetMask::random(mesh.len(), p, rng));
    }
    out
}

fn criterion_2() -> Outcome {
    let bodies = test_bodies();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut worst_margin: f64 = 0.0;
    for body in &bodies {
        let mesh = mesh_boundary(body, 0.25).map_err(|e| format!("{body}: {e}"))?;
        let subsets = subsets_for(&mesh, body, &mut rng);
        for beta in [0.0, 0.5, 1.0, 1.5] {
            let rep = thm12_certificate(&mesh, &subsets, beta, 1.0).map_err(|e| e.to_string())?;
            ensure(rep.holds, || {
                format!(
                    "{body} beta={beta}: max ratio {} > {}",
                    rep.max_ratio, rep.paper_constant
                )
            })?;
            checked += rep.entries.len() - rep.skipped;
            worst_margin = worst_margin.max(rep.max_ratio / rep.paper_constant);
        }
    }
    let sphere = mesh_boundary(&ConvexBody::ball(2, 1.0).unwrap(), 0.1).unwrap();
    let r = weighted_area(&sphere, &SubsetMask::full(sphere.len()), 1.0)
        .unwrap()
        .ratio
        .unwrap();
    let target = (4.0 * PI).sqrt();
    ensure(rel(r, target) < 0.01, || format!("unit sphere ratio {r} vs {target}"))?;
    Ok(format!(
        "{} bodies, {checked} subset ratios, max ratio/constant {worst_margin:.3}; unit sphere {r:.4} vs {target:.4}",
        bodies.len()
    ))
}

fn criterion_3() -> Outcome {
    let radii = vec![0.4, 0.2, 0.1, 0.05];
    let params = FracParams::admissible(2, 0.5, 1.0, 0.5, 1.0, 1.0, -0.5).unwrap();
    let rows = sweep(&SweepFamily::CylinderAspect { radii, beta: 1.0 }, &params, 0.1, 0);
    let values: Vec<f64> = rows
        .iter()
        .map(|r| r.value.ok_or_else(|| format!("{:?}", r.error)))
        .collect::<Result<_, _>>()?;
    let limit = conjectured_constant(2, 1.0).unwrap();
    let bound = paper_constant(2, 1.0, 1.0).unwrap();
    ensure(values.windows(2).all(|w| w[1] > w[0]), || {
        format!("not increasing: {values:?}")
    })?;
    ensure(values.iter().all(|v| *v < limit * 1.05 && *v <= bound), || {
        format!("{values:?} vs {limit}")
    })?;
    Ok(format!("ratios {values:.4?} increasing, limit {limit:.4}"))
}

fn criterion_4() -> Outcome {
    let mut bodies: Vec<(ConvexBody, f64)> = test_bodies().into_iter().map(|b| (b, 0.25)).collect();
    bodies.push((ConvexBody::ball(1, 1.0).unwrap(), 0.05));
    bodies.push((ConvexBody::ellipsoid(1, [2.0, 0.5, 1.0]).unwrap(), 0.05));
    bodies.push((ConvexBody::cube(1, 1.0).unwrap(), 0.1));
    bodies.push((ConvexBody::cylinder(1, 1.0, 0.5, 0.2).unwrap(), 0.05));
    for (body, h) in &bodies {
        let mesh = mesh_boundary(body, *h).map_err(|e| e.to_string())?;
        let n = mesh.dim_n as f64;
        let pieces = decompose(&mesh, 1.0).map_err(|e| e.to_string())?;
        let cov = coverage_report(&pieces, &mesh);
        ensure(cov.covered_area_fraction == 1.0, || {
            format!("{body}: coverage {}", cov.covered_area_fraction)
        })?;
        ensure(cov.piece_count <= 2 * (mesh.dim_n + 1), || {
            format!("{body}: {} pieces", cov.piece_count)
        })?;
        ensure(cov.global_max_slope <= (n + 1.0).sqrt() + 1e-12, || {
            format!("{body}: slope {}", cov.global_max_slope)
        })?;
    }
    let cube = mesh_boundary(&ConvexBody::cube(2, 1.0).unwrap(), 0.25).unwrap();
    let pieces = decompose(&cube, 1.0).unwrap();
    ensure(pieces.len() == 6 && pieces.iter().all(|p| p.max_slope == 0.0), || {
        format!("cube: {} pieces", pieces.len())
    })?;
    Ok(format!(
        "{} bodies covered exactly; cube gives 6 flat pieces",
        bodies.len()
    ))
}

fn criterion_5() -> Outcome {
    let bodies = [
        ConvexBody::ball(2, 1.0).unwrap(),
        ConvexBody::cylinder(2, 1.0, 1.0, 0.3).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for body in &bodies {
        let mesh = mesh_boundary(body, 0.1).unwrap();
        let step = (mesh.len() / 24).max(1);
        let sample: Vec<usize> = (0..mesh.len()).step_by(step).collect();
        for alpha in [0.3, 0.5, 0.7] {
            for &e in &sample {
                let b = frac_mean_curvature_boundary(&mesh, e, alpha).map_err(|e| e.to_string())?;
                let v = frac_mean_curvature_volume(body, &mesh.centroids[e], alpha).map_err(|e| e.to_string())?;
                worst = worst.max(rel(b, v));
            }
            for lambda in [0.5, 2.0] {
                let t = Transform::scaling(lambda).unwrap();
                let scaled = scale_mesh(&mesh, &t);
                let big = body.apply_transform(&t);
                let factor = lambda.powf(-alpha);
                for &e in sample.iter().step_by(4) {
                    let b = frac_mean_curvature_boundary(&mesh, e, alpha).unwrap();
                    let bs = frac_mean_curvature_boundary(&scaled, e, alpha).unwrap();
                    let v = frac_mean_curvature_volume(body, &mesh.centroids[e], alpha).unwrap();
                    let vs = frac_mean_curvature_volume(&big, &t.apply(&mesh.centroids[e]), alpha).unwrap();
                    worst_scale = worst_scale.max(rel(bs, factor * b)).max(rel(vs, factor * v));
                }
            }
        }
    }
    ensure(worst < 0.03, || format!("dual forms differ by {worst:.4}"))?;
    ensure(worst_scale < 0.01, || format!("scaling law off by {worst_scale:.2e}"))?;
    Ok(format!(
        "max dual-form gap {:.2}%, max scaling deviation {worst_scale:.1e}",
        100.0 * worst
    ))
}

fn criterion_6() -> Outcome {
    let sphere = ConvexBody::ball(2, 1.0).unwrap();
    let coarse = mesh_boundary(&sphere, 0.3).unwrap();
    let coord = FieldSpec::Coordinate { axis: 0 };
    let (s, p) = (0.5, 2.0);
    let u = coord.sample(&coarse).unwrap();
    let base = seminorm_p(&coarse, &u, s, p).unwrap();
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 2.0, 10.0] {
        let t = Transform::scaling(lambda).unwrap();
        let m = scale_mesh(&coarse, &t);
        let v = seminorm_p(&m, &u, s, p).unwrap();
        worst = worst.max(rel(v, base * lambda.powf(2.0 - s * p)));
    }
    ensure(worst <= 1e-12, || format!("homogeneity deviation {worst:e}"))?;
    let mut mesh = mesh_boundary(&sphere, 1.0).unwrap();
    let mut values = Vec::new();
    while mesh.len() <= 5120 {
        values.push(seminorm_p(&mesh, &coord.sample(&mesh).unwrap(), s, p).unwrap());
        mesh = refine(&mesh);
    }
    let k = values.len();
    let delta = rel(values[k - 1], values[k - 2]);
    ensure(delta < 0.02, || {
        format!("final refinement delta {delta:.4} from {values:?}")
    })?;
    Ok(format!(
        "homogeneity deviation {worst:.1e}; levels {values:.4?}, final delta {:.2}%",
        100.0 * delta
    ))
}

fn criterion_7() -> Outcome {
    let tuples = [
        (2, 0.5, 1.0, 0.5, 1.0, 1.0, 0.0),
        (2, 0.5, 1.0, 0.5, 1.0, 1.0, -0.5),
        (2, 0.5, 2.0, 0.5, 0.5, 2.0, 0.0),
        (1, 0.3, 2.0, 0.4, 1.0, 2.0, -0.3),
        (2, 0.5, 1.0, 0.5, 0.5, 2.0, -0.5),
        (2, 0.5, 1.5, 0.6, 0.5, 1.5, -0.3),
    ];
    let mut seen = [false; 2];
    let mut lines = Vec::new();
    for (n, s, p, alpha, a, q, gamma) in tuples {
        let params = FracParams::admissible(n, s, p, alpha, a, q, gamma).map_err(|e| e.to_string())?;
        let case = classify_case(&params).map_err(|e| e.to_string())?;
        seen[(case == CaseTag::Case2) as usize] = true;
        let mut shift = Point::zeros();
        shift[n] = -0.4;
        let mut top = Point::zeros();
        top[n] = 0.6;
        let body = ConvexBody::ball(n, 1.0).unwrap().translated(shift);
        let field = FieldSpec::bump(top, 0.9, 2.0);
        let (h, levels) = if n == 1 { (0.1, 2) } else { (0.5, 2) };
        let rep = verify_main(&body, &field, &params, h, levels).map_err(|e| e.to_string())?;
        let delta = rep.refinement_delta.unwrap();
        ensure(rep.ratio.is_finite() && rep.ratio > 0.0, || {
            format!("{params}: ratio {}", rep.ratio)
        })?;
        ensure(delta < 0.05, || format!("{params}: refinement delta {delta}"))?;
        for lambda in [0.5, 2.0] {
            let (r0, r1) = scaled_ratios(&body, &field, &params, h, lambda).map_err(|e| e.to_string())?;
            ensure(rel(r1, r0) <= 1e-12, || {
                format!("{params}: lambda {lambda} gives {r0} vs {r1}")
            })?;
        }
        lines.push(format!(
            "{case:?} tau={:.4} ratio={:.4} delta={:.2}%",
            params.tau,
            rep.ratio,
            100.0 * delta
        ));
    }
    ensure(seen[0] && seen[1], || "both cases must be covered".into())?;
    Ok(lines.join("; "))
}

fn random_case2(rng: &mut ChaCha8Rng) -> FracParams {
    loop {
        let n = rng.gen_range(1..=2usize);
        let s = rng.gen_range(0.05..0.95);
        let p = rng.gen_range(1.0..3.0);
        if s * p >= n as f64 {
            continue;
        }
        let a = rng.gen_range(0.05..0.95);
        let q = rng.gen_range(1.0..8.0);
        let gamma = -a * s - rng.gen_range(0.0..1.5);
        let Ok(params) = FracParams::new(n, s, p, rng.gen_range(0.05..0.95), a, q, gamma) else {
            continue;
        };
        if validate(&params).is_empty() && matches!(classify_case(&params), Ok(CaseTag::Case2)) {
            return params;
        }
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut max_halvings = 0;
    for k in 0..100 {
        let params = random_case2(&mut rng);
        let split = construct_holder_split(&params).map_err(|e| format!("case {k} ({params}): {e}"))?;
        let bad = check_holder_split(&params, &split);
        ensure(bad.is_empty(), || format!("case {k} ({params}): {bad:?}"))?;
        max_halvings = max_halvings.max(split.halvings);
    }
    Ok(format!("100 second-case tuples split, at most {max_halvings} halvings"))
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    for (n, h, extent) in [(1, 0.01, 1.0), (2, 0.04, 0.8)] {
        let cfg = FlatHardyConfig {
            n,
            extent,
            h,
            s: 0.5,
            p: 1.0,
            power: 2.0,
            radii: vec![0.4, 0.2, 0.1],
            center: [0.0; 3],
        };
        let t = flat_hardy_check(&cfg).map_err(|e| e.to_string())?;
        ensure(t.bounded, || format!("n={n}: sup {} vs median {}", t.sup, t.median))?;
        ensure(t.max_refinement_delta < 0.1, || {
            format!("n={n}: refinement delta {}", t.max_refinement_delta)
        })?;
        let ratios: Vec<f64> = t.rows.iter().map(|r| r.ratio_refined).collect();
        lines.push(format!(
            "n={n} ratios {ratios:.4?}, max delta {:.2}%",
            100.0 * t.max_refinement_delta
        ));
    }
    Ok(lines.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let len = rng.gen_range(1..30);
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            if rng.gen_bool(0.1) {
                0.0
            } else {
                10f64.powf(rng.gen_range(-4.0..4.0))
            }
        };
        let x: Vec<f64> = (0..len).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..len).map(|_| draw(&mut rng)).collect();
        let t1: f64 = rng.gen_range(0.0..2.0);
        let t2 = (1.0 - t1).max(0.0) + rng.gen_range(0.0..1.5);
        let c = generalized_holder_check(&x, &y, t1, t2).map_err(|e| format!("case {k}: {e}"))?;
        ensure(c.ok, || format!("generalized case {k}: {c:?}"))?;
        worst = worst.max(c.ratio());
    }
    let mut worst_w: f64 = 0.0;
    for k in 0..10_000 {
        let len = rng.gen_range(1..40);
        let r: Vec<f64> = (0..len).map(|_| 10f64.powf(rng.gen_range(-2.0..1.0))).collect();
        let u: Vec<f64> = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.001..1.0)).collect();
        let tau = rng.gen_range(0.3..4.0);
        let alpha = tau + rng.gen_range(0.01..4.0);
        let gamma = rng.gen_range(-1.5..0.0);
        let beta = rng.gen_range(-1.5..0.5);
        let c = weighted_holder_points(&r, &u, &w, tau, gamma, alpha, beta).map_err(|e| format!("case {k}: {e}"))?;
        ensure(c.ok, || format!("weighted case {k}: {c:?}"))?;
        worst_w = worst_w.max(c.ratio());
    }
    Ok(format!(
        "generalized worst lhs/rhs {worst:.6}, weighted worst {worst_w:.6}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("dyadic series inequality", criterion_1),
        ("weighted isoperimetric certificate", criterion_2),
        ("thin cylinder sweep", criterion_3),
        ("graph decomposition", criterion_4),
        ("fractional mean curvature dual forms", criterion_5),
        ("seminorm scaling and convergence", criterion_6),
        ("end-to-end inequality", criterion_7),
        ("Hoelder split construction", criterion_8),
        ("flat fractional Hardy", criterion_9),
        ("Hoelder property suites", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
