//! Weighted surface integrals of `|x|^{-beta}` over boundary subsets.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FhsError, Result};
use crate::geometry::{ConvexBody, Point};
use crate::mesh::{SubsetMask, SurfaceMesh};
use crate::simplex::Simplex;

const MAX_DEPTH: usize = 20;
const ORIGIN_EPS: f64 = 1e-14;
const SHELL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedAreaResult {
    pub value: f64,
    pub beta: f64,
    pub subset_area: f64,
    /// `value / subset_area^{(n-beta)/n}` for `beta` in `[0, n)` and a
    /// nonempty subset.
    pub ratio: Option<f64>,
    pub refinement_delta: Option<f64>,
    /// Set when a quadrature point had to be moved off the origin.
    pub origin_warning: bool,
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// `|S^n|`, the measure of the unit sphere in R^{n+1}.
pub fn unit_sphere_area(n: usize) -> f64 {
    (n as f64 + 1.0) * unit_ball_volume(n + 1)
}

/// Accumulator for adaptive element integrals.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    value: f64,
    warn: bool,
}

/// Quadrature point for a flat sub-simplex: its centroid, projected onto
/// the analytic surface when there is one.
fn quad_point(s: &Simplex, proj: Option<&ConvexBody>) -> Point {
    let c = s.centroid();
    match proj {
        Some(b) => b.project_to_boundary(&c),
        None => c,
    }
}

/// `int_s |x|^{-beta}` with recursive subdivision near the origin.
fn integrate_simplex(s: &Simplex, c: Point, beta: f64, proj: Option<&ConvexBody>, depth: usize) -> Acc {
    let r = c.norm();
    if r < 4.0 * s.diameter() && depth < MAX_DEPTH {
        let (children, m) = s.split();
        let mut acc = Acc::default();
        for ch in &children[..m] {
            let sub = integrate_simplex(ch, quad_point(ch, proj), beta, proj, depth + 1);
            acc.value += sub.value;
            acc.warn |= sub.warn;
        }
        return acc;
    }
    if r < ORIGIN_EPS {
        // Move the point a quarter of the way to a vertex.
        let moved = c + (s.pts[0] - c) * 0.25;
        return Acc {
            value: s.measure() * moved.norm().powf(-beta),
            warn: true,
        };
    }
    Acc {
        value: s.measure() * r.powf(-beta),
        warn: false,
    }
}

/// `int_{element e} |x|^{-beta}`. Elements far from the origin use the
/// centroid rule with the mesh's stored data, which keeps the sum exactly
/// homogeneous under scaling.
fn element_integral(mesh: &SurfaceMesh, e: usize, beta: f64) -> Acc {
    let c = mesh.centroids[e];
    let s = mesh.simplex(e);
    if beta == 0.0 {
        return Acc {
            value: mesh.areas[e],
            warn: false,
        };
    }
    if c.norm() >= 4.0 * s.diameter() && c.norm() >= ORIGIN_EPS {
        return Acc {
            value: mesh.areas[e] * c.norm().powf(-beta),
            warn: false,
        };
    }
    integrate_simplex(&s, c, beta, mesh.analytic_source(), 0)
}

/// Per-element integrals of `|x|^{-beta}` over every element, in element
/// order. Computed in parallel; each entry is independent of scheduling.
pub fn element_weights(mesh: &SurfaceMesh, beta: f64) -> (Vec<f64>, bool) {
    let accs: Vec<Acc> = (0..mesh.len())
        .into_par_iter()
        .map(|e| element_integral(mesh, e, beta))
        .collect();
    let warn = accs.iter().any(|a| a.warn);
    (accs.into_iter().map(|a| a.value).collect(), warn)
}

pub fn weighted_area(mesh: &SurfaceMesh, subset: &SubsetMask, beta: f64) -> Result<WeightedAreaResult> {
    if subset.len() != mesh.len() {
        return Err(FhsError::LengthMismatch {
            expected: mesh.len(),
            got: subset.len(),
        });
    }
    let ids: Vec<usize> = subset.indices().collect();
    let accs: Vec<Acc> = ids.par_iter().map(|&e| element_integral(mesh, e, beta)).collect();
    let value: f64 = accs.iter().map(|a| a.value).sum();
    let warn = accs.iter().any(|a| a.warn);
    let subset_area = subset.area(mesh);
    let n = mesh.dim_n as f64;
    let ratio = (subset_area > 0.0 && (0.0..n).contains(&beta)).then(|| value / subset_area.powf((n - beta) / n));
    Ok(WeightedAreaResult {
        value,
        beta,
        subset_area,
        ratio,
        refinement_delta: None,
        origin_warning: warn,
    })
}

/// The explicit constant `2(n+1) * n sqrt(1+n+eps)/(n-beta) * omega_n^{beta/n}`.
pub fn paper_constant(n: usize, beta: f64, epsilon: f64) -> Result<f64> {
    let nf = n as f64;
    if !(0.0..nf).contains(&beta) {
        return Err(FhsError::BetaOutOfRange { n, beta });
    }
    if !(epsilon > 0.0) {
        return Err(FhsError::Precondition(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let c1 = nf * (1.0 + nf + epsilon).sqrt() / (nf - beta);
    Ok(2.0 * (nf + 1.0) * c1 * unit_ball_volume(n).powf(beta / nf))
}

/// Limit ratio of two coincident flat disks through the origin,
/// `2^{beta/n} n omega_n^{beta/n}/(n-beta)`.
pub fn conjectured_constant(n: usize, beta: f64) -> Result<f64> {
    let nf = n as f64;
    if !(0.0..nf).contains(&beta) {
        return Err(FhsError::BetaOutOfRange { n, beta });
    }
    Ok(2f64.powf(beta / nf) * nf * unit_ball_volume(n).powf(beta / nf) / (nf - beta))
}

/// `int_{E*} |x|^{-beta}` for the centered flat ball `E*` of measure `m`.
pub fn flat_rearrangement_value(measure_e: f64, n: usize, beta: f64) -> Result<f64> {
    let nf = n as f64;
    if !(measure_e > 0.0) {
        return Err(FhsError::Precondition(format!(
            "measure must be positive, got {measure_e}"
        )));
    }
    if !(0.0..nf).contains(&beta) {
        return Err(FhsError::BetaOutOfRange { n, beta });
    }
    let omega = unit_ball_volume(n);
    let r = (measure_e / omega).powf(1.0 / nf);
    Ok(nf * omega / (nf - beta) * r.powf(nf - beta))
}

#[derive(Clone, Copy, PartialEq)]
enum Region {
    Near,
    Tail,
}

fn region_integral(s: &Simplex, beta: f64, region: Region, min_diam: f64, proj: Option<&ConvexBody>) -> Acc {
    let (lo, hi) = s.vertex_distances(&Point::zeros());
    let straddles = lo < 1.0 - SHELL_TOL && hi > 1.0 + SHELL_TOL;
    if straddles && s.diameter() > min_diam {
        let (children, m) = s.split();
        let mut acc = Acc::default();
        for ch in &children[..m] {
            let sub = region_integral(ch, beta, region, min_diam, proj);
            acc.value += sub.value;
            acc.warn |= sub.warn;
        }
        return acc;
    }
    let c = quad_point(s, proj);
    let near = c.norm() <= 1.0 + SHELL_TOL;
    if near != (region == Region::Near) {
        return Acc::default();
    }
    integrate_simplex(s, c, beta, proj, 0)
}

fn region_sum(mesh: &SurfaceMesh, beta: f64, region: Region) -> f64 {
    let min_diam = mesh.h_max / 16.0;
    let proj = mesh.analytic_source();
    let parts: Vec<f64> = (0..mesh.len())
        .into_par_iter()
        .map(|e| region_integral(&mesh.simplex(e), beta, region, min_diam, proj).value)
        .collect();
    parts.iter().sum()
}

/// `int_{boundary outside B_1(0)} |x|^{-beta}` for `beta > n`.
pub fn tail_integral(mesh: &SurfaceMesh, beta: f64) -> Result<f64> {
    if !(beta > mesh.dim_n as f64) {
        return Err(FhsError::Precondition(format!(
            "tail integral needs beta > n, got {beta}"
        )));
    }
    Ok(region_sum(mesh, beta, Region::Tail))
}

/// `int_{boundary inside B_1(0)} |x|^{-beta}` for `beta < n`.
pub fn near_integral(mesh: &SurfaceMesh, beta: f64) -> Result<f64> {
    if !(beta < mesh.dim_n as f64) {
        return Err(FhsError::Precondition(format!(
            "near integral needs beta < n, got {beta}"
        )));
    }
    Ok(region_sum(mesh, beta, Region::Near))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetEntry {
    pub subset_area: f64,
    pub value: f64,
    /// `None` for empty subsets, which are skipped.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm12Report {
    pub beta: f64,
    pub epsilon: f64,
    pub entries: Vec<SubsetEntry>,
    pub max_ratio: f64,
    pub paper_constant: f64,
    pub conjectured_constant: f64,
    pub skipped: usize,
    pub holds: bool,
    pub origin_warning: bool,
}

/// Ratios `int_E |x|^{-beta} / |E|^{(n-beta)/n}` for each subset, checked
/// against the explicit constant.
pub fn thm12_certificate(mesh: &SurfaceMesh, subsets: &[SubsetMask], beta: f64, epsilon: f64) -> Result<Thm12Report> {
    let c = paper_constant(mesh.dim_n, beta, epsilon)?;
    let conj = conjectured_constant(mesh.dim_n, beta)?;
    let mut entries = Vec::with_capacity(subsets.len());
    let mut warn = false;
    for s in subsets {
        let r = weighted_area(mesh, s, beta)?;
        warn |= r.origin_warning;
        entries.push(SubsetEntry {
            subset_area: r.subset_area,
            value: r.value,
            ratio: r.ratio,
        });
    }
    let max_ratio = entries.iter().filter_map(|e| e.ratio).fold(0.0, f64::max);
    let skipped = entries.iter().filter(|e| e.ratio.is_none()).count();
    Ok(Thm12Report {
        beta,
        epsilon,
        entries,
        max_ratio,
        paper_constant: c,
        conjectured_constant: conj,
        skipped,
        holds: max_ratio <= c,
        origin_warning: warn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Transform;
    use crate::mesh::{mesh_boundary, mesh_patch, scale_mesh};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn unit_sphere_and_circle() {
        let m = mesh_boundary(&ConvexBody::ball(2, 1.0).unwrap(), 0.1).unwrap();
        let r = weighted_area(&m, &SubsetMask::full(m.len()), 1.0).unwrap();
        assert!(rel(r.value, 4.0 * PI) < 0.01);
        assert!(rel(r.ratio.unwrap(), (4.0 * PI).sqrt()) < 0.01);
        let c = mesh_boundary(&ConvexBody::ball(1, 1.0).unwrap(), 0.05).unwrap();
        let r = weighted_area(&c, &SubsetMask::full(c.len()), 0.5).unwrap();
        assert!(rel(r.ratio.unwrap(), (2.0 * PI).sqrt()) < 0.01);
        let e = weighted_area(&m, &SubsetMask::empty(m.len()), 1.3).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.ratio, None);
    }

    #[test]
    fn constants() {
        assert!((paper_constant(2, 1.0, 1.0).unwrap() - 24.0 * PI.sqrt()).abs() < 1e-12);
        assert!((paper_constant(1, 0.0, 1.0).unwrap() - 4.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!((paper_constant(2, 0.0, 1.0).unwrap() - 12.0).abs() < 1e-12);
        assert!(matches!(
            paper_constant(2, 2.0, 1.0),
            Err(FhsError::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            paper_constant(2, -0.1, 1.0),
            Err(FhsError::BetaOutOfRange { .. })
        ));
        assert!((conjectured_constant(2, 1.0).unwrap() - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn flat_rearrangement() {
        assert!((flat_rearrangement_value(PI, 2, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((flat_rearrangement_value(2.0, 1, 0.0).unwrap() - 2.0).abs() < 1e-12);
        let l: f64 = 3.0;
        let a = flat_rearrangement_value(1.7, 2, 0.6).unwrap();
        let b = flat_rearrangement_value(1.7 * l * l, 2, 0.6).unwrap();
        assert!(rel(b, a * l.powf(1.4)) < 1e-12);
    }

    #[test]
    fn origin_on_surface_is_integrable() {
        // Newtonian potential of the unit sphere at a point on it: 4 pi.
        let body = ConvexBody::ball(2, 1.0).unwrap().translated(Point::new(0.0, 0.0, -1.0));
        let m = mesh_boundary(&body, 0.1).unwrap();
        let r = weighted_area(&m, &SubsetMask::full(m.len()), 1.0).unwrap();
        assert!(rel(r.value, 4.0 * PI) < 0.01, "{}", r.value);
    }

    #[test]
    fn scale_homogeneity_and_monotonicity() {
        let body = ConvexBody::ellipsoid(2, [1.0, 0.7, 1.3])
            .unwrap()
            .translated(Point::new(0.1, 0.0, 1.25));
        let m = mesh_boundary(&body, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SubsetMask::random(m.len(), 0.3, &mut rng);
        let mut bits: Vec<bool> = (0..m.len()).map(|e| a.contains(e)).collect();
        for (e, b) in bits.iter_mut().enumerate() {
            *b |= e % 5 == 0;
        }
        let b = SubsetMask::from_bits(bits);
        for beta in [0.5, 1.0, 1.5] {
            let va = weighted_area(&m, &a, beta).unwrap().value;
            let vb = weighted_area(&m, &b, beta).unwrap().value;
            assert!(va <= vb);
            for l in [0.5, 2.0, 10.0] {
                let s = scale_mesh(&m, &Transform::scaling(l).unwrap());
                let vs = weighted_area(&s, &a, beta).unwrap().value;
                assert!(rel(vs, l.powf(2.0 - beta) * va) < 1e-12, "{beta} {l}");
            }
        }
    }

    #[test]
    fn flat_oracle_dominates_patch_subsets() {
        let hs = ConvexBody::half_space(2, Point::z(), 0.0).unwrap();
        let m = mesh_patch(&hs, 0.05, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for beta in [0.5, 1.0, 1.5] {
            for k in 0..5 {
                let mask = if k == 0 {
                    SubsetMask::cap(&m, &Point::zeros(), 0.5)
                } else {
                    SubsetMask::random(m.len(), 0.1 * k as f64, &mut rng)
                };
                let r = weighted_area(&m, &mask, beta).unwrap();
                let bound = flat_rearrangement_value(r.subset_area, 2, beta).unwrap();
                assert!(r.value <= bound * 1.01, "{beta}: {} > {bound}", r.value);
            }
        }
    }

    #[test]
    fn tail_and_near() {
        let inside = mesh_boundary(&ConvexBody::ball(2, 0.5).unwrap(), 0.1).unwrap();
        assert_eq!(tail_integral(&inside, 3.0).unwrap(), 0.0);
        let r2 = mesh_boundary(&ConvexBody::ball(2, 2.0).unwrap(), 0.2).unwrap();
        assert!(rel(tail_integral(&r2, 3.0).unwrap(), 2.0 * PI) < 0.01);
        let cube = mesh_boundary(&ConvexBody::cube(2, 3.0).unwrap(), 0.5).unwrap();
        assert_eq!(near_integral(&cube, 1.0).unwrap(), 0.0);
        let unit = mesh_boundary(&ConvexBody::ball(2, 1.0).unwrap(), 0.1).unwrap();
        assert!(rel(near_integral(&unit, 1.0).unwrap(), 4.0 * PI) < 0.01);
        for body in [
            ConvexBody::cube(2, 0.6).unwrap(),
            ConvexBody::ball(2, 3.0).unwrap().translated(Point::new(0.0, 0.0, 2.5)),
        ] {
            let m = mesh_boundary(&body, 0.1).unwrap();
            assert!(near_integral(&m, -1.0).unwrap() <= 4.0 * PI * 1.01);
        }
        assert!(tail_integral(&unit, 1.0).is_err());
        assert!(near_integral(&unit, 2.5).is_err());
    }

    #[test]
    fn near_and_tail_partition_the_sphere() {
        let body = ConvexBody::ball(2, 1.0).unwrap().translated(Point::new(0.0, 0.0, 0.7));
        let m = mesh_boundary(&body, 0.1).unwrap();
        let full = weighted_area(&m, &SubsetMask::full(m.len()), 0.0).unwrap().value;
        let near = near_integral(&m, 0.0).unwrap();
        let tail = region_sum(&m, 0.0, Region::Tail);
        assert!(rel(near + tail, full) < 1e-9);
    }
}
