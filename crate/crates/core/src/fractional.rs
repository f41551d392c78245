//! Fractional seminorm, fractional mean curvature in its boundary and volume
//! forms, and the energy combining the two.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FhsError, Result};
use crate::field::ScalarField;
use crate::geometry::{ConvexBody, Point};
use crate::mesh::SurfaceMesh;
use crate::params::FracParams;
use crate::simplex::Simplex;

const COINCIDENT: f64 = 1e-14;
/// Elements closer than this many diameters to the evaluation point are
/// subdivided.
const NEAR_FACTOR: f64 = 4.0;
const NEAR_DEPTH: usize = 6;
const SELF_LEVELS_MIN: usize = 3;
const SELF_LEVELS_MAX: usize = 10;

/// Treatment of the diagonal `e = f` in the pair sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Diagonal {
    /// Plain sum over distinct pairs.
    Omit,
    /// Adds, per element, the kernel mass of a disk of the element's area
    /// around its centroid, with the local difference quotients of `u`.
    LocalCorrection,
}

fn check_sp(s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) || !(p >= 1.0) {
        return Err(FhsError::Precondition(format!(
            "need s in (0,1) and p >= 1, got s = {s}, p = {p}"
        )));
    }
    Ok(())
}

/// `[u]^p` with the default diagonal treatment.
pub fn seminorm_p(mesh: &SurfaceMesh, u: &ScalarField, s: f64, p: f64) -> Result<f64> {
    seminorm_p_with(mesh, u, s, p, Diagonal::LocalCorrection)
}

/// `sum_{e != f} |u_e - u_f|^p |c_e - c_f|^{-(n+sp)} A_e A_f`, plus the
/// diagonal term selected by `diag`.
///
/// Pairs where both values vanish are skipped, so the cost is
/// `|supp u| * N`. Rows are summed in parallel and combined in index order.
pub fn seminorm_p_with(mesh: &SurfaceMesh, u: &ScalarField, s: f64, p: f64, diag: Diagonal) -> Result<f64> {
    check_sp(s, p)?;
    u.check_len(mesh)?;
    let k = (mesh.dim_n as f64 + s * p) / 2.0;
    let c = &mesh.centroids;
    let a = &mesh.areas;
    let vals = &u.values;
    let rows: Vec<Result<f64>> = u
        .support_ids
        .par_iter()
        .map(|&e| {
            let (ce, ue) = (c[e], vals[e]);
            let mut row = 0.0;
            for f in 0..mesh.len() {
                let uf = vals[f];
                // Pairs inside the support are counted once, from the lower index.
                if f == e || (uf != 0.0 && f < e) {
                    continue;
                }
                let d2 = (c[f] - ce).norm_squared();
                if d2 < COINCIDENT * COINCIDENT {
                    return Err(FhsError::DegenerateMesh(e.min(f), e.max(f)));
                }
                let diff = (ue - uf).abs();
                if diff == 0.0 {
                    continue;
                }
                row += diff.powf(p) * d2.powf(-k) * a[f];
            }
            Ok(2.0 * row * a[e])
        })
        .collect();
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    if diag == Diagonal::LocalCorrection {
        total += diagonal_correction(mesh, u, s, p).iter().sum::<f64>();
    }
    Ok(total)
}

/// Elements sharing a vertex with each element.
pub fn vertex_neighbors(mesh: &SurfaceMesh) -> Vec<Vec<usize>> {
    let mut by_vertex: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in 0..mesh.len() {
        for &v in mesh.element(e) {
            by_vertex.entry(v).or_default().push(e);
        }
    }
    (0..mesh.len())
        .map(|e| {
            let mut nb: Vec<usize> = mesh
                .element(e)
                .iter()
                .flat_map(|v| by_vertex[v].iter().copied())
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb.retain(|&f| f != e);
            nb
        })
        .collect()
}

/// Per-element diagonal term
/// `A_e * |S^{n-1}| rho_e^{p(1-s)} / (p(1-s)) * mean_f |u_f - u_e|^p / |c_f - c_e|^p`,
/// the kernel mass of `|g.z|^p / |z|^{n+sp}` over a disk of radius `rho_e`
/// (`|B_rho| = A_e`) with direction averages taken over neighbours.
pub fn diagonal_correction(mesh: &SurfaceMesh, u: &ScalarField, s: f64, p: f64) -> Vec<f64> {
    let n = mesh.dim_n;
    let nb = vertex_neighbors(mesh);
    let sphere = if n == 1 { 2.0 } else { 2.0 * PI };
    let e_exp = p * (1.0 - s);
    let mut touched = vec![false; mesh.len()];
    for &e in &u.support_ids {
        touched[e] = true;
        for &f in &nb[e] {
            touched[f] = true;
        }
    }
    (0..mesh.len())
        .into_par_iter()
        .map(|e| {
            if !touched[e] || nb[e].is_empty() {
                return 0.0;
            }
            let ue = u.values[e];
            let mean: f64 = nb[e]
                .iter()
                .map(|&f| ((u.values[f] - ue).abs() / (mesh.centroids[f] - mesh.centroids[e]).norm()).powf(p))
                .sum::<f64>()
                / nb[e].len() as f64;
            let area = mesh.areas[e];
            let rho = if n == 1 { area / 2.0 } else { (area / PI).sqrt() };
            area * sphere * rho.powf(e_exp) / e_exp * mean
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FhsError::Precondition(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// Quadrature data of a flat sub-simplex: point on the surface, normal there
/// and flat measure.
fn quad_data(s: &Simplex, flat_normal: &Point, body: Option<&ConvexBody>) -> (Point, Point, f64) {
    let c = s.centroid();
    match body {
        Some(b) => {
            let y = b.project_to_boundary(&c);
            let nu = b.outward_normal(&y).unwrap_or(*flat_normal);
            (y, nu, s.measure())
        }
        None => (c, *flat_normal, s.measure()),
    }
}

fn kernel(x: &Point, y: &Point, nu: &Point, k: f64) -> f64 {
    let d = y - x;
    d.dot(nu) * d.norm_squared().powf(-k)
}

/// Contribution of a flat (sub-)element away from `x`, subdivided while close.
fn near_contribution(
    s: &Simplex,
    x: &Point,
    flat_normal: &Point,
    body: Option<&ConvexBody>,
    k: f64,
    depth: usize,
) -> f64 {
    let (y, nu, area) = quad_data(s, flat_normal, body);
    if (y - x).norm() < NEAR_FACTOR * s.diameter() && depth < NEAR_DEPTH {
        let (children, m) = s.split();
        return children[..m]
            .iter()
            .map(|ch| near_contribution(ch, x, flat_normal, body, k, depth + 1))
            .sum();
    }
    area * kernel(x, &y, &nu, k)
}

/// Contribution of the element containing `x`: rings around the centered
/// child are summed level by level, and the remaining geometric tail with
/// ratio `shrink^{1-alpha}` is added in closed form.
fn self_contribution(
    s: &Simplex,
    x: &Point,
    flat_normal: &Point,
    body: Option<&ConvexBody>,
    k: f64,
    alpha: f64,
) -> f64 {
    let mut cur = *s;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut ratio = 0.0;
    for level in 0..SELF_LEVELS_MAX {
        let (children, m, shrink) = cur.split_centered();
        ratio = shrink.powf(1.0 - alpha);
        let ring: f64 = children[..m - 1]
            .iter()
            .map(|ch| near_contribution(ch, x, flat_normal, body, k, 0))
            .sum();
        total += ring;
        cur = children[m - 1];
        let settled = match prev {
            Some(p) if p != 0.0 => ((ring / p) - ratio).abs() < 0.01 * ratio,
            Some(_) => ring == 0.0,
            None => false,
        };
        prev = Some(ring);
        if level + 1 >= SELF_LEVELS_MIN && settled {
            break;
        }
    }
    total + prev.unwrap_or(0.0) * ratio / (1.0 - ratio)
}

/// Boundary form of the fractional mean curvature at the centroid of
/// element `e`: `int (y - x).nu(y) / |y - x|^{n+1+alpha} dy`.
pub fn frac_mean_curvature_boundary(mesh: &SurfaceMesh, e: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if mesh.is_planar_patch() {
        return Ok(0.0);
    }
    let body = mesh.analytic_source();
    let k = (mesh.dim_n as f64 + 1.0 + alpha) / 2.0;
    let x = mesh.centroids[e];
    let mut total = 0.0;
    for f in 0..mesh.len() {
        if f == e {
            continue;
        }
        let y = mesh.centroids[f];
        let diam = mesh.diameter(f);
        if (y - x).norm() >= NEAR_FACTOR * diam {
            let nu = match body {
                Some(b) => b.outward_normal(&y).unwrap_or(mesh.normals[f]),
                None => mesh.normals[f],
            };
            total += mesh.areas[f] * kernel(&x, &y, &nu, k);
        } else {
            total += near_contribution(&mesh.simplex(f), &x, &mesh.normals[f], body, k, 0);
        }
    }
    total += self_contribution(&mesh.simplex(e), &x, &mesh.normals[e], body, k, alpha);
    Ok(total)
}

/// Volume form `(alpha/2) PV int (chi_{Omega^c} - chi_Omega)(y) / |y-x|^{n+1+alpha} dy`
/// at a boundary point `x`, evaluated exactly as the hemisphere integral
/// `int L(w)^{-alpha} dw` of chord lengths through `x`.
pub fn frac_mean_curvature_volume(body: &ConvexBody, x: &Point, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !body.is_analytic() {
        return Err(FhsError::Precondition(
            "volume form needs a ball, ellipsoid or cylinder".into(),
        ));
    }
    let nu = body
        .outward_normal(x)
        .ok_or_else(|| FhsError::Precondition("no outward normal at the evaluation point".into()))?;
    let coarse = chord_quadrature(body, x, &nu, alpha, 32)?;
    let fine = chord_quadrature(body, x, &nu, alpha, 64)?;
    if (fine - coarse).abs() > 0.01 * fine.abs() {
        return Err(FhsError::NumericalNonconvergence { coarse, fine });
    }
    Ok(fine)
}

fn chord(body: &ConvexBody, x: &Point, w: &Point) -> Result<f64> {
    Ok(match body.line_interval(x, w)? {
        Some((t0, t1)) => t1 - t0,
        None => 0.0,
    })
}

/// Hemisphere integral with `m` Gauss-Legendre nodes in the polar variable
/// and `2m` trapezoid nodes in the azimuth (n = 2).
fn chord_quadrature(body: &ConvexBody, x: &Point, nu: &Point, alpha: f64, m: usize) -> Result<f64> {
    let gl = GaussLegendre::new(NonZeroUsize::new(m).expect("m > 0"));
    let inward = -nu;
    let expo = 1.0 / (1.0 - alpha);
    let mut err = None;
    // Below this polar offset the chord is shorter than the rounding error
    // in `x`; L/t is frozen at its value there (it tends to a constant at
    // smooth points and the weight tends to zero at flat ones).
    const T_MIN: f64 = 1e-5;
    let mut eval = |w: Point, t: f64| -> f64 {
        match chord(body, x, &w) {
            Ok(l) if l > 0.0 => (l / t).powf(-alpha),
            Ok(_) => 0.0,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    };
    let value = if body.dim_n == 1 {
        // Angle from the tangent: u = (pi/2) w^{1/(1-alpha)} on each side.
        let tangent = Point::new(-nu.y, nu.x, 0.0);
        let half = PI / 2.0;
        let scale = half.powf(1.0 - alpha) * expo;
        let mut sum = 0.0;
        for side in [1.0, -1.0] {
            sum += gl.integrate(0.0, 1.0, |v| {
                let u = (half * v.powf(expo)).max(T_MIN);
                let w = inward * u.sin() + tangent * (side * u.cos());
                eval(w, u)
            });
        }
        scale * sum
    } else {
        // t = cos(angle from the inward normal) = v^{1/(1-alpha)}.
        let helper = if inward.x.abs() < 0.9 { Point::x() } else { Point::y() };
        let e1 = inward.cross(&helper).normalize();
        let e2 = inward.cross(&e1);
        let na = 2 * m;
        let mut sum = 0.0;
        for j in 0..na {
            let psi = 2.0 * PI * (j as f64 + 0.5) / na as f64;
            let dir = e1 * psi.cos() + e2 * psi.sin();
            sum += gl.integrate(0.0, 1.0, |v| {
                let t = v.powf(expo).max(T_MIN);
                let w = inward * t + dir * (1.0 - t * t).max(0.0).sqrt();
                eval(w, t)
            });
        }
        sum * 2.0 * PI / na as f64 * expo
    };
    match err {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurvatureMethod {
    Boundary,
    Volume,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub alpha: f64,
    pub method: CurvatureMethod,
}

impl CurvatureField {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Coefficient of variation of the values.
    pub fn variation(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }
}

/// H_alpha at every element centroid. Values below `-1e-6 * max` are
/// reported as an error; smaller negative rounding is clamped to zero.
pub fn curvature_field(mesh: &SurfaceMesh, alpha: f64, method: CurvatureMethod) -> Result<CurvatureField> {
    check_alpha(alpha)?;
    let values: Vec<f64> = match method {
        CurvatureMethod::Boundary => (0..mesh.len())
            .into_par_iter()
            .map(|e| frac_mean_curvature_boundary(mesh, e, alpha))
            .collect::<Result<_>>()?,
        CurvatureMethod::Volume => {
            let body = mesh
                .analytic_source()
                .ok_or_else(|| FhsError::Precondition("volume form needs an analytic source body".into()))?;
            mesh.centroids
                .par_iter()
                .map(|x| frac_mean_curvature_volume(body, x, alpha))
                .collect::<Result<_>>()?
        }
    };
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut out = values;
    for (e, v) in out.iter_mut().enumerate() {
        if *v < -1e-6 * max {
            return Err(FhsError::NegativeCurvature {
                element: e,
                value: *v,
                max,
            });
        }
        *v = v.max(0.0);
    }
    Ok(CurvatureField {
        values: out,
        alpha,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub seminorm_term: f64,
    pub curvature_term: f64,
    pub total: f64,
}

/// `(1/2)[u]^p + sum_e H_e^{sp/alpha} |u_e|^p A_e`.
pub fn rhs_energy(
    mesh: &SurfaceMesh,
    u: &ScalarField,
    params: &FracParams,
    h: &CurvatureField,
) -> Result<EnergyBreakdown> {
    if h.alpha != params.alpha {
        return Err(FhsError::AlphaMismatch {
            field: h.alpha,
            params: params.alpha,
        });
    }
    if h.values.len() != mesh.len() {
        return Err(FhsError::LengthMismatch {
            expected: mesh.len(),
            got: h.values.len(),
        });
    }
    let seminorm_term = 0.5 * seminorm_p(mesh, u, params.s, params.p)?;
    let expo = params.s * params.p / params.alpha;
    let curvature_term: f64 = u
        .support_ids
        .iter()
        .map(|&e| h.values[e].powf(expo) * u.values[e].abs().powf(params.p) * mesh.areas[e])
        .sum();
    Ok(EnergyBreakdown {
        seminorm_term,
        curvature_term,
        total: seminorm_term + curvature_term,
    })
}
