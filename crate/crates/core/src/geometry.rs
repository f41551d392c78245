//! Convex bodies in R^{n+1} for n = 1 or 2.
//!
//! Points always live in a three-component vector. For n = 1 the ambient space
//! is the plane spanned by the first two coordinates and the third component
//! is kept at zero.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{FhsError, Result};

pub type Point = Vector3<f64>;

/// One halfspace `<normal, x> <= offset` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Halfspace {
    /// Builds a halfspace from an arbitrary (nonzero) normal, rescaling both sides.
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(FhsError::InvalidBody(format!(
                "halfspace normal must be finite and nonzero, got {normal:?}"
            )));
        }
        let u = normal / len;
        Ok(Halfspace {
            normal: [u.x, u.y, u.z],
            offset: offset / len,
        })
    }

    pub fn normal(&self) -> Point {
        Point::new(self.normal[0], self.normal[1], self.normal[2])
    }

    fn eval(&self, x: &Point) -> f64 {
        self.normal().dot(x) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyKind {
    Ball {
        radius: f64,
    },
    Ellipsoid {
        semi_axes: [f64; 3],
    },
    /// Axis along coordinate `n`. `rounding` is the radius of the ball swept
    /// along the core cylinder `(radius - rounding, half_height - rounding)`.
    Cylinder {
        radius: f64,
        half_height: f64,
        rounding: f64,
    },
    Cube {
        half_side: f64,
    },
    Polytope {
        halfspaces: Vec<Halfspace>,
    },
    /// `{x : <normal, x> < offset}`.
    HalfSpace {
        normal: [f64; 3],
        offset: f64,
    },
}

/// An open convex set: a kind described in local coordinates, then translated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    pub dim_n: usize,
    pub kind: BodyKind,
    pub translation: [f64; 3],
}

/// `x -> scale * x + translate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub scale: f64,
    pub translate: [f64; 3],
}

impl Transform {
    pub fn new(scale: f64, translate: Point) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(FhsError::Precondition(format!(
                "transform scale must be > 0, got {scale}"
            )));
        }
        Ok(Transform {
            scale,
            translate: [translate.x, translate.y, translate.z],
        })
    }

    pub fn scaling(scale: f64) -> Result<Self> {
        Transform::new(scale, Point::zeros())
    }

    pub fn translation(v: Point) -> Self {
        Transform {
            scale: 1.0,
            translate: [v.x, v.y, v.z],
        }
    }

    pub fn translate_vec(&self) -> Point {
        Point::new(self.translate[0], self.translate[1], self.translate[2])
    }

    pub fn apply(&self, x: &Point) -> Point {
        x * self.scale + self.translate_vec()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(FhsError::InvalidBody(format!(
            "boundary dimension must be 1 or 2, got {n}"
        )))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FhsError::InvalidBody(format!("{name} must be positive, got {v}")))
    }
}

impl ConvexBody {
    pub fn new(dim_n: usize, kind: BodyKind, translation: Point) -> Result<Self> {
        check_dim(dim_n)?;
        let body = ConvexBody {
            dim_n,
            kind,
            translation: [translation.x, translation.y, translation.z],
        };
        body.validate()?;
        Ok(body)
    }

    pub fn ball(dim_n: usize, radius: f64) -> Result<Self> {
        ConvexBody::new(dim_n, BodyKind::Ball { radius }, Point::zeros())
    }

    pub fn ellipsoid(dim_n: usize, semi_axes: [f64; 3]) -> Result<Self> {
        ConvexBody::new(dim_n, BodyKind::Ellipsoid { semi_axes }, Point::zeros())
    }

    pub fn cylinder(dim_n: usize, radius: f64, half_height: f64, rounding: f64) -> Result<Self> {
        ConvexBody::new(
            dim_n,
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            },
            Point::zeros(),
        )
    }

    pub fn cube(dim_n: usize, half_side: f64) -> Result<Self> {
        ConvexBody::new(dim_n, BodyKind::Cube { half_side }, Point::zeros())
    }

    pub fn polytope(dim_n: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        ConvexBody::new(dim_n, BodyKind::Polytope { halfspaces }, Point::zeros())
    }

    /// `{x : <normal, x> < offset}`; the normal is normalized.
    pub fn half_space(dim_n: usize, normal: Point, offset: f64) -> Result<Self> {
        let h = Halfspace::new(normal, offset)?;
        ConvexBody::new(
            dim_n,
            BodyKind::HalfSpace {
                normal: h.normal,
                offset: h.offset,
            },
            Point::zeros(),
        )
    }

    pub fn translated(mut self, v: Point) -> Self {
        let t = self.translation() + v;
        self.translation = [t.x, t.y, t.z];
        self
    }

    pub fn translation(&self) -> Point {
        Point::new(self.translation[0], self.translation[1], self.translation[2])
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim_n + 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim_n;
        if n == 1 && self.translation[2] != 0.0 {
            return Err(FhsError::InvalidBody("n = 1 bodies live in the z = 0 plane".into()));
        }
        match &self.kind {
            BodyKind::Ball { radius } => positive("radius", *radius),
            BodyKind::Ellipsoid { semi_axes } => {
                for a in &semi_axes[..=n] {
                    positive("semi-axis", *a)?;
                }
                Ok(())
            }
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            } => {
                positive("radius", *radius)?;
                positive("half_height", *half_height)?;
                if !(*rounding >= 0.0) || *rounding > radius.min(*half_height) {
                    return Err(FhsError::InvalidBody(format!(
                        "rounding must lie in [0, min(radius, half_height)], got {rounding}"
                    )));
                }
                Ok(())
            }
            BodyKind::Cube { half_side } => positive("half_side", *half_side),
            BodyKind::Polytope { halfspaces } => {
                if halfspaces.len() < n + 2 {
                    return Err(FhsError::InvalidBody(format!(
                        "a bounded polytope in R^{} needs at least {} halfspaces",
                        n + 1,
                        n + 2
                    )));
                }
                if n == 1 && halfspaces.iter().any(|h| h.normal[2] != 0.0) {
                    return Err(FhsError::InvalidBody("n = 1 halfspaces must have zero z-normal".into()));
                }
                let verts = polytope_vertices(n, halfspaces);
                if verts.len() < n + 2 {
                    return Err(FhsError::InvalidBody("polytope has empty interior".into()));
                }
                let c = verts.iter().sum::<Point>() / verts.len() as f64;
                if !halfspaces.iter().all(|h| h.eval(&c) < -1e-9) {
                    return Err(FhsError::InvalidBody("polytope has empty interior".into()));
                }
                if !polytope_is_bounded(n, halfspaces) {
                    return Err(FhsError::InvalidBody("polytope is unbounded".into()));
                }
                Ok(())
            }
            BodyKind::HalfSpace { normal, .. } => {
                let u = Point::from(*normal);
                if (u.norm() - 1.0).abs() > 1e-12 || (n == 1 && u.z != 0.0) {
                    return Err(FhsError::InvalidBody("halfspace normal must be a unit vector".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, BodyKind::HalfSpace { .. })
    }

    /// Ball, ellipsoid and cylinder have closed-form boundaries that meshes
    /// project onto; polytopes, cubes and halfspaces are meshed exactly.
    pub fn is_analytic(&self) -> bool {
        matches!(
            self.kind,
            BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } | BodyKind::Cylinder { .. }
        )
    }

    /// A point of the open set used as reference for outward orientation.
    pub fn interior_point(&self) -> Point {
        let local = match &self.kind {
            BodyKind::Polytope { halfspaces } => {
                let v = polytope_vertices(self.dim_n, halfspaces);
                v.iter().sum::<Point>() / v.len() as f64
            }
            BodyKind::HalfSpace { normal, offset } => {
                let u = Point::from(*normal);
                u * (*offset - 1.0)
            }
            _ => Point::zeros(),
        };
        local + self.translation()
    }

    pub fn contains(&self, x: &Point) -> bool {
        let y = x - self.translation();
        let n = self.dim_n;
        match &self.kind {
            BodyKind::Ball { radius } => y.norm() < *radius,
            BodyKind::Ellipsoid { semi_axes } => {
                let q: f64 = (0..=n).map(|i| (y[i] / semi_axes[i]).powi(2)).sum();
                q < 1.0
            }
            BodyKind::Cylinder { .. } => self.cylinder_level(&y) < 0.0,
            BodyKind::Cube { half_side } => (0..=n).all(|i| y[i].abs() < *half_side),
            BodyKind::Polytope { halfspaces } => halfspaces.iter().all(|h| h.eval(&y) < 0.0),
            BodyKind::HalfSpace { normal, offset } => Point::from(*normal).dot(&y) < *offset,
        }
    }

    /// Returns the maximizer of `<x, direction>` over the closure of the body.
    pub fn support_point(&self, direction: &Point) -> Result<Point> {
        let len = direction.norm();
        if !(len > 0.0) {
            return Err(FhsError::Precondition("support direction must be nonzero".into()));
        }
        let d = direction / len;
        let n = self.dim_n;
        let local = match &self.kind {
            BodyKind::Ball { radius } => d * *radius,
            BodyKind::Ellipsoid { semi_axes } => {
                let mut a2d = Point::zeros();
                let mut ad = Point::zeros();
                for i in 0..=n {
                    a2d[i] = semi_axes[i] * semi_axes[i] * d[i];
                    ad[i] = semi_axes[i] * d[i];
                }
                a2d / ad.norm()
            }
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            } => {
                let (rc, hc) = (radius - rounding, half_height - rounding);
                let mut p = Point::zeros();
                let radial: f64 = (0..n).map(|i| d[i] * d[i]).sum::<f64>().sqrt();
                if radial > 0.0 {
                    for i in 0..n {
                        p[i] = rc * d[i] / radial;
                    }
                }
                p[n] = hc * sign0(d[n]);
                p + d * *rounding
            }
            BodyKind::Cube { half_side } => {
                let mut p = Point::zeros();
                for i in 0..=n {
                    p[i] = half_side * sign0(d[i]);
                }
                p
            }
            BodyKind::Polytope { halfspaces } => {
                let verts = polytope_vertices(n, halfspaces);
                *verts
                    .iter()
                    .max_by(|a, b| a.dot(&d).total_cmp(&b.dot(&d)))
                    .expect("validated polytope has vertices")
            }
            BodyKind::HalfSpace { normal, offset } => {
                let u = Point::from(*normal);
                if (d - u).norm() > 1e-12 {
                    return Err(FhsError::UnboundedBody);
                }
                u * *offset
            }
        };
        Ok(local + self.translation())
    }

    /// The body `scale * Omega + translate`.
    pub fn apply_transform(&self, t: &Transform) -> ConvexBody {
        let l = t.scale;
        let kind = match &self.kind {
            BodyKind::Ball { radius } => BodyKind::Ball { radius: radius * l },
            BodyKind::Ellipsoid { semi_axes } => BodyKind::Ellipsoid {
                semi_axes: semi_axes.map(|a| a * l),
            },
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            } => BodyKind::Cylinder {
                radius: radius * l,
                half_height: half_height * l,
                rounding: rounding * l,
            },
            BodyKind::Cube { half_side } => BodyKind::Cube {
                half_side: half_side * l,
            },
            BodyKind::Polytope { halfspaces } => BodyKind::Polytope {
                halfspaces: halfspaces
                    .iter()
                    .map(|h| Halfspace {
                        normal: h.normal,
                        offset: h.offset * l,
                    })
                    .collect(),
            },
            BodyKind::HalfSpace { normal, offset } => BodyKind::HalfSpace {
                normal: *normal,
                offset: offset * l,
            },
        };
        let tr = t.apply(&self.translation());
        ConvexBody {
            dim_n: self.dim_n,
            kind,
            translation: [tr.x, tr.y, tr.z],
        }
    }

    /// Convex level function of the cylinder in local coordinates, negative inside.
    fn cylinder_level(&self, y: &Point) -> f64 {
        let BodyKind::Cylinder {
            radius,
            half_height,
            rounding,
        } = self.kind
        else {
            unreachable!("cylinder_level on non-cylinder")
        };
        let n = self.dim_n;
        let radial: f64 = (0..n).map(|i| y[i] * y[i]).sum::<f64>().sqrt();
        let axial = y[n].abs();
        if rounding > 0.0 {
            let dr = (radial - (radius - rounding)).max(0.0);
            let dz = (axial - (half_height - rounding)).max(0.0);
            (dr * dr + dz * dz).sqrt() - rounding
        } else {
            (radial - radius).max(axial - half_height)
        }
    }

    /// Parameter interval `(t0, t1)` of `{t : origin + t * dir in Omega}`, or
    /// `None` when the line misses the open set. `dir` need not be normalized.
    pub fn line_interval(&self, origin: &Point, dir: &Point) -> Result<Option<(f64, f64)>> {
        let o = origin - self.translation();
        let n = self.dim_n;
        match &self.kind {
            BodyKind::Ball { radius } => Ok(quadratic_interval(
                dir.norm_squared(),
                2.0 * o.dot(dir),
                o.norm_squared() - radius * radius,
            )),
            BodyKind::Ellipsoid { semi_axes } => {
                let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
                for i in 0..=n {
                    let inv = 1.0 / (semi_axes[i] * semi_axes[i]);
                    a += dir[i] * dir[i] * inv;
                    b += 2.0 * o[i] * dir[i] * inv;
                    c += o[i] * o[i] * inv;
                }
                Ok(quadratic_interval(a, b, c))
            }
            BodyKind::Cylinder {
                radius, half_height, ..
            } => {
                let reach = o.norm() + radius.hypot(*half_height) + 1.0;
                let dl = dir.norm();
                let span = reach / dl;
                Ok(convex_sublevel_interval(
                    |t| self.cylinder_level(&(o + dir * t)),
                    -span,
                    span,
                ))
            }
            BodyKind::Cube { half_side } => {
                let mut hs = Vec::with_capacity(2 * (n + 1));
                for i in 0..=n {
                    let mut e = [0.0; 3];
                    e[i] = 1.0;
                    hs.push(Halfspace {
                        normal: e,
                        offset: *half_side,
                    });
                    e[i] = -1.0;
                    hs.push(Halfspace {
                        normal: e,
                        offset: *half_side,
                    });
                }
                Ok(clip_line(&hs, &o, dir))
            }
            BodyKind::Polytope { halfspaces } => Ok(clip_line(halfspaces, &o, dir)),
            BodyKind::HalfSpace { .. } => Err(FhsError::UnboundedBody),
        }
    }

    /// Radial projection from the body's center onto the boundary. Only
    /// meaningful for bounded bodies; points at the center are returned as is.
    pub fn project_to_boundary(&self, p: &Point) -> Point {
        let c = self.translation();
        let d = p - c;
        let len = d.norm();
        if len == 0.0 {
            return *p;
        }
        match &self.kind {
            BodyKind::Ball { radius } => c + d * (*radius / len),
            BodyKind::Ellipsoid { semi_axes } => {
                let q: f64 = (0..=self.dim_n).map(|i| (d[i] / semi_axes[i]).powi(2)).sum();
                c + d / q.sqrt()
            }
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            } => c + d * cylinder_ray_exit(self.dim_n, &d, *radius, *half_height, *rounding),
            _ => match self.line_interval(&c, &d) {
                Ok(Some((_, t1))) => c + d * t1,
                _ => *p,
            },
        }
    }

    /// Outward unit normal at a boundary point, for bodies with a defined
    /// smooth normal there (analytic kinds and halfspaces).
    pub fn outward_normal(&self, x: &Point) -> Option<Point> {
        let y = x - self.translation();
        let n = self.dim_n;
        let g = match &self.kind {
            BodyKind::Ball { .. } => y,
            BodyKind::Ellipsoid { semi_axes } => {
                let mut g = Point::zeros();
                for i in 0..=n {
                    g[i] = y[i] / (semi_axes[i] * semi_axes[i]);
                }
                g
            }
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            } => {
                let (rc, hc) = (radius - rounding, half_height - rounding);
                let radial: f64 = (0..n).map(|i| y[i] * y[i]).sum::<f64>().sqrt();
                let dr = radial - rc;
                let dz = y[n].abs() - hc;
                // Unit normal in the (radial, axial) half-plane.
                let (nr, nz) = if *rounding > 0.0 && dr > 0.0 && dz > 0.0 {
                    let l = dr.hypot(dz);
                    (dr / l, dz / l)
                } else if dr >= dz {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                };
                let mut g = Point::zeros();
                if radial > 0.0 {
                    for i in 0..n {
                        g[i] = nr * y[i] / radial;
                    }
                }
                g[n] = nz * sign0(y[n]);
                g
            }
            BodyKind::HalfSpace { normal, .. } => Point::from(*normal),
            BodyKind::Cube { .. } | BodyKind::Polytope { .. } => return None,
        };
        let l = g.norm();
        (l > 0.0).then(|| g / l)
    }

    /// Short human-readable description used in reports.
    pub fn describe(&self) -> String {
        let t = self.translation();
        let kind = match &self.kind {
            BodyKind::Ball { radius } => format!("ball(r={radius})"),
            BodyKind::Ellipsoid { semi_axes } => {
                format!("ellipsoid(a={:?})", &semi_axes[..=self.dim_n])
            }
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            } => {
                format!("cylinder(r={radius},h={half_height},rho={rounding})")
            }
            BodyKind::Cube { half_side } => format!("cube(s={half_side})"),
            BodyKind::Polytope { halfspaces } => format!("polytope({} halfspaces)", halfspaces.len()),
            BodyKind::HalfSpace { normal, offset } => format!("halfspace(nu={normal:?},b={offset})"),
        };
        format!("n={} {} at ({}, {}, {})", self.dim_n, kind, t.x, t.y, t.z)
    }
}

impl fmt::Display for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Parameter `t` where the ray `t d` from the cylinder's center leaves it.
fn cylinder_ray_exit(n: usize, d: &Point, r: f64, hh: f64, rho: f64) -> f64 {
    let a: f64 = (0..n).map(|i| d[i] * d[i]).sum::<f64>().sqrt();
    let b = d[n].abs();
    let (rc, hc) = (r - rho, hh - rho);
    if a > 0.0 && (r / a) * b <= hc {
        return r / a;
    }
    if b > 0.0 && (hh / b) * a <= rc {
        return hh / b;
    }
    // Rounded rim: larger root of |(t a, t b) - (rc, hc)| = rho.
    let qa = a * a + b * b;
    let qb = a * rc + b * hc;
    let qc = rc * rc + hc * hc - rho * rho;
    (qb + (qb * qb - qa * qc).max(0.0).sqrt()) / qa
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn quadratic_interval(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a <= 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Stable pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q != 0.0 {
        (q / a, c / q)
    } else {
        (-sq / (2.0 * a), sq / (2.0 * a))
    };
    Some((r1.min(r2), r1.max(r2)))
}

/// `{t in [lo, hi] : f(t) < 0}` for convex `f` positive at both ends.
fn convex_sublevel_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Option<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..90 {
        if f1 < 0.0 || f2 < 0.0 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let (tm, fm) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if !(fm < 0.0) {
        return None;
    }
    let root = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if f(mid) < 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    Some((root(tm, lo), root(tm, hi)))
}

fn clip_line(halfspaces: &[Halfspace], o: &Point, dir: &Point) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for h in halfspaces {
        let u = h.normal();
        let denom = u.dot(dir);
        let num = h.offset - u.dot(o);
        if denom.abs() < 1e-300 {
            if num <= 0.0 {
                return None;
            }
            continue;
        }
        let t = num / denom;
        if denom > 0.0 {
            t1 = t1.min(t);
        } else {
            t0 = t0.max(t);
        }
    }
    (t0 < t1).then_some((t0, t1))
}

fn solve3(rows: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<Point> {
    let m = nalgebra::Matrix3::from_row_slice(&rows.concat());
    let det = m.determinant();
    if det.abs() < 1e-12 {
        return None;
    }
    m.lu().solve(&Point::from(rhs))
}

/// Vertices of the polytope, deduplicated, in local coordinates.
pub fn polytope_vertices(n: usize, halfspaces: &[Halfspace]) -> Vec<Point> {
    let m = halfspaces.len();
    let tol = 1e-9;
    let mut out: Vec<Point> = Vec::new();
    let mut push = |p: Point| {
        if halfspaces.iter().all(|h| h.eval(&p) <= tol) && !out.iter().any(|q| (q - p).norm() < 1e-8) {
            out.push(p);
        }
    };
    if n == 1 {
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (halfspaces[i], halfspaces[j]);
                let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (a.offset * b.normal[1] - b.offset * a.normal[1]) / det;
                let y = (a.normal[0] * b.offset - b.normal[0] * a.offset) / det;
                push(Point::new(x, y, 0.0));
            }
        }
    } else {
        for i in 0..m {
            for j in (i + 1)..m {
                for k in (j + 1)..m {
                    let (a, b, c) = (halfspaces[i], halfspaces[j], halfspaces[k]);
                    if let Some(p) = solve3([a.normal, b.normal, c.normal], [a.offset, b.offset, c.offset]) {
                        push(p);
                    }
                }
            }
        }
    }
    out
}

/// Boundedness test: every probe direction must be blocked by some halfspace.
fn polytope_is_bounded(n: usize, halfspaces: &[Halfspace]) -> bool {
    let probes = 4096;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..probes).all(|k| {
        let d = if n == 1 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / probes as f64;
            Point::new(th.cos(), th.sin(), 0.0)
        } else {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / probes as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * k as f64;
            Point::new(r * th.cos(), r * th.sin(), z)
        };
        halfspaces.iter().any(|h| h.normal().dot(&d) > 1e-12)
    })
}

/// Parses halfspaces from text: one line per halfspace, `a_1 ... a_{n+1} b`
/// meaning `<a, x> <= b`. Blank lines and `#` comments are skipped.
pub fn parse_halfspaces(n: usize, text: &str) -> Result<Vec<Halfspace>> {
    check_dim(n)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FhsError::Parse(format!("line {}: {e}", lineno + 1)))?;
        if nums.len() != n + 2 {
            return Err(FhsError::Parse(format!(
                "line {}: expected {} numbers, got {}",
                lineno + 1,
                n + 2,
                nums.len()
            )));
        }
        let mut a = Point::zeros();
        for i in 0..=n {
            a[i] = nums[i];
        }
        out.push(Halfspace::new(a, nums[n + 1])?);
    }
    Ok(out)
}

/// Parses a body description such as "ball:1", "ellipsoid:1,2,3",
/// "cylinder:1,0.5,0.1", "cube:1", "halfspace:0,0,1,0" (normal then offset)
/// or "polytope:path/to/file", optionally followed by "@tx,ty,tz".
pub fn parse_body(n: usize, text: &str) -> Result<ConvexBody> {
    check_dim(n)?;
    let (spec, shift) = match text.trim().split_once('@') {
        Some((a, b)) => (a, Some(b)),
        None => (text.trim(), None),
    };
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = || -> Result<Vec<f64>> {
        args.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| FhsError::Parse(format!("body argument {t:?}: {e}")))
            })
            .collect()
    };
    let want = |v: &[f64], k: usize| -> Result<()> {
        if v.len() == k {
            Ok(())
        } else {
            Err(FhsError::Parse(format!(
                "body {name} takes {k} arguments, got {}",
                v.len()
            )))
        }
    };
    let body = match name {
        "ball" | "sphere" => {
            let v = nums()?;
            want(&v, 1)?;
            ConvexBody::ball(n, v[0])?
        }
        "ellipsoid" => {
            let v = nums()?;
            want(&v, n + 1)?;
            let mut axes = [1.0; 3];
            axes[..=n].copy_from_slice(&v);
            ConvexBody::ellipsoid(n, axes)?
        }
        "cylinder" => {
            let v = nums()?;
            want(&v, 3)?;
            ConvexBody::cylinder(n, v[0], v[1], v[2])?
        }
        "cube" => {
            let v = nums()?;
            want(&v, 1)?;
            ConvexBody::cube(n, v[0])?
        }
        "halfspace" => {
            let v = nums()?;
            want(&v, n + 2)?;
            let mut nu = Point::zeros();
            for i in 0..=n {
                nu[i] = v[i];
            }
            ConvexBody::half_space(n, nu, v[n + 1])?
        }
        "polytope" => {
            let text = std::fs::read_to_string(args)?;
            ConvexBody::polytope(n, parse_halfspaces(n, &text)?)?
        }
        _ => return Err(FhsError::Parse(format!("unknown body {name:?}"))),
    };
    match shift {
        None => Ok(body),
        Some(t) => {
            let v: Vec<f64> = t
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| FhsError::Parse(format!("translation {x:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if v.len() != n + 1 {
                return Err(FhsError::Parse(format!("translation needs {} components", n + 1)));
            }
            let mut p = Point::zeros();
            for i in 0..=n {
                p[i] = v[i];
            }
            Ok(body.translated(p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e1() -> Point {
        Point::new(1.0, 0.0, 0.0)
    }

    #[test]
    fn contains_examples() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        assert!(ball.contains(&Point::zeros()));
        assert!(!ball.contains(&Point::new(2.0, 0.0, 0.0)));
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert!(cube.contains(&Point::new(0.999, 0.999, 0.999)));
        assert!(!cube.contains(&Point::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn support_examples() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        assert!((ball.support_point(&e1()).unwrap() - e1()).norm() < 1e-15);
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert_eq!(cube.support_point(&e1()).unwrap().x, 1.0);
        let shifted = ball.clone().translated(Point::new(3.0, 0.0, 0.0));
        let p = shifted.support_point(&-e1()).unwrap();
        assert!((p - Point::new(2.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn halfspace_support_only_along_normal() {
        let hs = ConvexBody::half_space(2, Point::new(0.0, 0.0, 1.0), 0.0).unwrap();
        assert_eq!(hs.support_point(&e1()), Err(FhsError::UnboundedBody));
        assert!(hs.support_point(&Point::new(0.0, 0.0, 1.0)).is_ok());
    }

    #[test]
    fn transform_examples() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let b2 = ball.apply_transform(&Transform::scaling(2.0).unwrap());
        assert_eq!(b2.kind, BodyKind::Ball { radius: 2.0 });
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        let moved = cube.apply_transform(&Transform::translation(e1()));
        assert_eq!(moved.translation(), e1());
        assert_eq!(moved.kind, cube.kind);
        let cyl = ConvexBody::cylinder(2, 1.0, 1.0, 0.1).unwrap();
        let c2 = cyl.apply_transform(&Transform::scaling(0.5).unwrap());
        assert_eq!(
            c2.kind,
            BodyKind::Cylinder {
                radius: 0.5,
                half_height: 0.5,
                rounding: 0.05
            }
        );
    }

    #[test]
    fn invalid_bodies_rejected() {
        assert!(ConvexBody::ball(3, 1.0).is_err());
        assert!(ConvexBody::ball(2, -1.0).is_err());
        assert!(ConvexBody::cylinder(2, 1.0, 0.5, 0.6).is_err());
        // Missing the -z face: unbounded.
        let hs = parse_halfspaces(2, "1 0 0 1\n-1 0 0 1\n0 1 0 1\n0 -1 0 1\n0 0 1 1\n").unwrap();
        assert!(ConvexBody::polytope(2, hs).is_err());
    }

    #[test]
    fn parse_body_specs() {
        let b = parse_body(2, "ball:2@0,0,1").unwrap();
        assert_eq!(b, ConvexBody::ball(2, 2.0).unwrap().translated(Point::z()));
        assert_eq!(
            parse_body(1, "ellipsoid:1,2").unwrap(),
            ConvexBody::ellipsoid(1, [1.0, 2.0, 1.0]).unwrap()
        );
        assert!(parse_body(2, "cylinder:1,1,0.2").unwrap().is_bounded());
        assert!(!parse_body(2, "halfspace:0,0,1,0").unwrap().is_bounded());
        assert!(parse_body(2, "ball:1,2").is_err());
        assert!(parse_body(2, "torus:1").is_err());
        assert!(parse_body(2, "ball:1@1,2").is_err());
    }

    #[test]
    fn parse_halfspace_file() {
        let text = "# unit square\n1 0 1\n-1 0 1\n0 1 1\n0 -1 1\n";
        let hs = parse_halfspaces(1, text).unwrap();
        assert_eq!(hs.len(), 4);
        let sq = ConvexBody::polytope(1, hs).unwrap();
        assert!(sq.contains(&Point::new(0.5, -0.5, 0.0)));
        assert_eq!(
            polytope_vertices(
                1,
                match &sq.kind {
                    BodyKind::Polytope { halfspaces } => halfspaces,
                    _ => unreachable!(),
                }
            )
            .len(),
            4
        );
        assert!(parse_halfspaces(1, "1 0\n").is_err());
        assert!(parse_halfspaces(1, "1 x 1\n").is_err());
    }

    fn sample_bodies() -> Vec<ConvexBody> {
        let t = Point::new(0.3, -0.2, 0.1);
        vec![
            ConvexBody::ball(2, 1.3).unwrap().translated(t),
            ConvexBody::ellipsoid(2, [1.0, 0.5, 2.0]).unwrap().translated(t),
            ConvexBody::cylinder(2, 1.0, 0.7, 0.2).unwrap().translated(t),
            ConvexBody::cylinder(2, 1.0, 0.7, 0.0).unwrap(),
            ConvexBody::cube(2, 0.8).unwrap().translated(t),
            ConvexBody::cylinder(1, 1.0, 0.4, 0.1).unwrap(),
            ConvexBody::ellipsoid(1, [2.0, 0.5, 0.0]).unwrap(),
        ]
    }

    fn random_in_box(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Point {
        let mut p = Point::zeros();
        for i in 0..=n {
            p[i] = rng.gen_range(-half..half);
        }
        p
    }

    #[test]
    fn support_dominates_interior_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for body in sample_bodies() {
            let n = body.dim_n;
            let mut inside = Vec::new();
            while inside.len() < 20_000 {
                let p = random_in_box(&mut rng, n, 2.5);
                if body.contains(&p) {
                    inside.push(p);
                }
            }
            for _ in 0..50 {
                let mut d = random_in_box(&mut rng, n, 1.0);
                d /= d.norm();
                let s = body.support_point(&d).unwrap();
                let hs = s.dot(&d);
                assert!(inside.iter().all(|x| x.dot(&d) <= hs + 1e-12), "{body}");
                // The support point is on the boundary: just outside along d.
                assert!(!body.contains(&(s + d * 1e-9)), "{body}");
            }
        }
    }

    #[test]
    fn contains_commutes_with_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for body in sample_bodies() {
            let n = body.dim_n;
            for _ in 0..200 {
                let mut v = random_in_box(&mut rng, n, 1.0);
                v.z = if n == 1 { 0.0 } else { v.z };
                let t = Transform::new(rng.gen_range(0.2..3.0), v).unwrap();
                let tb = body.apply_transform(&t);
                for _ in 0..20 {
                    let x = random_in_box(&mut rng, n, 2.5);
                    let y = t.apply(&x);
                    // Skip points numerically on the boundary.
                    let margin = (tb.project_to_boundary(&y) - y).norm();
                    if margin < 1e-9 {
                        continue;
                    }
                    assert_eq!(tb.contains(&y), body.contains(&x), "{body} {t:?}");
                }
            }
        }
    }

    #[test]
    fn line_interval_endpoints_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for body in sample_bodies() {
            let n = body.dim_n;
            for _ in 0..100 {
                let o = body.translation() + random_in_box(&mut rng, n, 0.2);
                let d = random_in_box(&mut rng, n, 1.0);
                let (t0, t1) = body.line_interval(&o, &d).unwrap().unwrap();
                assert!(t0 < 0.0 && t1 > 0.0);
                for t in [t0, t1] {
                    let p = o + d * t;
                    assert!(!body.contains(&(p + d * (t.signum() * 1e-7))));
                    assert!(body.contains(&(p - d * (t.signum() * 1e-7))));
                }
            }
        }
    }

    #[test]
    fn projection_lands_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for body in sample_bodies().into_iter().filter(|b| b.is_analytic()) {
            let n = body.dim_n;
            for _ in 0..200 {
                let d = random_in_box(&mut rng, n, 1.0);
                let p = body.project_to_boundary(&(body.translation() + d));
                assert!(body.contains(&(body.translation() + (p - body.translation()) * (1.0 - 1e-9))));
                assert!(!body.contains(&(body.translation() + (p - body.translation()) * (1.0 + 1e-9))));
            }
        }
    }

    #[test]
    fn analytic_normals_are_outward() {
        for body in sample_bodies().into_iter().filter(|b| b.is_analytic()) {
            let s = body.support_point(&Point::new(0.6, 0.8, 0.0)).unwrap();
            let nu = body.outward_normal(&s).unwrap();
            assert!((nu.norm() - 1.0).abs() < 1e-12);
            assert!(!body.contains(&(s + nu * 1e-7)));
            assert!(body.contains(&(s - nu * 1e-7)));
        }
    }
}
