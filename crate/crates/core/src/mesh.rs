//! Simplicial boundary meshes: polylines for n = 1, triangle meshes for n = 2.
//!
//! Data are piecewise constant on elements and sampled at element centroids.
//! For analytic bodies the centroids (and all vertices) lie on the exact
//! boundary; element areas and normals are those of the flat simplices.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{FhsError, Result};
use crate::geometry::{polytope_vertices, BodyKind, ConvexBody, Halfspace, Point, Transform};
use crate::simplex::Simplex;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub dim_n: usize,
    pub vertices: Vec<Point>,
    connectivity: Vec<usize>,
    pub areas: Vec<f64>,
    pub centroids: Vec<Point>,
    pub normals: Vec<Point>,
    pub h_max: f64,
    /// Body the mesh approximates; analytic sources drive vertex projection
    /// under refinement and curved quadrature.
    pub source: Option<ConvexBody>,
}

impl SurfaceMesh {
    /// Assembles a mesh, orienting every element outward with respect to
    /// `interior` and computing the per-element data.
    pub fn from_parts(
        dim_n: usize,
        vertices: Vec<Point>,
        mut connectivity: Vec<usize>,
        source: Option<ConvexBody>,
        interior: Point,
    ) -> Result<Self> {
        let k = dim_n + 1;
        assert_eq!(
            connectivity.len() % k,
            0,
            "connectivity length must be a multiple of n+1"
        );
        let count = connectivity.len() / k;
        let project = source.as_ref().filter(|b| b.is_analytic()).cloned();
        let mut areas = Vec::with_capacity(count);
        let mut centroids = Vec::with_capacity(count);
        let mut normals = Vec::with_capacity(count);
        let mut h_max: f64 = 0.0;
        for e in 0..count {
            let idx = &mut connectivity[e * k..(e + 1) * k];
            let s = simplex_of(&vertices, idx);
            let (mut nu, area) = raw_normal(&s);
            if !(area > 0.0) {
                return Err(FhsError::InvalidBody(format!("element {e} has zero measure")));
            }
            let bary = s.centroid();
            if nu.dot(&(bary - interior)) < 0.0 {
                idx.swap(0, 1);
                nu = -nu;
            }
            let c = match &project {
                Some(b) => b.project_to_boundary(&bary),
                None => bary,
            };
            areas.push(area);
            centroids.push(c);
            normals.push(nu);
            h_max = h_max.max(s.diameter());
        }
        Ok(SurfaceMesh {
            dim_n,
            vertices,
            connectivity,
            areas,
            centroids,
            normals,
            h_max,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim_n + 1;
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn simplex(&self, e: usize) -> Simplex {
        simplex_of(&self.vertices, self.element(e))
    }

    pub fn diameter(&self, e: usize) -> f64 {
        self.simplex(e).diameter()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Body used for curved-element projection, if analytic.
    pub fn analytic_source(&self) -> Option<&ConvexBody> {
        self.source.as_ref().filter(|b| b.is_analytic())
    }

    /// True when the mesh is a flat halfspace patch.
    pub fn is_planar_patch(&self) -> bool {
        matches!(self.source.as_ref().map(|b| &b.kind), Some(BodyKind::HalfSpace { .. }))
    }

    /// `|sum_e area_e * nu_e| / sum_e area_e`; zero for closed meshes.
    pub fn closure_defect(&self) -> f64 {
        let v: Point = self.areas.iter().zip(&self.normals).map(|(a, n)| n * *a).sum();
        v.norm() / self.total_area()
    }
}

fn simplex_of(vertices: &[Point], idx: &[usize]) -> Simplex {
    if idx.len() == 2 {
        Simplex::segment(vertices[idx[0]], vertices[idx[1]])
    } else {
        Simplex::triangle(vertices[idx[0]], vertices[idx[1]], vertices[idx[2]])
    }
}

/// Unit normal (orientation from vertex order) and measure of a flat simplex.
fn raw_normal(s: &Simplex) -> (Point, f64) {
    let [a, b, c] = s.pts;
    if s.k == 2 {
        let t = b - a;
        let len = t.norm();
        (Point::new(t.y, -t.x, 0.0) / len, len)
    } else {
        let cr = (b - a).cross(&(c - a));
        let len = cr.norm();
        (cr / len, 0.5 * len)
    }
}

/// Meshes the boundary of a bounded body with elements of diameter about
/// `target_h`.
pub fn mesh_boundary(body: &ConvexBody, target_h: f64) -> Result<SurfaceMesh> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(FhsError::Precondition(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    let n = body.dim_n;
    let mesh = match (&body.kind, n) {
        (BodyKind::HalfSpace { .. }, _) => return Err(FhsError::UnboundedBody),
        (BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. }, 2) => icosphere(body, target_h)?,
        (BodyKind::Ball { radius }, 1) => ellipse(body, [*radius, *radius], target_h)?,
        (BodyKind::Ellipsoid { semi_axes }, 1) => ellipse(body, [semi_axes[0], semi_axes[1]], target_h)?,
        (
            BodyKind::Cylinder {
                radius,
                half_height,
                rounding,
            },
            _,
        ) => cylinder(body, *radius, *half_height, *rounding, target_h)?,
        (BodyKind::Cube { half_side }, _) => {
            let hs = cube_halfspaces(n, *half_side);
            polytope(body, &hs, target_h)?
        }
        (BodyKind::Polytope { halfspaces }, _) => polytope(body, halfspaces, target_h)?,
        _ => unreachable!("dimension validated at construction"),
    };
    if mesh.len() < 8 {
        return Err(FhsError::ResolutionTooCoarse { elements: mesh.len() });
    }
    Ok(mesh)
}

/// Meshes a square (n = 2) or segment (n = 1) patch of half-width `extent`
/// of a halfspace boundary, centered at the foot of the origin.
pub fn mesh_patch(body: &ConvexBody, target_h: f64, extent: f64) -> Result<SurfaceMesh> {
    let BodyKind::HalfSpace { normal, offset } = body.kind else {
        return Err(FhsError::Precondition("patch meshing requires a halfspace".into()));
    };
    if !(target_h > 0.0) || !(extent > 0.0) {
        return Err(FhsError::Precondition(
            "patch extent and target_h must be positive".into(),
        ));
    }
    let nu = Point::from(normal);
    let p0 = nu * offset + body.translation();
    let u = if body.dim_n == 1 {
        Point::new(-nu.y, nu.x, 0.0)
    } else {
        let helper = if nu.x.abs() < 0.9 { Point::x() } else { Point::y() };
        nu.cross(&helper).normalize()
    };
    let v = nu.cross(&u);
    let m = (2.0 * extent / target_h).ceil().max(1.0) as usize;
    let step = 2.0 * extent / m as f64;
    let mut vertices = Vec::new();
    let mut conn = Vec::new();
    if body.dim_n == 1 {
        for i in 0..=m {
            vertices.push(p0 + u * (-extent + step * i as f64));
        }
        for i in 0..m {
            conn.extend([i, i + 1]);
        }
    } else {
        for j in 0..=m {
            for i in 0..=m {
                vertices.push(p0 + u * (-extent + step * i as f64) + v * (-extent + step * j as f64));
            }
        }
        let id = |i: usize, j: usize| j * (m + 1) + i;
        for j in 0..m {
            for i in 0..m {
                conn.extend([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                conn.extend([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    let mesh = SurfaceMesh::from_parts(body.dim_n, vertices, conn, Some(body.clone()), body.interior_point())?;
    if mesh.len() < 8 {
        return Err(FhsError::ResolutionTooCoarse { elements: mesh.len() });
    }
    Ok(mesh)
}

fn icosahedron() -> (Vec<Point>, Vec<usize>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let verts = raw.iter().map(|&(x, y, z)| Point::new(x, y, z).normalize()).collect();
    let faces = vec![
        0, 11, 5, 0, 5, 1, 0, 1, 7, 0, 7, 10, 0, 10, 11, 1, 5, 9, 5, 11, 4, 11, 10, 2, 10, 7, 6, 7, 1, 8, 3, 9, 4, 3,
        4, 2, 3, 2, 6, 3, 6, 8, 3, 8, 9, 4, 9, 5, 2, 4, 11, 6, 2, 10, 8, 6, 7, 9, 8, 1,
    ];
    (verts, faces)
}

fn icosphere(body: &ConvexBody, target_h: f64) -> Result<SurfaceMesh> {
    let axes = match body.kind {
        BodyKind::Ball { radius } => [radius; 3],
        BodyKind::Ellipsoid { semi_axes } => semi_axes,
        _ => unreachable!(),
    };
    let (unit, faces) = icosahedron();
    let c = body.translation();
    let verts = unit
        .iter()
        .map(|u| Point::new(axes[0] * u.x, axes[1] * u.y, axes[2] * u.z) + c)
        .collect();
    let mut mesh = SurfaceMesh::from_parts(2, verts, faces, Some(body.clone()), c)?;
    // Icosahedron edge on the unit sphere is ~1.05; projected midpoint
    // subdivision keeps edges within ~1.2x of the halved length.
    let max_axis = axes.iter().cloned().fold(0.0, f64::max);
    let mut est = 1.2 * 1.0515 * max_axis;
    while est > target_h {
        mesh = refine(&mesh);
        est *= 0.5;
    }
    Ok(mesh)
}

fn ellipse(body: &ConvexBody, axes: [f64; 2], target_h: f64) -> Result<SurfaceMesh> {
    let (a, b) = (axes[0], axes[1]);
    let h = ((a - b) / (a + b)).powi(2);
    let perimeter = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
    let count = (perimeter / target_h).ceil() as usize;
    if count < 8 {
        return Err(FhsError::ResolutionTooCoarse { elements: count });
    }
    let c = body.translation();
    let verts = (0..count)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / count as f64;
            Point::new(a * th.cos(), b * th.sin(), 0.0) + c
        })
        .collect();
    let conn = (0..count).flat_map(|i| [i, (i + 1) % count]).collect();
    SurfaceMesh::from_parts(1, verts, conn, Some(body.clone()), c)
}

/// Profile of the rounded cylinder in the (radial, axial) half-plane, from
/// the top pole to the bottom pole, sampled with spacing about `h`.
fn cylinder_profile(r: f64, hh: f64, rho: f64, h: f64) -> Vec<(f64, f64)> {
    let (rc, hc) = (r - rho, hh - rho);
    let mut pts = vec![(0.0, hh)];
    let line = |pts: &mut Vec<(f64, f64)>, to: (f64, f64)| {
        let from = *pts.last().unwrap();
        let len = (to.0 - from.0).hypot(to.1 - from.1);
        if len <= 1e-15 {
            return;
        }
        let k = (len / h).ceil().max(1.0) as usize;
        for i in 1..=k {
            let t = i as f64 / k as f64;
            pts.push((from.0 + t * (to.0 - from.0), from.1 + t * (to.1 - from.1)));
        }
    };
    let arc = |pts: &mut Vec<(f64, f64)>, cz: f64, a0: f64, a1: f64| {
        if rho <= 0.0 {
            return;
        }
        let k = (rho * (a1 - a0).abs() / h).ceil().max(2.0) as usize;
        for i in 1..=k {
            let a = a0 + (a1 - a0) * i as f64 / k as f64;
            pts.push((rc + rho * a.cos(), cz + rho * a.sin()));
        }
    };
    line(&mut pts, (rc, hh));
    arc(&mut pts, hc, PI / 2.0, 0.0);
    line(&mut pts, (r, -hc));
    arc(&mut pts, -hc, 0.0, -PI / 2.0);
    line(&mut pts, (0.0, -hh));
    pts
}

fn cylinder(body: &ConvexBody, r: f64, hh: f64, rho: f64, target_h: f64) -> Result<SurfaceMesh> {
    let n = body.dim_n;
    let c = body.translation();
    let prof = cylinder_profile(r, hh, rho, target_h);
    let m = prof.len() - 1;
    let mut verts = Vec::new();
    let mut conn = Vec::new();
    if n == 1 {
        // Right half from top to bottom, then the mirrored left half back up.
        for &(x, y) in &prof {
            verts.push(Point::new(x, y, 0.0) + c);
        }
        for &(x, y) in prof[1..m].iter().rev() {
            verts.push(Point::new(-x, y, 0.0) + c);
        }
        let count = verts.len();
        conn = (0..count).flat_map(|i| [i, (i + 1) % count]).collect();
    } else {
        verts.push(Point::new(0.0, 0.0, prof[0].1) + c);
        let mut rings: Vec<(usize, usize)> = Vec::new();
        for &(rad, z) in &prof[1..m] {
            let cnt = ((2.0 * PI * rad / target_h).ceil() as usize).max(6);
            let start = verts.len();
            for j in 0..cnt {
                let phi = 2.0 * PI * j as f64 / cnt as f64;
                verts.push(Point::new(rad * phi.cos(), rad * phi.sin(), z) + c);
            }
            rings.push((start, cnt));
        }
        let bottom = verts.len();
        verts.push(Point::new(0.0, 0.0, prof[m].1) + c);
        let (s0, c0) = rings[0];
        for j in 0..c0 {
            conn.extend([0, s0 + j, s0 + (j + 1) % c0]);
        }
        for w in rings.windows(2) {
            zip_rings(&mut conn, w[0], w[1]);
        }
        let (sl, cl) = *rings.last().unwrap();
        for j in 0..cl {
            conn.extend([bottom, sl + (j + 1) % cl, sl + j]);
        }
    }
    SurfaceMesh::from_parts(n, verts, conn, Some(body.clone()), c)
}

/// Triangulates the band between two rings of vertices at uniform angles,
/// advancing on whichever ring has the smaller next angle.
fn zip_rings(conn: &mut Vec<usize>, (sa, ca): (usize, usize), (sb, cb): (usize, usize)) {
    let (mut i, mut j) = (0usize, 0usize);
    while i < ca || j < cb {
        let next_a = (i + 1) as f64 / ca as f64;
        let next_b = (j + 1) as f64 / cb as f64;
        if j >= cb || (i < ca && next_a <= next_b) {
            conn.extend([sa + i % ca, sa + (i + 1) % ca, sb + j % cb]);
            i += 1;
        } else {
            conn.extend([sa + i % ca, sb + (j + 1) % cb, sb + j % cb]);
            j += 1;
        }
    }
}

pub(crate) fn cube_halfspaces(n: usize, s: f64) -> Vec<Halfspace> {
    let mut hs = Vec::new();
    for i in 0..=n {
        for sign in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[i] = sign;
            hs.push(Halfspace { normal: e, offset: s });
        }
    }
    hs
}

/// Merges vertices that coincide up to rounding.
struct VertexPool {
    verts: Vec<Point>,
    index: HashMap<[i64; 3], usize>,
}

impl VertexPool {
    fn new() -> Self {
        VertexPool {
            verts: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, p: Point) -> usize {
        let key = [
            (p.x * 1e9).round() as i64,
            (p.y * 1e9).round() as i64,
            (p.z * 1e9).round() as i64,
        ];
        *self.index.entry(key).or_insert_with(|| {
            self.verts.push(p);
            self.verts.len() - 1
        })
    }
}

fn polytope(body: &ConvexBody, halfspaces: &[Halfspace], target_h: f64) -> Result<SurfaceMesh> {
    let n = body.dim_n;
    let c = body.translation();
    let verts = polytope_vertices(n, halfspaces);
    let on = |h: &Halfspace, p: &Point| (h.normal().dot(p) - h.offset).abs() < 1e-8;
    let mut pool = VertexPool::new();
    let mut conn = Vec::new();
    if n == 1 {
        let mut edges = Vec::new();
        for h in halfspaces {
            let ends: Vec<Point> = verts.iter().filter(|p| on(h, p)).cloned().collect();
            if ends.len() == 2 {
                edges.push((ends[0], ends[1]));
            }
        }
        for (a, b) in edges {
            let k = ((b - a).norm() / target_h).ceil().max(1.0) as usize;
            let ids: Vec<usize> = (0..=k)
                .map(|i| pool.insert(a + (b - a) * (i as f64 / k as f64) + c))
                .collect();
            for w in ids.windows(2) {
                conn.extend([w[0], w[1]]);
            }
        }
    } else {
        let mut fans = Vec::new();
        for h in halfspaces {
            let mut face: Vec<Point> = verts.iter().filter(|p| on(h, p)).cloned().collect();
            if face.len() < 3 {
                continue;
            }
            let nu = h.normal();
            let center = face.iter().sum::<Point>() / face.len() as f64;
            let helper = if nu.x.abs() < 0.9 { Point::x() } else { Point::y() };
            let u = nu.cross(&helper).normalize();
            let v = nu.cross(&u);
            face.sort_by(|a, b| {
                let aa = (a - center).dot(&v).atan2((a - center).dot(&u));
                let bb = (b - center).dot(&v).atan2((b - center).dot(&u));
                aa.total_cmp(&bb)
            });
            for i in 0..face.len() {
                fans.push([center, face[i], face[(i + 1) % face.len()]]);
            }
        }
        let longest = fans
            .iter()
            .map(|t| Simplex::triangle(t[0], t[1], t[2]).diameter())
            .fold(0.0, f64::max);
        let k = (longest / target_h).ceil().max(1.0) as usize;
        for [a, b, cc] in fans {
            // Barycentric grid with k subdivisions per side.
            let mut ids = vec![vec![0usize; k + 1]; k + 1];
            for (i, row) in ids.iter_mut().enumerate() {
                for (j, slot) in row.iter_mut().enumerate().take(k + 1 - i) {
                    let p = a + (b - a) * (i as f64 / k as f64) + (cc - a) * (j as f64 / k as f64);
                    *slot = pool.insert(p + c);
                }
            }
            for i in 0..k {
                for j in 0..(k - i) {
                    conn.extend([ids[i][j], ids[i + 1][j], ids[i][j + 1]]);
                    if j + 1 < k - i {
                        conn.extend([ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]]);
                    }
                }
            }
        }
    }
    SurfaceMesh::from_parts(n, pool.verts, conn, Some(body.clone()), body.interior_point())
}

/// Uniform refinement: each element split into 2^n children, new vertices
/// projected onto the analytic boundary when there is one.
pub fn refine(mesh: &SurfaceMesh) -> SurfaceMesh {
    refine_with_parents(mesh).0
}

/// Like [`refine`], also returning the parent element of every child.
pub fn refine_with_parents(mesh: &SurfaceMesh) -> (SurfaceMesh, Vec<usize>) {
    let proj = mesh.analytic_source().cloned();
    let mut verts = mesh.vertices.clone();
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| {
        let key = (a.min(b), a.max(b));
        *mids.entry(key).or_insert_with(|| {
            let mut m = (verts[a] + verts[b]) * 0.5;
            if let Some(body) = &proj {
                m = body.project_to_boundary(&m);
            }
            verts.push(m);
            verts.len() - 1
        })
    };
    let mut conn = Vec::new();
    let mut parents = Vec::new();
    for e in 0..mesh.len() {
        let idx = mesh.element(e);
        if mesh.dim_n == 1 {
            let m = midpoint(idx[0], idx[1], &mut verts);
            conn.extend([idx[0], m, m, idx[1]]);
            parents.extend([e, e]);
        } else {
            let (a, b, c) = (idx[0], idx[1], idx[2]);
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            conn.extend([a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
            parents.extend([e; 4]);
        }
    }
    let interior = match &mesh.source {
        Some(b) => b.interior_point(),
        None => mesh.vertices.iter().sum::<Point>() / mesh.vertices.len() as f64,
    };
    let child = SurfaceMesh::from_parts(mesh.dim_n, verts, conn, mesh.source.clone(), interior)
        .expect("refinement of a valid mesh is valid");
    (child, parents)
}

/// Applies `x -> scale x + translate` to the mesh. Areas are multiplied by
/// `scale^n` directly so the homogeneity is exact.
pub fn scale_mesh(mesh: &SurfaceMesh, t: &Transform) -> SurfaceMesh {
    let l = t.scale;
    let factor = l.powi(mesh.dim_n as i32);
    SurfaceMesh {
        dim_n: mesh.dim_n,
        vertices: mesh.vertices.iter().map(|p| t.apply(p)).collect(),
        connectivity: mesh.connectivity.clone(),
        areas: if l == 1.0 {
            mesh.areas.clone()
        } else {
            mesh.areas.iter().map(|a| a * factor).collect()
        },
        centroids: mesh.centroids.iter().map(|p| t.apply(p)).collect(),
        normals: mesh.normals.clone(),
        h_max: mesh.h_max * l,
        source: mesh.source.as_ref().map(|b| b.apply_transform(t)),
    }
}

/// Writes the mesh as OFF. Segments (n = 1) are written as 2-index faces.
pub fn write_off<W: Write>(mesh: &SurfaceMesh, mut w: W) -> Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertices.len(), mesh.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    for e in 0..mesh.len() {
        let idx = mesh.element(e);
        let line: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        writeln!(w, "{} {}", idx.len(), line.join(" "))?;
    }
    Ok(())
}

/// Reads an OFF mesh of a closed convex surface. The vertex mean is used as
/// the interior reference for orientation.
pub fn read_off<R: BufRead>(r: R) -> Result<SurfaceMesh> {
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    let header = it.next().ok_or_else(|| FhsError::Parse("empty OFF file".into()))?;
    if header != "OFF" {
        return Err(FhsError::Parse(format!("expected OFF header, got {header}")));
    }
    let mut next_num = |what: &str| -> Result<String> {
        it.next()
            .ok_or_else(|| FhsError::Parse(format!("unexpected end of OFF file reading {what}")))
    };
    let parse_usize = |s: String| s.parse::<usize>().map_err(|e| FhsError::Parse(e.to_string()));
    let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| FhsError::Parse(e.to_string()));
    let nv = parse_usize(next_num("vertex count")?)?;
    let nf = parse_usize(next_num("face count")?)?;
    let _ = next_num("edge count")?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f64(next_num("vertex")?)?;
        let y = parse_f64(next_num("vertex")?)?;
        let z = parse_f64(next_num("vertex")?)?;
        verts.push(Point::new(x, y, z));
    }
    let mut conn = Vec::new();
    let mut arity = None;
    for _ in 0..nf {
        let k = parse_usize(next_num("face arity")?)?;
        if !(k == 2 || k == 3) || arity.is_some_and(|a| a != k) {
            return Err(FhsError::Parse(format!("unsupported or mixed face arity {k}")));
        }
        arity = Some(k);
        for _ in 0..k {
            let i = parse_usize(next_num("face index")?)?;
            if i >= nv {
                return Err(FhsError::Parse(format!("face index {i} out of range")));
            }
            conn.push(i);
        }
    }
    let k = arity.ok_or_else(|| FhsError::Parse("OFF file has no faces".into()))?;
    let interior = verts.iter().sum::<Point>() / nv as f64;
    SurfaceMesh::from_parts(k - 1, verts, conn, None, interior)
}

/// Bitmask over mesh elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetMask {
    bits: Vec<bool>,
}

impl SubsetMask {
    pub fn full(len: usize) -> Self {
        SubsetMask { bits: vec![true; len] }
    }

    pub fn empty(len: usize) -> Self {
        SubsetMask { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        SubsetMask { bits }
    }

    pub fn from_indices(len: usize, ids: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in ids {
            bits[i] = true;
        }
        SubsetMask { bits }
    }

    /// Elements whose centroid is within Euclidean distance `r` of `center`.
    pub fn cap(mesh: &SurfaceMesh, center: &Point, r: f64) -> Self {
        SubsetMask {
            bits: mesh.centroids.iter().map(|c| (c - center).norm() < r).collect(),
        }
    }

    /// Each element independently with probability `p`.
    pub fn random<R: Rng>(len: usize, p: f64, rng: &mut R) -> Self {
        SubsetMask {
            bits: (0..len).map(|_| rng.gen_bool(p.clamp(0.0, 1.0))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.bits[e]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    /// Mask on a refined mesh: children inherit their parent's membership.
    pub fn lift(&self, parents: &[usize]) -> SubsetMask {
        SubsetMask {
            bits: parents.iter().map(|&p| self.bits[p]).collect(),
        }
    }

    pub fn area(&self, mesh: &SurfaceMesh) -> f64 {
        self.indices().map(|e| mesh.areas[e]).sum()
    }
}
