//! Flat simplices used by the adaptive quadratures.

use crate::geometry::{ConvexBody, Point};

/// A segment (`k = 2`) or triangle (`k = 3`) in R^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    pub pts: [Point; 3],
    pub k: usize,
}

impl Simplex {
    pub fn segment(a: Point, b: Point) -> Self {
        Simplex { pts: [a, b, b], k: 2 }
    }

    pub fn triangle(a: Point, b: Point, c: Point) -> Self {
        Simplex { pts: [a, b, c], k: 3 }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.pts[..self.k]
    }

    pub fn centroid(&self) -> Point {
        self.vertices().iter().sum::<Point>() / self.k as f64
    }

    /// Length of a segment or area of a triangle.
    pub fn measure(&self) -> f64 {
        let [a, b, c] = self.pts;
        if self.k == 2 {
            (b - a).norm()
        } else {
            0.5 * (b - a).cross(&(c - a)).norm()
        }
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.pts;
        if self.k == 2 {
            (b - a).norm()
        } else {
            (b - a).norm().max((c - b).norm()).max((a - c).norm())
        }
    }

    /// Smallest distance from `x` to a vertex; cheap proxy used by the
    /// straddle tests.
    pub fn vertex_distances(&self, x: &Point) -> (f64, f64) {
        self.vertices().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            let d = (v - x).norm();
            (lo.min(d), hi.max(d))
        })
    }

    /// Uniform split: 2 halves for a segment, 4 midpoint triangles for a
    /// triangle. For triangles the last child is the medial triangle, which
    /// shares the parent's centroid.
    pub fn split(&self) -> ([Simplex; 4], usize) {
        let [a, b, c] = self.pts;
        if self.k == 2 {
            let m = (a + b) * 0.5;
            let s = Simplex::segment(a, m);
            ([s, Simplex::segment(m, b), s, s], 2)
        } else {
            let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
            (
                [
                    Simplex::triangle(a, ab, ca),
                    Simplex::triangle(ab, b, bc),
                    Simplex::triangle(ca, bc, c),
                    Simplex::triangle(ab, bc, ca),
                ],
                4,
            )
        }
    }

    /// Split whose last child keeps the parent's centroid: the medial
    /// triangle for triangles, the middle third for segments. Returns the
    /// children, their count, and the linear shrink factor of the central child.
    pub fn split_centered(&self) -> ([Simplex; 4], usize, f64) {
        if self.k == 2 {
            let [a, b, _] = self.pts;
            let p = a + (b - a) / 3.0;
            let q = a + (b - a) * (2.0 / 3.0);
            let s = Simplex::segment(a, p);
            ([s, Simplex::segment(q, b), Simplex::segment(p, q), s], 3, 1.0 / 3.0)
        } else {
            let (c, m) = self.split();
            (c, m, 0.5)
        }
    }

    /// The simplex with its vertices projected onto the body's boundary.
    pub fn projected(&self, body: &ConvexBody) -> Simplex {
        let mut out = *self;
        for p in out.pts.iter_mut() {
            *p = body.project_to_boundary(p);
        }
        out
    }
}
