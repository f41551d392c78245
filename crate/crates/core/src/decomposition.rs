//! Splitting a boundary mesh into at most 2(n+1) pieces, each a graph over a
//! coordinate hyperplane with bounded slope.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FhsError, Result};
use crate::geometry::Point;
use crate::mesh::SurfaceMesh;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphPiece {
    /// Coordinate axis, 1-based.
    pub axis: usize,
    pub sign: i8,
    pub element_ids: Vec<usize>,
    pub max_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageReport {
    pub covered_area_fraction: f64,
    pub piece_count: usize,
    pub global_max_slope: f64,
}

/// Axis (0-based) and sign of the dominant normal component. Ties go to the
/// lowest axis, then to the positive sign.
pub fn classify(nu: &Point, ambient: usize) -> (usize, i8) {
    let mut best = 0;
    for i in 1..ambient {
        if nu[i].abs() > nu[best].abs() {
            best = i;
        }
    }
    (best, if nu[best] >= 0.0 { 1 } else { -1 })
}

/// Graph slope `sqrt(1/nu_i^2 - 1)` of an element whose normal has
/// component `nu_i` along the graph axis.
pub fn slope(nu_i: f64) -> f64 {
    (1.0 / (nu_i * nu_i) - 1.0).max(0.0).sqrt()
}

/// Assigns each element to exactly one piece by its dominant normal axis.
pub fn decompose(mesh: &SurfaceMesh, epsilon: f64) -> Result<Vec<GraphPiece>> {
    if !(epsilon > 0.0) {
        return Err(FhsError::Precondition(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let ambient = mesh.dim_n + 1;
    let threshold = 1.0 / (1.0 + mesh.dim_n as f64 + epsilon).sqrt();
    let labels: Vec<(usize, i8, f64)> = mesh
        .normals
        .par_iter()
        .enumerate()
        .map(|(e, nu)| {
            let norm = nu.norm();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(FhsError::NormalDegenerate { element: e, norm });
            }
            let (axis, sign) = classify(nu, ambient);
            let comp = sign as f64 * nu[axis];
            debug_assert!(comp > threshold);
            Ok((axis, sign, slope(comp)))
        })
        .collect::<Result<_>>()?;
    let mut pieces: Vec<GraphPiece> = Vec::new();
    for axis in 0..ambient {
        for sign in [1i8, -1] {
            let mut piece = GraphPiece {
                axis: axis + 1,
                sign,
                element_ids: Vec::new(),
                max_slope: 0.0,
            };
            for (e, &(a, s, sl)) in labels.iter().enumerate() {
                if a == axis && s == sign {
                    piece.element_ids.push(e);
                    piece.max_slope = piece.max_slope.max(sl);
                }
            }
            if !piece.element_ids.is_empty() {
                pieces.push(piece);
            }
        }
    }
    Ok(pieces)
}

pub fn coverage_report(pieces: &[GraphPiece], mesh: &SurfaceMesh) -> CoverageReport {
    let mut seen = vec![false; mesh.len()];
    for p in pieces {
        for &e in &p.element_ids {
            seen[e] = true;
        }
    }
    let covered: f64 = seen.iter().zip(&mesh.areas).filter(|(s, _)| **s).map(|(_, a)| a).sum();
    CoverageReport {
        covered_area_fraction: covered / mesh.total_area(),
        piece_count: pieces.len(),
        global_max_slope: pieces.iter().map(|p| p.max_slope).fold(0.0, f64::max),
    }
}

/// Area of a piece, used in the CLI summary.
pub fn piece_area(piece: &GraphPiece, mesh: &SurfaceMesh) -> f64 {
    piece.element_ids.iter().map(|&e| mesh.areas[e]).sum()
}
