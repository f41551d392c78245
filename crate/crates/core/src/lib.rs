//! Numerical verification of fractional Hardy-Sobolev type inequalities on
//! boundaries of convex bodies in R^2 and R^3.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod error;
pub mod field;
pub mod fractional;
pub mod geometry;
pub mod harness;
pub mod levelset;
pub mod measure;
pub mod mesh;
pub mod params;
pub mod simplex;

pub use error::{FhsError, Result};
pub use geometry::{parse_body, BodyKind, ConvexBody, Halfspace, Point, Transform};
pub use mesh::{mesh_boundary, mesh_patch, refine, refine_with_parents, scale_mesh, SubsetMask, SurfaceMesh};
