//! Piecewise-constant scalar fields on mesh elements and the built-in
//! families they are generated from.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{FhsError, Result};
use crate::geometry::{Point, Transform};
use crate::mesh::SurfaceMesh;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub support_ids: Vec<usize>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FhsError::InvalidField(format!("non-finite value at element {i}")));
        }
        let support_ids = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(ScalarField { values, support_ids })
    }

    pub fn zeros(len: usize) -> Self {
        ScalarField {
            values: vec![0.0; len],
            support_ids: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.support_ids.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ScalarField::new(self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs).expect("abs of finite values is finite")
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn check_len(&self, mesh: &SurfaceMesh) -> Result<()> {
        if self.len() != mesh.len() {
            return Err(FhsError::LengthMismatch {
                expected: mesh.len(),
                got: self.len(),
            });
        }
        Ok(())
    }

    /// `sum_e |u_e|^q A_e`.
    pub fn lq_integral(&self, mesh: &SurfaceMesh, q: f64) -> f64 {
        self.support_ids
            .iter()
            .map(|&e| self.values[e].abs().powf(q) * mesh.areas[e])
            .sum()
    }

    pub fn lq_norm(&self, mesh: &SurfaceMesh, q: f64) -> f64 {
        self.lq_integral(mesh, q).powf(1.0 / q)
    }
}

/// Field families evaluated at element centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `(1 - |x-c|^2/r^2)_+^power`.
    Bump {
        center: [f64; 3],
        radius: f64,
        power: f64,
    },
    /// The coordinate `x_axis` (0-based axis).
    Coordinate {
        axis: usize,
    },
    /// Indicator of the ball of radius `radius` about `center`.
    IndicatorCap {
        center: [f64; 3],
        radius: f64,
    },
    Constant {
        value: f64,
    },
    Product {
        factors: Vec<FieldSpec>,
    },
    /// Values read from lines "element_index value"; missing entries are 0.
    File {
        path: PathBuf,
    },
    /// Pullback `x -> inner((x - translate)/scale)`.
    Transformed {
        inner: Box<FieldSpec>,
        scale: f64,
        translate: [f64; 3],
    },
}

impl FieldSpec {
    pub fn bump(center: Point, radius: f64, power: f64) -> Self {
        FieldSpec::Bump {
            center: [center.x, center.y, center.z],
            radius,
            power,
        }
    }

    pub fn cap(center: Point, radius: f64) -> Self {
        FieldSpec::IndicatorCap {
            center: [center.x, center.y, center.z],
            radius,
        }
    }

    /// The field `u o t^{-1}` on the transformed body.
    pub fn transformed(&self, t: &Transform) -> Self {
        let v = t.translate_vec();
        FieldSpec::Transformed {
            inner: Box::new(self.clone()),
            scale: t.scale,
            translate: [v.x, v.y, v.z],
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            FieldSpec::Bump { center, radius, power } => {
                let d2 = (x - Point::from(*center)).norm_squared() / (radius * radius);
                if d2 < 1.0 {
                    (1.0 - d2).powf(*power)
                } else {
                    0.0
                }
            }
            FieldSpec::Coordinate { axis } => x[*axis],
            FieldSpec::IndicatorCap { center, radius } => {
                if (x - Point::from(*center)).norm() < *radius {
                    1.0
                } else {
                    0.0
                }
            }
            FieldSpec::Constant { value } => *value,
            FieldSpec::Product { factors } => factors.iter().map(|f| f.eval(x)).product(),
            FieldSpec::File { .. } => f64::NAN,
            FieldSpec::Transformed {
                inner,
                scale,
                translate,
            } => inner.eval(&((x - Point::from(*translate)) / *scale)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::Bump { radius, power, .. } if !(*radius > 0.0) || !(*power > 0.0) => {
                Err(FhsError::InvalidField("bump radius and power must be positive".into()))
            }
            FieldSpec::IndicatorCap { radius, .. } if !(*radius > 0.0) => {
                Err(FhsError::InvalidField("cap radius must be positive".into()))
            }
            FieldSpec::Coordinate { axis } if *axis > 2 => {
                Err(FhsError::InvalidField(format!("axis {axis} out of range")))
            }
            FieldSpec::Product { factors } => factors.iter().try_for_each(FieldSpec::validate),
            FieldSpec::Transformed { inner, scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(FhsError::InvalidField("transform scale must be positive".into()));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// Samples the field at the centroids of `mesh`.
    pub fn sample(&self, mesh: &SurfaceMesh) -> Result<ScalarField> {
        self.validate()?;
        if let FieldSpec::File { path } = self {
            let text = std::fs::read_to_string(path)?;
            return parse_field(&text, mesh.len());
        }
        if self.contains_file() {
            return Err(FhsError::InvalidField("file fields cannot be combined".into()));
        }
        ScalarField::new(mesh.centroids.iter().map(|c| self.eval(c)).collect())
    }

    fn contains_file(&self) -> bool {
        match self {
            FieldSpec::File { .. } => true,
            FieldSpec::Product { factors } => factors.iter().any(FieldSpec::contains_file),
            FieldSpec::Transformed { inner, .. } => inner.contains_file(),
            _ => false,
        }
    }

    /// Parses "bump:cx,cy,cz,r,power", "coord:axis", "cap:cx,cy,cz,r",
    /// "const:v", "file:path", or a '*'-separated product of these.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.contains('*') {
            let factors = text.split('*').map(FieldSpec::parse).collect::<Result<Vec<_>>>()?;
            return Ok(FieldSpec::Product { factors });
        }
        let (name, args) = text.split_once(':').unwrap_or((text, ""));
        if name == "file" {
            return Ok(FieldSpec::File {
                path: PathBuf::from(args),
            });
        }
        let nums: Vec<f64> = args
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| FhsError::Parse(format!("field argument {s:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(FhsError::Parse(format!(
                    "field {name} takes {k} arguments, got {}",
                    nums.len()
                )))
            }
        };
        let spec = match name {
            "bump" => {
                want(5)?;
                FieldSpec::Bump {
                    center: [nums[0], nums[1], nums[2]],
                    radius: nums[3],
                    power: nums[4],
                }
            }
            "coord" => {
                want(1)?;
                FieldSpec::Coordinate { axis: nums[0] as usize }
            }
            "cap" => {
                want(4)?;
                FieldSpec::IndicatorCap {
                    center: [nums[0], nums[1], nums[2]],
                    radius: nums[3],
                }
            }
            "const" => {
                want(1)?;
                FieldSpec::Constant { value: nums[0] }
            }
            _ => return Err(FhsError::Parse(format!("unknown field family {name:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses "element_index value" lines; `#` starts a comment.
pub fn parse_field(text: &str, len: usize) -> Result<ScalarField> {
    let mut values = vec![0.0; len];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(i), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(FhsError::Parse(format!(
                "line {}: expected \"index value\"",
                lineno + 1
            )));
        };
        let i: usize = i
            .parse()
            .map_err(|e| FhsError::Parse(format!("line {}: {e}", lineno + 1)))?;
        let v: f64 = v
            .parse()
            .map_err(|e| FhsError::Parse(format!("line {}: {e}", lineno + 1)))?;
        if i >= len {
            return Err(FhsError::Parse(format!(
                "line {}: element {i} out of range",
                lineno + 1
            )));
        }
        values[i] = v;
    }
    ScalarField::new(values)
}
