//! End-to-end evaluation of the weighted interpolation inequality on meshed
//! convex boundaries, with refinement studies, normalization, sweeps and
//! reports.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{FhsError, Result};
use crate::field::{FieldSpec, ScalarField};
use crate::fractional::{curvature_field, rhs_energy, CurvatureField, CurvatureMethod, EnergyBreakdown};
use crate::geometry::{ConvexBody, Point, Transform};
use crate::measure::{element_weights, weighted_area};
use crate::mesh::{mesh_boundary, mesh_patch, refine, scale_mesh, SubsetMask, SurfaceMesh};
use crate::params::{validate, FracParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportContext {
    pub body: String,
    pub field: String,
    pub resolution: f64,
    pub refinements: usize,
    pub params: FracParams,
    pub seed: u64,
    pub element_count: usize,
    /// SHA-256 of the canonically serialized inputs.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub context: ReportContext,
    pub lhs: f64,
    pub rhs_energy: EnergyBreakdown,
    pub lq_norm: f64,
    /// `lhs / (rhs_energy.total^{a/p} lq_norm^{1-a})`.
    pub ratio: f64,
    pub refinement_delta: Option<f64>,
    /// Ratio at each resolution, coarsest first.
    pub ratio_history: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Run inadmissible tuples anyway, listing the violations as warnings.
    pub allow_inadmissible: bool,
}

#[derive(Serialize)]
struct HashInput<'a> {
    body: &'a ConvexBody,
    field: &'a FieldSpec,
    params: &'a FracParams,
    resolution: f64,
    refinements: usize,
    seed: u64,
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("inputs serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// `(sum_e |x|^{tau gamma} |u_e|^tau)^{1/tau}`, the weight integrated per
/// element with the near-origin subdivision. The flag reports a quadrature
/// point moved off the origin.
pub fn lhs_weighted_norm(mesh: &SurfaceMesh, u: &ScalarField, tau: f64, gamma: f64) -> Result<(f64, bool)> {
    u.check_len(mesh)?;
    if !(tau > 0.0) {
        return Err(FhsError::Precondition(format!("tau must be positive, got {tau}")));
    }
    let (w, warn) = element_weights(mesh, -tau * gamma);
    let sum: f64 = u.support_ids.iter().map(|&e| w[e] * u.values[e].abs().powf(tau)).sum();
    Ok((sum.powf(1.0 / tau), warn))
}

/// All quantities of one evaluation on one mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub lhs: f64,
    pub energy: EnergyBreakdown,
    pub lq_norm: f64,
    pub ratio: f64,
    pub origin_warning: bool,
}

pub fn evaluate(mesh: &SurfaceMesh, u: &ScalarField, params: &FracParams, h: &CurvatureField) -> Result<Evaluation> {
    let (lhs, origin_warning) = lhs_weighted_norm(mesh, u, params.tau, params.gamma)?;
    let energy = rhs_energy(mesh, u, params, h)?;
    let lq_norm = u.lq_norm(mesh, params.q);
    let denom = energy.total.powf(params.a / params.p) * lq_norm.powf(1.0 - params.a);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / denom };
    Ok(Evaluation {
        lhs,
        energy,
        lq_norm,
        ratio,
        origin_warning,
    })
}

fn sample_nonzero(spec: &FieldSpec, mesh: &SurfaceMesh) -> Result<ScalarField> {
    let u = spec.sample(mesh)?;
    if u.is_zero() {
        return Err(FhsError::InvalidField("field vanishes on the mesh".into()));
    }
    Ok(u)
}

fn evaluate_spec(mesh: &SurfaceMesh, spec: &FieldSpec, params: &FracParams) -> Result<Evaluation> {
    let u = sample_nonzero(spec, mesh)?;
    let h = curvature_field(mesh, params.alpha, CurvatureMethod::Boundary)?;
    evaluate(mesh, &u, params, &h)
}

fn relative_delta(fine: f64, coarse: f64) -> f64 {
    if fine == coarse {
        0.0
    } else {
        (fine - coarse).abs() / fine.abs().max(coarse.abs())
    }
}

pub fn verify_main(
    body: &ConvexBody,
    field: &FieldSpec,
    params: &FracParams,
    resolution: f64,
    refinements: usize,
) -> Result<Report> {
    verify_main_with(body, field, params, resolution, refinements, &VerifyOptions::default())
}

/// Evaluates the inequality on `body` at `resolution` and on `refinements`
/// successive uniform refinements. The report carries the finest level.
pub fn verify_main_with(
    body: &ConvexBody,
    field: &FieldSpec,
    params: &FracParams,
    resolution: f64,
    refinements: usize,
    opts: &VerifyOptions,
) -> Result<Report> {
    let mut warnings = Vec::new();
    if opts.allow_inadmissible {
        warnings.extend(
            validate(params)
                .into_iter()
                .map(|v| format!("inadmissible: {}", v.message)),
        );
    } else {
        params.ensure_admissible()?;
    }
    let mut mesh = mesh_boundary(body, resolution)?;
    let mut history = Vec::with_capacity(refinements + 1);
    let mut last = None;
    for level in 0..=refinements {
        if level > 0 {
            mesh = refine(&mesh);
        }
        let ev = evaluate_spec(&mesh, field, params)?;
        if !ev.ratio.is_finite() {
            warnings.push(format!("non-finite ratio at level {level}"));
        }
        history.push(ev.ratio);
        last = Some(ev);
    }
    let ev = last.expect("at least one level");
    if ev.origin_warning {
        warnings.push("origin lies on the surface; quadrature point perturbed".into());
    }
    let refinement_delta =
        (history.len() >= 2).then(|| relative_delta(history[history.len() - 1], history[history.len() - 2]));
    let hash = sha256_json(&HashInput {
        body,
        field,
        params,
        resolution,
        refinements,
        seed: opts.seed,
    });
    Ok(Report {
        context: ReportContext {
            body: body.describe(),
            field: serde_json::to_string(field).expect("field serializes"),
            resolution,
            refinements,
            params: *params,
            seed: opts.seed,
            element_count: mesh.len(),
            hash,
        },
        lhs: ev.lhs,
        rhs_energy: ev.energy,
        lq_norm: ev.lq_norm,
        ratio: ev.ratio,
        refinement_delta,
        ratio_history: history,
        warnings,
    })
}

/// Ratios on `body` and on its image under `x -> lambda x`, using the same
/// mesh scaled and the pulled-back field.
pub fn scaled_ratios(
    body: &ConvexBody,
    field: &FieldSpec,
    params: &FracParams,
    resolution: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    let mesh = mesh_boundary(body, resolution)?;
    let t = Transform::scaling(lambda)?;
    let base = evaluate_spec(&mesh, field, params)?;
    let scaled = evaluate_spec(&scale_mesh(&mesh, &t), &field.transformed(&t), params)?;
    Ok((base.ratio, scaled.ratio))
}

/// The homothety `lambda` and amplitude `c` that bring the energy and the
/// `L^q` norm of `c u(x/lambda)` to 1.
pub fn normalization(energy: f64, lq_norm: f64, params: &FracParams) -> Result<(f64, f64)> {
    if !(energy > 0.0) || !(lq_norm > 0.0) {
        return Err(FhsError::DegenerateScaling("field vanishes identically".into()));
    }
    let n = params.n as f64;
    let (e_l, e_c) = (n - params.s * params.p, params.p);
    let (l_l, l_c) = (n / params.q, 1.0);
    let det = e_l * l_c - e_c * l_l;
    if det.abs() < 1e-12 {
        return Err(FhsError::DegenerateScaling(
            "q = p* makes both quantities scale alike".into(),
        ));
    }
    let (be, bl) = (-energy.ln(), -lq_norm.ln());
    let log_lambda = (be * l_c - e_c * bl) / det;
    let log_c = (e_l * bl - l_l * be) / det;
    Ok((log_lambda.exp(), log_c.exp()))
}

/// Rescales the mesh and the field so that the energy and the `L^q` norm
/// are both 1; the reported `lhs` then equals the ratio.
pub fn normalize_and_report(mesh: &SurfaceMesh, u: &ScalarField, params: &FracParams) -> Result<Report> {
    u.check_len(mesh)?;
    if u.is_zero() {
        return Err(FhsError::DegenerateScaling("field vanishes identically".into()));
    }
    let h = curvature_field(mesh, params.alpha, CurvatureMethod::Boundary)?;
    let ev = evaluate(mesh, u, params, &h)?;
    let (lambda, c) = normalization(ev.energy.total, ev.lq_norm, params)?;
    let (m2, u2, h2) = if lambda == 1.0 && c == 1.0 {
        (mesh.clone(), u.clone(), h)
    } else {
        let m2 = scale_mesh(mesh, &Transform::scaling(lambda)?);
        let factor = lambda.powf(-params.alpha);
        let h2 = CurvatureField {
            values: h.values.iter().map(|v| v * factor).collect(),
            ..h
        };
        (m2, u.scaled(c)?, h2)
    };
    let out = evaluate(&m2, &u2, params, &h2)?;
    let mut warnings = vec![format!("normalized by lambda = {lambda:e}, c = {c:e}")];
    if out.origin_warning {
        warnings.push("origin lies on the surface; quadrature point perturbed".into());
    }
    #[derive(Serialize)]
    struct NormInput<'a> {
        values: &'a [f64],
        vertices: usize,
        params: &'a FracParams,
    }
    let hash = sha256_json(&NormInput {
        values: &u.values,
        vertices: mesh.vertices.len(),
        params,
    });
    Ok(Report {
        context: ReportContext {
            body: mesh
                .source
                .as_ref()
                .map_or_else(|| "mesh".to_string(), ConvexBody::describe),
            field: "sampled".into(),
            resolution: mesh.h_max,
            refinements: 0,
            params: *params,
            seed: 0,
            element_count: mesh.len(),
            hash,
        },
        lhs: out.lhs,
        rhs_energy: out.energy,
        lq_norm: out.lq_norm,
        ratio: out.ratio,
        refinement_delta: None,
        ratio_history: vec![out.ratio],
        warnings,
    })
}

/// Families explored by [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub enum SweepFamily {
    /// Cylinders of radius 1, half-height and rounding `r`; the value is
    /// the weighted-area ratio of the whole boundary with exponent `beta`.
    CylinderAspect { radii: Vec<f64>, beta: f64 },
    /// `base` and `field` translated by `d * direction`.
    Translation {
        base: ConvexBody,
        field: FieldSpec,
        direction: Point,
        distances: Vec<f64>,
    },
    /// Bumps of shrinking radius about `center`.
    BumpConcentration {
        body: ConvexBody,
        center: Point,
        radii: Vec<f64>,
        power: f64,
    },
}

impl SweepFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SweepFamily::CylinderAspect { .. } => "cylinder-aspect",
            SweepFamily::Translation { .. } => "translation",
            SweepFamily::BumpConcentration { .. } => "bump-concentration",
        }
    }

    fn grid(&self) -> &[f64] {
        match self {
            SweepFamily::CylinderAspect { radii, .. } => radii,
            SweepFamily::Translation { distances, .. } => distances,
            SweepFamily::BumpConcentration { radii, .. } => radii,
        }
    }
}

/// One CSV row of a sweep. Failed points keep their row with `error` set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub family: &'static str,
    pub parameter: f64,
    pub body: String,
    pub element_count: Option<usize>,
    pub value: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs_total: Option<f64>,
    pub lq_norm: Option<f64>,
    pub refinement_delta: Option<f64>,
    pub hash: Option<String>,
    pub error: Option<String>,
}

fn cylinder_point(
    n: usize,
    r: f64,
    beta: f64,
    resolution: f64,
    refinements: usize,
) -> Result<(String, usize, f64, Option<f64>)> {
    let body = ConvexBody::cylinder(n, 1.0, r, r)?;
    let mut mesh = mesh_boundary(&body, resolution)?;
    let mut values = Vec::new();
    for level in 0..=refinements {
        if level > 0 {
            mesh = refine(&mesh);
        }
        let w = weighted_area(&mesh, &SubsetMask::full(mesh.len()), beta)?;
        values.push(w.ratio.ok_or(FhsError::BetaOutOfRange { n, beta })?);
    }
    let k = values.len();
    let delta = (k >= 2).then(|| relative_delta(values[k - 1], values[k - 2]));
    Ok((body.describe(), mesh.len(), values[k - 1], delta))
}

/// Evaluates every grid point of `family` in parallel; rows keep grid order.
pub fn sweep(family: &SweepFamily, params: &FracParams, resolution: f64, refinements: usize) -> Vec<SweepRow> {
    let grid = family.grid().to_vec();
    grid.par_iter()
        .enumerate()
        .map(|(index, &x)| {
            let mut row = SweepRow {
                index,
                family: family.name(),
                parameter: x,
                body: String::new(),
                element_count: None,
                value: None,
                lhs: None,
                rhs_total: None,
                lq_norm: None,
                refinement_delta: None,
                hash: None,
                error: None,
            };
            let report = match family {
                SweepFamily::CylinderAspect { beta, .. } => {
                    match cylinder_point(params.n, x, *beta, resolution, refinements) {
                        Ok((body, count, value, delta)) => {
                            row.body = body;
                            row.element_count = Some(count);
                            row.value = Some(value);
                            row.refinement_delta = delta;
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    return row;
                }
                SweepFamily::Translation {
                    base, field, direction, ..
                } => {
                    let t = Transform::translation(direction * x);
                    let body = base.apply_transform(&t);
                    row.body = body.describe();
                    verify_main(&body, &field.transformed(&t), params, resolution, refinements)
                }
                SweepFamily::BumpConcentration {
                    body, center, power, ..
                } => {
                    row.body = body.describe();
                    verify_main(
                        body,
                        &FieldSpec::bump(*center, x, *power),
                        params,
                        resolution,
                        refinements,
                    )
                }
            };
            match report {
                Ok(r) => {
                    row.element_count = Some(r.context.element_count);
                    row.value = Some(r.ratio);
                    row.lhs = Some(r.lhs);
                    row.rhs_total = Some(r.rhs_energy.total);
                    row.lq_norm = Some(r.lq_norm);
                    row.refinement_delta = r.refinement_delta;
                    row.hash = Some(r.context.hash);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in rows {
        wr.serialize(row).map_err(|e| FhsError::Io(e.to_string()))?;
    }
    if rows.is_empty() {
        wr.write_record([
            "index",
            "family",
            "parameter",
            "body",
            "element_count",
            "value",
            "lhs",
            "rhs_total",
            "lq_norm",
            "refinement_delta",
            "hash",
            "error",
        ])
        .map_err(|e| FhsError::Io(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

/// Monotonicity of the successful values in grid order.
pub fn trend(rows: &[SweepRow]) -> Trend {
    let v: Vec<f64> = rows.iter().filter_map(|r| r.value).collect();
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    match (v.len() < 2 || v.windows(2).all(|w| w[1] == w[0]), up, down) {
        (true, _, _) => Trend::Constant,
        (_, true, _) => Trend::Increasing,
        (_, _, true) => Trend::Decreasing,
        _ => Trend::Mixed,
    }
}

/// Settings for the flat Hardy check on a halfspace patch through the
/// origin. Bumps have radius from `radii` and are centered at `center`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatHardyConfig {
    pub n: usize,
    pub extent: f64,
    pub h: f64,
    pub s: f64,
    pub p: f64,
    pub power: f64,
    pub radii: Vec<f64>,
    pub center: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatHardyRow {
    pub radius: f64,
    pub element_count: usize,
    pub ratio: f64,
    pub ratio_refined: f64,
    pub refinement_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatHardyTable {
    pub rows: Vec<FlatHardyRow>,
    pub sup: f64,
    pub median: f64,
    /// `sup < 2 median`.
    pub bounded: bool,
    pub max_refinement_delta: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// The plane `x_{n+1} = 0` bounding `{x_{n+1} < 0}`.
pub fn flat_body(n: usize) -> Result<ConvexBody> {
    let mut nu = Point::zeros();
    nu[n] = 1.0;
    ConvexBody::half_space(n, nu, 0.0)
}

/// `|| |x|^{-s} u ||_{L^p} / ((1/2)[u]^p)^{1/p}` on a flat patch. Fails with
/// `SupportTooLarge` when the support comes within `4h` of the patch edge.
pub fn flat_hardy_ratio(mesh: &SurfaceMesh, u: &ScalarField, s: f64, p: f64, extent: f64) -> Result<f64> {
    if !mesh.is_planar_patch() {
        return Err(FhsError::Precondition(
            "flat Hardy check needs a halfspace patch".into(),
        ));
    }
    u.check_len(mesh)?;
    if u.is_zero() {
        return Err(FhsError::InvalidField("field vanishes on the patch".into()));
    }
    let n = mesh.dim_n;
    let margin = 4.0 * mesh.h_max;
    for &e in &u.support_ids {
        let c = mesh.centroids[e];
        let reach = (0..n).map(|i| c[i].abs()).fold(0.0, f64::max) + 0.5 * mesh.diameter(e);
        if reach > extent - margin {
            return Err(FhsError::SupportTooLarge);
        }
    }
    let params = FracParams::new(n, s, p, s, 1.0, p, -s)?;
    let h = CurvatureField {
        values: vec![0.0; mesh.len()],
        alpha: s,
        method: CurvatureMethod::Boundary,
    };
    Ok(evaluate(mesh, u, &params, &h)?.ratio)
}

pub fn flat_hardy_check(cfg: &FlatHardyConfig) -> Result<FlatHardyTable> {
    if !(cfg.s * cfg.p < cfg.n as f64) {
        return Err(FhsError::Precondition(format!(
            "sp = {} must be < n = {}",
            cfg.s * cfg.p,
            cfg.n
        )));
    }
    let body = flat_body(cfg.n)?;
    let coarse = mesh_patch(&body, cfg.h, cfg.extent)?;
    let fine = refine(&coarse);
    let rows = cfg
        .radii
        .iter()
        .map(|&r| {
            let spec = FieldSpec::bump(Point::from(cfg.center), r, cfg.power);
            let ratio = flat_hardy_ratio(&coarse, &sample_nonzero(&spec, &coarse)?, cfg.s, cfg.p, cfg.extent)?;
            let ratio_refined = flat_hardy_ratio(&fine, &sample_nonzero(&spec, &fine)?, cfg.s, cfg.p, cfg.extent)?;
            Ok(FlatHardyRow {
                radius: r,
                element_count: fine.len(),
                ratio,
                ratio_refined,
                refinement_delta: relative_delta(ratio_refined, ratio),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = rows.iter().map(|r| r.ratio_refined).collect();
    let sup = finals.iter().cloned().fold(0.0, f64::max);
    let median = median(&finals);
    let max_refinement_delta = rows.iter().map(|r| r.refinement_delta).fold(0.0, f64::max);
    Ok(FlatHardyTable {
        rows,
        sup,
        median,
        bounded: sup < 2.0 * median,
        max_refinement_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn hardy() -> FracParams {
        FracParams::admissible(2, 0.5, 1.0, 0.5, 1.0, 1.0, -0.5).unwrap()
    }

    #[test]
    fn weighted_norm_examples() {
        let m = mesh_boundary(&ConvexBody::ball(2, 1.0).unwrap(), 0.1).unwrap();
        let one = ScalarField::new(vec![1.0; m.len()]).unwrap();
        let (v, warn) = lhs_weighted_norm(&m, &one, 1.0, -0.5).unwrap();
        assert!(!warn);
        assert!(rel(v, 4.0 * PI) < 0.01);
        let (plain, _) = lhs_weighted_norm(&m, &one, 2.0, 0.0).unwrap();
        assert!(rel(plain, m.total_area().sqrt()) < 1e-14);
        let t = Transform::scaling(3.0).unwrap();
        let (scaled, _) = lhs_weighted_norm(&scale_mesh(&m, &t), &one, 1.5, -0.4).unwrap();
        let (base, _) = lhs_weighted_norm(&m, &one, 1.5, -0.4).unwrap();
        assert!(rel(scaled, base * 3f64.powf(2.0 / 1.5 - 0.4)) < 1e-12);
    }

    #[test]
    fn verify_sphere_hardy_bump() {
        let body = ConvexBody::ball(2, 1.0).unwrap();
        let field = FieldSpec::bump(Point::z(), 0.8, 2.0);
        let r = verify_main(&body, &field, &hardy(), 0.3, 1).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
        assert_eq!(r.ratio_history.len(), 2);
        assert!(r.refinement_delta.unwrap() < 0.1);
        assert_eq!(r.context.hash.len(), 64);
        let again = verify_main(&body, &field, &hardy(), 0.3, 1).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn zero_field_rejected() {
        let body = ConvexBody::ball(2, 1.0).unwrap();
        let field = FieldSpec::Constant { value: 0.0 };
        assert!(matches!(
            verify_main(&body, &field, &hardy(), 0.5, 0),
            Err(FhsError::InvalidField(_))
        ));
    }

    #[test]
    fn inadmissible_needs_opt_in() {
        let body = ConvexBody::ball(2, 1.0).unwrap();
        let bad = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 1.0, -0.9).unwrap();
        let field = FieldSpec::bump(Point::z(), 0.8, 2.0);
        assert!(verify_main(&body, &field, &bad, 0.5, 0).is_err());
        let opts = VerifyOptions {
            seed: 1,
            allow_inadmissible: true,
        };
        let r = verify_main_with(&body, &field, &bad, 0.5, 0, &opts).unwrap();
        assert!(r.warnings.iter().any(|w| w.starts_with("inadmissible")));
    }

    #[test]
    fn scale_invariance() {
        let body = ConvexBody::ball(2, 1.0).unwrap().translated(Point::new(0.0, 0.0, -0.4));
        let field = FieldSpec::bump(Point::new(0.0, 0.0, 0.6), 0.9, 2.0);
        for lambda in [0.5, 2.0, 10.0] {
            let (a, b) = scaled_ratios(&body, &field, &hardy(), 0.4, lambda).unwrap();
            assert!(rel(b, a) < 1e-12, "lambda {lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn normalization_matches_ratio() {
        let params = FracParams::admissible(2, 0.5, 1.0, 0.5, 0.5, 2.0, -0.5).unwrap();
        let body = ConvexBody::ball(2, 1.0).unwrap();
        let m = mesh_boundary(&body, 0.3).unwrap();
        let field = FieldSpec::bump(Point::z(), 0.8, 2.0);
        let u = field.sample(&m).unwrap();
        let r = normalize_and_report(&m, &u, &params).unwrap();
        assert!((r.rhs_energy.total - 1.0).abs() < 1e-9);
        assert!((r.lq_norm - 1.0).abs() < 1e-9);
        let direct = verify_main(&body, &field, &params, 0.3, 0).unwrap();
        assert!(rel(r.lhs, direct.ratio) < 1e-9);
        assert!(rel(r.ratio, direct.ratio) < 1e-9);
        assert!(normalize_and_report(&m, &ScalarField::zeros(m.len()), &params).is_err());
    }

    #[test]
    fn normalization_of_normalized_is_identity() {
        let params = FracParams::admissible(2, 0.5, 1.0, 0.5, 0.5, 2.0, -0.5).unwrap();
        let (l, c) = normalization(1.0, 1.0, &params).unwrap();
        assert_eq!((l, c), (1.0, 1.0));
        let (l, c) = normalization(3.0, 0.5, &params).unwrap();
        let n = 2.0;
        let e = l.powf(n - 0.5) * c * 3.0;
        let q = l.powf(n / 2.0) * c * 0.5;
        assert!((e - 1.0).abs() < 1e-12 && (q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweeps() {
        let rows = sweep(
            &SweepFamily::CylinderAspect {
                radii: vec![0.4, 0.2],
                beta: 1.0,
            },
            &hardy(),
            0.2,
            0,
        );
        assert_eq!(rows.len(), 2);
        assert_eq!(trend(&rows), Trend::Increasing);
        let empty = sweep(
            &SweepFamily::CylinderAspect {
                radii: vec![],
                beta: 1.0,
            },
            &hardy(),
            0.2,
            0,
        );
        assert!(empty.is_empty());
        let mut buf = Vec::new();
        write_sweep_csv(&empty, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("index,family,parameter"));

        let base = ConvexBody::ball(2, 1.0).unwrap();
        let fam = SweepFamily::Translation {
            base,
            field: FieldSpec::bump(Point::z(), 0.8, 2.0),
            direction: Point::x(),
            distances: vec![0.0, 2.0, 4.0],
        };
        let rows = sweep(&fam, &hardy(), 0.4, 0);
        assert!(rows.iter().all(|r| r.error.is_none()));
        assert_eq!(trend(&rows), Trend::Decreasing);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn sweep_keeps_failed_rows() {
        let fam = SweepFamily::CylinderAspect {
            radii: vec![0.3, -1.0],
            beta: 1.0,
        };
        let rows = sweep(&fam, &hardy(), 0.3, 0);
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.is_some());
    }

    #[test]
    fn flat_hardy_small() {
        let cfg = FlatHardyConfig {
            n: 1,
            extent: 1.0,
            h: 0.01,
            s: 0.5,
            p: 1.0,
            power: 2.0,
            radii: vec![0.4, 0.2, 0.1],
            center: [0.0; 3],
        };
        let t = flat_hardy_check(&cfg).unwrap();
        assert!(t.bounded, "{t:?}");
        assert!(t.max_refinement_delta < 0.1, "{t:?}");
        let off = flat_hardy_check(&FlatHardyConfig {
            center: [0.5, 0.0, 0.0],
            radii: vec![0.2],
            ..cfg.clone()
        })
        .unwrap();
        let at = t.rows.iter().find(|r| r.radius == 0.2).unwrap();
        assert!(off.rows[0].ratio_refined < at.ratio_refined);
        let wide = FlatHardyConfig {
            radii: vec![0.99],
            ..cfg.clone()
        };
        assert!(matches!(flat_hardy_check(&wide), Err(FhsError::SupportTooLarge)));
        let m = mesh_patch(&flat_body(1).unwrap(), 0.1, 1.0).unwrap();
        let one = ScalarField::new(vec![1.0; m.len()]).unwrap();
        assert!(matches!(
            flat_hardy_ratio(&m, &one, 0.5, 1.0, 1.0),
            Err(FhsError::SupportTooLarge)
        ));
    }
}
