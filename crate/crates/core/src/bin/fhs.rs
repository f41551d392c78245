use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use fhs_core::decomposition::{coverage_report, decompose, piece_area};
use fhs_core::field::FieldSpec;
use fhs_core::fractional::{curvature_field, seminorm_p_with, CurvatureMethod, Diagonal};
use fhs_core::harness::{
    flat_hardy_check, sweep, trend, verify_main_with, write_sweep_csv, FlatHardyConfig, SweepFamily, VerifyOptions,
};
use fhs_core::levelset::check_series;
use fhs_core::measure::{conjectured_constant, paper_constant, weighted_area};
use fhs_core::mesh::write_off;
use fhs_core::params::{validate, FracParams};
use fhs_core::{
    mesh_boundary, parse_body, refine, refine_with_parents, FhsError, Point, Result, SubsetMask, SurfaceMesh,
};

#[derive(Parser)]
#[command(
    name = "fhs",
    version,
    about = "Fractional Hardy-Sobolev checks on convex boundaries"
)]
struct Cli {
    /// Seed for random subsets and sequences.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Target element diameter of the base mesh.
    #[arg(long, global = true, default_value_t = 0.2)]
    resolution: f64,
    /// Uniform refinements after the base mesh.
    #[arg(long, global = true, default_value_t = 1)]
    refinements: usize,
    /// Output format (sweeps default to csv, everything else to json).
    #[arg(long, global = true, value_enum)]
    out: Option<OutFormat>,
    /// Run parameter tuples outside the admissible set, reporting violations.
    #[arg(long = "unsafe", global = true)]
    allow_unsafe: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Boundary,
    Volume,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagonalArg {
    Local,
    Omit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    CylinderAspect,
    Translation,
    BumpConcentration,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh a body boundary and print a summary; optionally write OFF.
    Mesh {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        off: Option<PathBuf>,
    },
    /// Split the boundary into graph pieces.
    Decompose {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// Integral of |x|^{-beta} over a boundary subset.
    Measure {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        beta: f64,
        /// full, cap:r (about the top point), or random:p.
        #[arg(long, default_value = "full")]
        subset: String,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// Fractional W^{s,p} seminorm of a field.
    Seminorm {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        field: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "local")]
        diagonal: DiagonalArg,
    },
    /// Fractional mean curvature at every element.
    Curvature {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "boundary")]
        method: Method,
    },
    /// Dyadic series inequality on random sequences.
    CheckSeries {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        /// "n,s,p".
        #[arg(long, default_value = "2,0.5,1")]
        params: String,
    },
    /// Evaluate the full inequality with a refinement study.
    Verify {
        #[arg(long)]
        body: String,
        #[arg(long)]
        field: String,
        /// e.g. "n=2,s=0.5,p=1,alpha=0.5,a=1,q=2,gamma=-0.5".
        #[arg(long)]
        params: String,
    },
    /// Evaluate a family of configurations.
    Sweep {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated grid values.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "n=2,s=0.5,p=1,alpha=0.5,a=1,q=1,gamma=-0.5")]
        params: String,
        #[arg(long, default_value = "ball:1")]
        body: String,
        #[arg(long, default_value = "bump:0,0,1,0.8,2")]
        field: String,
        #[arg(long, default_value = "1,0,0")]
        direction: String,
        /// Bump center; defaults to the boundary point nearest the origin.
        #[arg(long)]
        center: Option<String>,
        #[arg(long, default_value_t = 2.0)]
        power: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Weighted Hardy ratio for bumps on a flat patch through the origin.
    FlatHardy {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        extent: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        power: f64,
        #[arg(long, default_value = "0.4,0.2,0.1")]
        radii: String,
        #[arg(long, default_value = "0,0,0")]
        center: String,
    },
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| FhsError::Parse(format!("{t:?}: {e}")))
        })
        .collect()
}

fn parse_point(text: &str) -> Result<Point> {
    let v = parse_list(text)?;
    if v.is_empty() || v.len() > 3 {
        return Err(FhsError::Parse(format!("point needs 1 to 3 components, got {text:?}")));
    }
    let mut p = Point::zeros();
    for (i, x) in v.into_iter().enumerate() {
        p[i] = x;
    }
    Ok(p)
}

fn build_mesh(body: &str, dim: usize, resolution: f64) -> Result<SurfaceMesh> {
    mesh_boundary(&parse_body(dim, body)?, resolution)
}

/// Flattens nested objects to dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let joined: Vec<String> = a.iter().map(scalar_text).collect();
            out.insert(prefix.to_string(), Value::String(joined.join(";")));
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Arrays of objects become one row per entry; anything else one row.
fn write_csv<W: Write>(value: &Value, w: W) -> Result<()> {
    let rows: Vec<Map<String, Value>> = match value {
        Value::Array(items) => items
            .iter()
            .map(|x| {
                let mut m = Map::new();
                flatten("", x, &mut m);
                m
            })
            .collect(),
        other => {
            let mut m = Map::new();
            flatten("", other, &mut m);
            vec![m]
        }
    };
    let mut wr = csv::Writer::from_writer(w);
    if let Some(first) = rows.first() {
        let header: Vec<&String> = first.keys().collect();
        wr.write_record(&header).map_err(|e| FhsError::Io(e.to_string()))?;
        for row in &rows {
            let rec: Vec<String> = header
                .iter()
                .map(|k| row.get(*k).map(scalar_text).unwrap_or_default())
                .collect();
            wr.write_record(&rec).map_err(|e| FhsError::Io(e.to_string()))?;
        }
    }
    wr.flush()?;
    Ok(())
}

fn emit<T: Serialize>(value: &T, format: OutFormat) -> Result<()> {
    let v = serde_json::to_value(value).map_err(|e| FhsError::Io(e.to_string()))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match format {
        OutFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &v).map_err(|e| FhsError::Io(e.to_string()))?;
            writeln!(out)?;
        }
        OutFormat::Csv => write_csv(&v, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn subset_for(spec: &str, mesh: &SurfaceMesh, rng: &mut ChaCha8Rng) -> Result<SubsetMask> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = || {
        arg.trim()
            .parse::<f64>()
            .map_err(|e| FhsError::Parse(format!("subset argument {arg:?}: {e}")))
    };
    match kind {
        "full" => Ok(SubsetMask::full(mesh.len())),
        "cap" => {
            let body = mesh
                .source
                .as_ref()
                .ok_or_else(|| FhsError::Precondition("cap needs a source body".into()))?;
            let mut up = Point::zeros();
            up[mesh.dim_n] = 1.0;
            Ok(SubsetMask::cap(mesh, &body.support_point(&up)?, num()?))
        }
        "random" => Ok(SubsetMask::random(mesh.len(), num()?, rng)),
        _ => Err(FhsError::Parse(format!("unknown subset {spec:?}"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| FhsError::Precondition(e.to_string()))?;
    }
    let out = cli.out.unwrap_or(OutFormat::Json);
    let h = cli.resolution;
    match cli.command {
        Command::Mesh { body, dim, off } => {
            let mesh = build_mesh(&body, dim, h)?;
            if let Some(path) = off {
                write_off(&mesh, BufWriter::new(File::create(path)?))?;
            }
            emit(
                &json!({
                    "body": parse_body(dim, &body)?.describe(),
                    "element_count": mesh.len(),
                    "vertex_count": mesh.vertices.len(),
                    "total_area": mesh.total_area(),
                    "h_max": mesh.h_max,
                    "closure_defect": mesh.closure_defect(),
                }),
                out,
            )
        }
        Command::Decompose { body, dim, epsilon } => {
            let mesh = build_mesh(&body, dim, h)?;
            let pieces = decompose(&mesh, epsilon)?;
            let cov = coverage_report(&pieces, &mesh);
            let rows: Vec<Value> = pieces
                .iter()
                .map(|p| {
                    json!({
                        "axis": p.axis,
                        "sign": p.sign,
                        "count": p.element_ids.len(),
                        "area": piece_area(p, &mesh),
                        "max_slope": p.max_slope,
                    })
                })
                .collect();
            eprintln!(
                "coverage {} over {} pieces, max slope {}",
                cov.covered_area_fraction, cov.piece_count, cov.global_max_slope
            );
            emit(&rows, out)
        }
        Command::Measure {
            body,
            dim,
            beta,
            subset,
            epsilon,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut mesh = build_mesh(&body, dim, h)?;
            let mut mask = subset_for(&subset, &mesh, &mut rng)?;
            let mut result = weighted_area(&mesh, &mask, beta)?;
            let mut prev = result.ratio;
            for _ in 0..cli.refinements {
                let (fine, parents) = refine_with_parents(&mesh);
                mask = mask.lift(&parents);
                mesh = fine;
                let next = weighted_area(&mesh, &mask, beta)?;
                result.refinement_delta = match (prev, next.ratio) {
                    (Some(a), Some(b)) => Some((b - a).abs() / b.abs()),
                    _ => None,
                };
                prev = next.ratio;
                let delta = result.refinement_delta;
                result = next;
                result.refinement_delta = delta;
            }
            emit(
                &json!({
                    "value": result.value,
                    "subset_area": result.subset_area,
                    "ratio": result.ratio,
                    "paper_constant": paper_constant(dim, beta, epsilon).ok(),
                    "conjectured_constant": conjectured_constant(dim, beta).ok(),
                    "refinement_delta": result.refinement_delta,
                    "element_count": mesh.len(),
                    "origin_warning": result.origin_warning,
                }),
                out,
            )
        }
        Command::Seminorm {
            body,
            dim,
            field,
            s,
            p,
            diagonal,
        } => {
            let spec = FieldSpec::parse(&field)?;
            let diag = match diagonal {
                DiagonalArg::Local => Diagonal::LocalCorrection,
                DiagonalArg::Omit => Diagonal::Omit,
            };
            let mut mesh = build_mesh(&body, dim, h)?;
            let mut values = Vec::new();
            for level in 0..=cli.refinements {
                if level > 0 {
                    mesh = refine(&mesh);
                }
                values.push(seminorm_p_with(&mesh, &spec.sample(&mesh)?, s, p, diag)?);
            }
            let k = values.len();
            let delta = (k >= 2).then(|| (values[k - 1] - values[k - 2]).abs() / values[k - 1].abs());
            emit(
                &json!({
                    "value": values[k - 1],
                    "history": values,
                    "refinement_delta": delta,
                    "element_count": mesh.len(),
                }),
                out,
            )
        }
        Command::Curvature {
            body,
            dim,
            alpha,
            method,
        } => {
            let mesh = build_mesh(&body, dim, h)?;
            let m = match method {
                Method::Boundary => CurvatureMethod::Boundary,
                Method::Volume => CurvatureMethod::Volume,
            };
            let field = curvature_field(&mesh, alpha, m)?;
            match out {
                OutFormat::Csv => {
                    let rows: Vec<Value> = field
                        .values
                        .iter()
                        .enumerate()
                        .map(|(e, v)| {
                            let c = mesh.centroids[e];
                            json!({"element": e, "x": c.x, "y": c.y, "z": c.z, "value": v})
                        })
                        .collect();
                    emit(&rows, out)
                }
                OutFormat::Json => {
                    let min = field.values.iter().cloned().fold(f64::INFINITY, f64::min);
                    let mean = field.values.iter().sum::<f64>() / field.values.len() as f64;
                    emit(
                        &json!({
                            "alpha": alpha,
                            "method": field.method,
                            "element_count": mesh.len(),
                            "min": min,
                            "max": field.max(),
                            "mean": mean,
                            "variation": field.variation(),
                        }),
                        out,
                    )
                }
            }
        }
        Command::CheckSeries { cases, params } => {
            let v = parse_list(&params)?;
            if v.len() != 3 || v[0].fract() != 0.0 || v[0] < 1.0 {
                return Err(FhsError::Parse(format!("expected \"n,s,p\", got {params:?}")));
            }
            let summary = check_series(cases, cli.seed, v[0] as usize, v[1], v[2])?;
            emit(&summary, out)
        }
        Command::Verify { body, field, params } => {
            let params = FracParams::parse(&params)?;
            let body = parse_body(params.n, &body)?;
            let spec = FieldSpec::parse(&field)?;
            let opts = VerifyOptions {
                seed: cli.seed,
                allow_inadmissible: cli.allow_unsafe,
            };
            emit(
                &verify_main_with(&body, &spec, &params, h, cli.refinements, &opts)?,
                out,
            )
        }
        Command::Sweep {
            family,
            grid,
            params,
            body,
            field,
            direction,
            center,
            power,
            beta,
        } => {
            let params = FracParams::parse(&params)?;
            if !cli.allow_unsafe && !validate(&params).is_empty() {
                params.ensure_admissible()?;
            }
            let n = params.n;
            let fam = match family {
                Family::CylinderAspect => SweepFamily::CylinderAspect {
                    radii: parse_list(grid.as_deref().unwrap_or("0.4,0.2,0.1,0.05"))?,
                    beta,
                },
                Family::Translation => SweepFamily::Translation {
                    base: parse_body(n, &body)?,
                    field: FieldSpec::parse(&field)?,
                    direction: parse_point(&direction)?,
                    distances: parse_list(grid.as_deref().unwrap_or("0,1,2,4,8"))?,
                },
                Family::BumpConcentration => {
                    let body = parse_body(n, &body)?;
                    let center = match center {
                        Some(c) => parse_point(&c)?,
                        None => body.project_to_boundary(&Point::zeros()),
                    };
                    SweepFamily::BumpConcentration {
                        body,
                        center,
                        radii: parse_list(grid.as_deref().unwrap_or("0.8,0.4,0.2"))?,
                        power,
                    }
                }
            };
            let rows = sweep(&fam, &params, h, cli.refinements);
            eprintln!("{} points, trend {:?}", rows.len(), trend(&rows));
            match cli.out.unwrap_or(OutFormat::Csv) {
                OutFormat::Csv => write_sweep_csv(&rows, io::stdout().lock()),
                OutFormat::Json => emit(&rows, OutFormat::Json),
            }
        }
        Command::FlatHardy {
            dim,
            extent,
            s,
            p,
            power,
            radii,
            center,
        } => {
            let c = parse_point(&center)?;
            let cfg = FlatHardyConfig {
                n: dim,
                extent,
                h,
                s,
                p,
                power,
                radii: parse_list(&radii)?,
                center: [c.x, c.y, c.z],
            };
            let table = flat_hardy_check(&cfg)?;
            match out {
                OutFormat::Csv => emit(&table.rows, out),
                OutFormat::Json => emit(&table, out),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
