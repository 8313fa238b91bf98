//! `chyp`: command-line access to the complex hyperbolic toolkit.

mod parse;

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use chyp::cproj::{cartan_invariant, classify_isometry, FormKind, HermitianForm, Isometry, IsometryKind};
use chyp::ellip::real_elliptic_test;
use chyp::fordcell::{build_ideal_boundary_complex, ideal_vertex_cycles, ridge_cycles};
use chyp::heis::{cygan_distance, isometric_sphere, HeisenbergPoint, HoroPoint};
use chyp::isect::{crossing_points, foliation_leaves, q_hat_factor, singular_angles, w_coefficients, DiskCoords};
use chyp::trigroup::{self, Verdict};

use parse::format_complex;

#[derive(Parser, Debug)]
#[command(name = "chyp", version, about = "Complex hyperbolic geometry toolkit")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunConfig {
    /// Tolerance on dimensionless residuals.
    #[arg(long, global = true, default_value_t = chyp::DEFAULT_TOL)]
    tol: f64,
    /// Grid size for foliations and sweeps.
    #[arg(long, global = true, default_value_t = 64)]
    grid: usize,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Ball,
    Siegel,
}

impl From<Model> for FormKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Ball => FormKind::Ball,
            Model::Siegel => FormKind::Siegel,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify an isometry given by nine row-major complex entries.
    Classify {
        #[arg(long, value_enum, default_value = "siegel")]
        form: Model,
        #[arg(num_args = 9, allow_hyphen_values = true)]
        entries: Vec<String>,
    },
    /// Cartan invariant of three boundary points given as Heisenberg `z t`.
    Cartan {
        #[arg(num_args = 6, allow_hyphen_values = true)]
        coords: Vec<String>,
    },
    /// Cygan distance between two points given as `z t` pairs.
    Cygan {
        #[arg(num_args = 4, allow_hyphen_values = true)]
        coords: Vec<String>,
        #[arg(long, default_value_t = 0.0)]
        u1: f64,
        #[arg(long, default_value_t = 0.0)]
        u2: f64,
    },
    /// Isometric sphere of an isometry.
    Sphere {
        #[arg(long, value_enum, default_value = "siegel")]
        form: Model,
        #[arg(num_args = 9, allow_hyphen_values = true)]
        entries: Vec<String>,
    },
    /// Coefficients of `W` on the disk `I(θ1) ∩ I(θ2)`.
    Intersect2 {
        #[arg(allow_hyphen_values = true)]
        theta1: String,
        #[arg(allow_hyphen_values = true)]
        theta2: String,
    },
    /// Boundary points of `I(θ1) ∩ I(θ2) ∩ I(θ3)` on the disk.
    Intersect3 {
        #[arg(allow_hyphen_values = true)]
        theta1: String,
        #[arg(allow_hyphen_values = true)]
        theta2: String,
        #[arg(allow_hyphen_values = true)]
        theta3: String,
    },
    /// Leaves of the foliation of the disk `I(θ1) ∩ I(θ2)`.
    Foliation {
        #[arg(allow_hyphen_values = true)]
        theta1: String,
        #[arg(allow_hyphen_values = true)]
        theta2: String,
    },
    /// Cell structure of the ideal boundary of the Ford polytope.
    Ford {
        n: usize,
        /// Also list ridge and ideal-vertex cycles conjugated by `A^k`.
        #[arg(long, default_value_t = 0)]
        k: i64,
    },
    /// Discreteness certificate of the (n,∞,∞)-triangle group.
    Certify {
        n: usize,
        #[command(flatten)]
        param: TriParam,
    },
    /// Table of every certificate margin over a grid in t.
    Sweep {
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        t_min: f64,
        #[arg(long, default_value_t = 3.0)]
        t_max: f64,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct TriParam {
    /// `t = tan(A/2)`.
    #[arg(long)]
    t: Option<f64>,
    /// Angular invariant `A` in radians.
    #[arg(long = "A", allow_hyphen_values = true)]
    angular: Option<String>,
    /// Angular invariant `A = p π / q`.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], allow_hyphen_values = true)]
    frac_pi: Option<Vec<i64>>,
}

impl TriParam {
    fn params(&self, n: usize) -> Result<trigroup::TriangleParams> {
        let p = if let Some(t) = self.t {
            trigroup::params_from_t(n, t)?
        } else if let Some(a) = &self.angular {
            trigroup::params_from_angular(n, parse::angle(a)?)?
        } else if let Some(pq) = &self.frac_pi {
            ensure!(pq[1] != 0, "zero denominator in --frac-pi");
            trigroup::params_from_angular(n, pq[0] as f64 * PI / pq[1] as f64)?
        } else {
            bail!("one of --t, --A, --frac-pi is required");
        };
        Ok(p)
    }
}

/// Output accumulated in memory and written once.
struct Output {
    format: Format,
    buf: Vec<u8>,
}

impl Output {
    fn csv(&mut self, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json(&mut self, v: &Value) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.buf, v)?;
        self.buf.push(b'\n');
        Ok(())
    }

    /// A single record, as one CSV row or a flat JSON object.
    fn record(&mut self, fields: &[(&str, Value)]) -> Result<()> {
        match self.format {
            Format::Json => {
                let obj: serde_json::Map<String, Value> =
                    fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
                self.json(&Value::Object(obj))
            }
            Format::Csv => {
                let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
                let row = fields.iter().map(|(_, v)| cell(v)).collect();
                self.csv(&header, [row])
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Number(x) if x.is_f64() => num(x.as_f64().unwrap_or(f64::NAN)),
        other => other.to_string(),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = &cli.config;
    ensure!(cfg.tol > 0.0 && cfg.tol.is_finite(), "--tol must be positive");
    ensure!(cfg.grid >= 2, "--grid must be at least 2");
    let default_format = match cli.command {
        Command::Ford { .. } | Command::Certify { .. } => Format::Json,
        _ => Format::Csv,
    };
    let mut out = Output {
        format: cfg.format.unwrap_or(default_format),
        buf: Vec::new(),
    };
    let code = dispatch(&cli.command, cfg, &mut out)?;
    match &cfg.out {
        Some(path) => fs::write(path, &out.buf).with_context(|| format!("writing {}", path.display()))?,
        None => match io::stdout().lock().write_all(&out.buf) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(code)
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut Output) -> Result<u8> {
    match cmd {
        Command::Classify { form, entries } => classify(*form, entries, cfg, out),
        Command::Cartan { coords } => cartan(coords, cfg, out),
        Command::Cygan { coords, u1, u2 } => cygan(coords, *u1, *u2, out),
        Command::Sphere { form, entries } => sphere(*form, entries, cfg, out),
        Command::Intersect2 { theta1, theta2 } => intersect2(theta1, theta2, out),
        Command::Intersect3 { theta1, theta2, theta3 } => intersect3(theta1, theta2, theta3, out),
        Command::Foliation { theta1, theta2 } => foliation(theta1, theta2, cfg.grid, out),
        Command::Ford { n, k } => ford(*n, *k, out),
        Command::Certify { n, param } => certify(*n, param, cfg, out),
        Command::Sweep { n, t_min, t_max } => sweep(*n, *t_min, *t_max, cfg.grid, out),
    }
}

fn isometry(form: Model, entries: &[String], tol: f64) -> Result<Isometry> {
    let m = parse::matrix(entries)?;
    Ok(Isometry::with_tol(m, HermitianForm::new(form.into()), tol)?)
}

fn classify(form: Model, entries: &[String], cfg: &RunConfig, out: &mut Output) -> Result<u8> {
    let g = isometry(form, entries, cfg.tol)?;
    let cl = classify_isometry(&g, cfg.tol);
    let ev = g.eigenvalues();
    let mut fields = vec![
        ("kind", json!(format!("{:?}", cl.kind))),
        ("refined", json!(cl.refined.map(|r| format!("{r:?}")))),
        ("f_value", json!(cl.f_value)),
        ("trace", json!(format_complex(g.trace()))),
        ("eigenvalues", json!(ev.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(" "))),
    ];
    if cl.kind == IsometryKind::RegularElliptic {
        let rep = real_elliptic_test(&g, cfg.tol)?;
        let fp = rep.fixed_point.lift();
        let fp = fp / fp[fp.icamax()];
        fields.push(("fixed_point", json!(fp.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(" "))));
        fields.push(("real_elliptic", json!(rep.is_real)));
        fields.push(("rotation", json!(rep.theta)));
    }
    out.record(&fields)?;
    Ok(0)
}

fn heis_point(z: &str, t: &str) -> Result<HeisenbergPoint> {
    let t: f64 = t.parse().with_context(|| format!("invalid coordinate {t:?}"))?;
    Ok(HeisenbergPoint::new(parse::complex(z)?, t))
}

fn cartan(coords: &[String], cfg: &RunConfig, out: &mut Output) -> Result<u8> {
    let pts = coords
        .chunks(2)
        .map(|c| heis_point(&c[0], &c[1]).map(|p| p.to_point()))
        .collect::<Result<Vec<_>>>()?;
    let a = cartan_invariant(&pts[0], &pts[1], &pts[2], cfg.tol)?;
    out.record(&[("cartan", json!(a))])?;
    Ok(0)
}

fn cygan(coords: &[String], u1: f64, u2: f64, out: &mut Output) -> Result<u8> {
    let p = heis_point(&coords[0], &coords[1])?;
    let q = heis_point(&coords[2], &coords[3])?;
    let d = cygan_distance(
        &HoroPoint::new(p.z, p.t, u1)?,
        &HoroPoint::new(q.z, q.t, u2)?,
    );
    out.record(&[("distance", json!(d))])?;
    Ok(0)
}

fn sphere(form: Model, entries: &[String], cfg: &RunConfig, out: &mut Output) -> Result<u8> {
    let mut g = isometry(form, entries, cfg.tol)?;
    if g.kind() == FormKind::Ball {
        g = g.cayley_conjugate();
    }
    let s = isometric_sphere(&g, cfg.tol)?.sphere;
    out.record(&[
        ("center_z", json!(format_complex(s.center.z))),
        ("center_t", json!(s.center.t)),
        ("radius", json!(s.radius)),
    ])?;
    Ok(0)
}

fn intersect2(theta1: &str, theta2: &str, out: &mut Output) -> Result<u8> {
    let (t1, t2) = (parse::angle(theta1)?, parse::angle(theta2)?);
    let w = w_coefficients(t1, t2)?;
    let sing = singular_angles(t1, t2)
        .into_iter()
        .map(num)
        .collect::<Vec<_>>()
        .join(" ");
    out.record(&[
        ("theta1", json!(t1)),
        ("theta2", json!(t2)),
        ("c22", json!(w.c22)),
        ("c20", json!(w.c20)),
        ("c02", json!(w.c02)),
        ("c11", json!(w.c11)),
        ("c00", json!(w.c00)),
        ("singular_theta3", json!(sing)),
    ])?;
    Ok(0)
}

fn intersect3(theta1: &str, theta2: &str, theta3: &str, out: &mut Output) -> Result<u8> {
    let (t1, t2, t3) = (parse::angle(theta1)?, parse::angle(theta2)?, parse::angle(theta3)?);
    let cr = crossing_points(t1, t2, t3)?;
    let rows: Vec<[f64; 6]> = cr
        .boundary_points
        .iter()
        .map(|p| {
            let d = DiskCoords::from_xy(p[0], p[1]);
            [p[0], p[1], d.psi1, d.psi2, cr.w.eval(p[0], p[1]), cr.q.eval(p[0], p[1])]
        })
        .collect();
    match out.format {
        Format::Csv => out.csv(
            &["X", "Y", "psi1", "psi2", "W", "Q"],
            rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()),
        )?,
        Format::Json => {
            let q = &cr.q;
            out.json(&json!({
                "theta": [t1, t2, t3],
                "q": {"c22": q.c22q, "c20": q.c20q, "c02": q.c02q, "c11": q.c11q},
                "q_hat_factor": q_hat_factor(t1, t2, t3),
                "points": rows.iter().map(|r| json!({
                    "X": r[0], "Y": r[1], "psi1": r[2], "psi2": r[3], "W": r[4], "Q": r[5]
                })).collect::<Vec<_>>(),
            }))?
        }
    }
    Ok(0)
}

const FOLIATION_HEADER: [&str; 10] = ["theta3", "eps", "tau", "sigma", "psi1", "psi2", "X", "Y", "W", "Q"];

fn foliation(theta1: &str, theta2: &str, grid: usize, out: &mut Output) -> Result<u8> {
    let (t1, t2) = (parse::angle(theta1)?, parse::angle(theta2)?);
    let leaves = foliation_leaves(t1, t2, grid)?;
    let singular: Vec<String> = leaves.iter().filter(|l| l.singular).map(|l| num(l.theta3)).collect();
    eprintln!("{} leaves; singular theta3: {}", leaves.len(), singular.join(" "));
    let mut rows = Vec::new();
    for leaf in &leaves {
        let cr = &leaf.crossing;
        for arc in &cr.arcs {
            for p in &arc.points {
                let d = DiskCoords::from_xy(p[0], p[1]);
                rows.push(vec![
                    num(leaf.theta3),
                    arc.eps.to_string(),
                    arc.tau.to_string(),
                    arc.sigma.to_string(),
                    num(d.psi1),
                    num(d.psi2),
                    num(p[0]),
                    num(p[1]),
                    num(cr.w.eval(p[0], p[1])),
                    num(cr.q.eval(p[0], p[1])),
                ]);
            }
        }
    }
    match out.format {
        Format::Csv => out.csv(&FOLIATION_HEADER, rows)?,
        Format::Json => {
            let leaves: Vec<Value> = leaves
                .iter()
                .map(|l| {
                    json!({
                        "theta3": l.theta3,
                        "singular": l.singular,
                        "arcs": l.crossing.arcs.iter().map(|a| json!({
                            "eps": a.eps, "tau": a.tau, "sigma": a.sigma, "points": a.points,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.json(&json!({"theta1": t1, "theta2": t2, "leaves": leaves}))?
        }
    }
    Ok(0)
}

fn ford(n: usize, k: i64, out: &mut Output) -> Result<u8> {
    let cx = build_ideal_boundary_complex(n)?;
    let faces: Vec<Value> = cx
        .faces
        .iter()
        .map(|f| {
            json!({
                "label": f.label.to_string(),
                "sphere": f.label.k,
                "edges": f.edges.iter().map(|&e| cx.edges[e].label.to_string()).collect::<Vec<_>>(),
                "vertices": f.corners,
                "borders": cx.bordering_spheres(f),
            })
        })
        .collect();
    match out.format {
        Format::Csv => out.csv(
            &["face", "sphere", "degree", "edges"],
            cx.faces.iter().map(|f| {
                vec![
                    f.label.to_string(),
                    f.label.k.to_string(),
                    f.edges.len().to_string(),
                    f.edges
                        .iter()
                        .map(|&e| cx.edges[e].label.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                ]
            }),
        )?,
        Format::Json => {
            let ridges: Vec<Value> = ridge_cycles(n, k)?
                .iter()
                .map(|c| json!({"j": c.j, "product": c.product.to_string(), "trivial": c.is_trivial(n as i64)}))
                .collect();
            let vertices: Vec<Value> = ideal_vertex_cycles(n, k)?
                .iter()
                .map(|c| json!({"j": c.j, "nodes": c.nodes, "arrows_valid": c.arrows_valid, "consistent": c.consistent}))
                .collect();
            out.json(&json!({
                "n": n,
                "vertices": cx.vertex_count,
                "edges": cx.edges.len(),
                "faces": faces,
                "face_count": cx.faces.len(),
                "euler": cx.euler(),
                "edges_have_two_faces": cx.edges_have_two_faces(),
                "face_degrees": cx.face_degrees(),
                "ridge_cycles": ridges,
                "vertex_cycles": vertices,
            }))?
        }
    }
    Ok(0)
}

fn certify(n: usize, param: &TriParam, cfg: &RunConfig, out: &mut Output) -> Result<u8> {
    let p = param.params(n)?;
    let cert = trigroup::certify(&p, cfg.tol)?;
    let wa = trigroup::wa_type(&p, cfg.tol)?;
    match out.format {
        Format::Json => out.json(&json!({
            "n": cert.n,
            "t": cert.t,
            "k_bound": cert.k_bound,
            "entries": cert.entries.iter().map(|e| json!({
                "jprime": e.jprime, "j": e.j, "k": e.k, "rho": e.rho
            })).collect::<Vec<_>>(),
            "tangency_residual": cert.tangency_residual,
            "verdict": cert.verdict.to_string(),
            "min_margin": cert.min_margin,
            "witness": cert.witness.map(|w| json!({"jprime": w.jprime, "j": w.j, "k": w.k})),
            "angular": p.angular,
            "wa_type": format!("{:?}", wa.kind),
            "wa_trace": trigroup::wa_trace_formula(&p),
        }))?,
        Format::Csv => out.csv(
            &["n", "t", "jprime", "j", "k", "rho"],
            cert.entries.iter().map(|e| {
                vec![n.to_string(), num(p.t), e.jprime.to_string(), e.j.to_string(), e.k.to_string(), num(e.rho)]
            }),
        )?,
    }
    eprintln!("verdict: {} (W_A {:?})", cert.verdict, wa.kind);
    Ok(match cert.verdict {
        Verdict::Certified => 0,
        Verdict::Failed(_) => 2,
        Verdict::Boundary => 3,
    })
}

/// Uniform grid on `[lo, hi]` with the threshold `tan(π/(2n))` inserted.
fn sweep_grid(n: usize, lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let th = trigroup::threshold(n);
    if lo < th && th < hi && !ts.contains(&th) {
        ts.push(th);
        ts.sort_by(f64::total_cmp);
    }
    ts
}

fn sweep(n: usize, lo: f64, hi: f64, grid: usize, out: &mut Output) -> Result<u8> {
    ensure!(lo > 0.0 && hi > lo, "need 0 < t-min < t-max");
    let ts = sweep_grid(n, lo, hi, grid);
    let blocks = ts
        .par_iter()
        .map(|&t| trigroup::sweep_at(n, t))
        .collect::<chyp::Result<Vec<_>>>()?;
    let rows: Vec<_> = blocks.into_iter().flatten().collect();
    let threshold = trigroup::threshold(n);
    match out.format {
        Format::Csv => out.csv(
            &["n", "t", "jprime", "j", "k", "rho"],
            rows.iter().map(|r| {
                vec![r.n.to_string(), num(r.t), r.jprime.to_string(), r.j.to_string(), r.k.to_string(), num(r.rho)]
            }),
        )?,
        Format::Json => out.json(&json!({
            "n": n,
            "threshold": threshold,
            "rows": rows.iter().map(|r| json!({
                "t": r.t, "jprime": r.jprime, "j": r.j, "k": r.k, "rho": r.rho
            })).collect::<Vec<_>>(),
        }))?,
    }
    eprintln!("threshold t = tan(pi/{}) = {}", 2 * n, threshold);
    Ok(0)
}
