//! Batch front end: loads domain files, runs the experiments, and emits
//! versioned JSON/CSV reports. Exit codes: 0 success, 2 inconclusive
//! scientific verdict, 1 error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sobex::capacity::{estimate_capacity, CapacityProblem};
use sobex::conformal::{build_map, correspondence_table, evaluate, MapSide};
use sobex::extend::{
    extend_exterior, inner_extend, necessity_test_function, parse_family, sample, sample_inner,
    sobolev_seminorm, write_grid_csv, NormRegion,
};
use sobex::geom::{DomainSpec, Point};
use sobex::metricpath::{
    duality_check, estimate_condition_constant, exponent_sweep, CostFunctional, PathSide,
    SamplingPlan, Verdict,
};
use sobex::reflect::{build_reflection, verify_sum_estimate};
use sobex::report::{Report, Reproducibility};
use sobex::whitney::{decompose, Side};
use sobex::{Result, SobexError};

#[derive(Parser)]
#[command(name = "sobex", version, about = "Planar Sobolev-extension toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliSide {
    Interior,
    Exterior,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckSide {
    Complement,
    Interior,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a Whitney decomposition as CSV (level,m1,m2).
    Whitney {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum, default_value = "interior")]
        side: CliSide,
        #[arg(long, default_value_t = 6)]
        depth: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study of the curve-condition ratio on one side.
    Check {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "complement")]
        side: CheckSide,
        #[arg(long, default_value_t = 24)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        depth: i32,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Condition verdicts across a comma-separated list of exponents.
    Sweep {
        #[arg(long)]
        domain: PathBuf,
        /// Comma-separated exponents, e.g. 1.2,1.5,1.8.
        #[arg(long)]
        p: String,
        #[arg(long, value_enum, default_value = "complement")]
        side: CheckSide,
        #[arg(long, default_value_t = 7)]
        depth: i32,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the complement condition at p with the interior condition at
    /// the dual exponent q = p/(p-1).
    Duality {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 7)]
        depth: i32,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conformal capacity between two continua given as JSON polylines.
    Capacity {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long = "E")]
        e: PathBuf,
        #[arg(long = "F")]
        f: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exterior extension of a sampled test function; writes PREFIX.grid.csv
    /// and PREFIX.json.
    Extend {
        #[arg(long)]
        domain: PathBuf,
        /// Function family: one, x, re_z2, pow:A, trig:K.
        #[arg(long)]
        u: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 6)]
        depth: i32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inner extension from the conformal core Omega_eps to Omega.
    InnerExtend {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        u: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Singular necessity test function for a boundary pair.
    Necessity {
        #[arg(long)]
        domain: PathBuf,
        /// Boundary point as "x,y".
        #[arg(long)]
        z1: String,
        #[arg(long)]
        z2: String,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conformal map diagnostics: boundary correspondence table and a probe
    /// mesh image; writes PREFIX.correspondence.csv and PREFIX.mesh.csv.
    Map {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum, default_value = "interior")]
        side: CliSide,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bundle existing report files into one document.
    Report {
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_domain(path: &Path) -> Result<DomainSpec> {
    let text = fs::read_to_string(path)?;
    DomainSpec::from_json(&text)
}

fn parse_point(s: &str) -> Result<Point> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(SobexError::Config(format!(
            "expected a point as 'x,y', got '{}'",
            s
        )));
    }
    let x: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| SobexError::Config(format!("bad x-coordinate in '{}'", s)))?;
    let y: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| SobexError::Config(format!("bad y-coordinate in '{}'", s)))?;
    Ok(Point::new(x, y))
}

fn load_polyline(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path)?;
    let raw: Vec<[f64; 2]> = serde_json::from_str(&text)?;
    if raw.is_empty() {
        return Err(SobexError::Config(format!(
            "polyline file {} is empty",
            path.display()
        )));
    }
    Ok(raw.iter().map(|v| Point::new(v[0], v[1])).collect())
}

fn verdict_code(v: Verdict) -> u8 {
    if v == Verdict::Inconclusive {
        2
    } else {
        0
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Whitney {
            domain,
            side,
            depth,
            out,
        } => {
            let d = load_domain(&domain)?;
            let s = match side {
                CliSide::Interior => Side::Interior,
                CliSide::Exterior => Side::ExteriorBounded,
            };
            let w = decompose(&d, s, depth)?;
            let mut buf = Vec::new();
            w.write_csv(&mut buf)?;
            let text = String::from_utf8(buf).expect("CSV is UTF-8");
            match out {
                Some(p) => write_text(&p, &text)?,
                None => print!("{}", text),
            }
            Ok(0)
        }
        Command::Check {
            domain,
            p,
            side,
            pairs,
            depth,
            seed,
            out,
        } => {
            let d = load_domain(&domain)?;
            let f = match side {
                CheckSide::Complement => CostFunctional::complement(p)?,
                CheckSide::Interior => CostFunctional::interior(p)?,
            };
            let plan = SamplingPlan {
                depth,
                n_random: pairs,
                seed,
                ..SamplingPlan::default()
            };
            let rep = estimate_condition_constant(&d, &f, &plan)?;
            let config = json!({
                "domain": domain.display().to_string(),
                "p": p,
                "side": f.side,
                "pairs": pairs,
                "depth": depth,
                "seed": seed,
            });
            let result = json!({
                "p": rep.exponent,
                "side": rep.side,
                "max_ratio": rep.max_ratio,
                "trend": rep.trend,
                "verdict": rep.verdict,
                "pairs": rep.pairs,
            });
            Report::new(
                "check",
                config,
                Reproducibility::new(Some(seed), Some(depth), None),
                result,
            )
            .emit(out.as_deref())?;
            Ok(verdict_code(rep.verdict))
        }
        Command::Sweep {
            domain,
            p,
            side,
            depth,
            seed,
            out,
        } => {
            let d = load_domain(&domain)?;
            let exps: Vec<f64> = p
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| SobexError::Config(format!("bad exponent '{}'", s)))
                })
                .collect::<Result<_>>()?;
            let s = match side {
                CheckSide::Complement => PathSide::Complement,
                CheckSide::Interior => PathSide::Interior,
            };
            let plan = SamplingPlan {
                depth,
                seed,
                ..SamplingPlan::default()
            };
            let entries = exponent_sweep(&d, s, &exps, &plan)?;
            let code = entries
                .iter()
                .map(|e| verdict_code(e.verdict))
                .max()
                .unwrap_or(0);
            let config = json!({
                "domain": domain.display().to_string(),
                "p": exps,
                "side": s,
                "depth": depth,
                "seed": seed,
            });
            Report::new(
                "sweep",
                config,
                Reproducibility::new(Some(seed), Some(depth), None),
                serde_json::to_value(&entries)?,
            )
            .emit(out.as_deref())?;
            Ok(code)
        }
        Command::Duality {
            domain,
            p,
            depth,
            seed,
            out,
        } => {
            let d = load_domain(&domain)?;
            let plan = SamplingPlan {
                depth,
                seed,
                ..SamplingPlan::default()
            };
            let rep = duality_check(&d, p, &plan)?;
            let code = verdict_code(rep.complement.verdict).max(verdict_code(rep.interior.verdict));
            let config = json!({
                "domain": domain.display().to_string(),
                "p": p,
                "depth": depth,
                "seed": seed,
            });
            Report::new(
                "duality",
                config,
                Reproducibility::new(Some(seed), Some(depth), None),
                serde_json::to_value(&rep)?,
            )
            .emit(out.as_deref())?;
            Ok(code)
        }
        Command::Capacity {
            domain,
            e,
            f,
            h,
            out,
        } => {
            let d = load_domain(&domain)?;
            let prob = CapacityProblem {
                e: load_polyline(&e)?,
                f: load_polyline(&f)?,
                domain: d,
                h,
            };
            let est = estimate_capacity(&prob)?;
            let config = json!({
                "domain": domain.display().to_string(),
                "E": e.display().to_string(),
                "F": f.display().to_string(),
                "h": h,
            });
            Report::new(
                "capacity",
                config,
                Reproducibility::new(None, None, Some(h)),
                json!({"value": est.value, "residual": est.residual, "iterations": est.iterations}),
            )
            .emit(out.as_deref())?;
            Ok(0)
        }
        Command::Extend {
            domain,
            u,
            p,
            h,
            depth,
            out,
        } => {
            let d = load_domain(&domain)?;
            let fam = parse_family(&u)?;
            let mi = build_map(&d, MapSide::Interior, 1e-3)?;
            let me = build_map(&d, MapSide::Exterior, 1e-3)?;
            let wi = decompose(&d, Side::Interior, depth)?;
            let we = decompose(&d, Side::ExteriorBounded, depth)?;
            let r = build_reflection(&wi, &we, &mi, &me)?;
            let pou = sobex::extend::build_pou(&we, &r);
            let ug = sample(&d, fam, h)?;
            let eu = extend_exterior(&ug, &d, &r, &wi, &pou)?;
            let nu = sobolev_seminorm(&ug, p, NormRegion::Interior)?;
            let ne = sobolev_seminorm(&eu, p, NormRegion::All)?;
            let sums = verify_sum_estimate(&r, &wi, &we, p.clamp(1.01, 1.99))?;
            let mut buf = Vec::new();
            write_grid_csv(&eu, &mut buf)?;
            let grid_path = out.with_extension("grid.csv");
            write_text(&grid_path, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
            let config = json!({
                "domain": domain.display().to_string(),
                "u": u,
                "p": p,
                "h": h,
                "depth": depth,
            });
            let result = json!({
                "input_norm": nu,
                "extension_norm": ne,
                "norm_ratio": ne.norm / nu.norm,
                "pou_kappa": pou.kappa,
                "max_family_ratio": sums.max_ratio,
                "grid_csv": grid_path.display().to_string(),
            });
            Report::new(
                "extend",
                config,
                Reproducibility::new(None, Some(depth), Some(h)),
                result,
            )
            .emit(Some(&out.with_extension("json")))?;
            Ok(0)
        }
        Command::InnerExtend {
            domain,
            u,
            p,
            h,
            eps,
            out,
        } => {
            let d = load_domain(&domain)?;
            let fam = parse_family(&u)?;
            let mi = build_map(&d, MapSide::Interior, 1e-3)?;
            let ug = sample_inner(&d, &mi, fam, h, eps)?;
            let eu = inner_extend(&ug, eps, &mi, &d)?;
            let nu = sobolev_seminorm(&ug, p, NormRegion::Interior)?;
            let ne = sobolev_seminorm(&eu, p, NormRegion::Interior)?;
            let mut buf = Vec::new();
            write_grid_csv(&eu, &mut buf)?;
            let grid_path = out.with_extension("grid.csv");
            write_text(&grid_path, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
            let config = json!({
                "domain": domain.display().to_string(),
                "u": u,
                "p": p,
                "h": h,
                "eps": eps,
            });
            let result = json!({
                "core_norm": nu,
                "extended_norm": ne,
                "norm_ratio": ne.norm / nu.norm,
                "grid_csv": grid_path.display().to_string(),
            });
            Report::new(
                "inner-extend",
                config,
                Reproducibility::new(None, None, Some(h)),
                result,
            )
            .emit(Some(&out.with_extension("json")))?;
            Ok(0)
        }
        Command::Necessity {
            domain,
            z1,
            z2,
            c1,
            p,
            h,
            out,
        } => {
            let d = load_domain(&domain)?;
            let z1 = parse_point(&z1)?;
            let z2 = parse_point(&z2)?;
            let rep = necessity_test_function(&d, &z1, &z2, c1, h)?;
            let norm = sobolev_seminorm(&rep.phi, p, NormRegion::Interior)?;
            let energy = norm.seminorm.powf(p);
            let sep = z1.dist(&z2);
            let mut buf = Vec::new();
            write_grid_csv(&rep.phi, &mut buf)?;
            let grid_path = out.with_extension("grid.csv");
            write_text(&grid_path, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
            let config = json!({
                "domain": domain.display().to_string(),
                "z1": [z1.x, z1.y],
                "z2": [z2.x, z2.y],
                "c1": c1,
                "p": p,
                "h": h,
            });
            let result = json!({
                "c0": rep.c0,
                "john_surrogate": rep.j_est,
                "p1_diam": rep.p1_diam,
                "grad_energy": energy,
                "ratio": energy / sep.powf(2.0 - p),
                "grid_csv": grid_path.display().to_string(),
            });
            Report::new(
                "necessity",
                config,
                Reproducibility::new(None, None, Some(h)),
                result,
            )
            .emit(Some(&out.with_extension("json")))?;
            Ok(0)
        }
        Command::Map {
            domain,
            side,
            tol,
            n,
            out,
        } => {
            let d = load_domain(&domain)?;
            let s = match side {
                CliSide::Interior => MapSide::Interior,
                CliSide::Exterior => MapSide::Exterior,
            };
            let m = build_map(&d, s, tol)?;
            let table = correspondence_table(&m, n)?;
            let mut corr = String::from("angle,arc_length,x,y\n");
            for row in &table {
                corr.push_str(&format!(
                    "{},{},{},{}\n",
                    row.angle, row.arc_length, row.image.x, row.image.y
                ));
            }
            write_text(&out.with_extension("correspondence.csv"), &corr)?;
            // Probe mesh: images of a polar grid of the source region.
            let mut mesh = String::from("r,theta,x,y\n");
            let radii: Vec<f64> = match s {
                MapSide::Interior => (1..=8).map(|k| k as f64 / 9.0).collect(),
                MapSide::Exterior => (1..=8).map(|k| 1.0 + k as f64 / 4.0).collect(),
            };
            for r in radii {
                for k in 0..n.max(8) {
                    let theta = std::f64::consts::TAU * k as f64 / n.max(8) as f64;
                    let z = Point::new(r * theta.cos(), r * theta.sin());
                    let (w, _) = evaluate(&m, z)?;
                    mesh.push_str(&format!("{},{},{},{}\n", r, theta, w.x, w.y));
                }
            }
            write_text(&out.with_extension("mesh.csv"), &mesh)?;
            Ok(0)
        }
        Command::Report { inputs, out } => {
            let mut docs: Vec<Value> = Vec::new();
            for path in &inputs {
                let text = fs::read_to_string(path)?;
                docs.push(serde_json::from_str(&text)?);
            }
            let config = json!({
                "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            });
            Report::new(
                "report",
                config,
                Reproducibility::new(None, None, None),
                Value::Array(docs),
            )
            .emit(out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
