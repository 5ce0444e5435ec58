//! Command-line front end: orbits, invariant checks, classification,
//! confinement probes and pencil data for one configuration file.
//!
//! Exit codes: 0 pass, 1 check failed, 2 stage error or unusable input,
//! 3 precision exhausted.

mod checks;
mod orbit_file;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpencil::charts::chart_matrix;
use qpencil::config::{parse_config, ConfigFile};
use qpencil::engine::{
    autonomous_mismatch_orbit, confinement_probe_3d, max_residual, orbit, verify_recurrence,
    OrbitState,
};
use qpencil::families::build_pencils;
use qpencil::pencil_core::{char_poly, classify_pencil};
use qpencil::qrt::{base_points_fiber, FiberContext};
use qpencil::scalar::DEFAULT_TOL;
use qpencil::uniformization::{lambda_of, sqrt_delta_of};
use qpencil::{Error, ProjPoint1, Real, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use checks::{Check, Suite};
use orbit_file::{residual_rows, state_row, ConfigEcho, Halt, OrbitFile};
use output::{cj, cs, finite, pj, ps, Format, Sink};

#[derive(Parser)]
#[command(
    name = "qpencil",
    version,
    about = "Discrete Painleve orbits on pencils of quadrics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// seed for every random draw
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// tolerance override (must be positive)
    #[arg(long)]
    tol: Option<Real>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// output file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Iterate the deformed map and check the recurrences along the orbit.
    Orbit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        steps: usize,
        /// negative control: iterate the undeformed map, check against the deformed recurrences
        #[arg(long)]
        autonomous_mismatch: bool,
    },
    /// Run the invariant suite, or re-check an orbit file.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        steps: usize,
        /// orbit file written by `orbit --format json`
        #[arg(long)]
        orbit: Option<PathBuf>,
    },
    /// Classify the pencil spanned by Q0 and Q-infinity.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Singularity confinement probes for the eight base points.
    Confine {
        #[command(flatten)]
        common: Common,
        /// probe one base point only (1..8)
        #[arg(long)]
        index: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        eps: Real,
    },
    /// Print the pencil, base points and chart at the start position.
    PencilInfo {
        #[command(flatten)]
        common: Common,
    },
}

/// Why a command did not pass.
enum Failure {
    Check(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load(c: &Common) -> std::result::Result<ConfigFile, Failure> {
    if let Some(t) = c.tol {
        if !(t > 0.0) {
            return Err(Error::Parse(format!("--tol must be positive, got {t}")).into());
        }
    }
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| Error::Parse("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn sink(c: &Common) -> Sink {
    Sink {
        format: c.format,
        out: c.out.clone(),
    }
}

fn start_of(cf: &ConfigFile) -> Scalar {
    cf.start.unwrap_or_else(|| cf.family.default_start())
}

/// Initial state from x0/y0 in the config, or drawn from the seed.
fn initial(cf: &ConfigFile, seed: u64) -> qpencil::Result<OrbitState> {
    let p = cf.family.param(start_of(cf))?;
    let (x, y) = match (cf.x0, cf.y0) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || Scalar::new(r.gen_range(-1.0..1.0), r.gen_range(-0.6..0.6));
            (draw(), draw())
        }
    };
    Ok(OrbitState::new(
        0.0,
        ProjPoint1::affine(x),
        ProjPoint1::affine(y),
        p,
    ))
}

fn cmd_orbit(c: &Common, steps: usize, mismatch: bool) -> Outcome {
    let cf = load(c)?;
    let cfg = &cf.family;
    let tol = c.tol.unwrap_or(1e-8);
    let s0 = initial(&cf, c.seed)?;
    let run = if mismatch {
        autonomous_mismatch_orbit(cfg, &s0, steps)
    } else {
        orbit(cfg, &s0, steps)
    };
    // residuals are always checked against the deformed system of `cfg`
    let res = verify_recurrence(cfg, &run.trace)?;
    let m = max_residual(&res);
    let pass = run.halted.is_none() && m < tol;
    let file = OrbitFile {
        command: "orbit".into(),
        config: ConfigEcho::of(cfg),
        seed: c.seed,
        tol,
        steps,
        autonomous_mismatch: mismatch,
        states: run.trace.states.iter().map(state_row).collect(),
        residuals: residual_rows(&res),
        max_residual: finite(m),
        error_estimate: finite(run.trace.error_estimate()),
        pass,
        halted: run.halted.as_ref().map(Halt::of),
    };
    let out = sink(c);
    match out.format {
        Format::Json => out.json(&file)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = run
                .trace
                .states
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let r = if k == 0 {
                        [String::new(), String::new()]
                    } else {
                        res[k - 1].map(|v| format!("{v:e}"))
                    };
                    vec![
                        s.n.to_string(),
                        ps(&s.x),
                        ps(&s.y),
                        cs(s.p.position()),
                        r[0].clone(),
                        r[1].clone(),
                    ]
                })
                .collect();
            let meta = [
                ("command", "orbit".to_string()),
                ("family", cfg.tag.to_string()),
                ("seed", c.seed.to_string()),
                ("tol", format!("{tol:e}")),
                ("autonomous_mismatch", mismatch.to_string()),
                ("max_residual", format!("{m:e}")),
            ];
            out.csv(
                &meta,
                &["n", "x", "y", "position", "residual_1", "residual_2"],
                &rows,
            )?;
        }
    }
    if let Some(e) = run.halted {
        return Err(e.into());
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "max recurrence residual {m:e} >= tolerance {tol:e}"
        )))
    }
}

fn report_checks(c: &Common, meta: Vec<(&str, String)>, list: &[Check]) -> Outcome {
    let out = sink(c);
    match out.format {
        Format::Json => {
            let mut obj = serde_json::Map::new();
            for (k, v) in &meta {
                obj.insert((*k).into(), json!(v));
            }
            obj.insert("seed".into(), json!(c.seed));
            obj.insert("pass".into(), json!(list.iter().all(|k| k.pass)));
            obj.insert("checks".into(), json!(list));
            out.json(&obj)?;
        }
        Format::Csv => {
            let mut meta = meta;
            meta.push(("seed", c.seed.to_string()));
            let rows: Vec<Vec<String>> = list
                .iter()
                .map(|k| {
                    vec![
                        k.name.to_string(),
                        k.pass.to_string(),
                        k.value.map_or_else(|| "".into(), |v| format!("{v:e}")),
                        format!("{:e}", k.tol),
                        k.detail.clone(),
                    ]
                })
                .collect();
            out.csv(&meta, &["check", "pass", "value", "tol", "detail"], &rows)?;
        }
    }
    match list.iter().find(|k| !k.pass) {
        None => Ok(()),
        Some(k) => Err(Failure::Check(format!("{} failed: {}", k.name, k.detail))),
    }
}

fn cmd_verify(c: &Common, steps: usize, orbit_path: Option<&PathBuf>) -> Outcome {
    if let Some(path) = orbit_path {
        let text = std::fs::read_to_string(path)?;
        let file: OrbitFile = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let tol = c.tol.unwrap_or(file.tol);
        let (res, m) = file.recheck()?;
        // values pass through the P1 normalization again, so agreement is to rounding
        let mut diff: Real = 0.0;
        let same_shape = res.len() == file.residuals.len();
        for (a, b) in residual_rows(&res).iter().zip(&file.residuals) {
            for k in 0..2 {
                diff = diff.max(match (a[k], b[k]) {
                    (Some(x), Some(y)) => (x - y).abs(),
                    (None, None) => 0.0,
                    _ => Real::INFINITY,
                });
            }
        }
        let list = vec![
            Check {
                name: "recurrence",
                pass: m < tol,
                value: finite(m),
                tol,
                detail: format!("{} stored steps", res.len()),
            },
            Check {
                name: "stored_residuals_reproduced",
                pass: same_shape && diff <= 1e-12,
                value: finite(diff),
                tol: 1e-12,
                detail: format!("{} stored, {} recomputed", file.residuals.len(), res.len()),
            },
        ];
        let meta = vec![
            ("command", "verify".into()),
            ("orbit", path.display().to_string()),
            ("family", file.config.family.clone()),
        ];
        return report_checks(c, meta, &list);
    }
    let cf = load(c)?;
    let suite = Suite {
        cfg: &cf.family,
        start: start_of(&cf),
        x0: cf.x0.zip(cf.y0),
        steps,
        draws: 100,
        tol: c.tol,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let list = suite.run(&mut rng);
    let meta = vec![
        ("command", "verify".into()),
        ("family", cf.family.tag.to_string()),
    ];
    report_checks(c, meta, &list)
}

/// Δ as text, e.g. "1-4λ".
fn poly_text(coeffs: &[Scalar]) -> String {
    let mut s = String::new();
    for (k, &a) in coeffs.iter().enumerate() {
        if a.norm() <= 1e-14 * coeffs.iter().map(|z| z.norm()).fold(0.0, Real::max) {
            continue;
        }
        let mag = if a.im == 0.0 {
            format!("{}", a.re.abs())
        } else {
            format!("({})", cs(a))
        };
        let neg = a.im == 0.0 && a.re < 0.0;
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push(if neg { '-' } else { '+' });
        }
        let unit = a.im == 0.0 && a.re.abs() == 1.0;
        match k {
            0 => s.push_str(&mag),
            _ => {
                if !unit {
                    s.push_str(&mag);
                }
                s.push('λ');
                if k > 1 {
                    s.push_str(&format!("^{k}"));
                }
            }
        }
    }
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

fn cmd_classify(c: &Common) -> Outcome {
    let cf = load(c)?;
    let cfg = &cf.family;
    let q = build_pencils(cfg)?.q;
    let delta = char_poly(&q);
    let ty = classify_pencil(&q, c.tol.unwrap_or(DEFAULT_TOL))?;
    let expected = cfg.tag.expected_type();
    let pass = ty.tag == expected;
    let text = poly_text(&delta.coeffs);
    let summary = format!("type {}, Δ = {text}", ty.tag);
    let out = sink(c);
    match out.format {
        Format::Json => {
            let roots: Vec<_> = ty
                .root_data
                .iter()
                .map(|r| json!({"lambda": pj(&r.root), "multiplicity": r.multiplicity, "corank": r.corank}))
                .collect();
            out.json(&json!({
                "command": "classify",
                "family": cfg.tag.to_string(),
                "seed": c.seed,
                "type": ty.tag.name(),
                "segre": ty.segre,
                "expected_type": expected.name(),
                "delta": delta.coeffs.iter().map(|&z| cj(z)).collect::<Vec<_>>(),
                "delta_text": text,
                "roots": roots,
                "summary": summary,
                "pass": pass,
            }))?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = ty
                .root_data
                .iter()
                .map(|r| {
                    vec![
                        ps(&r.root),
                        r.multiplicity.to_string(),
                        r.corank.to_string(),
                    ]
                })
                .collect();
            let meta = [
                ("command", "classify".to_string()),
                ("family", cfg.tag.to_string()),
                ("seed", c.seed.to_string()),
                ("type", ty.tag.name().to_string()),
                ("segre", ty.segre.clone()),
                ("expected_type", expected.name().to_string()),
                ("delta", text),
            ];
            out.csv(&meta, &["lambda", "multiplicity", "corank"], &rows)?;
        }
    }
    eprintln!("{summary}");
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "type {} but {} expects {}",
            ty.tag, cfg.tag, expected
        )))
    }
}

fn cmd_confine(c: &Common, index: Option<usize>, eps: Real) -> Outcome {
    let cf = load(c)?;
    let cfg = &cf.family;
    let indices: Vec<usize> = match index {
        Some(i) => vec![i],
        None => (1..=8).collect(),
    };
    let mut rows = Vec::new();
    let mut fails = Vec::new();
    for i in indices {
        match confinement_probe_3d(cfg, i, eps, cf.start) {
            Ok(r) => {
                if !r.passed {
                    fails.push(format!("i={i}"));
                }
                rows.push(json!({
                    "index": i,
                    "eps": r.eps,
                    "d1": r.d1,
                    "d2": r.d2,
                    "ratio_d1": finite(r.ratio_d1()),
                    "ratio_d2": finite(r.ratio_d2()),
                    "mutual": r.mutual,
                    "spread": r.spread,
                    "passed": r.passed,
                    "error": null,
                }));
            }
            Err(e) => {
                fails.push(format!("i={i}: {e}"));
                rows.push(json!({"index": i, "eps": eps, "passed": false, "error": e.to_string()}));
            }
        }
    }
    let out = sink(c);
    match out.format {
        Format::Json => out.json(&json!({
            "command": "confine",
            "family": cfg.tag.to_string(),
            "seed": c.seed,
            "probes": rows,
            "pass": fails.is_empty(),
        }))?,
        Format::Csv => {
            let cell = |v: &serde_json::Value| match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let d = |k: &str, j: usize| {
                        r.get(k)
                            .and_then(|a| a.get(j))
                            .map(cell)
                            .unwrap_or_default()
                    };
                    vec![
                        cell(&r["index"]),
                        cell(&r["eps"]),
                        d("d1", 0),
                        d("d1", 1),
                        d("d2", 0),
                        d("d2", 1),
                        r.get("ratio_d1").map(cell).unwrap_or_default(),
                        r.get("ratio_d2").map(cell).unwrap_or_default(),
                        cell(&r["passed"]),
                        r.get("error").map(cell).unwrap_or_default(),
                    ]
                })
                .collect();
            let meta = [
                ("command", "confine".to_string()),
                ("family", cfg.tag.to_string()),
                ("seed", c.seed.to_string()),
            ];
            let header = [
                "index",
                "eps",
                "d1_eps",
                "d1_eps_100",
                "d2_eps",
                "d2_eps_100",
                "ratio_d1",
                "ratio_d2",
                "passed",
                "error",
            ];
            out.csv(&meta, &header, &table)?;
        }
    }
    if fails.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "probes failed: {}",
            fails.join(", ")
        )))
    }
}

fn matrix_json(m: [[Scalar; 4]; 4]) -> Vec<Vec<[Real; 2]>> {
    m.iter()
        .map(|row| row.iter().map(|&z| cj(z)).collect())
        .collect()
}

fn cmd_pencil_info(c: &Common) -> Outcome {
    let cf = load(c)?;
    let cfg = &cf.family;
    let pens = build_pencils(cfg)?;
    let start = start_of(&cf);
    let p = cfg.param(start)?;
    let ch = chart_matrix(cfg.tag, &p, cfg.kappa)?;
    let a: [[Scalar; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| ch.a[(i, j)]));
    let plane: Vec<_> = cfg
        .affine_base_points()
        .iter()
        .map(|&(x, y)| [cj(x), cj(y)])
        .collect();
    let fiber: Vec<_> = base_points_fiber(&FiberContext::new(cfg, start))
        .iter()
        .map(|&(x, y)| [cj(x), cj(y)])
        .collect();
    let hom: Vec<_> = cfg
        .base_points_homogeneous()
        .iter()
        .map(|s| s.coords().map(cj))
        .collect();
    let info = json!({
        "command": "pencil-info",
        "family": cfg.tag.to_string(),
        "seed": c.seed,
        "q0": matrix_json(pens.q.m0.entries()),
        "q_inf": matrix_json(pens.q.m_inf.entries()),
        "delta": char_poly(&pens.q).coeffs.iter().map(|&z| cj(z)).collect::<Vec<_>>(),
        "plane_base_points": plane,
        "base_points_p3": hom,
        "biquadratic_basis": pens.c_basis.iter().map(|b| b.to_vec().iter().map(|&z| cj(z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "start": cj(start),
        "lambda": cj(lambda_of(&p, cfg.kappa)?),
        "sqrt_delta": cj(sqrt_delta_of(&p, cfg.kappa)?),
        "fiber_base_points": fiber,
        "chart_matrix": matrix_json(a),
        "chart_scale": cj(ch.scale),
        "normalization_residual": ch.normalization_residual()?,
    });
    let out = sink(c);
    match out.format {
        Format::Json => out.json(&info)?,
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &info, &mut rows);
            let meta = [
                ("command", "pencil-info".to_string()),
                ("seed", c.seed.to_string()),
            ];
            out.csv(&meta, &["key", "value"], &rows)?;
        }
    }
    Ok(())
}

/// key/value rows of a JSON tree; [re, im] pairs of numbers print as complex.
fn flatten(prefix: &str, v: &serde_json::Value, rows: &mut Vec<Vec<String>>) {
    use serde_json::Value;
    match v {
        Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_f64) => {
            let z = Scalar::new(a[0].as_f64().unwrap_or(0.0), a[1].as_f64().unwrap_or(0.0));
            rows.push(vec![prefix.into(), cs(z)]);
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, rows);
            }
        }
        Value::String(s) => rows.push(vec![prefix.into(), s.clone()]),
        other => rows.push(vec![prefix.into(), other.to_string()]),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Orbit {
            common,
            steps,
            autonomous_mismatch,
        } => cmd_orbit(common, *steps, *autonomous_mismatch),
        Cmd::Verify {
            common,
            steps,
            orbit,
        } => cmd_verify(common, *steps, orbit.as_ref()),
        Cmd::Classify { common } => cmd_classify(common),
        Cmd::Confine { common, index, eps } => cmd_confine(common, *index, *eps),
        Cmd::PencilInfo { common } => cmd_pencil_info(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("fail: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            match &e {
                Error::StageError { stage, .. } => {
                    eprintln!("error: {e} (confinement-suspect stage {stage})")
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(match e {
                Error::PrecisionExhausted { .. } => 3,
                _ => 2,
            })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
