//! The six-stage deformed step F̃ = ĩ₁∘ĩ₂, orbits, residuals against the
//! recurrence systems, the symmetric root, conjugacy, the 3D confinement
//! probe and the audit of quadrics through R₁(S_i).

use nalgebra::Vector4;
use rand::Rng;

use crate::charts::{chart_matrix, phi, phi_inverse, ChartMatrix};
use crate::deformation::{factor_maps, l_homogeneous, DeformationSpec, Factor};
use crate::error::{Error, Result};
use crate::families::{check_symmetric, FamilyConfig};
use crate::pencil_core::{
    quadric_space_dim_through, quadric_space_dim_through_jets, segre_embed, ProjPoint1, ProjPoint3,
};
use crate::qrt::{base_points_fiber, i1_fiber, i2_fiber, FiberContext, ProbeReport, PROBE_SEEDS};
use crate::scalar::{c, re, Real, Scalar, EPS};
use crate::uniformization::{shift, FamilyTag, UniformParam};

/// Predicted relative error at which an orbit is stopped.
pub const PRECISION_LIMIT: Real = 1e-6;

/// Rank tolerance of the net audit.
pub const NET_TOL: Real = 1e-9;

pub const STAGE_NAMES: [&str; 6] = ["L2", "i2", "R2", "L1", "i1", "R1"];

/// (x_n, y_n) on the quadric with parameter p at index 2n − 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitState {
    /// half-integer valued for symmetric root steps
    pub n: Real,
    pub x: ProjPoint1,
    pub y: ProjPoint1,
    pub p: UniformParam,
}

impl OrbitState {
    pub fn new(n: Real, x: ProjPoint1, y: ProjPoint1, p: UniformParam) -> Self {
        OrbitState { n, x, y, p }
    }

    /// State n = 0 at the config's default start.
    pub fn initial(cfg: &FamilyConfig, x: Scalar, y: Scalar) -> Result<Self> {
        Ok(OrbitState {
            n: 0.0,
            x: ProjPoint1::affine(x),
            y: ProjPoint1::affine(y),
            p: cfg.param(cfg.default_start())?,
        })
    }

    /// Random initial state with |x|, |y| of order one.
    pub fn random<R: Rng>(cfg: &FamilyConfig, rng: &mut R) -> Result<Self> {
        let mut draw = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-0.6..0.6));
        let (x, y) = (draw(), draw());
        Self::initial(cfg, x, y)
    }
}

/// Output of one stage: the state after it and the parameter it ends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageOutput {
    pub name: &'static str,
    pub x: ProjPoint1,
    pub y: ProjPoint1,
    pub p: UniformParam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub stages: Vec<StageOutput>,
    /// predicted chordal error of the state after this step
    pub error_estimate: Real,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitTrace {
    pub states: Vec<OrbitState>,
    pub intermediates: Vec<StepRecord>,
}

impl OrbitTrace {
    /// Predicted chordal error of the last state.
    pub fn error_estimate(&self) -> Real {
        self.intermediates.last().map_or(0.0, |r| r.error_estimate)
    }
}

/// An orbit together with the reason it stopped early, if it did.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRun {
    pub trace: OrbitTrace,
    pub halted: Option<Error>,
}

fn staged<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::StageError {
        stage: name.to_string(),
        cause: Box::new(e),
    })
}

fn ctx_at(cfg: &FamilyConfig, p: &UniformParam) -> FiberContext {
    FiberContext::new(cfg, p.position())
}

/// Step of the finite-difference derivatives in the local charts.
const DIFF_STEP: Real = 1e-7;

/// Local coordinate on P¹: the value if |v| ≤ 1, else its reciprocal.
fn chart_coord(v: &ProjPoint1) -> (Scalar, bool) {
    let (u, w) = v.uv();
    if u.norm() <= w.norm() {
        (u / w, false)
    } else {
        (w / u, true)
    }
}

fn from_chart(t: Scalar, inverted: bool) -> ProjPoint1 {
    if inverted {
        ProjPoint1::new(re(1.0), t).expect("nonzero")
    } else {
        ProjPoint1::affine(t)
    }
}

fn run_stage(
    cfg: &FamilyConfig,
    spec: &DeformationSpec,
    name: &str,
    p: &UniformParam,
    x: &ProjPoint1,
    y: &ProjPoint1,
) -> Result<(ProjPoint1, ProjPoint1, UniformParam)> {
    match name {
        "i2" => Ok((i2_fiber(&ctx_at(cfg, p), x, y)?, *y, *p)),
        "i1" => Ok((*x, i1_fiber(&ctx_at(cfg, p), x, y)?, *p)),
        _ => {
            let f = match name {
                "L1" => Factor::L1,
                "R1" => Factor::R1,
                "L2" => Factor::L2,
                _ => Factor::R2,
            };
            factor_maps(spec, p, x, y, f)
        }
    }
}

/// Derivatives of the moved coordinate with respect to (x, y), all in local charts.
fn stage_jacobian(
    cfg: &FamilyConfig,
    spec: &DeformationSpec,
    name: &str,
    p: &UniformParam,
    x: &ProjPoint1,
    y: &ProjPoint1,
    out: &ProjPoint1,
) -> [Scalar; 2] {
    let moves_x = name.ends_with('2');
    let (to, tinv) = chart_coord(out);
    let (tx, xinv) = chart_coord(x);
    let (ty, yinv) = chart_coord(y);
    let deriv = |xi: ProjPoint1, yi: ProjPoint1| -> Scalar {
        match run_stage(cfg, spec, name, p, &xi, &yi) {
            Ok((a, b, _)) => {
                let (u, w) = (if moves_x { a } else { b }).uv();
                let t = if tinv { w / u } else { u / w };
                let d = (t - to) / DIFF_STEP;
                if crate::scalar::is_finite(d) {
                    d
                } else {
                    re(Real::INFINITY)
                }
            }
            // a nudge onto an indeterminacy counts as unbounded sensitivity
            Err(_) => re(Real::INFINITY),
        }
    };
    [
        deriv(from_chart(tx + DIFF_STEP, xinv), *y),
        deriv(*x, from_chart(ty + DIFF_STEP, yinv)),
    ]
}

/// First-order error model of an orbit: the rounding committed at each stage,
/// carried forward through the Jacobians of all later stages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorModel {
    vectors: Vec<[Scalar; 2]>,
}

impl ErrorModel {
    fn push_stage(&mut self, moves_x: bool, jac: [Scalar; 2], local: Real) {
        let k = if moves_x { 0 } else { 1 };
        for v in &mut self.vectors {
            v[k] = jac[0] * v[0] + jac[1] * v[1];
        }
        let mut r = [re(0.0); 2];
        r[k] = re(local);
        self.vectors.push(r);
    }

    /// Bound on the chordal error of the current state (sum of norms).
    pub fn estimate(&self) -> Real {
        let e: Real = self
            .vectors
            .iter()
            .map(|v| v[0].norm().max(v[1].norm()))
            .sum();
        if e.is_nan() {
            Real::INFINITY
        } else {
            e
        }
    }
}

/// One step of F̃: L₂, ĩ₂, R₂, L₁, ĩ₁, R₁ in that order.
pub fn step(cfg: &FamilyConfig, s: &OrbitState) -> Result<(OrbitState, StepRecord)> {
    step_tracked(cfg, s, &mut ErrorModel::default())
}

/// As [`step`], extending the error model of the orbit so far.
pub fn step_tracked(
    cfg: &FamilyConfig,
    s: &OrbitState,
    model: &mut ErrorModel,
) -> Result<(OrbitState, StepRecord)> {
    let spec = DeformationSpec::new(cfg)?;
    let mut stages = Vec::with_capacity(6);
    let (mut x, mut y, mut p) = (s.x, s.y, s.p);
    let mut half = 0;
    for name in STAGE_NAMES {
        let (nx, ny, _) = staged(name, run_stage(cfg, &spec, name, &p, &x, &y))?;
        // positions come from the step's start so that four half steps equal one shift by 4
        if !name.starts_with('i') {
            half += 1;
        }
        let np = shift(&s.p, half);
        let moves_x = name.ends_with('2');
        let out = if moves_x { nx } else { ny };
        let jac = stage_jacobian(cfg, &spec, name, &p, &x, &y, &out);
        // rounding inside the stage acts like relative input perturbations of size ε
        let local = EPS * (1.0 + jac[0].norm() + jac[1].norm());
        model.push_stage(moves_x, jac, local);
        (x, y, p) = (nx, ny, np);
        stages.push(StageOutput { name, x, y, p });
    }
    Ok((
        OrbitState::new(s.n + 1.0, x, y, p),
        StepRecord {
            stages,
            error_estimate: model.estimate(),
        },
    ))
}

/// Up to `steps` steps, stopping at the first stage failure or when the
/// precision budget runs out.
pub fn orbit(cfg: &FamilyConfig, s0: &OrbitState, steps: usize) -> OrbitRun {
    let mut trace = OrbitTrace {
        states: vec![*s0],
        intermediates: vec![],
    };
    let mut model = ErrorModel::default();
    for k in 0..steps {
        let last = trace.states[trace.states.len() - 1];
        match step_tracked(cfg, &last, &mut model) {
            Ok((next, rec)) => {
                if !(rec.error_estimate <= PRECISION_LIMIT) {
                    return OrbitRun {
                        trace,
                        halted: Some(Error::PrecisionExhausted {
                            step: k + 1,
                            estimate: rec.error_estimate,
                        }),
                    };
                }
                trace.states.push(next);
                trace.intermediates.push(rec);
            }
            Err(e) => {
                return OrbitRun {
                    trace,
                    halted: Some(e),
                }
            }
        }
    }
    OrbitRun {
        trace,
        halted: None,
    }
}

/// Strict variant: any early stop is an error.
pub fn orbit_strict(cfg: &FamilyConfig, s0: &OrbitState, steps: usize) -> Result<OrbitTrace> {
    let run = orbit(cfg, s0, steps);
    match run.halted {
        Some(e) => Err(e),
        None => Ok(run.trace),
    }
}

/// Negative control: the orbit of the undeformed map (δ = 0 / q = 1) from the
/// same state. Checking it against the deformed system must fail.
pub fn autonomous_mismatch_orbit(cfg: &FamilyConfig, s0: &OrbitState, steps: usize) -> OrbitRun {
    let auto = cfg.autonomous();
    let s = OrbitState {
        p: s0.p.with_step(auto.step),
        ..*s0
    };
    orbit(&auto, &s, steps)
}

fn rel(a: Scalar, b: Scalar) -> Real {
    let d = (a.norm() + b.norm()).max(Real::MIN_POSITIVE);
    let r = (a - b).norm() / d;
    if r.is_nan() {
        Real::INFINITY
    } else {
        r
    }
}

/// Both equations of the family's recurrence for (x_n, y_n) → (x_{n+1}, y_{n+1}),
/// with p at index 2n − 1/2. For dA0/qA0 the worse of the two auxiliary roots.
pub fn recurrence_residual(
    cfg: &FamilyConfig,
    p: Scalar,
    cur: (Scalar, Scalar),
    next: (Scalar, Scalar),
) -> Result<[Real; 2]> {
    let pr = cfg.param(p)?;
    let w = |h: i32| pr.position_at(h);
    let z = &cfg.points;
    let k = cfg.kappa_or_zero();
    let ((xn, yn), (x1, y1)) = (cur, next);
    let prod =
        |v: &[Scalar], f: &dyn Fn(Scalar) -> Scalar| v.iter().map(|&a| f(a)).product::<Scalar>();
    let out = match cfg.tag {
        FamilyTag::DA1 => {
            let psi1 = |x: Scalar, v: Scalar| {
                prod(&z[..4], &|a| x - a) / prod(&z[4..], &|a| x - a - (v - 1.0) / 2.0)
            };
            let psi2 = |y: Scalar, v: Scalar| {
                prod(&z[..4], &|a| y + a) / prod(&z[4..], &|a| y + a - (1.0 + v) / 2.0)
            };
            let l1 = (x1 + yn) * (xn + yn) / ((x1 + yn - w(2)) * (xn + yn - w(0)));
            let l2 = (x1 + y1) * (x1 + yn) / ((x1 + y1 - w(4)) * (x1 + yn - w(2)));
            [rel(l1, psi2(yn, w(1))), rel(l2, psi1(x1, w(3)))]
        }
        FamilyTag::DD4 => {
            let l1 = w(2) / (x1 + yn) + w(0) / (xn + yn);
            let r1 = w(1) / 2.0 * z.iter().map(|&a| 1.0 / (yn + a)).sum::<Scalar>();
            let l2 = w(4) / (x1 + y1) + w(2) / (x1 + yn);
            let r2 = w(3) / 2.0 * z.iter().map(|&a| 1.0 / (x1 - a)).sum::<Scalar>();
            [rel(l1, r1), rel(l2, r2)]
        }
        FamilyTag::QA1 => {
            let l1 = (x1 * yn - w(3) * w(1)) * (xn * yn - w(1) * w(-1))
                / ((x1 * yn - 1.0) * (xn * yn - 1.0));
            let r1 = prod(&z[..4], &|a| yn - w(1) / a) / prod(&z[4..], &|a| yn - 1.0 / a);
            let l2 = (y1 * x1 - w(5) * w(3)) * (yn * x1 - w(3) * w(1))
                / ((y1 * x1 - 1.0) * (yn * x1 - 1.0));
            let r2 = prod(&z[..4], &|a| x1 - w(3) * a) / prod(&z[4..], &|a| x1 - a);
            [rel(l1, r1), rel(l2, r2)]
        }
        FamilyTag::DA0 => {
            let u = |s: Scalar| prod(z, &|a| s - a);
            let kc = |h: i32| k * w(h);
            let mut worst = [0.0 as Real; 2];
            for root in [false, true] {
                // y_n = η(η − κν_{2n})
                let mut e = (kc(1) + (kc(1) * kc(1) + 4.0 * yn).sqrt()) / 2.0;
                if root {
                    e = kc(1) - e;
                }
                let l1 = (x1 - e * (e + kc(3))) * (xn - e * (e + kc(-1)))
                    / ((x1 - (e - kc(1)) * (e - kc(3) - kc(1)))
                        * (xn - (e - kc(1)) * (e - kc(1) - kc(-1))));
                let r1 = u(e) / u(kc(1) - e);
                // x_{n+1} = ξ(ξ + κν_{2n+1})
                let mut s = (-kc(3) + (kc(3) * kc(3) + 4.0 * x1).sqrt()) / 2.0;
                if root {
                    s = -kc(3) - s;
                }
                let l2 = (y1 - s * (s - kc(5))) * (yn - s * (s - kc(1)))
                    / ((y1 - (s + kc(3)) * (s + kc(5) + kc(3)))
                        * (yn - (s + kc(3)) * (s + kc(3) + kc(1))));
                let r2 = u(s) / u(-kc(3) - s);
                worst[0] = worst[0].max(rel(l1, r1));
                worst[1] = worst[1].max(rel(l2, r2));
            }
            worst
        }
        FamilyTag::QA0 => {
            let u = |s: Scalar| prod(z, &|a| s - a) / s.powi(4);
            let mut worst = [0.0 as Real; 2];
            for root in [false, true] {
                // y_n = 1/η + η/w_{2n}
                let mut e = (w(1) * yn + (w(1) * w(1) * yn * yn - 4.0 * w(1)).sqrt()) / 2.0;
                if root {
                    e = w(1) / e;
                }
                let l1 = (x1 - e - 1.0 / (w(3) * e)) * (xn - e - 1.0 / (w(-1) * e))
                    / ((x1 - w(1) / e - e / (w(1) * w(3))) * (xn - w(1) / e - e / (w(1) * w(-1))));
                let r1 = u(e) / u(w(1) / e);
                let mut s =
                    (w(3) * x1 + (w(3) * w(3) * x1 * x1 - 4.0 * w(3)).sqrt()) / (2.0 * w(3));
                if root {
                    s = 1.0 / (w(3) * s);
                }
                let l2 = (y1 - 1.0 / s - s / w(5)) * (yn - 1.0 / s - s / w(1))
                    / ((y1 - w(3) * s - 1.0 / (w(5) * w(3) * s))
                        * (yn - w(3) * s - 1.0 / (w(3) * w(1) * s)));
                let r2 = u(s) / u(1.0 / (w(3) * s));
                worst[0] = worst[0].max(rel(l1, r1));
                worst[1] = worst[1].max(rel(l2, r2));
            }
            worst
        }
    };
    Ok(out)
}

/// Residual pairs for each consecutive pair of states. Positions are read off
/// the states, the step from `cfg`. Infinite coordinates give infinite residuals.
pub fn verify_recurrence(cfg: &FamilyConfig, trace: &OrbitTrace) -> Result<Vec<[Real; 2]>> {
    let mut out = Vec::new();
    for pair in trace.states.windows(2) {
        let vals = (
            pair[0].x.value(),
            pair[0].y.value(),
            pair[1].x.value(),
            pair[1].y.value(),
        );
        let r = match vals {
            (Some(xn), Some(yn), Some(x1), Some(y1)) => {
                recurrence_residual(cfg, pair[0].p.position(), (xn, yn), (x1, y1))?
            }
            _ => [Real::INFINITY; 2],
        };
        out.push(r);
    }
    Ok(out)
}

pub fn max_residual(res: &[[Real; 2]]) -> Real {
    res.iter()
        .flat_map(|r| r.iter().copied())
        .fold(0.0, Real::max)
}

/// Symmetric root f̃ = σ∘(R₂∘ĩ₂∘L₂), σ(x, y) = (y, x). Two applications give F̃.
pub fn symmetric_root_step(cfg: &FamilyConfig, s: &OrbitState) -> Result<OrbitState> {
    if !cfg.symmetric {
        check_symmetric(cfg)?;
    }
    let spec = DeformationSpec::new(cfg)?;
    let (x, y, p) = staged("L2", factor_maps(&spec, &s.p, &s.x, &s.y, Factor::L2))?;
    let xt = staged("i2", i2_fiber(&ctx_at(cfg, &p), &x, &y))?;
    let (x, y, p) = staged("R2", factor_maps(&spec, &p, &xt, &y, Factor::R2))?;
    Ok(OrbitState::new(s.n + 0.5, y, x, p))
}

/// |L₂(x, y) − (σ∘L₁∘σ)(x, y)| in the moved coordinate.
pub fn sigma_conjugacy_residual(cfg: &FamilyConfig, s: &OrbitState) -> Result<Real> {
    let spec = DeformationSpec::new(cfg)?;
    let a = factor_maps(&spec, &s.p, &s.x, &s.y, Factor::L2)?.0;
    let b = factor_maps(&spec, &s.p, &s.y, &s.x, Factor::L1)?.1;
    Ok(a.dist(&b))
}

fn chart(cfg: &FamilyConfig, p: &UniformParam) -> Result<ChartMatrix> {
    chart_matrix(cfg.tag, p, cfg.kappa)
}

/// Projective distance between L₂(F̃(s)) and (L∘i₁∘L∘i₂)(L₂(s)), compared in P³.
pub fn conjugacy_check(cfg: &FamilyConfig, s: &OrbitState) -> Result<Real> {
    let spec = DeformationSpec::new(cfg)?;
    let (next, _) = step(cfg, s)?;
    let (xl, yl, pl) = factor_maps(&spec, &next.p, &next.x, &next.y, Factor::L2)?;
    let lhs = phi(&chart(cfg, &pl)?, &xl, &yl);

    let (xa, ya, pa) = factor_maps(&spec, &s.p, &s.x, &s.y, Factor::L2)?;
    let xb = i2_fiber(&ctx_at(cfg, &pa), &xa, &ya)?;
    let big = l_homogeneous(&spec, &pa, &phi(&chart(cfg, &pa)?, &xb, &ya))?;
    let pb = shift(&pa, 2);
    let (xc, yc, _) = phi_inverse(&chart(cfg, &pb)?, &big);
    let yd = i1_fiber(&ctx_at(cfg, &pb), &xc, &yc)?;
    let rhs = l_homogeneous(&spec, &pb, &phi(&chart(cfg, &pb)?, &xc, &yd))?;
    Ok(lhs.dist(&rhs))
}

/// dy/dx of R₁ along the direction (1, m) at (x, y), by central differences.
/// R₁ is affine or Möbius in y, so h = 1e-5 is accurate well below the probe scale.
fn pushed_slope(
    spec: &DeformationSpec,
    p: &UniformParam,
    x: Scalar,
    y: Scalar,
    m: Scalar,
) -> Result<Scalar> {
    let h = 1e-5;
    let img = |t: Real| -> Result<Scalar> {
        let (_, yy, _) = factor_maps(
            spec,
            p,
            &ProjPoint1::affine(x + t),
            &ProjPoint1::affine(y + m * t),
            Factor::R1,
        )?;
        yy.value().ok_or(Error::CollapsedImage)
    };
    Ok((img(h)? - img(-h)?) / (2.0 * h))
}

/// The 3D confinement pattern L₁⁻¹(Φ_i) → R₁(S_i) → R₂(Ψ_i), probed at ε and ε/100.
pub fn confinement_probe_3d(
    cfg: &FamilyConfig,
    index: usize,
    eps: Real,
    start: Option<Scalar>,
) -> Result<ProbeReport> {
    if !(1..=8).contains(&index) {
        return Err(Error::ProbeFailed(format!(
            "index {index} out of range 1..8"
        )));
    }
    let spec = DeformationSpec::new(cfg)?;
    let p = cfg.param(start.unwrap_or_else(|| cfg.default_start()))?;
    let ph = shift(&p, 1);
    let p2 = shift(&p, 2);
    let p3 = shift(&p, 3);
    let (a, b) = base_points_fiber(&ctx_at(cfg, &ph))[index - 1];
    let b3 = base_points_fiber(&ctx_at(cfg, &p3))[index - 1].1;
    let pa = ProjPoint1::affine(a);
    let target_y = factor_maps(&spec, &ph, &pa, &ProjPoint1::affine(b), Factor::R1)?.1;
    let rs = phi(&chart(cfg, &p2)?, &pa, &target_y);
    let jet = cfg.tag == FamilyTag::DD4 && index > 4;
    let target_slope = if jet {
        pushed_slope(&spec, &ph, a, b, re(1.0))?
    } else {
        re(0.0)
    };
    let target_yv = target_y.value().unwrap_or(re(Real::INFINITY));

    let mut d1 = [0.0; 2];
    let mut d2 = [0.0; 2];
    let (mut mutual, mut spread) = (0.0, 0.0);
    for (k, e) in [eps, eps / 100.0].into_iter().enumerate() {
        let x = ProjPoint1::affine(a + e);
        let mut collapsed: Vec<ProjPoint3> = Vec::new();
        let mut outs = Vec::new();
        for (sr, si) in PROBE_SEEDS {
            let y0 = ProjPoint1::affine(c(sr, si));
            let run = || -> Result<(ProjPoint1, ProjPoint1)> {
                let (_, yy, _) = staged("L1", factor_maps(&spec, &p, &x, &y0, Factor::L1))?;
                let yt = staged("i1", i1_fiber(&ctx_at(cfg, &ph), &x, &yy))?;
                let (_, y2, _) = staged("R1", factor_maps(&spec, &ph, &x, &yt, Factor::R1))?;
                let (xx, _, _) = staged("L2", factor_maps(&spec, &p2, &x, &y2, Factor::L2))?;
                let xt = staged("i2", i2_fiber(&ctx_at(cfg, &p3), &xx, &y2))?;
                let (x4, _, _) = staged("R2", factor_maps(&spec, &p3, &xt, &y2, Factor::R2))?;
                Ok((y2, x4))
            };
            let (y2, x4) = run()?;
            let img = phi(&chart(cfg, &p2)?, &x, &y2);
            let dist = if jet {
                let slope = (y2.value().unwrap_or(re(Real::INFINITY)) - target_yv) / e;
                (slope - target_slope).norm()
            } else {
                img.dist(&rs)
            };
            d1[k] = Real::max(d1[k], dist);
            d2[k] = Real::max(d2[k], y2.dist(&ProjPoint1::affine(b3)));
            collapsed.push(img);
            outs.push(x4);
        }
        if k == 0 {
            mutual = collapsed[0].dist(&collapsed[1]);
            spread = outs[0].dist(&outs[1]);
        }
    }
    let mut rep = ProbeReport {
        index,
        eps,
        d1,
        d2,
        mutual,
        spread,
        passed: false,
    };
    rep.judge();
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetAudit {
    /// quadrics through S₁..S₈
    pub dim_s: usize,
    /// quadrics through R₁(S₁)..R₁(S₈)
    pub dim_rs: usize,
}

impl NetAudit {
    pub fn passed(&self) -> bool {
        self.dim_s >= 3 && self.dim_rs == 2
    }
}

fn raw(ch: &ChartMatrix, v: [Scalar; 4]) -> [Scalar; 4] {
    let r = ch.a * Vector4::from(v);
    [r[0], r[1], r[2], r[3]]
}

/// Dimensions of the spaces of quadrics through S_i and through R₁(S_i), with R₁
/// acting on the fiber at `start`. dD4 uses four points plus tangency conditions.
pub fn net_audit(cfg: &FamilyConfig, start: Option<Scalar>) -> Result<NetAudit> {
    let spec = DeformationSpec::new(cfg)?;
    let p = cfg.param(start.unwrap_or_else(|| cfg.default_start()))?;
    let ph = shift(&p, 1);
    let chh = chart(cfg, &ph)?;
    let fib = base_points_fiber(&ctx_at(cfg, &p));
    let mut rs = Vec::new();
    let mut rs_jets = Vec::new();
    let n = if cfg.tag == FamilyTag::DD4 { 4 } else { 8 };
    for &(a, b) in &fib[..n] {
        let (xa, ya) = (ProjPoint1::affine(a), ProjPoint1::affine(b));
        let y1 = factor_maps(&spec, &p, &xa, &ya, Factor::R1)?.1;
        rs.push(phi(&chh, &xa, &y1));
        if cfg.tag == FamilyTag::DD4 {
            let yv = y1.value().ok_or(Error::CollapsedImage)?;
            let m = pushed_slope(&spec, &p, a, b, re(1.0))?;
            // d/dt [x:y:xy:1] along (1, m)
            let x = raw(&chh, [a, yv, a * yv, re(1.0)]);
            let t = raw(&chh, [re(1.0), m, yv + a * m, re(0.0)]);
            rs_jets.push((x, t));
        }
    }
    let (dim_s, dim_rs) = if cfg.tag == FamilyTag::DD4 {
        let s: Vec<ProjPoint3> = cfg.base_points_homogeneous()[..4].to_vec();
        let s_jets: Vec<([Scalar; 4], [Scalar; 4])> = cfg
            .base_jets()
            .into_iter()
            .map(|((a, b), (da, db))| ([a, b, a * b, re(1.0)], [da, db, db * a + da * b, re(0.0)]))
            .collect();
        (
            quadric_space_dim_through_jets(&s, &s_jets, NET_TOL),
            quadric_space_dim_through_jets(&rs, &rs_jets, NET_TOL),
        )
    } else {
        (
            quadric_space_dim_through(&cfg.base_points_homogeneous(), NET_TOL),
            quadric_space_dim_through(&rs, NET_TOL),
        )
    };
    Ok(NetAudit { dim_s, dim_rs })
}

/// S_i mapped through the chart at p, for checks that L fixes them.
pub fn base_points_through_chart(cfg: &FamilyConfig, p: &UniformParam) -> Result<Vec<ProjPoint3>> {
    let ch = chart(cfg, p)?;
    Ok(base_points_fiber(&ctx_at(cfg, p))
        .into_iter()
        .map(|(a, b)| phi(&ch, &ProjPoint1::affine(a), &ProjPoint1::affine(b)))
        .collect())
}

#[allow(dead_code)]
fn segre_of(x: Scalar, y: Scalar) -> ProjPoint3 {
    segre_embed(&ProjPoint1::affine(x), &ProjPoint1::affine(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{example_config, sample_config};
    use crate::qrt::qrt_map;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn start(cfg: &FamilyConfig) -> OrbitState {
        OrbitState::initial(cfg, c(0.37, 0.1), c(-0.81, 0.2)).unwrap()
    }

    #[test]
    fn parameter_advances_four_half_steps() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            let s = start(&cfg);
            let (t, rec) = step(&cfg, &s).unwrap();
            assert_eq!(rec.stages.len(), 6);
            let expect = shift(&s.p, 4).position();
            assert!(
                (t.p.position() - expect).norm() <= 1e-14 * expect.norm(),
                "{tag}"
            );
            assert_eq!(t.n, 1.0);
        }
    }

    #[test]
    fn example_orbits_satisfy_recurrences() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            let tr = orbit_strict(&cfg, &start(&cfg), 12).unwrap();
            let r = verify_recurrence(&cfg, &tr).unwrap();
            assert_eq!(r.len(), 12);
            assert!(max_residual(&r) < 1e-8, "{tag}: {}", max_residual(&r));
        }
    }

    #[test]
    fn autonomous_orbit_fails_deformed_check() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            let run = autonomous_mismatch_orbit(&cfg, &start(&cfg), 12);
            assert!(run.halted.is_none());
            let r = verify_recurrence(&cfg, &run.trace).unwrap();
            assert!(max_residual(&r) > 1e-2, "{tag}");
        }
    }

    #[test]
    fn trivial_step_matches_plane_qrt() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag).autonomous();
            let s = start(&cfg);
            let (t, _) = step(&cfg, &s).unwrap();
            let ctx = FiberContext::new(&cfg, s.p.position());
            let (x, y) = qrt_map(&ctx, &s.x, &s.y).unwrap();
            assert!(t.x.dist(&x) < 1e-12 && t.y.dist(&y) < 1e-12, "{tag}");
        }
    }

    #[test]
    fn symmetric_root_squares_to_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for tag in FamilyTag::ALL {
            let cfg = sample_config(tag, true, &mut rng);
            let s = start(&cfg);
            let half = symmetric_root_step(&cfg, &s).unwrap();
            assert_eq!(half.n, 0.5);
            let two = symmetric_root_step(&cfg, &half).unwrap();
            let (full, _) = step(&cfg, &s).unwrap();
            assert!(
                two.x.dist(&full.x) < 1e-9 && two.y.dist(&full.y) < 1e-9,
                "{tag}"
            );
            let sig = sigma_conjugacy_residual(&cfg, &s).unwrap();
            if tag == FamilyTag::QA1 {
                assert!(sig > 1e-6);
            } else {
                assert!(sig < 1e-12, "{tag}");
            }
        }
    }

    #[test]
    fn symmetric_root_needs_symmetry() {
        let cfg = example_config(FamilyTag::DA1);
        assert!(matches!(
            symmetric_root_step(&cfg, &start(&cfg)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn conjugacy_identity() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            let d = conjugacy_check(&cfg, &start(&cfg)).unwrap();
            assert!(d < 1e-9, "{tag}: {d}");
        }
    }

    #[test]
    fn probes_pass_on_examples() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            for i in 1..=8 {
                let r = confinement_probe_3d(&cfg, i, 1e-4, None).unwrap();
                assert!(r.passed, "{tag} {i}: {r:?}");
            }
        }
    }

    #[test]
    fn net_audit_on_examples() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            let a = net_audit(&cfg, None).unwrap();
            assert!(a.passed(), "{tag}: {a:?}");
            let b = net_audit(&cfg.autonomous(), None).unwrap();
            assert_eq!(b.dim_rs, b.dim_s, "{tag}");
        }
    }

    #[test]
    fn base_point_seed_raises_stage_error() {
        let cfg = example_config(FamilyTag::DA1);
        let p = cfg.param(cfg.default_start()).unwrap();
        // a point whose L₂ image is s_1 on the next fiber
        let ph = shift(&p, 1);
        let (a, b) = base_points_fiber(&ctx_at(&cfg, &ph))[0];
        let spec = DeformationSpec::new(&cfg).unwrap();
        let m = crate::deformation::factor_mobius(&spec, &p, Factor::L2, b).unwrap();
        let x0 = m.adjugate().apply(&ProjPoint1::affine(a), 1e-13).unwrap().0;
        let s = OrbitState::new(0.0, x0, ProjPoint1::affine(b), p);
        match step(&cfg, &s) {
            Err(Error::StageError { stage, .. }) => assert_eq!(stage, "i2"),
            other => panic!("{other:?}"),
        }
    }
}
