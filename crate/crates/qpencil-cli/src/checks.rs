//! Invariant suite run by `verify`. Each check draws its own points from the
//! seeded generator; draws that land on an indeterminacy are skipped and counted.

use qpencil::charts::{chart_matrix, phi};
use qpencil::deformation::{
    factor_maps, fiber_residual, l_chart, l_homogeneous, DeformationSpec, Factor,
};
use qpencil::engine::{
    base_points_through_chart, confinement_probe_3d, conjugacy_check, max_residual, net_audit,
    orbit, step, symmetric_root_step, verify_recurrence, OrbitState,
};
use qpencil::qrt::{i1_fiber, i2_fiber, FiberContext};
use qpencil::scalar::c;
use qpencil::uniformization::shift;
use qpencil::{FamilyConfig, ProjPoint1, Real, Result, Scalar};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::finite;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    /// worst value seen (null if infinite or nothing was measured)
    pub value: Option<Real>,
    pub tol: Real,
    pub detail: String,
}

/// Worst-case accumulator over random draws.
struct Worst {
    value: Real,
    done: usize,
    skipped: usize,
    first_error: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: 0.0,
            done: 0,
            skipped: 0,
            first_error: None,
        }
    }

    fn add(&mut self, r: Result<Real>) {
        match r {
            Ok(v) => {
                self.done += 1;
                self.value = if v.is_nan() {
                    Real::INFINITY
                } else {
                    self.value.max(v)
                };
            }
            Err(e) => {
                self.skipped += 1;
                self.first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }

    fn check(self, name: &'static str, tol: Real) -> Check {
        let pass = self.done > 0 && self.value < tol;
        let mut detail = format!("{} draws", self.done);
        if self.skipped > 0 {
            detail.push_str(&format!(
                ", {} skipped (first: {})",
                self.skipped,
                self.first_error.unwrap_or_default()
            ));
        }
        Check {
            name,
            pass,
            value: if self.done > 0 {
                finite(self.value)
            } else {
                None
            },
            tol,
            detail,
        }
    }
}

pub struct Suite<'a> {
    pub cfg: &'a FamilyConfig,
    pub start: Scalar,
    pub x0: Option<(Scalar, Scalar)>,
    pub steps: usize,
    pub draws: usize,
    /// replaces every default tolerance when set
    pub tol: Option<Real>,
}

fn rand_point(r: &mut ChaCha8Rng) -> Scalar {
    c(r.gen_range(-1.0..1.0), r.gen_range(-0.6..0.6))
}

impl Suite<'_> {
    fn tol(&self, default: Real) -> Real {
        self.tol.unwrap_or(default)
    }

    /// A position near the start.
    fn position(&self, r: &mut ChaCha8Rng) -> Scalar {
        let d = c(r.gen_range(-0.3..0.3), r.gen_range(-0.2..0.2));
        if self.cfg.tag.is_additive() {
            self.start + d
        } else {
            self.start * (d * 0.5).exp()
        }
    }

    fn state(&self, r: &mut ChaCha8Rng) -> Result<OrbitState> {
        let p = self.cfg.param(self.position(r))?;
        Ok(OrbitState::new(
            0.0,
            ProjPoint1::affine(rand_point(r)),
            ProjPoint1::affine(rand_point(r)),
            p,
        ))
    }

    pub fn run(&self, rng: &mut ChaCha8Rng) -> Vec<Check> {
        let cfg = self.cfg;
        let mut out = Vec::new();

        let mut w = Worst::new();
        for _ in 0..self.draws {
            w.add(
                cfg.param(self.position(rng))
                    .and_then(|p| chart_matrix(cfg.tag, &p, cfg.kappa))
                    .and_then(|ch| ch.normalization_residual()),
            );
        }
        out.push(w.check("normalization", self.tol(1e-10)));

        let mut w = Worst::new();
        for _ in 0..self.draws {
            let s = self.state(rng);
            w.add(s.and_then(|s| {
                let ctx = FiberContext::new(cfg, s.p.position());
                let y1 = i1_fiber(&ctx, &s.x, &s.y)?;
                let x1 = i2_fiber(&ctx, &s.x, &s.y)?;
                let a = i1_fiber(&ctx, &s.x, &y1)?.dist(&s.y);
                let b = i2_fiber(&ctx, &x1, &s.y)?.dist(&s.x);
                Ok(a.max(b))
            }));
        }
        out.push(w.check("involutivity", self.tol(1e-9)));

        let spec = DeformationSpec::new(cfg);
        let mut fix = Worst::new();
        let mut fib = Worst::new();
        for _ in 0..self.draws {
            let s = self.state(rng);
            fix.add(spec.clone().and_then(|spec| {
                let p = cfg.param(self.position(rng))?;
                let mut m: Real = 0.0;
                for x in base_points_through_chart(cfg, &p)? {
                    m = m.max(l_homogeneous(&spec, &p, &x)?.dist(&x));
                }
                Ok(m)
            }));
            fib.add(spec.clone().and_then(|spec| {
                let s = s?;
                let ch = chart_matrix(cfg.tag, &s.p, cfg.kappa)?;
                let img = l_homogeneous(&spec, &s.p, &phi(&ch, &s.x, &s.y))?;
                fiber_residual(&spec, &shift(&s.p, 2), &img)
            }));
        }
        out.push(fix.check("l_fixes_base_points", self.tol(1e-10)));
        out.push(fib.check("l_maps_fibers", self.tol(1e-8)));

        let mut fac = Worst::new();
        let mut conj = Worst::new();
        for _ in 0..self.draws {
            let s = self.state(rng);
            fac.add(spec.clone().and_then(|spec| {
                let s = s.clone()?;
                let (xl, yl, _) = l_chart(&spec, &s.p, &s.x, &s.y)?;
                let mut m: Real = 0.0;
                for (first, second) in [(Factor::R2, Factor::L1), (Factor::R1, Factor::L2)] {
                    let (a, b, q) = factor_maps(&spec, &s.p, &s.x, &s.y, first)?;
                    let (a, b, _) = factor_maps(&spec, &q, &a, &b, second)?;
                    m = m.max(a.dist(&xl)).max(b.dist(&yl));
                }
                Ok(m)
            }));
            conj.add(s.and_then(|s| conjugacy_check(cfg, &s)));
        }
        out.push(fac.check("factorization", self.tol(1e-9)));
        out.push(conj.check("conjugacy", self.tol(1e-9)));

        if cfg.symmetric {
            let mut w = Worst::new();
            for _ in 0..self.draws {
                w.add(self.state(rng).and_then(|s| {
                    let half = symmetric_root_step(cfg, &s)?;
                    let two = symmetric_root_step(cfg, &half)?;
                    let (full, _) = step(cfg, &s)?;
                    Ok(two.x.dist(&full.x).max(two.y.dist(&full.y)))
                }));
            }
            out.push(w.check("symmetric_root", self.tol(1e-9)));
        }

        out.push(self.recurrence(rng));

        // structural checks carry no tolerance
        let tol = 0.0;
        out.push(match net_audit(cfg, Some(self.start)) {
            Ok(a) => Check {
                name: "net_audit",
                pass: a.passed(),
                value: Some(a.dim_rs as Real),
                tol,
                detail: format!(
                    "dim S = {}, dim R1(S) = {} (want >= 3 and 2)",
                    a.dim_s, a.dim_rs
                ),
            },
            Err(e) => Check {
                name: "net_audit",
                pass: false,
                value: None,
                tol,
                detail: e.to_string(),
            },
        });

        let mut fails = Vec::new();
        let (mut lo, mut hi): (Real, Real) = (Real::INFINITY, 0.0);
        for i in 1..=8 {
            match confinement_probe_3d(cfg, i, 1e-4, Some(self.start)) {
                Ok(rep) => {
                    for q in [rep.ratio_d1(), rep.ratio_d2()] {
                        lo = lo.min(q);
                        hi = hi.max(q);
                    }
                    if !rep.passed {
                        fails.push(format!("i={i}"));
                    }
                }
                Err(e) => fails.push(format!("i={i}: {e}")),
            }
        }
        out.push(Check {
            name: "confinement",
            pass: fails.is_empty(),
            value: None,
            tol: 0.0,
            detail: if fails.is_empty() {
                format!("8 probes, ratios in [{lo:.1}, {hi:.1}]")
            } else {
                format!("failing {}", fails.join(", "))
            },
        });
        out
    }

    fn recurrence(&self, rng: &mut ChaCha8Rng) -> Check {
        let tol = self.tol(1e-8);
        let fail = |detail: String| Check {
            name: "recurrence",
            pass: false,
            value: None,
            tol,
            detail,
        };
        let s0 = match self.x0 {
            Some((x, y)) => self
                .cfg
                .param(self.start)
                .map(|p| OrbitState::new(0.0, ProjPoint1::affine(x), ProjPoint1::affine(y), p)),
            None => self.cfg.param(self.start).map(|p| {
                OrbitState::new(
                    0.0,
                    ProjPoint1::affine(rand_point(rng)),
                    ProjPoint1::affine(rand_point(rng)),
                    p,
                )
            }),
        };
        let s0 = match s0 {
            Ok(s) => s,
            Err(e) => return fail(e.to_string()),
        };
        let run = orbit(self.cfg, &s0, self.steps);
        if let Some(e) = run.halted {
            return fail(e.to_string());
        }
        match verify_recurrence(self.cfg, &run.trace) {
            Ok(res) => {
                let m = max_residual(&res);
                Check {
                    name: "recurrence",
                    pass: m < tol,
                    value: finite(m),
                    tol,
                    detail: format!("{} steps", self.steps),
                }
            }
            Err(e) => fail(e.to_string()),
        }
    }
}
