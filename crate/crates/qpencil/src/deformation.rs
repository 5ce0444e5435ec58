//! The deformation map L, which carries Q_λ(ν) to Q_λ(ν+2δ) and fixes the base
//! curve, in homogeneous and chart form, and its half-step factors.

use crate::error::{Error, Result};
use crate::families::{q_infinity, FamilyConfig};
use crate::mobius::Mobius;
use crate::pencil_core::{segre_quadric, ProjPoint1, ProjPoint3};
use crate::scalar::{re, Real, Scalar};
use crate::uniformization::{lambda_of, shift, FamilyTag, UniformParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Version {
    /// Q∞ free of X₃: the correction goes into X̂₃.
    V1,
    /// Q∞ free of X₁: the correction goes into X̂₁.
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationSpec {
    pub family: FamilyTag,
    pub version: Version,
    pub step: Scalar,
    pub kappa: Option<Scalar>,
}

impl DeformationSpec {
    pub fn new(cfg: &FamilyConfig) -> Result<Self> {
        let trivial = if cfg.tag.is_additive() {
            cfg.step.norm() == 0.0
        } else {
            (cfg.step * cfg.step - 1.0).norm() == 0.0
        };
        if trivial {
            // allowed: L is then the identity, used for autonomous comparisons
        }
        Ok(DeformationSpec {
            family: cfg.tag,
            version: if cfg.tag == FamilyTag::QA1 {
                Version::V2
            } else {
                Version::V1
            },
            step: cfg.step,
            kappa: cfg.kappa,
        })
    }
}

/// Tolerance of the fiber membership check, relative to the largest monomial.
pub const FIBER_TOL: Real = 1e-8;

/// |Q₀(X) − λQ∞(X)| scaled by (1 + |λ|)·max|X|².
pub fn fiber_residual(spec: &DeformationSpec, p: &UniformParam, x: &ProjPoint3) -> Result<Real> {
    let l = lambda_of(p, spec.kappa)?;
    let xs = x.coords();
    let qi = q_infinity(spec.family, spec.kappa.unwrap_or(re(0.0)));
    let r = segre_quadric().eval_raw(&xs) - l * qi.eval_raw(&xs);
    let scale = (1.0 + l.norm()) * (1.0 + qi.norm());
    Ok(r.norm() / scale)
}

pub fn l_homogeneous(
    spec: &DeformationSpec,
    p: &UniformParam,
    x: &ProjPoint3,
) -> Result<ProjPoint3> {
    let res = fiber_residual(spec, p, x)?;
    if res > FIBER_TOL {
        return Err(Error::OffPencilFiber(res));
    }
    let dl = lambda_of(&shift(p, 2), spec.kappa)? - lambda_of(p, spec.kappa)?;
    let xs = x.coords();
    let qv = q_infinity(spec.family, spec.kappa.unwrap_or(re(0.0))).eval_raw(&xs);
    let [x1, x2, x3, x4] = xs;
    let out = match spec.version {
        Version::V1 => [x1 * x4, x2 * x4, x3 * x4 - dl * qv, x4 * x4],
        Version::V2 => [x1 * x2 + dl * qv, x2 * x2, x2 * x3, x2 * x4],
    };
    if out.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::CollapsedImage);
    }
    ProjPoint3::new(out)
}

fn check_charts(spec: &DeformationSpec, p: &UniformParam, half_steps: i32) -> Result<()> {
    for h in [0, half_steps] {
        let pos = p.position_at(h);
        let bad = if spec.family.is_additive() {
            pos.norm() < crate::charts::DEGENERACY_RADIUS
        } else {
            pos.norm() < crate::charts::DEGENERACY_RADIUS
                || (pos * pos - 1.0).norm() < crate::charts::DEGENERACY_RADIUS
        };
        if bad {
            return Err(Error::ChartDegenerate(format!("position {pos}")));
        }
    }
    Ok(())
}

fn affine(p: &ProjPoint1, what: &str) -> Result<Scalar> {
    p.value()
        .ok_or_else(|| Error::NonAffine(format!("{what} is infinite")))
}

/// L in chart coordinates: (x, y) on Q_λ(p) ↦ (x̂, ŷ) on Q_λ(shift(p, 2)).
pub fn l_chart(
    spec: &DeformationSpec,
    p: &UniformParam,
    x: &ProjPoint1,
    y: &ProjPoint1,
) -> Result<(ProjPoint1, ProjPoint1, UniformParam)> {
    check_charts(spec, p, 2)?;
    let (xv, yv) = (affine(x, "x")?, affine(y, "y")?);
    let s = p.step();
    let n = p.position();
    let (xh, yh) = match spec.family {
        FamilyTag::DA1 | FamilyTag::DD4 => {
            let t = s * (xv + yv) / n;
            (ProjPoint1::affine(xv + t), ProjPoint1::affine(yv + t))
        }
        FamilyTag::DA0 => {
            let t = s * (xv - yv) / n;
            (ProjPoint1::affine(xv + t), ProjPoint1::affine(yv - t))
        }
        FamilyTag::QA0 => {
            let k = (1.0 - 1.0 / (s * s)) / (n * n - 1.0);
            (
                ProjPoint1::affine(xv + k * (xv - n * yv)),
                ProjPoint1::affine(yv + k * (yv - n * xv)),
            )
        }
        FamilyTag::QA1 => {
            let (q2, w2) = (s * s, n * n);
            // x̂ = ((q²w²−1)x − (q²−1)w²/y)/(w²−1), 1/ŷ = ((q²w²−1)/y − (q²−1)x)/(q²(w²−1))
            let xh = ProjPoint1::new((q2 * w2 - 1.0) * xv * yv - (q2 - 1.0) * w2, (w2 - 1.0) * yv)?;
            let yh = ProjPoint1::new(q2 * (w2 - 1.0) * yv, (q2 * w2 - 1.0) - (q2 - 1.0) * xv * yv)?;
            (xh, yh)
        }
    };
    Ok((xh, yh, shift(p, 2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    L1,
    R1,
    L2,
    R2,
}

impl Factor {
    /// Factors with index 1 move y, those with index 2 move x.
    pub fn moves_y(&self) -> bool {
        matches!(self, Factor::L1 | Factor::R1)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Factor::L1 => "L1",
            Factor::R1 => "R1",
            Factor::L2 => "L2",
            Factor::R2 => "R2",
        }
    }
}

/// Möbius matrix of a factor acting on the moving coordinate, for fixed value `f`.
pub fn factor_mobius(
    spec: &DeformationSpec,
    p: &UniformParam,
    which: Factor,
    f: Scalar,
) -> Result<Mobius> {
    check_charts(spec, p, 1)?;
    let s = p.step();
    let n = p.position();
    let o = re(1.0);
    Ok(match spec.family {
        FamilyTag::DA1 | FamilyTag::DD4 => Mobius::affine(1.0 + s / n, s * f / n),
        FamilyTag::DA0 => Mobius::affine(1.0 + s / n, -s * f / n),
        FamilyTag::QA0 => {
            let k = (1.0 - 1.0 / (s * s)) / (n * n - 1.0);
            let lead = if matches!(which, Factor::L1 | Factor::L2) {
                s
            } else {
                o
            };
            Mobius::affine(1.0 + k, -k * lead * n * f)
        }
        FamilyTag::QA1 => {
            let (q2, w2) = (s * s, n * n);
            // (f·t − q²w²)/(f·t − 1) = H(moving)
            let g = Mobius::new(f, -q2 * w2, f, -o);
            let h = if which.moves_y() {
                Mobius::new(q2 * f, -q2 * w2, f, -o)
            } else {
                Mobius::new(f, -w2, f, -o)
            };
            g.adjugate().compose(&h)
        }
    })
}

/// One factor: (x, y, p) ↦ (x', y', shift(p, 1)) with one coordinate moved.
/// The last entry is the amplification of the Möbius step.
pub fn factor_map_cond(
    spec: &DeformationSpec,
    p: &UniformParam,
    x: &ProjPoint1,
    y: &ProjPoint1,
    which: Factor,
) -> Result<(ProjPoint1, ProjPoint1, UniformParam, Real)> {
    if which.moves_y() {
        let m = factor_mobius(spec, p, which, affine(x, "x")?)?;
        let (yn, amp) = m.apply(y, 1e-13)?;
        Ok((*x, yn, shift(p, 1), amp))
    } else {
        let m = factor_mobius(spec, p, which, affine(y, "y")?)?;
        let (xn, amp) = m.apply(x, 1e-13)?;
        Ok((xn, *y, shift(p, 1), amp))
    }
}

pub fn factor_maps(
    spec: &DeformationSpec,
    p: &UniformParam,
    x: &ProjPoint1,
    y: &ProjPoint1,
    which: Factor,
) -> Result<(ProjPoint1, ProjPoint1, UniformParam)> {
    factor_map_cond(spec, p, x, y, which).map(|(a, b, c, _)| (a, b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{chart_matrix, phi, phi_inverse};
    use crate::families::{build_pencils, example_config};
    use crate::scalar::c;

    fn pt(z: Scalar) -> ProjPoint1 {
        ProjPoint1::affine(z)
    }

    fn setup(tag: FamilyTag) -> (FamilyConfig, DeformationSpec, UniformParam) {
        let cfg = example_config(tag);
        let spec = DeformationSpec::new(&cfg).unwrap();
        let p = cfg.param(c(1.45, 0.15)).unwrap();
        (cfg, spec, p)
    }

    #[test]
    fn chart_form_matches_homogeneous_form() {
        for tag in FamilyTag::ALL {
            let (cfg, spec, p) = setup(tag);
            let (x, y) = (pt(c(0.37, 0.1)), pt(c(-0.81, 0.2)));
            let ch = chart_matrix(tag, &p, cfg.kappa).unwrap();
            let big = l_homogeneous(&spec, &p, &phi(&ch, &x, &y)).unwrap();
            let (xh, yh, ph) = l_chart(&spec, &p, &x, &y).unwrap();
            let ch2 = chart_matrix(tag, &ph, cfg.kappa).unwrap();
            assert!(phi(&ch2, &xh, &yh).dist(&big) < 1e-9, "{tag}");
            let (xa, ya, r) = phi_inverse(&ch2, &big);
            assert!(
                r < 1e-10 && xa.dist(&xh) < 1e-9 && ya.dist(&yh) < 1e-9,
                "{tag}"
            );
        }
    }

    #[test]
    fn factorizations_agree_with_l() {
        for tag in FamilyTag::ALL {
            let (_, spec, p) = setup(tag);
            let (x, y) = (pt(c(0.37, 0.1)), pt(c(-0.81, 0.2)));
            let (xl, yl, _) = l_chart(&spec, &p, &x, &y).unwrap();
            let (a, b, q) = factor_maps(&spec, &p, &x, &y, Factor::R2).unwrap();
            let (a, b, _) = factor_maps(&spec, &q, &a, &b, Factor::L1).unwrap();
            assert!(a.dist(&xl) < 1e-9 && b.dist(&yl) < 1e-9, "{tag} L1R2");
            let (a, b, q) = factor_maps(&spec, &p, &x, &y, Factor::R1).unwrap();
            let (a, b, _) = factor_maps(&spec, &q, &a, &b, Factor::L2).unwrap();
            assert!(a.dist(&xl) < 1e-9 && b.dist(&yl) < 1e-9, "{tag} L2R1");
        }
    }

    #[test]
    fn base_points_are_fixed() {
        for tag in FamilyTag::ALL {
            let (cfg, spec, p) = setup(tag);
            for s in cfg.base_points_homogeneous() {
                let img = l_homogeneous(&spec, &p, &s).unwrap();
                assert!(img.dist(&s) < 1e-12, "{tag}");
            }
        }
    }

    #[test]
    fn da1_explicit_third_coordinate() {
        let (cfg, spec, p) = setup(FamilyTag::DA1);
        let ch = chart_matrix(FamilyTag::DA1, &p, None).unwrap();
        let x = phi(&ch, &pt(c(0.2, 0.4)), &pt(c(0.9, -0.3)));
        let out = l_homogeneous(&spec, &p, &x).unwrap().coords();
        let [x1, x2, x3, x4] = x.coords();
        let (d, nu) = (cfg.step, p.position());
        let expect = [
            x1 * x4,
            x2 * x4,
            x3 * x4 + d * (nu + d) * (x1 + x2) * (x1 + x2 - x4),
            x4 * x4,
        ];
        assert!(crate::pencil_core::wedge_dist(&out, &expect) < 1e-14);
    }

    #[test]
    fn fiber_transport() {
        for tag in FamilyTag::ALL {
            let (cfg, spec, p) = setup(tag);
            let pencil = build_pencils(&cfg).unwrap().q;
            let ch = chart_matrix(tag, &p, cfg.kappa).unwrap();
            let x = phi(&ch, &pt(c(-0.3, 0.6)), &pt(c(0.45, 0.05)));
            let img = l_homogeneous(&spec, &p, &x).unwrap();
            let l = crate::charts::lambda_from_point(&pencil, &img).unwrap();
            let expect = lambda_of(&shift(&p, 2), cfg.kappa).unwrap();
            assert!((l - expect).norm() < 1e-8 * (1.0 + expect.norm()), "{tag}");
        }
    }

    #[test]
    fn off_fiber_input_rejected() {
        let (_, spec, p) = setup(FamilyTag::DA1);
        let x = ProjPoint3::new([re(1.0), re(2.0), re(3.0), re(4.0)]).unwrap();
        assert!(matches!(
            l_homogeneous(&spec, &p, &x),
            Err(Error::OffPencilFiber(_))
        ));
    }

    #[test]
    fn trivial_step_is_identity() {
        for tag in FamilyTag::ALL {
            let (cfg, _, _) = setup(tag);
            let auto = cfg.autonomous();
            let spec = DeformationSpec::new(&auto).unwrap();
            let p = auto.param(c(1.45, 0.15)).unwrap();
            let (x, y) = (pt(c(0.37, 0.1)), pt(c(-0.81, 0.2)));
            let (xh, yh, _) = l_chart(&spec, &p, &x, &y).unwrap();
            assert!(xh.dist(&x) < 1e-15 && yh.dist(&y) < 1e-15, "{tag}");
            for f in [Factor::L1, Factor::R1, Factor::L2, Factor::R2] {
                let (a, b, _) = factor_maps(&spec, &p, &x, &y, f).unwrap();
                assert!(a.dist(&x) < 1e-15 && b.dist(&y) < 1e-15, "{tag}");
            }
        }
    }

    #[test]
    fn da1_l1_mobius_relation() {
        let (_, spec, p) = setup(FamilyTag::DA1);
        let (x, y) = (c(0.37, 0.1), c(-0.81, 0.2));
        let (_, yt, _) = factor_maps(&spec, &p, &pt(x), &pt(y), Factor::L1).unwrap();
        let yt = yt.value().unwrap();
        let (nu, d) = (p.position(), spec.step);
        let lhs = (yt + x) / (yt + x - nu - d);
        let rhs = (y + x) / (y + x - nu);
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn qa0_left_and_right_factors_differ() {
        let (_, spec, p) = setup(FamilyTag::QA0);
        let (x, y) = (pt(c(0.37, 0.1)), pt(c(-0.81, 0.2)));
        let a = factor_maps(&spec, &p, &x, &y, Factor::L1).unwrap().1;
        let b = factor_maps(&spec, &p, &x, &y, Factor::R1).unwrap().1;
        assert!(a.dist(&b) > 1e-3);
    }
}
