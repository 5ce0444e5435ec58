//! Fibered QRT involutions i₁ (moves y) and i₂ (moves x) on each quadric of the
//! pencil, the fiber base points, and the autonomous QRT map F = i₁∘i₂.

use crate::error::{Error, Result};
use crate::families::FamilyConfig;
use crate::mobius::{cross_ratio_solve, Mobius};
use crate::pencil_core::ProjPoint1;
use crate::scalar::{re, Real, Scalar, DEFAULT_TOL};
use crate::uniformization::FamilyTag;

/// Distance below which an input counts as sitting on a base point.
pub const INDETERMINACY_TOL: Real = 1e-10;

/// Family data at one fiber position (ν or w).
#[derive(Debug, Clone, PartialEq)]
pub struct FiberContext {
    pub family: FamilyTag,
    pub pos: Scalar,
    pub kappa: Scalar,
    pub points: Vec<Scalar>,
}

impl FiberContext {
    pub fn new(cfg: &FamilyConfig, pos: Scalar) -> Self {
        FiberContext {
            family: cfg.tag,
            pos,
            kappa: cfg.kappa_or_zero(),
            points: cfg.points.clone(),
        }
    }

    pub fn at(&self, pos: Scalar) -> Self {
        FiberContext {
            pos,
            ..self.clone()
        }
    }
}

/// U(z) = Π(z − z_i), or z⁻⁴Π(z − z_i) in Laurent form.
#[derive(Debug, Clone, PartialEq)]
pub struct UPoly {
    pub roots: Vec<Scalar>,
    pub laurent: bool,
}

impl UPoly {
    pub fn new(roots: Vec<Scalar>, laurent: bool) -> Result<Self> {
        if roots.len() != 8 {
            return Err(Error::DegenerateParameter("U needs 8 roots".into()));
        }
        if laurent && roots.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::DegenerateParameter(
                "Laurent U needs nonzero roots".into(),
            ));
        }
        Ok(UPoly { roots, laurent })
    }

    pub fn eval(&self, z: Scalar) -> Scalar {
        let p: Scalar = self.roots.iter().map(|r| z - r).product();
        if self.laurent {
            p / z.powi(4)
        } else {
            p
        }
    }
}

/// s_i at this fiber. dD4 has four proper points; entries 5..8 repeat them.
pub fn base_points_fiber(ctx: &FiberContext) -> Vec<(Scalar, Scalar)> {
    let p = ctx.pos;
    let k = ctx.kappa;
    let z = &ctx.points;
    match ctx.family {
        FamilyTag::DA1 => (0..8)
            .map(|i| {
                if i < 4 {
                    (z[i], -z[i])
                } else {
                    ((p - 1.0) / 2.0 + z[i], (1.0 + p) / 2.0 - z[i])
                }
            })
            .collect(),
        FamilyTag::DD4 => (0..8).map(|i| (z[i % 4], -z[i % 4])).collect(),
        FamilyTag::QA1 => (0..8)
            .map(|i| {
                if i < 4 {
                    (p * z[i], p / z[i])
                } else {
                    (z[i], 1.0 / z[i])
                }
            })
            .collect(),
        FamilyTag::DA0 => z
            .iter()
            .map(|&zi| (zi * (zi + k * p), zi * (zi - k * p)))
            .collect(),
        FamilyTag::QA0 => z
            .iter()
            .map(|&zi| (zi + 1.0 / (p * zi), 1.0 / zi + zi / p))
            .collect(),
    }
}

fn affine_or(p: &ProjPoint1, what: &str) -> Result<Scalar> {
    p.value()
        .ok_or_else(|| Error::NonAffine(format!("{what} is infinite")))
}

fn check_base_points(ctx: &FiberContext, x: &ProjPoint1, y: &ProjPoint1) -> Result<()> {
    for (i, (a, b)) in base_points_fiber(ctx).into_iter().enumerate() {
        let d = x
            .dist(&ProjPoint1::affine(a))
            .max(y.dist(&ProjPoint1::affine(b)));
        if d < INDETERMINACY_TOL {
            return Err(Error::Indeterminate(format!("base point s{}", i + 1)));
        }
    }
    Ok(())
}

/// Homogeneous ratio (n:d) of two products.
fn ratio(num: impl Iterator<Item = Scalar>, den: impl Iterator<Item = Scalar>) -> (Scalar, Scalar) {
    (num.product(), den.product())
}

/// (Sn:Sd) with S = ½Σ 1/(t − r_i).
fn half_log_derivative(t: Scalar, roots: &[Scalar]) -> (Scalar, Scalar) {
    let sd: Scalar = roots.iter().map(|r| t - r).product();
    let mut sn = re(0.0);
    for j in 0..roots.len() {
        sn += roots
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, r)| t - r)
            .product::<Scalar>();
    }
    (sn * 0.5, sd)
}

/// dD4: moving ↦ 1/(S − 1/(fixed + moving)) − fixed.
fn dd4_map(fixed: Scalar, sn: Scalar, sd: Scalar) -> Mobius {
    let o = re(1.0);
    let z = re(0.0);
    let t1 = Mobius::new(o, fixed, z, o);
    let t2 = Mobius::new(sn, -sd, sd, z);
    let t3 = Mobius::new(-fixed, o, o, z);
    t3.compose(&t2).compose(&t1)
}

/// Both roots of t² + bt + c = 0 without cancellation: the larger one from the
/// formula, the other from the product c.
fn quadratic_roots(b: Scalar, c: Scalar) -> [Scalar; 2] {
    let s = (b * b - 4.0 * c).sqrt();
    // pick the sign that avoids cancellation with −b
    let big = if (-b + s).norm() >= (-b - s).norm() {
        (-b + s) / 2.0
    } else {
        (-b - s) / 2.0
    };
    if big.norm() == 0.0 {
        return [big, big];
    }
    [big, c / big]
}

/// The Möbius matrices of i₁ (as maps of y) for the given x; dA0/qA0 give one
/// per root of the auxiliary quadratic.
fn i1_maps(ctx: &FiberContext, x: Scalar) -> Vec<Mobius> {
    let p = ctx.pos;
    let z = &ctx.points;
    let k = ctx.kappa;
    match ctx.family {
        FamilyTag::DA1 => {
            let (rn, rd) = ratio(
                z[..4].iter().map(|a| x - a),
                z[4..].iter().map(|a| x - a - (p - 1.0) / 2.0),
            );
            vec![cross_ratio_solve(-x, p - x, rn, rd)]
        }
        FamilyTag::DD4 => {
            let (sn, sd) = half_log_derivative(x, z);
            vec![dd4_map(x, sn, sd)]
        }
        FamilyTag::QA1 => {
            let (rn, rd) = ratio(
                z[..4].iter().map(|ci| x - p * ci),
                z[4..].iter().map(|ci| x - ci),
            );
            // g(t) = (xt − p²)/(xt − 1), i.e. A = p²/x, B = 1/x without dividing by x
            let g = Mobius::new(x, -p * p, x, re(-1.0));
            vec![g
                .adjugate()
                .compose(&Mobius::scaling(rn, rd))
                .compose(&Mobius::reciprocal())
                .compose(&g)]
        }
        FamilyTag::DA0 => {
            let u = UPoly::new(z.clone(), false).expect("eight roots");
            let cc = k * p;
            // ξ² + cc ξ − x = 0
            quadratic_roots(cc, -x)
                .iter()
                .map(|&xi| {
                    cross_ratio_solve(
                        xi * (xi - cc),
                        (xi + cc) * (xi + 2.0 * cc),
                        u.eval(xi),
                        u.eval(-cc - xi),
                    )
                })
                .collect()
        }
        FamilyTag::QA0 => {
            let u = UPoly::new(z.clone(), true).expect("eight nonzero roots");
            // p ξ² − p x ξ + 1 = 0
            quadratic_roots(-x, 1.0 / p)
                .iter()
                .map(|&xi| {
                    cross_ratio_solve(
                        1.0 / xi + xi / p,
                        p * xi + 1.0 / (p * p * xi),
                        u.eval(xi),
                        u.eval(1.0 / (p * xi)),
                    )
                })
                .collect()
        }
    }
}

/// Matrices of i₂ (as maps of x) for the given y.
fn i2_maps(ctx: &FiberContext, y: Scalar) -> Vec<Mobius> {
    let p = ctx.pos;
    let z = &ctx.points;
    let k = ctx.kappa;
    match ctx.family {
        FamilyTag::DA1 => {
            let (rn, rd) = ratio(
                z[..4].iter().map(|a| y + a),
                z[4..].iter().map(|a| y + a - (1.0 + p) / 2.0),
            );
            vec![cross_ratio_solve(-y, p - y, rn, rd)]
        }
        FamilyTag::DD4 => {
            let neg: Vec<Scalar> = z.iter().map(|a| -a).collect();
            let (sn, sd) = half_log_derivative(y, &neg);
            vec![dd4_map(y, sn, sd)]
        }
        FamilyTag::QA1 => {
            let (rn, rd) = ratio(
                z[..4].iter().map(|ci| y - p / ci),
                z[4..].iter().map(|ci| y - 1.0 / ci),
            );
            let g = Mobius::new(y, -p * p, y, re(-1.0));
            vec![g
                .adjugate()
                .compose(&Mobius::scaling(rn, rd))
                .compose(&Mobius::reciprocal())
                .compose(&g)]
        }
        FamilyTag::DA0 => {
            let u = UPoly::new(z.clone(), false).expect("eight roots");
            let cc = k * p;
            // η² − cc η − y = 0
            quadratic_roots(-cc, -y)
                .iter()
                .map(|&eta| {
                    cross_ratio_solve(
                        eta * (eta + cc),
                        (eta - cc) * (eta - 2.0 * cc),
                        u.eval(eta),
                        u.eval(cc - eta),
                    )
                })
                .collect()
        }
        FamilyTag::QA0 => {
            let u = UPoly::new(z.clone(), true).expect("eight nonzero roots");
            // η² − p y η + p = 0
            quadratic_roots(-p * y, p)
                .iter()
                .map(|&eta| {
                    cross_ratio_solve(
                        eta + 1.0 / (p * eta),
                        p / eta + eta / (p * p),
                        u.eval(eta),
                        u.eval(p / eta),
                    )
                })
                .collect()
        }
    }
}

fn apply_certified(maps: &[Mobius], v: &ProjPoint1) -> Result<(ProjPoint1, Real)> {
    let mut out: Option<(ProjPoint1, Real)> = None;
    let mut first_err = None;
    for m in maps {
        match m.apply(v, 1e-13) {
            Ok((r, amp)) => match out {
                None => out = Some((r, amp)),
                Some((prev, pamp)) => {
                    let d = prev.dist(&r);
                    if d > DEFAULT_TOL {
                        return Err(Error::RootPairMismatch(d));
                    }
                    // keep the better conditioned image
                    out = Some(if amp < pamp { (r, amp) } else { (prev, pamp) });
                }
            },
            Err(e) => first_err = Some(e),
        }
    }
    // one root may sit on a removable singularity of the cross-ratio form
    out.ok_or_else(|| first_err.unwrap_or(Error::CollapsedImage))
}

/// ỹ = i₁(x, y) and the amplification factor of the Möbius step.
pub fn i1_fiber_cond(
    ctx: &FiberContext,
    x: &ProjPoint1,
    y: &ProjPoint1,
) -> Result<(ProjPoint1, Real)> {
    let xv = affine_or(x, "x")?;
    check_base_points(ctx, x, y)?;
    apply_certified(&i1_maps(ctx, xv), y)
}

/// x̃ = i₂(x, y) and the amplification factor.
pub fn i2_fiber_cond(
    ctx: &FiberContext,
    x: &ProjPoint1,
    y: &ProjPoint1,
) -> Result<(ProjPoint1, Real)> {
    let yv = affine_or(y, "y")?;
    check_base_points(ctx, x, y)?;
    apply_certified(&i2_maps(ctx, yv), x)
}

pub fn i1_fiber(ctx: &FiberContext, x: &ProjPoint1, y: &ProjPoint1) -> Result<ProjPoint1> {
    i1_fiber_cond(ctx, x, y).map(|r| r.0)
}

pub fn i2_fiber(ctx: &FiberContext, x: &ProjPoint1, y: &ProjPoint1) -> Result<ProjPoint1> {
    i2_fiber_cond(ctx, x, y).map(|r| r.0)
}

/// F = i₁∘i₂ on one fiber.
pub fn qrt_map(
    ctx: &FiberContext,
    x: &ProjPoint1,
    y: &ProjPoint1,
) -> Result<(ProjPoint1, ProjPoint1)> {
    let xn = i2_fiber(ctx, x, y)?;
    let yn = i1_fiber(ctx, &xn, y)?;
    Ok((xn, yn))
}

/// Orbit of F of length n+1 starting at (x, y).
pub fn qrt_orbit(
    ctx: &FiberContext,
    x: &ProjPoint1,
    y: &ProjPoint1,
    n: usize,
) -> Result<Vec<(ProjPoint1, ProjPoint1)>> {
    let mut out = vec![(*x, *y)];
    for _ in 0..n {
        let (a, b) = out[out.len() - 1];
        out.push(qrt_map(ctx, &a, &b)?);
    }
    Ok(out)
}

/// Half-step root f = i₁∘σ, with σ(x, y) = (y, x).
pub fn qrt_root(
    ctx: &FiberContext,
    x: &ProjPoint1,
    y: &ProjPoint1,
) -> Result<(ProjPoint1, ProjPoint1)> {
    let yn = i1_fiber(ctx, y, x)?;
    Ok((*y, yn))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub index: usize,
    pub eps: Real,
    /// collapse distance at ε and ε/100
    pub d1: [Real; 2],
    /// distance to the re-expansion line at ε and ε/100
    pub d2: [Real; 2],
    /// mutual distance of the two collapsed images at ε
    pub mutual: Real,
    /// spread of the re-expanded images at ε (O(1) expected)
    pub spread: Real,
    pub passed: bool,
}

impl ProbeReport {
    pub fn ratio_d1(&self) -> Real {
        self.d1[0] / self.d1[1]
    }

    pub fn ratio_d2(&self) -> Real {
        self.d2[0] / self.d2[1]
    }

    /// First-order contraction: both distances shrink by a factor in [30, 300]
    /// when ε shrinks by 100. The O(ε) constant itself depends on the
    /// configuration and can be large near coincidences, so it is not bounded.
    pub(crate) fn judge(&mut self) {
        let in_range = |r: Real| (30.0..=300.0).contains(&r);
        self.passed = in_range(self.ratio_d1()) && in_range(self.ratio_d2());
    }
}

pub(crate) const PROBE_SEEDS: [(Real, Real); 2] = [(0.31, 0.2), (-0.77, 0.1)];

/// Plane singularity pattern {x = a_i} → s_i → {y = b_i} on one fiber.
pub fn confinement_probe_2d(ctx: &FiberContext, index: usize, eps: Real) -> Result<ProbeReport> {
    if !(1..=8).contains(&index) || (ctx.family != FamilyTag::DD4 && index > 8) {
        return Err(Error::ProbeFailed(format!("index {index} out of range")));
    }
    let s = base_points_fiber(ctx);
    let (a, b) = s[index - 1];
    let jet = ctx.family == FamilyTag::DD4 && index > 4;
    let mut d1 = [0.0; 2];
    let mut d2 = [0.0; 2];
    let mut mutual = 0.0;
    let mut spread = 0.0;
    for (k, e) in [eps, eps / 100.0].into_iter().enumerate() {
        let x = ProjPoint1::affine(a + e);
        let mut imgs = Vec::new();
        let mut outs = Vec::new();
        for (sr, si) in PROBE_SEEDS {
            let y0 = ProjPoint1::affine(Scalar::new(sr, si));
            let yt = i1_fiber(ctx, &x, &y0)?;
            let dist = if jet {
                // approach slope against the tangent direction (1, 1)
                let slope = (yt.value().unwrap_or(re(Real::INFINITY)) - b) / e;
                (slope - 1.0).norm()
            } else {
                x.dist(&ProjPoint1::affine(a))
                    .max(yt.dist(&ProjPoint1::affine(b)))
            };
            d1[k] = Real::max(d1[k], dist);
            d2[k] = Real::max(d2[k], yt.dist(&ProjPoint1::affine(b)));
            let xt = i2_fiber(ctx, &x, &yt)?;
            imgs.push(yt);
            outs.push(xt);
        }
        if k == 0 {
            mutual = imgs[0].dist(&imgs[1]);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{example_config, make_config};
    use crate::scalar::c;

    fn pt(z: Scalar) -> ProjPoint1 {
        ProjPoint1::affine(z)
    }

    #[test]
    fn involutions_square_to_identity() {
        for tag in FamilyTag::ALL {
            let cfg = example_config(tag);
            let ctx = FiberContext::new(&cfg, c(1.3, 0.2));
            let (x, y) = (pt(c(0.37, 0.1)), pt(c(-0.81, 0.2)));
            let yt = i1_fiber(&ctx, &x, &y).unwrap();
            assert!(i1_fiber(&ctx, &x, &yt).unwrap().dist(&y) < 1e-10, "{tag}");
            let xt = i2_fiber(&ctx, &x, &y).unwrap();
            assert!(i2_fiber(&ctx, &xt, &y).unwrap().dist(&x) < 1e-10, "{tag}");
        }
    }

    #[test]
    fn base_point_input_is_indeterminate() {
        let cfg = example_config(FamilyTag::DA1);
        let ctx = FiberContext::new(&cfg, re(1.3));
        let (a, b) = base_points_fiber(&ctx)[0];
        assert!(matches!(
            i2_fiber(&ctx, &pt(a), &pt(b)),
            Err(Error::Indeterminate(_))
        ));
    }

    #[test]
    fn infinite_fixed_coordinate_is_rejected() {
        let cfg = example_config(FamilyTag::DA1);
        let ctx = FiberContext::new(&cfg, re(1.3));
        let r = i1_fiber(&ctx, &ProjPoint1::infinity(), &pt(re(0.2)));
        assert!(matches!(r, Err(Error::NonAffine(_))));
    }

    #[test]
    fn line_through_base_point_collapses() {
        let cfg = example_config(FamilyTag::DA1);
        let ctx = FiberContext::new(&cfg, re(1.3));
        let (a, b) = base_points_fiber(&ctx)[2];
        for y in [c(0.2, 0.1), re(-3.0), c(1.0, 1.0)] {
            let yt = i1_fiber(&ctx, &pt(a), &pt(y)).unwrap();
            assert!((yt.value().unwrap() - b).norm() < 1e-12);
        }
    }

    #[test]
    fn da1_plane_involution_exact_rational_oracle() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        // admissible: a5+..+a8 − (a1+..+a4) = 2
        let a = [
            q(1, 10),
            q(1, 5),
            q(3, 10),
            q(2, 5),
            q(1, 2),
            q(3, 5),
            q(4, 5),
            q(11, 10),
        ];
        let x = q(1, 1);
        let y = q(3, 10);
        let one = q(1, 1);
        let mut pn = one.clone();
        let mut pd = one.clone();
        for ai in &a[..4] {
            pn *= &x - ai;
        }
        for ai in &a[4..] {
            pd *= &x - ai;
        }
        let r = pn / pd;
        let kk = (&x + &y) / (&x + &y - &one);
        // (t+x)/(t+x−1)·K = R  ⇒  t = −R/(K − R) − x
        let t = -(&r / (&kk - &r)) - &x;
        let to_f = |v: &BigRational| {
            use num_traits::ToPrimitive;
            v.numer().to_f64().unwrap() / v.denom().to_f64().unwrap()
        };
        let cfg = make_config(
            FamilyTag::DA1,
            None,
            a.iter().map(|v| re(to_f(v))).collect(),
            re(0.3),
            false,
        )
        .unwrap();
        let ctx = FiberContext::new(&cfg, re(1.0));
        let got = i1_fiber(&ctx, &pt(re(1.0)), &pt(re(0.3))).unwrap();
        assert!((got.value().unwrap() - re(to_f(&t))).norm() < 1e-12);
    }

    #[test]
    fn qa1_symmetric_conjugation() {
        let cs = [1.1, 1.3, 1.4, 1.5];
        let mut v = Vec::new();
        for ci in cs {
            v.push(re(ci));
            v.push(re(1.0 / ci));
        }
        let cfg = make_config(FamilyTag::QA1, Some(re(2.0)), v, re(1.1), true).unwrap();
        let ctx = FiberContext::new(&cfg, re(2.0));
        let (x, y) = (pt(c(0.37, 0.1)), pt(c(-0.81, 0.2)));
        let a = i2_fiber(&ctx, &x, &y).unwrap();
        let b = i1_fiber(&ctx, &y, &x).unwrap();
        assert!(a.dist(&b) < 1e-12);
    }

    #[test]
    fn qa0_base_points_reduce_to_plane() {
        let cfg = example_config(FamilyTag::QA0);
        let ctx = FiberContext::new(&cfg, cfg.kappa.unwrap());
        for (f, p) in base_points_fiber(&ctx).iter().zip(cfg.affine_base_points()) {
            assert!((f.0 - p.0).norm() < 1e-14 && (f.1 - p.1).norm() < 1e-14);
        }
    }

    #[test]
    fn da0_base_points_at_unit_nu() {
        let cfg = example_config(FamilyTag::DA0);
        let ctx = FiberContext::new(&cfg, re(1.0));
        for (f, p) in base_points_fiber(&ctx).iter().zip(cfg.affine_base_points()) {
            assert!((f.0 - p.0).norm() < 1e-14 && (f.1 - p.1).norm() < 1e-14);
        }
    }

    #[test]
    fn root_choices_agree() {
        for tag in [FamilyTag::DA0, FamilyTag::QA0] {
            let cfg = example_config(tag);
            let ctx = FiberContext::new(&cfg, c(1.6, -0.1));
            let x = c(0.42, -0.3);
            let y = pt(c(0.2, 0.5));
            let maps = i1_maps(&ctx, x);
            let r0 = maps[0].apply(&y, 1e-14).unwrap().0;
            let r1 = maps[1].apply(&y, 1e-14).unwrap().0;
            assert!(r0.dist(&r1) < 1e-11, "{tag}");
        }
    }

    #[test]
    fn plane_probe_contracts_linearly() {
        let cfg = example_config(FamilyTag::DA1);
        let ctx = FiberContext::new(&cfg, re(1.0));
        let r = confinement_probe_2d(&ctx, 1, 1e-4).unwrap();
        assert!(r.passed, "{r:?}");
        let cfg = example_config(FamilyTag::QA0);
        let ctx = FiberContext::new(&cfg, cfg.kappa.unwrap());
        let r = confinement_probe_2d(&ctx, 3, 1e-4).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn plane_probe_at_zero_offset_is_indeterminate() {
        let cfg = example_config(FamilyTag::DA1);
        let ctx = FiberContext::new(&cfg, re(1.0));
        assert!(matches!(
            confinement_probe_2d(&ctx, 1, 0.0),
            Err(Error::Indeterminate(_))
        ));
    }
}
