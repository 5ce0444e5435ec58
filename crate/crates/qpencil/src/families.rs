//! The five family configurations: parameter validation, derived base points,
//! the Q- and P-pencils, and seeded random draws of admissible parameters.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pencil_core::{
    biquadratic_space_through_jets, segre_embed, segre_lift, segre_quadric, BiquadraticForm,
    ProjPoint1, ProjPoint3, QuadricPencil, SymQuadForm,
};
use crate::poly::Poly;
use crate::scalar::{c, re, Real, Scalar};
use crate::uniformization::{FamilyTag, UniformParam};

pub const CONSTRAINT_TOL: Real = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyConfig {
    pub tag: FamilyTag,
    pub kappa: Option<Scalar>,
    /// a_i (dA1, dD4), c_i (qA1) or z_i (dA0, qA0).
    pub points: Vec<Scalar>,
    /// δ (additive) or q (multiplicative).
    pub step: Scalar,
    pub symmetric: bool,
}

fn zero() -> Scalar {
    re(0.0)
}

fn tol_scale(v: &[Scalar]) -> Real {
    1.0 + v.iter().map(|z| z.norm()).sum::<Real>()
}

/// Validates the parameters and returns the configuration.
pub fn make_config(
    tag: FamilyTag,
    kappa: Option<Scalar>,
    points: Vec<Scalar>,
    step: Scalar,
    symmetric: bool,
) -> Result<FamilyConfig> {
    if points.len() != tag.n_points() {
        return Err(Error::DegenerateParameter(format!(
            "{tag} needs {} point parameters, got {}",
            tag.n_points(),
            points.len()
        )));
    }
    let all: Vec<Scalar> = points.iter().copied().chain(kappa).chain([step]).collect();
    if all.iter().any(|z| !crate::scalar::is_finite(*z)) {
        return Err(Error::DegenerateParameter("non-finite parameter".into()));
    }
    let kappa = if tag.needs_kappa() {
        let k = kappa.ok_or_else(|| Error::DegenerateParameter(format!("{tag} needs kappa")))?;
        if k.norm() == 0.0 {
            return Err(Error::DegenerateParameter("kappa = 0".into()));
        }
        if matches!(tag, FamilyTag::QA1 | FamilyTag::QA0) && (k * k - 1.0).norm() < 1e-12 {
            return Err(Error::DegenerateParameter("kappa = ±1".into()));
        }
        Some(k)
    } else {
        None
    };
    if !tag.is_additive() && step.norm() == 0.0 {
        return Err(Error::DegenerateParameter("q = 0".into()));
    }
    let p = &points;
    match tag {
        FamilyTag::DA1 => {
            let s: Scalar = p[4..].iter().sum::<Scalar>() - p[..4].iter().sum::<Scalar>();
            if (s - 2.0).norm() > CONSTRAINT_TOL * tol_scale(p) {
                return Err(Error::ConstraintViolated(format!(
                    "a5+a6+a7+a8-(a1+a2+a3+a4) = {s}, must equal 2"
                )));
            }
        }
        FamilyTag::DD4 => {}
        FamilyTag::QA1 => {
            if p.iter().any(|z| z.norm() == 0.0) {
                return Err(Error::DegenerateParameter("c_i = 0".into()));
            }
            let r = p[..4].iter().product::<Scalar>() / p[4..].iter().product::<Scalar>();
            if (r - 1.0).norm() > CONSTRAINT_TOL * 8.0 {
                return Err(Error::ConstraintViolated(format!(
                    "c1c2c3c4/(c5c6c7c8) = {r}, must equal 1"
                )));
            }
        }
        FamilyTag::DA0 => {
            let s: Scalar = p.iter().sum();
            if s.norm() > CONSTRAINT_TOL * tol_scale(p) {
                return Err(Error::ConstraintViolated(format!(
                    "z1+...+z8 = {s}, must equal 0"
                )));
            }
        }
        FamilyTag::QA0 => {
            if p.iter().any(|z| z.norm() == 0.0) {
                return Err(Error::DegenerateParameter("z_i = 0".into()));
            }
            let r: Scalar = p.iter().product();
            if (r - 1.0).norm() > CONSTRAINT_TOL * 8.0 {
                return Err(Error::ConstraintViolated(format!(
                    "z1···z8 = {r}, must equal 1"
                )));
            }
        }
    }
    let cfg = FamilyConfig {
        tag,
        kappa,
        points,
        step,
        symmetric,
    };
    let s = cfg.affine_base_points();
    for i in 0..s.len() {
        for j in 0..i {
            let d = (s[i].0 - s[j].0).norm() + (s[i].1 - s[j].1).norm();
            if d < 1e-9 * (1.0 + s[i].0.norm() + s[i].1.norm()) {
                return Err(Error::DegenerateParameter(format!(
                    "base points {} and {} coincide",
                    j + 1,
                    i + 1
                )));
            }
        }
    }
    if symmetric {
        check_symmetric(&cfg)?;
    }
    Ok(cfg)
}

pub fn check_symmetric(cfg: &FamilyConfig) -> Result<()> {
    let p = &cfg.points;
    let tol = 1e-12 * tol_scale(p);
    let bad = |what: &str| Err(Error::NotSymmetric(what.to_string()));
    let close = |a: Scalar, b: Scalar| (a - b).norm() <= tol;
    match cfg.tag {
        FamilyTag::DA1 => {
            if !(close(p[1], -p[0]) && close(p[3], -p[2])) {
                return bad("a2 = -a1, a4 = -a3");
            }
            if !(close(p[5], 1.0 - p[4]) && close(p[7], 1.0 - p[6])) {
                return bad("a6 = 1 - a5, a8 = 1 - a7");
            }
        }
        FamilyTag::DD4 => {
            if !(close(p[1], -p[0]) && close(p[3], -p[2])) {
                return bad("a2 = -a1, a4 = -a3");
            }
        }
        FamilyTag::QA1 => {
            for i in 0..4 {
                if !close(p[2 * i + 1] * p[2 * i], re(1.0)) {
                    return bad("c_{2i} = 1/c_{2i-1}");
                }
            }
        }
        FamilyTag::DA0 => {
            for i in 0..4 {
                if !close(p[i + 4], -p[i]) {
                    return bad("z_{i+4} = -z_i");
                }
            }
        }
        FamilyTag::QA0 => {
            for i in 0..4 {
                if !close(p[i + 4] * p[i], re(1.0)) {
                    return bad("z_{i+4} = 1/z_i");
                }
            }
        }
    }
    Ok(())
}

impl FamilyConfig {
    pub fn kappa_or_zero(&self) -> Scalar {
        self.kappa.unwrap_or(zero())
    }

    /// Parameter at position ν or w with this config's step.
    pub fn param(&self, position: Scalar) -> Result<UniformParam> {
        UniformParam::new(self.tag, position, self.step)
    }

    /// ν = 1 or w = κ: the fiber λ = 0, where the charts reduce to the plane QRT setting.
    pub fn autonomous_position(&self) -> Scalar {
        match self.tag {
            FamilyTag::QA1 | FamilyTag::QA0 => self.kappa_or_zero(),
            _ => re(1.0),
        }
    }

    /// Default start position for orbits and probes.
    pub fn default_start(&self) -> Scalar {
        if self.tag.is_additive() {
            re(1.3)
        } else {
            re(1.7)
        }
    }

    /// Same family with step δ = 0 / q = 1.
    pub fn autonomous(&self) -> FamilyConfig {
        let mut c = self.clone();
        c.step = if self.tag.is_additive() {
            zero()
        } else {
            re(1.0)
        };
        c
    }

    /// Base points (a_i, b_i) of the plane configuration (λ = 0 fiber).
    /// For dD4 only the four proper points are returned.
    pub fn affine_base_points(&self) -> Vec<(Scalar, Scalar)> {
        let k = self.kappa_or_zero();
        let p = &self.points;
        match self.tag {
            FamilyTag::DA1 => (0..8)
                .map(|i| {
                    if i < 4 {
                        (p[i], -p[i])
                    } else {
                        (p[i], 1.0 - p[i])
                    }
                })
                .collect(),
            FamilyTag::DD4 => p.iter().map(|&a| (a, -a)).collect(),
            FamilyTag::QA1 => (0..8)
                .map(|i| {
                    if i < 4 {
                        (k * p[i], k / p[i])
                    } else {
                        (p[i], 1.0 / p[i])
                    }
                })
                .collect(),
            FamilyTag::DA0 => p.iter().map(|&z| (z * (z + k), z * (z - k))).collect(),
            FamilyTag::QA0 => p
                .iter()
                .map(|&z| (z + 1.0 / (k * z), 1.0 / z + z / k))
                .collect(),
        }
    }

    /// Tangent directions of the infinitely near points (dD4 only).
    pub fn base_jets(&self) -> Vec<((Scalar, Scalar), (Scalar, Scalar))> {
        if self.tag != FamilyTag::DD4 {
            return vec![];
        }
        self.affine_base_points()
            .into_iter()
            .map(|s| (s, (re(1.0), re(1.0))))
            .collect()
    }

    /// S₁..S₈ in P³. For dD4 entries 5..8 repeat 1..4 (infinitely near copies).
    pub fn base_points_homogeneous(&self) -> Vec<ProjPoint3> {
        let mut out: Vec<ProjPoint3> = self
            .affine_base_points()
            .into_iter()
            .map(|(a, b)| segre_embed(&ProjPoint1::affine(a), &ProjPoint1::affine(b)))
            .collect();
        if self.tag == FamilyTag::DD4 {
            let again = out.clone();
            out.extend(again);
        }
        out
    }
}

/// Q∞ of the family (Q₀ is always the Segre quadric).
pub fn q_infinity(tag: FamilyTag, kappa: Scalar) -> SymQuadForm {
    let k = kappa;
    let o = re(1.0);
    let z = zero();
    match tag {
        FamilyTag::DA1 => SymQuadForm::from_poly(
            [o, o, z, z],
            &[((0, 1), re(2.0)), ((0, 3), -o), ((1, 3), -o)],
        ),
        FamilyTag::DD4 => SymQuadForm::from_poly([o, o, z, z], &[((0, 1), re(2.0))]),
        FamilyTag::QA1 => SymQuadForm::from_poly([z, z, -o, -k * k], &[((2, 3), 1.0 + k * k)]),
        FamilyTag::DA0 => SymQuadForm::from_poly(
            [o, o, z, z],
            &[
                ((0, 1), re(-2.0)),
                ((0, 3), -2.0 * k * k),
                ((1, 3), -2.0 * k * k),
            ],
        ),
        FamilyTag::QA0 => {
            let t = k - 1.0 / k;
            SymQuadForm::from_poly([k, k, z, t * t], &[((0, 1), -(1.0 + k * k))])
        }
    }
}

/// Discriminant as printed for each family (dA1 and dD4 carry the printed sign).
pub fn published_char_poly(tag: FamilyTag, kappa: Scalar) -> Poly {
    let k = kappa;
    match tag {
        FamilyTag::DA1 | FamilyTag::DD4 => Poly::linear(re(-1.0), re(4.0)),
        FamilyTag::DA0 => Poly::linear(re(1.0), re(4.0)),
        FamilyTag::QA1 | FamilyTag::QA0 => Poly::linear(re(1.0), (1.0 + k) * (1.0 + k))
            .mul(&Poly::linear(re(1.0), (1.0 - k) * (1.0 - k))),
    }
}

/// Pullback of a quadric under (x, y) ↦ [x:y:xy:1].
pub fn pullback(q: &SymQuadForm) -> BiquadraticForm {
    // exponents (j, k) of x, y in X1..X4
    let e = [(1usize, 0usize), (0, 1), (1, 1), (0, 0)];
    let mut cc = [[zero(); 3]; 3];
    for a in 0..4 {
        for b in a..4 {
            let coef = if a == b {
                q.get(a, a) * 0.5
            } else {
                q.get(a, b)
            };
            cc[e[a].0 + e[b].0][e[a].1 + e[b].1] += coef;
        }
    }
    BiquadraticForm { c: cc }
}

#[derive(Debug, Clone)]
pub struct Pencils {
    pub q: QuadricPencil,
    /// Basis of the biquadratic pencil through the plane base points.
    pub c_basis: [BiquadraticForm; 2],
    /// Its lift to P³.
    pub p_basis: [SymQuadForm; 2],
}

impl Pencils {
    /// μ = P₀/P∞ at a point.
    pub fn mu(&self, x: &ProjPoint3) -> Scalar {
        let xs = x.coords();
        self.p_basis[0].eval_raw(&xs) / self.p_basis[1].eval_raw(&xs)
    }
}

pub fn build_pencils(cfg: &FamilyConfig) -> Result<Pencils> {
    let q0 = segre_quadric();
    let qi = q_infinity(cfg.tag, cfg.kappa_or_zero());
    let q = QuadricPencil::new(q0, qi)?;
    for s in cfg.base_points_homogeneous() {
        let x = s.coords();
        let r = q0.eval_raw(&x).norm() + qi.eval_raw(&x).norm();
        if r > 1e-12 * (1.0 + qi.norm()) {
            return Err(Error::LiftInconsistent(r));
        }
    }
    let basis = biquadratic_space_through_jets(
        &cfg.affine_base_points(),
        &cfg.base_jets(),
        crate::scalar::DEFAULT_TOL,
    );
    if basis.len() != 2 {
        return Err(Error::LiftInconsistent(basis.len() as Real));
    }
    // C∞ must lie in the span
    let v = pullback(&qi).to_vec();
    let nv: Real = v.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt();
    let mut r = v.clone();
    for b in &basis {
        let bv = b.to_vec();
        let coef: Scalar = bv.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
        for (ri, bi) in r.iter_mut().zip(&bv) {
            *ri -= coef * bi;
        }
    }
    let res = r.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt() / nv;
    if res > 1e-10 {
        return Err(Error::LiftInconsistent(res));
    }
    Ok(Pencils {
        q,
        c_basis: [basis[0], basis[1]],
        p_basis: [segre_lift(&basis[0]), segre_lift(&basis[1])],
    })
}

fn cpx<R: Rng>(rng: &mut R, re_range: (Real, Real), im: Real) -> Scalar {
    c(
        rng.gen_range(re_range.0..re_range.1),
        rng.gen_range(-im..im),
    )
}

fn polar<R: Rng>(rng: &mut R, modulus: (Real, Real), phase: Real) -> Scalar {
    Scalar::from_polar(
        rng.gen_range(modulus.0..modulus.1),
        rng.gen_range(-phase..phase),
    )
}

/// Minimum pairwise separation of the fiber base point coordinates over the
/// parameters a run starting at `start` visits (8 half-steps).
pub fn fiber_separation(cfg: &FamilyConfig, start: Scalar) -> Real {
    let mut best = Real::INFINITY;
    let Ok(p0) = cfg.param(start) else { return 0.0 };
    for h in -1..9 {
        let p = crate::uniformization::shift(&p0, h);
        let ctx = crate::qrt::FiberContext::new(cfg, p.position());
        let s = crate::qrt::base_points_fiber(&ctx);
        let n = if cfg.tag == FamilyTag::DD4 { 4 } else { 8 };
        for i in 0..n {
            for j in 0..i {
                best = best
                    .min((s[i].0 - s[j].0).norm())
                    .min((s[i].1 - s[j].1).norm());
            }
        }
    }
    best
}

/// Seeded draw of an admissible configuration with O(1) parameters, rejecting
/// draws whose base points come close to each other along a default run.
pub fn sample_config<R: Rng>(tag: FamilyTag, symmetric: bool, rng: &mut R) -> FamilyConfig {
    loop {
        let cfg = draw(tag, symmetric, rng);
        if let Ok(cfg) = cfg {
            let ok_sep = fiber_separation(&cfg, cfg.default_start()) > 0.12;
            let ok_size = cfg
                .affine_base_points()
                .iter()
                .all(|(a, b)| a.norm() < 4.0 && b.norm() < 4.0);
            if ok_sep && ok_size {
                return cfg;
            }
        }
    }
}

fn draw<R: Rng>(tag: FamilyTag, symmetric: bool, rng: &mut R) -> Result<FamilyConfig> {
    let step = if tag.is_additive() {
        cpx(rng, (0.08, 0.25), 0.08)
    } else {
        polar(rng, (1.04, 1.15), 0.1)
    };
    let mut p: Vec<Scalar>;
    let mut kappa = None;
    match tag {
        FamilyTag::DA1 => {
            p = (0..8).map(|_| cpx(rng, (-0.9, 0.9), 0.4)).collect();
            if symmetric {
                p[1] = -p[0];
                p[3] = -p[2];
                p[5] = 1.0 - p[4];
                p[7] = 1.0 - p[6];
            } else {
                let s: Scalar = p[..4].iter().sum::<Scalar>() - p[4..7].iter().sum::<Scalar>();
                p[7] = 2.0 + s;
            }
        }
        FamilyTag::DD4 => {
            p = (0..4).map(|_| cpx(rng, (-0.9, 0.9), 0.4)).collect();
            if symmetric {
                p[1] = -p[0];
                p[3] = -p[2];
            }
        }
        FamilyTag::QA1 => {
            kappa = Some(polar(rng, (1.6, 2.6), 0.3));
            p = (0..8).map(|_| polar(rng, (0.7, 1.4), 1.2)).collect();
            if symmetric {
                for i in 0..4 {
                    p[2 * i + 1] = 1.0 / p[2 * i];
                }
            } else {
                let r: Scalar =
                    p[..4].iter().product::<Scalar>() / p[4..7].iter().product::<Scalar>();
                p[7] = r;
            }
        }
        FamilyTag::DA0 => {
            kappa = Some(polar(rng, (0.5, 1.1), 0.3));
            p = (0..8).map(|_| cpx(rng, (-0.9, 0.9), 0.4)).collect();
            if symmetric {
                for i in 0..4 {
                    p[i + 4] = -p[i];
                }
            } else {
                p[7] = -p[..7].iter().sum::<Scalar>();
            }
        }
        FamilyTag::QA0 => {
            kappa = Some(polar(rng, (1.6, 2.6), 0.3));
            p = (0..8).map(|_| polar(rng, (0.7, 1.4), 1.2)).collect();
            if symmetric {
                for i in 0..4 {
                    p[i + 4] = 1.0 / p[i];
                }
            } else {
                p[7] = 1.0 / p[..7].iter().product::<Scalar>();
            }
        }
    }
    make_config(tag, kappa, p, step, symmetric)
}

/// Example configurations used by the documentation and the CLI tests.
pub fn example_config(tag: FamilyTag) -> FamilyConfig {
    let r = |v: &[Real]| v.iter().map(|&x| re(x)).collect::<Vec<_>>();
    let cx = |v: &[(Real, Real)]| {
        v.iter()
            .map(|&(a, b)| Scalar::new(a, b))
            .collect::<Vec<_>>()
    };
    match tag {
        FamilyTag::DA1 => make_config(
            tag,
            None,
            r(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.8, 1.0]),
            re(0.3),
            false,
        ),
        FamilyTag::DD4 => make_config(tag, None, r(&[0.1, 0.45, -0.3, 0.7]), re(0.2), false),
        FamilyTag::QA1 => {
            let mut c = cx(&[
                (0.6, -0.1),
                (0.6, 0.3),
                (1.0, -0.3),
                (1.5, -0.3),
                (2.1, 0.3),
                (1.2, 0.2),
                (0.6, 0.1),
                (1.0, 0.0),
            ]);
            c[7] = c[..4].iter().product::<Scalar>() / c[4..7].iter().product::<Scalar>();
            make_config(tag, Some(re(2.0)), c, re(1.2), false)
        }
        FamilyTag::DA0 => make_config(
            tag,
            Some(re(0.7)),
            cx(&[
                (0.3, -0.3),
                (1.2, -0.1),
                (0.1, -0.1),
                (-0.1, -0.3),
                (1.2, -0.3),
                (-0.4, -0.1),
                (-1.0, -0.2),
                (-1.3, 1.4),
            ]),
            re(0.15),
            false,
        ),
        FamilyTag::QA0 => make_config(
            tag,
            Some(re(2.0)),
            r(&[2.0, 3.0, 4.0, 5.0, 0.5, 1.0 / 3.0, 0.25, 0.2]),
            re(1.1),
            false,
        ),
    }
    .expect("example configurations are admissible")
}
