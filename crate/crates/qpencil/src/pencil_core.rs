//! Projective points, quadratic forms and pencils of quadrics in P³, the Segre
//! embedding of P¹×P¹ and the classification of pencils by their discriminant.

use std::fmt;

use nalgebra::{DMatrix, Matrix4};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{Real, Scalar, DEFAULT_TOL};

fn zero() -> Scalar {
    Scalar::new(0.0, 0.0)
}

fn one() -> Scalar {
    Scalar::new(1.0, 0.0)
}

/// Index of the coordinate of largest modulus, lowest index on ties.
fn argmax_mod(v: &[Scalar]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[best].norm() {
            best = i;
        }
    }
    best
}

/// Homogeneous point [X₁:X₂:X₃:X₄], stored with its max-modulus coordinate equal to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjPoint3 {
    coords: [Scalar; 4],
}

impl ProjPoint3 {
    pub fn new(coords: [Scalar; 4]) -> Result<Self> {
        if coords.iter().any(|z| !crate::scalar::is_finite(*z)) {
            return Err(Error::Indeterminate(
                "non-finite homogeneous coordinate".into(),
            ));
        }
        let k = argmax_mod(&coords);
        let m = coords[k];
        if m.norm() == 0.0 {
            return Err(Error::CollapsedImage);
        }
        let mut out = coords.map(|z| z / m);
        out[k] = one();
        Ok(ProjPoint3 { coords: out })
    }

    pub fn coords(&self) -> [Scalar; 4] {
        self.coords
    }

    pub fn norm(&self) -> Real {
        self.coords
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<Real>()
            .sqrt()
    }

    /// Chordal distance ‖X∧Y‖ / (‖X‖‖Y‖), in [0, 1].
    pub fn dist(&self, other: &ProjPoint3) -> Real {
        wedge_dist(&self.coords, &other.coords)
    }

    pub fn apply(&self, m: &Matrix4<Scalar>) -> Result<ProjPoint3> {
        let v = m * nalgebra::Vector4::from(self.coords);
        ProjPoint3::new([v[0], v[1], v[2], v[3]])
    }
}

impl fmt::Display for ProjPoint3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coords;
        write!(f, "[{}:{}:{}:{}]", c[0], c[1], c[2], c[3])
    }
}

pub(crate) fn wedge_dist(x: &[Scalar], y: &[Scalar]) -> Real {
    let nx: Real = x.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt();
    let ny: Real = y.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt();
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    s.sqrt() / (nx * ny)
}

/// Point (u:v) of P¹; affine value u/v, infinity when v = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjPoint1 {
    u: Scalar,
    v: Scalar,
}

impl ProjPoint1 {
    pub fn new(u: Scalar, v: Scalar) -> Result<Self> {
        if !crate::scalar::is_finite(u) || !crate::scalar::is_finite(v) {
            return Err(Error::Indeterminate("non-finite P1 coordinate".into()));
        }
        if u.norm() == 0.0 && v.norm() == 0.0 {
            return Err(Error::CollapsedImage);
        }
        Ok(if u.norm() > v.norm() {
            ProjPoint1 { u: one(), v: v / u }
        } else {
            ProjPoint1 { u: u / v, v: one() }
        })
    }

    pub fn affine(x: Scalar) -> Self {
        ProjPoint1::new(x, one()).expect("affine point")
    }

    pub fn infinity() -> Self {
        ProjPoint1 {
            u: one(),
            v: zero(),
        }
    }

    pub fn uv(&self) -> (Scalar, Scalar) {
        (self.u, self.v)
    }

    pub fn is_infinite(&self) -> bool {
        self.v.norm() == 0.0
    }

    /// Affine value, `None` at infinity.
    pub fn value(&self) -> Option<Scalar> {
        if self.is_infinite() {
            None
        } else {
            Some(self.u / self.v)
        }
    }

    pub fn dist(&self, other: &ProjPoint1) -> Real {
        wedge_dist(&[self.u, self.v], &[other.u, other.v])
    }
}

impl fmt::Display for ProjPoint1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(x) => write!(f, "{}", x),
            None => write!(f, "inf"),
        }
    }
}

/// Symmetric 4×4 matrix M of a quadratic form, with Q(X) = ½XᵀMX.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymQuadForm {
    m: [[Scalar; 4]; 4],
}

impl SymQuadForm {
    /// Builds the form from its upper triangle; the lower one is mirrored.
    pub fn from_upper(f: impl Fn(usize, usize) -> Scalar) -> Self {
        let mut m = [[zero(); 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = f(i, j);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        SymQuadForm { m }
    }

    /// Rejects matrices that are not exactly symmetric.
    pub fn new(m: [[Scalar; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..i {
                if m[i][j] != m[j][i] {
                    return Err(Error::DegenerateParameter(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(SymQuadForm { m })
    }

    /// Form from polynomial coefficients: `sq[i]` of X_i², `mixed[(i,j)]` of X_iX_j.
    pub fn from_poly(sq: [Scalar; 4], mixed: &[((usize, usize), Scalar)]) -> Self {
        let mut m = [[zero(); 4]; 4];
        for i in 0..4 {
            m[i][i] = sq[i] * 2.0;
        }
        for &((i, j), v) in mixed {
            m[i][j] += v;
            m[j][i] += v;
        }
        SymQuadForm { m }
    }

    pub fn entries(&self) -> [[Scalar; 4]; 4] {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.m[i][j]
    }

    pub fn matrix(&self) -> Matrix4<Scalar> {
        Matrix4::from_fn(|i, j| self.m[i][j])
    }

    /// ½XᵀMY.
    pub fn polar(&self, x: &[Scalar; 4], y: &[Scalar; 4]) -> Scalar {
        let mut s = zero();
        for i in 0..4 {
            for j in 0..4 {
                s += x[i] * self.m[i][j] * y[j];
            }
        }
        s * 0.5
    }

    /// Q(X) = ½XᵀMX on raw coordinates.
    pub fn eval_raw(&self, x: &[Scalar; 4]) -> Scalar {
        self.polar(x, x)
    }

    pub fn upper(&self) -> [Scalar; 10] {
        let mut out = [zero(); 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                out[k] = self.m[i][j];
                k += 1;
            }
        }
        out
    }

    pub fn lin(&self, a: Scalar, other: &SymQuadForm, b: Scalar) -> SymQuadForm {
        SymQuadForm::from_upper(|i, j| a * self.m[i][j] + b * other.m[i][j])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> Real {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<Real>()
            .sqrt()
    }
}

/// The Segre quadric Q₀ = X₁X₂ − X₃X₄.
pub fn segre_quadric() -> SymQuadForm {
    SymQuadForm::from_poly([zero(); 4], &[((0, 1), one()), ((2, 3), -one())])
}

/// Value of the quadratic form at the canonical representative of `p`.
pub fn eval_quadric(q: &SymQuadForm, p: &ProjPoint3) -> Scalar {
    q.eval_raw(&p.coords())
}

/// Pencil Q_λ = Q₀ − λQ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricPencil {
    pub m0: SymQuadForm,
    pub m_inf: SymQuadForm,
}

impl QuadricPencil {
    pub fn new(m0: SymQuadForm, m_inf: SymQuadForm) -> Result<Self> {
        let a = m0.upper();
        let b = m_inf.upper();
        let rows = vec![a.to_vec(), b.to_vec()];
        let (rank, _) = nullspace(&rows, 10, DEFAULT_TOL);
        if rank < 2 {
            return Err(Error::DegenerateParameter(
                "pencil generators are proportional".into(),
            ));
        }
        Ok(QuadricPencil { m0, m_inf })
    }

    pub fn at(&self, lambda: Scalar) -> SymQuadForm {
        self.m0.lin(one(), &self.m_inf, -lambda)
    }

    /// The same pencil reparametrized by λ ↦ λ − t.
    pub fn reparametrized(&self, t: Scalar) -> QuadricPencil {
        QuadricPencil {
            m0: self.m0.lin(one(), &self.m_inf, t),
            m_inf: self.m_inf,
        }
    }
}

/// Δ(λ) = det(M₀ − λM∞), expanded over permutations in the polynomial ring.
pub fn char_poly(pencil: &QuadricPencil) -> Poly {
    let e = |i: usize, j: usize| Poly::linear(pencil.m0.get(i, j), -pencil.m_inf.get(i, j));
    let mut total = Poly::constant(zero());
    let mut perm = [0usize, 1, 2, 3];
    permutations(&mut perm, 0, &mut |p| {
        let mut inv = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if p[i] > p[j] {
                    inv += 1;
                }
            }
        }
        let mut term = Poly::constant(if inv % 2 == 0 { one() } else { -one() });
        for (i, &pi) in p.iter().enumerate() {
            term = term.mul(&e(i, pi));
        }
        total = total.add(&term);
    });
    total
}

fn permutations(p: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilTag {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl PencilTag {
    pub fn name(&self) -> &'static str {
        match self {
            PencilTag::I => "i",
            PencilTag::II => "ii",
            PencilTag::III => "iii",
            PencilTag::IV => "iv",
            PencilTag::V => "v",
            PencilTag::VI => "vi",
        }
    }

    pub fn segre(&self) -> &'static str {
        match self {
            PencilTag::I => "[1,1,1,1]",
            PencilTag::II => "[2,1,1]",
            PencilTag::III => "[3,1]",
            PencilTag::IV => "[(1,1),1,1]",
            PencilTag::V => "[(2,1),1]",
            PencilTag::VI => "[(3,1)]",
        }
    }
}

impl fmt::Display for PencilTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootDatum {
    /// Root of the homogenized discriminant as a point of P¹ (∞ = degree drop).
    pub root: ProjPoint1,
    pub multiplicity: usize,
    pub corank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PencilType {
    pub tag: PencilTag,
    pub segre: String,
    pub root_data: Vec<RootDatum>,
}

/// Number of singular values of `m` below `tol·σ_max`.
pub fn corank(m: &SymQuadForm, tol: Real) -> usize {
    let s = DMatrix::from_fn(4, 4, |i, j| m.get(i, j)).singular_values();
    let smax = s.iter().cloned().fold(0.0, Real::max);
    if smax == 0.0 {
        return 4;
    }
    s.iter().filter(|&&x| x <= tol * smax).count()
}

pub fn classify_pencil(pencil: &QuadricPencil, tol: Real) -> Result<PencilType> {
    let delta = char_poly(pencil);
    let deg = delta
        .degree(tol)
        .ok_or_else(|| Error::UnrecognizedProfile("discriminant vanishes identically".into()))?;
    let roots = delta.roots(tol);
    // cluster
    let mut clusters: Vec<Vec<Scalar>> = Vec::new();
    for r in roots {
        match clusters
            .iter_mut()
            .find(|cl| (cl[0] - r).norm() < tol * (1.0 + r.norm()))
        {
            Some(cl) => cl.push(r),
            None => clusters.push(vec![r]),
        }
    }
    let scale = pencil.m0.norm().max(pencil.m_inf.norm());
    let mut data = Vec::new();
    for cl in clusters {
        let mean = cl.iter().sum::<Scalar>() / cl.len() as Real;
        let m = pencil.at(mean);
        // relative to the pencil's scale so that a zero matrix reads as corank 4
        let s = DMatrix::from_fn(4, 4, |i, j| m.get(i, j)).singular_values();
        let cr = s.iter().filter(|&&x| x <= tol.sqrt() * scale).count();
        data.push(RootDatum {
            root: ProjPoint1::affine(mean),
            multiplicity: cl.len(),
            corank: cr,
        });
    }
    if deg < 4 {
        data.push(RootDatum {
            root: ProjPoint1::infinity(),
            multiplicity: 4 - deg,
            corank: corank(&pencil.m_inf, tol.sqrt()),
        });
    }
    let total: usize = data.iter().map(|d| d.multiplicity).sum();
    debug_assert_eq!(total, 4);
    let mut profile: Vec<(usize, usize)> =
        data.iter().map(|d| (d.multiplicity, d.corank)).collect();
    profile.sort_unstable_by(|a, b| b.cmp(a));
    let tag = match profile.as_slice() {
        [(1, 1), (1, 1), (1, 1), (1, 1)] => PencilTag::I,
        [(2, 1), (1, 1), (1, 1)] => PencilTag::II,
        [(3, 1), (1, 1)] => PencilTag::III,
        [(2, 2), (1, 1), (1, 1)] => PencilTag::IV,
        [(3, 2), (1, 1)] => PencilTag::V,
        [(3, 3), (1, 1)] => PencilTag::VI,
        other => return Err(Error::UnrecognizedProfile(format!("{other:?}"))),
    };
    Ok(PencilType {
        tag,
        segre: tag.segre().to_string(),
        root_data: data,
    })
}

/// (x, y) ↦ [x:y:xy:1], homogeneously [u_x v_y : v_x u_y : u_x u_y : v_x v_y].
pub fn segre_embed(x: &ProjPoint1, y: &ProjPoint1) -> ProjPoint3 {
    let (xu, xv) = x.uv();
    let (yu, yv) = y.uv();
    ProjPoint3::new([xu * yv, xv * yu, xu * yu, xv * yv]).expect("segre image is nonzero")
}

/// Coefficients c[j][k] of xʲyᵏ, j, k ∈ {0, 1, 2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadraticForm {
    pub c: [[Scalar; 3]; 3],
}

impl BiquadraticForm {
    pub fn new(c: [[Scalar; 3]; 3]) -> Result<Self> {
        if c.iter().flatten().all(|z| z.norm() == 0.0) {
            return Err(Error::DegenerateParameter("zero biquadratic form".into()));
        }
        Ok(BiquadraticForm { c })
    }

    pub fn from_vec(v: &[Scalar]) -> Self {
        let mut c = [[zero(); 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                c[j][k] = v[3 * j + k];
            }
        }
        BiquadraticForm { c }
    }

    pub fn to_vec(&self) -> Vec<Scalar> {
        self.c.iter().flatten().copied().collect()
    }

    pub fn eval(&self, x: Scalar, y: Scalar) -> Scalar {
        let mut s = zero();
        for j in 0..3 {
            for k in 0..3 {
                s += self.c[j][k] * x.powu(j as u32) * y.powu(k as u32);
            }
        }
        s
    }

    /// Bihomogeneous evaluation of bidegree (2, 2).
    pub fn eval_hom(&self, x: &ProjPoint1, y: &ProjPoint1) -> Scalar {
        let (xu, xv) = x.uv();
        let (yu, yv) = y.uv();
        let mut s = zero();
        for j in 0..3u32 {
            for k in 0..3u32 {
                s += self.c[j as usize][k as usize]
                    * xu.powu(j)
                    * xv.powu(2 - j)
                    * yu.powu(k)
                    * yv.powu(2 - k);
            }
        }
        s
    }
}

/// Index pair (a, b) of the quadric monomial X_aX_b that xʲyᵏ lifts to.
fn lift_monomial(j: usize, k: usize) -> (usize, usize) {
    match (j, k) {
        (0, 0) => (3, 3),
        (1, 0) => (0, 3),
        (0, 1) => (1, 3),
        (1, 1) => (2, 3),
        (2, 0) => (0, 0),
        (0, 2) => (1, 1),
        (2, 1) => (0, 2),
        (1, 2) => (1, 2),
        (2, 2) => (2, 2),
        _ => unreachable!(),
    }
}

/// Quadric whose pullback under the Segre embedding is the given form.
pub fn segre_lift(c: &BiquadraticForm) -> SymQuadForm {
    let mut sq = [zero(); 4];
    let mut mixed = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            let (a, b) = lift_monomial(j, k);
            if a == b {
                sq[a] += c.c[j][k];
            } else {
                mixed.push(((a, b), c.c[j][k]));
            }
        }
    }
    SymQuadForm::from_poly(sq, &mixed)
}

/// Numerical rank and nullspace basis of the matrix with the given rows.
pub fn nullspace(rows: &[Vec<Scalar>], ncols: usize, tol: Real) -> (usize, Vec<Vec<Scalar>>) {
    let n = rows.len().max(ncols);
    // pad with zero rows so that the SVD returns a full right basis
    let m = DMatrix::from_fn(
        n,
        ncols,
        |i, j| {
            if i < rows.len() {
                rows[i][j]
            } else {
                zero()
            }
        },
    );
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let s = svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, Real::max);
    let mut rank = 0;
    let mut basis = Vec::new();
    for i in 0..s.len() {
        if smax > 0.0 && s[i] > tol * smax {
            rank += 1;
        } else {
            basis.push((0..ncols).map(|j| vt[(i, j)].conj()).collect());
        }
    }
    (rank, basis)
}

fn monomial_row(x: Scalar, y: Scalar) -> Vec<Scalar> {
    let mut r = Vec::with_capacity(9);
    for j in 0..3u32 {
        for k in 0..3u32 {
            r.push(x.powu(j) * y.powu(k));
        }
    }
    r
}

fn monomial_jet_row(x: Scalar, y: Scalar, dx: Scalar, dy: Scalar) -> Vec<Scalar> {
    let mut r = Vec::with_capacity(9);
    for j in 0..3i32 {
        for k in 0..3i32 {
            let mut v = zero();
            if j > 0 {
                v += x.powi(j - 1) * y.powi(k) * dx * j as Real;
            }
            if k > 0 {
                v += x.powi(j) * y.powi(k - 1) * dy * k as Real;
            }
            r.push(v);
        }
    }
    r
}

/// Basis of biquadratic forms vanishing at the given affine points.
pub fn biquadratic_space_through(points: &[(Scalar, Scalar)]) -> Vec<BiquadraticForm> {
    biquadratic_space_through_jets(points, &[], DEFAULT_TOL)
}

/// As [`biquadratic_space_through`], additionally requiring tangency to the
/// directions `(point, direction)` (infinitely near base points).
pub fn biquadratic_space_through_jets(
    points: &[(Scalar, Scalar)],
    jets: &[((Scalar, Scalar), (Scalar, Scalar))],
    tol: Real,
) -> Vec<BiquadraticForm> {
    let mut rows: Vec<Vec<Scalar>> = points.iter().map(|&(x, y)| monomial_row(x, y)).collect();
    for &((x, y), (dx, dy)) in jets {
        rows.push(monomial_jet_row(x, y, dx, dy));
    }
    let rows: Vec<Vec<Scalar>> = rows.into_iter().map(normalize_row).collect();
    let (_, basis) = nullspace(&rows, 9, tol);
    basis.iter().map(|v| BiquadraticForm::from_vec(v)).collect()
}

fn normalize_row(r: Vec<Scalar>) -> Vec<Scalar> {
    let n: Real = r.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt();
    if n == 0.0 {
        r
    } else {
        r.into_iter().map(|z| z / n).collect()
    }
}

fn quadric_row(x: &[Scalar; 4]) -> Vec<Scalar> {
    let mut r = Vec::with_capacity(10);
    for i in 0..4 {
        for j in i..4 {
            r.push(if i == j {
                x[i] * x[i] * 0.5
            } else {
                x[i] * x[j]
            });
        }
    }
    r
}

fn quadric_jet_row(x: &[Scalar; 4], t: &[Scalar; 4]) -> Vec<Scalar> {
    let mut r = Vec::with_capacity(10);
    for i in 0..4 {
        for j in i..4 {
            r.push(if i == j {
                x[i] * t[i]
            } else {
                x[i] * t[j] + x[j] * t[i]
            });
        }
    }
    r
}

/// Dimension of the space of quadrics through all points: 10 − numeric rank.
pub fn quadric_space_dim_through(points: &[ProjPoint3], tol: Real) -> usize {
    quadric_space_dim_through_jets(points, &[], tol)
}

/// Variant with tangency conditions XᵀMT = 0 for each (X, T).
pub fn quadric_space_dim_through_jets(
    points: &[ProjPoint3],
    jets: &[([Scalar; 4], [Scalar; 4])],
    tol: Real,
) -> usize {
    let mut rows: Vec<Vec<Scalar>> = points.iter().map(|p| quadric_row(&p.coords())).collect();
    for (x, t) in jets {
        rows.push(quadric_jet_row(x, t));
    }
    let rows: Vec<Vec<Scalar>> = rows.into_iter().map(normalize_row).collect();
    let (rank, _) = nullspace(&rows, 10, tol);
    10 - rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, re};

    fn p3(v: [Real; 4]) -> ProjPoint3 {
        ProjPoint3::new(v.map(re)).unwrap()
    }

    #[test]
    fn canonical_representative() {
        let p = ProjPoint3::new([re(1.0), re(-4.0), re(2.0), re(4.0)]).unwrap();
        // tie between index 1 and 3 goes to index 1
        assert_eq!(p.coords()[1], re(1.0));
        assert_eq!(p.coords()[3], re(-1.0));
        assert!(ProjPoint3::new([re(0.0); 4]).is_err());
    }

    #[test]
    fn segre_quadric_values() {
        let q0 = segre_quadric();
        assert_eq!(eval_quadric(&q0, &p3([1.0, 1.0, 1.0, 1.0])), re(0.0));
        assert_eq!(eval_quadric(&q0, &p3([1.0, 1.0, 0.0, 0.0])), re(1.0));
    }

    #[test]
    fn segre_embed_examples() {
        let p = segre_embed(&ProjPoint1::affine(re(2.0)), &ProjPoint1::affine(re(3.0)));
        assert!(p.dist(&p3([2.0, 3.0, 6.0, 1.0])) < 1e-15);
        let y = re(0.7);
        let q = segre_embed(&ProjPoint1::infinity(), &ProjPoint1::affine(y));
        assert!(q.dist(&ProjPoint3::new([re(1.0), re(0.0), y, re(0.0)]).unwrap()) < 1e-15);
    }

    #[test]
    fn lift_of_constant_is_x4_squared() {
        let mut cc = [[re(0.0); 3]; 3];
        cc[0][0] = re(1.0);
        let q = segre_lift(&BiquadraticForm::new(cc).unwrap());
        let x = [re(0.3), re(-1.0), re(2.0), re(5.0)];
        assert_eq!(q.eval_raw(&x), re(25.0));
    }

    #[test]
    fn lift_pulls_back_to_form() {
        // (x+y)(x+y-1) = x² + 2xy + y² - x - y
        let mut cc = [[re(0.0); 3]; 3];
        cc[2][0] = re(1.0);
        cc[1][1] = re(2.0);
        cc[0][2] = re(1.0);
        cc[1][0] = re(-1.0);
        cc[0][1] = re(-1.0);
        let f = BiquadraticForm::new(cc).unwrap();
        let q = segre_lift(&f);
        let (x, y) = (c(0.3, 0.1), c(-1.2, 0.5));
        let s = segre_embed(&ProjPoint1::affine(x), &ProjPoint1::affine(y));
        let lifted = q.eval_raw(&[x, y, x * y, re(1.0)]);
        assert!((lifted - f.eval(x, y)).norm() < 1e-14);
        // and the closed form (X1+X2)(X1+X2-X4)
        let xs = s.coords();
        let direct = (xs[0] + xs[1]) * (xs[0] + xs[1] - xs[3]);
        assert!((q.eval_raw(&xs) - direct).norm() < 1e-14);
    }

    #[test]
    fn char_poly_of_segre_and_identity() {
        let q0 = segre_quadric();
        let id = SymQuadForm::from_upper(|i, j| if i == j { re(1.0) } else { re(0.0) });
        let p = char_poly(&QuadricPencil::new(q0, id).unwrap());
        // det(M0 - λI) = (λ² - 1)²
        let expect = [1.0, 0.0, -2.0, 0.0, 1.0];
        for (a, b) in p.coeffs.iter().zip(expect) {
            assert!((a - re(b)).norm() < 1e-14);
        }
    }

    #[test]
    fn proportional_generators_rejected() {
        let q0 = segre_quadric();
        assert!(QuadricPencil::new(q0, q0.lin(re(2.0), &q0, re(0.0))).is_err());
    }

    #[test]
    fn single_point_leaves_nine_quadrics() {
        assert_eq!(
            quadric_space_dim_through(&[p3([1.0, 2.0, 3.0, 4.0])], 1e-9),
            9
        );
        assert_eq!(quadric_space_dim_through(&[], 1e-9), 10);
    }

    #[test]
    fn empty_biquadratic_space_is_nine_dimensional() {
        assert_eq!(biquadratic_space_through(&[]).len(), 9);
    }

    #[test]
    fn projective_distance_is_scale_free() {
        let a = [c(1.0, 2.0), re(0.5), re(-1.0), c(0.0, 3.0)];
        let b = a.map(|z| z * c(0.3, -2.0));
        assert!(wedge_dist(&a, &b) < 1e-15);
    }
}
