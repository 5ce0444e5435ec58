//! Normalizing matrices A with AᵀM_λA = c·M₀ and the fiber parametrization
//! φ(x, y) = A·[x:y:xy:1] together with its inverse.

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::families::q_infinity;
use crate::pencil_core::{
    segre_embed, segre_quadric, ProjPoint1, ProjPoint3, QuadricPencil, SymQuadForm,
};
use crate::scalar::{re, Real, Scalar};
use crate::uniformization::{lambda_of, FamilyTag, UniformParam};

pub const DEGENERACY_RADIUS: Real = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartMatrix {
    pub a: Matrix4<Scalar>,
    pub a_inv: Matrix4<Scalar>,
    pub param: UniformParam,
    pub family: FamilyTag,
    pub kappa: Option<Scalar>,
    /// AᵀM_λA = scale·M₀
    pub scale: Scalar,
}

fn m(rows: [[Scalar; 4]; 4]) -> Matrix4<Scalar> {
    Matrix4::from_fn(|i, j| rows[i][j])
}

pub fn chart_matrix(
    family: FamilyTag,
    p: &UniformParam,
    kappa: Option<Scalar>,
) -> Result<ChartMatrix> {
    let z = re(0.0);
    let o = re(1.0);
    let x = p.position();
    let k = kappa.unwrap_or(z);
    let a = match family {
        FamilyTag::DA1 | FamilyTag::DD4 | FamilyTag::DA0 => {
            if x.norm() < DEGENERACY_RADIUS || !crate::scalar::is_finite(x) {
                return Err(Error::ChartDegenerate(format!("nu = {x}")));
            }
            let n = x;
            match family {
                FamilyTag::DA1 => {
                    let e = (1.0 - n * n) / (4.0 * n);
                    m([
                        [(1.0 + n) / (2.0 * n), (1.0 - n) / (2.0 * n), z, z],
                        [(1.0 - n) / (2.0 * n), (1.0 + n) / (2.0 * n), z, z],
                        [e, e, o, z],
                        [z, z, z, o],
                    ])
                }
                FamilyTag::DD4 => m([
                    [(1.0 + n) / (2.0 * n), (1.0 - n) / (2.0 * n), z, z],
                    [(1.0 - n) / (2.0 * n), (1.0 + n) / (2.0 * n), z, z],
                    [z, z, o, z],
                    [z, z, z, o],
                ]),
                _ => {
                    let e = k * k * (n * n - 1.0) / 2.0;
                    m([
                        [(n + 1.0) / (2.0 * n), (n - 1.0) / (2.0 * n), z, z],
                        [(n - 1.0) / (2.0 * n), (n + 1.0) / (2.0 * n), z, z],
                        [e, e, o, z],
                        [z, z, z, o],
                    ])
                }
            }
        }
        FamilyTag::QA1 | FamilyTag::QA0 => {
            let w = x;
            if w.norm() < DEGENERACY_RADIUS
                || (w * w - 1.0).norm() < DEGENERACY_RADIUS
                || !crate::scalar::is_finite(w)
            {
                return Err(Error::ChartDegenerate(format!("w = {w}")));
            }
            if kappa.is_none() || k.norm() == 0.0 {
                return Err(Error::ChartDegenerate("kappa missing or zero".into()));
            }
            let d = 1.0 - w * w;
            if family == FamilyTag::QA1 {
                m([
                    [o, z, z, z],
                    [z, o, z, z],
                    [z, z, (1.0 - k * w) / d, w * (k - w) / d],
                    [z, z, (k - w) / (k * d), w * (1.0 - k * w) / (k * d)],
                ])
            } else {
                let u = w * (1.0 - k * w) / (k * d);
                let v = w * (k - w) / (k * d);
                m([
                    [u, v, z, z],
                    [v, u, z, z],
                    [z, z, w / k, -(1.0 - k * w) * (k - w) / (k * k * w)],
                    [z, z, z, o],
                ])
            }
        }
    };
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| Error::ChartDegenerate("chart matrix is singular".into()))?;
    let scale = if family == FamilyTag::QA0 { x / k } else { o };
    let chart = ChartMatrix {
        a,
        a_inv,
        param: *p,
        family,
        kappa,
        scale,
    };
    let (abs_res, size) = chart.normalization_error()?;
    if abs_res > 1e-10 * size {
        return Err(Error::ChartDegenerate(format!(
            "normalization residual {abs_res:e}"
        )));
    }
    Ok(chart)
}

impl ChartMatrix {
    /// M_λ at this chart's parameter.
    pub fn fiber_form(&self) -> Result<SymQuadForm> {
        let l = lambda_of(&self.param, self.kappa)?;
        let qi = q_infinity(self.family, self.kappa.unwrap_or(re(0.0)));
        Ok(segre_quadric().lin(re(1.0), &qi, -l))
    }

    /// (‖AᵀM_λA − c·M₀‖_F, ‖A‖²‖M_λ‖) for scaling.
    fn normalization_error(&self) -> Result<(Real, Real)> {
        let ml = self.fiber_form()?.matrix();
        let m0 = segre_quadric().matrix();
        let r = self.a.transpose() * ml * self.a - m0 * self.scale;
        Ok((r.norm(), self.a.norm().powi(2) * ml.norm()))
    }

    /// ‖AᵀM_λA − c·M₀‖_F / ‖M₀‖_F.
    pub fn normalization_residual(&self) -> Result<Real> {
        let (r, _) = self.normalization_error()?;
        Ok(r / segre_quadric().matrix().norm())
    }
}

/// φ(x, y) = A·[x:y:xy:1].
pub fn phi(c: &ChartMatrix, x: &ProjPoint1, y: &ProjPoint1) -> ProjPoint3 {
    segre_embed(x, y)
        .apply(&c.a)
        .expect("chart matrix is invertible")
}

/// Y = A⁻¹X read back as (x, y) with residual |Y₁Y₂ − Y₃Y₄| / max|Y|².
pub fn phi_inverse(c: &ChartMatrix, x: &ProjPoint3) -> (ProjPoint1, ProjPoint1, Real) {
    let yv = c.a_inv * nalgebra::Vector4::from(x.coords());
    let ymax = yv.iter().map(|z| z.norm()).fold(0.0, Real::max);
    let y: Vec<Scalar> = yv.iter().map(|z| z / ymax).collect();
    let residual = (y[0] * y[1] - y[2] * y[3]).norm();
    // on the Segre quadric x = Y1/Y4 = Y3/Y2 and y = Y2/Y4 = Y3/Y1
    let pick = |a: (Scalar, Scalar), b: (Scalar, Scalar)| {
        let na = a.0.norm().max(a.1.norm());
        let nb = b.0.norm().max(b.1.norm());
        let (u, v) = if na >= nb { a } else { b };
        ProjPoint1::new(u, v).expect("nonzero pair")
    };
    let xp = pick((y[0], y[3]), (y[2], y[1]));
    let yp = pick((y[1], y[3]), (y[2], y[0]));
    (xp, yp, residual)
}

/// λ = Q₀(X)/Q∞(X) for the pencil.
pub fn lambda_from_point(pencil: &QuadricPencil, x: &ProjPoint3) -> Result<Scalar> {
    let xs = x.coords();
    let q0 = pencil.m0.eval_raw(&xs);
    let qi = pencil.m_inf.eval_raw(&xs);
    let tol = 1e-12 * (1.0 + pencil.m0.norm() + pencil.m_inf.norm());
    if qi.norm() <= tol {
        if q0.norm() <= tol {
            return Err(Error::OnBaseQuadric);
        }
        return Err(Error::InfiniteLambda);
    }
    Ok(q0 / qi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{build_pencils, example_config};
    use crate::scalar::c;

    fn chart(tag: FamilyTag, pos: Scalar) -> ChartMatrix {
        let cfg = example_config(tag);
        chart_matrix(tag, &cfg.param(pos).unwrap(), cfg.kappa).unwrap()
    }

    #[test]
    fn da1_chart_is_identity_at_unit_nu() {
        let ch = chart(FamilyTag::DA1, re(1.0));
        assert!((ch.a - Matrix4::identity()).norm() < 1e-15);
        let x = phi(
            &ch,
            &ProjPoint1::affine(re(2.0)),
            &ProjPoint1::affine(re(3.0)),
        );
        let e = ProjPoint3::new([re(2.0), re(3.0), re(6.0), re(1.0)]).unwrap();
        assert!(x.dist(&e) < 1e-15);
        let (xx, yy, r) = phi_inverse(&ch, &e);
        assert_eq!(r, 0.0);
        assert!((xx.value().unwrap() - re(2.0)).norm() < 1e-15);
        assert!((yy.value().unwrap() - re(3.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_parameters_rejected() {
        let cfg = example_config(FamilyTag::DA1);
        let p = cfg.param(re(0.0)).unwrap();
        assert!(matches!(
            chart_matrix(FamilyTag::DA1, &p, None),
            Err(Error::ChartDegenerate(_))
        ));
        let cfg = example_config(FamilyTag::QA0);
        let p = cfg.param(re(-1.0)).unwrap();
        assert!(matches!(
            chart_matrix(FamilyTag::QA0, &p, cfg.kappa),
            Err(Error::ChartDegenerate(_))
        ));
    }

    #[test]
    fn qa0_scale_at_w_equal_kappa() {
        let ch = chart(FamilyTag::QA0, re(2.0));
        assert_eq!(ch.scale, re(1.0));
        assert!(ch.normalization_residual().unwrap() < 1e-12);
    }

    #[test]
    fn normalization_all_families() {
        for tag in FamilyTag::ALL {
            let ch = chart(tag, c(1.37, 0.21));
            assert!(ch.normalization_residual().unwrap() < 1e-12, "{tag}");
        }
    }

    #[test]
    fn qa1_image_on_segre_quadric_at_w_kappa() {
        let ch = chart(FamilyTag::QA1, re(2.0));
        let x = phi(
            &ch,
            &ProjPoint1::affine(c(0.3, 0.2)),
            &ProjPoint1::affine(re(-1.1)),
        );
        assert!(crate::pencil_core::eval_quadric(&segre_quadric(), &x).norm() < 1e-14);
    }

    #[test]
    fn displayed_inverse_formula_da1() {
        // x = ((1+ν)X1 − (1−ν)X2) / (2X4)
        let nu = c(1.4, -0.3);
        let ch = chart(FamilyTag::DA1, nu);
        let (x0, y0) = (c(0.3, 0.2), c(-0.5, 0.9));
        let big = phi(&ch, &ProjPoint1::affine(x0), &ProjPoint1::affine(y0)).coords();
        let x = ((1.0 + nu) * big[0] - (1.0 - nu) * big[1]) / (2.0 * big[3]);
        assert!((x - x0).norm() < 1e-13);
    }

    fn chart_image(tag: FamilyTag, pos: Scalar, x0: Scalar, y0: Scalar) -> [Scalar; 4] {
        let ch = chart(tag, pos);
        phi(&ch, &ProjPoint1::affine(x0), &ProjPoint1::affine(y0)).coords()
    }

    #[test]
    fn displayed_inverse_formula_qa1() {
        let (w, k) = (c(1.6, 0.2), re(2.0));
        let (x0, y0) = (c(0.3, 0.2), c(-0.5, 0.9));
        let b = chart_image(FamilyTag::QA1, w, x0, y0);
        let num = (1.0 - k * w) * b[2] - k * (k - w) * b[3];
        assert!((num / ((1.0 - k * k) * b[1]) - x0).norm() < 1e-12);
        assert!((num / ((1.0 - k * k) * b[0]) - y0).norm() < 1e-12);
        let alt = w * (1.0 - k * k) * b[0] / (k * (1.0 - k * w) * b[3] - (k - w) * b[2]);
        assert!((alt - x0).norm() < 1e-12);
    }

    #[test]
    fn displayed_inverse_formula_da0() {
        let nu = c(1.2, 0.4);
        let (x0, y0) = (c(0.3, 0.2), c(-0.5, 0.9));
        let b = chart_image(FamilyTag::DA0, nu, x0, y0);
        let x = ((nu + 1.0) * b[0] - (nu - 1.0) * b[1]) / (2.0 * b[3]);
        let y = ((nu + 1.0) * b[1] - (nu - 1.0) * b[0]) / (2.0 * b[3]);
        assert!((x - x0).norm() < 1e-13 && (y - y0).norm() < 1e-13);
    }

    #[test]
    fn displayed_inverse_formula_qa0() {
        let (w, k) = (c(1.6, 0.2), re(2.0));
        let (x0, y0) = (c(0.3, 0.2), c(-0.5, 0.9));
        let b = chart_image(FamilyTag::QA0, w, x0, y0);
        let f = k / w / ((1.0 - k * k) * b[3]);
        let x = f * ((1.0 - k * w) * b[0] - (k - w) * b[1]);
        let y = f * ((1.0 - k * w) * b[1] - (k - w) * b[0]);
        assert!((x - x0).norm() < 1e-12 && (y - y0).norm() < 1e-12);
    }

    #[test]
    fn base_point_inverse_da1() {
        let cfg = example_config(FamilyTag::DA1);
        let nu = re(1.3);
        let ch = chart(FamilyTag::DA1, nu);
        let s = cfg.base_points_homogeneous();
        let (x, y, _) = phi_inverse(&ch, &s[0]);
        assert!((x.value().unwrap() - cfg.points[0]).norm() < 1e-13);
        assert!((y.value().unwrap() + cfg.points[0]).norm() < 1e-13);
        let (x, y, _) = phi_inverse(&ch, &s[4]);
        let a5 = cfg.points[4];
        assert!((x.value().unwrap() - ((nu - 1.0) / 2.0 + a5)).norm() < 1e-13);
        assert!((y.value().unwrap() - ((1.0 + nu) / 2.0 - a5)).norm() < 1e-13);
    }

    #[test]
    fn lambda_from_point_cases() {
        let cfg = example_config(FamilyTag::DA1);
        let pencils = build_pencils(&cfg).unwrap();
        let s = cfg.base_points_homogeneous();
        assert_eq!(
            lambda_from_point(&pencils.q, &s[0]),
            Err(Error::OnBaseQuadric)
        );
        let ch = chart(FamilyTag::DA1, c(0.8, 0.4));
        let x = phi(
            &ch,
            &ProjPoint1::affine(c(0.1, 0.3)),
            &ProjPoint1::affine(re(0.7)),
        );
        let l = lambda_from_point(&pencils.q, &x).unwrap();
        let expect = lambda_of(&ch.param, None).unwrap();
        assert!((l - expect).norm() < 1e-12);
        let on_q0 = ProjPoint3::new([re(2.0), re(3.0), re(6.0), re(1.0)]).unwrap();
        assert_eq!(lambda_from_point(&pencils.q, &on_q0).unwrap(), re(0.0));
    }
}
