//! 2×2 Möbius matrices acting on P¹. Every one-variable step of the maps is a
//! Möbius image of the moving coordinate, so infinity is handled uniformly.

use crate::error::{Error, Result};
use crate::pencil_core::ProjPoint1;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub m: [[Scalar; 2]; 2],
}

impl Mobius {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Self {
        Mobius {
            m: [[a, b], [c, d]],
        }
    }

    pub fn identity() -> Self {
        let o = Scalar::new(1.0, 0.0);
        let z = Scalar::new(0.0, 0.0);
        Mobius::new(o, z, z, o)
    }

    /// t ↦ 1/t
    pub fn reciprocal() -> Self {
        let o = Scalar::new(1.0, 0.0);
        let z = Scalar::new(0.0, 0.0);
        Mobius::new(z, o, o, z)
    }

    /// t ↦ (n/d)·t for a homogeneous ratio (n:d).
    pub fn scaling(n: Scalar, d: Scalar) -> Self {
        let z = Scalar::new(0.0, 0.0);
        Mobius::new(n, z, z, d)
    }

    /// t ↦ a·t + b
    pub fn affine(a: Scalar, b: Scalar) -> Self {
        let o = Scalar::new(1.0, 0.0);
        let z = Scalar::new(0.0, 0.0);
        Mobius::new(a, b, z, o)
    }

    /// self ∘ other
    pub fn compose(&self, o: &Mobius) -> Mobius {
        let a = &self.m;
        let b = &o.m;
        let mut r = [[Scalar::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mobius { m: r }
    }

    /// Adjugate; inverse up to scale.
    pub fn adjugate(&self) -> Mobius {
        let [[a, b], [c, d]] = self.m;
        Mobius::new(d, -b, -c, a)
    }

    pub fn det(&self) -> Scalar {
        let [[a, b], [c, d]] = self.m;
        a * d - b * c
    }

    pub fn norm(&self) -> Real {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<Real>()
            .sqrt()
    }

    /// Applies the map; returns the image and the amplification ‖M‖‖v‖/‖Mv‖.
    /// A (numerically) vanishing image vector means the input is an indeterminacy point.
    pub fn apply(&self, p: &ProjPoint1, tol: Real) -> Result<(ProjPoint1, Real)> {
        let (u, v) = p.uv();
        let nu = self.m[0][0] * u + self.m[0][1] * v;
        let nv = self.m[1][0] * u + self.m[1][1] * v;
        let out = (nu.norm_sqr() + nv.norm_sqr()).sqrt();
        let inp = (u.norm_sqr() + v.norm_sqr()).sqrt() * self.norm();
        if !(out > tol * inp) {
            return Err(Error::Indeterminate(format!(
                "Mobius image vanishes (|Mv| = {out:e})"
            )));
        }
        Ok((ProjPoint1::new(nu, nv)?, inp / out))
    }
}

/// Solves (t−A)(y−A) / ((t−B)(y−B)) = R for t, with R given as (n:d).
/// This is t = g⁻¹(R / g(y)) with g(t) = (t−A)/(t−B).
pub fn cross_ratio_solve(a: Scalar, b: Scalar, rn: Scalar, rd: Scalar) -> Mobius {
    let o = Scalar::new(1.0, 0.0);
    let g = Mobius::new(o, -a, o, -b);
    g.adjugate()
        .compose(&Mobius::scaling(rn, rd))
        .compose(&Mobius::reciprocal())
        .compose(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, re};

    #[test]
    fn compose_matches_sequential_application() {
        let f = Mobius::new(re(1.0), re(2.0), re(3.0), re(-1.0));
        let g = Mobius::new(c(0.0, 1.0), re(1.0), re(1.0), re(4.0));
        let y = ProjPoint1::affine(c(0.3, -0.2));
        let (a, _) = f.compose(&g).apply(&y, 1e-14).unwrap();
        let (t, _) = g.apply(&y, 1e-14).unwrap();
        let (b, _) = f.apply(&t, 1e-14).unwrap();
        assert!(a.dist(&b) < 1e-15);
    }

    #[test]
    fn cross_ratio_solution_satisfies_relation() {
        let (a, b, r) = (c(0.2, 0.1), c(-1.0, 0.5), c(2.0, -0.3));
        let y = c(0.7, 0.4);
        let m = cross_ratio_solve(a, b, r, re(1.0));
        let t = m
            .apply(&ProjPoint1::affine(y), 1e-14)
            .unwrap()
            .0
            .value()
            .unwrap();
        let lhs = (t - a) * (y - a) / ((t - b) * (y - b));
        assert!((lhs - r).norm() < 1e-13);
        // involution
        let back = m
            .apply(&ProjPoint1::affine(t), 1e-14)
            .unwrap()
            .0
            .value()
            .unwrap();
        assert!((back - y).norm() < 1e-13);
    }

    #[test]
    fn infinite_ratio_sends_everything_to_b() {
        let m = cross_ratio_solve(re(1.0), re(3.0), re(1.0), re(0.0));
        let t = m.apply(&ProjPoint1::affine(re(0.5)), 1e-14).unwrap().0;
        assert!((t.value().unwrap() - re(3.0)).norm() < 1e-14);
        assert!(m.apply(&ProjPoint1::affine(re(3.0)), 1e-14).is_err());
    }
}
