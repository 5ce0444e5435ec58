//! Dense univariate polynomials over the scalar field (coefficients low to high).

use nalgebra::DMatrix;

use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(coeffs: Vec<Scalar>) -> Self {
        let mut p = Poly { coeffs };
        if p.coeffs.is_empty() {
            p.coeffs.push(Scalar::new(0.0, 0.0));
        }
        p
    }

    pub fn constant(a: Scalar) -> Self {
        Poly::new(vec![a])
    }

    /// a + b·t
    pub fn linear(a: Scalar, b: Scalar) -> Self {
        Poly::new(vec![a, b])
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = Scalar::new(0.0, 0.0);
        Poly::new(
            (0..n)
                .map(|i| *self.coeffs.get(i).unwrap_or(&z) + *o.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn scale(&self, s: Scalar) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(Scalar::new(-1.0, 0.0)))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![Scalar::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn eval(&self, t: Scalar) -> Scalar {
        self.coeffs
            .iter()
            .rev()
            .fold(Scalar::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(Scalar::new(0.0, 0.0));
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as Real)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> Real {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, Real::max)
    }

    /// Degree after dropping leading coefficients below `tol·max|c|`.
    /// `None` for the zero polynomial.
    pub fn degree(&self, tol: Real) -> Option<usize> {
        let m = self.max_abs();
        if m == 0.0 {
            return None;
        }
        (0..self.coeffs.len())
            .rev()
            .find(|&i| self.coeffs[i].norm() > tol * m)
    }

    pub fn is_zero(&self, tol: Real) -> bool {
        self.degree(tol).is_none()
    }

    /// Roots of the truncated polynomial (companion matrix eigenvalues, polished
    /// by a few Newton steps).
    pub fn roots(&self, tol: Real) -> Vec<Scalar> {
        let d = match self.degree(tol) {
            Some(d) if d > 0 => d,
            _ => return vec![],
        };
        let lead = self.coeffs[d];
        if d == 1 {
            return vec![-self.coeffs[0] / lead];
        }
        let mut comp = DMatrix::<Scalar>::zeros(d, d);
        for i in 1..d {
            comp[(i, i - 1)] = Scalar::new(1.0, 0.0);
        }
        for i in 0..d {
            comp[(i, d - 1)] = -self.coeffs[i] / lead;
        }
        let eig = comp.clone().schur().eigenvalues();
        let mut roots: Vec<Scalar> = match eig {
            Some(v) => v.iter().copied().collect(),
            None => durand_kerner(&self.coeffs[..=d]),
        };
        let truncated = Poly::new(self.coeffs[..=d].to_vec());
        let dp = truncated.derivative();
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let f = truncated.eval(*r);
                let g = dp.eval(*r);
                if g.norm() == 0.0 {
                    break;
                }
                let nr = *r - f / g;
                if truncated.eval(nr).norm() < f.norm() {
                    *r = nr;
                } else {
                    break;
                }
            }
        }
        roots
    }
}

fn durand_kerner(c: &[Scalar]) -> Vec<Scalar> {
    let d = c.len() - 1;
    let lead = c[d];
    let monic: Vec<Scalar> = c.iter().map(|x| x / lead).collect();
    let p = Poly::new(monic);
    let seed = Scalar::new(0.4, 0.9);
    let mut z: Vec<Scalar> = (0..d).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let prev = z.clone();
        for i in 0..d {
            let mut den = Scalar::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let f = p.eval(z[i]);
            z[i] -= f / den;
        }
        let moved: Real = z.iter().zip(&prev).map(|(a, b)| (a - b).norm()).sum();
        if moved < 1e-15 {
            break;
        }
    }
    z
}
