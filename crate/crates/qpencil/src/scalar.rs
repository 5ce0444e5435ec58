//! Scalar backend. Everything in the crate computes over `Scalar`; swapping the
//! alias (and `EPS`) is enough to move to another complex type.

pub use num_complex::Complex64;

pub type Scalar = Complex64;
pub type Real = f64;

/// Machine epsilon of the backend.
pub const EPS: Real = f64::EPSILON;

/// Default relative comparison tolerance.
pub const DEFAULT_TOL: Real = 1e-9;

#[inline]
pub fn c(re: Real, im: Real) -> Scalar {
    Scalar::new(re, im)
}

#[inline]
pub fn re(x: Real) -> Scalar {
    Scalar::new(x, 0.0)
}

pub fn is_finite(z: Scalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// |a-b| / (|a|+|b|), zero when both vanish.
pub fn rel_diff(a: Scalar, b: Scalar) -> Real {
    let s = a.norm() + b.norm();
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}
