//! dD4 as a confluent limit of dA1. With a_{i+4} = a_i + ½ the dA1 points on the
//! two lines pair up with offset (½, ½); scaling the plane by ε merges each pair
//! into a point with tangent (1, 1), which is the dD4 configuration.

use qpencil::families::make_config;
use qpencil::qrt::{i1_fiber, i2_fiber, FiberContext};
use qpencil::scalar::{c, re};
use qpencil::{FamilyTag, ProjPoint1, Scalar};

const A: [(f64, f64); 4] = [(0.3, 0.1), (-0.7, 0.2), (1.1, -0.3), (-0.2, -0.6)];

fn scaled_da1(eps: f64) -> FiberContext {
    let mut pts: Vec<Scalar> = A.iter().map(|&(a, b)| c(a, b) / eps).collect();
    let shifted: Vec<Scalar> = pts.iter().map(|z| z + 0.5).collect();
    pts.extend(shifted);
    let cfg = make_config(FamilyTag::DA1, None, pts, re(0.1), false).unwrap();
    FiberContext::new(&cfg, re(1.0))
}

fn dd4() -> FiberContext {
    let pts = A.iter().map(|&(a, b)| c(a, b)).collect();
    let cfg = make_config(FamilyTag::DD4, None, pts, re(0.1), false).unwrap();
    FiberContext::new(&cfg, re(1.0))
}

/// max over a few points of |i^{D4} − ε·i^{A1}(·/ε)| for both involutions.
fn gap(eps: f64) -> f64 {
    let (a1, d4) = (scaled_da1(eps), dd4());
    let pt = |z: Scalar| ProjPoint1::affine(z);
    let mut worst: f64 = 0.0;
    for (x, y) in [
        (c(0.4, 0.3), c(-0.9, 0.1)),
        (c(-1.3, 0.2), c(0.5, -0.4)),
        (c(2.0, -1.0), c(0.7, 0.8)),
    ] {
        let ya = i1_fiber(&a1, &pt(x / eps), &pt(y / eps))
            .unwrap()
            .value()
            .unwrap()
            * eps;
        let yd = i1_fiber(&d4, &pt(x), &pt(y)).unwrap().value().unwrap();
        let xa = i2_fiber(&a1, &pt(x / eps), &pt(y / eps))
            .unwrap()
            .value()
            .unwrap()
            * eps;
        let xd = i2_fiber(&d4, &pt(x), &pt(y)).unwrap().value().unwrap();
        worst = worst.max((ya - yd).norm()).max((xa - xd).norm());
    }
    worst
}

#[test]
fn da1_involutions_converge_to_dd4_linearly() {
    let (g3, g4) = (gap(1e-3), gap(1e-4));
    assert!(g3 < 1e-1 && g4 < 1e-2, "gaps {g3:e} {g4:e}");
    // first order: shrinking ε tenfold shrinks the gap about tenfold
    let r = g3 / g4;
    assert!((5.0..20.0).contains(&r), "ratio {r}");
}
