//! Positions on the double cover λ ↦ √Δ(λ): additive ν (step δ) or
//! multiplicative w (step q), with the family-specific λ-maps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pencil_core::PencilTag;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    DA1,
    DD4,
    QA1,
    DA0,
    QA0,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 5] = [
        FamilyTag::DA1,
        FamilyTag::DD4,
        FamilyTag::QA1,
        FamilyTag::DA0,
        FamilyTag::QA0,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::DA1 => "dA1",
            FamilyTag::DD4 => "dD4",
            FamilyTag::QA1 => "qA1",
            FamilyTag::DA0 => "dA0",
            FamilyTag::QA0 => "qA0",
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, FamilyTag::DA1 | FamilyTag::DD4 | FamilyTag::DA0)
    }

    pub fn needs_kappa(&self) -> bool {
        matches!(self, FamilyTag::QA1 | FamilyTag::DA0 | FamilyTag::QA0)
    }

    /// Number of point parameters (a_i, c_i or z_i).
    pub fn n_points(&self) -> usize {
        if *self == FamilyTag::DD4 {
            4
        } else {
            8
        }
    }

    pub fn expected_type(&self) -> PencilTag {
        match self {
            FamilyTag::DA1 => PencilTag::V,
            FamilyTag::DD4 => PencilTag::VI,
            FamilyTag::QA1 => PencilTag::IV,
            FamilyTag::DA0 => PencilTag::III,
            FamilyTag::QA0 => PencilTag::II,
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    Additive { nu: Scalar, delta: Scalar },
    Multiplicative { w: Scalar, q: Scalar },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParam {
    pub kind: ParamKind,
    pub family: FamilyTag,
}

impl UniformParam {
    /// Parameter of the family's kind at `position` with the given step.
    pub fn new(family: FamilyTag, position: Scalar, step: Scalar) -> Result<Self> {
        let kind = if family.is_additive() {
            ParamKind::Additive {
                nu: position,
                delta: step,
            }
        } else {
            if position.norm() == 0.0 {
                return Err(Error::BranchPole("w = 0".into()));
            }
            if step.norm() == 0.0 {
                return Err(Error::DegenerateParameter("q = 0".into()));
            }
            ParamKind::Multiplicative {
                w: position,
                q: step,
            }
        };
        Ok(UniformParam { kind, family })
    }

    /// ν or w.
    pub fn position(&self) -> Scalar {
        match self.kind {
            ParamKind::Additive { nu, .. } => nu,
            ParamKind::Multiplicative { w, .. } => w,
        }
    }

    /// δ or q.
    pub fn step(&self) -> Scalar {
        match self.kind {
            ParamKind::Additive { delta, .. } => delta,
            ParamKind::Multiplicative { q, .. } => q,
        }
    }

    pub fn with_position(&self, x: Scalar) -> UniformParam {
        let kind = match self.kind {
            ParamKind::Additive { delta, .. } => ParamKind::Additive { nu: x, delta },
            ParamKind::Multiplicative { q, .. } => ParamKind::Multiplicative { w: x, q },
        };
        UniformParam {
            kind,
            family: self.family,
        }
    }

    /// The parameter with step replaced (δ = 0 / q = 1 gives the autonomous map).
    pub fn with_step(&self, s: Scalar) -> UniformParam {
        let kind = match self.kind {
            ParamKind::Additive { nu, .. } => ParamKind::Additive { nu, delta: s },
            ParamKind::Multiplicative { w, .. } => ParamKind::Multiplicative { w, q: s },
        };
        UniformParam {
            kind,
            family: self.family,
        }
    }

    /// Position after `half_steps` half-steps, without constructing a new param.
    pub fn position_at(&self, half_steps: i32) -> Scalar {
        match self.kind {
            ParamKind::Additive { nu, delta } => nu + delta * half_steps as Real,
            ParamKind::Multiplicative { w, q } => w * q.powi(half_steps),
        }
    }
}

/// ν + h·δ, or w·qʰ.
pub fn shift(p: &UniformParam, half_steps: i32) -> UniformParam {
    p.with_position(p.position_at(half_steps))
}

fn kappa_of(p: &UniformParam, kappa: Option<Scalar>) -> Result<Scalar> {
    let k = kappa.ok_or_else(|| Error::BranchPole(format!("{} requires kappa", p.family)))?;
    if k.norm() == 0.0 || (k * k - 1.0).norm() == 0.0 {
        return Err(Error::BranchPole("kappa in {0, 1, -1}".into()));
    }
    Ok(k)
}

fn lambda_at(
    family: FamilyTag,
    x: Scalar,
    kappa: Option<Scalar>,
    p: &UniformParam,
) -> Result<Scalar> {
    match family {
        FamilyTag::DA1 | FamilyTag::DD4 => Ok((1.0 - x * x) / 4.0),
        FamilyTag::DA0 => Ok((x * x - 1.0) / 4.0),
        FamilyTag::QA1 | FamilyTag::QA0 => {
            let k = kappa_of(p, kappa)?;
            if x.norm() == 0.0 {
                return Err(Error::BranchPole("w = 0".into()));
            }
            let d = (1.0 - k * k) * (1.0 - k * k) * x;
            Ok((k - x) * (1.0 - k * x) / d)
        }
    }
}

fn sqrt_delta_at(
    family: FamilyTag,
    x: Scalar,
    kappa: Option<Scalar>,
    p: &UniformParam,
) -> Result<Scalar> {
    match family {
        FamilyTag::DA1 | FamilyTag::DD4 | FamilyTag::DA0 => Ok(x),
        FamilyTag::QA1 | FamilyTag::QA0 => {
            let k = kappa_of(p, kappa)?;
            if x.norm() == 0.0 {
                return Err(Error::BranchPole("w = 0".into()));
            }
            Ok(k * (1.0 - x * x) / (x * (1.0 - k * k)))
        }
    }
}

pub fn lambda_of(p: &UniformParam, kappa: Option<Scalar>) -> Result<Scalar> {
    lambda_at(p.family, p.position(), kappa, p)
}

pub fn sqrt_delta_of(p: &UniformParam, kappa: Option<Scalar>) -> Result<Scalar> {
    sqrt_delta_at(p.family, p.position(), kappa, p)
}

/// |λ(p) − λ(p*)| + |√Δ(p) + √Δ(p*)| with p* = −ν or 1/w.
pub fn deck_involution_check(p: &UniformParam, kappa: Option<Scalar>) -> Result<Real> {
    let x = p.position();
    let xs = if p.family.is_additive() { -x } else { 1.0 / x };
    let l = lambda_at(p.family, x, kappa, p)? - lambda_at(p.family, xs, kappa, p)?;
    let s = sqrt_delta_at(p.family, x, kappa, p)? + sqrt_delta_at(p.family, xs, kappa, p)?;
    Ok(l.norm() + s.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, re};

    fn add(f: FamilyTag, nu: Real) -> UniformParam {
        UniformParam::new(f, re(nu), re(0.1)).unwrap()
    }

    #[test]
    fn additive_lambda_examples() {
        assert_eq!(
            lambda_of(&add(FamilyTag::DA1, 0.0), None).unwrap(),
            re(0.25)
        );
        assert_eq!(lambda_of(&add(FamilyTag::DA1, 1.0), None).unwrap(), re(0.0));
        assert_eq!(
            sqrt_delta_of(&add(FamilyTag::DA1, 3.0), None).unwrap(),
            re(3.0)
        );
    }

    #[test]
    fn multiplicative_examples() {
        let p = UniformParam::new(FamilyTag::QA1, re(1.0), re(1.2)).unwrap();
        let l = lambda_of(&p, Some(re(2.0))).unwrap();
        assert!((l - re(-1.0 / 9.0)).norm() < 1e-15);
        assert_eq!(sqrt_delta_of(&p, Some(re(2.0))).unwrap(), re(0.0));
        let p = UniformParam::new(FamilyTag::QA0, re(2.0), re(1.2)).unwrap();
        assert!((sqrt_delta_of(&p, Some(re(2.0))).unwrap() - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn kappa_required_and_restricted() {
        let p = UniformParam::new(FamilyTag::QA0, re(2.0), re(1.2)).unwrap();
        assert!(matches!(lambda_of(&p, None), Err(Error::BranchPole(_))));
        assert!(matches!(
            lambda_of(&p, Some(re(1.0))),
            Err(Error::BranchPole(_))
        ));
        assert!(UniformParam::new(FamilyTag::QA0, re(0.0), re(1.2)).is_err());
    }

    #[test]
    fn shift_examples() {
        let p = UniformParam::new(FamilyTag::DA1, re(1.0), re(0.1)).unwrap();
        assert!((shift(&p, 2).position() - re(1.2)).norm() < 1e-15);
        assert_eq!(shift(&p, 0), p);
        let p = UniformParam::new(FamilyTag::QA1, re(1.0), re(2.0)).unwrap();
        assert_eq!(shift(&p, -1).position(), re(0.5));
    }

    #[test]
    fn deck_residuals_vanish() {
        assert_eq!(
            deck_involution_check(&add(FamilyTag::DA1, 0.7), None).unwrap(),
            0.0
        );
        assert_eq!(
            deck_involution_check(&add(FamilyTag::DA0, -2.0), None).unwrap(),
            0.0
        );
        let p = UniformParam::new(FamilyTag::QA1, re(3.0), re(1.1)).unwrap();
        assert!(deck_involution_check(&p, Some(re(2.0))).unwrap() < 1e-15);
        let p = UniformParam::new(FamilyTag::QA0, c(0.4, 1.1), re(1.1)).unwrap();
        assert!(deck_involution_check(&p, Some(c(2.0, 0.3))).unwrap() < 1e-14);
    }

    #[test]
    fn family_names_round_trip() {
        for f in FamilyTag::ALL {
            assert_eq!(f.name().parse::<FamilyTag>().unwrap(), f);
        }
        assert!("eA8".parse::<FamilyTag>().is_err());
    }
}
