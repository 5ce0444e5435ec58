//! The orbit file written by `orbit` and read back by `verify --orbit`.

use qpencil::engine::{max_residual, verify_recurrence, OrbitState, OrbitTrace};
use qpencil::families::make_config;
use qpencil::scalar::c;
use qpencil::{Error, FamilyConfig, FamilyTag, ProjPoint1, Real, Result, UniformParam};
use serde::{Deserialize, Serialize};

use crate::output::{cj, finite, pj};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub family: String,
    pub kappa: Option<[Real; 2]>,
    pub points: Vec<[Real; 2]>,
    pub step: [Real; 2],
    pub symmetric: bool,
}

impl ConfigEcho {
    pub fn of(cfg: &FamilyConfig) -> Self {
        ConfigEcho {
            family: cfg.tag.to_string(),
            kappa: cfg.kappa.map(cj),
            points: cfg.points.iter().map(|&z| cj(z)).collect(),
            step: cj(cfg.step),
            symmetric: cfg.symmetric,
        }
    }

    pub fn rebuild(&self) -> Result<FamilyConfig> {
        let tag: FamilyTag = self.family.parse()?;
        let z = |v: [Real; 2]| c(v[0], v[1]);
        make_config(
            tag,
            self.kappa.map(z),
            self.points.iter().map(|&v| z(v)).collect(),
            z(self.step),
            self.symmetric,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub n: Real,
    /// null at infinity
    pub x: Option<[Real; 2]>,
    pub y: Option<[Real; 2]>,
    pub position: [Real; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halt {
    pub kind: String,
    pub stage: Option<String>,
    pub message: String,
}

impl Halt {
    pub fn of(e: &Error) -> Self {
        let (kind, stage) = match e {
            Error::StageError { stage, .. } => ("StageError", Some(stage.clone())),
            Error::PrecisionExhausted { .. } => ("PrecisionExhausted", None),
            _ => ("Error", None),
        };
        Halt {
            kind: kind.into(),
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFile {
    pub command: String,
    pub config: ConfigEcho,
    pub seed: u64,
    pub tol: Real,
    pub steps: usize,
    pub autonomous_mismatch: bool,
    pub states: Vec<StateRow>,
    /// per step, both equations; null where a coordinate was infinite
    pub residuals: Vec<[Option<Real>; 2]>,
    pub max_residual: Option<Real>,
    pub error_estimate: Option<Real>,
    pub pass: bool,
    pub halted: Option<Halt>,
}

pub fn state_row(s: &OrbitState) -> StateRow {
    StateRow {
        n: s.n,
        x: pj(&s.x),
        y: pj(&s.y),
        position: cj(s.p.position()),
    }
}

pub fn residual_rows(res: &[[Real; 2]]) -> Vec<[Option<Real>; 2]> {
    res.iter().map(|r| [finite(r[0]), finite(r[1])]).collect()
}

impl OrbitFile {
    /// Config and trace as stored in the file.
    pub fn trace(&self) -> Result<(FamilyConfig, OrbitTrace)> {
        let cfg = self.config.rebuild()?;
        let point = |v: Option<[Real; 2]>| {
            v.map_or(ProjPoint1::infinity(), |v| {
                ProjPoint1::affine(c(v[0], v[1]))
            })
        };
        let states = self
            .states
            .iter()
            .map(|r| {
                let p = UniformParam::new(cfg.tag, c(r.position[0], r.position[1]), cfg.step)?;
                Ok(OrbitState::new(r.n, point(r.x), point(r.y), p))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            cfg,
            OrbitTrace {
                states,
                intermediates: vec![],
            },
        ))
    }

    /// Recomputes the residuals of the stored states.
    pub fn recheck(&self) -> Result<(Vec<[Real; 2]>, Real)> {
        let (cfg, trace) = self.trace()?;
        let res = verify_recurrence(&cfg, &trace)?;
        let m = max_residual(&res);
        Ok((res, m))
    }
}
