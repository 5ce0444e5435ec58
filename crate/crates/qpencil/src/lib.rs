//! Discrete Painlevé equations as birational maps acting on pencils of quadrics
//! in P³: pencils and their classification, uniformizing charts, fibered QRT
//! involutions, the deformation map L and the resulting non-autonomous orbits.

pub mod charts;
pub mod config;
pub mod deformation;
pub mod engine;
pub mod error;
pub mod families;
pub mod mobius;
pub mod pencil_core;
pub mod poly;
pub mod qrt;
pub mod scalar;
pub mod uniformization;

pub use error::{Error, Result};
pub use families::FamilyConfig;
pub use pencil_core::{ProjPoint1, ProjPoint3, QuadricPencil, SymQuadForm};
pub use scalar::{Real, Scalar};
pub use uniformization::{FamilyTag, UniformParam};
