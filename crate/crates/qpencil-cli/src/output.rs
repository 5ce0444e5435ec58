//! Serialization helpers. JSON carries complex numbers as [re, im] and points at
//! infinity as null; CSV uses "re+imi" and "inf".

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use qpencil::config::format_complex;
use qpencil::{ProjPoint1, Real, Scalar};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn cj(z: Scalar) -> [Real; 2] {
    [z.re, z.im]
}

pub fn pj(p: &ProjPoint1) -> Option<[Real; 2]> {
    p.value().map(cj)
}

pub fn cs(z: Scalar) -> String {
    format_complex(z)
}

pub fn ps(p: &ProjPoint1) -> String {
    p.value().map_or_else(|| "inf".to_string(), cs)
}

/// JSON has no infinity; non-finite reals become null.
pub fn finite(x: Real) -> Option<Real> {
    x.is_finite().then_some(x)
}

/// Where a report goes: a file if --out was given, stdout otherwise.
pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Sink {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn json<T: Serialize>(&self, v: &T) -> io::Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        w.flush()
    }

    /// A table preceded by `# key=value` metadata lines.
    pub fn csv(
        &self,
        meta: &[(&str, String)],
        header: &[&str],
        rows: &[Vec<String>],
    ) -> io::Result<()> {
        let mut w = self.writer()?;
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        let mut c = csv::Writer::from_writer(w);
        c.write_record(header)?;
        for r in rows {
            c.write_record(r)?;
        }
        c.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qpencil::scalar::c;

    #[test]
    fn complex_encodings() {
        assert_eq!(cj(c(1.5, -2.0)), [1.5, -2.0]);
        assert_eq!(cs(c(1.5, -2.0)), "1.5-2i");
        assert_eq!(pj(&ProjPoint1::infinity()), None);
        assert_eq!(ps(&ProjPoint1::infinity()), "inf");
        assert_eq!(finite(Real::INFINITY), None);
    }
}
