//! Flat key=value configuration files and complex literals "a+bi".
//!
//! ```text
//! # comments start with '#'
//! family = dA1
//! step = 0.3
//! points = 1/10, 1/5, 3/10, 2/5, 1/2, 3/5, 4/5, 11/10
//! kappa = 2          # qA1, dA0, qA0 only
//! symmetric = false  # optional
//! start = 1.3        # optional orbit start position
//! x0 = 0.37+0.1i     # optional initial point
//! y0 = -0.81+0.2i
//! ```

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::families::{make_config, FamilyConfig};
use crate::scalar::{Real, Scalar};
use crate::uniformization::FamilyTag;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub family: FamilyConfig,
    pub start: Option<Scalar>,
    pub x0: Option<Scalar>,
    pub y0: Option<Scalar>,
    /// true when every literal was a real rational and the constraint was
    /// checked exactly
    pub exact_checked: bool,
}

/// Parses "a", "bi", "a+bi", "a-bi", "i", "-i", and real fractions "p/q".
pub fn parse_complex(s: &str) -> Result<Scalar> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("bad complex literal '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // split at the last sign that is not an exponent sign or the leading one
        let bytes = body.as_bytes();
        let mut split = 0;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = k;
                break;
            }
        }
        let (re_s, im_s) = body.split_at(split);
        let im = match im_s {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => parse_real(v).map_err(|_| bad())?,
        };
        let re = if re_s.is_empty() {
            0.0
        } else {
            parse_real(re_s).map_err(|_| bad())?
        };
        return Ok(Scalar::new(re, im));
    }
    parse_real(&t)
        .map(|r| Scalar::new(r, 0.0))
        .map_err(|_| bad())
}

fn parse_real(s: &str) -> Result<Real> {
    if let Some((n, d)) = s.split_once('/') {
        let n: Real = n.parse().map_err(|_| Error::Parse(s.into()))?;
        let d: Real = d.parse().map_err(|_| Error::Parse(s.into()))?;
        return Ok(n / d);
    }
    s.parse().map_err(|_| Error::Parse(s.into()))
}

/// Exact value of a real decimal or fraction literal, if it is one.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some((n, d)) = t.split_once('/') {
        let (n, d) = (decimal(n)?, decimal(d)?);
        return if d.is_zero() { None } else { Some(n / d) };
    }
    decimal(&t)
}

fn decimal(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{ip}{fp}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = BigInt::from(10u32).pow(fp.len() as u32);
    let v = BigRational::new(num, den);
    Some(if neg { -v } else { v })
}

/// "re+imi" / "re-imi".
pub fn format_complex(z: Scalar) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn list(v: &str) -> Result<Vec<Scalar>> {
    v.split(',').map(parse_complex).collect()
}

/// Checks the family constraint in exact arithmetic when all values are real
/// rationals. Returns Ok(false) if the exact path does not apply.
fn exact_constraint(tag: FamilyTag, points: &[&str], kappa: Option<&str>) -> Result<bool> {
    let pts: Option<Vec<BigRational>> = points.iter().map(|s| parse_rational(s)).collect();
    let Some(p) = pts else { return Ok(false) };
    if kappa.is_some_and(|k| parse_rational(k).is_none()) {
        return Ok(false);
    }
    if p.len() != tag.n_points() {
        return Ok(false);
    }
    let sum = |v: &[BigRational]| v.iter().fold(BigRational::zero(), |a, b| a + b);
    let prod = |v: &[BigRational]| v.iter().fold(BigRational::one(), |a, b| a * b);
    let two = BigRational::from_integer(BigInt::from(2));
    let ok = match tag {
        FamilyTag::DA1 => sum(&p[4..]) - sum(&p[..4]) == two,
        FamilyTag::DD4 => true,
        FamilyTag::QA1 => prod(&p[..4]) == prod(&p[4..]),
        FamilyTag::DA0 => sum(&p).is_zero(),
        FamilyTag::QA0 => prod(&p).is_one(),
    };
    if ok {
        Ok(true)
    } else {
        let what = match tag {
            FamilyTag::DA1 => "a5+a6+a7+a8 - (a1+a2+a3+a4) = 2",
            FamilyTag::QA1 => "c1c2c3c4 / c5c6c7c8 = 1",
            FamilyTag::DA0 => "sum of z_i = 0",
            _ => "product of z_i = 1",
        };
        Err(Error::ConstraintViolated(format!(
            "{what} fails in exact arithmetic"
        )))
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
        let k = k.trim().to_ascii_lowercase();
        if kv.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!(
                "line {}: duplicate key '{k}'",
                no + 1
            )));
        }
    }
    for k in kv.keys() {
        if ![
            "family",
            "step",
            "points",
            "kappa",
            "symmetric",
            "start",
            "x0",
            "y0",
        ]
        .contains(&k.as_str())
        {
            return Err(Error::Parse(format!("unknown key '{k}'")));
        }
    }
    let get = |k: &str| {
        kv.get(k)
            .ok_or_else(|| Error::Parse(format!("missing key '{k}'")))
    };
    let tag: FamilyTag = get("family")?.parse()?;
    let step = parse_complex(get("step")?)?;
    let raw_points: Vec<&str> = get("points")?.split(',').map(str::trim).collect();
    let points = list(get("points")?)?;
    let kappa = kv.get("kappa").map(|k| parse_complex(k)).transpose()?;
    let symmetric = match kv.get("symmetric").map(|s| s.to_ascii_lowercase()) {
        None => false,
        Some(s) if s == "true" || s == "1" || s == "yes" => true,
        Some(s) if s == "false" || s == "0" || s == "no" => false,
        Some(s) => {
            return Err(Error::Parse(format!(
                "symmetric must be true or false, got '{s}'"
            )))
        }
    };
    let exact = exact_constraint(tag, &raw_points, kv.get("kappa").map(String::as_str))?;
    let family = make_config(tag, kappa, points, step, symmetric)?;
    let opt = |k: &str| kv.get(k).map(|v| parse_complex(v)).transpose();
    Ok(ConfigFile {
        family,
        start: opt("start")?,
        x0: opt("x0")?,
        y0: opt("y0")?,
        exact_checked: exact,
    })
}

/// Renders a config back into the file format.
pub fn render_config(cfg: &FamilyConfig) -> String {
    let pts: Vec<String> = cfg.points.iter().map(|&z| format_complex(z)).collect();
    let mut s = format!(
        "family = {}\nstep = {}\npoints = {}\n",
        cfg.tag,
        format_complex(cfg.step),
        pts.join(", ")
    );
    if let Some(k) = cfg.kappa {
        s.push_str(&format!("kappa = {}\n", format_complex(k)));
    }
    if cfg.symmetric {
        s.push_str("symmetric = true\n");
    }
    s
}

pub fn to_f64(r: &BigRational) -> Real {
    r.numer().to_f64().unwrap_or(Real::NAN) / r.denom().to_f64().unwrap_or(Real::NAN)
}
