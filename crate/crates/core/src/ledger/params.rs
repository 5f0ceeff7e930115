//! The parameter set and its plain-text form.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed};

use crate::error::{LabError, Result};

/// Exact rational from "3", "-1/2", "0.125" or "1e-3".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || LabError::Config(format!("not an exact number: {s:?}"));
    if s.contains('/') {
        return BigRational::from_str(s).map_err(|_| bad());
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) || int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(&digits).map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut value = BigRational::from_integer(num);
    if shift >= 0 {
        value *= num::pow(ten, shift as usize);
    } else {
        value /= num::pow(ten, (-shift) as usize);
    }
    Ok(value)
}

fn unit_interval(name: &str, v: &BigRational) -> Result<()> {
    if !v.is_positive() || *v >= BigRational::one() {
        return Err(LabError::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// Exponents b, β, Γ, γ, N_dec, 𝖽 with the base a and C_R. The base is
/// never raised to a power; every comparison is made between exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParameterSet {
    pub a: BigInt,
    pub b: u64,
    pub beta: BigRational,
    pub big_gamma: BigRational,
    pub gamma: BigRational,
    pub n_dec: u64,
    pub d: u64,
    pub c_r: BigRational,
    /// 2 or 3. In two dimensions the L¹ gain of a pipe is r^{1/2}.
    pub dim: usize,
}

impl ParameterSet {
    pub fn validate(&self) -> Result<()> {
        if self.a < BigInt::from(2) {
            return Err(LabError::InvalidParameter(format!("a must be at least 2, got {}", self.a)));
        }
        if self.b < 2 {
            return Err(LabError::InvalidParameter(format!("b must be at least 2, got {}", self.b)));
        }
        if self.beta <= BigRational::one() {
            return Err(LabError::InvalidParameter(format!("beta must exceed 1, got {}", self.beta)));
        }
        unit_interval("Gamma", &self.big_gamma)?;
        unit_interval("gamma", &self.gamma)?;
        if self.n_dec == 0 || self.d == 0 {
            return Err(LabError::InvalidParameter("N_dec and d must be positive".into()));
        }
        if !self.c_r.is_positive() {
            return Err(LabError::InvalidParameter(format!("C_R must be positive, got {}", self.c_r)));
        }
        if self.dim != 2 && self.dim != 3 {
            return Err(LabError::BadDimension(self.dim));
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment. Every key except
    /// `dim` (default 3) is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut a = None;
        let mut b = None;
        let mut beta = None;
        let mut big_gamma = None;
        let mut gamma = None;
        let mut n_dec = None;
        let mut d = None;
        let mut c_r = None;
        let mut dim = 3usize;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", no + 1)))?;
            let value = value.trim();
            let int = |v: &str| -> Result<u64> {
                v.parse().map_err(|_| LabError::Config(format!("line {}: {v:?} is not a positive integer", no + 1)))
            };
            match key.trim() {
                "a" => {
                    a = Some(BigInt::from_str(value).map_err(|_| LabError::Config(format!("bad integer a = {value}")))?)
                }
                "b" => b = Some(int(value)?),
                "beta" => beta = Some(parse_rational(value)?),
                "Gamma" => big_gamma = Some(parse_rational(value)?),
                "gamma" => gamma = Some(parse_rational(value)?),
                "N_dec" => n_dec = Some(int(value)?),
                "d" => d = Some(int(value)?),
                "C_R" => c_r = Some(parse_rational(value)?),
                "dim" => dim = int(value)? as usize,
                other => return Err(LabError::Config(format!("line {}: unknown key {other:?}", no + 1))),
            }
        }
        let need = |name: &str| LabError::Config(format!("missing key {name}"));
        let set = Self {
            a: a.ok_or_else(|| need("a"))?,
            b: b.ok_or_else(|| need("b"))?,
            beta: beta.ok_or_else(|| need("beta"))?,
            big_gamma: big_gamma.ok_or_else(|| need("Gamma"))?,
            gamma: gamma.ok_or_else(|| need("gamma"))?,
            n_dec: n_dec.ok_or_else(|| need("N_dec"))?,
            d: d.ok_or_else(|| need("d"))?,
            c_r: c_r.ok_or_else(|| need("C_R"))?,
            dim,
        };
        set.validate()?;
        Ok(set)
    }

    pub(crate) fn b_rat(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.b))
    }
}

impl fmt::Display for ParameterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a = {}", self.a)?;
        writeln!(f, "b = {}", self.b)?;
        writeln!(f, "beta = {}", self.beta)?;
        writeln!(f, "Gamma = {}", self.big_gamma)?;
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(f, "N_dec = {}", self.n_dec)?;
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "C_R = {}", self.c_r)?;
        writeln!(f, "dim = {}", self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_numbers() {
        assert_eq!(parse_rational("1/2").unwrap(), r(1, 2));
        assert_eq!(parse_rational("0.125").unwrap(), r(1, 8));
        assert_eq!(parse_rational("-3").unwrap(), r(-3, 1));
        assert_eq!(parse_rational("1e-3").unwrap(), r(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), r(250, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn round_trip() {
        let text = "a = 1024\nb = 601  # base\nbeta = 1001/1000\nGamma = 1/2\ngamma = 1/65536\nN_dec = 2\nd = 2\nC_R = 0.1\n";
        let p = ParameterSet::parse(text).unwrap();
        assert_eq!(p.c_r, r(1, 10));
        assert_eq!(p.dim, 3);
        assert_eq!(ParameterSet::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(ParameterSet::parse("b = 601"), Err(LabError::Config(_))));
        assert!(matches!(ParameterSet::parse("speed = 3"), Err(LabError::Config(_))));
        let text = "a = 2\nb = 601\nbeta = 1\nGamma = 1/2\ngamma = 1/8\nN_dec = 2\nd = 2\nC_R = 1";
        assert!(matches!(ParameterSet::parse(text), Err(LabError::InvalidParameter(_))));
        let zero = BigRational::zero();
        assert!(unit_interval("x", &zero).is_err());
    }
}
