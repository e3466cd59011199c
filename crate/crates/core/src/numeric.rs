//! Exact rationals, canonical cylinder points and the quotient metric.
//!
//! The cylinder is `[0,1] x [-1,1]` with `(x, 1)` and `(x, -1)` identified.
//! Every strict or weak comparison of distances is decided on squared
//! distances, so no square root is ever rounded. Square roots are only
//! materialized as [`Enclosure`]s, when distances must be summed.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision reduced fraction.
pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p/q` or `p`. The result is reduced; a zero denominator is rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let err = || Error::ParseRational(s.to_string());
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| err())?;
    let q: BigInt = q.parse().map_err(|_| err())?;
    if q.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(p, q))
}

/// Renders a rational as `p/q`, omitting `/1`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter storing a [`Rational`] as its `p/q` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(fmt_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A point of the cylinder in canonical form: `x` in `[0,1]`, `y` in `(-1,1]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylPoint {
    x: Rational,
    y: Rational,
}

impl CylPoint {
    /// Builds a point from raw coordinates, mapping `y = -1` to `y = 1`.
    pub fn new(x: Rational, y: Rational) -> Result<Self> {
        if x.is_negative() || x > Rational::one() {
            return Err(Error::OutOfRange(format!("x = {}", fmt_rational(&x))));
        }
        if y < -Rational::one() || y > Rational::one() {
            return Err(Error::OutOfRange(format!("y = {}", fmt_rational(&y))));
        }
        let y = if y == -Rational::one() { Rational::one() } else { y };
        Ok(CylPoint { x, y })
    }

    pub fn from_ratios(x: (i64, i64), y: (i64, i64)) -> Result<Self> {
        CylPoint::new(ratio(x.0, x.1), ratio(y.0, y.1))
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }

    /// Re-canonicalizes; idempotent on values built through [`CylPoint::new`].
    pub fn canonical(&self) -> CylPoint {
        CylPoint::new(self.x.clone(), self.y.clone()).expect("canonical point stays in range")
    }
}

impl fmt::Display for CylPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_rational(&self.x), fmt_rational(&self.y))
    }
}

impl fmt::Debug for CylPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for CylPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::ParsePoint(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(err)?;
        let (a, b) = inner.split_once(',').ok_or_else(err)?;
        CylPoint::new(parse_rational(a)?, parse_rational(b)?)
    }
}

impl Serialize for CylPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CylPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Squared quotient distance: `(x1-x2)^2 + min(|y1-y2|, 2-|y1-y2|)^2`.
pub fn dist_sq(a: &CylPoint, b: &CylPoint) -> Rational {
    let dx = &a.x - &b.x;
    let dy = (&a.y - &b.y).abs();
    let wrap = int(2) - &dy;
    let dy = if wrap < dy { wrap } else { dy };
    &dx * &dx + &dy * &dy
}

/// Decides `rho(a, b) < eps` exactly.
pub fn dist_lt(a: &CylPoint, b: &CylPoint, eps: &Rational) -> bool {
    dist_sq(a, b) < eps * eps
}

/// Rational bounds `[lo, hi]` on a real number.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Enclosure {
    #[serde(with = "rational_str")]
    pub lo: Rational,
    #[serde(with = "rational_str")]
    pub hi: Rational,
}

impl Enclosure {
    pub fn exact(v: Rational) -> Self {
        Enclosure { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn scale(&self, k: &Rational) -> Enclosure {
        debug_assert!(!k.is_negative());
        Enclosure {
            lo: &self.lo * k,
            hi: &self.hi * k,
        }
    }
}

fn exact_sqrt_int(n: &BigInt) -> Option<BigInt> {
    let s = n.sqrt();
    (&s * &s == *n).then_some(s)
}

/// Encloses `sqrt(r)` with width at most `tol`.
///
/// Perfect squares yield a degenerate enclosure. Otherwise the bounds are the
/// dyadic floor/ceiling `[a/2^k, (a+1)/2^k]` with the least `k` such that
/// `2^-k <= tol`, so refining `tol` always nests the result.
pub fn sqrt_enclose(r: &Rational, tol: &Rational) -> Result<Enclosure> {
    if r.is_negative() {
        return Err(Error::NegativeRadicand(fmt_rational(r)));
    }
    if !tol.is_positive() {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    if let (Some(p), Some(q)) = (exact_sqrt_int(r.numer()), exact_sqrt_int(r.denom())) {
        return Ok(Enclosure::exact(Rational::new(p, q)));
    }
    let mut scale = BigInt::one();
    while Rational::new(BigInt::one(), scale.clone()) > *tol {
        scale <<= 1;
    }
    // a = floor(sqrt(r) * 2^k) = isqrt(floor(r * 4^k))
    let scaled = (r * Rational::from_integer(&scale * &scale)).floor().to_integer();
    debug_assert!(scaled.sign() != Sign::Minus);
    let a = scaled.sqrt();
    Ok(Enclosure {
        lo: Rational::new(a.clone(), scale.clone()),
        hi: Rational::new(a + 1, scale),
    })
}

/// Encloses `rho(a, b)`.
pub fn dist_enclose(a: &CylPoint, b: &CylPoint, tol: &Rational) -> Enclosure {
    sqrt_enclose(&dist_sq(a, b), tol).expect("squared distances are nonnegative")
}
