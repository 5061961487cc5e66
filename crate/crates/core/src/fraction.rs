//! Exact thresholds parsed from decimal, percent or `a/b` notation.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(pub Ratio<u64>);

impl Fraction {
    pub fn new(numer: u64, denom: u64) -> Self {
        Fraction(Ratio::new(numer, denom))
    }

    pub fn ratio(self) -> Ratio<u64> {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Smallest count `c` with `c / total >= self`.
    pub fn min_count(self, total: u64) -> u64 {
        let (n, d) = (*self.0.numer() as u128, *self.0.denom() as u128);
        (n * total as u128).div_ceil(d) as u64
    }
}

impl From<Ratio<u64>> for Fraction {
    fn from(r: Ratio<u64>) -> Self {
        Fraction(r)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse {s:?} as a fraction"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Fraction::new(n, d));
        }
        let (body, scale) = match s.strip_suffix('%') {
            Some(b) => (b.trim(), 100u64),
            None => (s, 1u64),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > 18
        {
            return Err(bad());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let numer = int
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac_v))
            .ok_or_else(bad)?;
        let denom = denom.checked_mul(scale).ok_or_else(bad)?;
        Ok(Fraction::new(numer, denom))
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Fraction;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a fraction such as 0.75, \"75%\" or \"3/4\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Fraction, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Fraction, E> {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(E::custom(format!("invalid fraction {v}")));
                }
                format!("{v}").parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Fraction, E> {
                Ok(Fraction::new(v, 1))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Fraction, E> {
                u64::try_from(v)
                    .map(|v| Fraction::new(v, 1))
                    .map_err(|_| E::custom("negative fraction"))
            }
        }
        d.deserialize_any(V)
    }
}
