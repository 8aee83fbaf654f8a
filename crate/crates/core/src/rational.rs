//! Exact rational helpers and the `"p/q"` string encoding used in every file format.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational. Strategy values, weights and thresholds all use it.
pub type Q = BigRational;
/// A non-negative [`Q`] used as a strategy value.
pub type Capital = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// `2^e` for any integer exponent.
pub fn pow2(e: i64) -> Q {
    let mag = BigInt::one() << e.unsigned_abs() as usize;
    if e >= 0 {
        Q::from_integer(mag)
    } else {
        Q::new(BigInt::one(), mag)
    }
}

pub fn pow(base: &Q, e: u32) -> Q {
    num_traits::pow(base.clone(), e as usize)
}

pub fn half() -> Q {
    q(1, 2)
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`; the result is reduced.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::InvalidRational(s.to_string());
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

/// Lowest-terms string; integers are written without a denominator.
pub fn fmt_q(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn is_integer(v: &Q) -> bool {
    v.denom().is_one()
}

pub fn ceil_to_u64(v: &Q) -> Option<u64> {
    v.ceil().to_integer().to_u64()
}

pub fn to_f64(v: &Q) -> f64 {
    // ratio of big integers; scale down to keep precision for huge operands
    let n = v.numer();
    let d = v.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// `⌊log2 v⌋` for positive `v`.
pub fn floor_log2(v: &Q) -> i64 {
    debug_assert!(v.is_positive());
    let n = v.numer();
    let d = v.denom();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // adjust so that 2^e <= v < 2^(e+1)
    while pow2(e) > *v {
        e -= 1;
    }
    while pow2(e + 1) <= *v {
        e += 1;
    }
    e
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Serde adapter writing a single rational as a string.
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let raw = QLiteral::deserialize(d)?;
        raw.into_q().map_err(serde::de::Error::custom)
    }

    /// Accepts strings as well as bare JSON integers.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum QLiteral {
        Str(String),
        Int(i64),
    }

    impl QLiteral {
        pub(crate) fn into_q(self) -> Result<Q> {
            match self {
                QLiteral::Str(s) => parse_q(&s),
                QLiteral::Int(i) => Ok(int(i)),
            }
        }
    }
}

/// Serde adapter for `Vec<Q>`.
pub mod serde_q_vec {
    use super::serde_q::QLiteral;
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&fmt_q(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let raw = Vec::<QLiteral>::deserialize(d)?;
        raw.into_iter()
            .map(|r| r.into_q().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for maps with rational values.
pub mod serde_q_map {
    use super::serde_q::QLiteral;
    use super::*;
    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<K: Serialize, S: Serializer>(
        v: &BTreeMap<K, Q>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(v.len()))?;
        for (k, x) in v {
            map.serialize_entry(k, &fmt_q(x))?;
        }
        map.end()
    }

    pub fn deserialize<'de, K, D>(d: D) -> std::result::Result<BTreeMap<K, Q>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        D: Deserializer<'de>,
    {
        let raw = BTreeMap::<K, QLiteral>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, r)| r.into_q().map(|v| (k, v)).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Q>`.
pub mod serde_q_opt {
    use super::serde_q::QLiteral;
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&fmt_q(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Q>, D::Error> {
        let raw = Option::<QLiteral>::deserialize(d)?;
        raw.map(|r| r.into_q().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        assert_eq!(parse_q("6/8").unwrap(), q(3, 4));
        assert_eq!(fmt_q(&q(6, 8)), "3/4");
        assert_eq!(fmt_q(&int(5)), "5");
        assert_eq!(parse_q("-1/3").unwrap(), q(-1, 3));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(pow2(3), int(8));
        assert_eq!(pow2(-2), q(1, 4));
        assert_eq!(pow2(0), one());
    }

    #[test]
    fn floor_log2_brackets() {
        assert_eq!(floor_log2(&int(1)), 0);
        assert_eq!(floor_log2(&int(3)), 1);
        assert_eq!(floor_log2(&q(1, 3)), -2);
        assert_eq!(floor_log2(&q(256, 81)), 1);
    }
}
