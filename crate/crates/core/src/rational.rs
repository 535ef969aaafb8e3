//! Exact rational helpers shared by every module.
//!
//! All flows, lengths and specialities are [`Q`] values. JSON carries them as
//! `{"num": "..", "den": ".."}` with decimal strings so arbitrarily large
//! numerators survive the trip; integer literals are accepted on input.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn qpow(base: &Q, exp: u64) -> Q {
    let mut acc = Q::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn to_f64(x: &Q) -> f64 {
    // Scale large operands down before dividing so the quotient stays finite.
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
            let n = (x.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (x.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// `√x` for a non-negative rational, evaluated in double precision.
pub fn sqrt_f64(x: &Q) -> f64 {
    to_f64(x).sqrt()
}

/// Parses `"a/b"`, `"a"` or a finite decimal such as `"0.25"`.
pub fn parse_q(text: &str) -> Result<Q> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_val: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_q = Q::new(frac_val, scale);
        let whole = Q::from_integer(int.abs()) + frac_q;
        return Ok(if neg { -whole } else { whole });
    }
    text.parse::<BigInt>().map(Q::from_integer).map_err(|_| bad())
}

/// Smallest integer `r` with `r^den >= n^num`, i.e. `⌈n^(num/den)⌉`.
pub fn ceil_rational_power(n: u64, exponent: &Q) -> u64 {
    assert!(!exponent.is_negative(), "exponent must be non-negative");
    let num = exponent.numer().to_u32().expect("exponent numerator too large");
    let den = exponent.denom().to_u32().expect("exponent denominator too large");
    let target = num_traits::pow(BigInt::from(n), num as usize);
    let approx = (n as f64).powf(num as f64 / den as f64).floor() as u64;
    let mut r = approx.saturating_sub(2);
    while num_traits::pow(BigInt::from(r), den as usize) < target {
        r += 1;
    }
    r
}

#[derive(Serialize, Deserialize)]
struct Repr {
    num: IntRepr,
    den: IntRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Text(String),
    Int(i64),
}

impl IntRepr {
    fn into_bigint(self) -> std::result::Result<BigInt, String> {
        match self {
            IntRepr::Text(s) => s.parse().map_err(|_| format!("bad integer {s:?}")),
            IntRepr::Int(i) => Ok(BigInt::from(i)),
        }
    }
}

fn to_repr(x: &Q) -> Repr {
    Repr {
        num: IntRepr::Text(x.numer().to_string()),
        den: IntRepr::Text(x.denom().to_string()),
    }
}

fn from_repr<E: serde::de::Error>(r: Repr) -> std::result::Result<Q, E> {
    let num = r.num.into_bigint().map_err(E::custom)?;
    let den = r.den.into_bigint().map_err(E::custom)?;
    if den.is_zero() {
        return Err(E::custom("zero denominator"));
    }
    Ok(Q::new(num, den))
}

/// `#[serde(with = "...")]` adapter for a single [`Q`].
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_repr(x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

pub mod serde_q_opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        x.as_ref().map(to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
    }
}

pub mod serde_q_vec {
    use super::*;

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        x.iter().map(to_repr).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

pub mod serde_q_map {
    use super::*;
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        x: &BTreeMap<u32, Q>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        x.iter()
            .map(|(k, v)| (k.to_string(), to_repr(v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<u32, Q>, D::Error> {
        use serde::de::Error as _;
        BTreeMap::<String, Repr>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                let id = k.parse().map_err(|_| D::Error::custom(format!("bad id {k:?}")))?;
                Ok((id, from_repr(v)?))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 0), BigInt::from(1));
        assert_eq!(binomial(3, 4), BigInt::from(0));
        assert_eq!(binomial(12, 6), BigInt::from(924));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_q("3").unwrap(), qi(3));
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-1.5").unwrap(), q(-3, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn ceil_power() {
        let two_thirds = q(2, 3);
        let got: Vec<u64> = [6, 8, 10, 12, 27].iter().map(|&n| ceil_rational_power(n, &two_thirds)).collect();
        assert_eq!(got, vec![4, 4, 5, 6, 9]);
        assert_eq!(ceil_rational_power(7, &qi(1)), 7);
        assert_eq!(ceil_rational_power(7, &qi(0)), 1);
    }

    #[test]
    fn json_accepts_ints_and_strings() {
        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "serde_q")] Q);
        let w: W = serde_json::from_str(r#"{"num": 2, "den": "6"}"#).unwrap();
        assert_eq!(w.0, q(1, 3));
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"num":"1","den":"3"}"#);
    }

    #[test]
    fn huge_to_f64() {
        let big = Q::new(num_traits::pow(BigInt::from(10), 400), num_traits::pow(BigInt::from(10), 399));
        assert!((to_f64(&big) - 10.0).abs() < 1e-9);
    }
}
