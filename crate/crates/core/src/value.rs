//! Exact rational values.
//!
//! Every quantity handled by the engine is a reduced fraction over `i128`.
//! Arithmetic is checked: an overflow is reported as an error instead of
//! wrapping.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Value(Ratio<i128>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number literal `{0}`")]
pub struct ParseValueError(pub String);

impl Value {
    pub const ZERO: Value = Value(Ratio::new_raw(0, 1));
    pub const ONE: Value = Value(Ratio::new_raw(1, 1));

    pub fn int(n: i128) -> Value {
        Value(Ratio::from_integer(n))
    }

    pub fn ratio(numer: i128, denom: i128) -> Result<Value, ArithError> {
        if denom == 0 {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Value(Ratio::new(numer, denom)))
    }

    pub fn from_bool(b: bool) -> Value {
        if b {
            Value::ONE
        } else {
            Value::ZERO
        }
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Nonzero values count as true.
    pub fn truthy(&self) -> bool {
        !self.0.is_zero()
    }

    pub fn checked_add(&self, o: &Value) -> Result<Value, ArithError> {
        self.0.checked_add(&o.0).map(Value).ok_or(ArithError::Overflow)
    }

    pub fn checked_sub(&self, o: &Value) -> Result<Value, ArithError> {
        self.0.checked_sub(&o.0).map(Value).ok_or(ArithError::Overflow)
    }

    pub fn checked_mul(&self, o: &Value) -> Result<Value, ArithError> {
        self.0.checked_mul(&o.0).map(Value).ok_or(ArithError::Overflow)
    }

    pub fn checked_div(&self, o: &Value) -> Result<Value, ArithError> {
        if o.0.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        self.0.checked_div(&o.0).map(Value).ok_or(ArithError::Overflow)
    }

    pub fn checked_neg(&self) -> Result<Value, ArithError> {
        self.numer()
            .checked_neg()
            .map(|n| Value(Ratio::new_raw(n, self.denom())))
            .ok_or(ArithError::Overflow)
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::int(n as i128)
    }
}

impl FromStr for Value {
    type Err = ParseValueError;

    /// Accepts `INT`, `INT/INT` and `DECIMAL`, each with an optional leading `-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseValueError(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest.trim_start()),
            None => (false, t),
        };
        if body.is_empty() {
            return Err(err());
        }
        let v = if let Some((p, q)) = body.split_once('/') {
            let p = parse_digits(p.trim()).ok_or_else(err)?;
            let q = parse_digits(q.trim()).ok_or_else(err)?;
            Value::ratio(p, q).map_err(|_| err())?
        } else if let Some((ip, fp)) = body.split_once('.') {
            if (ip.is_empty() && fp.is_empty()) || !fp.chars().all(|c| c.is_ascii_digit()) {
                return Err(err());
            }
            let ip = if ip.is_empty() { 0 } else { parse_digits(ip).ok_or_else(err)? };
            let scale = 10i128.checked_pow(fp.len() as u32).ok_or_else(err)?;
            let fpv = if fp.is_empty() { 0 } else { parse_digits(fp).ok_or_else(err)? };
            let n = ip
                .checked_mul(scale)
                .and_then(|x| x.checked_add(fpv))
                .ok_or_else(err)?;
            Value::ratio(n, scale).map_err(|_| err())?
        } else {
            Value::int(parse_digits(body).ok_or_else(err)?)
        };
        if neg {
            v.checked_neg().map_err(|_| err())
        } else {
            Ok(v)
        }
    }
}

fn parse_digits(s: &str) -> Option<i128> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse::<i128>().ok()
}

impl Serialize for Value {
    /// Integers that fit in `i64` become JSON numbers; everything else is the
    /// exact `p/q` string.
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_integer() {
            if let Some(n) = self.numer().to_i64() {
                return s.serialize_i64(n);
            }
        }
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Value {
    /// Accepts what `serialize` writes: an integer or a literal string.
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Value, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Value;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a rational literal")
            }
            fn visit_i64<E: de::Error>(self, n: i64) -> Result<Value, E> {
                Ok(Value::int(n as i128))
            }
            fn visit_u64<E: de::Error>(self, n: u64) -> Result<Value, E> {
                Ok(Value::int(n as i128))
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<Value, E> {
                s.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        for v in [Value::int(-3), Value::ratio(7, 3).unwrap(), Value::int(i128::MAX)] {
            let text = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), v);
        }
    }

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!("42".parse::<Value>().unwrap(), Value::int(42));
        assert_eq!("-7".parse::<Value>().unwrap(), Value::int(-7));
        assert_eq!("2/6".parse::<Value>().unwrap(), Value::ratio(1, 3).unwrap());
        assert_eq!("0.25".parse::<Value>().unwrap(), Value::ratio(1, 4).unwrap());
        assert_eq!("-1.5".parse::<Value>().unwrap(), Value::ratio(-3, 2).unwrap());
        assert!("1/0".parse::<Value>().is_err());
        assert!("abc".parse::<Value>().is_err());
        assert!("".parse::<Value>().is_err());
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(Value::ratio(2, 6).unwrap().to_string(), "1/3");
        assert_eq!(Value::ratio(-4, 2).unwrap().to_string(), "-2");
        assert_eq!(Value::ratio(3, -9).unwrap().to_string(), "-1/3");
    }

    #[test]
    fn exact_arithmetic() {
        let x1 = Value::int(75000);
        let three_tenths = Value::ratio(3, 10).unwrap();
        let x2 = three_tenths.checked_mul(&x1).unwrap().checked_add(&Value::int(2500)).unwrap();
        assert_eq!(x2, Value::int(25000));
        assert_eq!(Value::ONE.checked_div(&Value::ZERO), Err(ArithError::DivisionByZero));
        assert_eq!(
            Value::int(i128::MAX).checked_add(&Value::ONE),
            Err(ArithError::Overflow)
        );
    }

    #[test]
    fn ordering_is_numeric() {
        let a = Value::ratio(1, 3).unwrap();
        let b = Value::ratio(1, 2).unwrap();
        assert!(a < b);
        assert!(Value::int(-1) < Value::ZERO);
    }
}
