//! Exact rationals used for thresholds and fractional flows.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

pub fn ratio(numer: i128, denom: i128) -> Rational {
    Ratio::new(numer, denom)
}

pub fn int(v: i128) -> Rational {
    Ratio::from_integer(v)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `a/b`, an integer, or a decimal such as `0.125`.
pub fn parse(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let a: i128 = a.trim().parse().ok()?;
        let b: i128 = b.trim().parse().ok()?;
        return (b != 0).then(|| ratio(a, b));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let w: i128 = if whole.is_empty() || whole == "-" { 0 } else { whole.parse().ok()? };
        if frac.is_empty() || frac.len() > 30 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let denom = 10i128.pow(frac.len() as u32);
        let f: i128 = frac.parse().ok()?;
        let mag = w.abs() * denom + f;
        return Some(ratio(if neg { -mag } else { mag }, denom));
    }
    t.parse::<i128>().ok().map(int)
}

pub fn format(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact cube root when `r` is a perfect cube, otherwise the closest fraction
/// with denominator at most 1000.
pub fn cube_root(r: &Rational) -> Rational {
    let exact = |x: i128| -> Option<i128> {
        let c = (x as f64).cbrt().round() as i128;
        (c - 1..=c + 1).find(|y| y * y * y == x)
    };
    if let (Some(a), Some(b)) = (exact(*r.numer()), exact(*r.denom())) {
        return ratio(a, b);
    }
    approximate(to_f64(r).cbrt(), 1000)
}

/// Exact square root when `r` is a perfect square.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    let root = |x: i128| -> Option<i128> {
        if x < 0 {
            return None;
        }
        let c = (x as f64).sqrt().round() as i128;
        (c.saturating_sub(1)..=c + 1).find(|y| y * y == x)
    };
    Some(ratio(root(*r.numer())?, root(*r.denom())?))
}

/// Best rational approximation with bounded denominator.
pub fn approximate(x: f64, max_denom: i128) -> Rational {
    let mut best = int(x.round() as i128);
    let mut err = (x - to_f64(&best)).abs();
    for q in 1..=max_denom {
        let p = (x * q as f64).round() as i128;
        let e = (x - p as f64 / q as f64).abs();
        if e < err - 1e-15 {
            best = ratio(p, q);
            err = e;
        }
    }
    best
}

pub fn floor_to_i128(r: &Rational) -> i128 {
    r.floor().to_integer()
}

pub fn ceil_to_i128(r: &Rational) -> i128 {
    r.ceil().to_integer()
}

pub fn positive_part(r: Rational) -> Rational {
    if r.is_positive() {
        r
    } else {
        Rational::zero()
    }
}

pub fn one() -> Rational {
    Rational::one()
}

/// Serde adapter writing rationals as `"a/b"` strings and accepting strings or numbers.
pub mod text {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(D::Error::custom("expected a rational")),
        };
        parse(&text).ok_or_else(|| D::Error::custom(format!("bad rational {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse("1/64"), Some(ratio(1, 64)));
        assert_eq!(parse("0.125"), Some(ratio(1, 8)));
        assert_eq!(parse("-0.5"), Some(ratio(-1, 2)));
        assert_eq!(parse("3"), Some(int(3)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }

    #[test]
    fn roots() {
        assert_eq!(cube_root(&ratio(1, 64)), ratio(1, 4));
        assert_eq!(cube_root(&ratio(1, 8)), ratio(1, 2));
        let c = cube_root(&ratio(1, 100));
        assert!((to_f64(&c) - 0.01f64.cbrt()).abs() < 1e-3);
        assert_eq!(exact_sqrt(&ratio(1, 64)), Some(ratio(1, 8)));
        assert_eq!(exact_sqrt(&ratio(1, 2)), None);
    }

    #[test]
    fn formatting() {
        assert_eq!(format(&ratio(2, 4)), "1/2");
        assert_eq!(format(&int(7)), "7");
    }
}
