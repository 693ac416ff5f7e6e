//! Rational helpers: literal parsing, directed rounding, integer roots.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{input, Result};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn from_biguint(v: &BigUint) -> Rat {
    Rat::from_integer(BigInt::from_biguint(Sign::Plus, v.clone()))
}

pub fn pow2(k: i64) -> Rat {
    if k >= 0 {
        Rat::from_integer(BigInt::one() << (k as u64))
    } else {
        Rat::new(BigInt::one(), BigInt::one() << ((-k) as u64))
    }
}

/// Parses `3`, `-2/7`, `0.25`, `1e-3`, `2.5E+4`. Exact; no float round trip.
pub fn parse_rational(s: &str) -> Result<Rat> {
    let t = s.trim();
    if t.is_empty() || t.len() > 4096 {
        return input(format!("bad rational literal {s:?}"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad(s))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad(s))?;
        if d.is_zero() {
            return input(format!("zero denominator in {s:?}"));
        }
        return Ok(Rat::new(n, d));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| bad(s))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    if exp.abs() > 10_000 {
        return input(format!("exponent too large in {s:?}"));
    }
    let (neg, body) = match mant.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad(s));
    }
    if !ip.bytes().chain(fp.bytes()).all(|c| c.is_ascii_digit()) {
        return Err(bad(s));
    }
    let digits = format!("{ip}{fp}");
    let mut v = Rat::from_integer(digits.parse::<BigInt>().map_err(|_| bad(s))?);
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    if scale >= 0 {
        v *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        v /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -v } else { v })
}

fn bad(s: &str) -> crate::error::Error {
    crate::error::Error::Input(format!("bad rational literal {s:?}"))
}

/// The rational whose shortest decimal representation matches `x`.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    if !x.is_finite() {
        return input(format!("non-finite value {x}"));
    }
    parse_rational(&format!("{x:e}"))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn floor(r: &Rat) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn ceil(r: &Rat) -> BigInt {
    -((-r.numer()).div_floor(r.denom()))
}

/// Total bit size of numerator and denominator.
pub fn size_bits(r: &Rat) -> u64 {
    r.numer().bits() + r.denom().bits()
}

/// Rough base-2 exponent: `2^(e-1) <= |r| < 2^(e+1)`.
pub fn log2_approx(r: &Rat) -> i64 {
    r.numer().bits() as i64 - r.denom().bits() as i64
}

/// Largest dyadic with about `bits` significant bits that is <= r.
pub fn round_down(r: &Rat, bits: u32) -> Rat {
    round_dyadic(r, bits, false)
}

/// Smallest dyadic with about `bits` significant bits that is >= r.
pub fn round_up(r: &Rat, bits: u32) -> Rat {
    round_dyadic(r, bits, true)
}

fn round_dyadic(r: &Rat, bits: u32, up: bool) -> Rat {
    if r.is_zero() || r.denom().is_one() && r.numer().bits() <= bits as u64 {
        return r.clone();
    }
    let shift = bits as i64 - log2_approx(r);
    let scaled = r * pow2(shift);
    let k = if up { ceil(&scaled) } else { floor(&scaled) };
    Rat::from_integer(k) * pow2(-shift)
}

fn uint(v: &BigInt) -> BigUint {
    v.magnitude().clone()
}

fn exact_root(v: &BigUint, k: u32) -> Option<BigUint> {
    let r = v.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *v {
        Some(r)
    } else {
        None
    }
}

/// Exact k-th root of a nonnegative rational if it is a perfect power.
pub fn exact_nth_root(r: &Rat, k: u32) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = exact_root(&uint(r.numer()), k)?;
    let d = exact_root(&uint(r.denom()), k)?;
    Some(Rat::new(BigInt::from(n), BigInt::from(d)))
}

/// Directed k-th root of a nonnegative rational with `bits` of resolution.
pub fn nth_root_dir(r: &Rat, k: u32, bits: u32, up: bool) -> Rat {
    if let Some(x) = exact_nth_root(r, k) {
        return x;
    }
    let n = uint(r.numer());
    let d = uint(r.denom());
    // r^{1/k} = (n d^{k-1})^{1/k} / d, scaled by 2^s for resolution.
    let s = bits as u64 + 8;
    let radicand = n * num_traits::pow(d.clone(), (k - 1) as usize) << (s * k as u64);
    let mut root = radicand.nth_root(k);
    if up {
        root += 1u32;
    }
    Rat::new(BigInt::from(root), BigInt::from(d << s))
}

/// ceil(sqrt(s)) for a nonnegative rational, exactly.
pub fn ceil_sqrt(s: &Rat) -> BigUint {
    let c = uint(&ceil(s));
    let r = c.sqrt();
    if &r * &r == c {
        r
    } else {
        r + 1u32
    }
}

pub fn is_integer(r: &Rat) -> bool {
    r.denom().is_one()
}

pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn zero() -> Rat {
    Rat::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/4").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("-2.5E+1").unwrap(), int(-25));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        for bad in ["", "1/0", "abc", "1e", "--1", ".", "1.2.3", "1e99999"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn from_f64_shortest() {
        assert_eq!(rat_from_f64(0.1).unwrap(), rat(1, 10));
        assert_eq!(rat_from_f64(1e-7).unwrap(), rat(1, 10_000_000));
        assert_eq!(rat_from_f64(-3.0).unwrap(), int(-3));
    }

    #[test]
    fn floor_ceil() {
        assert_eq!(floor(&rat(-7, 2)), BigInt::from(-4));
        assert_eq!(ceil(&rat(-7, 2)), BigInt::from(-3));
        assert_eq!(ceil(&rat(7, 2)), BigInt::from(4));
        assert_eq!(ceil(&int(3)), BigInt::from(3));
    }

    #[test]
    fn roots_bracket() {
        let two = int(2);
        let lo = nth_root_dir(&two, 2, 64, false);
        let hi = nth_root_dir(&two, 2, 64, true);
        assert!(&lo * &lo < two && &hi * &hi > two);
        assert!(&hi - &lo < pow2(-60));
        assert_eq!(nth_root_dir(&rat(8, 27), 3, 10, false), rat(2, 3));
        assert_eq!(ceil_sqrt(&int(72)), BigUint::from(9u32));
        assert_eq!(ceil_sqrt(&int(81)), BigUint::from(9u32));
        assert_eq!(ceil_sqrt(&rat(1, 2)), BigUint::from(1u32));
    }

    #[test]
    fn dyadic_rounding_directs() {
        let third = rat(1, 3);
        assert!(round_down(&third, 20) <= third);
        assert!(round_up(&third, 20) >= third);
        assert!(round_up(&third, 20) - round_down(&third, 20) < pow2(-18));
    }
}

/// Serde adapter: rationals as strings (`"1/4"`), accepting JSON numbers too.
pub mod serde_rat {
    use super::{parse_rational, rat_from_f64, rat_to_string, Rat};
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Lit {
        S(String),
        I(i64),
        F(f64),
    }

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let r = match Lit::deserialize(d)? {
            Lit::S(s) => parse_rational(&s),
            Lit::I(i) => Ok(super::int(i)),
            Lit::F(f) => rat_from_f64(f),
        };
        r.map_err(serde::de::Error::custom)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_str(&rat_to_string(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
            let v: Option<Lit> = Option::deserialize(d)?;
            match v {
                None => Ok(None),
                Some(Lit::S(s)) => parse_rational(&s).map(Some).map_err(serde::de::Error::custom),
                Some(Lit::I(i)) => Ok(Some(super::super::int(i))),
                Some(Lit::F(f)) => rat_from_f64(f).map(Some).map_err(serde::de::Error::custom),
            }
        }
    }
}
