//! Closed rational intervals with an optional +inf upper end.
//!
//! Rational operations are exact. Irrational ones (roots, exp) round outward
//! to dyadics, as do endpoints whose bit size grows past the working limit.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::extnat::{Budget, ExtNat};
use super::rational::{self as q, Rat};
use crate::error::{input, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    Fin(Rat),
    Inf,
}

impl Bound {
    pub fn fin(&self) -> Option<&Rat> {
        match self {
            Bound::Fin(r) => Some(r),
            Bound::Inf => None,
        }
    }
}

/// Working precision: significant bits for irrational results, plus the
/// magnitude exponent past which values are treated as unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prec {
    pub bits: u32,
    pub mag: u64,
}

impl Prec {
    pub fn new(bits: u32, budget: &Budget) -> Prec {
        Prec { bits, mag: budget.max_bits + 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    lo: Rat,
    hi: Bound,
    /// When set, the enclosed value is exactly the square root of this rational.
    sq: Option<Rat>,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            return write!(f, "{}", q::rat_to_string(&self.lo));
        }
        if let Some(s) = &self.sq {
            return write!(f, "sqrt({})", q::rat_to_string(s));
        }
        match &self.hi {
            Bound::Fin(h) => write!(f, "[{:.6e}, {:.6e}]", q::to_f64(&self.lo), q::to_f64(h)),
            Bound::Inf => write!(f, "[{:.6e}, inf]", q::to_f64(&self.lo)),
        }
    }
}

impl From<Rat> for Interval {
    fn from(r: Rat) -> Interval {
        Interval::exact(r)
    }
}

impl Interval {
    pub fn exact(r: Rat) -> Interval {
        Interval { hi: Bound::Fin(r.clone()), lo: r, sq: None }
    }

    pub fn int(n: i64) -> Interval {
        Interval::exact(q::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Interval {
        Interval::exact(q::rat(n, d))
    }

    pub fn nat(n: &BigUint) -> Interval {
        Interval::exact(q::from_biguint(n))
    }

    /// Encloses the natural; Overflow becomes `[2^max_bits, inf]`.
    pub fn from_extnat(v: &ExtNat, budget: &Budget) -> Interval {
        match v {
            ExtNat::Fin(n) => Interval::nat(n),
            ExtNat::Overflow => Interval { lo: q::pow2(budget.max_bits as i64), hi: Bound::Inf, sq: None },
        }
    }

    pub fn new(lo: Rat, hi: Bound) -> Result<Interval> {
        if let Bound::Fin(h) = &hi {
            if h < &lo {
                return input("interval with lo > hi");
            }
        }
        Ok(Interval { lo, hi, sq: None })
    }

    /// The exact square root of a nonnegative rational.
    pub fn sqrt_of(r: &Rat, p: &Prec) -> Result<Interval> {
        Interval::exact(r.clone()).sqrt(p)
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Bound {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        matches!(&self.hi, Bound::Fin(h) if *h == self.lo)
    }

    pub fn exact_value(&self) -> Option<&Rat> {
        if self.is_exact() {
            Some(&self.lo)
        } else {
            None
        }
    }

    /// Rational whose square root this interval encloses exactly, if known.
    pub fn square_hint(&self) -> Option<Rat> {
        if self.is_exact() && !self.lo.is_negative() {
            return Some(&self.lo * &self.lo);
        }
        self.sq.clone()
    }

    pub fn is_nonneg(&self) -> bool {
        !self.lo.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn hi_f64(&self) -> f64 {
        match &self.hi {
            Bound::Fin(h) => q::to_f64(h),
            Bound::Inf => f64::INFINITY,
        }
    }

    pub fn lo_f64(&self) -> f64 {
        q::to_f64(&self.lo)
    }

    pub fn mid_f64(&self) -> f64 {
        match &self.hi {
            Bound::Fin(h) => q::to_f64(&((&self.lo + h) / q::int(2))),
            Bound::Inf => f64::INFINITY,
        }
    }

    /// True when every point of self is <= every point of o.
    pub fn certainly_le(&self, o: &Interval) -> bool {
        match &self.hi {
            Bound::Fin(h) => *h <= o.lo,
            Bound::Inf => false,
        }
    }

    fn with_hint(mut self, sq: Option<Rat>) -> Interval {
        if !self.is_exact() {
            self.sq = sq;
        }
        self
    }

    /// Outward-rounds oversized endpoints and clamps extreme magnitudes.
    fn norm(mut self, p: &Prec) -> Interval {
        let huge = q::pow2(p.mag as i64);
        if self.lo >= huge {
            return Interval { lo: huge, hi: Bound::Inf, sq: None };
        }
        let tiny = q::pow2(-(p.mag as i64));
        if let Bound::Fin(h) = &self.hi {
            if !self.lo.is_negative() && *h < tiny && !h.is_zero() {
                return Interval { lo: q::zero(), hi: Bound::Fin(tiny), sq: None };
            }
        }
        let limit = 4 * p.bits as u64 + 64;
        let exact = self.is_exact();
        if q::size_bits(&self.lo) > limit {
            let lo = q::round_down(&self.lo, p.bits + 16);
            if exact {
                self.hi = Bound::Fin(q::round_up(&self.lo, p.bits + 16));
            }
            self.lo = lo;
        }
        if let Bound::Fin(h) = &self.hi {
            if q::size_bits(h) > limit {
                self.hi = Bound::Fin(q::round_up(h, p.bits + 16));
            }
        }
        self
    }

    pub fn add(&self, o: &Interval, p: &Prec) -> Interval {
        let hi = match (&self.hi, &o.hi) {
            (Bound::Fin(a), Bound::Fin(b)) => Bound::Fin(a + b),
            _ => Bound::Inf,
        };
        Interval { lo: &self.lo + &o.lo, hi, sq: None }.norm(p)
    }

    pub fn add_rat(&self, r: &Rat, p: &Prec) -> Interval {
        self.add(&Interval::exact(r.clone()), p)
    }

    pub fn sub(&self, o: &Interval, p: &Prec) -> Result<Interval> {
        let oh = match &o.hi {
            Bound::Fin(h) => h,
            Bound::Inf => return input("subtracting an unbounded interval"),
        };
        let hi = match &self.hi {
            Bound::Fin(a) => Bound::Fin(a - &o.lo),
            Bound::Inf => Bound::Inf,
        };
        Ok(Interval { lo: &self.lo - oh, hi, sq: None }.norm(p))
    }

    pub fn neg_free_mul(&self, o: &Interval, p: &Prec) -> Interval {
        let hi = match (&self.hi, &o.hi) {
            (Bound::Fin(a), Bound::Fin(b)) => Bound::Fin(a * b),
            (Bound::Fin(a), Bound::Inf) | (Bound::Inf, Bound::Fin(a)) if a.is_zero() => Bound::Fin(q::zero()),
            _ => Bound::Inf,
        };
        let hint = match (self.square_hint(), o.square_hint()) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        Interval { lo: &self.lo * &o.lo, hi, sq: None }.with_hint(hint).norm(p)
    }

    pub fn mul(&self, o: &Interval, p: &Prec) -> Result<Interval> {
        if self.is_nonneg() && o.is_nonneg() {
            return Ok(self.neg_free_mul(o, p));
        }
        let (Bound::Fin(ah), Bound::Fin(bh)) = (&self.hi, &o.hi) else {
            return input("product of a signed interval with an unbounded one");
        };
        let c = [&self.lo * &o.lo, &self.lo * bh, ah * &o.lo, ah * bh];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Ok(Interval { lo, hi: Bound::Fin(hi), sq: None }.norm(p))
    }

    pub fn mul_rat(&self, r: &Rat, p: &Prec) -> Result<Interval> {
        self.mul(&Interval::exact(r.clone()), p)
    }

    /// Division by a nonnegative interval. x/0 = inf for x > 0, 0/0 = 0, x/inf = 0.
    pub fn div(&self, o: &Interval, p: &Prec) -> Result<Interval> {
        if o.lo.is_negative() {
            return input("division by an interval that may be negative");
        }
        let lo = if !self.lo.is_negative() {
            match &o.hi {
                Bound::Fin(h) if h.is_zero() => q::zero(),
                Bound::Fin(h) => &self.lo / h,
                Bound::Inf => q::zero(),
            }
        } else if o.lo.is_zero() {
            return input("negative numerator over an interval touching zero");
        } else {
            &self.lo / &o.lo
        };
        let hi = match &self.hi {
            Bound::Inf => Bound::Inf,
            Bound::Fin(h) if h.is_zero() => Bound::Fin(q::zero()),
            Bound::Fin(h) if h.is_positive() => {
                if o.lo.is_zero() {
                    Bound::Inf
                } else {
                    Bound::Fin(h / &o.lo)
                }
            }
            Bound::Fin(h) => match &o.hi {
                Bound::Fin(oh) => Bound::Fin(h / oh),
                Bound::Inf => Bound::Fin(q::zero()),
            },
        };
        let hint = match (self.square_hint(), o.square_hint()) {
            (Some(a), Some(b)) if !b.is_zero() => Some(a / b),
            _ => None,
        };
        Ok(Interval { lo, hi, sq: None }.with_hint(hint).norm(p))
    }

    pub fn div_rat(&self, r: &Rat, p: &Prec) -> Result<Interval> {
        self.div(&Interval::exact(r.clone()), p)
    }

    pub fn recip(&self, p: &Prec) -> Result<Interval> {
        Interval::int(1).div(self, p)
    }

    pub fn min(&self, o: &Interval) -> Interval {
        if self.certainly_le(o) {
            return self.clone();
        }
        if o.certainly_le(self) {
            return o.clone();
        }
        let lo = (&self.lo).min(&o.lo).clone();
        let hi = (&self.hi).min(&o.hi).clone();
        Interval { lo, hi, sq: None }
    }

    pub fn max(&self, o: &Interval) -> Interval {
        if self.certainly_le(o) {
            return o.clone();
        }
        if o.certainly_le(self) {
            return self.clone();
        }
        let lo = (&self.lo).max(&o.lo).clone();
        let hi = (&self.hi).max(&o.hi).clone();
        Interval { lo, hi, sq: None }
    }

    pub fn square(&self, p: &Prec) -> Result<Interval> {
        if let Some(s) = &self.sq {
            return Ok(Interval::exact(s.clone()));
        }
        if self.is_nonneg() {
            return Ok(self.neg_free_mul(self, p));
        }
        let ah = self.hi.fin().expect("signed intervals are bounded");
        let m = (-&self.lo).max(ah.clone());
        let lo = if ah.is_negative() { ah * ah } else { q::zero() };
        Ok(Interval { lo, hi: Bound::Fin(&m * &m), sq: None }.norm(p))
    }

    pub fn sqrt(&self, p: &Prec) -> Result<Interval> {
        if self.lo.is_negative() {
            return input("square root of a possibly negative interval");
        }
        let lo = q::nth_root_dir(&self.lo, 2, p.bits, false);
        let hi = match &self.hi {
            Bound::Fin(h) => Bound::Fin(q::nth_root_dir(h, 2, p.bits, true)),
            Bound::Inf => Bound::Inf,
        };
        let hint = self.exact_value().cloned();
        Ok(Interval { lo, hi, sq: None }.with_hint(hint).norm(p))
    }

    pub fn pow_int(&self, k: u64, p: &Prec) -> Result<Interval> {
        if k == 0 {
            return Ok(Interval::int(1));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        if k == 2 {
            return self.square(p);
        }
        if !self.is_nonneg() {
            return input("integer power of a signed interval");
        }
        // Shortcut for results far outside the representable magnitude.
        if self.lo >= q::int(2) && (q::log2_approx(&self.lo) - 1).max(1) as u128 * k as u128 > p.mag as u128 {
            return Ok(Interval { lo: q::pow2(p.mag as i64), hi: Bound::Inf, sq: None });
        }
        if let Bound::Fin(h) = &self.hi {
            if !h.is_zero() && *h <= q::rat(1, 2) {
                let e = (-q::log2_approx(h) - 1).max(1) as u128;
                if e * k as u128 > p.mag as u128 {
                    return Ok(Interval { lo: q::zero(), hi: Bound::Fin(q::pow2(-(p.mag as i64))), sq: None });
                }
            }
        }
        let mut base = self.clone();
        let mut acc = Interval::int(1);
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.neg_free_mul(&base, p);
            }
            e >>= 1;
            if e > 0 {
                base = base.neg_free_mul(&base, p);
            }
        }
        Ok(acc)
    }

    /// x^e for x >= 0 and rational e, with 0^0 = 1.
    pub fn pow_rat(&self, e: &Rat, p: &Prec) -> Result<Interval> {
        if e.is_zero() {
            return Ok(Interval::int(1));
        }
        if !self.is_nonneg() {
            return input("rational power of a possibly negative interval");
        }
        if e.is_negative() {
            return self.pow_rat(&-e, p)?.recip(p);
        }
        let num = e.numer().to_u64().ok_or_else(|| crate::error::Error::Input("exponent too large".into()))?;
        let den = e.denom().to_u32().ok_or_else(|| crate::error::Error::Input("exponent denominator too large".into()))?;
        if den == 1 {
            return self.pow_int(num, p);
        }
        if den == 2 && num == 1 {
            return self.sqrt(p);
        }
        let y = self.pow_int(num, p)?;
        let lo = q::nth_root_dir(&y.lo, den, p.bits, false);
        let hi = match &y.hi {
            Bound::Fin(h) => Bound::Fin(q::nth_root_dir(h, den, p.bits, true)),
            Bound::Inf => Bound::Inf,
        };
        Ok(Interval { lo, hi, sq: None }.norm(p))
    }

    pub fn exp(&self, p: &Prec) -> Result<Interval> {
        let lo = exp_bound(&self.lo, p, false).0;
        let hi = match &self.hi {
            Bound::Fin(h) => exp_bound(h, p, true).1,
            Bound::Inf => Bound::Inf,
        };
        Ok(Interval { lo, hi, sq: None }.norm(p))
    }
}

/// Directed bound on e^r. Returns (lower, upper); only the requested side is tight.
fn exp_bound(r: &Rat, p: &Prec, up: bool) -> (Rat, Bound) {
    if r.is_zero() {
        return (q::one(), Bound::Fin(q::one()));
    }
    // e^r >= 2^mag once r >= 0.7 mag, since 0.7 log2(e) > 1.
    let cut = q::rat(7, 10) * q::int(p.mag as i64);
    if *r >= cut {
        return (q::pow2(p.mag as i64), Bound::Inf);
    }
    if *r <= -&cut {
        return (q::zero(), Bound::Fin(q::pow2(-(p.mag as i64))));
    }
    if r.is_negative() {
        // e^r = 1 / e^{-r}, with directions swapped.
        let (l, h) = exp_pos(&-r, p, !up);
        let lo = match h {
            Bound::Fin(h) => q::one() / h,
            Bound::Inf => q::zero(),
        };
        return (lo, Bound::Fin(q::one() / l));
    }
    exp_pos(r, p, up)
}

fn exp_pos(r: &Rat, p: &Prec, up: bool) -> (Rat, Bound) {
    // Halve until the argument is at most 1/2, sum a Taylor series in fixed point,
    // then square back with directed rounding.
    let mut k: u32 = 0;
    let mut bound = q::rat(1, 2);
    while *r > bound {
        bound *= q::int(2);
        k += 1;
    }
    let w = p.bits as u64 + k as u64 + 24;
    let scale = BigInt::one() << w;
    let scaled = r * Rat::from_integer(scale.clone()) / q::pow2(k as i64);
    let z = if up { q::ceil(&scaled) } else { q::floor(&scaled) };
    let mut term = scale.clone();
    let mut sum = scale.clone();
    let mut i: u64 = 1;
    loop {
        let t = &term * &z;
        let den = &scale * BigInt::from(i);
        term = if up { -((-t).div_floor_big(&den)) } else { t.div_floor_big(&den) };
        if term.is_zero() {
            break;
        }
        sum += &term;
        if up && term <= BigInt::from(1) {
            break;
        }
        i += 1;
    }
    if up {
        // Remainder after the last term is at most twice the next one (z <= 1/2);
        // the next term is below one ulp, plus per-term rounding.
        sum += BigInt::from(2 + 2 * i);
    }
    for _ in 0..k {
        let s = &sum * &sum;
        sum = if up { -((-s).div_floor_big(&scale)) } else { s.div_floor_big(&scale) };
    }
    if up {
        sum += BigInt::from(1);
    }
    let v = Rat::new(sum, scale);
    if up {
        (q::one(), Bound::Fin(v))
    } else {
        (v, Bound::Inf)
    }
}

trait DivFloorBig {
    fn div_floor_big(&self, d: &BigInt) -> BigInt;
}

impl DivFloorBig for BigInt {
    fn div_floor_big(&self, d: &BigInt) -> BigInt {
        num_integer::Integer::div_floor(self, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p64() -> Prec {
        Prec::new(64, &Budget::default())
    }

    #[test]
    fn exact_ops_stay_exact() {
        let p = p64();
        let a = Interval::ratio(1, 3);
        let b = Interval::ratio(1, 6);
        assert_eq!(a.add(&b, &p), Interval::ratio(1, 2));
        assert_eq!(a.div(&b, &p).unwrap(), Interval::int(2));
        assert_eq!(a.pow_rat(&q::int(2), &p).unwrap(), Interval::ratio(1, 9));
        assert_eq!(Interval::ratio(8, 27).pow_rat(&q::rat(2, 3), &p).unwrap(), Interval::ratio(4, 9));
    }

    #[test]
    fn sqrt_hint_squares_back() {
        let p = p64();
        let r = Interval::sqrt_of(&q::int(24), &p).unwrap();
        assert!(!r.is_exact());
        assert_eq!(r.square(&p).unwrap(), Interval::int(24));
        let s = Interval::sqrt_of(&q::int(12), &p).unwrap();
        let ratio = r.div(&s, &p).unwrap();
        assert_eq!(ratio.square_hint(), Some(q::int(2)));
    }

    #[test]
    fn division_conventions() {
        let p = p64();
        let z = Interval::int(0);
        assert_eq!(Interval::int(3).div(&z, &p).unwrap().hi(), &Bound::Inf);
        assert_eq!(z.div(&z, &p).unwrap(), Interval::int(0));
        let inf = Interval::from_extnat(&ExtNat::Overflow, &Budget::default());
        assert_eq!(Interval::int(1).div(&inf, &p).unwrap().lo(), &q::zero());
    }

    #[test]
    fn exp_encloses() {
        let p = p64();
        for (n, d) in [(1i64, 1i64), (2, 1), (-3, 2), (1, 1000), (50, 1)] {
            let e = Interval::ratio(n, d).exp(&p).unwrap();
            let f = (n as f64 / d as f64).exp();
            assert!(e.lo_f64() <= f * (1.0 + 1e-15) && e.hi_f64() >= f * (1.0 - 1e-15), "{n}/{d}");
            assert!(e.hi_f64() - e.lo_f64() <= f * 1e-15, "{n}/{d} width");
        }
        let big = Interval::int(100_000).exp(&p).unwrap();
        assert_eq!(big.hi(), &Bound::Inf);
    }
}
