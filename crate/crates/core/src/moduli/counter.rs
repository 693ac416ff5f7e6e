//! Counterfunctions f: N -> N and the combinators the rate constructions use.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::bundle::LiminfBound;
use super::ctx::Ctx;
use super::extnat::{Budget, ExtNat};
use super::interval::Interval;
use crate::error::{input, Error, Result};

#[derive(Clone)]
pub struct Counterfunction(Arc<Node>);

enum Node {
    Constant(BigUint),
    /// n -> a n + b
    Linear { a: BigUint, b: BigUint },
    Table { entries: BTreeMap<BigUint, BigUint>, default: BigUint },
    /// n -> max(inner(n), floor)
    MaxConst { inner: Counterfunction, floor: ExtNat },
    /// n -> outer(inner(n))
    Compose { outer: Counterfunction, inner: Counterfunction },
    Window(WindowReach),
}

/// n -> max{ k + f(k) : 1 <= k <= phi(eps, n) + 1 } monus n
struct WindowReach {
    f: Counterfunction,
    phi: LiminfBound,
    eps: Interval,
    memo: Mutex<HashMap<BigUint, ExtNat>>,
}

/// On `[start, until]` the function equals `m -> a m + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub a: BigUint,
    pub b: BigUint,
    pub until: Option<BigUint>,
}

impl fmt::Debug for Counterfunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Counterfunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Constant(c) => write!(f, "const({c})"),
            Node::Linear { a, b } if a.is_one() => write!(f, "n+{b}"),
            Node::Linear { a, b } => write!(f, "{a}n+{b}"),
            Node::Table { entries, default } => {
                write!(f, "table{{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}:{v}")?;
                }
                write!(f, ";{default}}}")
            }
            Node::MaxConst { inner, floor } => write!(f, "max({inner},{floor})"),
            Node::Compose { outer, inner } => write!(f, "({outer})o({inner})"),
            Node::Window(w) => write!(f, "reach[{};{};{}]", w.f, w.phi.label(), w.eps),
        }
    }
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

impl Counterfunction {
    pub fn constant(c: u64) -> Counterfunction {
        Counterfunction(Arc::new(Node::Constant(big(c))))
    }

    pub fn identity_plus(k: u64) -> Counterfunction {
        Counterfunction::linear(1, k)
    }

    pub fn linear(a: u64, b: u64) -> Counterfunction {
        Counterfunction::linear_big(big(a), big(b))
    }

    pub fn linear_big(a: BigUint, b: BigUint) -> Counterfunction {
        if a.is_zero() {
            return Counterfunction(Arc::new(Node::Constant(b)));
        }
        Counterfunction(Arc::new(Node::Linear { a, b }))
    }

    pub fn table(entries: BTreeMap<u64, u64>, default: u64) -> Counterfunction {
        let entries = entries.into_iter().map(|(k, v)| (big(k), big(v))).collect();
        Counterfunction(Arc::new(Node::Table { entries, default: big(default) }))
    }

    /// n -> max(self(n), floor)
    pub fn max_const(&self, floor: ExtNat) -> Counterfunction {
        Counterfunction(Arc::new(Node::MaxConst { inner: self.clone(), floor }))
    }

    pub fn compose(outer: &Counterfunction, inner: &Counterfunction) -> Counterfunction {
        Counterfunction(Arc::new(Node::Compose { outer: outer.clone(), inner: inner.clone() }))
    }

    /// The window-reach function f_{phi,eps}(n) = max{ m+1+f(m+1) : m <= phi(eps,n) } monus n.
    pub fn window_reach(f: &Counterfunction, phi: &LiminfBound, eps: &Interval) -> Counterfunction {
        Counterfunction(Arc::new(Node::Window(WindowReach {
            f: f.clone(),
            phi: phi.clone(),
            eps: eps.clone(),
            memo: Mutex::new(HashMap::new()),
        })))
    }

    pub fn eval(&self, ctx: &mut Ctx, n: &BigUint) -> Result<ExtNat> {
        let v = match &*self.0 {
            Node::Constant(c) => ExtNat::Fin(c.clone()),
            Node::Linear { a, b } => ExtNat::Fin(a * n + b),
            Node::Table { entries, default } => ExtNat::Fin(entries.get(n).unwrap_or(default).clone()),
            Node::MaxConst { inner, floor } => inner.eval(ctx, n)?.max_of(floor),
            Node::Compose { outer, inner } => match inner.eval(ctx, n)? {
                ExtNat::Fin(m) => outer.eval(ctx, &m)?,
                ExtNat::Overflow => ExtNat::Overflow,
            },
            Node::Window(w) => {
                if let Some(v) = w.memo.lock().unwrap().get(n) {
                    return Ok(v.clone());
                }
                let v = match w.phi.eval(ctx, &w.eps, n)? {
                    ExtNat::Fin(m) => w.f.max_plus_id_on(ctx, &BigUint::one(), &(m + 1u32))?.monus(n),
                    ExtNat::Overflow => ExtNat::Overflow,
                };
                w.memo.lock().unwrap().insert(n.clone(), v.clone());
                v
            }
        };
        Ok(v.capped(&ctx.budget))
    }

    /// Evaluation outside any certificate computation, with the default budget.
    pub fn eval_u64(&self, n: u64) -> Option<u64> {
        let mut ctx = Ctx::new(Budget::default(), 64);
        self.eval(&mut ctx, &big(n)).ok()?.to_u64()
    }

    pub fn nondecreasing(&self) -> bool {
        match &*self.0 {
            Node::Constant(_) | Node::Linear { .. } => true,
            Node::Table { entries, default } => table_nondecreasing(entries, default),
            Node::MaxConst { inner, .. } => inner.nondecreasing(),
            Node::Compose { outer, inner } => outer.nondecreasing() && inner.nondecreasing(),
            Node::Window(_) => false,
        }
    }

    /// Affine piece containing `n`, or None when `self(n)` overflows.
    pub fn segment(&self, ctx: &mut Ctx, n: &BigUint) -> Result<Option<Segment>> {
        let seg = match &*self.0 {
            Node::Constant(c) => Segment { a: BigUint::zero(), b: c.clone(), until: None },
            Node::Linear { a, b } => Segment { a: a.clone(), b: b.clone(), until: None },
            Node::Table { entries, default } => {
                if let Some(v) = entries.get(n) {
                    Segment { a: BigUint::zero(), b: v.clone(), until: Some(n.clone()) }
                } else {
                    let next = entries.range(n.clone()..).next().map(|(k, _)| k - 1u32);
                    Segment { a: BigUint::zero(), b: default.clone(), until: next }
                }
            }
            Node::MaxConst { inner, floor } => {
                let ExtNat::Fin(fl) = floor else { return Ok(None) };
                let Some(s) = inner.segment(ctx, n)? else { return Ok(None) };
                if s.a.is_zero() {
                    Segment { a: s.a, b: (&s.b).max(fl).clone(), until: s.until }
                } else if &s.a * n + &s.b >= *fl {
                    s
                } else {
                    // Constant floor until the affine piece catches up.
                    let need = fl - &s.b;
                    let first = (&need + &s.a - 1u32) / &s.a;
                    let end = first - 1u32;
                    let until = match s.until {
                        Some(u) if u < end => u,
                        _ => end,
                    };
                    Segment { a: BigUint::zero(), b: fl.clone(), until: Some(until) }
                }
            }
            Node::Compose { .. } | Node::Window(_) => match self.eval(ctx, n)? {
                ExtNat::Fin(v) => Segment { a: BigUint::zero(), b: v, until: Some(n.clone()) },
                ExtNat::Overflow => return Ok(None),
            },
        };
        Ok(Some(seg))
    }

    /// max{ self(k) : lo <= k <= hi }
    pub fn max_on(&self, ctx: &mut Ctx, lo: &BigUint, hi: &BigUint) -> Result<ExtNat> {
        if lo > hi {
            return input("empty range");
        }
        if self.nondecreasing() {
            return self.eval(ctx, hi);
        }
        match &*self.0 {
            Node::Table { entries, default } => {
                let mut best = BigUint::zero();
                let mut keys = BigUint::zero();
                for (_, v) in entries.range(lo.clone()..=hi.clone()) {
                    best = best.max(v.clone());
                    keys += 1u32;
                }
                if keys < hi - lo + 1u32 {
                    best = best.max(default.clone());
                }
                Ok(ctx.cap(best))
            }
            Node::MaxConst { inner, floor } => Ok(inner.max_on(ctx, lo, hi)?.max_of(floor)),
            _ => self.enumerate(ctx, lo, hi, false),
        }
    }

    /// max{ k + self(k) : lo <= k <= hi }
    pub fn max_plus_id_on(&self, ctx: &mut Ctx, lo: &BigUint, hi: &BigUint) -> Result<ExtNat> {
        if lo > hi {
            return input("empty range");
        }
        if self.nondecreasing() {
            return Ok(self.eval(ctx, hi)?.add(&ExtNat::Fin(hi.clone())).capped(&ctx.budget));
        }
        match &*self.0 {
            Node::Table { entries, default } => {
                let mut best = BigUint::zero();
                for (k, v) in entries.range(lo.clone()..=hi.clone()) {
                    best = best.max(k + v);
                }
                // Largest index in range that falls back to the default.
                let mut k = hi.clone();
                loop {
                    if !entries.contains_key(&k) {
                        best = best.max(&k + default);
                        break;
                    }
                    if k == *lo {
                        break;
                    }
                    k -= 1u32;
                }
                Ok(ctx.cap(best))
            }
            Node::MaxConst { inner, floor } => {
                let a = inner.max_plus_id_on(ctx, lo, hi)?;
                Ok(a.max_of(&floor.add(&ExtNat::Fin(hi.clone()))).capped(&ctx.budget))
            }
            _ => self.enumerate(ctx, lo, hi, true),
        }
    }

    fn enumerate(&self, ctx: &mut Ctx, lo: &BigUint, hi: &BigUint, plus_id: bool) -> Result<ExtNat> {
        let width = hi - lo + 1u32;
        let w = width.to_u64().filter(|w| *w <= ctx.budget.enum_cap).ok_or_else(|| {
            Error::Budget(format!("enumerating {width} values of a non-monotone counterfunction"))
        })?;
        ctx.tick(w)?;
        let mut best = ExtNat::zero();
        let mut k = lo.clone();
        while k <= *hi {
            let mut v = self.eval(ctx, &k)?;
            if plus_id {
                v = v.add(&ExtNat::Fin(k.clone()));
            }
            best = best.max_of(&v);
            if best.is_overflow() {
                break;
            }
            k += 1u32;
        }
        Ok(best.capped(&ctx.budget))
    }
}

fn table_nondecreasing(entries: &BTreeMap<BigUint, BigUint>, default: &BigUint) -> bool {
    for (k, v) in entries {
        let prev_is_key = !k.is_zero() && entries.contains_key(&(k - 1u32));
        if !k.is_zero() && !prev_is_key && default > v {
            return false;
        }
        match entries.get(&(k + 1u32)) {
            Some(next) if next < v => return false,
            None if default < v => return false,
            _ => {}
        }
    }
    true
}

/// The k-fold iterate of n -> n + f(n), started at 0.
///
/// Constant and affine pieces are jumped over in closed form; a zero of f is a
/// fixed point, so the iteration stops there even when k is Overflow.
pub fn tilde_iterate(ctx: &mut Ctx, f: &Counterfunction, k: &ExtNat) -> Result<ExtNat> {
    let limit = ctx.budget.limit();
    let mut remaining: Option<BigUint> = k.finite().cloned();
    let mut x = BigUint::zero();
    loop {
        if matches!(&remaining, Some(r) if r.is_zero()) {
            return Ok(ExtNat::Fin(x));
        }
        ctx.tick(1)?;
        let Some(seg) = f.segment(ctx, &x)? else { return Ok(ExtNat::Overflow) };
        if (&seg.a * &x + &seg.b).is_zero() {
            return Ok(ExtNat::Fin(x));
        }
        if seg.a.is_zero() {
            let fit = seg.until.as_ref().map(|u| (u - &x) / &seg.b + 1u32);
            let s = match (fit, &remaining) {
                (Some(a), Some(r)) => a.min(r.clone()),
                (Some(a), None) => a,
                (None, Some(r)) => r.clone(),
                // No end in sight and unbounded count: the iterate leaves every bound.
                (None, None) => return Ok(ExtNat::Overflow),
            };
            x += &s * &seg.b;
            if let Some(r) = remaining.as_mut() {
                *r -= &s;
            }
        } else {
            x = (&seg.a + 1u32) * &x + &seg.b;
            if let Some(r) = remaining.as_mut() {
                *r -= 1u32;
            }
        }
        if x > limit {
            return Ok(ExtNat::Overflow);
        }
    }
}

/// Counterfunction description accepted in scenario files and on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CounterfunctionSpec {
    Constant { value: u64 },
    IdentityPlus { k: u64 },
    Linear { a: u64, b: u64 },
    Table {
        #[serde(deserialize_with = "string_keys")]
        entries: BTreeMap<u64, u64>,
        default: u64,
    },
}

// Tagged enums buffer their content, which loses the integer-key coercion for maps.
fn string_keys<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<u64, u64>, D::Error> {
    let raw = BTreeMap::<String, u64>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| k.trim().parse::<u64>().map(|k| (k, v)).map_err(serde::de::Error::custom))
        .collect()
}

impl CounterfunctionSpec {
    pub fn build(&self) -> Counterfunction {
        match self {
            CounterfunctionSpec::Constant { value } => Counterfunction::constant(*value),
            CounterfunctionSpec::IdentityPlus { k } => Counterfunction::identity_plus(*k),
            CounterfunctionSpec::Linear { a, b } => Counterfunction::linear(*a, *b),
            CounterfunctionSpec::Table { entries, default } => Counterfunction::table(entries.clone(), *default),
        }
    }

    /// Short form used by the command line: `const:K`, `id+K`, `lin:A:B`, `n`.
    pub fn parse_short(s: &str) -> Result<CounterfunctionSpec> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| Error::Input(format!("bad counterfunction {s:?}")));
        if s == "n" {
            return Ok(CounterfunctionSpec::Linear { a: 1, b: 0 });
        }
        if let Some(r) = s.strip_prefix("const:") {
            return Ok(CounterfunctionSpec::Constant { value: num(r)? });
        }
        if let Some(r) = s.strip_prefix("id+") {
            return Ok(CounterfunctionSpec::IdentityPlus { k: num(r)? });
        }
        if let Some(r) = s.strip_prefix("lin:") {
            let (a, b) = r.split_once(':').ok_or_else(|| Error::Input(format!("bad counterfunction {s:?}")))?;
            return Ok(CounterfunctionSpec::Linear { a: num(a)?, b: num(b)? });
        }
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Input(format!("bad counterfunction {s:?}: {e}")));
        }
        Ok(CounterfunctionSpec::Constant { value: num(s)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Ctx {
        Ctx::new(Budget::default(), 64)
    }

    fn naive_tilde(f: &Counterfunction, k: u64) -> u64 {
        let mut x = 0u64;
        for _ in 0..k {
            x += f.eval_u64(x).unwrap();
        }
        x
    }

    #[test]
    fn tilde_matches_naive() {
        let mut c = ctx();
        let mut t = BTreeMap::new();
        t.insert(0, 2);
        t.insert(3, 0);
        t.insert(9, 5);
        let fs = [
            Counterfunction::constant(1),
            Counterfunction::constant(3),
            Counterfunction::linear(1, 1),
            Counterfunction::linear(2, 0),
            Counterfunction::table(t, 1),
            Counterfunction::constant(0).max_const(ExtNat::from_u64(4)),
            Counterfunction::linear(1, 0).max_const(ExtNat::from_u64(9)),
        ];
        for f in &fs {
            for k in 0..20u64 {
                let got = tilde_iterate(&mut c, f, &ExtNat::from_u64(k)).unwrap();
                assert_eq!(got, ExtNat::from_u64(naive_tilde(f, k)), "{f} k={k}");
            }
        }
    }

    #[test]
    fn tilde_fixed_point_and_overflow() {
        let mut c = ctx();
        let id = Counterfunction::linear(1, 0);
        assert_eq!(tilde_iterate(&mut c, &id, &ExtNat::Overflow).unwrap(), ExtNat::zero());
        let one = Counterfunction::constant(1);
        assert_eq!(tilde_iterate(&mut c, &one, &ExtNat::Overflow).unwrap(), ExtNat::Overflow);
        let doubling = Counterfunction::linear(1, 1);
        assert_eq!(tilde_iterate(&mut c, &doubling, &ExtNat::from_u64(300)).unwrap(), ExtNat::Overflow);
        let big = ExtNat::Fin(BigUint::one() << 200u32);
        assert_eq!(tilde_iterate(&mut c, &one, &big).unwrap(), big);
    }

    #[test]
    fn table_monotonicity() {
        let mut t = BTreeMap::new();
        t.insert(0, 0);
        t.insert(1, 2);
        assert!(Counterfunction::table(t.clone(), 2).nondecreasing());
        assert!(!Counterfunction::table(t.clone(), 1).nondecreasing());
        t.insert(5, 1);
        assert!(!Counterfunction::table(t, 3).nondecreasing());
    }

    #[test]
    fn window_maxima() {
        let mut c = ctx();
        let mut t = BTreeMap::new();
        t.insert(2, 10);
        let f = Counterfunction::table(t, 1);
        assert_eq!(f.max_on(&mut c, &big(0), &big(5)).unwrap(), ExtNat::from_u64(10));
        assert_eq!(f.max_on(&mut c, &big(3), &big(5)).unwrap(), ExtNat::from_u64(1));
        assert_eq!(f.max_plus_id_on(&mut c, &big(1), &big(5)).unwrap(), ExtNat::from_u64(12));
        assert_eq!(f.max_plus_id_on(&mut c, &big(1), &big(20)).unwrap(), ExtNat::from_u64(21));
    }

    #[test]
    fn spec_parsing() {
        let s: CounterfunctionSpec = serde_json::from_str(r#"{"kind":"identity_plus","k":1}"#).unwrap();
        assert_eq!(s.build().eval_u64(4), Some(5));
        let t: CounterfunctionSpec =
            serde_json::from_str(r#"{"kind":"table","entries":{"0":3,"2":1},"default":0}"#).unwrap();
        assert_eq!(t.build().eval_u64(0), Some(3));
        assert_eq!(t.build().eval_u64(1), Some(0));
        assert_eq!(CounterfunctionSpec::parse_short("n").unwrap().build().eval_u64(7), Some(7));
        assert!(CounterfunctionSpec::parse_short("lin:x").is_err());
    }
}
