//! Evaluable moduli and the bundle the abstract constructions consume.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::counter::Counterfunction;
use super::ctx::Ctx;
use super::extnat::ExtNat;
use super::interval::Interval;
use super::rational::{self as q, serde_rat, Rat};
use crate::error::{input, Error, Result};

type RealFn = dyn Fn(&mut Ctx, &Interval) -> Result<Interval> + Send + Sync;
type NatFn = dyn Fn(&mut Ctx, &Interval) -> Result<ExtNat> + Send + Sync;
type LiminfFn = dyn Fn(&mut Ctx, &Interval, &BigUint) -> Result<ExtNat> + Send + Sync;
type ChiFn = dyn Fn(&mut Ctx, &Interval, &ExtNat, &ExtNat) -> Result<Interval> + Send + Sync;
type MetaFn = dyn Fn(&mut Ctx, &Interval, &Counterfunction) -> Result<ExtNat> + Send + Sync;

/// A positive real function such as g, h, tau or omega.
#[derive(Clone)]
pub struct RealMap {
    label: String,
    f: Arc<RealFn>,
}

impl RealMap {
    pub fn new(label: impl Into<String>, f: impl Fn(&mut Ctx, &Interval) -> Result<Interval> + Send + Sync + 'static) -> RealMap {
        RealMap { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, ctx: &mut Ctx, x: &Interval) -> Result<Interval> {
        (self.f)(ctx, x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn identity() -> RealMap {
        RealMap::new("id", |_, x| Ok(x.clone()))
    }

    /// x -> c x
    pub fn scale(c: Rat) -> RealMap {
        RealMap::new(format!("{}*e", q::rat_to_string(&c)), move |ctx, x| x.mul_rat(&c, &ctx.p()))
    }

    /// x -> x^e
    pub fn power(e: Rat) -> RealMap {
        RealMap::new(format!("e^{}", q::rat_to_string(&e)), move |ctx, x| x.pow_rat(&e, &ctx.p()))
    }

    /// x -> c x^e
    pub fn scaled_power(c: Rat, e: Rat) -> RealMap {
        let label = format!("{}*e^{}", q::rat_to_string(&c), q::rat_to_string(&e));
        RealMap::new(label, move |ctx, x| {
            let p = ctx.p();
            x.pow_rat(&e, &p)?.mul_rat(&c, &p)
        })
    }

    /// A map that is +inf everywhere; makes min{eps, omega(eps/2)} inactive.
    pub fn unbounded() -> RealMap {
        RealMap::new("inf", |ctx, _| Ok(ctx.real(&ExtNat::Overflow)))
    }
}

/// A natural-valued function of a positive real: unary phi, gamma, convergence eta.
#[derive(Clone)]
pub struct NatOfReal {
    label: String,
    f: Arc<NatFn>,
}

impl NatOfReal {
    pub fn new(label: impl Into<String>, f: impl Fn(&mut Ctx, &Interval) -> Result<ExtNat> + Send + Sync + 'static) -> NatOfReal {
        NatOfReal { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, ctx: &mut Ctx, x: &Interval) -> Result<ExtNat> {
        (self.f)(ctx, x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn constant(v: u64) -> NatOfReal {
        NatOfReal::new(format!("{v}"), move |_, _| Ok(ExtNat::from_u64(v)))
    }

    /// x -> ceil(c / x^e)
    pub fn ceil_over_power(c: Rat, e: Rat) -> NatOfReal {
        let label = format!("ceil({}/e^{})", q::rat_to_string(&c), q::rat_to_string(&e));
        NatOfReal::new(label, move |ctx, x| {
            let p = ctx.p();
            let v = Interval::exact(c.clone()).div(&x.pow_rat(&e, &p)?, &p)?;
            ctx.ceil(&v)
        })
    }
}

/// A liminf-bound phi(eps, n).
#[derive(Clone)]
pub struct LiminfBound {
    label: String,
    f: Arc<LiminfFn>,
    nondecreasing_in_n: bool,
    monotone_in_eps: bool,
}

impl LiminfBound {
    /// `nondecreasing_in_n`: phi(eps, n) <= phi(eps, n+1).
    /// `monotone_in_eps`: eps <= delta implies phi(eps, n) >= phi(delta, n).
    pub fn new(
        label: impl Into<String>,
        nondecreasing_in_n: bool,
        monotone_in_eps: bool,
        f: impl Fn(&mut Ctx, &Interval, &BigUint) -> Result<ExtNat> + Send + Sync + 'static,
    ) -> LiminfBound {
        LiminfBound { label: label.into(), f: Arc::new(f), nondecreasing_in_n, monotone_in_eps }
    }

    /// Lifts a unary bound to one that ignores n.
    pub fn from_unary(u: &NatOfReal) -> LiminfBound {
        let u = u.clone();
        LiminfBound::new(u.label.clone(), true, true, move |ctx, e, _| u.eval(ctx, e))
    }

    pub fn eval(&self, ctx: &mut Ctx, eps: &Interval, n: &BigUint) -> Result<ExtNat> {
        (self.f)(ctx, eps, n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nondecreasing_in_n(&self) -> bool {
        self.nondecreasing_in_n
    }

    pub fn monotone_in_eps(&self) -> bool {
        self.monotone_in_eps
    }

    /// max{ phi(eps, n) : n <= upto }
    pub fn max_upto(&self, ctx: &mut Ctx, eps: &Interval, upto: &ExtNat) -> Result<ExtNat> {
        let Some(upto) = upto.finite() else { return Ok(ExtNat::Overflow) };
        if self.nondecreasing_in_n {
            return self.eval(ctx, eps, upto);
        }
        let cap = ctx.budget.enum_cap;
        let n = upto.to_u64().filter(|n| *n < cap).ok_or_else(|| Error::Budget(format!("enumerating phi up to {upto}")))?;
        ctx.tick(n + 1)?;
        let mut best = ExtNat::zero();
        for k in 0..=n {
            best = best.max_of(&self.eval(ctx, eps, &BigUint::from(k))?);
            if best.is_overflow() {
                break;
            }
        }
        Ok(best)
    }
}

/// The monotone hull phi^(eps, n) = max{ phi(1/(k+1), n) : k <= ceil(1/eps) }.
pub fn monotone_liminf_bound(phi_raw: &LiminfBound) -> LiminfBound {
    let raw = phi_raw.clone();
    let label = format!("mono({})", raw.label);
    let nondec = raw.nondecreasing_in_n;
    LiminfBound::new(label, nondec, true, move |ctx, eps, n| {
        let p = ctx.p();
        let kmax = ctx.ceil(&eps.recip(&p)?)?;
        let Some(kmax) = kmax.finite().cloned() else { return Ok(ExtNat::Overflow) };
        let at = |ctx: &mut Ctx, k: &BigUint| -> Result<ExtNat> {
            let e = Interval::exact(Rat::new(1.into(), (k + 1u32).into()));
            raw.eval(ctx, &e, n)
        };
        if raw.monotone_in_eps {
            return at(ctx, &kmax);
        }
        let cap = ctx.budget.enum_cap;
        let kmax = kmax.to_u64().filter(|k| *k < cap).ok_or_else(|| Error::Budget("monotone hull range".into()))?;
        ctx.tick(kmax + 1)?;
        let mut best = ExtNat::zero();
        for k in 0..=kmax {
            best = best.max_of(&at(ctx, &BigUint::from(k))?);
            if best.is_overflow() {
                break;
            }
        }
        Ok(best)
    })
}

#[derive(Clone)]
pub enum Phi {
    Liminf(LiminfBound),
    /// Approximate-point bound phi(eps); only meaningful without errors.
    Unary(NatOfReal),
}

impl Phi {
    pub fn label(&self) -> &str {
        match self {
            Phi::Liminf(l) => l.label(),
            Phi::Unary(u) => u.label(),
        }
    }

    pub fn as_liminf(&self) -> LiminfBound {
        match self {
            Phi::Liminf(l) => l.clone(),
            Phi::Unary(u) => LiminfBound::from_unary(u),
        }
    }
}

/// A modulus of uniform quasi-Fejer monotonicity chi(eps, n, m).
#[derive(Clone)]
pub struct FejerModulus {
    label: String,
    f: Arc<ChiFn>,
    window_antitone: bool,
}

impl FejerModulus {
    /// `window_antitone`: the value does not depend on n and is nonincreasing in m.
    pub fn new(
        label: impl Into<String>,
        window_antitone: bool,
        f: impl Fn(&mut Ctx, &Interval, &ExtNat, &ExtNat) -> Result<Interval> + Send + Sync + 'static,
    ) -> FejerModulus {
        FejerModulus { label: label.into(), f: Arc::new(f), window_antitone }
    }

    pub fn eval(&self, ctx: &mut Ctx, eps: &Interval, n: &ExtNat, m: &ExtNat) -> Result<Interval> {
        (self.f)(ctx, eps, n, m)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn window_antitone(&self) -> bool {
        self.window_antitone
    }

    /// chi(eps, n, m) = c eps / m with c = 1/coef_den.
    pub fn over_window(coef: Rat) -> FejerModulus {
        let label = format!("{}*e/m", q::rat_to_string(&coef));
        FejerModulus::new(label, true, move |ctx, eps, _, m| {
            let p = ctx.p();
            eps.mul_rat(&coef, &p)?.div(&ctx.real(m), &p)
        })
    }

    /// Replaces chi by min{cap, chi}.
    pub fn capped(&self, cap: Interval) -> FejerModulus {
        let inner = self.clone();
        let label = format!("min({cap},{})", inner.label);
        FejerModulus::new(label, inner.window_antitone, move |ctx, e, n, m| Ok(cap.min(&inner.eval(ctx, e, n, m)?)))
    }
}

/// The error term's rate.
#[derive(Clone)]
pub enum ErrorRate {
    Zero,
    Convergence(NatOfReal),
    Metastability { label: String, f: Arc<MetaFn> },
}

impl ErrorRate {
    pub fn metastability(
        label: impl Into<String>,
        f: impl Fn(&mut Ctx, &Interval, &Counterfunction) -> Result<ExtNat> + Send + Sync + 'static,
    ) -> ErrorRate {
        ErrorRate::Metastability { label: label.into(), f: Arc::new(f) }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ErrorRate::Zero => "zero",
            ErrorRate::Convergence(_) => "convergence",
            ErrorRate::Metastability { .. } => "metastability",
        }
    }
}

/// The functions parameterizing the abstract constructions. Each field is
/// optional; a construction reports an input error for any it needs but lacks.
#[derive(Clone, Default)]
pub struct ModulusBundle {
    pub g: Option<RealMap>,
    pub h: Option<RealMap>,
    pub phi: Option<Phi>,
    pub chi: Option<FejerModulus>,
    pub eta: Option<ErrorRate>,
    pub gamma_tb: Option<NatOfReal>,
    pub tau: Option<RealMap>,
    pub omega: Option<RealMap>,
}

fn need<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Input(format!("modulus bundle lacks {name}")))
}

impl ModulusBundle {
    pub fn new() -> ModulusBundle {
        ModulusBundle::default()
    }

    pub fn with_perturbation(mut self, pair: &PerturbationPair) -> ModulusBundle {
        self.g = Some(pair.g_modulus());
        self.h = Some(pair.h_modulus());
        self
    }

    pub fn with_g(mut self, g: RealMap) -> ModulusBundle {
        self.g = Some(g);
        self
    }

    pub fn with_h(mut self, h: RealMap) -> ModulusBundle {
        self.h = Some(h);
        self
    }

    /// Stores the monotone hull of `phi`, so that the bound is monotone in eps.
    pub fn with_phi(mut self, phi: LiminfBound) -> ModulusBundle {
        self.phi = Some(Phi::Liminf(if phi.monotone_in_eps() { phi } else { monotone_liminf_bound(&phi) }));
        self
    }

    pub fn with_unary_phi(mut self, phi: NatOfReal) -> ModulusBundle {
        self.phi = Some(Phi::Unary(phi));
        self
    }

    pub fn with_chi(mut self, chi: FejerModulus) -> ModulusBundle {
        self.chi = Some(chi);
        self
    }

    pub fn with_eta(mut self, eta: ErrorRate) -> ModulusBundle {
        self.eta = Some(eta);
        self
    }

    pub fn with_gamma(mut self, gamma: NatOfReal) -> ModulusBundle {
        self.gamma_tb = Some(gamma);
        self
    }

    pub fn with_tau(mut self, tau: RealMap) -> ModulusBundle {
        self.tau = Some(tau);
        self
    }

    pub fn with_omega(mut self, omega: RealMap) -> ModulusBundle {
        self.omega = Some(omega);
        self
    }

    pub fn g(&self) -> Result<&RealMap> {
        need(&self.g, "g")
    }
    pub fn h(&self) -> Result<&RealMap> {
        need(&self.h, "h")
    }
    pub fn phi(&self) -> Result<&Phi> {
        need(&self.phi, "phi")
    }
    pub fn chi(&self) -> Result<&FejerModulus> {
        need(&self.chi, "chi")
    }
    pub fn eta(&self) -> Result<&ErrorRate> {
        need(&self.eta, "eta")
    }
    pub fn gamma_tb(&self) -> Result<&NatOfReal> {
        need(&self.gamma_tb, "gamma")
    }
    pub fn tau(&self) -> Result<&RealMap> {
        need(&self.tau, "tau")
    }
    pub fn omega(&self) -> Result<&RealMap> {
        need(&self.omega, "omega")
    }
}

/// A perturbation function shape: identity, a -> a^p, or a -> c a^p.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    Identity,
    Power {
        #[serde(with = "serde_rat")]
        p: Rat,
    },
    ScaledPower {
        #[serde(with = "serde_rat")]
        coef: Rat,
        #[serde(with = "serde_rat")]
        p: Rat,
    },
}

impl Perturbation {
    fn coef_exp(&self) -> (Rat, Rat) {
        match self {
            Perturbation::Identity => (q::one(), q::one()),
            Perturbation::Power { p } => (q::one(), p.clone()),
            Perturbation::ScaledPower { coef, p } => (coef.clone(), p.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, p) = self.coef_exp();
        if !c.is_positive() || !p.is_positive() {
            return input("perturbation coefficient and exponent must be positive");
        }
        Ok(())
    }

    pub fn apply_f64(&self, a: f64) -> f64 {
        let (c, p) = self.coef_exp();
        q::to_f64(&c) * a.powf(q::to_f64(&p))
    }
}

/// The pair (G, H) in the quasi-Fejer inequality H(d(x(t),y)) <= G(d(x(s),y)) + ...
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationPair {
    #[serde(rename = "G")]
    pub g: Perturbation,
    #[serde(rename = "H")]
    pub h: Perturbation,
}

impl PerturbationPair {
    pub fn identity() -> PerturbationPair {
        PerturbationPair { g: Perturbation::Identity, h: Perturbation::Identity }
    }

    pub fn squares() -> PerturbationPair {
        let two = Perturbation::Power { p: q::int(2) };
        PerturbationPair { g: two.clone(), h: two }
    }

    /// For G = c a^p: a < (eps/c)^{1/p} implies G(a) < eps.
    pub fn g_modulus(&self) -> RealMap {
        let (c, p) = self.g.coef_exp();
        if c.is_one() && p.is_one() {
            return RealMap::identity();
        }
        let e = q::one() / &p;
        RealMap::new(format!("(e/{})^{}", q::rat_to_string(&c), q::rat_to_string(&e)), move |ctx, x| {
            let pr = ctx.p();
            x.div_rat(&c, &pr)?.pow_rat(&e, &pr)
        })
    }

    /// For H = c a^p: H(a) < c eps^p implies a < eps.
    pub fn h_modulus(&self) -> RealMap {
        let (c, p) = self.h.coef_exp();
        if c.is_one() && p.is_one() {
            return RealMap::identity();
        }
        RealMap::scaled_power(c, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::extnat::Budget;
    use num_traits::Zero;

    #[test]
    fn monotone_hull_example() {
        // phi(eps, n) = ceil(1/eps); hull at 1/2 is max over k <= 2 of (k+1).
        let raw = LiminfBound::new("ceil(1/e)", true, false, |ctx, e, _| {
            let p = ctx.p();
            let v = e.recip(&p)?;
            ctx.ceil(&v)
        });
        let hull = monotone_liminf_bound(&raw);
        let mut ctx = Ctx::new(Budget::default(), 64);
        let n = BigUint::zero();
        assert_eq!(hull.eval(&mut ctx, &Interval::ratio(1, 2), &n).unwrap(), ExtNat::from_u64(3));
        // eps >= 1: ceil(1/eps) = 1, max over k <= 1.
        assert_eq!(hull.eval(&mut ctx, &Interval::int(3), &n).unwrap(), ExtNat::from_u64(2));
        assert!(hull.monotone_in_eps());
    }

    #[test]
    fn perturbation_moduli() {
        let mut ctx = Ctx::new(Budget::default(), 64);
        let pair = PerturbationPair {
            g: Perturbation::ScaledPower { coef: q::int(4), p: q::int(2) },
            h: Perturbation::Power { p: q::int(3) },
        };
        let g = pair.g_modulus().eval(&mut ctx, &Interval::int(16)).unwrap();
        assert_eq!(g, Interval::int(2));
        let h = pair.h_modulus().eval(&mut ctx, &Interval::ratio(1, 2)).unwrap();
        assert_eq!(h, Interval::ratio(1, 8));
        let js = serde_json::to_string(&pair).unwrap();
        assert_eq!(serde_json::from_str::<PerturbationPair>(&js).unwrap(), pair);
    }
}
