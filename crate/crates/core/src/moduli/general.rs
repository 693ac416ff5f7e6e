//! The abstract metastability and rate constructions over a modulus bundle.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bundle::{ErrorRate, FejerModulus, ModulusBundle, NatOfReal, Phi, RealMap};
use super::certificate::{certify, Certificate};
use super::counter::Counterfunction;
use super::ctx::Ctx;
use super::extnat::{Budget, ExtNat};
use super::interval::Interval;
use super::rational::{self as q, serde_rat, Rat};
use crate::error::{input, Error, Result};

/// chi^M_f(eps, n) = min{ chi(eps, m, f(m+1)+1) : m <= n }
pub fn chi_window_min(
    ctx: &mut Ctx,
    chi: &FejerModulus,
    eps: &Interval,
    f: &Counterfunction,
    n: &ExtNat,
) -> Result<Interval> {
    let Some(n) = n.finite() else {
        return Err(Error::Budget("window minimum over an unbounded range".into()));
    };
    if chi.window_antitone() {
        let m = f.max_on(ctx, &BigUint::one(), &(n + 1u32))?.succ();
        return chi.eval(ctx, eps, &ExtNat::zero(), &m);
    }
    let cap = ctx.budget.enum_cap;
    let top = n.to_u64().filter(|v| *v < cap).ok_or_else(|| Error::Budget(format!("window minimum up to {n}")))?;
    ctx.tick(top + 1)?;
    let mut best: Option<Interval> = None;
    for m in 0..=top {
        let w = f.eval(ctx, &BigUint::from(m + 1))?.succ();
        let v = chi.eval(ctx, eps, &ExtNat::from_u64(m), &w)?;
        best = Some(match best {
            Some(b) => b.min(&v),
            None => v,
        });
    }
    Ok(best.expect("range is nonempty"))
}

/// Shared recursion: Delta = max{ Delta(j) : j <= P } + 1 with P = gamma(g(h(eps/2)/3)) + 1.
///
/// eps_hat_j only depends on the running maximum of earlier Delta(i), so once a
/// level fails to raise that maximum every later level repeats it and the loop
/// stops early.
pub(crate) fn delta_core(
    ctx: &mut Ctx,
    bundle: &ModulusBundle,
    chi: &FejerModulus,
    eps: &Interval,
    f: &Counterfunction,
) -> Result<ExtNat> {
    let p = ctx.p();
    let (g, h, gamma, phi, eta) = (bundle.g()?, bundle.h()?, bundle.gamma_tb()?, bundle.phi()?, bundle.eta()?);
    if matches!(phi, Phi::Unary(_)) && !matches!(eta, ErrorRate::Zero) {
        return input("a unary phi requires a vanishing error term");
    }
    let delta = h.eval(ctx, &eps.div_rat(&q::int(2), &p)?)?.div_rat(&q::int(3), &p)?;
    let gd = g.eval(ctx, &delta)?;
    let big_p = gamma.eval(ctx, &gd)?.succ().capped(&ctx.budget);
    ctx.note("delta", &delta);
    ctx.note("P", &big_p);
    let Some(levels) = big_p.finite().cloned() else { return Ok(ExtNat::Overflow) };
    let mut runmax = ExtNat::zero();
    let mut j = BigUint::one();
    while j <= levels {
        ctx.tick(1)?;
        let eps_hat = chi_window_min(ctx, chi, &delta, f, &runmax)?;
        let dj = match (eta, phi) {
            (ErrorRate::Zero, Phi::Unary(u)) => u.eval(ctx, &eps_hat)?,
            (ErrorRate::Zero, Phi::Liminf(l)) => l.eval(ctx, &eps_hat, &BigUint::zero())?,
            (ErrorRate::Convergence(e), Phi::Liminf(l)) => {
                let n = e.eval(ctx, &delta)?;
                l.max_upto(ctx, &eps_hat, &n)?
            }
            (ErrorRate::Metastability { f: m, .. }, Phi::Liminf(l)) => {
                let reach = Counterfunction::window_reach(f, l, &eps_hat);
                let n = m(ctx, &delta, &reach)?;
                l.max_upto(ctx, &eps_hat, &n)?
            }
            _ => unreachable!(),
        };
        ctx.note(format!("eps_hat({j})"), &eps_hat);
        ctx.note(format!("Delta({j})"), &dj);
        if dj <= runmax {
            break;
        }
        runmax = dj;
        if runmax.is_overflow() {
            return Ok(ExtNat::Overflow);
        }
        j += 1u32;
    }
    Ok(runmax.succ().capped(&ctx.budget))
}

pub fn delta_general_in(ctx: &mut Ctx, bundle: &ModulusBundle, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    if !matches!(bundle.eta()?, ErrorRate::Metastability { .. }) {
        return input("delta_general needs a metastability rate for the errors");
    }
    delta_core(ctx, bundle, bundle.chi()?, eps, f)
}

pub fn delta_with_error_rate_in(ctx: &mut Ctx, bundle: &ModulusBundle, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    if matches!(bundle.eta()?, ErrorRate::Metastability { .. }) {
        return input("delta_with_error_rate needs a convergence rate or zero errors");
    }
    delta_core(ctx, bundle, bundle.chi()?, eps, f)
}

/// Delta(min{eps, omega(eps/2)}, f) with chi replaced by min{eps/2, chi}.
pub fn delta_uniform_continuity_in(ctx: &mut Ctx, bundle: &ModulusBundle, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    let p = ctx.p();
    let half = eps.div_rat(&q::int(2), &p)?;
    let eps0 = eps.min(&bundle.omega()?.eval(ctx, &half)?);
    ctx.note("eps0", &eps0);
    let chi = bundle.chi()?.capped(half);
    delta_core(ctx, bundle, &chi, &eps0, f)
}

fn bundle_inputs(bundle: &ModulusBundle, eps: &Interval, f: &Counterfunction) -> serde_json::Value {
    json!({
        "eps": eps.to_string(),
        "f": f.to_string(),
        "g": bundle.g.as_ref().map(|m| m.label().to_string()),
        "h": bundle.h.as_ref().map(|m| m.label().to_string()),
        "phi": bundle.phi.as_ref().map(|m| m.label().to_string()),
        "chi": bundle.chi.as_ref().map(|m| m.label().to_string()),
        "eta": bundle.eta.as_ref().map(|m| m.kind()),
        "gamma": bundle.gamma_tb.as_ref().map(|m| m.label().to_string()),
    })
}

pub fn delta_general(bundle: &ModulusBundle, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    certify("delta_general", bundle_inputs(bundle, &e, f), budget, |ctx| delta_general_in(ctx, bundle, &e, f))
}

pub fn delta_with_error_rate(bundle: &ModulusBundle, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    certify("delta_with_error_rate", bundle_inputs(bundle, &e, f), budget, |ctx| {
        delta_with_error_rate_in(ctx, bundle, &e, f)
    })
}

pub fn delta_uniform_continuity(bundle: &ModulusBundle, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    certify("delta_uniform_continuity", bundle_inputs(bundle, &e, f), budget, |ctx| {
        delta_uniform_continuity_in(ctx, bundle, &e, f)
    })
}

/// rho(eps, f) = max{ phi(tau(g(h(eps)/2)), n) : n <= eta(h(eps)/2, f_{phi,arg}) } + 1
pub fn rho_metastable_regular_in(ctx: &mut Ctx, bundle: &ModulusBundle, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    let p = ctx.p();
    let ErrorRate::Metastability { f: eta, .. } = bundle.eta()? else {
        return input("rho_metastable_regular needs a metastability rate for the errors");
    };
    let phi = bundle.phi()?.as_liminf();
    let half = bundle.h()?.eval(ctx, eps)?.div_rat(&q::int(2), &p)?;
    let g = bundle.g()?.eval(ctx, &half)?;
    let arg = bundle.tau()?.eval(ctx, &g)?;
    ctx.note("phi_arg", &arg);
    let reach = Counterfunction::window_reach(f, &phi, &arg);
    let n = eta(ctx, &half, &reach)?;
    ctx.note("N", &n);
    Ok(phi.max_upto(ctx, &arg, &n)?.succ().capped(&ctx.budget))
}

/// Which form of the regularity-based rate was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoBranch {
    WithErrors,
    ZeroErrors,
}

/// With a convergence rate: phi(tau(g(h(eps)/2)), eta(h(eps)/2)) + 1.
/// Without errors: phi(tau(g(h(eps)))) + 1.
pub fn rho_convergence_regular_in(ctx: &mut Ctx, bundle: &ModulusBundle, eps: &Interval) -> Result<(ExtNat, RhoBranch)> {
    let p = ctx.p();
    let (g, h, tau, phi) = (bundle.g()?, bundle.h()?, bundle.tau()?, bundle.phi()?);
    match bundle.eta()? {
        ErrorRate::Convergence(eta) => {
            let half = h.eval(ctx, eps)?.div_rat(&q::int(2), &p)?;
            let gh = g.eval(ctx, &half)?;
            let arg = tau.eval(ctx, &gh)?;
            let n = eta.eval(ctx, &half)?;
            let Some(n) = n.finite().cloned() else { return Ok((ExtNat::Overflow, RhoBranch::WithErrors)) };
            let v = phi.as_liminf().eval(ctx, &arg, &n)?;
            Ok((v.succ().capped(&ctx.budget), RhoBranch::WithErrors))
        }
        ErrorRate::Zero => {
            let he = h.eval(ctx, eps)?;
            let gh = g.eval(ctx, &he)?;
            let arg = tau.eval(ctx, &gh)?;
            let v = match phi {
                Phi::Unary(u) => u.eval(ctx, &arg)?,
                Phi::Liminf(l) => l.eval(ctx, &arg, &BigUint::zero())?,
            };
            Ok((v.succ().capped(&ctx.budget), RhoBranch::ZeroErrors))
        }
        ErrorRate::Metastability { .. } => input("rho_convergence_regular needs a convergence rate or zero errors"),
    }
}

pub fn rho_metastable_regular(bundle: &ModulusBundle, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let mut inputs = bundle_inputs(bundle, &e, f);
    inputs["tau"] = json!(bundle.tau.as_ref().map(|m| m.label().to_string()));
    certify("rho_metastable_regular", inputs, budget, |ctx| rho_metastable_regular_in(ctx, bundle, &e, f))
}

pub fn rho_convergence_regular(bundle: &ModulusBundle, eps: &Rat, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let mut inputs = bundle_inputs(bundle, &e, &Counterfunction::constant(0));
    inputs["tau"] = json!(bundle.tau.as_ref().map(|m| m.label().to_string()));
    if let Some(o) = inputs.as_object_mut() {
        o.remove("f");
    }
    certify("rho_convergence_regular", inputs, budget, |ctx| {
        let (v, branch) = rho_convergence_regular_in(ctx, bundle, &e)?;
        ctx.note("branch", serde_json::to_value(branch).unwrap().as_str().unwrap_or(""));
        Ok(v)
    })
}

/// c = (1 + beta k^p)^{-1/p}
pub fn fast_linear_rate(beta: f64, k: f64, p: f64) -> Result<f64> {
    if !(beta > 0.0 && k > 0.0 && beta.is_finite() && k.is_finite()) {
        return input("fast_linear_rate needs beta > 0 and k > 0");
    }
    if !(p >= 1.0 && p.is_finite()) {
        return input("fast_linear_rate needs p >= 1");
    }
    // ln(1 + x) keeps c below 1 when beta k^p is tiny.
    let x = beta * k.powf(p);
    Ok((-x.ln_1p() / p).exp())
}

/// gamma(eps) = ceil(2 (ceil(1/eps) + 1) sqrt(d) b)^d
pub fn ball_total_boundedness_in(ctx: &mut Ctx, d: u32, b: &Interval, eps: &Interval) -> Result<ExtNat> {
    let p = ctx.p();
    if d == 0 {
        return input("dimension must be at least 1");
    }
    if !b.is_nonneg() {
        return input("radius must be nonnegative");
    }
    let k = ctx.ceil(&eps.recip(&p)?)?;
    if k.is_overflow() {
        return Ok(ExtNat::Overflow);
    }
    let two_k1 = ctx.real(&k.succ()).mul_rat(&q::int(2), &p)?;
    let side = Interval::sqrt_of(&q::int(d as i64), &p)?.neg_free_mul(&two_k1, &p).neg_free_mul(b, &p);
    let base = ctx.ceil(&side)?;
    Ok(pow_nat(&base, d as u64, &ctx.budget))
}

pub(crate) fn pow_nat(base: &ExtNat, e: u64, budget: &Budget) -> ExtNat {
    match base {
        ExtNat::Overflow => {
            if e == 0 {
                ExtNat::one()
            } else {
                ExtNat::Overflow
            }
        }
        ExtNat::Fin(v) => {
            if v.is_zero() || v.is_one() || e == 0 {
                return ExtNat::Fin(num_traits::pow(v.clone(), if e == 0 { 0 } else { 1 }));
            }
            if (v.bits() - 1).saturating_mul(e) > budget.max_bits + 1 {
                return ExtNat::Overflow;
            }
            ExtNat::Fin(num_traits::pow(v.clone(), e as usize)).capped(budget)
        }
    }
}

pub fn ball_total_boundedness(d: u32, b: &Rat, eps: &Rat, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let bi = Interval::exact(b.clone());
    let inputs = json!({"d": d, "b": q::rat_to_string(b), "eps": q::rat_to_string(eps)});
    certify("ball_total_boundedness", inputs, budget, |ctx| ball_total_boundedness_in(ctx, d, &bi, &e))
}

/// The ball modulus as a bundle entry.
pub fn ball_gamma(d: u32, b: Interval) -> NatOfReal {
    NatOfReal::new(format!("ball(d={d},b={b})"), move |ctx, e| ball_total_boundedness_in(ctx, d, &b, e))
}

/// Catalogued moduli of regularity.
#[derive(Clone)]
pub enum RegularityKind {
    QuasiContraction(Rat),
    OrbitalContraction(Rat),
    Retraction,
    StronglyAccretive(Rat),
    MetricSubregular(Rat),
    WeakSharp(RealMap),
    StronglyQuasiconvex(Rat),
}

/// Serializable form of the catalogue, without the free-function case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularitySpec {
    QuasiContraction {
        #[serde(with = "serde_rat")]
        c: Rat,
    },
    OrbitalContraction {
        #[serde(with = "serde_rat")]
        c: Rat,
    },
    Retraction,
    StronglyAccretive {
        #[serde(with = "serde_rat")]
        beta: Rat,
    },
    MetricSubregular {
        #[serde(with = "serde_rat")]
        k: Rat,
    },
    StronglyQuasiconvex {
        #[serde(with = "serde_rat")]
        rho: Rat,
    },
}

impl RegularitySpec {
    pub fn kind(&self) -> RegularityKind {
        match self {
            RegularitySpec::QuasiContraction { c } => RegularityKind::QuasiContraction(c.clone()),
            RegularitySpec::OrbitalContraction { c } => RegularityKind::OrbitalContraction(c.clone()),
            RegularitySpec::Retraction => RegularityKind::Retraction,
            RegularitySpec::StronglyAccretive { beta } => RegularityKind::StronglyAccretive(beta.clone()),
            RegularitySpec::MetricSubregular { k } => RegularityKind::MetricSubregular(k.clone()),
            RegularitySpec::StronglyQuasiconvex { rho } => RegularityKind::StronglyQuasiconvex(rho.clone()),
        }
    }
}

pub fn regularity_modulus(kind: &RegularityKind) -> Result<RealMap> {
    let unit_interval = |c: &Rat| !c.is_negative() && *c < q::one();
    Ok(match kind {
        RegularityKind::QuasiContraction(c) | RegularityKind::OrbitalContraction(c) => {
            if !unit_interval(c) {
                return input("contraction factor must lie in [0,1)");
            }
            RealMap::scale(q::one() - c)
        }
        RegularityKind::Retraction => RealMap::identity(),
        RegularityKind::StronglyAccretive(beta) => {
            if !beta.is_positive() {
                return input("strong accretivity constant must be positive");
            }
            RealMap::scale(beta.clone())
        }
        RegularityKind::MetricSubregular(k) => {
            if !k.is_positive() {
                return input("subregularity constant must be positive");
            }
            RealMap::scale(q::one() / k)
        }
        RegularityKind::WeakSharp(tau) => tau.clone(),
        RegularityKind::StronglyQuasiconvex(rho) => {
            if !rho.is_positive() {
                return input("quasiconvexity constant must be positive");
            }
            RealMap::scaled_power(rho / q::int(2), q::int(2))
        }
    })
}

pub(crate) fn positive(eps: &Rat) -> Result<Interval> {
    if !eps.is_positive() {
        return input("eps must be positive");
    }
    Ok(Interval::exact(eps.clone()))
}
