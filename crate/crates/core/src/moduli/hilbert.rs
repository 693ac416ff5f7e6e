//! Certificates for the relaxed fixed-point flow, the damped second-order flow
//! and their forward-backward instances in finite-dimensional Hilbert space.
//!
//! The `delta_*` functions here evaluate the simplified recursions directly.
//! The `*_bundle` functions package the same data for the abstract
//! constructions in `general`, which is how the two routes are compared.

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bundle::{ErrorRate, FejerModulus, ModulusBundle, NatOfReal, Perturbation, PerturbationPair, RealMap};
use super::certificate::{certify, Certificate};
use super::counter::Counterfunction;
use super::ctx::Ctx;
use super::extnat::{Budget, ExtNat};
use super::general::{ball_gamma, positive, pow_nat};
use super::interval::Interval;
use super::lemmas::{lambda_capital_in, lambda_liminf, lambda_liminf_in, second_order_constants_in, SecondOrderConsts, SecondOrderParams};
use super::rational::{self as q, serde_rat, Rat};
use crate::error::{input, Result};

/// What is known about the relaxation parameter lambda(t).
#[derive(Clone)]
pub enum LambdaInfo {
    /// eta(K) bounds the time after which the integral of lambda(s - lambda)
    /// exceeds K, where s is the upper end of the admissible range.
    Divergence(NatOfReal),
    /// A positive lower bound on lambda.
    LowerWitness(Rat),
}

impl LambdaInfo {
    pub fn label(&self) -> String {
        match self {
            LambdaInfo::Divergence(eta) => format!("divergence({})", eta.label()),
            LambdaInfo::LowerWitness(l) => format!("lower_witness({})", q::rat_to_string(l)),
        }
    }
}

/// Serializable form of [`LambdaInfo`]; the divergence modulus is the linear
/// one K -> ceil(K / tau_lo) for tau_lo = inf lambda(s - lambda).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSpec {
    Divergence {
        #[serde(with = "serde_rat")]
        tau_lo: Rat,
    },
    LowerWitness {
        #[serde(with = "serde_rat")]
        lambda_lo: Rat,
    },
}

impl LambdaSpec {
    pub fn info(&self) -> Result<LambdaInfo> {
        match self {
            LambdaSpec::Divergence { tau_lo } => Ok(LambdaInfo::Divergence(divergence_linear(tau_lo.clone())?)),
            LambdaSpec::LowerWitness { lambda_lo } => {
                if !lambda_lo.is_positive() {
                    return input("lambda lower bound must be positive");
                }
                Ok(LambdaInfo::LowerWitness(lambda_lo.clone()))
            }
        }
    }
}

/// K -> ceil(K / tau_lo)
pub fn divergence_linear(tau_lo: Rat) -> Result<NatOfReal> {
    if !tau_lo.is_positive() {
        return input("tau lower bound must be positive");
    }
    let label = format!("ceil(K/{})", q::rat_to_string(&tau_lo));
    Ok(NatOfReal::new(label, move |ctx, k| {
        let p = ctx.p();
        let v = k.div_rat(&tau_lo, &p)?;
        ctx.ceil(&v)
    }))
}

/// Asymptotic-regularity rate for the residual ||T x(t) - x(t)||:
/// eta(s b^2 / eps^2), or ceil(4 b^4 s^2 / (lambda_lo^2 eps^2)).
/// `s` is 1 for the plain flow and the averagedness constant for forward-backward.
pub fn residual_rate_in(ctx: &mut Ctx, info: &LambdaInfo, b: &Rat, s: &Rat, eps: &Interval) -> Result<ExtNat> {
    let p = ctx.p();
    let e2 = eps.square(&p)?;
    match info {
        LambdaInfo::Divergence(eta) => {
            let k = Interval::exact(s * b * b).div(&e2, &p)?;
            eta.eval(ctx, &k)
        }
        LambdaInfo::LowerWitness(l) => {
            let num = q::int(4) * b * b * b * b * s * s / (l * l);
            let v = Interval::exact(num).div(&e2, &p)?;
            ctx.ceil(&v)
        }
    }
}

pub fn residual_rate_fn(info: &LambdaInfo, b: &Rat, s: &Rat) -> NatOfReal {
    let (info2, b2, s2) = (info.clone(), b.clone(), s.clone());
    let label = format!("residual[{};b={};s={}]", info.label(), q::rat_to_string(b), q::rat_to_string(s));
    NatOfReal::new(label, move |ctx, e| residual_rate_in(ctx, &info2, &b2, &s2, e))
}

pub fn residual_rate(info: &LambdaInfo, b: &Rat, s: &Rat, eps: &Rat, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let inputs = json!({
        "lambda": info.label(), "b": q::rat_to_string(b), "s": q::rat_to_string(s), "eps": q::rat_to_string(eps),
    });
    certify("residual_rate", inputs, budget, |ctx| residual_rate_in(ctx, info, b, s, &e))
}

/// ceil(2 (k + 1) sqrt(d) b)^d + 1, evaluated through ceil(sqrt(4 (k+1)^2 d b^2)).
fn levels(k: &BigUint, d: u32, b: &Rat, budget: &Budget) -> ExtNat {
    let k1 = q::from_biguint(&(k + 1u32));
    let side = q::ceil_sqrt(&(q::int(4) * &k1 * &k1 * q::int(d as i64) * b * b));
    pow_nat(&ExtNat::Fin(side), d as u64, budget).succ().capped(budget)
}

fn check_dim(d: u32, b: &Rat) -> Result<()> {
    if d == 0 {
        return input("dimension must be at least 1");
    }
    if b.is_negative() {
        return input("radius must be nonnegative");
    }
    Ok(())
}

/// Metastability bound for the relaxed flow: max{ Delta(j) : j <= P } + 1 with
/// Delta(j) = phi(eps_hat_j) and
/// eps_hat_j = min{ eps/2, (eps^2/12) / (4 b (f(m+1)+1)) : m <= Delta(i), i < j }.
/// The flow is eps-metastable at Delta(eps/4, f); this function evaluates Delta(eps, f).
pub fn delta_first_order_in(
    ctx: &mut Ctx,
    d: u32,
    b: &Rat,
    info: &LambdaInfo,
    s: &Rat,
    eps: &Rat,
    f: &Counterfunction,
) -> Result<ExtNat> {
    check_dim(d, b)?;
    let k = q::ceil_sqrt(&(q::int(12) / (eps * eps)));
    let big_p = levels(&k, d, b, &ctx.budget);
    ctx.note("P", &big_p);
    let Some(top) = big_p.finite().cloned() else { return Ok(ExtNat::Overflow) };
    let half = eps / q::int(2);
    let delta = eps * eps / q::int(12);
    let mut runmax = BigUint::zero();
    let mut j = BigUint::one();
    while j <= top {
        ctx.tick(1)?;
        let fm = f.max_on(ctx, &BigUint::one(), &(&runmax + 1u32))?;
        let Some(fm) = fm.finite() else { return Ok(ExtNat::Overflow) };
        let eps_hat = if b.is_zero() {
            half.clone()
        } else {
            let second = &delta / (q::int(4) * b * q::from_biguint(&(fm + 1u32)));
            (&half).min(&second).clone()
        };
        let dj = residual_rate_in(ctx, info, b, s, &Interval::exact(eps_hat))?;
        ctx.note(format!("Delta({j})"), &dj);
        let Some(dj) = dj.finite().cloned() else { return Ok(ExtNat::Overflow) };
        if dj <= runmax {
            break;
        }
        runmax = dj;
        j += 1u32;
    }
    Ok(ctx.cap(runmax + 1u32))
}

pub fn delta_first_order(d: u32, b: &Rat, info: &LambdaInfo, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    positive(eps)?;
    let inputs = json!({
        "d": d, "b": q::rat_to_string(b), "lambda": info.label(), "eps": q::rat_to_string(eps), "f": f.to_string(),
    });
    certify("delta_first_order", inputs, budget, |ctx| {
        ctx.note("metastable_at", q::rat_to_string(&(eps * q::rat(4, 1))));
        delta_first_order_in(ctx, d, b, info, &q::one(), eps, f)
    })
}

/// chi(delta, n, m) = min{ sqrt(3 delta), inner(delta, m) }. With delta = eps^2/12
/// the cap equals eps/2, the cap the simplified recursions apply.
fn capped_at_half(label: &str, inner: impl Fn(&mut Ctx, &Interval, &ExtNat) -> Result<Interval> + Send + Sync + 'static) -> FejerModulus {
    FejerModulus::new(format!("min(sqrt(3e),{label})"), true, move |ctx, e, _, m| {
        let p = ctx.p();
        let cap = e.mul_rat(&q::int(3), &p)?.sqrt(&p)?;
        Ok(cap.min(&inner(ctx, e, m)?))
    })
}

/// The relaxed flow's data as a bundle for `delta_with_error_rate`:
/// G = H = squares, the ball modulus, the unary residual rate as phi,
/// chi = eps / (4 b m) capped at sqrt(3 eps), and no errors.
pub fn first_order_bundle(d: u32, b: &Rat, info: &LambdaInfo, s: &Rat) -> ModulusBundle {
    let bb = b.clone();
    let chi = capped_at_half("e/(4bm)", move |ctx, e, m| {
        let p = ctx.p();
        e.div(&ctx.real(m).mul_rat(&(q::int(4) * &bb), &p)?, &p)
    });
    ModulusBundle::new()
        .with_perturbation(&PerturbationPair::squares())
        .with_gamma(ball_gamma(d, Interval::exact(b.clone())))
        .with_unary_phi(residual_rate_fn(info, b, s))
        .with_chi(chi)
        .with_eta(ErrorRate::Zero)
}

/// eta(delta, f) = Lambda(min{ delta gamma_lo / (6K), sqrt(delta gamma_lo lambda_lo / (6 beta gamma_hi)) }, f)
fn error_rate_arg(ctx: &mut Ctx, prm: &SecondOrderParams, k: &SecondOrderConsts, delta: &Interval) -> Result<Interval> {
    let p = ctx.p();
    let first = delta.mul_rat(&prm.gamma_lo, &p)?.div(&k.k.mul_rat(&q::int(6), &p)?, &p)?;
    let ratio = &prm.gamma_lo * &prm.lambda_lo / (q::int(6) * &prm.beta * &prm.gamma_hi);
    let second = delta.mul_rat(&ratio, &p)?.sqrt(&p)?;
    Ok(first.min(&second))
}

/// gamma_lo delta / (m lambda_hi 8 K)
fn second_order_chi(ctx: &mut Ctx, prm: &SecondOrderParams, k: &SecondOrderConsts, delta: &Interval, m: &ExtNat) -> Result<Interval> {
    let p = ctx.p();
    let den = ctx.real(m).neg_free_mul(&k.k, &p).mul_rat(&(q::int(8) * &prm.lambda_hi), &p)?;
    delta.mul_rat(&prm.gamma_lo, &p)?.div(&den, &p)
}

/// Metastability bound for the damped second-order flow. The flow is
/// eps-metastable at Delta(min{eps, beta eps / 2}, f); this evaluates Delta(eps, f).
/// P follows the stated ball modulus with radius b.
pub fn delta_second_order_in(ctx: &mut Ctx, prm: &SecondOrderParams, d: u32, eps: &Rat, f: &Counterfunction) -> Result<ExtNat> {
    check_dim(d, &prm.b)?;
    let consts = second_order_constants_in(ctx, prm)?;
    let r = &prm.gamma_hi / &prm.gamma_lo;
    let k = q::ceil_sqrt(&(q::int(12) * &r / (eps * eps)));
    let big_p = levels(&k, d, &prm.b, &ctx.budget);
    ctx.note("P", &big_p);
    let Some(top) = big_p.finite().cloned() else { return Ok(ExtNat::Overflow) };
    let half = Interval::exact(eps / q::int(2));
    let delta = Interval::exact(eps * eps / q::int(12));
    let arg = error_rate_arg(ctx, prm, &consts, &delta)?;
    ctx.note("eta_arg", &arg);
    let phi = lambda_liminf(prm);
    let mut runmax = BigUint::zero();
    let mut j = BigUint::one();
    while j <= top {
        ctx.tick(1)?;
        let fm = f.max_on(ctx, &BigUint::one(), &(&runmax + 1u32))?;
        let chi = second_order_chi(ctx, prm, &consts, &delta, &fm.succ())?;
        let eps_hat = half.min(&chi);
        let reach = Counterfunction::window_reach(f, &phi, &eps_hat);
        let n = lambda_capital_in(ctx, &consts, &arg, &reach)?;
        let dj = lambda_liminf_in(ctx, &consts, &eps_hat, &n)?;
        ctx.note(format!("Delta({j})"), &dj);
        let Some(dj) = dj.finite().cloned() else { return Ok(ExtNat::Overflow) };
        if dj <= runmax {
            break;
        }
        runmax = dj;
        j += 1u32;
    }
    Ok(ctx.cap(runmax + 1u32))
}

pub fn delta_second_order(prm: &SecondOrderParams, d: u32, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    positive(eps)?;
    let mut inputs = serde_json::to_value(prm).expect("serializable");
    inputs["d"] = json!(d);
    inputs["eps"] = json!(q::rat_to_string(eps));
    inputs["f"] = json!(f.to_string());
    certify("delta_second_order", inputs, budget, |ctx| delta_second_order_in(ctx, prm, d, eps, f))
}

/// The second-order flow's data as a bundle for `delta_general`:
/// H = squares, G = (gamma_hi/gamma_lo) squares, the Lambda-based liminf bound,
/// chi = gamma_lo eps / (m lambda_hi 8K) capped at sqrt(3 eps), and the
/// Lambda-based metastability rate for the errors.
pub fn second_order_bundle(prm: &SecondOrderParams, d: u32) -> ModulusBundle {
    let r = &prm.gamma_hi / &prm.gamma_lo;
    let pair = PerturbationPair { g: Perturbation::ScaledPower { coef: r, p: q::int(2) }, h: Perturbation::Power { p: q::int(2) } };
    let p1 = prm.clone();
    let chi = capped_at_half("g*e/(m*l*8K)", move |ctx, e, m| {
        let k = second_order_constants_in(ctx, &p1)?;
        second_order_chi(ctx, &p1, &k, e, m)
    });
    let p2 = prm.clone();
    let eta = ErrorRate::metastability("Lambda(error arg)", move |ctx, e, f| {
        let k = second_order_constants_in(ctx, &p2)?;
        let arg = error_rate_arg(ctx, &p2, &k, e)?;
        lambda_capital_in(ctx, &k, &arg, f)
    });
    ModulusBundle::new()
        .with_perturbation(&pair)
        .with_gamma(ball_gamma(d, Interval::exact(prm.b.clone())))
        .with_phi(lambda_liminf(prm))
        .with_chi(chi)
        .with_eta(eta)
}

/// A uniform-monotonicity function phi: ||x - y|| -> lower bound on <x - y, u - v>.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotonicitySpec {
    /// rho e^2
    Strong {
        #[serde(with = "serde_rat")]
        rho: Rat,
    },
    /// coef e^p
    Power {
        #[serde(with = "serde_rat")]
        coef: Rat,
        #[serde(with = "serde_rat")]
        p: Rat,
    },
}

impl MonotonicitySpec {
    pub fn map(&self) -> Result<RealMap> {
        match self {
            MonotonicitySpec::Strong { rho } => {
                if !rho.is_positive() {
                    return input("strong monotonicity constant must be positive");
                }
                Ok(RealMap::scaled_power(rho.clone(), q::int(2)))
            }
            MonotonicitySpec::Power { coef, p } => {
                if !coef.is_positive() || !p.is_positive() {
                    return input("monotonicity coefficient and exponent must be positive");
                }
                Ok(RealMap::scaled_power(coef.clone(), p.clone()))
            }
        }
    }
}

/// Which operator is uniformly monotone, with its function.
#[derive(Clone)]
pub enum UniformlyMonotone {
    A(RealMap),
    B(RealMap),
}

impl UniformlyMonotone {
    fn label(&self) -> String {
        match self {
            UniformlyMonotone::A(m) => format!("A:{}", m.label()),
            UniformlyMonotone::B(m) => format!("B:{}", m.label()),
        }
    }
}

/// Forward-backward flow x' = lambda (J_{gamma A}(x - gamma B x) - x).
#[derive(Clone)]
pub struct FbFirstOrder {
    pub b: Rat,
    pub gamma: Rat,
    pub beta: Rat,
    pub lambda: LambdaInfo,
}

/// min{1, beta/gamma} + 1/2
pub fn fb_first_order_delta(beta: &Rat, gamma: &Rat) -> Rat {
    (beta / gamma).min(q::one()) + q::rat(1, 2)
}

/// (4 beta - eta) / (2 beta)
pub fn fb_second_order_delta(beta: &Rat, eta: &Rat) -> Rat {
    (q::int(4) * beta - eta) / (q::int(2) * beta)
}

fn check_step(step: &Rat, beta: &Rat) -> Result<()> {
    if !beta.is_positive() {
        return input("cocoercivity constant must be positive");
    }
    if !step.is_positive() || *step >= q::int(2) * beta {
        return input("step size must lie in (0, 2 beta)");
    }
    Ok(())
}

impl FbFirstOrder {
    pub fn validate(&self) -> Result<()> {
        check_step(&self.gamma, &self.beta)?;
        if self.b.is_negative() {
            return input("radius must be nonnegative");
        }
        Ok(())
    }

    pub fn delta(&self) -> Rat {
        fb_first_order_delta(&self.beta, &self.gamma)
    }
}

/// Residual rate for forward-backward: the plain rate with s = delta.
pub fn fb_residual_rate_in(ctx: &mut Ctx, fb: &FbFirstOrder, eps: &Interval) -> Result<ExtNat> {
    residual_rate_in(ctx, &fb.lambda, &fb.b, &fb.delta(), eps)
}

/// psi(eps) = phi(gamma beta eps^2 / (3b)): after psi(eps), ||B x(t) - B y|| <= eps.
pub fn fb_psi_in(ctx: &mut Ctx, fb: &FbFirstOrder, eps: &Interval) -> Result<ExtNat> {
    let p = ctx.p();
    let arg = eps.square(&p)?.mul_rat(&(&fb.gamma * &fb.beta), &p)?.div_rat(&(q::int(3) * &fb.b), &p)?;
    fb_residual_rate_in(ctx, fb, &arg)
}

pub fn fb_psi(fb: &FbFirstOrder, eps: &Rat, budget: &Budget) -> Result<Certificate> {
    fb.validate()?;
    let e = positive(eps)?;
    certify("fb_b_rate", fb_inputs(fb, eps), budget, |ctx| fb_psi_in(ctx, fb, &e))
}

fn fb_inputs(fb: &FbFirstOrder, eps: &Rat) -> serde_json::Value {
    json!({
        "b": q::rat_to_string(&fb.b), "gamma": q::rat_to_string(&fb.gamma), "beta": q::rat_to_string(&fb.beta),
        "lambda": fb.lambda.label(), "eps": q::rat_to_string(eps),
    })
}

/// Second-order forward-backward flow. `prm` holds the constants of the
/// underlying second-order flow; `step` is the step size eta and `beta` the
/// cocoercivity constant of B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FbSecondOrder {
    pub prm: SecondOrderParams,
    #[serde(with = "serde_rat")]
    pub step: Rat,
    #[serde(with = "serde_rat")]
    pub beta: Rat,
}

impl FbSecondOrder {
    pub fn validate(&self) -> Result<()> {
        check_step(&self.step, &self.beta)?;
        self.prm.validate()
    }

    pub fn delta(&self) -> Rat {
        fb_second_order_delta(&self.beta, &self.step)
    }
}

/// Lambda(eps^2 eta beta / (3K), f): metastability of ||B x(t) - B y|| <= eps.
pub fn fb_second_order_b_rate_in(ctx: &mut Ctx, fb: &FbSecondOrder, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    let p = ctx.p();
    let k = second_order_constants_in(ctx, &fb.prm)?;
    let arg = eps
        .square(&p)?
        .mul_rat(&(&fb.step * &fb.beta), &p)?
        .div(&k.k.mul_rat(&q::int(3), &p)?, &p)?;
    ctx.note("Lambda_arg", &arg);
    lambda_capital_in(ctx, &k, &arg, f)
}

pub fn fb_second_order_b_rate(fb: &FbSecondOrder, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    fb.validate()?;
    let e = positive(eps)?;
    let mut inputs = serde_json::to_value(fb).expect("serializable");
    inputs["eps"] = json!(q::rat_to_string(eps));
    inputs["f"] = json!(f.to_string());
    certify("fb_second_order_b_rate", inputs, budget, |ctx| fb_second_order_b_rate_in(ctx, fb, &e, f))
}

#[derive(Clone)]
pub enum FbOrder {
    First(FbFirstOrder),
    Second(FbSecondOrder),
}

/// First order: a rate rho with ||x(t) - y|| <= eps for t >= rho(eps).
/// Second order: a bound Theta(eps, f) with ||x(t) - y|| < eps on some window.
///
/// For A uniformly monotone at first order, both the residual condition and
/// the B-condition must hold, so the two times are combined with max.
pub fn fb_uniform_monotone_rate_in(
    ctx: &mut Ctx,
    order: &FbOrder,
    who: &UniformlyMonotone,
    eps: &Interval,
    f: &Counterfunction,
) -> Result<ExtNat> {
    let p = ctx.p();
    match order {
        FbOrder::First(fb) => {
            fb.validate()?;
            let two_b = q::int(2) * &fb.b;
            match who {
                UniformlyMonotone::A(phi) => {
                    let a = phi.eval(ctx, &eps.div_rat(&q::int(2), &p)?)?;
                    let res_arg = a.mul_rat(&fb.gamma, &p)?.div_rat(&two_b, &p)?.min(&eps.div_rat(&q::int(2), &p)?);
                    let r1 = fb_residual_rate_in(ctx, fb, &res_arg)?;
                    let r2 = fb_psi_in(ctx, fb, &a.div_rat(&two_b, &p)?)?;
                    ctx.note("residual_branch", &r1);
                    ctx.note("b_branch", &r2);
                    Ok(r1.max_of(&r2))
                }
                UniformlyMonotone::B(phi) => {
                    let a = phi.eval(ctx, eps)?.div_rat(&fb.b, &p)?;
                    fb_psi_in(ctx, fb, &a)
                }
            }
        }
        FbOrder::Second(fb) => {
            fb.validate()?;
            let k = second_order_constants_in(ctx, &fb.prm)?;
            let eb3k = k.k.mul_rat(&q::int(3), &p)?;
            let arg = match who {
                UniformlyMonotone::A(phi) => {
                    let a = phi.eval(ctx, &eps.div_rat(&q::int(2), &p)?)?;
                    let a2k = a.div(&k.k.mul_rat(&q::int(2), &p)?, &p)?;
                    let first = a2k.square(&p)?.mul_rat(&(&fb.step * &fb.beta), &p)?.div(&eb3k, &p)?;
                    let second = a2k.mul_rat(&fb.step, &p)?;
                    first.min(&second).min(&eps.div_rat(&q::int(2), &p)?)
                }
                UniformlyMonotone::B(phi) => {
                    let a = phi.eval(ctx, eps)?.div(&k.k, &p)?;
                    a.square(&p)?.mul_rat(&(&fb.step * &fb.beta), &p)?.div(&eb3k, &p)?
                }
            };
            ctx.note("Lambda_arg", &arg);
            lambda_capital_in(ctx, &k, &arg, f)
        }
    }
}

pub fn fb_uniform_monotone_rate(
    order: &FbOrder,
    who: &UniformlyMonotone,
    eps: &Rat,
    f: &Counterfunction,
    budget: &Budget,
) -> Result<Certificate> {
    let e = positive(eps)?;
    let mut inputs = match order {
        FbOrder::First(fb) => {
            let mut v = fb_inputs(fb, eps);
            v["order"] = json!("first");
            v
        }
        FbOrder::Second(fb) => {
            let mut v = serde_json::to_value(fb).expect("serializable");
            v["order"] = json!("second");
            v["eps"] = json!(q::rat_to_string(eps));
            v["f"] = json!(f.to_string());
            v
        }
    };
    inputs["monotone"] = json!(who.label());
    certify("fb_uniform_monotone_rate", inputs, budget, |ctx| fb_uniform_monotone_rate_in(ctx, order, who, &e, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::general::{delta_general, delta_with_error_rate};
    use crate::moduli::lemmas::LVariant;

    fn bud() -> Budget {
        Budget::default()
    }

    fn witness(l: i64) -> LambdaInfo {
        LambdaInfo::LowerWitness(q::int(l))
    }

    #[test]
    fn zero_radius_gives_one() {
        let c = delta_first_order(1, &q::int(0), &witness(1), &q::int(1), &Counterfunction::constant(0), &bud()).unwrap();
        assert_eq!(c.value, ExtNat::one());
    }

    #[test]
    fn first_order_unrolled() {
        // d = 1, b = 1, eps = 1, lambda_lo = 1, f = 0:
        // P = ceil(2 * (ceil(sqrt 12) + 1))^1 + 1 = 11; eps_hat = min{1/2, 1/48} = 1/48;
        // phi(1/48) = 4 * 48^2 = 9216, and the next level repeats it.
        let c = delta_first_order(1, &q::int(1), &witness(1), &q::int(1), &Counterfunction::constant(0), &bud()).unwrap();
        assert_eq!(c.trace_value("P"), Some("11"));
        assert_eq!(c.value, ExtNat::from_u64(9217));
    }

    #[test]
    fn divergence_path() {
        let info = LambdaSpec::Divergence { tau_lo: q::int(1) }.info().unwrap();
        let mut ctx = Ctx::new(bud(), 64);
        // eta(b^2/eps^2) with eta(K) = ceil(K): ceil(1/eps^2) at eps = 1/3 is 9.
        let v = residual_rate_in(&mut ctx, &info, &q::int(1), &q::one(), &Interval::ratio(1, 3)).unwrap();
        assert_eq!(v, ExtNat::from_u64(9));
    }

    #[test]
    fn first_order_matches_bundle() {
        for (b, eps, f) in [
            (q::int(1), q::int(1), Counterfunction::constant(0)),
            (q::int(2), q::rat(3, 2), Counterfunction::identity_plus(1)),
            (q::rat(1, 2), q::int(2), Counterfunction::linear(2, 0)),
        ] {
            for info in [witness(1), LambdaSpec::Divergence { tau_lo: q::rat(1, 4) }.info().unwrap()] {
                let direct = delta_first_order(2, &b, &info, &eps, &f, &bud()).unwrap();
                let bundle = first_order_bundle(2, &b, &info, &q::one());
                let generic = delta_with_error_rate(&bundle, &eps, &f, &bud()).unwrap();
                assert_eq!(direct.value, generic.value, "b={b} eps={eps} f={f}");
            }
        }
    }

    fn sample_prm() -> SecondOrderParams {
        SecondOrderParams {
            b: q::int(1),
            c: q::int(0),
            d_bound: q::int(1),
            lambda_lo: q::int(2),
            lambda_hi: q::int(2),
            gamma_lo: q::int(3),
            gamma_hi: q::int(3),
            theta: q::rat(7, 2),
            beta: q::int(1),
            l_variant: LVariant::Multiply,
        }
    }

    #[test]
    fn second_order_degenerate() {
        let prm = SecondOrderParams { b: q::int(0), c: q::int(0), ..sample_prm() };
        let c = delta_second_order(&prm, 1, &q::int(1), &Counterfunction::constant(0), &bud()).unwrap();
        assert_eq!(c.value, ExtNat::one());
    }

    #[test]
    fn second_order_matches_bundle() {
        let prm = sample_prm();
        let eps = q::int(20);
        let f = Counterfunction::constant(0);
        let direct = delta_second_order(&prm, 1, &eps, &f, &bud()).unwrap();
        let generic = delta_general(&second_order_bundle(&prm, 1), &eps, &f, &bud()).unwrap();
        assert_eq!(direct.value, generic.value);
    }

    #[test]
    fn fb_deltas() {
        assert_eq!(fb_first_order_delta(&q::int(1), &q::int(1)), q::rat(3, 2));
        assert_eq!(fb_first_order_delta(&q::int(1), &q::int(2)), q::int(1));
        assert_eq!(fb_second_order_delta(&q::int(1), &q::int(1)), q::rat(3, 2));
    }

    #[test]
    fn uniform_monotone_first_order() {
        let fb = FbFirstOrder { b: q::int(1), gamma: q::int(1), beta: q::int(1), lambda: witness(1) };
        let order = FbOrder::First(fb.clone());
        let who = UniformlyMonotone::B(RealMap::identity());
        let f = Counterfunction::constant(0);
        let c = fb_uniform_monotone_rate(&order, &who, &q::int(2), &f, &bud()).unwrap();
        // psi(phi(2)/1) = phi_res(1 * 1 * 4 / 3) = ceil(4 * (3/2)^2 / (16/9)) = ceil(81/16) = 6
        assert_eq!(c.value, ExtNat::from_u64(6));
        let huge = UniformlyMonotone::A(RealMap::scale(q::int(1_000_000)));
        let c = fb_uniform_monotone_rate(&order, &huge, &q::int(2), &f, &bud()).unwrap();
        // residual branch saturates at eps/2 = 1: ceil(4 * 9/4 / 1) = 9
        assert_eq!(c.trace_value("residual_branch"), Some("9"));
        assert!(fb_uniform_monotone_rate(&FbOrder::First(FbFirstOrder { gamma: q::int(2), ..fb }), &who, &q::int(1), &f, &bud()).is_err());
    }
}
