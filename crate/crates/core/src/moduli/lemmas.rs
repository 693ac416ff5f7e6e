//! Metastability bounds from the integral inequalities, and the second-order
//! constants built on them.

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bundle::LiminfBound;
use super::certificate::{certify, Certificate};
use super::counter::{tilde_iterate, Counterfunction};
use super::ctx::Ctx;
use super::extnat::{Budget, ExtNat};
use super::general::positive;
use super::interval::Interval;
use super::rational::{self as q, serde_rat, Rat};
use crate::error::{input, Result};

/// omega = ceil(2B/eps) * ceil((c + B - b)/eps)
pub fn aas1_omega_in(ctx: &mut Ctx, b: &Rat, c: &Rat, bnorm: &Rat, eps: &Interval) -> Result<ExtNat> {
    let p = ctx.p();
    if c < b {
        return input("need c >= b");
    }
    if bnorm.is_negative() {
        return input("need B >= 0");
    }
    let first = ctx.ceil(&Interval::exact(q::int(2) * bnorm).div(eps, &p)?)?;
    let second = ctx.ceil(&Interval::exact(c + bnorm - b).div(eps, &p)?)?;
    Ok(first.mul(&second).capped(&ctx.budget))
}

pub fn aas1_metastability_in(
    ctx: &mut Ctx,
    b: &Rat,
    c: &Rat,
    bnorm: &Rat,
    eps: &Interval,
    f: &Counterfunction,
) -> Result<ExtNat> {
    let omega = aas1_omega_in(ctx, b, c, bnorm, eps)?;
    ctx.note("omega", &omega);
    tilde_iterate(ctx, f, &omega)
}

pub fn aas1_metastability(b: &Rat, c: &Rat, bnorm: &Rat, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let inputs = json!({
        "b": q::rat_to_string(b), "c": q::rat_to_string(c), "B": q::rat_to_string(bnorm),
        "eps": q::rat_to_string(eps), "f": f.to_string(),
    });
    certify("aas1_metastability", inputs, budget, |ctx| aas1_metastability_in(ctx, b, c, bnorm, &e, f))
}

/// Inputs of the second integral lemma. `r = None` stands for r = infinity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aas2Params {
    #[serde(with = "serde_rat")]
    pub c: Rat,
    #[serde(with = "serde_rat", rename = "A")]
    pub a: Rat,
    #[serde(with = "serde_rat", rename = "B")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub p: Rat,
    #[serde(with = "serde_rat::opt", default)]
    pub r: Option<Rat>,
}

impl Aas2Params {
    /// q = 1 + p (1 - 1/r)
    pub fn q(&self) -> Rat {
        match &self.r {
            Some(r) => q::one() + &self.p * (q::one() - q::one() / r),
            None => q::one() + &self.p,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p < q::one() {
            return input("need p >= 1");
        }
        if matches!(&self.r, Some(r) if *r < q::one()) {
            return input("need r >= 1");
        }
        if self.c.is_negative() || self.a.is_negative() || self.b.is_negative() {
            return input("need c, A, B >= 0");
        }
        Ok(())
    }
}

/// The two ceiling factors of varpi_{c,A,B}(eps).
pub fn aas2_varpi_in(ctx: &mut Ctx, prm: &Aas2Params, eps: &Interval) -> Result<(ExtNat, ExtNat)> {
    prm.validate()?;
    let p = ctx.p();
    let qq = prm.q();
    let two_q = Interval::int(2).pow_rat(&qq, &p)?;
    // eps^q (2^q - 1)
    let den = eps.pow_rat(&qq, &p)?.neg_free_mul(&two_q.sub(&Interval::int(1), &p)?, &p);
    // q A^{q-1} B, with 0^0 = 1
    let qab = Interval::exact(prm.a.clone())
        .pow_rat(&(&qq - q::one()), &p)?
        .mul_rat(&(&qq * &prm.b), &p)?;
    let first = two_q.mul_rat(&q::int(2), &p)?.neg_free_mul(&qab, &p).div(&den, &p)?;
    let cq = Interval::exact(prm.c.clone()).pow_rat(&qq, &p)?;
    let second = two_q.neg_free_mul(&cq.add(&qab, &p), &p).div(&den, &p)?;
    Ok((ctx.ceil(&first)?, ctx.ceil(&second)?))
}

pub fn aas2_metastability_in(ctx: &mut Ctx, prm: &Aas2Params, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    let p = ctx.p();
    let (a, b) = aas2_varpi_in(ctx, prm, eps)?;
    let varpi = a.mul(&b).capped(&ctx.budget);
    ctx.note("q", q::rat_to_string(&prm.q()));
    ctx.note("varpi", &varpi);
    let floor = Interval::exact(q::int(3) * &prm.a).div(eps, &p)?.pow_rat(&prm.p, &p)?;
    let floor = ctx.ceil(&floor)?;
    ctx.note("f_floor", &floor);
    tilde_iterate(ctx, &f.max_const(floor), &varpi)
}

pub fn aas2_metastability(prm: &Aas2Params, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let mut inputs = serde_json::to_value(prm).expect("serializable");
    inputs["eps"] = json!(q::rat_to_string(eps));
    inputs["f"] = json!(f.to_string());
    certify("aas2_metastability", inputs, budget, |ctx| aas2_metastability_in(ctx, prm, &e, f))
}

/// Where the factor beta * gamma_lo / lambda_hi goes in the velocity bound L.
/// The two boundedness lemmas disagree, so both are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LVariant {
    /// L = ceil((K + M) beta gamma_lo / lambda_hi)
    Multiply,
    /// L = ceil((K + M) / (beta gamma_lo / lambda_hi))
    Divide,
}

/// Parameters of the second-order system. `d_bound` bounds the initial
/// acceleration term and is unrelated to the dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondOrderParams {
    #[serde(with = "serde_rat")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub c: Rat,
    #[serde(with = "serde_rat")]
    pub d_bound: Rat,
    #[serde(with = "serde_rat")]
    pub lambda_lo: Rat,
    #[serde(with = "serde_rat")]
    pub lambda_hi: Rat,
    #[serde(with = "serde_rat")]
    pub gamma_lo: Rat,
    #[serde(with = "serde_rat")]
    pub gamma_hi: Rat,
    #[serde(with = "serde_rat")]
    pub theta: Rat,
    #[serde(with = "serde_rat")]
    pub beta: Rat,
    pub l_variant: LVariant,
}

impl SecondOrderParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("b", &self.b), ("c", &self.c), ("d_bound", &self.d_bound)] {
            if v.is_negative() {
                return input(format!("{name} must be nonnegative"));
            }
        }
        for (name, v) in [
            ("lambda_lo", &self.lambda_lo),
            ("gamma_lo", &self.gamma_lo),
            ("theta", &self.theta),
            ("beta", &self.beta),
        ] {
            if !v.is_positive() {
                return input(format!("{name} must be positive"));
            }
        }
        if self.lambda_lo > self.lambda_hi || self.gamma_lo > self.gamma_hi {
            return input("lower parameter bounds exceed upper bounds");
        }
        Ok(())
    }

    /// M = b c + gamma_hi b^2 / 2 + beta gamma_hi c^2 / lambda_lo
    pub fn m(&self) -> Rat {
        &self.b * &self.c
            + &self.gamma_hi * &self.b * &self.b / q::int(2)
            + &self.beta * &self.gamma_hi * &self.c * &self.c / &self.lambda_lo
    }
}

/// The constants M, K, L, a0, a1, a2, A, B, C as enclosures.
#[derive(Debug, Clone)]
pub struct SecondOrderConsts {
    pub m: Rat,
    pub k: Interval,
    pub l: ExtNat,
    pub l_mul: ExtNat,
    pub l_div: ExtNat,
    pub a0: Interval,
    pub a1: Interval,
    pub a2: Interval,
    pub a: Interval,
    pub b: Interval,
    pub c: Rat,
}

pub fn second_order_constants_in(ctx: &mut Ctx, prm: &SecondOrderParams) -> Result<SecondOrderConsts> {
    prm.validate()?;
    let p = ctx.p();
    let m = prm.m();
    let k = Interval::sqrt_of(&(&prm.b * &prm.b + q::int(2) * &m / &prm.gamma_lo), &p)?;
    let km = k.add_rat(&m, &p);
    let factor = &prm.beta * &prm.gamma_lo / &prm.lambda_hi;
    let l_mul = ctx.ceil(&km.mul_rat(&factor, &p)?)?;
    let l_div = ctx.ceil(&km.div_rat(&factor, &p)?)?;
    let l = match prm.l_variant {
        LVariant::Multiply => l_mul.clone(),
        LVariant::Divide => l_div.clone(),
    };
    let kl = k.neg_free_mul(&ctx.real(&l), &p);
    let a0 = kl.div_rat(&prm.theta, &p)?.sqrt(&p)?;
    let a1 = kl.mul_rat(&(&prm.lambda_hi / &prm.beta), &p)?.sqrt(&p)?;
    let a2 = a1.add(&a0.mul_rat(&prm.gamma_hi, &p)?, &p).div_rat(&prm.lambda_lo, &p)?;
    let half = q::rat(1, 2);
    let a = a0.max(&a2).mul_rat(&half, &p)?;
    let inv_b2 = q::one() / (&prm.beta * &prm.beta);
    let b = a0.add(&a1, &p).max(&a2.add(&a0.mul_rat(&inv_b2, &p)?, &p)).mul_rat(&half, &p)?;
    let c = (&prm.c).max(&prm.d_bound).clone() * &half;
    Ok(SecondOrderConsts { m, k, l, l_mul, l_div, a0, a1, a2, a, b, c })
}

/// Floating summary of the constants, for reports and verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "M")]
    pub m: String,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "L")]
    pub l: ExtNat,
    pub l_multiply: ExtNat,
    pub l_divide: ExtNat,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: String,
}

pub fn second_order_constants(prm: &SecondOrderParams, budget: &Budget) -> Result<ConstantsReport> {
    let ev = super::ctx::evaluate(budget, |ctx| second_order_constants_in(ctx, prm))?;
    let k = ev.value;
    Ok(ConstantsReport {
        m: q::rat_to_string(&k.m),
        k: k.k.hi_f64(),
        l: k.l,
        l_multiply: k.l_mul,
        l_divide: k.l_div,
        a0: k.a0.hi_f64(),
        a1: k.a1.hi_f64(),
        a2: k.a2.hi_f64(),
        a: k.a.hi_f64(),
        b: k.b.hi_f64(),
        c: q::rat_to_string(&k.c),
    })
}

/// The two arguments of the ceilings in varpi_{C,A,B}(eps):
/// 16AB/(3 eps^2) and 4(C^2 + 2AB)/(3 eps^2).
pub fn lambda_pre_ceiling(ctx: &mut Ctx, k: &SecondOrderConsts, eps: &Interval) -> Result<(Interval, Interval)> {
    let p = ctx.p();
    let ab = k.a.neg_free_mul(&k.b, &p);
    let den = eps.square(&p)?.mul_rat(&q::int(3), &p)?;
    let first = ab.mul_rat(&q::int(16), &p)?.div(&den, &p)?;
    let c2 = Interval::exact(&k.c * &k.c);
    let second = c2.add(&ab.mul_rat(&q::int(2), &p)?, &p).mul_rat(&q::int(4), &p)?.div(&den, &p)?;
    Ok((first, second))
}

pub fn lambda_varpi_in(ctx: &mut Ctx, k: &SecondOrderConsts, eps: &Interval) -> Result<ExtNat> {
    let (a, b) = lambda_pre_ceiling(ctx, k, eps)?;
    let (a, b) = (ctx.ceil(&a)?, ctx.ceil(&b)?);
    Ok(a.mul(&b).capped(&ctx.budget))
}

/// ceil((3A/eps)^2)
pub fn lambda_floor_in(ctx: &mut Ctx, k: &SecondOrderConsts, eps: &Interval) -> Result<ExtNat> {
    let p = ctx.p();
    let v = k.a.mul_rat(&q::int(3), &p)?.div(eps, &p)?.square(&p)?;
    ctx.ceil(&v)
}

/// Lambda(eps, f): the iterate of n -> n + max{f(n), ceil((3A/eps)^2)} taken varpi times.
pub fn lambda_capital_in(ctx: &mut Ctx, k: &SecondOrderConsts, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    let varpi = lambda_varpi_in(ctx, k, eps)?;
    let floor = lambda_floor_in(ctx, k, eps)?;
    tilde_iterate(ctx, &f.max_const(floor), &varpi)
}

/// The liminf bound phi(eps, n) = varpi(eps) * max{n, ceil((3A/eps)^2)}.
pub fn lambda_liminf_in(ctx: &mut Ctx, k: &SecondOrderConsts, eps: &Interval, n: &ExtNat) -> Result<ExtNat> {
    let varpi = lambda_varpi_in(ctx, k, eps)?;
    let floor = lambda_floor_in(ctx, k, eps)?;
    Ok(varpi.mul(&floor.max_of(n)).capped(&ctx.budget))
}

/// `lambda_liminf_in` as a bound; the constants are rebuilt at the caller's precision.
pub fn lambda_liminf(prm: &SecondOrderParams) -> LiminfBound {
    let prm = prm.clone();
    LiminfBound::new("second-order liminf", true, true, move |ctx, eps, n| {
        let k = second_order_constants_in(ctx, &prm)?;
        lambda_liminf_in(ctx, &k, eps, &ExtNat::Fin(n.clone()))
    })
}

pub fn lambda_capital(prm: &SecondOrderParams, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let mut inputs = serde_json::to_value(prm).expect("serializable");
    inputs["eps"] = json!(q::rat_to_string(eps));
    inputs["f"] = json!(f.to_string());
    certify("lambda_capital", inputs, budget, |ctx| {
        let k = second_order_constants_in(ctx, prm)?;
        let varpi = lambda_varpi_in(ctx, &k, &e)?;
        ctx.note("varpi", &varpi);
        lambda_capital_in(ctx, &k, &e, f)
    })
}
