//! Certificates for the gradient-flow semigroup and the semigroup generated by
//! a nonexpansive map, over Hadamard spaces.

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde_json::json;

use super::bundle::{ErrorRate, FejerModulus, ModulusBundle, NatOfReal, PerturbationPair, RealMap};
use super::certificate::{certify, Certificate};
use super::counter::Counterfunction;
use super::ctx::Ctx;
use super::extnat::{Budget, ExtNat};
use super::general::positive;
use super::interval::Interval;
use super::rational::{self as q, Rat};
use crate::error::{input, Result};

fn check(b: &Rat, f: &Counterfunction) -> Result<()> {
    if b.is_negative() {
        return input("radius must be nonnegative");
    }
    if !f.nondecreasing() {
        return input("counterfunction must be nondecreasing");
    }
    Ok(())
}

/// Delta(P, eps, f) + 1 with P = gamma(eps/sqrt 12) + 1, Delta(0) = 0 and
/// Delta(j+1) = ceil(24 b^2 (f(Delta(j)+1) + 1) / eps^2).
pub fn delta_gradient_flow_in(ctx: &mut Ctx, b: &Rat, gamma: &NatOfReal, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    check(b, f)?;
    let p = ctx.p();
    let e2 = eps.square(&p)?;
    let arg = e2.div_rat(&q::int(12), &p)?.sqrt(&p)?;
    let big_p = gamma.eval(ctx, &arg)?.succ().capped(&ctx.budget);
    ctx.note("P", &big_p);
    let Some(top) = big_p.finite().cloned() else { return Ok(ExtNat::Overflow) };
    let scale = q::int(24) * b * b;
    let mut cur = BigUint::zero();
    let mut j = BigUint::zero();
    while j < top {
        ctx.tick(1)?;
        let fv = f.eval(ctx, &(&cur + 1u32))?;
        let Some(fv) = fv.finite() else { return Ok(ExtNat::Overflow) };
        let num = &scale * q::from_biguint(&(fv + 1u32));
        let next = ctx.ceil(&Interval::exact(num).div(&e2, &p)?)?;
        j += 1u32;
        ctx.note(format!("Delta({j})"), &next);
        let Some(next) = next.finite().cloned() else { return Ok(ExtNat::Overflow) };
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(ctx.cap(cur + 1u32))
}

pub fn delta_gradient_flow(b: &Rat, gamma: &NatOfReal, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let inputs = json!({"b": q::rat_to_string(b), "gamma": gamma.label(), "eps": q::rat_to_string(eps), "f": f.to_string()});
    certify("delta_gradient_flow", inputs, budget, |ctx| delta_gradient_flow_in(ctx, b, gamma, &e, f))
}

/// phi(eps) = ceil(b^2 / eps)
pub fn gradient_flow_phi(b: &Rat) -> NatOfReal {
    NatOfReal::ceil_over_power(b * b, q::one())
}

/// G = H = squares, h = squares, g = sqrt, phi = ceil(b^2/eps), chi = eps/(2m), no errors.
pub fn gradient_flow_bundle(b: &Rat, gamma: NatOfReal) -> ModulusBundle {
    ModulusBundle::new()
        .with_perturbation(&PerturbationPair::squares())
        .with_gamma(gamma)
        .with_unary_phi(gradient_flow_phi(b))
        .with_chi(FejerModulus::over_window(q::rat(1, 2)))
        .with_eta(ErrorRate::Zero)
}

/// ceil(b^2 / tau(eps)) + 1
pub fn rho_gradient_flow_in(ctx: &mut Ctx, b: &Rat, tau: &RealMap, eps: &Interval) -> Result<ExtNat> {
    let p = ctx.p();
    let t = tau.eval(ctx, eps)?;
    let v = Interval::exact(b * b).div(&t, &p)?;
    Ok(ctx.ceil(&v)?.succ().capped(&ctx.budget))
}

pub fn rho_gradient_flow(b: &Rat, tau: &RealMap, eps: &Rat, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let inputs = json!({"b": q::rat_to_string(b), "tau": tau.label(), "eps": q::rat_to_string(eps)});
    certify("rho_gradient_flow", inputs, budget, |ctx| rho_gradient_flow_in(ctx, b, tau, &e))
}

/// Bundle for `rho_convergence_regular` reproducing `rho_gradient_flow`.
pub fn gradient_flow_regular_bundle(b: &Rat, tau: RealMap) -> ModulusBundle {
    ModulusBundle::new()
        .with_perturbation(&PerturbationPair::squares())
        .with_unary_phi(gradient_flow_phi(b))
        .with_tau(tau)
        .with_eta(ErrorRate::Zero)
}

/// ceil((4b/eps) e^{4b/eps})
pub fn stojkovic_phi_in(ctx: &mut Ctx, b: &Rat, eps: &Interval) -> Result<ExtNat> {
    if b.is_zero() {
        return Ok(ExtNat::zero());
    }
    let p = ctx.p();
    let x = Interval::exact(q::int(4) * b).div(eps, &p)?;
    let v = x.neg_free_mul(&x.exp(&p)?, &p);
    ctx.ceil(&v)
}

pub fn stojkovic_phi(b: &Rat) -> NatOfReal {
    let b = b.clone();
    NatOfReal::new(format!("ceil((4*{0}/e)exp(4*{0}/e))", q::rat_to_string(&b)), move |ctx, e| stojkovic_phi_in(ctx, &b, e))
}

/// 2 eps / (e^{2m} - 1)
pub fn stojkovic_chi_in(ctx: &mut Ctx, eps: &Interval, m: &ExtNat) -> Result<Interval> {
    let p = ctx.p();
    let den = ctx.real(m).mul_rat(&q::int(2), &p)?.exp(&p)?.sub(&Interval::int(1), &p)?;
    eps.mul_rat(&q::int(2), &p)?.div(&den, &p)
}

pub fn stojkovic_chi() -> FejerModulus {
    FejerModulus::new("2e/(exp(2m)-1)", true, |ctx, e, _, m| stojkovic_chi_in(ctx, e, m))
}

/// phi(eps_hat_P) + 1 with P = gamma(eps/6) + 1,
/// eps_hat_1 = chi_f(eps/6, 0), eps_hat_j = chi_f(eps/6, phi(eps_hat_{j-1}))
/// and chi_f(eps, n) = 2 eps / (e^{2(f(n+1)+1)} - 1).
///
/// The trailing +1 matches the general construction; `phi_at_P` in the trace
/// holds the value without it.
pub fn delta_stojkovic_in(ctx: &mut Ctx, b: &Rat, gamma: &NatOfReal, eps: &Interval, f: &Counterfunction) -> Result<ExtNat> {
    check(b, f)?;
    let p = ctx.p();
    let sixth = eps.div_rat(&q::int(6), &p)?;
    let big_p = gamma.eval(ctx, &sixth)?.succ().capped(&ctx.budget);
    ctx.note("P", &big_p);
    let Some(top) = big_p.finite().cloned() else { return Ok(ExtNat::Overflow) };
    let mut n = BigUint::zero();
    let mut j = BigUint::one();
    let phi_p = loop {
        ctx.tick(1)?;
        let m = f.eval(ctx, &(&n + 1u32))?.succ();
        let eps_hat = stojkovic_chi_in(ctx, &sixth, &m)?;
        let phi = stojkovic_phi_in(ctx, b, &eps_hat)?;
        ctx.note(format!("eps_hat({j})"), &eps_hat);
        ctx.note(format!("phi({j})"), &phi);
        let Some(phi) = phi.finite().cloned() else { return Ok(ExtNat::Overflow) };
        if j >= top || phi == n {
            break phi;
        }
        n = phi;
        j += 1u32;
    };
    ctx.note("phi_at_P", &phi_p);
    Ok(ctx.cap(phi_p + 1u32))
}

pub fn delta_stojkovic(b: &Rat, gamma: &NatOfReal, eps: &Rat, f: &Counterfunction, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let inputs = json!({"b": q::rat_to_string(b), "gamma": gamma.label(), "eps": q::rat_to_string(eps), "f": f.to_string()});
    certify("delta_stojkovic", inputs, budget, |ctx| delta_stojkovic_in(ctx, b, gamma, &e, f))
}

/// G = H = h = g = identity, the exponential phi and chi, no errors.
pub fn stojkovic_bundle(b: &Rat, gamma: NatOfReal) -> ModulusBundle {
    ModulusBundle::new()
        .with_perturbation(&PerturbationPair::identity())
        .with_gamma(gamma)
        .with_unary_phi(stojkovic_phi(b))
        .with_chi(stojkovic_chi())
        .with_eta(ErrorRate::Zero)
}

/// ceil((4b/tau(eps)) e^{4b/tau(eps)}) + 1
pub fn rho_stojkovic_in(ctx: &mut Ctx, b: &Rat, tau: &RealMap, eps: &Interval) -> Result<ExtNat> {
    let t = tau.eval(ctx, eps)?;
    Ok(stojkovic_phi_in(ctx, b, &t)?.succ().capped(&ctx.budget))
}

pub fn rho_stojkovic(b: &Rat, tau: &RealMap, eps: &Rat, budget: &Budget) -> Result<Certificate> {
    let e = positive(eps)?;
    let inputs = json!({"b": q::rat_to_string(b), "tau": tau.label(), "eps": q::rat_to_string(eps)});
    certify("rho_stojkovic", inputs, budget, |ctx| rho_stojkovic_in(ctx, b, tau, &e))
}

pub fn stojkovic_regular_bundle(b: &Rat, tau: RealMap) -> ModulusBundle {
    ModulusBundle::new()
        .with_perturbation(&PerturbationPair::identity())
        .with_unary_phi(stojkovic_phi(b))
        .with_tau(tau)
        .with_eta(ErrorRate::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::ctx::evaluate;
    use crate::moduli::general::{ball_gamma, delta_with_error_rate, rho_convergence_regular};

    fn bud() -> Budget {
        Budget::default()
    }

    #[test]
    fn gradient_flow_sqrt24() {
        // eps = sqrt 24, b = 1, f = 0: every level is ceil(24/24) = 1.
        let gamma = NatOfReal::constant(3);
        let ev = evaluate(&bud(), |ctx| {
            let e = Interval::sqrt_of(&q::int(24), &ctx.p())?;
            delta_gradient_flow_in(ctx, &q::one(), &gamma, &e, &Counterfunction::constant(0))
        })
        .unwrap();
        assert_eq!(ev.value, ExtNat::from_u64(2));
    }

    #[test]
    fn gradient_flow_zero_radius() {
        let c = delta_gradient_flow(&q::zero(), &ball_gamma(1, Interval::int(0)), &q::one(), &Counterfunction::linear(1, 0), &bud())
            .unwrap();
        assert_eq!(c.value, ExtNat::one());
    }

    #[test]
    fn gradient_flow_rejects_decreasing() {
        let mut t = std::collections::BTreeMap::new();
        t.insert(0, 5);
        let f = Counterfunction::table(t, 0);
        assert!(delta_gradient_flow(&q::one(), &NatOfReal::constant(1), &q::one(), &f, &bud()).is_err());
    }

    #[test]
    fn gradient_flow_matches_bundle() {
        for f in [Counterfunction::constant(0), Counterfunction::linear(1, 0), Counterfunction::linear(2, 3)] {
            for eps in [q::one(), q::rat(3, 2), q::int(5)] {
                let gamma = ball_gamma(1, Interval::int(1));
                let direct = delta_gradient_flow(&q::one(), &gamma, &eps, &f, &bud()).unwrap();
                let generic = delta_with_error_rate(&gradient_flow_bundle(&q::one(), gamma), &eps, &f, &bud()).unwrap();
                assert_eq!(direct.value, generic.value, "{f} {eps}");
            }
        }
    }

    #[test]
    fn stojkovic_matches_bundle() {
        for f in [Counterfunction::constant(0), Counterfunction::constant(1)] {
            for eps in [q::int(100), q::int(400)] {
                let gamma = ball_gamma(1, Interval::int(1));
                let direct = delta_stojkovic(&q::one(), &gamma, &eps, &f, &bud()).unwrap();
                let generic = delta_with_error_rate(&stojkovic_bundle(&q::one(), gamma), &eps, &f, &bud()).unwrap();
                assert_eq!(direct.value, generic.value, "{f} {eps}");
            }
        }
    }

    #[test]
    fn stojkovic_overflow() {
        let c = delta_stojkovic(&q::one(), &ball_gamma(1, Interval::int(1)), &q::rat(1, 1000), &Counterfunction::linear(1, 0), &bud())
            .unwrap();
        assert_eq!(c.value, ExtNat::Overflow);
    }

    #[test]
    fn rho_examples() {
        let c = rho_gradient_flow(&q::int(2), &RealMap::identity(), &q::one(), &bud()).unwrap();
        assert_eq!(c.value, ExtNat::from_u64(5));
        let g = rho_convergence_regular(&gradient_flow_regular_bundle(&q::int(2), RealMap::identity()), &q::one(), &bud()).unwrap();
        assert_eq!(g.value, c.value);
        // (4/4) e^1 = e -> 3, plus one.
        let c = rho_stojkovic(&q::one(), &RealMap::identity(), &q::int(4), &bud()).unwrap();
        assert_eq!(c.value, ExtNat::from_u64(4));
        let g = rho_convergence_regular(&stojkovic_regular_bundle(&q::one(), RealMap::identity()), &q::int(4), &bud()).unwrap();
        assert_eq!(g.value, c.value);
    }
}
