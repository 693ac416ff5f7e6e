use serde::{Deserialize, Serialize};

use super::report::{Status, VerificationReport};
use super::solution::SolutionFunction;
use crate::error::{input, Result};
use crate::flows::{Sample, Trajectory};
use crate::moduli::ExtNat;
use crate::operators::CocoerciveMap;
use crate::space::Point;

/// Checks lhs(x(t)) <= bound(t) at every sample with from <= t <= to.
/// `lip` bounds how fast lhs changes with x, so the tolerance at a sample is
/// max(3 lip est_err, lip |x'| h / 2).
pub fn check_tail_bound<L, B>(claim: &str, traj: &Trajectory, lhs: L, lip: f64, bound: B, from: f64, to: f64) -> Result<VerificationReport>
where
    L: Fn(&Sample) -> Result<f64>,
    B: Fn(f64) -> f64,
{
    let mut rep = VerificationReport::new(claim).with("from", from).with("to", to);
    let est = traj.est_err();
    let h = traj.max_gap();
    let mut worst: Option<(f64, f64, f64)> = None;
    for i in traj.window(from, to) {
        let s = &traj.samples[i];
        let speed = s.dx.as_ref().map_or_else(|| traj.speed_bound(s.t - h, s.t + h), |d| d.norm());
        let tol = (3.0 * lip * est).max(lip * speed * h / 2.0);
        let (l, r) = (lhs(s)?, bound(s.t));
        rep.record(l, r, tol);
        if worst.map_or(true, |w| l - r > w.1 - w.2) {
            worst = Some((s.t, l, r));
        }
    }
    if let Some((t, l, r)) = worst {
        rep.put("worst_t", t);
        rep.put("worst_lhs", l);
        rep.put("worst_rhs", r);
    }
    if !traj.meta.certified_dense {
        rep = rep.sampled();
    }
    Ok(rep)
}

/// Per-eps check of lhs(x(t)) <= eps for t >= rate(eps); rates past the
/// horizon or over budget make that item inconclusive.
fn rate_check<L, R>(claim: &str, traj: &Trajectory, lhs: L, lip: f64, rate: R, eps_list: &[f64]) -> Result<VerificationReport>
where
    L: Fn(&Sample) -> Result<f64>,
    R: Fn(f64) -> Result<ExtNat>,
{
    if eps_list.is_empty() {
        return input("need at least one eps");
    }
    let mut rep = VerificationReport::new(claim);
    for &eps in eps_list {
        if !(eps > 0.0) {
            return input("eps must be positive");
        }
        let t0 = rate(eps)?;
        let name = format!("eps={eps}");
        let sub = match t0.to_u64() {
            _ if t0.is_overflow() => {
                let mut r = VerificationReport::new(name).with("rate", &t0);
                r.escalate(Status::InconclusiveOverflow);
                r
            }
            Some(t) if (t as f64) <= traj.horizon => {
                let mut r = check_tail_bound(&name, traj, &lhs, lip, |_| eps, t as f64, traj.horizon)?;
                r.put("rate", t);
                r
            }
            _ => {
                let mut r = VerificationReport::new(name).with("rate", &t0).with("horizon", traj.horizon);
                r.put("value_at_horizon", lhs(traj.samples.last().expect("nonempty"))?);
                r.note("rate lies beyond the horizon");
                r.escalate(Status::InconclusiveHorizon);
                r
            }
        };
        rep.absorb(&sub);
    }
    if !traj.meta.certified_dense {
        rep = rep.sampled();
    }
    Ok(rep)
}

/// residual(x(t)) <= eps for all t >= rate(eps).
pub fn check_asymptotic_regularity<R>(claim: &str, traj: &Trajectory, residual: &SolutionFunction, rate: R, eps_list: &[f64]) -> Result<VerificationReport>
where
    R: Fn(f64) -> Result<ExtNat>,
{
    let lip = residual.value_tolerance(&Point::zeros(traj.dim()), 1.0);
    rate_check(claim, traj, |s| residual.eval(&s.x), lip, rate, eps_list)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Point { y: Point },
    /// A finite solution set; the distance is to the nearest member.
    Points { ys: Vec<Point> },
}

impl Target {
    pub fn dist(&self, x: &Point) -> f64 {
        match self {
            Target::Point { y } => x.dist(y),
            Target::Points { ys } => ys.iter().map(|y| x.dist(y)).fold(f64::INFINITY, f64::min),
        }
    }
}

/// dist(x(t), target) <= eps for all t >= rho(eps).
pub fn check_convergence_rate<R>(claim: &str, traj: &Trajectory, target: &Target, rho: R, eps_list: &[f64]) -> Result<VerificationReport>
where
    R: Fn(f64) -> Result<ExtNat>,
{
    rate_check(claim, traj, |s| Ok(target.dist(&s.x)), 1.0, rho, eps_list)
}

/// dist(x(t), target) <= c^floor(t) d0 (1 + 1e-6) for t <= t_max.
pub fn check_exponential_rate(claim: &str, traj: &Trajectory, target: &Target, c: f64, d0: f64, t_max: f64) -> Result<VerificationReport> {
    if !(0.0..=1.0).contains(&c) {
        return input("rate constant must lie in [0, 1]");
    }
    let rep = check_tail_bound(claim, traj, |s| Ok(target.dist(&s.x)), 1.0, |t| c.powf(t.floor()) * d0 * (1.0 + 1e-6), 0.0, t_max.min(traj.horizon))?;
    Ok(rep.with("c", c).with("d0", d0))
}

/// |B x(t) - B y| <= eps for all t >= psi(eps).
pub fn check_b_convergence<R>(claim: &str, traj: &Trajectory, b: &CocoerciveMap, y: &Point, psi: R, eps_list: &[f64]) -> Result<VerificationReport>
where
    R: Fn(f64) -> Result<ExtNat>,
{
    let by = b.apply(y)?;
    rate_check(claim, traj, |s| Ok(b.apply(&s.x)?.dist(&by)), 1.0 / b.beta, psi, eps_list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{integrate_first_order, ParameterCurve};
    use crate::operators::NonexpansiveMap;

    #[test]
    fn half_contraction_rates() {
        let t_map = NonexpansiveMap::Scalar { c: 0.5 };
        let tr = integrate_first_order(&t_map, &ParameterCurve::constant(0.5), &Point::from(1.0), 20.0, 1e-2).unwrap();
        let f = SolutionFunction::fixed_point(t_map);
        // residual 0.5 e^{-t/4} <= 1/sqrt(t/4)
        let rep = check_tail_bound("inf", &tr, |s| f.eval(&s.x), 1.5, |t| 1.0 / (0.25 * t).sqrt(), 1e-9, 20.0).unwrap();
        assert_eq!(rep.status, Status::Holds);
        let rep = check_asymptotic_regularity("ar", &tr, &f, |e| Ok(ExtNat::from_u64((4.0 / (e * e)).ceil() as u64)), &[0.5, 0.1]).unwrap();
        assert_eq!(rep.status, Status::InconclusiveHorizon);
        let rep = check_asymptotic_regularity("ar", &tr, &f, |e| Ok(ExtNat::from_u64((4.0 / (e * e)).ceil() as u64)), &[0.5]).unwrap();
        assert_eq!(rep.status, Status::Holds);
        let zero = Target::Point { y: Point::from(0.0) };
        let rep = check_exponential_rate("exp", &tr, &zero, (-0.25f64).exp(), 1.0, 20.0).unwrap();
        assert!(rep.status.holds());
        let rep = check_exponential_rate("exp", &tr, &zero, 0.5, 1.0, 20.0).unwrap();
        assert_eq!(rep.status, Status::Violated);
    }
}
