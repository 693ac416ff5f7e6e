use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Status, VerificationReport};
use crate::error::{input, Result};
use crate::flows::Trajectory;
use crate::moduli::{Counterfunction, ExtNat};
use crate::space::Point;

/// Oscillation of a trajectory on a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub lo: f64,
    pub hi: f64,
    /// sup of pairwise distances over the grid points
    pub sup: f64,
    /// bound on how much the sup over the continuum can exceed `sup`
    pub slack: f64,
    /// false when the scan stopped early after exceeding its threshold
    pub complete: bool,
}

/// Grid points of [lo, hi]: the trajectory samples inside plus both ends, or a
/// uniform grid of the given step when it is coarser than the samples.
fn grid_points(traj: &Trajectory, lo: f64, hi: f64, grid: f64) -> Result<(Vec<Point>, f64)> {
    if hi <= lo {
        return Ok((vec![traj.eval(lo)?], 0.0));
    }
    if grid > traj.max_gap() {
        let k = ((hi - lo) / grid).ceil().max(1.0) as usize;
        let h = (hi - lo) / k as f64;
        let pts = (0..=k).map(|i| traj.eval(if i == k { hi } else { lo + i as f64 * h })).collect::<Result<_>>()?;
        return Ok((pts, h));
    }
    let mut pts = vec![traj.eval(lo)?];
    let mut gap: f64 = 0.0;
    let mut last = lo;
    for i in traj.window(lo, hi) {
        let s = &traj.samples[i];
        if s.t > lo && s.t < hi {
            pts.push(s.x.clone());
            gap = gap.max(s.t - last);
            last = s.t;
        }
    }
    pts.push(traj.eval(hi)?);
    gap = gap.max(hi - last);
    Ok((pts, gap))
}

/// Drops points that lie within `eta` of the last kept point along the
/// path, returning the kept points and the largest skipped distance.
fn thin(pts: &[Point], eta: f64) -> (Vec<&Point>, f64) {
    let mut kept = vec![&pts[0]];
    let mut worst: f64 = 0.0;
    for p in &pts[1..] {
        let d = kept.last().map_or(0.0, |k| k.dist(p));
        if d > eta {
            kept.push(p);
        } else {
            worst = worst.max(d);
        }
    }
    (kept, worst)
}

/// Diameter of a point set; stops early once it exceeds `stop_above`.
fn diameter(pts: &[Point], eta: f64, stop_above: f64) -> (f64, f64, bool) {
    if pts[0].dim() == 1 {
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.coords()[0]), b.max(p.coords()[0])));
        return (hi - lo, 0.0, true);
    }
    let (kept, skipped) = thin(pts, eta);
    let mut m: f64 = 0.0;
    for i in 0..kept.len() {
        for j in (i + 1)..kept.len() {
            m = m.max(kept[i].dist(kept[j]));
        }
        if m > stop_above {
            return (m, 2.0 * skipped, false);
        }
    }
    (m, 2.0 * skipped, true)
}

/// Oscillation on [lo, hi]; the pairwise scan stops once the sup is
/// certainly above `stop_eps` plus tolerance.
pub(crate) fn window_oscillation(traj: &Trajectory, lo: f64, hi: f64, grid: f64, stop_eps: f64) -> Result<Oscillation> {
    let (pts, gap) = grid_points(traj, lo, hi, grid)?;
    let lip = traj.speed_bound(lo, hi);
    let eta = (lip * gap).max(traj.est_err());
    let stop_above = stop_eps + (3.0 * traj.est_err()).max(lip * gap + 2.0 * eta);
    let (sup, thin_slack, complete) = diameter(&pts, eta, stop_above);
    Ok(Oscillation { lo, hi, sup, slack: lip * gap + thin_slack, complete })
}

fn window_end(traj: &Trajectory, n: u64, f: &Counterfunction) -> Option<f64> {
    let len = f.eval_u64(n)?;
    let hi = n as f64 + len as f64;
    (hi <= traj.horizon).then_some(hi)
}

/// sup of d(x(s), x(t)) over s, t in [n, n + f(n)]. `None` signals that
/// the window reaches past the horizon and a longer trajectory is needed.
pub fn oscillation(traj: &Trajectory, n: u64, f: &Counterfunction, grid: f64) -> Result<Option<Oscillation>> {
    if !(grid >= 0.0) {
        return input("grid step must be nonnegative");
    }
    match window_end(traj, n, f) {
        None => Ok(None),
        Some(hi) => window_oscillation(traj, n as f64, hi, grid, f64::INFINITY).map(Some),
    }
}

/// Scans n = 0, 1, ... up to min(certificate, horizon reach) for the least
/// n with oscillation at most eps on [n, n + f(n)].
pub fn verify_metastability(claim: &str, traj: &Trajectory, eps: f64, f: &Counterfunction, certificate: &ExtNat) -> Result<VerificationReport> {
    if !(eps > 0.0) {
        return input("eps must be positive");
    }
    let mut rep = VerificationReport::new(claim).with("eps", eps).with("f", f.to_string()).with("certificate", certificate);
    let base_tol = 3.0 * traj.est_err();
    let cap = certificate.to_u64().map_or(u64::MAX, |c| c.min(traj.horizon.floor() as u64));
    let mut skipped = false;
    let mut witness = None;
    let mut n = 0u64;
    while n <= cap && (n as f64) <= traj.horizon {
        match window_end(traj, n, f) {
            None => skipped = true,
            Some(hi) => {
                let o = window_oscillation(traj, n as f64, hi, 0.0, eps)?;
                let tol = base_tol.max(o.slack);
                if o.complete && o.sup <= eps + tol {
                    witness = Some((n, o, tol));
                    break;
                }
            }
        }
        n += 1;
    }
    if !traj.meta.certified_dense {
        rep = rep.sampled();
    }
    match witness {
        Some((n, o, tol)) => {
            rep.put("n", n);
            rep.put("window", [o.lo, o.hi]);
            rep.put("oscillation", o.sup);
            rep.put("slack", o.slack);
            rep.record(o.sup, eps, tol);
            if let Some(c) = certificate.to_u64() {
                rep.put("certificate_slack", c as f64 / n.max(1) as f64);
            }
            if certificate.is_overflow() {
                rep.escalate(Status::InconclusiveOverflow);
                rep.note("certificate overflowed the budget; empirical witness reported");
            }
        }
        None => {
            rep.put("scanned_up_to", n.saturating_sub(1));
            if certificate.is_overflow() {
                rep.escalate(Status::InconclusiveOverflow);
                rep.note("certificate overflowed the budget and no witness was found within the horizon");
            } else if !skipped && certificate.to_u64().is_some_and(|c| (c as f64) <= traj.horizon && n > c) {
                rep.checked = n;
                rep.escalate(Status::Violated);
                rep.note("no n up to the certificate opens a window of small oscillation");
            } else {
                rep.escalate(Status::InconclusiveHorizon);
                let half = traj.horizon / 2.0;
                let tail = window_oscillation(traj, half, traj.horizon, 0.0, f64::INFINITY)?;
                rep.put("tail_oscillation", tail.sup);
                rep.note(if tail.sup < eps {
                    "horizon too short for the requested windows; tail oscillation is already below eps"
                } else {
                    "horizon too short; tail oscillation still exceeds eps"
                });
            }
        }
    }
    Ok(rep)
}

/// Checks that some n <= certificate has value(x(t)) < eps for all t in
/// [n, n + f(n)]. `value` maps a sample index to the scalar and `lip`
/// bounds its rate of change in time.
pub fn verify_windowed_bound<V>(
    claim: &str,
    traj: &Trajectory,
    value: V,
    tol: f64,
    lip: f64,
    eps: f64,
    f: &Counterfunction,
    certificate: &ExtNat,
) -> Result<VerificationReport>
where
    V: Fn(usize) -> Result<f64>,
{
    let mut rep = VerificationReport::new(claim).with("eps", eps).with("f", f.to_string()).with("certificate", certificate);
    let vals: Vec<f64> = (0..traj.samples.len()).map(&value).collect::<Result<_>>()?;
    let tol = tol.max(lip * traj.max_gap() / 2.0);
    let cap = certificate.to_u64().map_or(u64::MAX, |c| c.min(traj.horizon.floor() as u64));
    let mut n = 0u64;
    let mut skipped = false;
    let mut found = None;
    while n <= cap && (n as f64) <= traj.horizon {
        match window_end(traj, n, f) {
            None => skipped = true,
            Some(hi) => {
                let r = traj.window(n as f64, hi);
                let sup = vals[r].iter().copied().fold(0.0, f64::max);
                if sup < eps + tol {
                    found = Some((n, hi, sup));
                    break;
                }
            }
        }
        n += 1;
    }
    match found {
        Some((n, hi, sup)) => {
            rep.put("n", n);
            rep.put("window", [n as f64, hi]);
            rep.put("sup", sup);
            rep.record(sup, eps, tol);
            if certificate.is_overflow() {
                rep.escalate(Status::InconclusiveOverflow);
            }
        }
        None if certificate.is_overflow() => rep.escalate(Status::InconclusiveOverflow),
        None if !skipped && certificate.to_u64().is_some_and(|c| (c as f64) <= traj.horizon) => {
            rep.checked = n;
            rep.escalate(Status::Violated);
        }
        None => {
            rep.put("tail_sup", vals.last().copied());
            rep.escalate(Status::InconclusiveHorizon);
        }
    }
    rep.put("tolerance", json!(tol));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{integrate_first_order, ParameterCurve};
    use crate::operators::NonexpansiveMap;

    fn decay() -> Trajectory {
        integrate_first_order(&NonexpansiveMap::Scalar { c: 0.0 }, &ParameterCurve::constant(1.0), &Point::from(1.0), 6.0, 1e-3).unwrap()
    }

    #[test]
    fn oscillation_examples() {
        let tr = decay();
        let o = oscillation(&tr, 1, &Counterfunction::constant(2), 0.0).unwrap().unwrap();
        let exact = (-1.0f64).exp() - (-3.0f64).exp();
        assert!((o.sup - exact).abs() <= 3.0 * tr.est_err(), "{}", o.sup);
        assert_eq!(oscillation(&tr, 3, &Counterfunction::constant(0), 0.0).unwrap().unwrap().sup, 0.0);
        assert!(oscillation(&tr, 5, &Counterfunction::constant(2), 0.0).unwrap().is_none());
    }

    #[test]
    fn metastability_witness() {
        let tr = decay();
        let rep = verify_metastability("m", &tr, 0.5, &Counterfunction::identity_plus(1), &ExtNat::from_u64(100)).unwrap();
        assert_eq!(rep.witness["n"], json!(1));
        assert_eq!(rep.status, Status::Holds);
        let rep = verify_metastability("m", &tr, 0.5, &Counterfunction::constant(0), &ExtNat::from_u64(0)).unwrap();
        assert_eq!(rep.witness["n"], json!(0));
        let rep = verify_metastability("m", &tr, 0.5, &Counterfunction::identity_plus(1), &ExtNat::Overflow).unwrap();
        assert_eq!(rep.status, Status::InconclusiveOverflow);
        assert_eq!(rep.witness["n"], json!(1));
        let rep = verify_metastability("m", &tr, 0.5, &Counterfunction::identity_plus(1), &ExtNat::from_u64(0)).unwrap();
        assert_eq!(rep.status, Status::Violated);
    }
}
