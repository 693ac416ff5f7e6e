use super::report::VerificationReport;
use super::solution::LevelPoint;
use crate::error::{input, Result};
use crate::flows::{Sample, Trajectory};
use crate::moduli::{Perturbation, PerturbationPair};

/// e(s, t) = at_s(x(s)) + at_t(x(t)); the error models in use split this way.
pub struct ErrorModel<'a> {
    pub at_s: Box<dyn Fn(&Sample) -> f64 + 'a>,
    pub at_t: Box<dyn Fn(&Sample) -> f64 + 'a>,
}

pub struct FejerSpec<'a> {
    pub pair: PerturbationPair,
    /// chi(eps, n, m)
    pub chi: Box<dyn Fn(f64, u64, u64) -> f64 + 'a>,
    pub error: Option<ErrorModel<'a>>,
    pub eps_list: Vec<f64>,
    /// (n, m) windows [n, n + m]
    pub windows: Vec<(u64, u64)>,
}

fn slope(p: &Perturbation, a: f64) -> f64 {
    let d = 1e-6 * (1.0 + a);
    (p.apply_f64(a + d) - p.apply_f64(a)) / d
}

/// For each eps, window (n, m) and supplied point z with residual at most
/// chi(eps, n, m), asserts H(d(x(t), z)) <= G(d(x(s), z)) + e(s, t) + eps for
/// sample times s <= t in the window. Points above the guard are skipped.
pub fn check_fejer(claim: &str, traj: &Trajectory, points: &[LevelPoint], spec: &FejerSpec) -> Result<VerificationReport> {
    if points.iter().any(|p| !p.residual.is_finite() || p.residual < 0.0) {
        return input("every level point needs a finite nonnegative residual");
    }
    let (g, h) = (&spec.pair.g, &spec.pair.h);
    let est = traj.est_err();
    let gap = traj.max_gap();
    let mut rep = VerificationReport::new(claim);
    let mut guarded_out = 0u64;
    for &eps in &spec.eps_list {
        for &(n, m) in &spec.windows {
            let chi = (spec.chi)(eps, n, m);
            let hi = ((n + m) as f64).min(traj.horizon);
            if n as f64 > traj.horizon {
                continue;
            }
            let idx = traj.window(n as f64, hi);
            if idx.is_empty() {
                continue;
            }
            let lip = traj.speed_bound(n as f64, hi);
            for p in points {
                if p.residual > chi {
                    guarded_out += 1;
                    continue;
                }
                let dists: Vec<f64> = idx.clone().map(|i| traj.samples[i].x.dist(&p.z)).collect();
                let dmax = dists.iter().copied().fold(0.0, f64::max);
                let pert = (3.0 * est).max(lip * gap / 2.0);
                let tol = (slope(h, dmax) + slope(g, dmax)) * pert;
                // running min over s <= t of G(d(x(s), z)) + e_s(s)
                let mut best = f64::INFINITY;
                let mut worst = f64::NEG_INFINITY;
                let mut worst_rhs = 0.0;
                for (k, i) in idx.clone().enumerate() {
                    let smp = &traj.samples[i];
                    let es = spec.error.as_ref().map_or(0.0, |e| (e.at_s)(smp));
                    best = best.min(g.apply_f64(dists[k]) + es);
                    let et = spec.error.as_ref().map_or(0.0, |e| (e.at_t)(smp));
                    let lhs = h.apply_f64(dists[k]);
                    let rhs = best + et + eps;
                    if lhs - rhs > worst {
                        worst = lhs - rhs;
                        worst_rhs = rhs;
                    }
                }
                rep.record(worst + worst_rhs, worst_rhs, tol);
            }
        }
    }
    rep.put("guarded_out", guarded_out);
    if !traj.meta.certified_dense {
        rep = rep.sampled();
    }
    Ok(rep)
}
