use serde::{Deserialize, Serialize};

use super::trajectory::{IntegratorMeta, Sample, Trajectory};
use crate::error::{input, Result};
use crate::operators::{stojkovic_resolvent, ConvexFunction, NonexpansiveMap};
use crate::space::{Point, SpaceDescriptor};

/// Doubling schedule for the exponential formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub n_start: u64,
    pub n_max: u64,
    pub tol: f64,
}

impl Default for Refinement {
    fn default() -> Refinement {
        Refinement { n_start: 1, n_max: 1 << 20, tol: 2.5e-7 }
    }
}

impl Refinement {
    fn validate(&self) -> Result<()> {
        if self.n_start == 0 || self.n_max < self.n_start || !(self.tol > 0.0) {
            return input("refinement needs 1 <= n_start <= n_max and tol > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupPoint {
    pub point: Point,
    /// Number of resolvent steps in the returned iterate.
    pub n: u64,
    /// Distance between the last two refinements.
    pub achieved_tol: f64,
    pub converged: bool,
    /// Accumulated inexactness of the individual resolvent evaluations.
    pub inner_err: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl SemigroupPoint {
    /// achieved_tol + inner_err
    pub fn err(&self) -> f64 {
        self.achieved_tol + self.inner_err
    }
}

fn refine<F>(x: &Point, t: f64, r: &Refinement, iterate: F) -> Result<SemigroupPoint>
where
    F: Fn(u64) -> Result<(Point, f64)>,
{
    r.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return input("semigroup time must be finite and nonnegative");
    }
    if t == 0.0 {
        return Ok(SemigroupPoint { point: x.clone(), n: 0, achieved_tol: 0.0, converged: true, inner_err: 0.0, warning: None });
    }
    let mut n = r.n_start;
    let (mut prev, _) = iterate(n)?;
    loop {
        if n > r.n_max / 2 {
            let (point, inner_err) = iterate(n)?;
            return Ok(SemigroupPoint {
                point,
                n,
                achieved_tol: f64::NAN,
                converged: false,
                inner_err,
                warning: Some(format!("refinement reached n_max = {} before tolerance {}", r.n_max, r.tol)),
            });
        }
        n *= 2;
        let (cur, inner_err) = iterate(n)?;
        let diff = cur.dist(&prev);
        if diff < r.tol || n * 2 > r.n_max {
            let converged = diff < r.tol;
            return Ok(SemigroupPoint {
                point: cur,
                n,
                achieved_tol: diff,
                converged,
                inner_err,
                warning: (!converged).then(|| format!("refinement stopped at n_max = {} with Cauchy difference {diff:e}", r.n_max)),
            });
        }
        prev = cur;
    }
}

/// S_t(x) = lim (J_{t/n})^n x with J the prox of phi.
pub fn gradient_flow_semigroup(phi: &ConvexFunction, x: &Point, t: f64, r: &Refinement) -> Result<SemigroupPoint> {
    phi.validate()?;
    if !phi.value(x)?.is_finite() {
        return input("starting point lies outside the domain of the function");
    }
    refine(x, t, r, |n| {
        let s = t / n as f64;
        let mut y = x.clone();
        let mut inner = 0.0;
        for _ in 0..n {
            let p = phi.prox(s, &y)?;
            inner += p.residual_bound;
            y = p.point;
        }
        Ok((y, inner))
    })
}

/// T_t(x) = lim (R_{t/n})^n x with R the resolvent of the nonexpansive map F.
pub fn stojkovic_semigroup(f: &NonexpansiveMap, x: &Point, t: f64, r: &Refinement) -> Result<SemigroupPoint> {
    refine(x, t, r, |n| {
        let s = t / n as f64;
        let inner_tol = r.tol / (2 * n) as f64;
        let mut y = x.clone();
        for _ in 0..n {
            y = stojkovic_resolvent(f, s, &y, inner_tol)?;
        }
        // each inexact resolvent is off by at most tol (1+s) and the exact
        // resolvents are nonexpansive
        Ok((y, n as f64 * inner_tol * (1.0 + s)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemigroupKind {
    GradientFlow,
    Stojkovic,
}

/// Samples t -> S_t(x0) on a uniform grid by composing S_dt, using the
/// semigroup law. Errors accumulate additively since each S_dt is
/// nonexpansive. Dense evaluation between samples is linear and sampled,
/// not certified.
pub fn semigroup_trajectory<F>(x0: &Point, horizon: f64, dt: f64, r: &Refinement, method: &str, step: F) -> Result<Trajectory>
where
    F: Fn(&Point, f64) -> Result<SemigroupPoint>,
{
    if !(horizon > 0.0 && dt > 0.0 && dt <= horizon) {
        return input("need 0 < dt <= horizon");
    }
    let n = (horizon / dt - 1e-9).ceil() as usize;
    let h = horizon / n as f64;
    let mut samples = vec![Sample { t: 0.0, x: x0.clone(), v: None, dx: None, dv: None }];
    let mut acc = 0.0;
    let mut worst_n = 0;
    for i in 1..=n {
        let p = step(&samples[i - 1].x, h)?;
        acc += if p.converged { p.err() } else { r.tol.max(p.inner_err) * 2.0 };
        worst_n = worst_n.max(p.n);
        let t = if i == n { horizon } else { i as f64 * h };
        samples.push(Sample { t, x: p.point, v: None, dx: None, dv: None });
    }
    // linear interpolation error |x''| h^2 / 8 from second differences
    let mut d2: f64 = 0.0;
    for w in samples.windows(3) {
        d2 = d2.max(w[2].x.sub(&w[1].x).sub(&w[1].x.sub(&w[0].x)).norm());
    }
    let interp = d2 / 8.0;
    let meta = IntegratorMeta {
        method: method.into(),
        step: h,
        steps: worst_n,
        local_err: acc / n as f64,
        sample_err: acc,
        interp_err: interp,
        est_err: acc + interp,
        certified_dense: false,
    };
    Ok(Trajectory { space: SpaceDescriptor::euclidean(x0.dim()), horizon, meta, samples })
}

pub fn gradient_flow_trajectory(phi: &ConvexFunction, x0: &Point, horizon: f64, dt: f64, r: &Refinement) -> Result<Trajectory> {
    semigroup_trajectory(x0, horizon, dt, r, "exponential_formula_prox", |x, h| gradient_flow_semigroup(phi, x, h, r))
}

pub fn stojkovic_trajectory(f: &NonexpansiveMap, x0: &Point, horizon: f64, dt: f64, r: &Refinement) -> Result<Trajectory> {
    semigroup_trajectory(x0, horizon, dt, r, "exponential_formula_resolvent", |x, h| stojkovic_semigroup(f, x, h, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_flow() {
        let phi = ConvexFunction::quadratic(1.0);
        let x = Point::from(1.0);
        let r = Refinement::default();
        let s = gradient_flow_semigroup(&phi, &x, 1.0, &r).unwrap();
        assert!((s.point.coords()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(gradient_flow_semigroup(&phi, &x, 0.0, &r).unwrap().point, x);
        let z = Point::from(0.0);
        assert_eq!(gradient_flow_semigroup(&phi, &z, 3.0, &r).unwrap().point, z);
    }

    #[test]
    fn negation_semigroup() {
        let x = Point::from(1.0);
        let r = Refinement::default();
        let s = stojkovic_semigroup(&NonexpansiveMap::Negation, &x, 1.0, &r).unwrap();
        assert!((s.point.coords()[0] - (-2.0f64).exp()).abs() < 1e-6, "{s:?}");
        assert_eq!(stojkovic_semigroup(&NonexpansiveMap::Identity, &x, 2.0, &r).unwrap().point, x);
    }

    #[test]
    fn rotation_norm_decreases() {
        let f = NonexpansiveMap::Rotation { angle: std::f64::consts::FRAC_PI_2 };
        let x = Point::new(vec![1.0, 0.5]).unwrap();
        let r = Refinement { n_start: 1, n_max: 1 << 12, tol: 1e-5 };
        let mut last = x.norm();
        for t in [0.25, 0.5, 1.0, 2.0] {
            let p = stojkovic_semigroup(&f, &x, t, &r).unwrap();
            assert!(p.point.norm() <= last + p.err());
            last = p.point.norm();
        }
    }
}
