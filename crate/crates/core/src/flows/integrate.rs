use serde::{Deserialize, Serialize};

use super::curve::{Monotonicity, ParameterCurve};
use super::trajectory::{IntegratorMeta, Sample, Trajectory};
use crate::error::{input, Error, Result};
use crate::operators::{check_fb_step, fb_delta, forward_backward_map, CocoerciveMap, MonotoneOperator, NonexpansiveMap};
use crate::space::{Point, SpaceDescriptor};

type State = Vec<f64>;

fn axpy(y: &[f64], s: f64, k: &[f64]) -> State {
    y.iter().zip(k).map(|(a, b)| a + s * b).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Run {
    ys: Vec<State>,
    ds: Vec<State>,
    local: f64,
}

fn step<F>(f: &F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<State>
where
    F: Fn(f64, &[f64]) -> Result<State>,
{
    let k2 = f(t + h / 2.0, &axpy(y, h / 2.0, k1))?;
    let k3 = f(t + h / 2.0, &axpy(y, h / 2.0, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok((0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// Classical fourth-order Runge-Kutta with n fixed steps of size h. With
/// `defect`, every pair of steps is also taken as one double step and the
/// largest discrepancy is recorded.
fn run<F>(f: &F, y0: &[f64], n: usize, h: f64, defect: bool) -> Result<Run>
where
    F: Fn(f64, &[f64]) -> Result<State>,
{
    let mut ys = Vec::with_capacity(n + 1);
    let mut ds = Vec::with_capacity(n + 1);
    ys.push(y0.to_vec());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let t = i as f64 * h;
        let k1 = f(t, &ys[i])?;
        let next = step(f, t, &ys[i], &k1, h)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!("non-finite state at t = {}", t + h)));
        }
        ds.push(k1);
        ys.push(next);
        if defect && i % 2 == 1 {
            let j = i - 1;
            let double = step(f, j as f64 * h, &ys[j], &ds[j], 2.0 * h)?;
            worst = worst.max(dist(&double, &ys[i + 1]));
        }
    }
    ds.push(f(n as f64 * h, &ys[n])?);
    // two steps of h versus one of 2h differ by about 30 local errors of size h
    Ok(Run { ys, ds, local: worst / 30.0 })
}

fn interp_err(ds: &[State], h: f64) -> f64 {
    // cubic Hermite error h^4/384 |y''''|, with y'''' from third differences of y'
    let mut m: f64 = 0.0;
    for w in ds.windows(4) {
        let d3: Vec<f64> = (0..w[0].len()).map(|i| w[3][i] - 3.0 * w[2][i] + 3.0 * w[1][i] - w[0][i]).collect();
        m = m.max(norm(&d3));
    }
    2.0 * h * m / 384.0
}

/// Integrates y' = f(t, y) on [0, horizon] and packs the result. `split` is
/// the dimension of x when the state is (x, v).
fn integrate<F>(space: SpaceDescriptor, y0: State, split: Option<usize>, horizon: f64, step_hint: f64, method: &str, f: F) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Result<State>,
{
    if !(horizon > 0.0 && horizon.is_finite()) {
        return input("horizon must be positive");
    }
    if !(step_hint > 0.0 && step_hint <= horizon) {
        return input("step must lie in (0, horizon]");
    }
    let raw = (horizon / step_hint - 1e-9).ceil().max(2.0);
    if raw > 5e7 {
        return input("too many integration steps");
    }
    let mut n = raw as usize;
    n += n % 2;
    let h = horizon / n as f64;
    let fine = run(&f, &y0, n, h, true)?;
    let coarse = run(&f, &y0, n / 2, 2.0 * h, false)?;
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, yc) in coarse.ys.iter().enumerate() {
        diff = diff.max(dist(yc, &fine.ys[2 * k]));
        scale = scale.max(norm(yc));
    }
    let roundoff = 4.0 * n as f64 * f64::EPSILON * scale.max(1e-300);
    let sample_err = diff / 15.0 + roundoff;
    let interp = interp_err(&fine.ds, h);
    let meta = IntegratorMeta {
        method: method.into(),
        step: h,
        steps: n as u64,
        local_err: fine.local,
        sample_err,
        interp_err: interp,
        est_err: sample_err + interp,
        certified_dense: true,
    };
    let samples = fine
        .ys
        .into_iter()
        .zip(fine.ds)
        .enumerate()
        .map(|(i, (y, d))| {
            let t = if i == n { horizon } else { i as f64 * h };
            match split {
                None => Sample { t, x: Point::raw(y), v: None, dx: Some(Point::raw(d)), dv: None },
                Some(k) => Sample {
                    t,
                    x: Point::raw(y[..k].to_vec()),
                    v: Some(Point::raw(y[k..].to_vec())),
                    dx: Some(Point::raw(d[..k].to_vec())),
                    dv: Some(Point::raw(d[k..].to_vec())),
                },
            }
        })
        .collect();
    Ok(Trajectory { space, horizon, meta, samples })
}

fn first_order_with<M>(map: M, lam: &ParameterCurve, x0: &Point, horizon: f64, step: f64, method: &str) -> Result<Trajectory>
where
    M: Fn(&Point) -> Result<Point>,
{
    let d = x0.dim();
    integrate(SpaceDescriptor::euclidean(d), x0.coords().to_vec(), None, horizon, step, method, |t, y| {
        let x = Point::raw(y.to_vec());
        let tx = map(&x)?;
        if tx.dim() != d {
            return Err(Error::Dimension { expected: d, got: tx.dim() });
        }
        let l = lam.eval(t);
        Ok(tx.coords().iter().zip(y).map(|(a, b)| l * (a - b)).collect())
    })
}

/// x' = lam(t) (T x - x), x(0) = x0.
pub fn integrate_first_order(t_map: &NonexpansiveMap, lam: &ParameterCurve, x0: &Point, horizon: f64, step: f64) -> Result<Trajectory> {
    lam.require_within("lambda", horizon, 0.0, 1.0)?;
    first_order_with(|x| t_map.apply(x), lam, x0, horizon, step, "rk4_first_order")
}

/// The parameter assumptions of the second-order system: lambda > 0
/// nondecreasing, gamma > 0 nonincreasing, gamma^2/lambda >= (1+theta)/beta.
pub fn check_second_order_curves(lam: &ParameterCurve, gam: &ParameterCurve, theta: f64, beta: f64, horizon: f64) -> Result<()> {
    if !(theta > 0.0 && beta > 0.0) {
        return input("theta and beta must be positive");
    }
    let (lmin, _) = lam.check_bounds("lambda", horizon)?;
    let (gmin, _) = gam.check_bounds("gamma", horizon)?;
    if !(lmin > 0.0 && gmin > 0.0) {
        return input("lambda and gamma must stay positive");
    }
    if matches!(lam.monotonicity(horizon), Monotonicity::Nonincreasing | Monotonicity::Neither) {
        return input("lambda must be nondecreasing");
    }
    if matches!(gam.monotonicity(horizon), Monotonicity::Nondecreasing | Monotonicity::Neither) {
        return input("gamma must be nonincreasing");
    }
    let need = (1.0 + theta) / beta;
    let grid = 2000;
    for i in 0..=grid {
        let t = horizon * i as f64 / grid as f64;
        let g = gam.eval(t);
        let ratio = g * g / lam.eval(t);
        if ratio < need * (1.0 - 1e-12) {
            return input(format!("gamma^2/lambda = {ratio} < (1+theta)/beta = {need} at t = {t}"));
        }
    }
    Ok(())
}

fn second_order_with<B>(op: B, lam: &ParameterCurve, gam: &ParameterCurve, u0: &Point, v0: &Point, horizon: f64, step: f64, method: &str) -> Result<Trajectory>
where
    B: Fn(&Point) -> Result<Point>,
{
    let d = u0.dim();
    if v0.dim() != d {
        return Err(Error::Dimension { expected: d, got: v0.dim() });
    }
    let mut y0 = u0.coords().to_vec();
    y0.extend_from_slice(v0.coords());
    integrate(SpaceDescriptor::euclidean(d), y0, Some(d), horizon, step, method, |t, y| {
        let bx = op(&Point::raw(y[..d].to_vec()))?;
        if bx.dim() != d {
            return Err(Error::Dimension { expected: d, got: bx.dim() });
        }
        let (l, g) = (lam.eval(t), gam.eval(t));
        let mut out = y[d..].to_vec();
        out.extend((0..d).map(|i| -g * y[d + i] - l * bx.coords()[i]));
        Ok(out)
    })
}

/// x'' + gam(t) x' + lam(t) B x = 0, x(0) = u0, x'(0) = v0.
#[allow(clippy::too_many_arguments)]
pub fn integrate_second_order(
    b: &CocoerciveMap,
    lam: &ParameterCurve,
    gam: &ParameterCurve,
    theta: f64,
    u0: &Point,
    v0: &Point,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    b.validate()?;
    check_second_order_curves(lam, gam, theta, b.beta, horizon)?;
    second_order_with(|x| b.apply(x), lam, gam, u0, v0, horizon, step, "rk4_second_order")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum FbDynamics {
    First { lam: ParameterCurve },
    Second { lam: ParameterCurve, gam: ParameterCurve, theta: f64, v0: Point },
}

/// (4 beta - eta) / (2 beta)
pub fn fb_second_order_delta(beta: f64, eta: f64) -> f64 {
    (4.0 * beta - eta) / (2.0 * beta)
}

/// The forward-backward dynamics driven by T = J_{sA}(Id - sB) with step
/// parameter s (gamma for the first-order system, eta for the second).
pub fn integrate_forward_backward(
    dynamics: &FbDynamics,
    a: &MonotoneOperator,
    b: &CocoerciveMap,
    step_param: f64,
    x0: &Point,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    check_fb_step(step_param, b.beta)?;
    let t_map = forward_backward_map(a, b, step_param)?;
    match dynamics {
        FbDynamics::First { lam } => {
            let delta = fb_delta(b.beta, step_param);
            lam.require_within("lambda", horizon, 0.0, delta)?;
            first_order_with(|x| t_map.apply(x), lam, x0, horizon, step, "rk4_fb_first_order")
        }
        FbDynamics::Second { lam, gam, theta, v0 } => {
            let delta = fb_second_order_delta(b.beta, step_param);
            lam.require_within("lambda", horizon, 0.0, delta)?;
            // Id - T is (delta/2)-cocoercive
            check_second_order_curves(lam, gam, *theta, delta / 2.0, horizon)?;
            let op = |x: &Point| Ok(x.sub(&t_map.apply(x)?));
            second_order_with(op, lam, gam, x0, v0, horizon, step, "rk4_fb_second_order")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::CocoerciveKind;

    #[test]
    fn exponential_decay() {
        let zero = NonexpansiveMap::Scalar { c: 0.0 };
        let tr = integrate_first_order(&zero, &ParameterCurve::constant(1.0), &Point::from(1.0), 2.0, 1e-2).unwrap();
        let x1 = tr.eval(1.0).unwrap().coords()[0];
        assert!((x1 - (-1.0f64).exp()).abs() <= tr.est_err() + 1e-15);
        assert!(tr.est_err() < 1e-8);
        let mid = tr.eval(1.005).unwrap().coords()[0];
        assert!((mid - (-1.005f64).exp()).abs() <= tr.est_err());
    }

    #[test]
    fn constant_trajectories() {
        let x0 = Point::new(vec![1.0, -2.0]).unwrap();
        let tr = integrate_first_order(&NonexpansiveMap::Identity, &ParameterCurve::constant(0.7), &x0, 1.0, 0.1).unwrap();
        assert!(tr.samples.iter().all(|s| s.x == x0));
        let tr = integrate_first_order(&NonexpansiveMap::Negation, &ParameterCurve::constant(0.0), &x0, 1.0, 0.1).unwrap();
        assert!(tr.samples.iter().all(|s| s.x == x0));
        assert!(integrate_first_order(&NonexpansiveMap::Negation, &ParameterCurve::constant(1.5), &x0, 1.0, 0.1).is_err());
    }

    #[test]
    fn damped_oscillator() {
        let b = CocoerciveMap::identity();
        let tr = integrate_second_order(
            &b,
            &ParameterCurve::constant(2.0),
            &ParameterCurve::constant(3.0),
            3.5,
            &Point::from(1.0),
            &Point::from(0.0),
            6.0,
            1e-3,
        )
        .unwrap();
        for t in [0.5, 1.0, 2.0, 5.0] {
            let exact = 2.0 * (-t as f64).exp() - (-2.0 * t as f64).exp();
            assert!((tr.eval(t).unwrap().coords()[0] - exact).abs() < 1e-9);
        }
        let bad = integrate_second_order(&b, &ParameterCurve::constant(2.0), &ParameterCurve::constant(3.0), 3.6, &Point::from(1.0), &Point::from(0.0), 6.0, 1e-3);
        assert!(bad.is_err());
    }

    #[test]
    fn forward_backward_reduces() {
        let lam = ParameterCurve::constant(0.5);
        let fb = FbDynamics::First { lam: lam.clone() };
        let x0 = Point::from(3.0);
        let tr = integrate_forward_backward(&fb, &MonotoneOperator::Zero, &CocoerciveMap::identity(), 1.0, &x0, 4.0, 1e-2).unwrap();
        let direct = integrate_first_order(&NonexpansiveMap::Scalar { c: 0.0 }, &lam, &x0, 4.0, 1e-2).unwrap();
        assert_eq!(tr.samples, direct.samples);
        let zero_b = CocoerciveMap { kind: CocoerciveKind::Zero, beta: 1.0 };
        let cone = MonotoneOperator::PointCone { point: Point::from(0.0) };
        let tr2 = integrate_forward_backward(&fb, &cone, &zero_b, 1.0, &x0, 4.0, 1e-2).unwrap();
        assert_eq!(tr2.samples, direct.samples);
        assert!(integrate_forward_backward(&FbDynamics::First { lam: ParameterCurve::constant(1.6) }, &MonotoneOperator::Zero, &CocoerciveMap::identity(), 1.0, &x0, 4.0, 1e-2).is_err());
    }
}
