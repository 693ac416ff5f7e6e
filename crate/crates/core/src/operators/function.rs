use serde::{Deserialize, Serialize};

use super::{check_dim, project_ball, project_box};
use crate::error::{input, Error, Result};
use crate::space::Point;

const MEMBER_SLACK: f64 = 1e-9;

/// Proximal point together with a bound on its distance to the exact prox.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub point: Point,
    pub residual_bound: f64,
}

impl ProxResult {
    fn exact(point: Point) -> ProxResult {
        ProxResult { point, residual_bound: 0.0 }
    }
}

/// Proper, convex, lower semicontinuous function with a prox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexFunction {
    /// (scale/2) |x - center|^2, center defaults to the origin
    QuadProx {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Point>,
    },
    /// weight * |x|_1
    L1 { weight: f64 },
    IndicatorBall { center: Point, radius: f64 },
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64> },
    /// indicator of {x : <normal, x> = offset}
    IndicatorHyperplane { normal: Point, offset: f64 },
    /// scale * sum log cosh(x_i); prox by gradient descent
    LogCosh { scale: f64 },
}

fn log_cosh(v: f64) -> f64 {
    let a = v.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl ConvexFunction {
    pub fn quadratic(scale: f64) -> ConvexFunction {
        ConvexFunction::QuadProx { scale, center: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexFunction::QuadProx { scale, .. } | ConvexFunction::LogCosh { scale } if !(*scale >= 0.0 && scale.is_finite()) => {
                input("scale must be finite and nonnegative")
            }
            ConvexFunction::L1 { weight } if !(*weight >= 0.0 && weight.is_finite()) => input("weight must be finite and nonnegative"),
            ConvexFunction::IndicatorBall { radius, .. } if !(*radius >= 0.0) => input("ball radius must be nonnegative"),
            ConvexFunction::IndicatorBox { lo, hi } if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l <= h)) => {
                input("box bounds must satisfy lo <= hi")
            }
            ConvexFunction::IndicatorHyperplane { normal, .. } if normal.norm() == 0.0 => input("hyperplane normal must be nonzero"),
            _ => Ok(()),
        }
    }

    fn center(&self, d: usize) -> Point {
        match self {
            ConvexFunction::QuadProx { center: Some(c), .. } => c.clone(),
            _ => Point::zeros(d),
        }
    }

    /// Value, +inf outside the domain of an indicator.
    pub fn value(&self, x: &Point) -> Result<f64> {
        Ok(match self {
            ConvexFunction::QuadProx { scale, .. } => {
                let c = self.center(x.dim());
                check_dim(x, c.dim())?;
                0.5 * scale * x.sub(&c).norm().powi(2)
            }
            ConvexFunction::L1 { weight } => weight * x.coords().iter().map(|v| v.abs()).sum::<f64>(),
            ConvexFunction::IndicatorBall { center, radius } => {
                check_dim(x, center.dim())?;
                if x.dist(center) <= radius * (1.0 + MEMBER_SLACK) + MEMBER_SLACK {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexFunction::IndicatorBox { lo, hi } => {
                check_dim(x, lo.len())?;
                let inside = x.coords().iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= l - MEMBER_SLACK && *v <= h + MEMBER_SLACK);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexFunction::IndicatorHyperplane { normal, offset } => {
                check_dim(x, normal.dim())?;
                if (normal.dot(x) - offset).abs() <= MEMBER_SLACK * (1.0 + offset.abs() + normal.norm() * x.norm()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexFunction::LogCosh { scale } => scale * x.coords().iter().map(|v| log_cosh(*v)).sum::<f64>(),
        })
    }

    /// Gradient, for the differentiable members.
    pub fn gradient(&self, x: &Point) -> Result<Point> {
        match self {
            ConvexFunction::QuadProx { scale, .. } => {
                let c = self.center(x.dim());
                check_dim(x, c.dim())?;
                Ok(x.sub(&c).scale(*scale))
            }
            ConvexFunction::LogCosh { scale } => Point::new(x.coords().iter().map(|v| scale * v.tanh()).collect()),
            _ => Err(Error::Unsupported("gradient of a nonsmooth function".into())),
        }
    }

    /// argmin_y f(y) + |x - y|^2 / (2t)
    pub fn prox(&self, t: f64, x: &Point) -> Result<ProxResult> {
        if !(t > 0.0 && t.is_finite()) {
            return input("prox parameter must be positive");
        }
        match self {
            ConvexFunction::QuadProx { scale, .. } => {
                let c = self.center(x.dim());
                check_dim(x, c.dim())?;
                let k = t * scale;
                Ok(ProxResult::exact(x.add(&c.scale(k)).scale(1.0 / (1.0 + k))))
            }
            ConvexFunction::L1 { weight } => {
                let s = t * weight;
                let y = x.coords().iter().map(|v| v.signum() * (v.abs() - s).max(0.0)).collect();
                Ok(ProxResult::exact(Point::new(y)?))
            }
            ConvexFunction::IndicatorBall { center, radius } => Ok(ProxResult::exact(project_ball(x, center, *radius)?)),
            ConvexFunction::IndicatorBox { lo, hi } => Ok(ProxResult::exact(project_box(x, lo, hi)?)),
            ConvexFunction::IndicatorHyperplane { normal, offset } => {
                check_dim(x, normal.dim())?;
                let r = (normal.dot(x) - offset) / normal.dot(normal);
                Ok(ProxResult::exact(x.axpy(-r, normal)))
            }
            ConvexFunction::LogCosh { .. } => self.prox_descent(t, x, 1e-13),
        }
    }

    /// Gradient descent on the strongly convex prox objective. The objective
    /// is (1/t)-strongly convex, so |y - y*| <= t |grad|.
    fn prox_descent(&self, t: f64, x: &Point, tol: f64) -> Result<ProxResult> {
        let lip = match self {
            ConvexFunction::LogCosh { scale } => *scale,
            _ => return Err(Error::Unsupported("descent prox only for smooth members".into())),
        };
        let step = 1.0 / (lip + 1.0 / t);
        let mut y = x.clone();
        for _ in 0..1_000_000 {
            let g = self.gradient(&y)?.add(&y.sub(x).scale(1.0 / t));
            let bound = t * g.norm();
            if bound <= tol * (1.0 + x.norm()) {
                return Ok(ProxResult { point: y, residual_bound: bound });
            }
            y = y.axpy(-step, &g);
        }
        let g = self.gradient(&y)?.add(&y.sub(x).scale(1.0 / t));
        Ok(ProxResult { residual_bound: t * g.norm(), point: y })
    }

    pub fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    /// Minimizer set when it is a single known point.
    pub fn minimizers(&self, d: usize) -> Option<Vec<Point>> {
        match self {
            ConvexFunction::QuadProx { scale, .. } if *scale > 0.0 => Some(vec![self.center(d)]),
            ConvexFunction::L1 { weight } if *weight > 0.0 => Some(vec![Point::zeros(d)]),
            ConvexFunction::LogCosh { scale } if *scale > 0.0 => Some(vec![Point::zeros(d)]),
            ConvexFunction::IndicatorBall { center, radius } if *radius == 0.0 => Some(vec![center.clone()]),
            _ => None,
        }
    }

    /// Distance from x to the minimizer set, when computable.
    pub fn dist_to_minimizers(&self, x: &Point) -> Option<f64> {
        match self {
            ConvexFunction::IndicatorBall { center, radius } => Some((x.dist(center) - radius).max(0.0)),
            ConvexFunction::IndicatorBox { lo, hi } => {
                project_box(x, lo, hi).ok().map(|p| p.dist(x))
            }
            ConvexFunction::IndicatorHyperplane { normal, offset } => Some((normal.dot(x) - offset).abs() / normal.norm()),
            _ => self.minimizers(x.dim()).map(|m| m.iter().map(|p| p.dist(x)).fold(f64::INFINITY, f64::min)),
        }
    }
}
