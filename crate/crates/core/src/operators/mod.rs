//! Nonexpansive maps, cocoercive maps, monotone operators given by their
//! resolvents, and convex functions given by value and prox.

mod check;
mod function;

pub use check::{check_cocoercive, check_firmly_nonexpansive, check_nonexpansive, check_prox_optimality, sample_ball, PropertyReport};
pub use function::{ConvexFunction, ProxResult};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::space::{GeodesicSpace, Point, SpaceDescriptor};

pub(crate) fn check_dim(x: &Point, d: usize) -> Result<()> {
    if x.dim() != d {
        return Err(Error::Dimension { expected: d, got: x.dim() });
    }
    Ok(())
}

fn square(matrix: &[Vec<f64>]) -> Result<usize> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return input("matrix must be square and nonempty");
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return input("matrix entries must be finite");
    }
    Ok(n)
}

fn mat_vec(matrix: &[Vec<f64>], x: &Point) -> Result<Point> {
    check_dim(x, square(matrix)?)?;
    Ok(Point::raw(matrix.iter().map(|row| row.iter().zip(x.coords()).map(|(a, b)| a * b).sum()).collect()))
}

fn to_dmatrix(matrix: &[Vec<f64>]) -> DMatrix<f64> {
    let n = matrix.len();
    DMatrix::from_fn(n, n, |i, j| matrix[i][j])
}

/// Euclidean projection onto the closed ball.
pub fn project_ball(x: &Point, center: &Point, radius: f64) -> Result<Point> {
    check_dim(x, center.dim())?;
    let d = x.dist(center);
    if d <= radius {
        return Ok(x.clone());
    }
    Ok(center.axpy(radius / d, &x.sub(center)))
}

pub fn project_box(x: &Point, lo: &[f64], hi: &[f64]) -> Result<Point> {
    check_dim(x, lo.len())?;
    check_dim(x, hi.len())?;
    Ok(Point::raw(x.coords().iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect()))
}

/// A maximally monotone operator, represented through its resolvent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotoneOperator {
    /// A = 0; the resolvent is the identity.
    Zero,
    /// Normal cone of the singleton {point}; the resolvent is constant.
    PointCone { point: Point },
    /// Normal cone of a closed ball.
    BallCone { center: Point, radius: f64 },
    /// Normal cone of a box.
    BoxCone { lo: Vec<f64>, hi: Vec<f64> },
    /// x -> M x with M positive semidefinite in the sense <Mx, x> >= 0.
    Linear { matrix: Vec<Vec<f64>> },
    /// The subdifferential of a convex function.
    Subdifferential { function: ConvexFunction },
}

impl MonotoneOperator {
    pub fn validate(&self) -> Result<()> {
        match self {
            MonotoneOperator::BallCone { radius, .. } if !(*radius >= 0.0) => input("ball radius must be nonnegative"),
            MonotoneOperator::BoxCone { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return input("box bounds must satisfy lo <= hi");
                }
                Ok(())
            }
            MonotoneOperator::Linear { matrix } => {
                let n = square(matrix)?;
                let m = to_dmatrix(matrix);
                let sym = (&m + m.transpose()) * 0.5;
                let min_eig = sym.symmetric_eigenvalues().min();
                if min_eig < -1e-12 * (1.0 + m.norm()) {
                    return input(format!("linear operator of size {n} is not monotone"));
                }
                Ok(())
            }
            MonotoneOperator::Subdifferential { function } => function.validate(),
            _ => Ok(()),
        }
    }

    /// J_{gamma A}(x) = (Id + gamma A)^{-1} x
    pub fn resolvent(&self, gamma: f64, x: &Point) -> Result<Point> {
        if !(gamma > 0.0) {
            return input("resolvent parameter must be positive");
        }
        match self {
            MonotoneOperator::Zero => Ok(x.clone()),
            MonotoneOperator::PointCone { point } => {
                check_dim(x, point.dim())?;
                Ok(point.clone())
            }
            MonotoneOperator::BallCone { center, radius } => project_ball(x, center, *radius),
            MonotoneOperator::BoxCone { lo, hi } => project_box(x, lo, hi),
            MonotoneOperator::Linear { matrix } => {
                let n = square(matrix)?;
                check_dim(x, n)?;
                let sys = DMatrix::identity(n, n) + to_dmatrix(matrix) * gamma;
                let rhs = DVector::from_column_slice(x.coords());
                let sol = sys.lu().solve(&rhs).ok_or_else(|| Error::Input("singular resolvent system".into()))?;
                Point::new(sol.iter().copied().collect())
            }
            MonotoneOperator::Subdifferential { function } => Ok(function.prox(gamma, x)?.point),
        }
    }

    /// Known zeros of A, when available in closed form.
    pub fn known_zeros(&self, d: usize) -> Option<Vec<Point>> {
        match self {
            MonotoneOperator::Zero => None,
            MonotoneOperator::PointCone { point } => Some(vec![point.clone()]),
            MonotoneOperator::Linear { .. } => Some(vec![Point::zeros(d)]),
            MonotoneOperator::Subdifferential { function } => function.minimizers(d),
            _ => None,
        }
    }
}

/// Shape of a cocoercive map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocoerciveKind {
    Identity,
    Zero,
    Scalar { c: f64 },
    /// Symmetric positive semidefinite matrix.
    Linear { matrix: Vec<Vec<f64>> },
    Constant { value: Point },
    /// Componentwise tanh, the gradient of sum log cosh.
    Tanh,
}

/// A map B with a declared constant beta; the claim
/// beta |Bx - By|^2 <= <x - y, Bx - By> is validated by sampling, never inferred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoerciveMap {
    #[serde(flatten)]
    pub kind: CocoerciveKind,
    pub beta: f64,
}

impl CocoerciveMap {
    pub fn new(kind: CocoerciveKind, beta: f64) -> Result<CocoerciveMap> {
        let m = CocoerciveMap { kind, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn identity() -> CocoerciveMap {
        CocoerciveMap { kind: CocoerciveKind::Identity, beta: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return input("cocoercivity constant must be positive");
        }
        match &self.kind {
            CocoerciveKind::Scalar { c } if !(*c >= 0.0) => input("scalar cocoercive map needs c >= 0"),
            CocoerciveKind::Linear { matrix } => square(matrix).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match &self.kind {
            CocoerciveKind::Identity => Ok(x.clone()),
            CocoerciveKind::Zero => Ok(Point::zeros(x.dim())),
            CocoerciveKind::Scalar { c } => Ok(x.scale(*c)),
            CocoerciveKind::Linear { matrix } => mat_vec(matrix, x),
            CocoerciveKind::Constant { value } => {
                check_dim(x, value.dim())?;
                Ok(value.clone())
            }
            CocoerciveKind::Tanh => Ok(Point::raw(x.coords().iter().map(|v| v.tanh()).collect())),
        }
    }
}

/// A nonexpansive map, addressable by name in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonexpansiveMap {
    Identity,
    Negation,
    /// x -> c x. Nonexpansive only for |c| <= 1; larger values are kept so the
    /// checkers can flag them.
    Scalar { c: f64 },
    Linear { matrix: Vec<Vec<f64>> },
    Affine { matrix: Vec<Vec<f64>>, offset: Point },
    /// Rotation of the plane by `angle` radians.
    Rotation { angle: f64 },
    ProjectBall { center: Point, radius: f64 },
    /// Applies `maps` left to right.
    Compose { maps: Vec<NonexpansiveMap> },
    /// J_{gamma A}
    Resolvent { a: MonotoneOperator, gamma: f64 },
    /// J_{gamma A} o (Id - gamma B)
    ForwardBackward { a: MonotoneOperator, b: CocoerciveMap, gamma: f64 },
}

impl NonexpansiveMap {
    pub fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            NonexpansiveMap::Identity => Ok(x.clone()),
            NonexpansiveMap::Negation => Ok(x.scale(-1.0)),
            NonexpansiveMap::Scalar { c } => Ok(x.scale(*c)),
            NonexpansiveMap::Linear { matrix } => mat_vec(matrix, x),
            NonexpansiveMap::Affine { matrix, offset } => {
                check_dim(x, offset.dim())?;
                Ok(mat_vec(matrix, x)?.add(offset))
            }
            NonexpansiveMap::Rotation { angle } => {
                check_dim(x, 2)?;
                let (s, c) = angle.sin_cos();
                let v = x.coords();
                Ok(Point::raw(vec![c * v[0] - s * v[1], s * v[0] + c * v[1]]))
            }
            NonexpansiveMap::ProjectBall { center, radius } => project_ball(x, center, *radius),
            NonexpansiveMap::Compose { maps } => maps.iter().try_fold(x.clone(), |acc, m| m.apply(&acc)),
            NonexpansiveMap::Resolvent { a, gamma } => a.resolvent(*gamma, x),
            NonexpansiveMap::ForwardBackward { a, b, gamma } => {
                let fwd = x.axpy(-gamma, &b.apply(x)?);
                a.resolvent(*gamma, &fwd)
            }
        }
    }

    /// Declared Lipschitz factor, when known from the description.
    pub fn contraction_factor(&self) -> Option<f64> {
        match self {
            NonexpansiveMap::Identity | NonexpansiveMap::Negation | NonexpansiveMap::Rotation { .. } => Some(1.0),
            NonexpansiveMap::ProjectBall { .. } | NonexpansiveMap::Resolvent { .. } | NonexpansiveMap::ForwardBackward { .. } => Some(1.0),
            NonexpansiveMap::Scalar { c } => Some(c.abs()),
            NonexpansiveMap::Linear { matrix } | NonexpansiveMap::Affine { matrix, .. } => {
                square(matrix).ok().map(|_| to_dmatrix(matrix).singular_values().max())
            }
            NonexpansiveMap::Compose { maps } => maps.iter().map(|m| m.contraction_factor()).product(),
        }
    }

    /// Fixed points known in closed form.
    pub fn known_fixed_points(&self, d: usize) -> Option<Vec<Point>> {
        match self {
            NonexpansiveMap::Negation | NonexpansiveMap::Rotation { .. } => Some(vec![Point::zeros(d)]),
            NonexpansiveMap::Scalar { c } if *c != 1.0 => Some(vec![Point::zeros(d)]),
            NonexpansiveMap::Linear { .. } => Some(vec![Point::zeros(d)]),
            NonexpansiveMap::ProjectBall { center, .. } => Some(vec![center.clone()]),
            NonexpansiveMap::ForwardBackward { a, b, .. } => match (&b.kind, a) {
                (CocoerciveKind::Zero, _) => a.known_zeros(d),
                (CocoerciveKind::Identity | CocoerciveKind::Tanh, MonotoneOperator::Zero) => Some(vec![Point::zeros(d)]),
                (CocoerciveKind::Scalar { c }, MonotoneOperator::Zero) if *c > 0.0 => Some(vec![Point::zeros(d)]),
                _ => None,
            },
            _ => None,
        }
    }
}

pub fn apply(map: &NonexpansiveMap, x: &Point) -> Result<Point> {
    map.apply(x)
}

/// min{1, beta/gamma} + 1/2: the forward-backward map is 1/delta-averaged.
pub fn fb_delta(beta: f64, gamma: f64) -> f64 {
    (beta / gamma).min(1.0) + 0.5
}

pub fn check_fb_step(step: f64, beta: f64) -> Result<()> {
    if !(step > 0.0 && step < 2.0 * beta) {
        return input(format!("step {step} outside (0, 2 beta) with beta = {beta}"));
    }
    Ok(())
}

/// x -> J_{gamma A}(x - gamma B x), for 0 < gamma < 2 beta.
pub fn forward_backward_map(a: &MonotoneOperator, b: &CocoerciveMap, gamma: f64) -> Result<NonexpansiveMap> {
    b.validate()?;
    a.validate()?;
    check_fb_step(gamma, b.beta)?;
    Ok(NonexpansiveMap::ForwardBackward { a: a.clone(), b: b.clone(), gamma })
}

/// The unique fixed point of y -> (1/(1+t)) x + (t/(1+t)) F(y), found by
/// iterating that contraction until d(y, G(y)) <= tol.
pub fn stojkovic_resolvent(f: &NonexpansiveMap, t: f64, x: &Point, tol: f64) -> Result<Point> {
    if !(t > 0.0 && t.is_finite()) {
        return input("resolvent time must be positive");
    }
    if !(tol > 0.0) {
        return input("tolerance must be positive");
    }
    let space = SpaceDescriptor::euclidean(x.dim());
    let lam = t / (1.0 + t);
    let g = |y: &Point| -> Result<Point> { space.geodesic_point(x, &f.apply(y)?, lam) };
    let mut y = x.clone();
    let max_iter = 100_000_000u64;
    for _ in 0..max_iter {
        let gy = g(&y)?;
        let gap = y.dist(&gy);
        if !gap.is_finite() {
            return Err(Error::Integration("resolvent iteration diverged".into()));
        }
        y = gy;
        if gap <= tol * (1.0 - lam) {
            // d(y_new, G y_new) <= lam * gap <= tol
            return Ok(y);
        }
    }
    Err(Error::Budget(format!("resolvent iteration with contraction factor {lam} did not reach {tol}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply(&NonexpansiveMap::Identity, &p(&[1.0, 2.0])).unwrap(), p(&[1.0, 2.0]));
        assert_eq!(apply(&NonexpansiveMap::Scalar { c: 0.5 }, &p(&[2.0, 0.0])).unwrap(), p(&[1.0, 0.0]));
        assert_eq!(apply(&NonexpansiveMap::Negation, &p(&[1.0])).unwrap(), p(&[-1.0]));
    }

    #[test]
    fn forward_backward_examples() {
        let id = CocoerciveMap::identity();
        let t = forward_backward_map(&MonotoneOperator::Zero, &id, 0.5).unwrap();
        assert_eq!(t.apply(&p(&[2.0])).unwrap(), p(&[1.0]));
        let zero_b = CocoerciveMap { kind: CocoerciveKind::Zero, beta: 1.0 };
        let cone = MonotoneOperator::PointCone { point: p(&[0.0]) };
        let t = forward_backward_map(&cone, &zero_b, 1.7).unwrap();
        assert_eq!(t.apply(&p(&[3.0])).unwrap(), p(&[0.0]));
        let t = forward_backward_map(&MonotoneOperator::Zero, &id, 1.0).unwrap();
        assert_eq!(t.apply(&p(&[4.0])).unwrap(), p(&[0.0]));
        assert!(forward_backward_map(&MonotoneOperator::Zero, &id, 2.0).is_err());
        assert_eq!(fb_delta(1.0, 1.0), 1.5);
    }

    #[test]
    fn stojkovic_resolvent_examples() {
        let x = p(&[3.0]);
        let r = stojkovic_resolvent(&NonexpansiveMap::Identity, 2.0, &x, 1e-12).unwrap();
        assert_eq!(r, x);
        let r = stojkovic_resolvent(&NonexpansiveMap::Negation, 1.0, &x, 1e-12).unwrap();
        assert!((r.coords()[0] - 1.0).abs() < 1e-11);
        let r = stojkovic_resolvent(&NonexpansiveMap::Negation, 0.001, &p(&[1.0]), 1e-12).unwrap();
        assert!((r.coords()[0] - 1.0).abs() < 0.01);
    }

    #[test]
    fn linear_resolvent() {
        let a = MonotoneOperator::Linear { matrix: vec![vec![1.0, 0.0], vec![0.0, 3.0]] };
        a.validate().unwrap();
        let r = a.resolvent(1.0, &p(&[2.0, 4.0])).unwrap();
        assert!((r.coords()[0] - 1.0).abs() < 1e-14 && (r.coords()[1] - 1.0).abs() < 1e-14);
        let skew = MonotoneOperator::Linear { matrix: vec![vec![0.0, 1.0], vec![-1.0, 0.0]] };
        assert!(skew.validate().is_ok());
        let bad = MonotoneOperator::Linear { matrix: vec![vec![-1.0]] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn serde_names() {
        let m: NonexpansiveMap = serde_json::from_str(r#"{"op":"scalar","c":0.5}"#).unwrap();
        assert_eq!(m, NonexpansiveMap::Scalar { c: 0.5 });
        let b: CocoerciveMap = serde_json::from_str(r#"{"op":"identity","beta":1.0}"#).unwrap();
        assert_eq!(b, CocoerciveMap::identity());
        let f: ConvexFunction = serde_json::from_str(r#"{"op":"quad_prox","scale":1.0}"#).unwrap();
        assert!(matches!(f, ConvexFunction::QuadProx { .. }));
    }
}
