use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::operators::{sample_ball, CocoerciveMap, ConvexFunction, NonexpansiveMap};
use crate::space::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionKind {
    /// |z - T z|
    FixedPointResidual { map: NonexpansiveMap },
    /// |B z|
    OperatorNormResidual { op: CocoerciveMap },
    /// phi(z) - mu
    ObjectiveGap { phi: ConvexFunction, mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restriction {
    pub center: Point,
    pub radius: f64,
}

/// A nonnegative function whose zeros are the solutions; +inf outside the
/// optional ball restriction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFunction {
    #[serde(flatten)]
    pub kind: SolutionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<Restriction>,
}

impl SolutionFunction {
    pub fn new(kind: SolutionKind) -> SolutionFunction {
        SolutionFunction { kind, restriction: None }
    }

    pub fn fixed_point(map: NonexpansiveMap) -> SolutionFunction {
        SolutionFunction::new(SolutionKind::FixedPointResidual { map })
    }

    pub fn restricted(mut self, center: Point, radius: f64) -> SolutionFunction {
        self.restriction = Some(Restriction { center, radius });
        self
    }

    pub fn eval(&self, z: &Point) -> Result<f64> {
        if let Some(r) = &self.restriction {
            if z.dist(&r.center) > r.radius {
                return Ok(f64::INFINITY);
            }
        }
        let v = match &self.kind {
            SolutionKind::FixedPointResidual { map } => z.dist(&map.apply(z)?),
            SolutionKind::OperatorNormResidual { op } => op.apply(z)?.norm(),
            SolutionKind::ObjectiveGap { phi, mu } => phi.value(z)? - mu,
        };
        Ok(v.max(0.0))
    }

    /// Bound on |F(z') - F(z)| for |z' - z| <= err.
    pub fn value_tolerance(&self, z: &Point, err: f64) -> f64 {
        match &self.kind {
            SolutionKind::FixedPointResidual { map } => (1.0 + map.contraction_factor().unwrap_or(1.0)) * err,
            SolutionKind::OperatorNormResidual { op } => err / op.beta,
            SolutionKind::ObjectiveGap { phi, .. } => match phi {
                ConvexFunction::QuadProx { scale, .. } => phi.gradient(z).map_or(f64::INFINITY, |g| (g.norm() + scale * err) * err),
                ConvexFunction::LogCosh { scale } => scale * (z.dim() as f64).sqrt() * err,
                ConvexFunction::L1 { weight } => weight * (z.dim() as f64).sqrt() * err,
                _ => 0.0,
            },
        }
    }
}

/// A point together with its residual under a solution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub z: Point,
    pub residual: f64,
}

impl LevelPoint {
    pub fn new(f: &SolutionFunction, z: Point) -> Result<LevelPoint> {
        let residual = f.eval(&z)?;
        Ok(LevelPoint { z, residual })
    }
}

/// Perturbations of a known solution at the given distances, seeded, with
/// their residuals evaluated.
pub fn level_points(f: &SolutionFunction, solution: &Point, radii: &[f64], per_radius: usize, seed: u64) -> Result<Vec<LevelPoint>> {
    let d = solution.dim();
    let mut out = vec![LevelPoint::new(f, solution.clone())?];
    for (i, r) in radii.iter().enumerate() {
        if !(*r >= 0.0) {
            return input("perturbation radius must be nonnegative");
        }
        for u in sample_ball(d, per_radius, 1.0, seed.wrapping_add(i as u64)) {
            let n = u.norm();
            let dir = if n > 0.0 { u.scale(1.0 / n) } else { Point::zeros(d) };
            out.push(LevelPoint::new(f, solution.axpy(*r, &dir))?);
        }
    }
    Ok(out)
}
