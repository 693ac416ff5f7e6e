use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CocoerciveMap, ConvexFunction, MonotoneOperator, NonexpansiveMap};
use crate::error::{input, Result};
use crate::space::{Point, SpaceDescriptor};

const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed ratio of left side to right side.
    pub max_ratio: f64,
    pub passed: bool,
}

/// `n` points drawn uniformly from the ball of the given radius around the
/// origin, reproducible from `seed`.
pub fn sample_ball(d: usize, n: usize, radius: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
            Point::new(g.into_iter().map(|v| v * r / norm).collect()).expect("finite sample")
        })
        .collect()
}

fn pairs(space: &SpaceDescriptor, n: usize, radius: f64, seed: u64) -> Result<Vec<(Point, Point)>> {
    if n == 0 {
        return input("need at least one sample");
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return input("sampling radius must be positive");
    }
    space.validate()?;
    let xs = sample_ball(space.dimension, 2 * n, radius, seed);
    Ok(xs.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect())
}

struct Tally {
    property: &'static str,
    samples: usize,
    violations: usize,
    max_ratio: f64,
}

impl Tally {
    fn new(property: &'static str) -> Tally {
        Tally { property, samples: 0, violations: 0, max_ratio: 0.0 }
    }

    /// Records lhs <= rhs, up to a relative tolerance.
    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        if lhs > rhs + REL_TOL * (1.0 + rhs.abs()) {
            self.violations += 1;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > REL_TOL {
            f64::INFINITY
        } else {
            0.0
        };
        self.max_ratio = self.max_ratio.max(ratio);
    }

    fn finish(self) -> PropertyReport {
        PropertyReport {
            property: self.property.into(),
            samples: self.samples,
            violations: self.violations,
            max_ratio: self.max_ratio,
            passed: self.violations == 0,
        }
    }
}

/// |Tx - Ty| <= |x - y| on sampled pairs.
pub fn check_nonexpansive(map: &NonexpansiveMap, space: &SpaceDescriptor, n: usize, radius: f64, seed: u64) -> Result<PropertyReport> {
    let mut t = Tally::new("nonexpansive");
    for (x, y) in pairs(space, n, radius, seed)? {
        t.record(map.apply(&x)?.dist(&map.apply(&y)?), x.dist(&y));
    }
    Ok(t.finish())
}

/// beta |Bx - By|^2 <= <x - y, Bx - By> on sampled pairs.
pub fn check_cocoercive(b: &CocoerciveMap, space: &SpaceDescriptor, n: usize, radius: f64, seed: u64) -> Result<PropertyReport> {
    let mut t = Tally::new("cocoercive");
    for (x, y) in pairs(space, n, radius, seed)? {
        let db = b.apply(&x)?.sub(&b.apply(&y)?);
        t.record(b.beta * db.dot(&db), x.sub(&y).dot(&db));
    }
    Ok(t.finish())
}

/// |Jx - Jy|^2 <= <x - y, Jx - Jy> for the resolvent of gamma A.
pub fn check_firmly_nonexpansive(a: &MonotoneOperator, gamma: f64, space: &SpaceDescriptor, n: usize, radius: f64, seed: u64) -> Result<PropertyReport> {
    let mut t = Tally::new("firmly_nonexpansive");
    for (x, y) in pairs(space, n, radius, seed)? {
        let dj = a.resolvent(gamma, &x)?.sub(&a.resolvent(gamma, &y)?);
        t.record(dj.dot(&dj), x.sub(&y).dot(&dj));
    }
    Ok(t.finish())
}

/// f(p) + |x - p|^2/(2t) <= f(y) + |x - y|^2/(2t) with p the prox of x, for
/// random x, y. Points y outside the domain are skipped.
pub fn check_prox_optimality(f: &ConvexFunction, t: f64, space: &SpaceDescriptor, n: usize, radius: f64, seed: u64) -> Result<PropertyReport> {
    let mut tally = Tally::new("prox_optimality");
    for (x, y) in pairs(space, n, radius, seed)? {
        let p = f.prox(t, &x)?.point;
        let lhs = f.value(&p)? + x.dist(&p).powi(2) / (2.0 * t);
        let fy = f.value(&y)?;
        if fy.is_finite() {
            tally.record(lhs, fy + x.dist(&y).powi(2) / (2.0 * t));
        }
    }
    Ok(tally.finish())
}
