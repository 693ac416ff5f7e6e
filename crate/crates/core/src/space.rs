//! Metric and geodesic spaces. Only the euclidean model ships.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// A point with finite coordinates. Serializes as a plain JSON array.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.is_empty() {
            return input("point must have at least one coordinate");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return input("point coordinates must be finite");
        }
        Ok(Point(coords))
    }

    /// Builds a point without the finiteness check. Used on hot paths where the
    /// caller checks the result separately.
    pub(crate) fn raw(coords: Vec<f64>) -> Point {
        Point(coords)
    }

    pub fn zeros(d: usize) -> Point {
        Point(vec![0.0; d])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn add(&self, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    /// self + s * o
    pub fn axpy(&self, s: f64, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| a * b).sum()
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.0
            .iter()
            .zip(&o.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::new(v).map_err(serde::de::Error::custom)
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Point {
        Point(vec![x])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    pub dimension: usize,
}

pub trait GeodesicSpace {
    fn dimension(&self) -> usize;
    fn distance(&self, p: &Point, q: &Point) -> Result<f64>;
    /// The point (1-lam)p + lam q on the unique geodesic.
    fn geodesic_point(&self, p: &Point, q: &Point, lam: f64) -> Result<Point>;
    fn inner_product(&self, p: &Point, q: &Point) -> Result<f64>;
}

impl SpaceDescriptor {
    pub fn euclidean(dimension: usize) -> SpaceDescriptor {
        SpaceDescriptor { kind: SpaceKind::Euclidean, dimension }
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dimension {
            return Err(Error::Dimension { expected: self.dimension, got: p.dim() });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return input("space dimension must be at least 1");
        }
        Ok(())
    }
}

impl GeodesicSpace for SpaceDescriptor {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(p.dist(q))
    }

    fn geodesic_point(&self, p: &Point, q: &Point, lam: f64) -> Result<Point> {
        self.check(p)?;
        self.check(q)?;
        if !(0.0..=1.0).contains(&lam) {
            return input(format!("geodesic parameter {lam} outside [0,1]"));
        }
        if lam == 0.0 {
            return Ok(p.clone());
        }
        if lam == 1.0 {
            return Ok(q.clone());
        }
        Ok(Point(
            p.0.iter().zip(&q.0).map(|(a, b)| (1.0 - lam) * a + lam * b).collect(),
        ))
    }

    fn inner_product(&self, p: &Point, q: &Point) -> Result<f64> {
        match self.kind {
            SpaceKind::Euclidean => {
                self.check(p)?;
                self.check(q)?;
                Ok(p.dot(q))
            }
        }
    }
}

pub fn distance(space: &SpaceDescriptor, p: &Point, q: &Point) -> Result<f64> {
    space.distance(p, q)
}

pub fn geodesic_point(space: &SpaceDescriptor, p: &Point, q: &Point, lam: f64) -> Result<Point> {
    space.geodesic_point(p, q, lam)
}

pub fn inner_product(space: &SpaceDescriptor, p: &Point, q: &Point) -> Result<f64> {
    space.inner_product(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let s2 = SpaceDescriptor::euclidean(2);
        assert_eq!(distance(&s2, &pt(&[0.0, 0.0]), &pt(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(distance(&s2, &pt(&[1.5, 2.0]), &pt(&[1.5, 2.0])).unwrap(), 0.0);
        let s1 = SpaceDescriptor::euclidean(1);
        assert_eq!(distance(&s1, &pt(&[1.0]), &pt(&[-2.0])).unwrap(), 3.0);
        assert!(matches!(
            distance(&s2, &pt(&[1.0]), &pt(&[1.0, 2.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn geodesic_examples() {
        let s1 = SpaceDescriptor::euclidean(1);
        let (p, q) = (pt(&[0.0]), pt(&[2.0]));
        assert_eq!(geodesic_point(&s1, &p, &q, 0.0).unwrap(), p);
        assert_eq!(geodesic_point(&s1, &p, &q, 1.0).unwrap(), q);
        assert_eq!(geodesic_point(&s1, &p, &q, 0.25).unwrap(), pt(&[0.5]));
        assert!(geodesic_point(&s1, &p, &q, 1.5).is_err());
        assert!(geodesic_point(&s1, &p, &q, -0.1).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let s2 = SpaceDescriptor::euclidean(2);
        assert_eq!(inner_product(&s2, &pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner_product(&s2, &pt(&[1.0, 2.0]), &pt(&[3.0, 4.0])).unwrap(), 11.0);
        let p = pt(&[-3.0, 0.5]);
        assert!(inner_product(&s2, &p, &p).unwrap() >= 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY, 0.0]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(serde_json::from_str::<Point>("[1.0, 2.0]").is_ok());
        assert!(serde_json::from_str::<Point>("[]").is_err());
    }

    #[test]
    fn serde_shapes() {
        let s = SpaceDescriptor::euclidean(3);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"kind":"euclidean","dimension":3}"#);
        assert_eq!(serde_json::to_string(&pt(&[1.0, -2.5])).unwrap(), "[1.0,-2.5]");
    }
}
