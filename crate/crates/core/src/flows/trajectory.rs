use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::space::{Point, SpaceDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Point>,
    /// Time derivative of x, when the integrator provides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dv: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: String,
    pub step: f64,
    pub steps: u64,
    /// Largest single-step defect between one step of 2h and two of h.
    pub local_err: f64,
    /// Global error of the samples from the h versus 2h comparison.
    pub sample_err: f64,
    /// Error added by dense-output interpolation between samples.
    pub interp_err: f64,
    /// sample_err + interp_err; every verification tolerance derives from it.
    pub est_err: f64,
    /// Sampled trajectories carry no derivative bound for the sup over a
    /// continuum; checks on them are sampled, not certified.
    pub certified_dense: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub space: SpaceDescriptor,
    pub horizon: f64,
    pub meta: IntegratorMeta,
    pub samples: Vec<Sample>,
}

fn hermite(h: f64, s: f64, y0: &Point, d0: &Point, y1: &Point, d1: &Point) -> Point {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let c: Vec<f64> = (0..y0.dim())
        .map(|i| h00 * y0.coords()[i] + h * h10 * d0.coords()[i] + h01 * y1.coords()[i] + h * h11 * d1.coords()[i])
        .collect();
    Point::raw(c)
}

fn lerp(s: f64, a: &Point, b: &Point) -> Point {
    a.axpy(s, &b.sub(a))
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.space.dimension
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn est_err(&self) -> f64 {
        self.meta.est_err
    }

    pub fn has_velocity(&self) -> bool {
        self.samples.first().is_some_and(|s| s.v.is_some())
    }

    /// Index i with samples[i].t <= t < samples[i+1].t, clamped to the last interval.
    fn locate(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon) || self.samples.is_empty() {
            return input(format!("time {t} outside [0, {}]", self.horizon));
        }
        let i = self.samples.partition_point(|s| s.t <= t);
        Ok(i.saturating_sub(1).min(self.samples.len().saturating_sub(2)))
    }

    /// Dense output x(t).
    pub fn eval(&self, t: f64) -> Result<Point> {
        Ok(self.eval_state(t)?.0)
    }

    /// Dense output (x(t), v(t)).
    pub fn eval_state(&self, t: f64) -> Result<(Point, Option<Point>)> {
        let i = self.locate(t)?;
        let a = &self.samples[i];
        if self.samples.len() == 1 || t == a.t {
            return Ok((a.x.clone(), a.v.clone()));
        }
        let b = &self.samples[i + 1];
        if t == b.t {
            return Ok((b.x.clone(), b.v.clone()));
        }
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let x = match (&a.dx, &b.dx) {
            (Some(da), Some(db)) => hermite(h, s, &a.x, da, &b.x, db),
            _ => lerp(s, &a.x, &b.x),
        };
        let v = match (&a.v, &b.v) {
            (Some(va), Some(vb)) => Some(match (&a.dv, &b.dv) {
                (Some(da), Some(db)) => hermite(h, s, va, da, vb, db),
                _ => lerp(s, va, vb),
            }),
            _ => None,
        };
        Ok((x, v))
    }

    /// Indices of samples with t in [lo, hi].
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.samples.partition_point(|s| s.t < lo);
        let b = self.samples.partition_point(|s| s.t <= hi);
        a..b.max(a)
    }

    /// Largest |x'| over the samples with t in [lo, hi], from stored derivatives
    /// or else from difference quotients.
    pub fn speed_bound(&self, lo: f64, hi: f64) -> f64 {
        let r = self.window(lo, hi);
        let from = r.start.saturating_sub(1);
        let to = (r.end + 1).min(self.samples.len());
        let w = &self.samples[from..to];
        let mut m: f64 = 0.0;
        for s in w {
            if let Some(d) = &s.dx {
                m = m.max(d.norm());
            }
        }
        for p in w.windows(2) {
            m = m.max(p[1].x.dist(&p[0].x) / (p[1].t - p[0].t));
        }
        m
    }

    pub fn max_gap(&self) -> f64 {
        self.samples.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max)
    }

    /// Every `every`-th sample plus the last one.
    pub fn decimated(&self, every: usize) -> Trajectory {
        let every = every.max(1);
        let n = self.samples.len();
        let samples = self
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % every == 0 || *i + 1 == n)
            .map(|(_, s)| s.clone())
            .collect();
        Trajectory { samples, ..self.clone() }
    }

    /// CSV with columns t, x0.., and v0.. when present.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let d = self.dim();
        let vel = self.has_velocity();
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        if vel {
            header.extend((0..d).map(|i| format!("v{i}")));
        }
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(&header).map_err(io)?;
        for s in &self.samples {
            let mut row = vec![fmt(s.t)];
            row.extend(s.x.coords().iter().map(|v| fmt(*v)));
            if let Some(v) = &s.v {
                row.extend(v.coords().iter().map(|v| fmt(*v)));
            }
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Io(e.to_string()))
    }

    /// JSON with the integrator metadata and every sample.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Fixed-precision float formatting used by all exported artifacts.
pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}
