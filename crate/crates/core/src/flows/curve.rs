use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    Constant {
        value: f64,
    },
    /// intercept + slope * t, clamped to [min, max] when given
    Affine {
        intercept: f64,
        slope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
    },
    /// values[0] before breaks[0], values[i] on [breaks[i-1], breaks[i]), last value after
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// linear interpolation between (times, values), constant outside
    Table { times: Vec<f64>, values: Vec<f64> },
}

/// A time-dependent scalar parameter with optional declared bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterCurve {
    #[serde(flatten)]
    pub kind: CurveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Constant,
    Nondecreasing,
    Nonincreasing,
    Neither,
}

impl ParameterCurve {
    pub fn constant(value: f64) -> ParameterCurve {
        ParameterCurve { kind: CurveKind::Constant { value }, lower: None, upper: None }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        match &self.kind {
            CurveKind::Constant { value } if !value.is_finite() => input("curve value must be finite"),
            CurveKind::Affine { intercept, slope, min, max } => {
                if !intercept.is_finite() || !slope.is_finite() {
                    return input("affine curve coefficients must be finite");
                }
                if let (Some(lo), Some(hi)) = (min, max) {
                    if !(lo <= hi) {
                        return input("affine clamp needs min <= max");
                    }
                }
                if *slope > 0.0 && max.is_none() || *slope < 0.0 && min.is_none() {
                    return input("affine curve must be clamped in the direction of its slope");
                }
                Ok(())
            }
            CurveKind::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 || !finite(values) || !finite(breaks) || !increasing(breaks) {
                    return input("piecewise curve needs increasing breaks and one more value than breaks");
                }
                Ok(())
            }
            CurveKind::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() || !finite(values) || !finite(times) || !increasing(times) {
                    return input("table curve needs increasing times and matching values");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            CurveKind::Constant { value } => *value,
            CurveKind::Affine { intercept, slope, min, max } => {
                let v = intercept + slope * t;
                let v = min.map_or(v, |m| v.max(m));
                max.map_or(v, |m| v.min(m))
            }
            CurveKind::Piecewise { breaks, values } => values[breaks.partition_point(|b| *b <= t)],
            CurveKind::Table { times, values } => {
                let i = times.partition_point(|s| *s <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// Points of [0, horizon] where the curve can attain its extremes.
    fn knots(&self, horizon: f64) -> Vec<f64> {
        let mut ts = vec![0.0, horizon];
        match &self.kind {
            CurveKind::Affine { intercept, slope, min, max } if *slope != 0.0 => {
                for c in [min, max].into_iter().flatten() {
                    ts.push((c - intercept) / slope);
                }
            }
            CurveKind::Piecewise { breaks, .. } => ts.extend(breaks.iter().copied()),
            CurveKind::Table { times, .. } => ts.extend(times.iter().copied()),
            _ => {}
        }
        ts.retain(|t| *t >= 0.0 && *t <= horizon);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Exact (min, max) on [0, horizon]; every shipped kind is piecewise linear.
    pub fn range(&self, horizon: f64) -> (f64, f64) {
        let mut vals: Vec<f64> = self.knots(horizon).into_iter().map(|t| self.eval(t)).collect();
        if let CurveKind::Piecewise { breaks, values } = &self.kind {
            // left limits at each break
            for (i, b) in breaks.iter().enumerate() {
                if *b > 0.0 && *b <= horizon {
                    vals.push(values[i]);
                }
            }
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn monotonicity(&self, horizon: f64) -> Monotonicity {
        let mut vals: Vec<f64> = Vec::new();
        match &self.kind {
            CurveKind::Piecewise { breaks, values } => {
                vals.push(values[0]);
                for (i, b) in breaks.iter().enumerate() {
                    if *b <= horizon {
                        vals.push(values[i + 1]);
                    }
                }
            }
            _ => vals = self.knots(horizon).into_iter().map(|t| self.eval(t)).collect(),
        }
        let up = vals.windows(2).all(|w| w[0] <= w[1]);
        let down = vals.windows(2).all(|w| w[0] >= w[1]);
        match (up, down) {
            (true, true) => Monotonicity::Constant,
            (true, false) => Monotonicity::Nondecreasing,
            (false, true) => Monotonicity::Nonincreasing,
            _ => Monotonicity::Neither,
        }
    }

    /// Validates the curve and that its declared bounds hold on [0, horizon].
    pub fn check_bounds(&self, name: &str, horizon: f64) -> Result<(f64, f64)> {
        self.validate()?;
        let (lo, hi) = self.range(horizon);
        if let Some(l) = self.lower {
            if lo < l {
                return input(format!("{name} drops to {lo} below its declared lower bound {l}"));
            }
        }
        if let Some(u) = self.upper {
            if hi > u {
                return input(format!("{name} reaches {hi} above its declared upper bound {u}"));
            }
        }
        Ok((lo, hi))
    }

    /// Checks that the curve stays within [lo, hi] on [0, horizon].
    pub fn require_within(&self, name: &str, horizon: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let (a, b) = self.check_bounds(name, horizon)?;
        if a < lo || b > hi {
            return input(format!("{name} ranges over [{a}, {b}], outside [{lo}, {hi}]"));
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds() {
        let c: ParameterCurve = serde_json::from_str(r#"{"kind":"constant","value":0.5,"lower":0.25}"#).unwrap();
        assert_eq!(c.eval(3.0), 0.5);
        assert_eq!(c.check_bounds("lambda", 10.0).unwrap(), (0.5, 0.5));
        let a = ParameterCurve { kind: CurveKind::Affine { intercept: 0.1, slope: 0.1, min: None, max: Some(0.9) }, lower: None, upper: None };
        assert_eq!(a.range(100.0), (0.1, 0.9));
        assert_eq!(a.monotonicity(100.0), Monotonicity::Nondecreasing);
        let p = ParameterCurve { kind: CurveKind::Piecewise { breaks: vec![1.0, 2.0], values: vec![0.3, 0.7, 0.2] }, lower: None, upper: None };
        assert_eq!((p.eval(0.5), p.eval(1.0), p.eval(5.0)), (0.3, 0.7, 0.2));
        assert_eq!(p.range(1.5), (0.3, 0.7));
        assert_eq!(p.monotonicity(10.0), Monotonicity::Neither);
        let t = ParameterCurve { kind: CurveKind::Table { times: vec![0.0, 2.0], values: vec![3.0, 1.0] }, lower: Some(1.0), upper: None };
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.monotonicity(4.0), Monotonicity::Nonincreasing);
        assert!(t.require_within("gamma", 4.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn rejects_unclamped_growth() {
        let a = ParameterCurve { kind: CurveKind::Affine { intercept: 0.0, slope: 1.0, min: None, max: None }, lower: None, upper: None };
        assert!(a.validate().is_err());
    }
}
