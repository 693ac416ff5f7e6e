use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{check_second_order_curves, fb_second_order_delta, FbDynamics, ParameterCurve, Refinement};
use crate::moduli::lemmas::SecondOrderParams;
use crate::operators::{check_fb_step, fb_delta, CocoerciveMap, ConvexFunction, MonotoneOperator, NonexpansiveMap};
use crate::space::Point;
use crate::verify::Target;

pub const SCHEMA_VERSION: u32 = 1;

/// A parameter value; numbers are accepted and kept in their literal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Str(s) => f.write_str(s),
        }
    }
}

pub type ParamMap = BTreeMap<String, ParamValue>;

pub fn param_strings(p: &ParamMap) -> BTreeMap<String, String> {
    p.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum System {
    /// x' = lambda(t) (T x - x)
    FirstOrder { map: NonexpansiveMap, lam: ParameterCurve, x0: Point },
    /// x'' + gamma(t) x' + lambda(t) B x = 0
    SecondOrder { op: CocoerciveMap, lam: ParameterCurve, gam: ParameterCurve, theta: f64, u0: Point, v0: Point },
    ForwardBackward { a: MonotoneOperator, b: CocoerciveMap, step_param: f64, dynamics: FbDynamics, x0: Point },
    /// t -> S_t x0 for the gradient flow of phi
    GradientFlow {
        phi: ConvexFunction,
        x0: Point,
        #[serde(default)]
        refinement: Refinement,
    },
    /// t -> T_t x0 for the resolvent flow of a nonexpansive map
    Stojkovic {
        map: NonexpansiveMap,
        x0: Point,
        #[serde(default)]
        refinement: Refinement,
    },
}

impl System {
    pub fn kind(&self) -> &'static str {
        match self {
            System::FirstOrder { .. } => "first_order",
            System::SecondOrder { .. } => "second_order",
            System::ForwardBackward { .. } => "forward_backward",
            System::GradientFlow { .. } => "gradient_flow",
            System::Stojkovic { .. } => "stojkovic",
        }
    }

    pub fn x0(&self) -> &Point {
        match self {
            System::FirstOrder { x0, .. } | System::ForwardBackward { x0, .. } | System::GradientFlow { x0, .. } | System::Stojkovic { x0, .. } => x0,
            System::SecondOrder { u0, .. } => u0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x0().dim()
    }

    fn dims(&self) -> Result<()> {
        let d = self.dim();
        let same = |p: &Point| if p.dim() == d { Ok(()) } else { Err(Error::Dimension { expected: d, got: p.dim() }) };
        if d == 0 {
            return Err(Error::Input("initial point must have dimension at least 1".into()));
        }
        match self {
            System::SecondOrder { v0, .. } => same(v0),
            System::ForwardBackward { dynamics: FbDynamics::Second { v0, .. }, .. } => same(v0),
            _ => Ok(()),
        }
    }

    /// Contract checks on operators and parameter curves; cheap, run before any integration.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        self.dims()?;
        match self {
            System::FirstOrder { lam, .. } => {
                lam.require_within("lambda", horizon, 0.0, 1.0)?;
            }
            System::SecondOrder { op, lam, gam, theta, .. } => {
                op.validate()?;
                check_second_order_curves(lam, gam, *theta, op.beta, horizon)?;
            }
            System::ForwardBackward { a, b, step_param, dynamics, .. } => {
                a.validate()?;
                b.validate()?;
                check_fb_step(*step_param, b.beta)?;
                match dynamics {
                    FbDynamics::First { lam } => {
                        lam.require_within("lambda", horizon, 0.0, fb_delta(b.beta, *step_param))?;
                    }
                    FbDynamics::Second { lam, gam, theta, .. } => {
                        let delta = fb_second_order_delta(b.beta, *step_param);
                        lam.require_within("lambda", horizon, 0.0, delta)?;
                        check_second_order_curves(lam, gam, *theta, delta / 2.0, horizon)?;
                    }
                }
            }
            System::GradientFlow { phi, .. } => phi.validate()?,
            System::Stojkovic { .. } => {}
        }
        Ok(())
    }
}

/// A certificate, optionally swept over eps and f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertRequest {
    pub theorem: String,
    #[serde(default)]
    pub params: ParamMap,
    #[serde(default)]
    pub eps: Vec<String>,
    #[serde(default)]
    pub f: Vec<String>,
}

/// A scalar read off the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quantity {
    /// the system's solution function at x(t)
    Residual,
    /// |x'(t)|
    Velocity,
    /// |B x(t)| for the operator driving a second-order system
    Operator,
    /// max(|x'(t)|, |B x(t)|)
    VelocityAndOperator,
    /// |B x(t) - B y| for the cocoercive part of forward-backward
    BDifference { y: Point },
    Distance { target: Target },
}

/// Constant of an exponential rate: a number, or the fast linear rate of (beta, k, p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateConstant {
    Value(f64),
    FastLinear { beta: f64, k: f64, p: f64 },
}

/// Which quasi-Fejer data to check against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FejerModel {
    /// d(x(t), z) <= d(x(s), z) for exact solutions z
    Plain,
    /// G, H and chi of a named bundle (`bundle` = first_order, gradient_flow,
    /// stojkovic, second_order), with the second-order error terms where present.
    Bundle { params: ParamMap },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClosedForm {
    /// e^{-rate t} x0
    #[serde(rename = "exp_decay")]
    ExpDecay { rate: f64 },
    /// (c1 e^{-r1 t} + c2 e^{-r2 t}) x0
    #[serde(rename = "two_exp")]
    TwoExp { c1: f64, r1: f64, c2: f64, r2: f64 },
}

impl ClosedForm {
    pub fn factor(&self, t: f64) -> f64 {
        match self {
            ClosedForm::ExpDecay { rate } => (-rate * t).exp(),
            ClosedForm::TwoExp { c1, r1, c2, r2 } => c1 * (-r1 * t).exp() + c2 * (-r2 * t).exp(),
        }
    }
}

fn default_samples() -> usize {
    200
}

fn default_radius() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// sampled nonexpansiveness of the system's map
    Nonexpansive {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// sampled cocoercivity with the claimed constant
    Cocoercive {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    FirmlyNonexpansive {
        gamma: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    ProxOptimality {
        t: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    ApproximateZeros {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    FbBInequality {
        y: Point,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// some n <= Delta(cert_eps, f) has oscillation <= eps on [n, n + f(n)]
    Metastability {
        theorem: String,
        #[serde(default)]
        params: ParamMap,
        cert_eps: String,
        f: String,
        eps: f64,
    },
    /// some n <= bound(cert_eps, f) keeps the quantity below eps on [n, n + f(n)]
    WindowedBound {
        theorem: String,
        #[serde(default)]
        params: ParamMap,
        cert_eps: String,
        f: String,
        eps: f64,
        quantity: Quantity,
    },
    /// quantity(x(t)) <= eps for t >= rate(eps)
    Rate {
        theorem: String,
        #[serde(default)]
        params: ParamMap,
        quantity: Quantity,
        eps: Vec<f64>,
    },
    /// quantity(x(t)) <= coef / sqrt(t)
    InverseSqrt { quantity: Quantity, coef: f64 },
    ExponentialRate {
        target: Target,
        c: RateConstant,
        d0: f64,
        #[serde(default)]
        t_max: Option<f64>,
    },
    Fejer {
        solution: Point,
        radii: Vec<f64>,
        per_radius: usize,
        eps: Vec<f64>,
        windows: Vec<(u64, u64)>,
        model: FejerModel,
    },
    /// both velocity constants are checked, each in its own report
    SecondOrderBounds { params: SecondOrderParams, z: Point },
    Mayer {
        samples: usize,
        radius: f64,
        t_max: f64,
    },
    ObjectiveRate { b: f64, times: Vec<f64> },
    StojkovicFixedPoint {
        samples: usize,
        radius: f64,
        times: Vec<f64>,
    },
    /// |x(t) - closed form| <= tol; semigroups are evaluated directly at `times`
    ClosedForm {
        form: ClosedForm,
        tol: f64,
        #[serde(default)]
        times: Vec<f64>,
        #[serde(default)]
        refinement: Option<Refinement>,
    },
    /// d(S_{s+t} x0, S_t S_s x0) within the semigroup error estimates
    SemigroupLaw { s: f64, t: f64 },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Nonexpansive { .. } => "nonexpansive",
            Check::Cocoercive { .. } => "cocoercive",
            Check::FirmlyNonexpansive { .. } => "firmly_nonexpansive",
            Check::ProxOptimality { .. } => "prox_optimality",
            Check::ApproximateZeros { .. } => "approximate_zeros",
            Check::FbBInequality { .. } => "fb_b_inequality",
            Check::Metastability { .. } => "metastability",
            Check::WindowedBound { .. } => "windowed_bound",
            Check::Rate { .. } => "rate",
            Check::InverseSqrt { .. } => "inverse_sqrt",
            Check::ExponentialRate { .. } => "exponential_rate",
            Check::Fejer { .. } => "fejer",
            Check::SecondOrderBounds { .. } => "second_order_bounds",
            Check::Mayer { .. } => "mayer",
            Check::ObjectiveRate { .. } => "objective_rate",
            Check::StojkovicFixedPoint { .. } => "stojkovic_fixed_point",
            Check::ClosedForm { .. } => "closed_form",
            Check::SemigroupLaw { .. } => "semigroup_law",
        }
    }

    /// Theorem ids this check certifies through the registry.
    pub fn theorems(&self) -> Vec<String> {
        match self {
            Check::Metastability { theorem, .. } | Check::WindowedBound { theorem, .. } | Check::Rate { theorem, .. } => vec![theorem.clone()],
            Check::ExponentialRate { c: RateConstant::FastLinear { .. }, .. } => vec!["fast_linear_rate".into()],
            Check::SecondOrderBounds { .. } => vec!["second_order_constants".into()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Theorem ids the scenario exercises.
    #[serde(default)]
    pub theorems: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// A negative scenario: a violation is the expected outcome.
    #[serde(default)]
    pub expect_violation: bool,
    pub system: System,
    pub horizon: f64,
    pub step: f64,
    /// Keep every k-th sample in the exported trajectory.
    #[serde(default)]
    pub export_every: Option<usize>,
    #[serde(default)]
    pub certificates: Vec<CertRequest>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

/// Parses a config file: one scenario, or `{"schema_version": 1, "scenarios": [...]}`.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let list: Vec<Scenario> = if let Some(list) = v.get("scenarios") {
        let version = v.get("schema_version").and_then(|x| x.as_u64());
        if version != Some(SCHEMA_VERSION as u64) {
            return Err(Error::Config(format!("unsupported schema_version {version:?}, expected {SCHEMA_VERSION}")));
        }
        serde_json::from_value(list.clone())?
    } else {
        vec![serde_json::from_value(v)?]
    };
    for s in &list {
        s.validate()?;
    }
    Ok(list)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return cfg(format!("{}: unsupported schema_version {}, expected {SCHEMA_VERSION}", self.name, self.schema_version));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return cfg(format!("scenario name {:?} must be nonempty and use only [A-Za-z0-9_-]", self.name));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return cfg(format!("{}: horizon must be positive", self.name));
        }
        if !(self.step > 0.0 && self.step <= self.horizon) {
            return cfg(format!("{}: step must lie in (0, horizon]", self.name));
        }
        if self.export_every == Some(0) {
            return cfg(format!("{}: export_every must be at least 1", self.name));
        }
        self.system.validate(self.horizon).map_err(|e| Error::Config(format!("{}: {e}", self.name)))?;
        let known = |id: &str| super::registry::theorem_info(id).is_some();
        for id in self.theorems.iter().chain(self.certificates.iter().map(|c| &c.theorem)).chain(self.checks.iter().flat_map(|c| c.theorems()).collect::<Vec<_>>().iter()) {
            if !known(id) {
                return cfg(format!("{}: unknown theorem {id:?}", self.name));
            }
        }
        Ok(())
    }
}
