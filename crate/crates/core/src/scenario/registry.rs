//! Certificates by theorem id, with parameters given as strings.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::moduli::general::{
    ball_gamma, ball_total_boundedness, delta_general, delta_with_error_rate, fast_linear_rate, regularity_modulus, rho_convergence_regular,
    rho_metastable_regular, RegularitySpec,
};
use crate::moduli::hadamard::{
    delta_gradient_flow, delta_stojkovic, gradient_flow_bundle, gradient_flow_regular_bundle, rho_gradient_flow, rho_stojkovic, stojkovic_bundle,
    stojkovic_regular_bundle,
};
use crate::moduli::hilbert::{
    delta_first_order, delta_second_order, fb_psi, fb_second_order_b_rate, fb_uniform_monotone_rate, first_order_bundle, residual_rate,
    second_order_bundle, FbFirstOrder, FbOrder, FbSecondOrder, LambdaInfo, LambdaSpec, MonotonicitySpec, UniformlyMonotone,
};
use crate::moduli::lemmas::{aas1_metastability, aas2_metastability, lambda_capital, second_order_constants, Aas2Params, ConstantsReport, LVariant, SecondOrderParams};
use crate::moduli::rational::{self as q, Rat};
use crate::moduli::{Budget, Certificate, Counterfunction, CounterfunctionSpec, ExtNat, Interval, ModulusBundle};

pub struct TheoremInfo {
    pub id: &'static str,
    pub summary: &'static str,
    pub params: &'static str,
}

/// Keys shared by every second-order certificate.
pub const SECOND_ORDER_PARAMS: &str = "b c d_bound lambda_lo lambda_hi gamma_lo gamma_hi theta beta [l_variant=multiply|divide]";

pub const THEOREMS: &[TheoremInfo] = &[
    TheoremInfo { id: "aas1_metastability", summary: "metastability of a nonnegative function whose derivative is bounded above by an integrable function", params: "b c B eps f" },
    TheoremInfo { id: "aas2_metastability", summary: "metastability of a function with integrable p-th power and bounded derivative", params: "c A B p [r] eps f" },
    TheoremInfo { id: "ball_total_boundedness", summary: "number of points of an eps-net of the closed ball of radius b in R^d", params: "d b eps" },
    TheoremInfo { id: "fast_linear_rate", summary: "contraction factor (1 + beta k^p)^(-1/p) per unit time (floating point)", params: "beta k p" },
    TheoremInfo { id: "residual_rate", summary: "time after which the fixed-point residual of the relaxed flow stays below eps", params: "lambda b [s=1] eps" },
    TheoremInfo { id: "delta_first_order", summary: "metastability bound of the relaxed first-order flow (4 eps-metastable)", params: "d b lambda eps f" },
    TheoremInfo { id: "delta_second_order", summary: "metastability bound of the damped second-order flow", params: "<second order> d eps f" },
    TheoremInfo { id: "second_order_constants", summary: "the constants M K L a0 a1 a2 A B C of the second-order flow", params: "<second order>" },
    TheoremInfo { id: "lambda_capital", summary: "some n below the bound has velocity and operator value below eps on [n, n + f(n)]", params: "<second order> eps f" },
    TheoremInfo { id: "fb_b_rate", summary: "time after which |B x(t) - B y| stays below eps for forward-backward", params: "b gamma beta lambda eps" },
    TheoremInfo { id: "fb_second_order_b_rate", summary: "windowed bound on |B x(t) - B y| for second-order forward-backward", params: "<second order> step fb_beta eps f" },
    TheoremInfo { id: "fb_uniform_monotone_rate", summary: "rate of convergence to the zero when A or B is uniformly monotone", params: "order=first|second who=A|B monotone <order params> eps f" },
    TheoremInfo { id: "delta_gradient_flow", summary: "metastability bound of the gradient flow of a convex function", params: "d b eps f" },
    TheoremInfo { id: "delta_stojkovic", summary: "metastability bound of the resolvent flow of a nonexpansive map", params: "d b eps f" },
    TheoremInfo { id: "rho_gradient_flow", summary: "convergence rate of the gradient flow under a modulus of regularity", params: "b regularity eps" },
    TheoremInfo { id: "rho_stojkovic", summary: "convergence rate of the resolvent flow under a modulus of regularity", params: "b regularity eps" },
    TheoremInfo { id: "rho_convergence_regular", summary: "generic convergence rate from a regular bundle", params: "bundle=gradient_flow|stojkovic b regularity eps" },
    TheoremInfo { id: "rho_metastable_regular", summary: "generic metastable rate from a regular bundle whose errors have a metastability rate", params: "bundle=second_order <second order> d regularity eps f" },
    TheoremInfo { id: "delta_general", summary: "generic metastability bound from a bundle whose errors have a metastability rate", params: "bundle=second_order <second order> d eps f" },
    TheoremInfo { id: "delta_with_error_rate", summary: "generic metastability bound from a bundle with zero errors or an error convergence rate", params: "bundle=first_order|gradient_flow|stojkovic d b [lambda s] eps f" },
];

pub fn theorem_info(id: &str) -> Option<&'static TheoremInfo> {
    THEOREMS.iter().find(|t| t.id == id)
}

/// What `certify` returns: an exact bound, a floating value, or the second-order constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case")]
pub enum Certified {
    Bound(Certificate),
    Real { theorem: String, inputs: serde_json::Value, value: f64 },
    Constants { theorem: String, inputs: serde_json::Value, constants: ConstantsReport },
}

impl Certified {
    pub fn theorem(&self) -> &str {
        match self {
            Certified::Bound(c) => &c.theorem,
            Certified::Real { theorem, .. } | Certified::Constants { theorem, .. } => theorem,
        }
    }

    pub fn bound(&self) -> Option<&ExtNat> {
        match self {
            Certified::Bound(c) => Some(&c.value),
            _ => None,
        }
    }

    pub fn real(&self) -> Option<f64> {
        match self {
            Certified::Real { value, .. } => Some(*value),
            _ => None,
        }
    }

    /// Short value for summaries: the integer, "overflow", or the float.
    pub fn display_value(&self) -> String {
        match self {
            Certified::Bound(c) => c.value.to_string(),
            Certified::Real { value, .. } => format!("{value}"),
            Certified::Constants { constants, .. } => format!("K={} L={}", constants.k, constants.l),
        }
    }
}

/// String parameters; every key must be consumed.
pub struct Params {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    pub fn new(map: BTreeMap<String, String>) -> Params {
        Params { map, used: RefCell::new(BTreeSet::new()) }
    }

    /// Parses `key=value` pairs.
    pub fn parse<S: AsRef<str>>(pairs: &[S]) -> Result<Params> {
        let mut map = BTreeMap::new();
        for p in pairs {
            let (k, v) = p.as_ref().split_once('=').ok_or_else(|| Error::Input(format!("expected key=value, got {:?}", p.as_ref())))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Input(format!("parameter {k} given twice")));
            }
        }
        Ok(Params::new(map))
    }

    fn opt(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v)
    }

    pub(crate) fn str(&self, key: &str) -> Result<&str> {
        self.opt(key).ok_or_else(|| Error::Input(format!("missing parameter {key}")))
    }

    fn wrap<T>(key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| Error::Input(format!("parameter {key}: {e}")))
    }

    pub fn rat(&self, key: &str) -> Result<Rat> {
        Self::wrap(key, q::parse_rational(self.str(key)?))
    }

    fn rat_or(&self, key: &str, default: Rat) -> Result<Rat> {
        match self.opt(key) {
            Some(s) => Self::wrap(key, q::parse_rational(s)),
            None => Ok(default),
        }
    }

    fn float(&self, key: &str) -> Result<f64> {
        let s = self.str(key)?;
        s.parse::<f64>().or_else(|_| q::parse_rational(s).map(|r| q::to_f64(&r))).map_err(|_| Error::Input(format!("parameter {key}: bad number {s:?}")))
    }

    fn dim(&self, key: &str) -> Result<u32> {
        let s = self.str(key)?;
        s.parse::<u32>().map_err(|_| Error::Input(format!("parameter {key}: expected a nonnegative integer, got {s:?}")))
    }

    fn counter(&self, key: &str) -> Result<Counterfunction> {
        Ok(Self::wrap(key, CounterfunctionSpec::parse_short(self.str(key)?))?.build())
    }

    /// `divergence:TAU` or `lower_witness:L`
    fn lambda(&self, key: &str) -> Result<LambdaInfo> {
        let s = self.str(key)?;
        let spec = if s.starts_with('{') {
            Self::wrap(key, serde_json::from_str::<LambdaSpec>(s).map_err(Error::from))?
        } else {
            let (kind, v) = s.split_once(':').ok_or_else(|| Error::Input(format!("parameter {key}: expected divergence:TAU or lower_witness:L")))?;
            let r = Self::wrap(key, q::parse_rational(v))?;
            match kind {
                "divergence" => LambdaSpec::Divergence { tau_lo: r },
                "lower_witness" => LambdaSpec::LowerWitness { lambda_lo: r },
                _ => return Err(Error::Input(format!("parameter {key}: unknown lambda kind {kind:?}"))),
            }
        };
        spec.info()
    }

    /// `quasi_contraction:C`, `retraction`, ... or the JSON form.
    fn regularity(&self, key: &str) -> Result<RegularitySpec> {
        let s = self.str(key)?;
        if s.starts_with('{') {
            return Self::wrap(key, serde_json::from_str(s).map_err(Error::from));
        }
        let (kind, v) = match s.split_once(':') {
            Some((k, v)) => (k, Some(Self::wrap(key, q::parse_rational(v))?)),
            None => (s, None),
        };
        let need = |v: Option<Rat>| v.ok_or_else(|| Error::Input(format!("parameter {key}: {kind} needs a constant")));
        Ok(match kind {
            "retraction" => RegularitySpec::Retraction,
            "quasi_contraction" => RegularitySpec::QuasiContraction { c: need(v)? },
            "orbital_contraction" => RegularitySpec::OrbitalContraction { c: need(v)? },
            "strongly_accretive" => RegularitySpec::StronglyAccretive { beta: need(v)? },
            "metric_subregular" => RegularitySpec::MetricSubregular { k: need(v)? },
            "strongly_quasiconvex" => RegularitySpec::StronglyQuasiconvex { rho: need(v)? },
            _ => return Err(Error::Input(format!("parameter {key}: unknown regularity {kind:?}"))),
        })
    }

    /// `strong:RHO` or `power:COEF:P`
    fn monotone(&self, key: &str) -> Result<MonotonicitySpec> {
        let s = self.str(key)?;
        let parts: Vec<&str> = s.split(':').collect();
        let r = |t: &str| Self::wrap(key, q::parse_rational(t));
        match parts.as_slice() {
            ["strong", rho] => Ok(MonotonicitySpec::Strong { rho: r(rho)? }),
            ["power", coef, p] => Ok(MonotonicitySpec::Power { coef: r(coef)?, p: r(p)? }),
            _ => Err(Error::Input(format!("parameter {key}: expected strong:RHO or power:COEF:P"))),
        }
    }

    pub(crate) fn second_order(&self) -> Result<SecondOrderParams> {
        let l_variant = match self.opt("l_variant").unwrap_or("multiply") {
            "multiply" => LVariant::Multiply,
            "divide" => LVariant::Divide,
            other => return Err(Error::Input(format!("parameter l_variant: expected multiply or divide, got {other:?}"))),
        };
        let prm = SecondOrderParams {
            b: self.rat("b")?,
            c: self.rat("c")?,
            d_bound: self.rat("d_bound")?,
            lambda_lo: self.rat("lambda_lo")?,
            lambda_hi: self.rat("lambda_hi")?,
            gamma_lo: self.rat("gamma_lo")?,
            gamma_hi: self.rat("gamma_hi")?,
            theta: self.rat("theta")?,
            beta: self.rat("beta")?,
            l_variant,
        };
        prm.validate()?;
        Ok(prm)
    }

    fn fb_first(&self) -> Result<FbFirstOrder> {
        let fb = FbFirstOrder { b: self.rat("b")?, gamma: self.rat("gamma")?, beta: self.rat("beta")?, lambda: self.lambda("lambda")? };
        fb.validate()?;
        Ok(fb)
    }

    fn fb_second(&self) -> Result<FbSecondOrder> {
        let fb = FbSecondOrder { prm: self.second_order()?, step: self.rat("step")?, beta: self.rat("fb_beta")? };
        fb.validate()?;
        Ok(fb)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let extra: Vec<&String> = self.map.keys().filter(|k| !used.contains(*k)).collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(Error::Input(format!("unknown parameters: {}", extra.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "))))
        }
    }
}

fn regular_bundle(p: &Params) -> Result<ModulusBundle> {
    let tau = regularity_modulus(&p.regularity("regularity")?.kind())?;
    if p.str("bundle")? == "second_order" {
        return Ok(second_order_bundle(&p.second_order()?, p.dim("d")?).with_tau(tau));
    }
    let b = p.rat("b")?;
    match p.str("bundle")? {
        "gradient_flow" => Ok(gradient_flow_regular_bundle(&b, tau)),
        "stojkovic" => Ok(stojkovic_regular_bundle(&b, tau)),
        other => Err(Error::Input(format!("no regular bundle named {other:?}"))),
    }
}

pub(crate) fn plain_bundle(p: &Params) -> Result<ModulusBundle> {
    let kind = p.str("bundle")?;
    if kind == "second_order" {
        return Ok(second_order_bundle(&p.second_order()?, p.dim("d")?));
    }
    let d = p.dim("d")?;
    let b = p.rat("b")?;
    if d == 0 || b.is_negative() {
        return Err(Error::Input("need d >= 1 and b >= 0".into()));
    }
    let gamma = ball_gamma(d, Interval::exact(b.clone()));
    match kind {
        "gradient_flow" => Ok(gradient_flow_bundle(&b, gamma)),
        "stojkovic" => Ok(stojkovic_bundle(&b, gamma)),
        "first_order" => Ok(first_order_bundle(d, &b, &p.lambda("lambda")?, &p.rat_or("s", q::one())?)),
        other => Err(Error::Input(format!("no bundle named {other:?}"))),
    }
}

fn dim_radius(p: &Params) -> Result<(u32, Rat)> {
    let d = p.dim("d")?;
    let b = p.rat("b")?;
    if d == 0 || b.is_negative() {
        return Err(Error::Input("need d >= 1 and b >= 0".into()));
    }
    Ok((d, b))
}

/// Computes the certificate of `theorem` from string parameters. Unknown
/// theorems, missing or unused parameters, and invalid values are errors;
/// budget exhaustion yields an overflow value.
pub fn certify_theorem(theorem: &str, params: &Params, budget: &Budget) -> Result<Certified> {
    let p = params;
    let bound = |c: Result<Certificate>| c.map(Certified::Bound);
    let out = match theorem {
        "aas1_metastability" => bound(aas1_metastability(&p.rat("b")?, &p.rat("c")?, &p.rat("B")?, &p.rat("eps")?, &p.counter("f")?, budget)),
        "aas2_metastability" => {
            let r = match p.opt("r") {
                None | Some("inf") => None,
                Some(s) => Some(Params::wrap("r", q::parse_rational(s))?),
            };
            let prm = Aas2Params { c: p.rat("c")?, a: p.rat("A")?, b: p.rat("B")?, p: p.rat("p")?, r };
            bound(aas2_metastability(&prm, &p.rat("eps")?, &p.counter("f")?, budget))
        }
        "ball_total_boundedness" => bound(ball_total_boundedness(p.dim("d")?, &p.rat("b")?, &p.rat("eps")?, budget)),
        "fast_linear_rate" => {
            let (beta, k, pp) = (p.float("beta")?, p.float("k")?, p.float("p")?);
            let value = fast_linear_rate(beta, k, pp)?;
            Ok(Certified::Real { theorem: theorem.into(), inputs: json!({"beta": beta, "k": k, "p": pp}), value })
        }
        "residual_rate" => bound(residual_rate(&p.lambda("lambda")?, &p.rat("b")?, &p.rat_or("s", q::one())?, &p.rat("eps")?, budget)),
        "delta_first_order" => {
            let (d, b) = dim_radius(p)?;
            bound(delta_first_order(d, &b, &p.lambda("lambda")?, &p.rat("eps")?, &p.counter("f")?, budget))
        }
        "delta_second_order" => bound(delta_second_order(&p.second_order()?, p.dim("d")?, &p.rat("eps")?, &p.counter("f")?, budget)),
        "second_order_constants" => {
            let prm = p.second_order()?;
            let constants = second_order_constants(&prm, budget)?;
            Ok(Certified::Constants { theorem: theorem.into(), inputs: serde_json::to_value(&prm)?, constants })
        }
        "lambda_capital" => bound(lambda_capital(&p.second_order()?, &p.rat("eps")?, &p.counter("f")?, budget)),
        "fb_b_rate" => bound(fb_psi(&p.fb_first()?, &p.rat("eps")?, budget)),
        "fb_second_order_b_rate" => bound(fb_second_order_b_rate(&p.fb_second()?, &p.rat("eps")?, &p.counter("f")?, budget)),
        "fb_uniform_monotone_rate" => {
            let order = match p.str("order")? {
                "first" => FbOrder::First(p.fb_first()?),
                "second" => FbOrder::Second(p.fb_second()?),
                other => return Err(Error::Input(format!("parameter order: expected first or second, got {other:?}"))),
            };
            let m = p.monotone("monotone")?.map()?;
            let who = match p.str("who")? {
                "A" => UniformlyMonotone::A(m),
                "B" => UniformlyMonotone::B(m),
                other => return Err(Error::Input(format!("parameter who: expected A or B, got {other:?}"))),
            };
            let f = match p.opt("f") {
                Some(s) => Params::wrap("f", CounterfunctionSpec::parse_short(s))?.build(),
                None => Counterfunction::constant(0),
            };
            bound(fb_uniform_monotone_rate(&order, &who, &p.rat("eps")?, &f, budget))
        }
        "delta_gradient_flow" => {
            let (d, b) = dim_radius(p)?;
            bound(delta_gradient_flow(&b, &ball_gamma(d, Interval::exact(b.clone())), &p.rat("eps")?, &p.counter("f")?, budget))
        }
        "delta_stojkovic" => {
            let (d, b) = dim_radius(p)?;
            bound(delta_stojkovic(&b, &ball_gamma(d, Interval::exact(b.clone())), &p.rat("eps")?, &p.counter("f")?, budget))
        }
        "rho_gradient_flow" | "rho_stojkovic" => {
            let b = p.rat("b")?;
            let tau = regularity_modulus(&p.regularity("regularity")?.kind())?;
            let eps = p.rat("eps")?;
            if theorem == "rho_gradient_flow" {
                bound(rho_gradient_flow(&b, &tau, &eps, budget))
            } else {
                bound(rho_stojkovic(&b, &tau, &eps, budget))
            }
        }
        "rho_convergence_regular" => bound(rho_convergence_regular(&regular_bundle(p)?, &p.rat("eps")?, budget)),
        "rho_metastable_regular" => bound(rho_metastable_regular(&regular_bundle(p)?, &p.rat("eps")?, &p.counter("f")?, budget)),
        "delta_general" => bound(delta_general(&plain_bundle(p)?, &p.rat("eps")?, &p.counter("f")?, budget)),
        "delta_with_error_rate" => bound(delta_with_error_rate(&plain_bundle(p)?, &p.rat("eps")?, &p.counter("f")?, budget)),
        _ => return Err(Error::Unsupported(format!("unknown theorem {theorem:?}"))),
    }?;
    p.finish()?;
    Ok(out)
}

/// Convenience wrapper over `key=value` strings.
pub fn certify_pairs<S: AsRef<str>>(theorem: &str, pairs: &[S], budget: &Budget) -> Result<Certified> {
    certify_theorem(theorem, &Params::parse(pairs)?, budget)
}
