use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{param_strings, CertRequest, Check, ClosedForm, FejerModel, ParamMap, Quantity, RateConstant, Scenario, System};
use super::registry::{certify_theorem, plain_bundle, Certified, Params};
use crate::error::{Error, Result};
use crate::flows::{
    gradient_flow_semigroup, gradient_flow_trajectory, integrate_first_order, integrate_forward_backward, integrate_second_order, stojkovic_semigroup,
    stojkovic_trajectory, FbDynamics, Refinement, Sample, SemigroupPoint, Trajectory,
};
use crate::moduli::ctx::evaluate;
use crate::moduli::lemmas::{second_order_constants, LVariant};
use crate::moduli::rational::{self as q};
use crate::moduli::{Budget, CounterfunctionSpec, ExtNat, Interval, Perturbation, PerturbationPair};
use crate::operators::{
    check_cocoercive, check_firmly_nonexpansive, check_nonexpansive, check_prox_optimality, sample_ball, CocoerciveMap, NonexpansiveMap, PropertyReport,
};
use crate::space::{Point, SpaceDescriptor};
use crate::verify::{
    check_approximate_zeros, check_asymptotic_regularity, check_b_convergence, check_convergence_rate, check_exponential_rate, check_fb_b_inequality,
    check_fejer, check_mayer, check_objective_rate, check_second_order_bounds, check_stojkovic_fixed_point, check_tail_bound, level_points,
    verify_metastability, verify_windowed_bound, ErrorModel, FejerSpec, MayerSample, SolutionFunction, SolutionKind, Status, VerificationReport,
};

/// One computed certificate with the parameters it was asked for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertEntry {
    pub theorem: String,
    pub params: BTreeMap<String, String>,
    pub result: Certified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub trajectory: Trajectory,
    pub certificates: Vec<CertEntry>,
    pub reports: Vec<VerificationReport>,
}

impl ScenarioOutcome {
    pub fn status(&self) -> Status {
        self.reports.iter().map(|r| r.status).max().unwrap_or(Status::Holds)
    }

    pub fn violated(&self) -> bool {
        self.status().is_violation()
    }
}

impl System {
    pub fn simulate(&self, horizon: f64, step: f64) -> Result<Trajectory> {
        match self {
            System::FirstOrder { map, lam, x0 } => integrate_first_order(map, lam, x0, horizon, step),
            System::SecondOrder { op, lam, gam, theta, u0, v0 } => integrate_second_order(op, lam, gam, *theta, u0, v0, horizon, step),
            System::ForwardBackward { a, b, step_param, dynamics, x0 } => integrate_forward_backward(dynamics, a, b, *step_param, x0, horizon, step),
            System::GradientFlow { phi, x0, refinement } => gradient_flow_trajectory(phi, x0, horizon, step, refinement),
            System::Stojkovic { map, x0, refinement } => stojkovic_trajectory(map, x0, horizon, step, refinement),
        }
    }

    /// The nonnegative function whose zeros are the system's solutions.
    pub fn residual(&self) -> SolutionFunction {
        match self {
            System::FirstOrder { map, .. } | System::Stojkovic { map, .. } => SolutionFunction::fixed_point(map.clone()),
            System::SecondOrder { op, .. } => SolutionFunction::new(SolutionKind::OperatorNormResidual { op: op.clone() }),
            System::ForwardBackward { a, b, step_param, .. } => {
                SolutionFunction::fixed_point(NonexpansiveMap::ForwardBackward { a: a.clone(), b: b.clone(), gamma: *step_param })
            }
            System::GradientFlow { phi, .. } => SolutionFunction::new(SolutionKind::ObjectiveGap { phi: phi.clone(), mu: phi.min_value().unwrap_or(0.0) }),
        }
    }

    fn map(&self) -> Option<NonexpansiveMap> {
        match self {
            System::FirstOrder { map, .. } | System::Stojkovic { map, .. } => Some(map.clone()),
            System::ForwardBackward { a, b, step_param, .. } => Some(NonexpansiveMap::ForwardBackward { a: a.clone(), b: b.clone(), gamma: *step_param }),
            _ => None,
        }
    }

    /// The operator B of a second-order system and its Lipschitz constant.
    fn second_order_operator(&self) -> Option<(Box<dyn Fn(&Point) -> Result<Point> + '_>, f64)> {
        match self {
            System::SecondOrder { op, .. } => Some((Box::new(move |x: &Point| op.apply(x)), 1.0 / op.beta)),
            System::ForwardBackward { dynamics: FbDynamics::Second { .. }, .. } => {
                let t = self.map()?;
                Some((Box::new(move |x: &Point| Ok(x.sub(&t.apply(x)?))), 2.0))
            }
            _ => None,
        }
    }

    fn cocoercive(&self) -> Option<&CocoerciveMap> {
        match self {
            System::SecondOrder { op, .. } => Some(op),
            System::ForwardBackward { b, .. } => Some(b),
            _ => None,
        }
    }

    fn refinement(&self) -> Option<&Refinement> {
        match self {
            System::GradientFlow { refinement, .. } | System::Stojkovic { refinement, .. } => Some(refinement),
            _ => None,
        }
    }

    fn semigroup(&self, x: &Point, t: f64, r: &Refinement) -> Result<SemigroupPoint> {
        match self {
            System::GradientFlow { phi, .. } => gradient_flow_semigroup(phi, x, t, r),
            System::Stojkovic { map, .. } => stojkovic_semigroup(map, x, t, r),
            _ => Err(unsupported("a semigroup system", self)),
        }
    }
}

fn unsupported(what: &str, sys: &System) -> Error {
    Error::Config(format!("check needs {what}, not a {} system", sys.kind()))
}

struct Runner<'a> {
    sc: &'a Scenario,
    traj: &'a Trajectory,
    budget: &'a Budget,
    certs: Vec<CertEntry>,
}

impl Runner<'_> {
    fn certify(&mut self, theorem: &str, params: &ParamMap, extra: &[(&str, String)]) -> Result<Certified> {
        let mut map = param_strings(params);
        for (k, v) in extra {
            if map.insert(k.to_string(), v.clone()).is_some() {
                return Err(Error::Config(format!("{theorem}: parameter {k} is set by the check and must not appear in params")));
            }
        }
        let result = certify_theorem(theorem, &Params::new(map.clone()), self.budget)?;
        self.certs.push(CertEntry { theorem: theorem.into(), params: map, result: result.clone() });
        Ok(result)
    }

    fn bound(&mut self, theorem: &str, params: &ParamMap, extra: &[(&str, String)]) -> Result<ExtNat> {
        match self.certify(theorem, params, extra)? {
            Certified::Bound(c) => Ok(c.value),
            _ => Err(Error::Config(format!("{theorem} does not produce an integer bound"))),
        }
    }

    fn request(&mut self, r: &CertRequest) -> Result<()> {
        let eps: Vec<Option<&String>> = if r.eps.is_empty() { vec![None] } else { r.eps.iter().map(Some).collect() };
        let fs: Vec<Option<&String>> = if r.f.is_empty() { vec![None] } else { r.f.iter().map(Some).collect() };
        for e in &eps {
            for f in &fs {
                let mut extra = Vec::new();
                if let Some(e) = e {
                    extra.push(("eps", (*e).clone()));
                }
                if let Some(f) = f {
                    extra.push(("f", (*f).clone()));
                }
                self.certify(&r.theorem, &r.params, &extra)?;
            }
        }
        Ok(())
    }

    fn points(&self, n: usize, radius: f64, salt: u64) -> Vec<Point> {
        sample_ball(self.sc.system.dim(), n, radius, self.sc.seed.wrapping_add(salt))
    }

    fn space(&self) -> SpaceDescriptor {
        SpaceDescriptor::euclidean(self.sc.system.dim())
    }

    /// Value of a quantity at sample i and its Lipschitz constant in the state.
    fn quantity<'q>(&'q self, qn: &'q Quantity) -> Result<(Box<dyn Fn(&Sample) -> Result<f64> + 'q>, f64)> {
        let sys = &self.sc.system;
        Ok(match qn {
            Quantity::Residual => {
                let f = sys.residual();
                let lip = f.value_tolerance(&Point::zeros(sys.dim()), 1.0);
                (Box::new(move |s: &Sample| f.eval(&s.x)), lip)
            }
            Quantity::Velocity => {
                if !self.traj.has_velocity() && self.traj.samples[0].dx.is_none() {
                    return Err(unsupported("a trajectory with velocities", sys));
                }
                (Box::new(|s: &Sample| Ok(s.v.as_ref().or(s.dx.as_ref()).map_or(0.0, |v| v.norm()))), 1.0)
            }
            Quantity::Operator | Quantity::VelocityAndOperator => {
                let (op, lip) = sys.second_order_operator().ok_or_else(|| unsupported("a second-order system", sys))?;
                let with_v = matches!(qn, Quantity::VelocityAndOperator);
                (
                    Box::new(move |s: &Sample| {
                        let b = op(&s.x)?.norm();
                        Ok(if with_v { b.max(s.v.as_ref().map_or(0.0, |v| v.norm())) } else { b })
                    }),
                    lip.max(1.0),
                )
            }
            Quantity::BDifference { y } => {
                let b = sys.cocoercive().ok_or_else(|| unsupported("a cocoercive operator", sys))?;
                let by = b.apply(y)?;
                (Box::new(move |s: &Sample| Ok(b.apply(&s.x)?.dist(&by))), 1.0 / b.beta)
            }
            Quantity::Distance { target } => (Box::new(move |s: &Sample| Ok(target.dist(&s.x))), 1.0),
        })
    }

    fn property(&self, claim: String, r: PropertyReport) -> VerificationReport {
        let mut rep = VerificationReport::new(claim).sampled();
        rep.record(r.max_ratio, 1.0, 1e-9);
        rep.checked = r.samples as u64;
        rep.put("violations", r.violations);
        rep.put("max_ratio", r.max_ratio);
        if !r.passed {
            rep.escalate(Status::Violated);
        }
        rep
    }

    fn fejer_spec(&mut self, model: &FejerModel, eps: &[f64], windows: &[(u64, u64)]) -> Result<FejerSpec<'static>> {
        let FejerModel::Bundle { params } = model else {
            return Ok(FejerSpec { pair: PerturbationPair::identity(), chi: Box::new(|_, _, _| 0.0), error: None, eps_list: eps.to_vec(), windows: windows.to_vec() });
        };
        let p = Params::new(param_strings(params));
        let kind = p.str("bundle")?.to_string();
        let bundle = plain_bundle(&p)?;
        let (pair, error) = match kind.as_str() {
            "first_order" | "gradient_flow" => (PerturbationPair::squares(), None),
            "stojkovic" => (PerturbationPair::identity(), None),
            "second_order" => {
                let prm = p.second_order()?;
                let k = second_order_constants(&prm, self.budget)?;
                let f = |r: &q::Rat| q::to_f64(r);
                let (beta, glo, ghi, llo) = (f(&prm.beta), f(&prm.gamma_lo), f(&prm.gamma_hi), f(&prm.lambda_lo));
                let kk = k.k;
                let speed = |s: &Sample| s.v.as_ref().map_or(0.0, |v| v.norm());
                let model = ErrorModel {
                    at_s: Box::new(move |s| 2.0 * beta / glo * (ghi / llo) * speed(s).powi(2) + 2.0 * kk / glo * speed(s)),
                    at_t: Box::new(move |s| 2.0 * kk / glo * speed(s)),
                };
                let pair = PerturbationPair { g: Perturbation::ScaledPower { coef: &prm.gamma_hi / &prm.gamma_lo, p: q::int(2) }, h: Perturbation::Power { p: q::int(2) } };
                (pair, Some(model))
            }
            other => return Err(Error::Config(format!("no Fejer data for bundle {other:?}"))),
        };
        p.finish()?;
        let chi_fn = bundle.chi()?;
        let mut table = BTreeMap::new();
        for &e in eps {
            let ei = Interval::exact(q::rat_from_f64(e)?);
            for &(n, m) in windows {
                let v = evaluate(self.budget, |ctx| chi_fn.eval(ctx, &ei, &ExtNat::from_u64(n), &ExtNat::from_u64(m)))?;
                table.insert((e.to_bits(), n, m), v.value.lo_f64());
            }
        }
        Ok(FejerSpec {
            pair,
            chi: Box::new(move |e, n, m| table.get(&(e.to_bits(), n, m)).copied().unwrap_or(0.0)),
            error,
            eps_list: eps.to_vec(),
            windows: windows.to_vec(),
        })
    }

    fn run_check(&mut self, idx: usize, check: &Check) -> Result<Vec<VerificationReport>> {
        let sys = &self.sc.system;
        let traj = self.traj;
        let claim = |label: String| format!("{idx}:{label}");
        let one = |r: VerificationReport| Ok(vec![r]);
        match check {
            Check::Nonexpansive { samples, radius } => {
                let map = sys.map().ok_or_else(|| unsupported("a nonexpansive map", sys))?;
                let r = check_nonexpansive(&map, &self.space(), *samples, *radius, self.sc.seed)?;
                one(self.property(claim("nonexpansive".into()), r))
            }
            Check::Cocoercive { samples, radius } => {
                let b = sys.cocoercive().ok_or_else(|| unsupported("a cocoercive operator", sys))?;
                let r = check_cocoercive(b, &self.space(), *samples, *radius, self.sc.seed)?;
                one(self.property(claim(format!("cocoercive[beta={}]", b.beta)), r))
            }
            Check::FirmlyNonexpansive { gamma, samples, radius } => {
                let System::ForwardBackward { a, .. } = sys else { return Err(unsupported("a forward-backward system", sys)) };
                let r = check_firmly_nonexpansive(a, *gamma, &self.space(), *samples, *radius, self.sc.seed)?;
                one(self.property(claim(format!("firmly_nonexpansive[gamma={gamma}]")), r))
            }
            Check::ProxOptimality { t, samples, radius } => {
                let System::GradientFlow { phi, .. } = sys else { return Err(unsupported("a gradient flow", sys)) };
                let r = check_prox_optimality(phi, *t, &self.space(), *samples, *radius, self.sc.seed)?;
                one(self.property(claim(format!("prox_optimality[t={t}]")), r))
            }
            Check::ApproximateZeros { samples, radius } => {
                let System::ForwardBackward { a, b, step_param, .. } = sys else { return Err(unsupported("a forward-backward system", sys)) };
                one(check_approximate_zeros(&claim("approximate_zeros".into()), a, b, *step_param, &self.points(*samples, *radius, 1))?)
            }
            Check::FbBInequality { y, samples, radius } => {
                let System::ForwardBackward { a, b, step_param, .. } = sys else { return Err(unsupported("a forward-backward system", sys)) };
                let zs: Vec<Point> = self.points(*samples, *radius, 2).iter().map(|p| p.add(y)).collect();
                one(check_fb_b_inequality(&claim("fb_b_inequality".into()), a, b, *step_param, y, &zs)?)
            }
            Check::Metastability { theorem, params, cert_eps, f, eps } => {
                let cf = CounterfunctionSpec::parse_short(f)?.build();
                let cert = self.bound(theorem, params, &[("eps", cert_eps.clone()), ("f", f.clone())])?;
                let label = format!("metastability[{theorem} cert_eps={cert_eps} f={f} eps={eps}]");
                one(verify_metastability(&claim(label), traj, *eps, &cf, &cert)?)
            }
            Check::WindowedBound { theorem, params, cert_eps, f, eps, quantity } => {
                let cf = CounterfunctionSpec::parse_short(f)?.build();
                let cert = self.bound(theorem, params, &[("eps", cert_eps.clone()), ("f", f.clone())])?;
                let (val, lip_x) = self.quantity(quantity)?;
                let vals: Vec<f64> = traj.samples.iter().map(&val).collect::<Result<_>>()?;
                let mut lip_t: f64 = 0.0;
                for (w, s) in vals.windows(2).zip(traj.samples.windows(2)) {
                    lip_t = lip_t.max((w[1] - w[0]).abs() / (s[1].t - s[0].t));
                }
                let label = format!("windowed_bound[{theorem} cert_eps={cert_eps} f={f} eps={eps}]");
                let rep = verify_windowed_bound(&claim(label), traj, |i| Ok(vals[i]), 3.0 * lip_x * traj.est_err(), lip_t, *eps, &cf, &cert)?;
                one(if traj.meta.certified_dense { rep } else { rep.sampled() })
            }
            Check::Rate { theorem, params, quantity, eps } => {
                let mut rates = BTreeMap::new();
                for &e in eps {
                    let s = q::rat_to_string(&q::rat_from_f64(e)?);
                    rates.insert(e.to_bits(), self.bound(theorem, params, &[("eps", s)])?);
                }
                let rate = |e: f64| rates.get(&e.to_bits()).cloned().ok_or_else(|| Error::Input(format!("no rate for eps {e}")));
                let label = claim(format!("rate[{theorem}]"));
                let rep = match quantity {
                    Quantity::Residual => check_asymptotic_regularity(&label, traj, &sys.residual(), rate, eps)?,
                    Quantity::Distance { target } => check_convergence_rate(&label, traj, target, rate, eps)?,
                    Quantity::BDifference { y } => {
                        let b = sys.cocoercive().ok_or_else(|| unsupported("a cocoercive operator", sys))?;
                        check_b_convergence(&label, traj, b, y, rate, eps)?
                    }
                    _ => return Err(Error::Config("rate checks support residual, distance and b_difference".into())),
                };
                one(rep)
            }
            Check::InverseSqrt { quantity, coef } => {
                let (val, lip) = self.quantity(quantity)?;
                let from = traj.samples.get(1).map_or(traj.horizon, |s| s.t);
                let rep = check_tail_bound(&claim(format!("inverse_sqrt[coef={coef}]")), traj, val, lip, |t| coef / t.sqrt(), from, traj.horizon)?;
                one(rep)
            }
            Check::ExponentialRate { target, c, d0, t_max } => {
                let cv = match c {
                    RateConstant::Value(v) => *v,
                    RateConstant::FastLinear { beta, k, p } => {
                        let params: ParamMap = [("beta", *beta), ("k", *k), ("p", *p)].into_iter().map(|(k, v)| (k.to_string(), super::config::ParamValue::Float(v))).collect();
                        self.certify("fast_linear_rate", &params, &[])?.real().expect("real output")
                    }
                };
                one(check_exponential_rate(&claim(format!("exponential_rate[c={cv}]")), traj, target, cv, *d0, t_max.unwrap_or(traj.horizon))?)
            }
            Check::Fejer { solution, radii, per_radius, eps, windows, model } => {
                let spec = self.fejer_spec(model, eps, windows)?;
                let pts = level_points(&sys.residual(), solution, radii, *per_radius, self.sc.seed)?;
                let label = match model {
                    FejerModel::Plain => "fejer[plain]".to_string(),
                    FejerModel::Bundle { params } => format!("fejer[{}]", params.get("bundle").map(|v| v.to_string()).unwrap_or_default()),
                };
                one(check_fejer(&claim(label), traj, &pts, &spec)?)
            }
            Check::SecondOrderBounds { params, z } => {
                let (op, lip) = sys.second_order_operator().ok_or_else(|| unsupported("a second-order system", sys))?;
                let mut out = Vec::new();
                for (variant, name) in [(LVariant::Multiply, "multiply"), (LVariant::Divide, "divide")] {
                    let mut prm = params.clone();
                    prm.l_variant = variant;
                    let k = second_order_constants(&prm, self.budget)?;
                    self.certs.push(CertEntry {
                        theorem: "second_order_constants".into(),
                        params: [("l_variant".to_string(), name.to_string())].into_iter().collect(),
                        result: Certified::Constants { theorem: "second_order_constants".into(), inputs: serde_json::to_value(&prm)?, constants: k.clone() },
                    });
                    out.push(check_second_order_bounds(&claim(format!("second_order_bounds[{name}]")), traj, z, &k, &op, lip)?);
                }
                Ok(out)
            }
            Check::Mayer { samples, radius, t_max } => {
                let System::GradientFlow { phi, x0, refinement } = sys else { return Err(unsupported("a gradient flow", sys)) };
                let mut rng = ChaCha8Rng::seed_from_u64(self.sc.seed.wrapping_add(3));
                let ms: Vec<MayerSample> = self
                    .points(*samples, *radius, 4)
                    .into_iter()
                    .map(|z| {
                        let (a, b) = (rng.gen::<f64>() * t_max, rng.gen::<f64>() * t_max);
                        MayerSample { s: a.min(b), t: a.max(b), z }
                    })
                    .collect();
                one(check_mayer(&claim("mayer".into()), phi, x0, &ms, refinement)?)
            }
            Check::ObjectiveRate { b, times } => {
                let System::GradientFlow { phi, x0, refinement } = sys else { return Err(unsupported("a gradient flow", sys)) };
                one(check_objective_rate(&claim("objective_rate".into()), phi, phi.min_value().unwrap_or(0.0), x0, *b, times, refinement)?)
            }
            Check::StojkovicFixedPoint { samples, radius, times } => {
                let System::Stojkovic { map, refinement, .. } = sys else { return Err(unsupported("a resolvent flow", sys)) };
                one(check_stojkovic_fixed_point(&claim("stojkovic_fixed_point".into()), map, &self.points(*samples, *radius, 5), times, refinement)?)
            }
            Check::ClosedForm { form, tol, times, refinement } => one(self.closed_form(claim("closed_form".into()), form, *tol, times, refinement.as_ref())?),
            Check::SemigroupLaw { s, t } => {
                let r = *sys.refinement().ok_or_else(|| unsupported("a semigroup system", sys))?;
                let x0 = sys.x0();
                let whole = sys.semigroup(x0, s + t, &r)?;
                let first = sys.semigroup(x0, *s, &r)?;
                let second = sys.semigroup(&first.point, *t, &r)?;
                let mut rep = VerificationReport::new(claim(format!("semigroup_law[s={s},t={t}]"))).sampled();
                rep.record(whole.point.dist(&second.point), 0.0, 3.0 * (whole.err() + first.err() + second.err()) + 1e-12);
                one(rep)
            }
        }
    }

    fn closed_form(&self, claim: String, form: &ClosedForm, tol: f64, times: &[f64], r: Option<&Refinement>) -> Result<VerificationReport> {
        let sys = &self.sc.system;
        let x0 = sys.x0();
        let mut rep = VerificationReport::new(claim).with("tol", tol);
        match sys.refinement() {
            Some(own) => {
                if times.is_empty() {
                    return Err(Error::Config("closed_form on a semigroup needs times".into()));
                }
                let r = r.unwrap_or(own);
                let mut worst_err: f64 = 0.0;
                for &t in times {
                    let p = sys.semigroup(x0, t, r)?;
                    worst_err = worst_err.max(p.err());
                    rep.record(p.point.dist(&x0.scale(form.factor(t))), tol, 0.0);
                }
                rep.put("estimated_error", worst_err);
            }
            None => {
                for s in &self.traj.samples {
                    if times.is_empty() || times.iter().any(|&t| (t - s.t).abs() < 1e-12) {
                        rep.record(s.x.dist(&x0.scale(form.factor(s.t))), tol, 0.0);
                    }
                }
                rep.put("est_err", self.traj.est_err());
            }
        }
        Ok(rep)
    }
}

/// Simulates, certifies and verifies one scenario. The scenario is
/// validated before any computation.
pub fn run_scenario(sc: &Scenario, budget: &Budget) -> Result<ScenarioOutcome> {
    sc.validate()?;
    let traj = sc.system.simulate(sc.horizon, sc.step)?;
    let mut runner = Runner { sc, traj: &traj, budget, certs: Vec::new() };
    for r in &sc.certificates {
        runner.request(r)?;
    }
    let mut reports = Vec::new();
    for (i, c) in sc.checks.iter().enumerate() {
        reports.extend(runner.run_check(i, c).map_err(|e| Error::Config(format!("{}: check {i} ({}): {e}", sc.name, c.name())))?);
    }
    let certificates = runner.certs;
    Ok(ScenarioOutcome { scenario: sc.clone(), trajectory: traj, certificates, reports })
}

/// Runs scenarios on a rayon pool of `threads` workers (0 = rayon default).
/// Results come back in input order.
pub fn run_all(list: &[Scenario], budget: &Budget, threads: usize) -> Result<Vec<ScenarioOutcome>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| list.par_iter().map(|s| run_scenario(s, budget)).collect())
}
