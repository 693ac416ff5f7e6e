//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod oracle;

use std::path::Path;
use std::time::{Duration, Instant};

use fejer_core::flows::Trajectory;
use fejer_core::moduli::hadamard::stojkovic_chi_in;
use fejer_core::moduli::rational as q;
use fejer_core::moduli::{Budget, Ctx, ExtNat, Interval, Rounding};
use fejer_core::scenario::{self, certify_pairs, Certified, Scenario, ScenarioOutcome, BUILTINS};
use fejer_core::verify::{Status, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Trajectory checks allow this many estimated global errors.
const ERR_FACTOR: f64 = 3.0;
/// Relative slack on c'^floor(t) d0 in the exponential-rate check.
const EXP_REL: f64 = 1e-6;
/// Closed-form agreement for the ODE and semigroup oracles.
const CLOSED_FORM_TOL: f64 = 1e-6;
const LIMIT_1: Duration = Duration::from_secs(10);
const LIMIT_2: Duration = Duration::from_secs(30);
const LIMIT_3: Duration = Duration::from_secs(60);
const LIMIT_9: Duration = Duration::from_secs(300);
/// Non-overflow pairs required per specialized certificate.
const PAIRS: usize = 20;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(problems: Vec<String>, ok: String) -> Verdict {
    if problems.is_empty() {
        Verdict { pass: true, detail: ok }
    } else {
        Verdict { pass: false, detail: problems.join("; ") }
    }
}

fn builtin_json(name: &str) -> Value {
    let (_, text, _) = BUILTINS.iter().find(|(n, _, _)| *n == name).unwrap_or_else(|| panic!("no builtin {name}"));
    serde_json::from_str(text).expect("builtin parses")
}

fn run(v: &Value) -> ScenarioOutcome {
    let sc = Scenario::from_json(&v.to_string()).expect("scenario validates");
    scenario::run_scenario(&sc, &Budget::default()).expect("scenario runs")
}

fn reports<'a>(o: &'a ScenarioOutcome, part: &str) -> Vec<&'a VerificationReport> {
    o.reports.iter().filter(|r| r.claim.contains(part)).collect()
}

/// Every report whose claim contains `part` holds; at least `min` exist.
fn all_hold(o: &ScenarioOutcome, part: &str, min: usize, problems: &mut Vec<String>) {
    let rs = reports(o, part);
    if rs.len() < min {
        problems.push(format!("{}: expected {min} reports matching {part:?}, found {}", o.scenario.name, rs.len()));
    }
    for r in rs {
        if !r.status.holds() {
            problems.push(format!("{}: {} is {}", o.scenario.name, r.claim, r.status.as_str()));
        }
    }
}

fn bound(theorem: &str, pairs: &[String]) -> Result<ExtNat, String> {
    match certify_pairs(theorem, pairs, &Budget::default()) {
        Ok(Certified::Bound(c)) => Ok(c.value),
        Ok(other) => Err(format!("{theorem}: not a bound: {}", other.display_value())),
        Err(e) => Err(format!("{theorem}: {e}")),
    }
}

fn dist0(traj: &Trajectory, i: usize) -> f64 {
    traj.samples[i].x.norm()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let bad = oracle::all_mismatches();
    let took = start.elapsed();
    let mut problems = bad;
    if took > LIMIT_1 {
        problems.push(format!("took {took:?}"));
    }
    let n = oracle::SEEDS.len() * oracle::CASES;
    verdict(problems, format!("{n} random cases over 6 certificates agree with the rational oracles in {:.2} s", took.as_secs_f64()))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut problems = Vec::new();
    let mut counts = Vec::new();
    let routes: [(&str, &str, &str); 3] = [
        ("delta_first_order", "first_order", "lambda=divergence:1/4"),
        ("delta_gradient_flow", "gradient_flow", ""),
        ("delta_stojkovic", "stojkovic", ""),
    ];
    for (special, bundle, extra) in routes {
        let mut agreed = 0;
        let mut tries = 0;
        while agreed < PAIRS && tries < 400 {
            tries += 1;
            let d = rng.gen_range(1..=2);
            let b = ["1/4", "1/2", "1"][rng.gen_range(0..3)];
            let eps = format!("{}/{}", rng.gen_range(1..=32), rng.gen_range(1..=4));
            let f = match rng.gen_range(0..4) {
                0 | 1 => format!("const:{}", rng.gen_range(0..4)),
                2 => format!("id+{}", rng.gen_range(0..3)),
                _ => "n".to_string(),
            };
            let mut base = vec![format!("d={d}"), format!("b={b}"), format!("eps={eps}"), format!("f={f}")];
            if !extra.is_empty() {
                base.push(extra.to_string());
            }
            let mut generic = base.clone();
            generic.push(format!("bundle={bundle}"));
            match (bound(special, &base), bound("delta_with_error_rate", &generic)) {
                (Ok(a), Ok(b)) if a == b => {
                    if !a.is_overflow() {
                        agreed += 1;
                    }
                }
                (Ok(a), Ok(b)) => problems.push(format!("{special} {base:?}: {a} vs generic {b}")),
                (a, b) => problems.push(format!("{special} {base:?}: {a:?} / {b:?}")),
            }
        }
        if agreed < PAIRS {
            problems.push(format!("{special}: only {agreed} non-overflow pairs in {tries} tries"));
        }
        counts.push(format!("{special} {agreed}"));
    }
    let took = start.elapsed();
    if took > LIMIT_2 {
        problems.push(format!("took {took:?}"));
    }
    verdict(problems, format!("specialized equals generic on non-overflow pairs ({}) in {:.2} s", counts.join(", "), took.as_secs_f64()))
}

/// Scalar contraction c = 1/2 with lambda = 1/2 from `x0`.
fn contraction(x0: &[f64]) -> Value {
    let mut v = builtin_json("first_order_contraction");
    v["system"]["x0"] = json!(x0);
    v["name"] = json!(format!("contraction_{}d", x0.len()));
    v
}

/// Largest excess of |x(t_j)| over min_{i <= j} |x(t_i)|.
fn fejer_excess(traj: &Trajectory) -> f64 {
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..traj.samples.len() {
        let d = dist0(traj, i);
        worst = worst.max(d - best);
        best = best.min(d);
    }
    worst
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    for (x0, small) in [(vec![1.0], vec![0.05]), (vec![0.6, 0.8], vec![0.03, 0.04])] {
        let dim = x0.len();
        let o = run(&contraction(&x0));
        // (a)
        let tol = ERR_FACTOR * o.trajectory.est_err();
        let excess = fejer_excess(&o.trajectory);
        if excess > tol {
            problems.push(format!("{dim}d: Fejer excess {excess:e} above {tol:e}"));
        }
        all_hold(&o, "fejer[", 2, &mut problems);
        // (b) with b = |x0| = 1/20 so both rates fall inside the horizon
        let mut v = contraction(&small);
        v["certificates"] = json!([]);
        v["checks"] = json!([
            {"check": "rate", "theorem": "residual_rate", "params": {"lambda": "divergence:1/4", "b": "1/20"}, "quantity": {"kind": "residual"}, "eps": [0.5, 0.1, 0.02]},
            {"check": "rate", "theorem": "residual_rate", "params": {"lambda": "lower_witness:1/2", "b": "1/20"}, "quantity": {"kind": "residual"}, "eps": [0.5, 0.1, 0.02]}
        ]);
        all_hold(&run(&v), "rate[residual_rate]", 2, &mut problems);
        // (c)
        let meta = reports(&o, "metastability[delta_first_order");
        if meta.len() != 3 {
            problems.push(format!("{dim}d: expected 3 metastability reports"));
        }
        for r in meta {
            let cert = r.witness.get("certificate").cloned().unwrap_or(Value::Null);
            let n = r.witness.get("n").and_then(Value::as_u64);
            match (r.status, n) {
                (s, Some(n)) if s.holds() => {
                    let c = cert.as_str().and_then(|s| s.parse::<u64>().ok());
                    if !c.is_some_and(|c| n <= c) {
                        problems.push(format!("{dim}d: {} witness {n} above certificate {cert}", r.claim));
                    }
                }
                (Status::InconclusiveOverflow, Some(n)) => notes.push(format!("{dim}d overflow, empirical witness n={n}")),
                (s, _) => problems.push(format!("{dim}d: {} is {}", r.claim, s.as_str())),
            }
        }
    }
    let took = start.elapsed();
    if took > LIMIT_3 {
        problems.push(format!("took {took:?}"));
    }
    verdict(problems, format!("Fejer, both residual rates and metastability hold in R^1 and R^2 ({}) in {:.2} s", notes.join(", "), took.as_secs_f64()))
}

fn criterion_4() -> Verdict {
    let mut problems = Vec::new();
    // tau_lo = 1/4 from the divergence witness, k = 1 - c = 1/2, p = 2
    let c = match certify_pairs("fast_linear_rate", &["beta=1/4", "k=1/2", "p=2"], &Budget::default()).map(|c| c.real()) {
        Ok(Some(c)) => c,
        other => return verdict(vec![format!("fast_linear_rate: {other:?}")], String::new()),
    };
    let mut worst = f64::NEG_INFINITY;
    for x0 in [vec![1.0], vec![0.6, 0.8]] {
        let o = run(&contraction(&x0));
        let tr = &o.trajectory;
        let tol = ERR_FACTOR * tr.est_err();
        let d0 = dist0(tr, 0);
        for (i, s) in tr.samples.iter().enumerate().take_while(|(_, s)| s.t <= 20.0) {
            let rhs = c.powi(s.t.floor() as i32) * d0 * (1.0 + EXP_REL) + tol;
            worst = worst.max(dist0(tr, i) - rhs);
            if dist0(tr, i) > rhs {
                problems.push(format!("{}d: t={} dist {} above {}", x0.len(), s.t, dist0(tr, i), rhs));
                break;
            }
        }
        all_hold(&o, "exponential_rate", 1, &mut problems);
    }
    verdict(problems, format!("dist <= c'^floor(t) d0 up to t = 20 with c' = {c:.6}, worst margin {worst:.3e}"))
}

fn criterion_5() -> Verdict {
    let mut problems = Vec::new();
    let o = run(&builtin_json("second_order_linear"));
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let exact = 2.0 * (-t as f64).exp() - (-2.0 * t as f64).exp();
        match o.trajectory.eval(t) {
            Ok(x) => worst = worst.max((x.coords()[0] - exact).abs()),
            Err(e) => problems.push(format!("eval at {t}: {e}")),
        }
    }
    if worst > CLOSED_FORM_TOL {
        problems.push(format!("closed form error {worst:e}"));
    }
    all_hold(&o, "second_order_bounds[multiply]", 1, &mut problems);
    all_hold(&o, "second_order_bounds[divide]", 1, &mut problems);
    all_hold(&o, "windowed_bound[lambda_capital cert_eps=1/5 f=const:0 eps=0.2]", 1, &mut problems);
    verdict(problems, format!("closed form within {worst:.1e}, both velocity bounds hold, Lambda window found for eps 0.2, f = 0"))
}

fn criterion_6() -> Verdict {
    let mut problems = Vec::new();
    let fb = run(&builtin_json("fb_first_order"));
    let fo = run(&builtin_json("first_order_contraction"));
    let same = fb.trajectory.samples.len() == fo.trajectory.samples.len()
        && fb.trajectory.samples.iter().zip(&fo.trajectory.samples).all(|(a, b)| {
            a.t.to_bits() == b.t.to_bits() && a.x.coords().iter().zip(b.x.coords()).all(|(u, v)| u.to_bits() == v.to_bits())
        });
    if !same {
        problems.push("forward-backward trajectory differs from the relaxed flow".into());
    }
    let zeros = reports(&fb, "approximate_zeros");
    match zeros.as_slice() {
        [r] if r.status == Status::Holds && r.checked >= 100 && r.margin.is_some_and(|m| m < 0.0) => {}
        other => problems.push(format!("approximate zeros: {:?}", other.iter().map(|r| (r.status, r.margin, r.checked)).collect::<Vec<_>>())),
    }
    let long = run(&builtin_json("fb_first_order_long"));
    let psi = reports(&long, "rate[fb_b_rate]");
    for r in &psi {
        for eps in ["eps=0.5", "eps=0.1"] {
            if !r.witness.contains_key(eps) {
                problems.push(format!("psi rate has no entry for {eps}"));
            }
        }
    }
    all_hold(&long, "rate[fb_b_rate]", 1, &mut problems);
    let margin = zeros.first().and_then(|r| r.margin).unwrap_or(f64::NAN);
    verdict(
        problems,
        format!("bitwise equal to the relaxed flow ({} samples), approximate zeros margin {margin:.3e}, psi rate holds for eps 0.5 and 0.1", fb.trajectory.samples.len()),
    )
}

fn criterion_7() -> Verdict {
    let mut problems = Vec::new();
    let o = run(&builtin_json("gradient_flow_quadratic"));
    all_hold(&o, "closed_form", 1, &mut problems);
    all_hold(&o, "mayer", 1, &mut problems);
    all_hold(&o, "objective_rate", 1, &mut problems);
    let cert = bound("delta_gradient_flow", &["d=1".into(), "b=1".into(), "eps=1".into(), "f=const:0".into()]);
    let cert = match cert {
        Ok(ExtNat::Fin(v)) => v.to_string().parse::<u64>().unwrap_or(u64::MAX),
        other => {
            problems.push(format!("delta_gradient_flow: {other:?}"));
            0
        }
    };
    let meta = reports(&o, "metastability[delta_gradient_flow cert_eps=1 f=const:0");
    match meta.as_slice() {
        [r] if r.status.holds() && r.witness.get("n").and_then(Value::as_u64).is_some_and(|n| n <= cert) => {}
        other => problems.push(format!("metastability: {:?}", other.iter().map(|r| (r.status, r.witness.get("n"))).collect::<Vec<_>>())),
    }
    verdict(problems, format!("semigroup matches e^-t, Mayer and objective rate hold, Delta = {cert} with a witness below it"))
}

fn criterion_8() -> Verdict {
    let mut problems = Vec::new();
    let o = run(&builtin_json("stojkovic_negation"));
    all_hold(&o, "closed_form", 1, &mut problems);
    all_hold(&o, "stojkovic_fixed_point", 1, &mut problems);
    let over = reports(&o, "metastability[delta_stojkovic cert_eps=1/1000 f=n");
    match over.as_slice() {
        [r] if r.status == Status::InconclusiveOverflow => {}
        other => problems.push(format!("tiny eps: {:?}", other.iter().map(|r| r.status).collect::<Vec<_>>())),
    }
    if o.violated() {
        problems.push("scenario reported a violation".into());
    }
    // The e-based ceilings are decided exactly and do not move with precision.
    let wide = Budget { max_precision_bits: 8192, ..Budget::default() };
    let cases: [(&str, &[&str]); 3] = [
        ("rho_stojkovic", &["b=1", "regularity=retraction", "eps=4"]),
        ("delta_stojkovic", &["d=1", "b=1", "eps=1", "f=const:0"]),
        ("delta_stojkovic", &["d=1", "b=1/4", "eps=2", "f=const:1"]),
    ];
    for (theorem, pairs) in cases {
        let a = certify_pairs(theorem, pairs, &Budget::default());
        let b = certify_pairs(theorem, pairs, &wide);
        match (a, b) {
            (Ok(Certified::Bound(a)), Ok(Certified::Bound(b))) => {
                if a.rounding != Rounding::Exact || a.value != b.value || a.value.is_overflow() {
                    problems.push(format!("{theorem} {pairs:?}: {} ({:?}) vs {}", a.value, a.rounding, b.value));
                }
            }
            other => problems.push(format!("{theorem}: {other:?}")),
        }
    }
    if bound("rho_stojkovic", &["b=1".into(), "regularity=retraction".into(), "eps=4".into()]) != Ok(ExtNat::from_u64(4)) {
        problems.push("ceil(e) + 1 != 4".into());
    }
    let mut ctx = Ctx::new(Budget::default(), 128);
    for m in [0u64, 1, 3, 10] {
        let eps = 0.5;
        let exact = 2.0 * eps / ((2.0 * m as f64).exp() - 1.0);
        match stojkovic_chi_in(&mut ctx, &Interval::exact(q::rat(1, 2)), &ExtNat::from_u64(m)) {
            Ok(iv) if m > 0 => {
                if !(iv.lo_f64() <= exact * (1.0 + 1e-12) && iv.hi_f64() >= exact * (1.0 - 1e-12)) {
                    problems.push(format!("chi enclosure at m={m} misses {exact}"));
                }
            }
            Ok(_) => {}
            Err(_) if m == 0 => {}
            Err(e) => problems.push(format!("chi at m={m}: {e}")),
        }
    }
    verdict(problems, "semigroup matches e^-2t, fixed-point bound holds, e-ceilings exact, eps = 1e-3 with f = n is inconclusive_overflow".into())
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Verdict {
    let mut problems = Vec::new();
    let list = scenario::resolve_builtin("suite").expect("suite");
    let start = Instant::now();
    let mut dirs = Vec::new();
    for threads in [0, 2] {
        let dir = tempfile::tempdir().expect("tempdir");
        match scenario::run_all(&list, &Budget::default(), threads).and_then(|o| scenario::write_outcomes(dir.path(), &o)) {
            Ok(()) => dirs.push(dir),
            Err(e) => problems.push(format!("suite run: {e}")),
        }
    }
    let took = start.elapsed();
    if dirs.len() == 2 {
        let (a, b) = (dir_bytes(dirs[0].path()), dir_bytes(dirs[1].path()));
        if a != b {
            let names: Vec<_> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.clone()).collect();
            problems.push(format!("artifacts differ: {names:?}"));
        }
        if a.is_empty() {
            problems.push("no artifacts written".into());
        }
    }
    if took > LIMIT_9 * 2 {
        problems.push(format!("two runs took {took:?}"));
    }
    verdict(problems, format!("{} scenarios, two runs byte-identical, {:.1} s per run", list.len(), took.as_secs_f64() / 2.0))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("certificate formula fidelity", criterion_1),
        ("generic and specialized certificates agree", criterion_2),
        ("first-order soundness", criterion_3),
        ("exponential rate", criterion_4),
        ("second-order linear oracle", criterion_5),
        ("forward-backward", criterion_6),
        ("gradient flow", criterion_7),
        ("resolvent semigroup of a nonexpansive map", criterion_8),
        ("end-to-end determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
