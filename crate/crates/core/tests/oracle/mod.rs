//! Straight-line exact-rational recomputations of the closed-form bounds.
//!
//! Nothing here calls into `fejer_core::moduli`; every formula is written out
//! again over `BigRational` so that a mismatch points at one side or the other.

#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fejer_core::moduli::{Budget, ExtNat};
use fejer_core::scenario::certify_pairs;

pub type Q = BigRational;

pub const CASES: usize = 50;

/// None stands for Overflow.
pub type Nat = Option<BigUint>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn show(r: &Q) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn limit() -> BigUint {
    BigUint::one() << Budget::default().max_bits
}

fn capped(v: BigUint) -> Nat {
    (v <= limit()).then_some(v)
}

fn ceil_nat(r: &Q) -> BigUint {
    let c = r.ceil().to_integer();
    if c.is_negative() {
        BigUint::zero()
    } else {
        c.magnitude().clone()
    }
}

/// Least integer n with n^2 >= r.
fn ceil_sqrt(r: &Q) -> BigUint {
    let m = ceil_nat(r);
    let s = m.sqrt();
    if &s * &s < m {
        s + 1u32
    } else {
        s
    }
}

fn qpow(r: &Q, e: u32) -> Q {
    (0..e).fold(Q::one(), |acc, _| acc * r)
}

/// The short counterfunction forms used by the command line.
#[derive(Clone, Debug)]
pub enum F {
    Const(u64),
    IdPlus(u64),
    Lin(u64, u64),
}

impl F {
    pub fn spec(&self) -> String {
        match self {
            F::Const(k) => format!("const:{k}"),
            F::IdPlus(k) => format!("id+{k}"),
            F::Lin(a, b) => format!("lin:{a}:{b}"),
        }
    }

    pub fn at(&self, n: &BigUint) -> BigUint {
        match self {
            F::Const(k) => BigUint::from(*k),
            F::IdPlus(k) => n + *k,
            F::Lin(a, b) => n * *a + *b,
        }
    }

    fn random(rng: &mut ChaCha8Rng) -> F {
        match rng.gen_range(0..8) {
            0..=2 => F::Const(rng.gen_range(0..6)),
            3 | 4 => F::IdPlus(rng.gen_range(1..4)),
            5 | 6 => F::Lin(rng.gen_range(1..3), rng.gen_range(1..3)),
            _ => F::Lin(1, 0),
        }
    }
}

/// x <- x + g(x), `times` times from 0. `g` is nondecreasing, so once x
/// passes the limit it stays past it. Constant g is summed in one step.
fn tilde(g: &dyn Fn(&BigUint) -> BigUint, constant: bool, times: &BigUint) -> Nat {
    if constant {
        return capped(g(&BigUint::zero()) * times);
    }
    let lim = limit();
    let mut x = BigUint::zero();
    let mut i = BigUint::zero();
    while &i < times {
        let step = g(&x);
        if step.is_zero() {
            break;
        }
        x += step;
        if x > lim {
            return None;
        }
        i += 1u32;
    }
    Some(x)
}

fn rand_q(rng: &mut ChaCha8Rng, lo: i64, hi: i64, max_den: i64) -> Q {
    let d = rng.gen_range(1..=max_den);
    q(rng.gen_range(lo * d..=hi * d), d)
}

fn rand_pos(rng: &mut ChaCha8Rng, hi: i64, max_den: i64) -> Q {
    let d = rng.gen_range(1..=max_den);
    q(rng.gen_range(1..=hi * d), d)
}

/// One comparison: the command-line parameters and the oracle's answer.
pub struct Case {
    pub theorem: &'static str,
    pub params: Vec<String>,
    pub expected: Nat,
}

pub fn aas1(b: &Q, c: &Q, bn: &Q, eps: &Q, f: &F) -> Nat {
    let omega = ceil_nat(&(q(2, 1) * bn / eps)) * ceil_nat(&((c + bn - b) / eps));
    let omega = capped(omega)?;
    tilde(&|n| f.at(n), matches!(f, F::Const(_)), &omega)
}

/// Integer q = 1 + p (1 - 1/r) only; `r = None` is infinity.
pub fn aas2(c: &Q, a: &Q, bn: &Q, p: u32, r: Option<u32>, eps: &Q, f: &F) -> Nat {
    let qq = match r {
        None => 1 + p,
        Some(r) => {
            assert_eq!((p * (r - 1)) % r, 0, "oracle needs integer q");
            1 + p * (r - 1) / r
        }
    };
    let two_q = qpow(&q(2, 1), qq);
    let den = qpow(eps, qq) * (&two_q - Q::one());
    let qab = if qq == 1 { bn.clone() } else { Q::from_integer(qq.into()) * qpow(a, qq - 1) * bn };
    let first = ceil_nat(&(&two_q * q(2, 1) * &qab / &den));
    let second = ceil_nat(&(&two_q * (qpow(c, qq) + &qab) / &den));
    let varpi = capped(first * second)?;
    let floor = ceil_nat(&qpow(&(q(3, 1) * a / eps), p));
    let g = |n: &BigUint| f.at(n).max(floor.clone());
    let constant = matches!(f, F::Const(_));
    tilde(&g, constant, &varpi)
}

/// ceil(2 (ceil(1/eps) + 1) sqrt(d) b)^d
pub fn ball(d: u32, b: &Q, eps: &Q) -> Nat {
    let k = ceil_nat(&(Q::one() / eps));
    let k1 = Q::from_integer(BigInt::from(k + 1u32));
    let base = ceil_sqrt(&(q(4, 1) * &k1 * &k1 * Q::from_integer(d.into()) * b * b));
    capped(num_traits::pow(base, d as usize))
}

/// ceil(b^2 / tau(eps)) + 1 for the catalogued moduli with rational tau.
pub fn rho_gradient(b: &Q, tau: &Q) -> Nat {
    capped(ceil_nat(&(b * b / tau)) + 1u32)
}

/// Delta(P) + 1 with P = gamma(eps/sqrt 12) + 1 and
/// Delta(j+1) = ceil(24 b^2 (f(Delta(j)+1) + 1) / eps^2).
pub fn delta_gradient(d: u32, b: &Q, eps: &Q, f: &F) -> Nat {
    let e2 = eps * eps;
    // ceil(1/(eps/sqrt 12)) = ceil(sqrt(12/eps^2))
    let k = ceil_sqrt(&(q(12, 1) / &e2));
    let k1 = Q::from_integer(BigInt::from(k + 1u32));
    let base = ceil_sqrt(&(q(4, 1) * &k1 * &k1 * Q::from_integer(d.into()) * b * b));
    let gamma = capped(num_traits::pow(base, d as usize))?;
    let top = capped(gamma + 1u32)?;
    let scale = q(24, 1) * b * b;
    let mut cur = BigUint::zero();
    let mut j = BigUint::zero();
    while j < top {
        let fv = f.at(&(&cur + 1u32));
        let next = ceil_nat(&(&scale * Q::from_integer(BigInt::from(fv + 1u32)) / &e2));
        cur = capped(next)?;
        j += 1u32;
    }
    capped(cur + 1u32)
}

pub fn aas1_cases(seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES)
        .map(|_| {
            let b = rand_q(&mut rng, 0, 2, 6);
            let c = &b + rand_q(&mut rng, 0, 2, 6);
            let bn = rand_q(&mut rng, 0, 2, 6);
            let eps = rand_pos(&mut rng, 1, 8);
            let f = F::random(&mut rng);
            Case {
                theorem: "aas1_metastability",
                params: vec![format!("b={}", show(&b)), format!("c={}", show(&c)), format!("B={}", show(&bn)), format!("eps={}", show(&eps)), format!("f={}", f.spec())],
                expected: aas1(&b, &c, &bn, &eps, &f),
            }
        })
        .collect()
}

pub fn aas2_cases(seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES)
        .map(|_| {
            let c = rand_q(&mut rng, 0, 2, 4);
            let a = rand_q(&mut rng, 0, 2, 4);
            let bn = rand_q(&mut rng, 0, 2, 4);
            let eps = q(rng.gen_range(1..=4), rng.gen_range(1..=4));
            let (p, r) = match rng.gen_range(0..4) {
                0 => (rng.gen_range(1..=3), None),
                1 => (rng.gen_range(1..=3), Some(1)),
                2 => (2, Some(2)),
                _ => (3, Some(3)),
            };
            let f = F::random(&mut rng);
            let mut params = vec![
                format!("c={}", show(&c)),
                format!("A={}", show(&a)),
                format!("B={}", show(&bn)),
                format!("p={p}"),
                format!("eps={}", show(&eps)),
                format!("f={}", f.spec()),
            ];
            params.push(match r {
                None => "r=inf".to_string(),
                Some(r) => format!("r={r}"),
            });
            Case { theorem: "aas2_metastability", params, expected: aas2(&c, &a, &bn, p, r, &eps, &f) }
        })
        .collect()
}

pub fn ball_cases(seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES)
        .map(|_| {
            let d = rng.gen_range(1..=4);
            let b = rand_q(&mut rng, 0, 3, 7);
            let eps = rand_pos(&mut rng, 2, 9);
            Case {
                theorem: "ball_total_boundedness",
                params: vec![format!("d={d}"), format!("b={}", show(&b)), format!("eps={}", show(&eps))],
                expected: ball(d, &b, &eps),
            }
        })
        .collect()
}

pub fn rho_cases(seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES)
        .map(|_| {
            let b = rand_q(&mut rng, 0, 3, 5);
            let eps = rand_pos(&mut rng, 2, 6);
            let (reg, tau) = match rng.gen_range(0..6) {
                0 => {
                    let c = q(rng.gen_range(0..8), 8);
                    (format!("quasi_contraction:{}", show(&c)), (Q::one() - c) * &eps)
                }
                1 => {
                    let c = q(rng.gen_range(0..5), 5);
                    (format!("orbital_contraction:{}", show(&c)), (Q::one() - c) * &eps)
                }
                2 => ("retraction".to_string(), eps.clone()),
                3 => {
                    let beta = rand_pos(&mut rng, 3, 4);
                    (format!("strongly_accretive:{}", show(&beta)), beta * &eps)
                }
                4 => {
                    let k = rand_pos(&mut rng, 3, 4);
                    (format!("metric_subregular:{}", show(&k)), &eps / k)
                }
                _ => {
                    let rho = rand_pos(&mut rng, 3, 4);
                    (format!("strongly_quasiconvex:{}", show(&rho)), rho / q(2, 1) * &eps * &eps)
                }
            };
            Case {
                theorem: "rho_convergence_regular",
                params: vec!["bundle=gradient_flow".into(), format!("b={}", show(&b)), format!("regularity={reg}"), format!("eps={}", show(&eps))],
                expected: rho_gradient(&b, &tau),
            }
        })
        .collect()
}

pub fn delta_gradient_cases(seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES)
        .map(|_| {
            let d = rng.gen_range(1..=2);
            let b = rand_q(&mut rng, 0, 2, 4);
            let eps = q(rng.gen_range(1..=8), 4);
            let f = F::random(&mut rng);
            Case {
                theorem: "delta_gradient_flow",
                params: vec![format!("d={d}"), format!("b={}", show(&b)), format!("eps={}", show(&eps)), format!("f={}", f.spec())],
                expected: delta_gradient(d, &b, &eps, &f),
            }
        })
        .collect()
}

fn as_nat(v: &ExtNat) -> Nat {
    v.finite().cloned()
}

/// Runs the cases through the registry; returns one line per disagreement.
pub fn mismatches(cases: &[Case]) -> Vec<String> {
    let budget = Budget::default();
    let mut bad = Vec::new();
    for c in cases {
        match certify_pairs(c.theorem, &c.params, &budget) {
            Ok(cert) => {
                let got = cert.bound().and_then(as_nat);
                if got != c.expected {
                    bad.push(format!("{} {:?}: got {:?}, oracle {:?}", c.theorem, c.params, got, c.expected));
                }
            }
            Err(e) => bad.push(format!("{} {:?}: error {e}", c.theorem, c.params)),
        }
    }
    bad
}

/// (beta, k, p) triples with integer p; floats are exact binary rationals.
pub fn fast_linear_inputs(seed: u64) -> Vec<(f64, f64, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES)
        .map(|_| {
            let beta = rng.gen_range(1..=64) as f64 / 16.0;
            let k = rng.gen_range(1..=64) as f64 / 32.0;
            (beta, k, rng.gen_range(1..=4))
        })
        .collect()
}

/// Relative slack allowed on c^p against the exact 1/(1 + beta k^p).
pub fn fast_linear_tol(p: u32) -> f64 {
    16.0 * p as f64 * f64::EPSILON
}

/// |c^p (1 + beta k^p) - 1|, computed exactly and rounded once at the end.
pub fn fast_linear_defect(beta: f64, k: f64, p: u32, c: f64) -> f64 {
    let exact = |x: f64| Q::from_float(x).expect("finite");
    let target = Q::one() + exact(beta) * qpow(&exact(k), p);
    let defect = qpow(&exact(c), p) * target - Q::one();
    defect.abs().to_f64().unwrap_or(f64::INFINITY)
}

pub fn fast_linear_mismatches(seed: u64) -> Vec<String> {
    let budget = Budget::default();
    let mut bad = Vec::new();
    for (beta, k, p) in fast_linear_inputs(seed) {
        let params = [format!("beta={beta}"), format!("k={k}"), format!("p={p}")];
        match certify_pairs("fast_linear_rate", &params, &budget).map(|c| c.real()) {
            Ok(Some(c)) => {
                let defect = fast_linear_defect(beta, k, p, c);
                if !(defect <= fast_linear_tol(p)) {
                    bad.push(format!("fast_linear_rate {params:?}: c = {c}, defect {defect:e}"));
                }
            }
            other => bad.push(format!("fast_linear_rate {params:?}: {other:?}")),
        }
    }
    bad
}

/// Criterion-one seeds; one per theorem so the streams do not overlap.
pub const SEEDS: [(&str, u64); 6] = [
    ("aas1_metastability", 11),
    ("aas2_metastability", 12),
    ("ball_total_boundedness", 13),
    ("fast_linear_rate", 14),
    ("rho_convergence_regular", 15),
    ("delta_gradient_flow", 16),
];

pub fn cases_for(theorem: &str, seed: u64) -> Vec<Case> {
    match theorem {
        "aas1_metastability" => aas1_cases(seed),
        "aas2_metastability" => aas2_cases(seed),
        "ball_total_boundedness" => ball_cases(seed),
        "rho_convergence_regular" => rho_cases(seed),
        "delta_gradient_flow" => delta_gradient_cases(seed),
        _ => Vec::new(),
    }
}

/// All six theorems at the fixed seeds.
pub fn all_mismatches() -> Vec<String> {
    let mut bad = Vec::new();
    for (theorem, seed) in SEEDS {
        if theorem == "fast_linear_rate" {
            bad.extend(fast_linear_mismatches(seed));
        } else {
            bad.extend(mismatches(&cases_for(theorem, seed)));
        }
    }
    bad
}
