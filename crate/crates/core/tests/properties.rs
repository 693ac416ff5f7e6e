use fejer_core::moduli::counter::tilde_iterate;
use fejer_core::moduli::interval::{Bound, Prec};
use fejer_core::moduli::rational::{self as q, parse_rational, rat_to_string};
use fejer_core::moduli::{Budget, Counterfunction, CounterfunctionSpec, Ctx, ExtNat, Interval};
use fejer_core::scenario::certify_pairs;
use fejer_core::space::Point;
use proptest::prelude::*;

fn bound(theorem: &str, pairs: &[String]) -> ExtNat {
    certify_pairs(theorem, pairs, &Budget::default()).unwrap().bound().cloned().unwrap()
}

fn le(a: &ExtNat, b: &ExtNat) -> bool {
    match (a.finite(), b.finite()) {
        (Some(x), Some(y)) => x <= y,
        (_, None) => true,
        (None, Some(_)) => false,
    }
}

fn ratio() -> impl Strategy<Value = (i64, i64)> {
    (0i64..40, 1i64..12)
}

fn show((n, d): (i64, i64)) -> String {
    format!("{n}/{d}")
}

fn counter() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u64..6).prop_map(|k| format!("const:{k}")),
        (0u64..4).prop_map(|k| format!("id+{k}")),
        ((1u64..3), (0u64..3)).prop_map(|(a, b)| format!("lin:{a}:{b}")),
        Just("n".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trips(n in -10_000i64..10_000, d in 1i64..500) {
        let r = q::rat(n, d);
        prop_assert_eq!(parse_rational(&rat_to_string(&r)).unwrap(), r);
    }

    #[test]
    fn ball_is_antitone_in_eps_and_monotone_in_radius(d in 1u32..4, b in ratio(), e1 in (1i64..30, 1i64..10), e2 in (1i64..30, 1i64..10)) {
        let (small, large) = if e1.0 * e2.1 <= e2.0 * e1.1 { (e1, e2) } else { (e2, e1) };
        let at = |b: (i64, i64), e: (i64, i64)| bound("ball_total_boundedness", &[format!("d={d}"), format!("b={}", show(b)), format!("eps={}", show(e))]);
        prop_assert!(le(&at(b, large), &at(b, small)));
        prop_assert!(le(&at(b, small), &at((b.0 + 1, b.1), small)));
    }

    #[test]
    fn tilde_iterate_is_monotone_in_the_count(spec in counter(), k in 0u64..200) {
        let f = CounterfunctionSpec::parse_short(&spec).unwrap().build();
        let mut ctx = Ctx::new(Budget::default(), 64);
        let a = tilde_iterate(&mut ctx, &f, &ExtNat::from_u64(k)).unwrap();
        let b = tilde_iterate(&mut ctx, &f, &ExtNat::from_u64(k + 1)).unwrap();
        prop_assert!(le(&a, &b));
        if let (Some(x), Some(y)) = (a.finite(), b.finite()) {
            // one more step adds exactly f(x)
            let fx = f.eval(&mut ctx, x).unwrap();
            prop_assert_eq!(ExtNat::Fin(x.clone()).add(&fx), ExtNat::Fin(y.clone()));
        }
    }

    #[test]
    fn aas1_grows_as_eps_shrinks(b in ratio(), gap in ratio(), bn in ratio(), e in (1i64..8, 1i64..8), spec in counter()) {
        let c = q::rat(b.0, b.1) + q::rat(gap.0, gap.1);
        let run = |e: (i64, i64)| bound("aas1_metastability", &[
            format!("b={}", show(b)), format!("c={}", rat_to_string(&c)), format!("B={}", show(bn)),
            format!("eps={}", show(e)), format!("f={spec}"),
        ]);
        prop_assert!(le(&run((e.0 * 2, e.1)), &run(e)));
    }

    #[test]
    fn regular_rates_agree_across_routes(b in ratio(), e in (1i64..20, 1i64..6), k in (1i64..9, 1i64..4)) {
        let reg = format!("regularity=metric_subregular:{}", show(k));
        let direct = bound("rho_gradient_flow", &[format!("b={}", show(b)), reg.clone(), format!("eps={}", show(e))]);
        let generic = bound("rho_convergence_regular", &["bundle=gradient_flow".into(), format!("b={}", show(b)), reg, format!("eps={}", show(e))]);
        prop_assert_eq!(direct, generic);
    }

    #[test]
    fn certificates_are_deterministic(d in 1u32..3, b in ratio(), e in (1i64..8, 1i64..4), spec in counter()) {
        let pairs = [format!("d={d}"), format!("b={}", show(b)), format!("eps={}", show(e)), format!("f={spec}")];
        let one = certify_pairs("delta_gradient_flow", &pairs, &Budget::default()).unwrap();
        let two = certify_pairs("delta_gradient_flow", &pairs, &Budget::default()).unwrap();
        prop_assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&two).unwrap());
    }

    #[test]
    fn fast_linear_rate_is_a_contraction_decreasing_in_k(beta in 0.01f64..10.0, k in 0.01f64..5.0, p in 1.0f64..4.0) {
        let at = |k: f64| certify_pairs("fast_linear_rate", &[format!("beta={beta}"), format!("k={k}"), format!("p={p}")], &Budget::default()).unwrap().real().unwrap();
        let c = at(k);
        prop_assert!(c > 0.0 && c < 1.0);
        prop_assert!(at(k * 2.0) <= c);
    }

    #[test]
    fn sqrt_and_exp_enclose_the_float_value(n in 1i64..10_000, d in 1i64..100) {
        let p = Prec::new(64, &Budget::default());
        let r = q::rat(n, d);
        let s = Interval::sqrt_of(&r, &p).unwrap();
        prop_assert!(s.lo() * s.lo() <= r);
        if let Bound::Fin(h) = s.hi() {
            prop_assert!(h * h >= r);
        }
        let x = q::rat(n % 50, d);
        let e = Interval::exact(x.clone()).exp(&p).unwrap();
        let f = q::to_f64(&x).exp();
        prop_assert!(e.lo_f64() <= f * (1.0 + 1e-12) && e.hi_f64() >= f * (1.0 - 1e-12));
    }

    #[test]
    fn distance_is_a_metric(a in prop::collection::vec(-10.0f64..10.0, 3), b in prop::collection::vec(-10.0f64..10.0, 3), c in prop::collection::vec(-10.0f64..10.0, 3)) {
        let (a, b, c) = (Point::new(a).unwrap(), Point::new(b).unwrap(), Point::new(c).unwrap());
        prop_assert_eq!(a.dist(&a), 0.0);
        prop_assert!((a.dist(&b) - b.dist(&a)).abs() <= 1e-12);
        prop_assert!(a.dist(&c) <= a.dist(&b) + b.dist(&c) + 1e-12);
    }
}

#[test]
fn zero_counterfunction_is_a_fixed_point_even_for_unbounded_counts() {
    let mut ctx = Ctx::new(Budget::default(), 64);
    let v = tilde_iterate(&mut ctx, &Counterfunction::constant(0), &ExtNat::Overflow).unwrap();
    assert_eq!(v, ExtNat::zero());
}
