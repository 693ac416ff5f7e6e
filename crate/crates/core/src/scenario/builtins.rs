use std::collections::BTreeSet;

use super::config::{parse_config, Scenario};
use super::registry::THEOREMS;
use crate::error::{Error, Result};

/// (name, json, negative)
pub const BUILTINS: &[(&str, &str, bool)] = &[
    ("first_order_contraction", include_str!("../../scenarios/first_order_contraction.json"), false),
    ("first_order_contraction_2d", include_str!("../../scenarios/first_order_contraction_2d.json"), false),
    ("first_order_contraction_long", include_str!("../../scenarios/first_order_contraction_long.json"), false),
    ("aas_lemmas", include_str!("../../scenarios/aas_lemmas.json"), false),
    ("second_order_linear", include_str!("../../scenarios/second_order_linear.json"), false),
    ("fb_first_order", include_str!("../../scenarios/fb_first_order.json"), false),
    ("fb_first_order_long", include_str!("../../scenarios/fb_first_order_long.json"), false),
    ("fb_second_order", include_str!("../../scenarios/fb_second_order.json"), false),
    ("gradient_flow_quadratic", include_str!("../../scenarios/gradient_flow_quadratic.json"), false),
    ("stojkovic_negation", include_str!("../../scenarios/stojkovic_negation.json"), false),
    ("stojkovic_rotation", include_str!("../../scenarios/stojkovic_rotation.json"), false),
    ("wrong_beta", include_str!("../../scenarios/wrong_beta.json"), true),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|b| b.0).collect()
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let (_, text, _) = BUILTINS.iter().find(|b| b.0 == name).ok_or_else(|| Error::Config(format!("no builtin scenario {name:?}")))?;
    Scenario::from_json(text)
}

/// `suite` is every positive builtin, `all` adds the negative ones, anything
/// else is a single builtin by name.
pub fn resolve_builtin(name: &str) -> Result<Vec<Scenario>> {
    match name {
        "suite" | "all" => BUILTINS.iter().filter(|b| name == "all" || !b.2).map(|b| parse_config(b.1).map(|mut v| v.remove(0))).collect(),
        _ => Ok(vec![builtin(name)?]),
    }
}

/// Registry ids against the ids the positive builtins exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub covered: BTreeSet<String>,
    pub missing: Vec<&'static str>,
}

pub fn coverage() -> Result<Coverage> {
    let mut covered = BTreeSet::new();
    for sc in resolve_builtin("suite")? {
        covered.extend(sc.theorems.iter().cloned());
        covered.extend(sc.certificates.iter().map(|c| c.theorem.clone()));
        covered.extend(sc.checks.iter().flat_map(|c| c.theorems()));
    }
    let missing = THEOREMS.iter().map(|t| t.id).filter(|id| !covered.contains(*id)).collect();
    Ok(Coverage { covered, missing })
}
