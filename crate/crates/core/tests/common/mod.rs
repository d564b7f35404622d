//! Fixtures shared by the integration targets.
#![allow(dead_code)]

use proxkit::prox::{ProxFn, ProxSpec};
use serde_json::{json, Value};

pub struct Entry {
    pub name: &'static str,
    pub dim: usize,
    pub f: ProxFn,
    /// `f*` built from its own closed form, when the catalog has one.
    pub dual: Option<ProxFn>,
}

pub fn spec(kind: &str, params: Value) -> ProxSpec {
    serde_json::from_value(json!({ "kind": kind, "params": params }))
        .unwrap_or_else(|e| panic!("fixture `{kind}` does not parse: {e}"))
}

fn build(kind: &str, params: Value) -> ProxFn {
    spec(kind, params.clone())
        .build()
        .unwrap_or_else(|e| panic!("fixture `{kind}` {params} does not build: {e}"))
}

fn entry(name: &'static str, dim: usize, f: (&str, Value), dual: Option<(&str, Value)>) -> Entry {
    Entry {
        name,
        dim,
        f: build(f.0, f.1),
        dual: dual.map(|(k, p)| build(k, p)),
    }
}

pub fn box2(r: f64) -> Value {
    json!({"kind": "box", "lower": [-r, -r], "upper": [r, r]})
}

/// One instance of every catalog entry and combinator.
pub fn catalog() -> Vec<Entry> {
    let ball = json!({"kind": "ball", "center": [0.5, -1.0], "radius": 2.0});
    let half = json!({"kind": "halfspace", "normal": [1.0, 2.0], "offset": 1.0});
    let diag = json!({"kind": "subspace", "basis": [[1.0, 1.0]]});
    let anti = json!({"kind": "subspace", "basis": [[1.0, -1.0]]});
    let orthant = json!({"kind": "cone_nonneg", "dim": 2});
    let soc = json!({"kind": "soc", "dim": 3});
    let l1 = json!({"kind": "l1", "params": {"weight": 1.0}});
    // Q⁻¹ for Q = [[2,1],[1,1]] is [[1,−1],[−1,2]]; Q⁻¹b for b = (1,−1) is (2,−3)
    let q = json!([[2.0, 1.0], [1.0, 1.0]]);
    vec![
        entry("zero", 2, ("zero", json!({})), Some(("indicator", json!({"set": {"kind": "singleton", "point": [0.0, 0.0]}})))),
        entry(
            "quadratic",
            2,
            ("quadratic", json!({"q": q, "b": [1.0, -1.0]})),
            Some(("quadratic", json!({"q": [[1.0, -1.0], [-1.0, 2.0]], "b": [-2.0, 3.0]}))),
        ),
        entry("quadratic_singular", 2, ("quadratic", json!({"q": [[1.0, 1.0], [1.0, 1.0]], "b": [1.0, 1.0]})), None),
        entry("l1", 2, ("l1", json!({"weight": 1.5})), Some(("indicator", json!({"set": box2(1.5)})))),
        entry("l2_norm", 3, ("l2_norm", json!({"weight": 2.0})), Some(("indicator", json!({"set": {"kind": "ball", "center": [0.0, 0.0, 0.0], "radius": 2.0}})))),
        entry("indicator_box", 2, ("indicator", json!({"set": box2(1.0)})), Some(("support", json!({"set": box2(1.0)})))),
        entry("indicator_ball", 2, ("indicator", json!({"set": ball})), Some(("support", json!({"set": ball})))),
        entry("indicator_halfspace", 2, ("indicator", json!({"set": half})), Some(("support", json!({"set": half})))),
        entry(
            "indicator_hyperplane",
            2,
            ("indicator", json!({"set": {"kind": "hyperplane", "normal": [3.0, -1.0], "offset": 2.0}})),
            Some(("support", json!({"set": {"kind": "hyperplane", "normal": [3.0, -1.0], "offset": 2.0}}))),
        ),
        entry("indicator_subspace", 2, ("indicator", json!({"set": diag})), Some(("indicator", json!({"set": anti})))),
        entry(
            "indicator_orthant",
            2,
            ("indicator", json!({"set": orthant})),
            Some(("indicator", json!({"set": {"kind": "polar_of", "of": orthant}}))),
        ),
        entry(
            "indicator_soc",
            3,
            ("indicator", json!({"set": soc})),
            Some(("indicator", json!({"set": {"kind": "polar_of", "of": soc}}))),
        ),
        entry("support_ball", 2, ("support", json!({"set": ball})), Some(("indicator", json!({"set": ball})))),
        entry(
            "radial_abs",
            2,
            ("radial", json!({"phi": {"kind": "abs", "weight": 2.0}})),
            Some(("radial", json!({"phi": {"kind": "interval", "radius": 2.0}}))),
        ),
        entry(
            "radial_square",
            3,
            ("radial", json!({"phi": {"kind": "square", "weight": 4.0}})),
            Some(("radial", json!({"phi": {"kind": "square", "weight": 0.25}}))),
        ),
        entry("radial_deadzone", 2, ("radial", json!({"phi": {"kind": "deadzone", "weight": 1.0, "radius": 0.5}})), None),
        entry(
            "radial_plus_support",
            2,
            ("radial_plus_support", json!({"phi": {"kind": "abs", "weight": 1.0}, "set": box2(0.5)})),
            None,
        ),
        entry("norm_plus_cone_indicator", 2, ("norm_plus_cone_indicator", json!({"weight": 1.0, "cone": orthant})), None),
        entry("ball_cone_indicator", 3, ("ball_cone_indicator", json!({"radius": 1.5, "cone": soc})), None),
        entry("complement", 2, ("complement", json!({"of": l1})), Some(("l1", json!({"weight": 1.0})))),
        entry("translate", 2, ("translate", json!({"of": {"kind": "l2_norm", "params": {}}, "shift": [1.0, -2.0]})), None),
        entry("reflect", 2, ("reflect", json!({"of": {"kind": "indicator", "params": {"set": half}}})), None),
        entry("resolvent_of", 2, ("resolvent_of", json!({"of": l1})), None),
        entry("underrelax", 2, ("underrelax", json!({"of": l1, "lambda": 0.5})), None),
        entry(
            "convex_combination",
            2,
            (
                "convex_combination",
                json!({"terms": [
                    {"weight": 0.25, "prox": l1},
                    {"weight": 0.75, "prox": {"kind": "indicator", "params": {"set": ball}}}
                ]}),
            ),
            None,
        ),
        entry(
            "conjugate_by",
            2,
            ("conjugate_by", json!({"of": {"kind": "indicator", "params": {"set": orthant}}, "matrix": [[0.6, -0.8], [0.8, 0.6]]})),
            None,
        ),
        entry(
            "parallel_composition",
            2,
            ("parallel_composition", json!({"matrix": [[2.0, 0.0], [1.0, 1.5]], "of": {"kind": "quadratic", "params": {"q": q, "b": [1.0, 0.0]}}})),
            None,
        ),
        entry(
            "composite_average",
            2,
            (
                "composite_average",
                json!({"terms": [
                    {"weight": 0.5, "matrix": [[1.0, 0.0], [0.0, 1.0]], "inner": {"kind": "indicator", "params": {"set": half}}},
                    {"weight": 0.5, "matrix": [[1.0, 0.0], [0.0, 1.0]], "inner": {"kind": "indicator", "params": {"set": ball}}}
                ]}),
            ),
            None,
        ),
        entry(
            "sum_of_projectors",
            3,
            (
                "sum_of_projectors",
                json!({
                    "first": {"kind": "subspace", "basis": [[1.0, 1.0, 0.0]]},
                    "second": {"kind": "subspace", "basis": [[0.0, 0.0, 1.0]]}
                }),
            ),
            Some(("indicator", json!({"set": {"kind": "subspace", "basis": [[1.0, -1.0, 0.0]]}}))),
        ),
        entry(
            "compose_1d",
            1,
            (
                "compose_1d",
                json!({
                    "outer": {"kind": "l1", "params": {"weight": 0.5}},
                    "inner": {"kind": "indicator", "params": {"set": {"kind": "box", "lower": [-2.0], "upper": [2.0]}}}
                }),
            ),
            None,
        ),
    ]
}
