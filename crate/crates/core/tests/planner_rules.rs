mod common;

use std::collections::BTreeMap;

use common::*;
use laradb_core::physical::ExecContext;
use laradb_core::planner::{
    apply_rewrite, execute, explain, lower, optimize, parse_plan, read_outputs, read_table, Label, PhysOp, PhysicalPlan,
    Rule, RuleOptions, PRIORITY,
};
use laradb_core::storage::store::Catalog;
use laradb_core::{AssociativeTable, LaraError, ScalarType, Schema, Value};

fn sensor_physical() -> PhysicalPlan {
    lower(&parse_plan(SENSOR, &sensors()).unwrap()).unwrap()
}

fn line(plan: &PhysicalPlan, name: &str) -> (String, Vec<String>) {
    let id = plan
        .visible()
        .into_iter()
        .find(|&i| plan.nodes[i].name == name && !matches!(plan.nodes[i].op, PhysOp::Store { .. }))
        .unwrap_or_else(|| panic!("no visible node {name}"));
    (plan.nodes[id].label.to_string(), plan.path(id))
}

fn p(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn sensor_lowering_places_sorts_and_paths() {
    let pp = sensor_physical();
    let sorts: Vec<String> = pp.sort_labels().iter().map(Label::to_string).collect();
    assert_eq!(sorts, ["3.5", "10.5", "14.5", "16.5"]);
    let want: &[(&str, &str, &[&str])] = &[
        ("A", "1", &["t", "c"]),
        ("A1", "2", &["t", "c"]),
        ("A2", "3", &["t", "c", "t'"]),
        ("A20", "3.5", &["t'", "c", "t"]),
        ("A3", "4", &["t'", "c"]),
        ("A'", "5", &["t'", "c"]),
        ("B'", "6", &["t'", "c"]),
        ("X", "7", &["t'", "c"]),
        ("X1", "8", &["t'", "c"]),
        ("X2", "9", &["t'"]),
        ("N", "10", &[]),
        ("X0", "10.5", &["c", "t'"]),
        ("X3", "11", &["c", "t'"]),
        ("X4", "12", &["c"]),
        ("M", "13", &["c"]),
        ("U", "14", &["c", "t'"]),
        ("U0", "14.5", &["t'", "c"]),
        ("U1", "15", &["t'", "c'"]),
        ("U2", "16", &["t'", "c", "c'"]),
        ("U20", "16.5", &["c", "c'", "t'"]),
        ("U3", "17", &["c", "c'"]),
        ("C", "18", &["c", "c'"]),
    ];
    for (name, label, path) in want {
        assert_eq!(line(&pp, name), (label.to_string(), p(path)), "{name}");
    }
    // 18 numbered lines, 2 stores and 4 sorts
    assert_eq!(explain(&pp, None).lines().count(), 24);
}

#[test]
fn sensor_rules_eliminate_and_fuse() {
    let mut pp = sensor_physical();
    let rep = optimize(&mut pp, &PRIORITY, RuleOptions::default());
    let fired: Vec<Rule> = rep.applied.iter().map(|o| o.rule).collect();
    for r in [Rule::F, Rule::M, Rule::S, Rule::A, Rule::D, Rule::E] {
        assert!(fired.contains(&r), "{r} did not fire: {rep}");
    }
    let sorts: Vec<String> = pp.sort_labels().iter().map(Label::to_string).collect();
    assert_eq!(sorts, ["10.5", "14.5"]);
    let text = explain(&pp, None);
    assert!(text.contains("A = Load 's1' from 460 to 860"), "{text}");
    assert!(text.contains("U3 = SortAgg U2 to [c,c'] by [v: +]"), "{text}");
    assert!(!text.contains("A20"), "{text}");
}

#[test]
fn empty_rule_set_changes_nothing() {
    let mut pp = sensor_physical();
    let before = explain(&pp, None);
    let rep = optimize(&mut pp, &[], RuleOptions::default());
    assert!(rep.applied.is_empty());
    assert_eq!(explain(&pp, None), before);
}

#[test]
fn fixpoint_terminates_within_bound() {
    let mut pp = sensor_physical();
    let n = pp.nodes.len();
    let rep = optimize(&mut pp, &PRIORITY, RuleOptions::default());
    assert!(rep.iterations <= n * PRIORITY.len(), "{}", rep.iterations);
    // a second pass finds nothing left to do
    assert!(optimize(&mut pp, &PRIORITY, RuleOptions::default()).applied.is_empty());
}

fn matrix_tables() -> BTreeMap<String, Schema> {
    let a = Schema::build(
        &[("j", ScalarType::Int64), ("i", ScalarType::Int64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    );
    let b = Schema::build(
        &[("j", ScalarType::Int64), ("k", ScalarType::Int64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    );
    [("a".to_string(), a), ("b".to_string(), b)].into_iter().collect()
}

#[test]
fn matmul_lowering_sorts_once_before_the_aggregation() {
    let text = "A = LOAD 'a'\nB = LOAD 'b'\nP = JOIN A, B BY [v: *]\nC = AGG P ON i, k BY [v: +]\nSTORE C\n";
    let pp = lower(&parse_plan(text, &matrix_tables()).unwrap()).unwrap();
    assert_eq!(line(&pp, "P"), ("3".into(), p(&["j", "i", "k"])));
    assert_eq!(line(&pp, "P0"), ("3.5".into(), p(&["i", "k", "j"])));
    assert_eq!(pp.sort_labels().len(), 1);
}

#[test]
fn presorted_plan_needs_no_sorts() {
    let text = "A = LOAD 'a'\nB = LOAD 'b'\nP = JOIN A, B BY [v: *]\nQ = AGG P ON j BY [v: +]\nSTORE Q\n";
    let pp = lower(&parse_plan(text, &matrix_tables()).unwrap()).unwrap();
    assert!(pp.sort_labels().is_empty());
}

#[test]
fn rule_a_reports_noncommutative_plus() {
    let text = "A = LOAD 'a'\nC = AGG A ON i BY [v: -]\nSTORE C\n";
    let mut pp = lower(&parse_plan(text, &matrix_tables()).unwrap()).unwrap();
    let o = apply_rewrite(&mut pp, Rule::A, RuleOptions::default());
    assert!(!o.applied);
    assert!(o.detail.contains("not associative and commutative"), "{o}");
}

#[test]
fn z_map_guard_blocks_f0_not_zero() {
    let text = "A = LOAD 'a'\nB = MAP A BY [v: v + 1]\nC = MAP B BY [v: ntz(v)]\nSTORE C\n";
    let mut pp = lower(&parse_plan(text, &matrix_tables()).unwrap()).unwrap();
    let o = apply_rewrite(&mut pp, Rule::ZMap, RuleOptions::default());
    assert!(!o.applied);
    assert!(o.detail.contains("f(0)"), "{o}");
}

#[test]
fn rule_m_needs_a_declared_monotone_ext() {
    let text = "A = LOAD 'a'\nE = EXT A BY {KEYS [h: j / 2] VALS [v: v]}\nG = AGG E ON h, i BY [v: +]\nSTORE G\n";
    let mut pp = lower(&parse_plan(text, &matrix_tables()).unwrap()).unwrap();
    let o = apply_rewrite(&mut pp, Rule::M, RuleOptions::default());
    assert!(!o.applied);
    assert!(o.detail.contains("not declared monotone"), "{o}");
}

fn run(pp: &PhysicalPlan, data: &BTreeMap<String, AssociativeTable>) -> (ExecContext, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::open(dir.path()).unwrap();
    write_all(&cat, data);
    let ctx = ExecContext::new(cat).unwrap();
    execute(pp, &ctx).unwrap();
    (ctx, dir)
}

#[test]
fn deferred_view_goes_stale_when_its_base_changes() {
    let mut pp = sensor_physical();
    optimize(&mut pp, &[Rule::D], RuleOptions::default());
    let (ctx, _d) = run(&pp, &fig_data());
    assert_eq!(ctx.catalog.store("M").unwrap().records(), 0);
    let m = read_table(&ctx.catalog, "M", &ctx).unwrap();
    assert_eq!(m.len(), 2);
    let mut base = ctx.catalog.store("M@X0").unwrap();
    let row = (vec![Value::Str("temp".into()), Value::Int(400)], vec![Value::Float(1.0)]);
    base.append_run(vec![row]).unwrap();
    assert!(matches!(read_table(&ctx.catalog, "M", &ctx), Err(LaraError::StaleView(_))));
}

#[test]
fn upper_triangle_halves_partial_products() {
    let dense = |scale: f64| -> Vec<(i64, &'static str, f64)> {
        (0..8)
            .flat_map(|t| {
                ["a", "b", "c", "d", "e"]
                    .into_iter()
                    .enumerate()
                    .map(move |(i, c)| (460 + 60 * t, c, scale * (t * t) as f64 + i as f64))
            })
            .collect()
    };
    let mut data = BTreeMap::new();
    data.insert("s1".to_string(), readings(&dense(1.0)));
    data.insert("s2".to_string(), readings(&dense(0.5)));
    let classes = 5u64;
    let mut products = Vec::new();
    let mut outputs = Vec::new();
    for rules in [vec![], vec![Rule::S]] {
        let mut pp = sensor_physical();
        optimize(&mut pp, &rules, RuleOptions::default());
        let (ctx, _d) = run(&pp, &data);
        products.push(ctx.metrics.snapshot().partial_products);
        outputs.push(read_outputs(&pp, &ctx).unwrap());
    }
    assert!(outputs[0]["C"].diff(&outputs[1]["C"], 1e-9).is_none());
    // the U self-join runs once per bin; every other join product is unaffected
    let full_self = 8 * classes * classes;
    let half_self = 8 * (classes * (classes + 1) / 2);
    assert_eq!(products[0] - products[1], full_self - half_self);
}
