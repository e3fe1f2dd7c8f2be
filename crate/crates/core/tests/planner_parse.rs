use laradb_core::planner::{parse_plan, LogicalOp};
use laradb_core::Value;

mod common;
use common::*;

#[test]
fn sensor_plan_parses() {
    let p = parse_plan(SENSOR, &sensors()).unwrap();
    for n in &p.nodes {
        eprintln!("{} {} {:?} {}", n.label, n.name, n.hidden, n.schema);
    }
    assert_eq!(p.stores().len(), 2);
    let n = p.find("N").unwrap();
    assert!(p.schema(n).keys.is_empty());
    assert!(matches!(p.node(n).op, LogicalOp::Agg { .. }));
}

#[test]
fn sensor_plan_reference_values() {
    let p = parse_plan(SENSOR, &sensors()).unwrap();
    let data = fig_data();
    let out = p.evaluate(&data).unwrap();
    let get = |t: &str, k: &[&str]| {
        let key: Vec<Value> = k.iter().map(|s| Value::Str(s.to_string())).collect();
        out[t].get(&key)[0].as_f64().unwrap()
    };
    assert!((get("M", &["temp"]) + 3.55).abs() < 1e-9);
    assert!((get("M", &["hum"]) - 0.4).abs() < 1e-9);
    // U's temp residuals are +-0.45 before rounding
    assert!((get("C", &["temp", "temp"]) - 0.405).abs() < 1e-9);
    assert!((get("C", &["hum", "temp"]) - 1.08).abs() < 1e-9);
    assert!((get("C", &["hum", "hum"]) - 2.88).abs() < 1e-9);
    assert_eq!(out["C"].len(), 3);
}

#[test]
fn sensor_plan_lowering() {
    let p = parse_plan(SENSOR, &sensors()).unwrap();
    let pp = laradb_core::planner::lower(&p).unwrap();
    eprintln!("{}", laradb_core::planner::explain(&pp, None));
}

#[test]
fn sensor_plan_optimized() {
    use laradb_core::planner::{explain, lower, optimize, Rule, RuleOptions, PRIORITY};
    let p = parse_plan(SENSOR, &sensors()).unwrap();
    let mut pp = lower(&p).unwrap();
    let rep = optimize(&mut pp, &PRIORITY, RuleOptions::default());
    eprintln!("{}\n{rep}", explain(&pp, None));
    let _ = Rule::A;
}
