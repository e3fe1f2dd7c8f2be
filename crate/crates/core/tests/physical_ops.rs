use std::collections::BTreeMap;

use laradb_core::physical::{
    ext_map_stream, merge_agg, merge_join, merge_union, rename_stream, sort_agg, sort_stream, ExecContext,
    JoinOptions, MaterializeOptions, Record, RowStream,
};
use laradb_core::storage::store::Catalog;
use laradb_core::udf::{parse_expr, Builtin, ExtFn, PlusFn, TableauRow, TimesFn};
use laradb_core::{oracle_agg, oracle_ext, oracle_join, oracle_rename, oracle_union};
use laradb_core::{AssociativeTable, LaraError, ScalarType, Schema, Value};
use proptest::prelude::*;

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn ctx() -> (tempfile::TempDir, ExecContext) {
    let dir = tempfile::tempdir().unwrap();
    let c = ExecContext::new(Catalog::open(dir.path()).unwrap()).unwrap();
    (dir, c)
}

fn table(keys: &[&str], rows: &BTreeMap<(i64, i64), i64>) -> AssociativeTable {
    let schema = Schema::build(
        &[(keys[0], ScalarType::Int64), (keys[1], ScalarType::Int64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    );
    let entries = rows
        .iter()
        .map(|(&(x, y), &v)| (vec![Value::Int(x), Value::Int(y)], vec![Value::Int(v)]))
        .collect();
    let mut t = AssociativeTable::with_stored_defaults(schema, entries).unwrap();
    t.canonicalize();
    t
}

fn rows() -> impl Strategy<Value = BTreeMap<(i64, i64), i64>> {
    prop::collection::btree_map((0i64..6, 0i64..6), -3i64..4, 0..30)
}

fn sum() -> Vec<(String, PlusFn)> {
    vec![("v".into(), PlusFn::sum(Value::Int(0), ScalarType::Int64))]
}

fn times() -> Vec<(String, TimesFn)> {
    vec![(
        "v".into(),
        TimesFn::builtin(Builtin::Times, (Value::Int(0), Value::Int(0)), ScalarType::Int64, ScalarType::Int64),
    )]
}

fn same(got: &AssociativeTable, want: &AssociativeTable) {
    let w = want.with_key_order(&got.schema().key_names()).unwrap();
    if let Some(d) = got.diff(&w, 0.0) {
        panic!("{d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_join_matches_oracle(a in rows(), b in rows(), budget in 1usize..4) {
        let (_d, mut c) = ctx();
        c.join_budget = budget;
        let ta = table(&["t", "c"], &a);
        let tb = table(&["c", "d"], &b);
        let sa = RowStream::from_table(&ta, &s(&["c", "t"])).unwrap();
        let sb = RowStream::from_table(&tb, &s(&["c", "d"])).unwrap();
        let out = merge_join(sa, sb, &times(), &JoinOptions::default(), &c).unwrap();
        prop_assert_eq!(out.path(), s(&["c", "t", "d"]));
        let got = out.collect_table().unwrap();
        same(&got, &oracle_join(&ta, &tb, &times()).unwrap());
    }

    #[test]
    fn merge_union_matches_oracle(a in rows(), b in rows()) {
        let (_d, c) = ctx();
        let ta = table(&["t", "c"], &a);
        let tb = table(&["t", "d"], &b);
        let sa = RowStream::from_table(&ta, &s(&["t", "c"])).unwrap();
        let sb = RowStream::from_table(&tb, &s(&["t", "d"])).unwrap();
        let got = merge_union(sa, sb, &sum(), &c).unwrap().collect_table().unwrap();
        same(&got, &oracle_union(&ta, &tb, &sum()).unwrap());
    }

    #[test]
    fn merge_agg_and_sort_agg_match_oracle(a in rows()) {
        let (_d, c) = ctx();
        let ta = table(&["t", "c"], &a);
        let want = oracle_agg(&ta, &s(&["c"]), &sum()).unwrap();
        let sa = RowStream::from_table(&ta, &s(&["c", "t"])).unwrap();
        same(&merge_agg(sa, &s(&["c"]), &sum(), false, &c).unwrap().collect_table().unwrap(), &want);
        let sa = RowStream::from_table(&ta, &s(&["t", "c"])).unwrap();
        let (out, _) = sort_agg(sa, &s(&["c"]), &sum(), "agg", &MaterializeOptions::default(), &c).unwrap();
        same(&out.collect_table().unwrap(), &want);
        let sa = RowStream::from_table(&ta, &s(&["t", "c"])).unwrap();
        let all = merge_agg(sa, &[], &sum(), false, &c).unwrap().collect_table().unwrap();
        same(&all, &oracle_agg(&ta, &[], &sum()).unwrap());
    }

    #[test]
    fn segmented_agg_matches_oracle(a in rows()) {
        let (_d, c) = ctx();
        let ta = table(&["t", "c"], &a);
        let sa = RowStream::from_table(&ta, &s(&["t", "c"])).unwrap();
        let f = ExtFn::new(
            vec![TableauRow { keys: vec![("b".into(), parse_expr("t / 2").unwrap())], vals: vec![("v".into(), parse_expr("v").unwrap())] }],
            vec![],
        ).unwrap();
        // b = t/2 is float division; bins stay monotone in t
        let e = ext_map_stream(sa, &f, None, &c).unwrap();
        prop_assert!(merge_agg(RowStream::from_table(&ta, &s(&["t", "c"])).unwrap(), &s(&["c"]), &sum(), false, &c).is_err());
        let got = merge_agg(e, &s(&["t", "b"]), &sum(), true, &c).unwrap().collect_table().unwrap();
        let want = oracle_agg(&oracle_ext(&ta, &f).unwrap(), &s(&["t", "b"]), &sum()).unwrap();
        same(&got, &want);
    }

    #[test]
    fn sort_and_rename_match_oracle(a in rows(), run_rows in 1usize..5) {
        let (_d, mut c) = ctx();
        c.run_rows = Some(run_rows);
        let ta = table(&["t", "c"], &a);
        let sa = RowStream::from_table(&ta, &s(&["t", "c"])).unwrap();
        let (out, store) = sort_stream(sa, &s(&["c", "t"]), "sort", &MaterializeOptions::default(), &c).unwrap();
        prop_assert_eq!(store.records() as usize, ta.len());
        let out = rename_stream(out, "c", "c2").unwrap();
        let got = out.collect_table().unwrap();
        same(&got, &oracle_rename(&ta, "c", "c2").unwrap());
    }
}

#[test]
fn join_key_filter_skips_products() {
    let (_d, c) = ctx();
    let mut m = BTreeMap::new();
    for i in 0..4 {
        m.insert((0, i), 1);
    }
    let a = table(&["t", "c"], &m);
    let b = oracle_rename(&a, "c", "d").unwrap();
    let opts = JoinOptions {
        key_filter: Some(parse_expr("c <= d").unwrap()),
    };
    let sa = RowStream::from_table(&a, &s(&["t", "c"])).unwrap();
    let sb = RowStream::from_table(&b, &s(&["t", "d"])).unwrap();
    let out = merge_join(sa, sb, &times(), &opts, &c).unwrap().collect_table().unwrap();
    assert_eq!(out.len(), 10);
    assert_eq!(c.metrics.snapshot().partial_products, 10);
}

#[test]
fn join_rejects_misaligned_paths() {
    let (_d, c) = ctx();
    let a = table(&["t", "c"], &BTreeMap::new());
    let b = table(&["c", "d"], &BTreeMap::new());
    let sa = RowStream::from_table(&a, &s(&["t", "c"])).unwrap();
    let sb = RowStream::from_table(&b, &s(&["c", "d"])).unwrap();
    assert!(matches!(
        merge_join(sa, sb, &times(), &JoinOptions::default(), &c),
        Err(LaraError::SortRequired(_))
    ));
}

#[test]
fn out_of_order_input_is_reported() {
    let (_d, c) = ctx();
    let a = table(&["t", "c"], &BTreeMap::new());
    let rec = |t: i64| Ok(Record { key: vec![Value::Int(t), Value::Int(0)], vals: vec![Value::Int(1)] });
    let lying = RowStream::new(a.schema().clone(), Box::new(vec![rec(1), rec(0)].into_iter()));
    let got = merge_agg(lying, &s(&["t"]), &sum(), false, &c).unwrap().collect_table();
    assert!(matches!(got, Err(LaraError::OrderViolation(_))));
}

#[test]
fn annihilator_violation_detected_on_live_data() {
    let (_d, c) = ctx();
    let mut m = BTreeMap::new();
    m.insert((0, 0), 2);
    let a = table(&["t", "c"], &m);
    let b = table(&["t", "d"], &BTreeMap::new());
    let plus = vec![(
        "v".to_string(),
        TimesFn::builtin(Builtin::Sum, (Value::Int(0), Value::Int(0)), ScalarType::Int64, ScalarType::Int64),
    )];
    let sa = RowStream::from_table(&a, &s(&["t", "c"])).unwrap();
    let sb = RowStream::from_table(&b, &s(&["t", "d"])).unwrap();
    let got = merge_join(sa, sb, &plus, &JoinOptions::default(), &c).unwrap().collect_table();
    assert!(matches!(got, Err(LaraError::Property(_))));
}

#[test]
fn sort_agg_needs_commutative_plus() {
    let (_d, c) = ctx();
    let a = table(&["t", "c"], &BTreeMap::new());
    let minus = vec![("v".to_string(), PlusFn::builtin(Builtin::Minus, Value::Int(0), ScalarType::Int64))];
    let sa = RowStream::from_table(&a, &s(&["t", "c"])).unwrap();
    assert!(matches!(
        sort_agg(sa, &s(&["c"]), &minus, "x", &MaterializeOptions::default(), &c),
        Err(LaraError::Plan(_))
    ));
}
