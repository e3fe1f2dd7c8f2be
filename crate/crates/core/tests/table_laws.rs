use std::collections::BTreeMap;

use laradb_core::udf::{Builtin, PlusFn, TimesFn};
use laradb_core::{oracle_agg, oracle_join, oracle_union, AssociativeTable, ScalarType, Schema, Value};
use proptest::prelude::*;

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// Keys are a subset of NAMES in a random order.
#[derive(Clone, Debug)]
struct Input {
    keys: Vec<&'static str>,
    rows: BTreeMap<Vec<i64>, i64>,
}

fn input() -> impl Strategy<Value = Input> {
    (Just(NAMES.to_vec()).prop_shuffle(), 0usize..=3)
        .prop_flat_map(|(names, n)| {
            let keys: Vec<&'static str> = names[..n].to_vec();
            let rows = prop::collection::btree_map(prop::collection::vec(0i64..3, n), -4i64..=4, 0..=8);
            (Just(keys), rows)
        })
        .prop_map(|(keys, rows)| Input { keys, rows })
}

fn table(i: &Input) -> AssociativeTable {
    let k: Vec<(&str, ScalarType)> = i.keys.iter().map(|k| (*k, ScalarType::Int64)).collect();
    let s = Schema::build(&k, &[("v", ScalarType::Int64, Value::Int(0))]);
    let e = i
        .rows
        .iter()
        .map(|(k, v)| (k.iter().map(|x| Value::Int(*x)).collect(), vec![Value::Int(*v)]))
        .collect();
    AssociativeTable::from_entries(s, e).unwrap()
}

fn plus() -> Vec<(String, PlusFn)> {
    vec![("v".into(), PlusFn::sum(Value::Int(0), ScalarType::Int64))]
}

fn times() -> Vec<(String, TimesFn)> {
    vec![(
        "v".into(),
        TimesFn::builtin(Builtin::Times, (Value::Int(0), Value::Int(0)), ScalarType::Int64, ScalarType::Int64),
    )]
}

fn same(got: &AssociativeTable, want: &AssociativeTable) -> Result<(), TestCaseError> {
    let w = want.with_key_order(&got.schema().key_names()).unwrap();
    match got.diff(&w, 0.0) {
        None => Ok(()),
        Some(d) => Err(TestCaseError::fail(d)),
    }
}

fn only(t: &AssociativeTable, keep: &[&str]) -> AssociativeTable {
    let on: Vec<String> = t.schema().key_names().into_iter().filter(|k| keep.contains(&k.as_str())).collect();
    oracle_agg(t, &on, &plus()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn results_are_canonical(a in input(), b in input()) {
        let (a, b) = (table(&a), table(&b));
        for t in [oracle_join(&a, &b, &times()).unwrap(), oracle_union(&a, &b, &plus()).unwrap()] {
            prop_assert!(t.is_canonical());
            prop_assert!(t.iter().all(|(_, v)| v[0] != Value::Int(0)));
        }
    }

    #[test]
    fn union_commutes_and_associates(a in input(), b in input(), c in input()) {
        let (a, b, c) = (table(&a), table(&b), table(&c));
        same(&oracle_union(&a, &b, &plus()).unwrap(), &oracle_union(&b, &a, &plus()).unwrap())?;
        let l = oracle_union(&oracle_union(&a, &b, &plus()).unwrap(), &c, &plus()).unwrap();
        let r = oracle_union(&a, &oracle_union(&b, &c, &plus()).unwrap(), &plus()).unwrap();
        same(&l, &r)?;
    }

    #[test]
    fn join_commutes_and_associates(a in input(), b in input(), c in input()) {
        let (a, b, c) = (table(&a), table(&b), table(&c));
        same(&oracle_join(&a, &b, &times()).unwrap(), &oracle_join(&b, &a, &times()).unwrap())?;
        let l = oracle_join(&oracle_join(&a, &b, &times()).unwrap(), &c, &times()).unwrap();
        let r = oracle_join(&a, &oracle_join(&b, &c, &times()).unwrap(), &times()).unwrap();
        same(&l, &r)?;
    }

    #[test]
    fn join_distributes_over_union(a in input(), b in input(), c in input()) {
        let delta = b.keys.iter().filter(|k| !c.keys.contains(k)).chain(c.keys.iter().filter(|k| !b.keys.contains(k)));
        let ok = delta.into_iter().all(|k| !a.keys.contains(k));
        prop_assume!(ok);
        let (a, b, c) = (table(&a), table(&b), table(&c));
        let l = oracle_join(&a, &oracle_union(&b, &c, &plus()).unwrap(), &times()).unwrap();
        let r = oracle_union(&oracle_join(&a, &b, &times()).unwrap(), &oracle_join(&a, &c, &times()).unwrap(), &plus()).unwrap();
        same(&l, &r)?;
    }

    #[test]
    fn union_pushes_through_join(a in input(), b in input(), c in input()) {
        let cat = |x: &Input, y: &Input| -> Vec<&'static str> { x.keys.iter().chain(&y.keys).copied().collect() };
        let (ka, kb, kc) = (cat(&b, &c), cat(&a, &c), cat(&a, &b));
        let (a, b, c) = (table(&a), table(&b), table(&c));
        let l = oracle_union(&oracle_join(&a, &b, &times()).unwrap(), &c, &plus()).unwrap();
        let inner = oracle_join(&only(&a, &ka), &only(&b, &kb), &times()).unwrap();
        let r = oracle_union(&inner, &only(&c, &kc), &plus()).unwrap();
        same(&l, &r)?;
    }

    #[test]
    fn nested_aggregations_collapse(a in input(), cut in 0usize..=3) {
        let t = table(&a);
        let names = t.schema().key_names();
        let outer: Vec<String> = names.iter().take(cut.min(names.len())).cloned().collect();
        let twice = oracle_agg(&oracle_agg(&t, &names[..names.len().min(cut + 1)], &plus()).unwrap(), &outer, &plus()).unwrap();
        same(&twice, &oracle_agg(&t, &outer, &plus()).unwrap())?;
    }

    #[test]
    fn union_with_empty_is_aggregation(a in input()) {
        let t = table(&a);
        let e = AssociativeTable::empty(t.schema().clone());
        same(&oracle_union(&t, &e, &plus()).unwrap(), &t)?;
    }
}

#[test]
fn distributive_law_fails_when_the_key_condition_does() {
    // A has key a; B has a, C does not, so (kB Δ kC) ∩ kA = {a}
    let a = table(&Input {
        keys: vec!["a"],
        rows: [(vec![0], 1), (vec![1], 1)].into_iter().collect(),
    });
    let b = table(&Input {
        keys: vec!["a"],
        rows: [(vec![0], 1)].into_iter().collect(),
    });
    let c = table(&Input {
        keys: vec![],
        rows: [(vec![], 1)].into_iter().collect(),
    });
    let l = oracle_join(&a, &oracle_union(&b, &c, &plus()).unwrap(), &times()).unwrap();
    let r = oracle_union(&oracle_join(&a, &b, &times()).unwrap(), &oracle_join(&a, &c, &times()).unwrap(), &plus()).unwrap();
    let r = r.with_key_order(&l.schema().key_names());
    assert!(r.is_err() || l.diff(&r.unwrap(), 0.0).is_some());
}
