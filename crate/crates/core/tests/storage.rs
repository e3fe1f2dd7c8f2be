use std::collections::BTreeMap;
use std::sync::Arc;

use laradb_core::metrics::Metrics;
use laradb_core::storage::{decode_key, encode_key, Catalog, ValueEncoding, WriteOptions};
use laradb_core::udf::{Builtin, PlusFn};
use laradb_core::{oracle_union, AssociativeTable, ScalarType, Schema, Value};
use proptest::prelude::*;

const TYPES: [ScalarType; 3] = [ScalarType::Int64, ScalarType::Utf8, ScalarType::Float64];

fn key() -> impl Strategy<Value = (i64, String, i64)> {
    (-40i64..40, "[a-c]{0,3}", -8i64..8)
}

fn values(k: &(i64, String, i64)) -> Vec<Value> {
    vec![Value::Int(k.0), Value::str(k.1.clone()), Value::Float(k.2 as f64 / 4.0)]
}

fn schema() -> Schema {
    Schema::build(
        &[("i", ScalarType::Int64), ("s", ScalarType::Utf8), ("f", ScalarType::Float64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    )
}

fn rows() -> impl Strategy<Value = BTreeMap<(i64, String, i64), i64>> {
    prop::collection::btree_map(key(), (1i64..20).prop_map(|v| if v % 2 == 0 { v } else { -v }), 0..120)
}

fn table(rows: &BTreeMap<(i64, String, i64), i64>) -> AssociativeTable {
    let e = rows.iter().map(|(k, v)| (values(k), vec![Value::Int(*v)])).collect();
    AssociativeTable::from_entries(schema(), e).unwrap()
}

fn path() -> Vec<String> {
    ["i", "s", "f"].iter().map(|s| s.to_string()).collect()
}

fn plus() -> Vec<(String, PlusFn)> {
    vec![("v".into(), PlusFn::sum(Value::Int(0), ScalarType::Int64))]
}

fn encodings() -> impl Strategy<Value = ValueEncoding> {
    prop_oneof![Just(ValueEncoding::Text), Just(ValueEncoding::Packed)]
}

fn opts(encoding: ValueEncoding, splits: &[i64], run_rows: usize) -> WriteOptions {
    let mut splits: Vec<i64> = splits.to_vec();
    splits.sort();
    splits.dedup();
    WriteOptions {
        encoding,
        splits: splits.into_iter().map(|s| vec![Value::Int(s)]).collect(),
        run_rows: Some(run_rows),
        ..WriteOptions::default()
    }
}

fn scanned(s: laradb_core::storage::StoreScan) -> Vec<(Vec<Value>, Vec<Value>)> {
    s.collect::<laradb_core::Result<Vec<_>>>().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_preserves_order_and_round_trips(a in key(), b in key()) {
        let (va, vb) = (values(&a), values(&b));
        let (ea, eb) = (encode_key(&va, &TYPES).unwrap(), encode_key(&vb, &TYPES).unwrap());
        prop_assert_eq!(ea.cmp(&eb), va.cmp(&vb));
        prop_assert_eq!(decode_key(&ea, &TYPES).unwrap(), va.clone());
        // a prefix encodes as a byte prefix
        let p = encode_key(&va[..1], &TYPES).unwrap();
        prop_assert!(ea.starts_with(&p));
    }

    #[test]
    fn write_then_scan_round_trips(
        r in rows(),
        enc in encodings(),
        splits in prop::collection::vec(-40i64..40, 0..4),
        run_rows in 1usize..16,
    ) {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let t = table(&r);
        let metrics = Arc::new(Metrics::default());
        let mut o = opts(enc, &splits, run_rows);
        o.metrics = Some(metrics.clone());
        let s = cat.write_table("t", &t, &path(), &o).unwrap();
        prop_assert_eq!(s.records(), r.len() as u64);
        prop_assert!(s.to_table().unwrap().diff(&t, 0.0).is_none());

        let all = scanned(s.scan().unwrap());
        prop_assert!(all.windows(2).all(|w| w[0].0 < w[1].0));
        for (i, p) in s.partitions().iter().enumerate() {
            for (k, _) in scanned(s.scan_partition(i).unwrap()) {
                if let Some(lo) = &p.lower {
                    prop_assert!(k[..lo.len()] >= lo[..]);
                }
                if let Some(hi) = &p.upper {
                    prop_assert!(k[..hi.len()] < hi[..]);
                }
            }
        }
        let reopened = cat.store("t").unwrap();
        prop_assert_eq!(scanned(reopened.scan().unwrap()), all);
    }

    #[test]
    fn range_scan_is_an_inclusive_prefix_filter(
        r in rows(),
        enc in encodings(),
        lo in prop::option::of(-45i64..45),
        hi in prop::option::of(-45i64..45),
        splits in prop::collection::vec(-40i64..40, 0..3),
    ) {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let s = cat.write_table("t", &table(&r), &path(), &opts(enc, &splits, 64)).unwrap();
        let (l, h) = (lo.map(|x| vec![Value::Int(x)]), hi.map(|x| vec![Value::Int(x)]));
        let got: Vec<i64> = scanned(s.scan_range(l.as_deref(), h.as_deref()).unwrap())
            .iter()
            .map(|(k, _)| k[0].as_i64().unwrap())
            .collect();
        let want: Vec<i64> = r
            .keys()
            .map(|k| k.0)
            .filter(|i| lo.is_none_or(|l| *i >= l) && hi.is_none_or(|h| *i <= h))
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn two_component_bounds_cut_inside_a_group(r in rows(), i in -40i64..40, s0 in "[a-c]{0,3}") {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let s = cat.write_table("t", &table(&r), &path(), &opts(ValueEncoding::Packed, &[], 64)).unwrap();
        let b = vec![Value::Int(i), Value::str(s0.clone())];
        let got = scanned(s.scan_range(Some(&b), Some(&b)).unwrap()).len();
        let want = r.keys().filter(|k| k.0 == i && k.1 == s0).count();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn parallel_partition_scans_cover_the_full_scan(
        r in rows(),
        splits in prop::collection::vec(-40i64..40, 0..6),
        threads in prop::option::of(1usize..4),
    ) {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let s = cat.write_table("t", &table(&r), &path(), &opts(ValueEncoding::Packed, &splits, 8)).unwrap();
        let parts = s
            .scan_partitions_parallel(threads, |_, scan| scan.collect::<laradb_core::Result<Vec<_>>>())
            .unwrap();
        prop_assert_eq!(parts.len(), s.partitions().len());
        let joined: Vec<_> = parts.into_iter().flatten().collect();
        prop_assert_eq!(joined, scanned(s.scan().unwrap()));
    }

    #[test]
    fn choose_splits_balances_without_changing_contents(r in rows(), target in 1usize..6) {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let t = table(&r);
        let mut s = cat.write_table("t", &t, &path(), &opts(ValueEncoding::Text, &[], 64)).unwrap();
        let splits = s.choose_splits(target).unwrap();
        prop_assert!(splits.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(s.partitions().len(), splits.len() + 1);
        prop_assert!(s.to_table().unwrap().diff(&t, 0.0).is_none());
        if r.len() >= target {
            // all keys are distinct, so the cuts land at i*n/parts exactly
            let n = r.len() as u64;
            let want = n.div_ceil(target as u64) + 1;
            prop_assert!(s.partitions().iter().all(|p| p.records() <= want), "{:?}", s.partitions());
        }
    }

    #[test]
    fn appended_runs_compact_to_the_union(
        base in rows(),
        more in prop::collection::vec(rows(), 1..3),
        splits in prop::collection::vec(-40i64..40, 0..3),
    ) {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let mut want = table(&base);
        let mut s = cat.write_table("t", &want, &path(), &opts(ValueEncoding::Packed, &splits, 16)).unwrap();
        for m in &more {
            let t = table(m);
            s.append_run(t.entries()).unwrap();
            want = oracle_union(&want, &t, &plus()).unwrap();
        }
        s.compact_with_agg(&plus()).unwrap();
        prop_assert!(s.partitions().iter().all(|p| p.runs.len() <= 1));
        let got = s.to_table().unwrap();
        prop_assert!(got.diff(&want, 0.0).is_none(), "{:?}", got.diff(&want, 0.0));
    }

    #[test]
    fn combiner_folds_duplicate_keys(
        entries in prop::collection::vec((key(), -5i64..5), 0..80),
        run_rows in 1usize..10,
    ) {
        let d = tempfile::tempdir().unwrap();
        let cat = Catalog::open(d.path()).unwrap();
        let mut sums: BTreeMap<(i64, String, i64), i64> = BTreeMap::new();
        for (k, v) in &entries {
            *sums.entry(k.clone()).or_default() += v;
        }
        sums.retain(|_, v| *v != 0);
        let o = WriteOptions {
            combiner: Some(plus()),
            run_rows: Some(run_rows),
            ..WriteOptions::default()
        };
        let recs = entries.iter().map(|(k, v)| (values(k), vec![Value::Int(*v)]));
        let s = cat.sort_write("t", &schema(), &path(), recs, &o).unwrap();
        prop_assert!(s.to_table().unwrap().diff(&table(&sums), 0.0).is_none());
    }
}

#[test]
fn duplicate_keys_without_a_combiner_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cat = Catalog::open(d.path()).unwrap();
    let k = values(&(1, "a".into(), 0));
    let recs = vec![(k.clone(), vec![Value::Int(1)]), (k, vec![Value::Int(2)])];
    assert!(cat.sort_write("t", &schema(), &path(), recs, &WriteOptions::default()).is_err());
    assert!(!cat.exists("t"));
}

#[test]
fn compaction_refuses_a_non_associative_plus() {
    let d = tempfile::tempdir().unwrap();
    let cat = Catalog::open(d.path()).unwrap();
    let mut s = cat.write_table("t", &table(&BTreeMap::new()), &path(), &WriteOptions::default()).unwrap();
    let minus = vec![("v".to_string(), PlusFn::builtin(Builtin::Minus, Value::Int(0), ScalarType::Int64))];
    assert!(s.compact_with_agg(&minus).is_err());
}

#[test]
fn stores_are_permuted_to_the_requested_path() {
    let d = tempfile::tempdir().unwrap();
    let cat = Catalog::open(d.path()).unwrap();
    let r: BTreeMap<_, _> = [((2, "a".to_string(), 0), 1), ((1, "b".to_string(), 0), 2)].into_iter().collect();
    let p: Vec<String> = ["s", "i", "f"].iter().map(|s| s.to_string()).collect();
    let s = cat.write_table("t", &table(&r), &p, &WriteOptions::default()).unwrap();
    assert_eq!(s.path(), p);
    let first: Vec<Value> = scanned(s.scan().unwrap()).into_iter().map(|(k, _)| k[0].clone()).collect();
    assert_eq!(first, [Value::str("a"), Value::str("b")]);
}
