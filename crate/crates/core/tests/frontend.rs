mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use laradb_core::frontend::{matmul_outer_plan, Builder, LaOp, MatrixView, RaOp, Reduce};
use laradb_core::physical::ExecContext;
use laradb_core::planner::{execute, read_table, LogicalPlan, NodeId, PhysOp};
use laradb_core::storage::store::{Catalog, WriteOptions};
use laradb_core::udf::expr::{BinOp, ScalarExpr};
use laradb_core::udf::func::{Builtin, PlusFn, TimesFn};
use laradb_core::{AssociativeTable, LaraError, ScalarType, Schema, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Dense = Vec<Vec<i64>>;

fn mat_schema(r: &str, c: &str) -> Schema {
    Schema::build(
        &[(r, ScalarType::Int64), (c, ScalarType::Int64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    )
}

fn to_table(m: &Dense, r: &str, c: &str) -> AssociativeTable {
    let mut entries = Vec::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            entries.push((vec![Value::Int(i as i64), Value::Int(j as i64)], vec![Value::Int(x)]));
        }
    }
    AssociativeTable::from_entries(mat_schema(r, c), entries).unwrap()
}

/// Read back as dense, with `r` and `c` naming the row and column keys.
fn to_dense(t: &AssociativeTable, r: &str, c: &str, n: usize, m: usize) -> Dense {
    let t = t.with_key_order(&[r.to_string(), c.to_string()]).unwrap();
    let mut out = vec![vec![0; m]; n];
    for (k, v) in t.iter() {
        let (Value::Int(i), Value::Int(j), Value::Int(x)) = (&k[0], &k[1], &v[0]) else {
            panic!("non-integer entry {k:?} {v:?}")
        };
        out[*i as usize][*j as usize] = *x;
    }
    out
}

fn random(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dense {
    (0..n)
        .map(|_| (0..m).map(|_| if rng.random_bool(0.4) { rng.random_range(-5..=5) } else { 0 }).collect())
        .collect()
}

fn naive_mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0; m]; n];
    for i in 0..n {
        for j in 0..k {
            for l in 0..m {
                c[i][l] += a[i][j] * b[j][l];
            }
        }
    }
    c
}

fn naive_trace(a: &Dense) -> i64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

struct Env {
    schemas: BTreeMap<String, Schema>,
    data: BTreeMap<String, AssociativeTable>,
}

impl Env {
    fn new() -> Env {
        Env {
            schemas: BTreeMap::new(),
            data: BTreeMap::new(),
        }
    }

    fn add(&mut self, name: &str, t: AssociativeTable) {
        self.schemas.insert(name.to_string(), t.schema().clone());
        self.data.insert(name.to_string(), t);
    }

    fn eval(&self, plan: &LogicalPlan, node: NodeId) -> AssociativeTable {
        plan.evaluate_nodes(&self.data).unwrap()[node].clone()
    }
}

fn scalar(t: &AssociativeTable) -> i64 {
    match &t.get(&[])[0] {
        Value::Int(x) => *x,
        v => panic!("not an int scalar: {v}"),
    }
}

#[test]
fn select_keeps_the_window() {
    let mut env = Env::new();
    env.add("s1", fig_data()["s1"].clone());
    let mut b = Builder::new(&env.schemas);
    let a = b.load("s1").unwrap();
    let le = |x: ScalarExpr, y: ScalarExpr| ScalarExpr::binary(BinOp::Le, x, y);
    let pred = ScalarExpr::binary(
        BinOp::And,
        le(ScalarExpr::lit(460i64), ScalarExpr::attr("t")),
        le(ScalarExpr::attr("t"), ScalarExpr::lit(860i64)),
    );
    let s = b.build_ra(RaOp::Select { input: a, pred }).unwrap();
    let out = env.eval(b.plan(), s);
    assert_eq!(out.len(), 5);
    assert!(out.iter().all(|(k, _)| k[0] != Value::Int(440)));
}

#[test]
fn project_onto_everything_is_the_identity() {
    let mut env = Env::new();
    env.add("s1", fig_data()["s1"].clone());
    let mut b = Builder::new(&env.schemas);
    let a = b.load("s1").unwrap();
    let keep = vec!["t".to_string(), "c".to_string(), "v".to_string()];
    let p = b
        .build_ra(RaOp::Project {
            input: a,
            keep,
            plus: vec![],
        })
        .unwrap();
    assert_eq!(p, a);
    assert_eq!(b.plan().nodes.len(), 1);
}

#[test]
fn projecting_away_keys_needs_an_aggregator() {
    let mut env = Env::new();
    env.add("s1", fig_data()["s1"].clone());
    let mut b = Builder::new(&env.schemas);
    let a = b.load("s1").unwrap();
    let keep = vec!["c".to_string(), "v".to_string()];
    let e = b.build_ra(RaOp::Project {
        input: a,
        keep: keep.clone(),
        plus: vec![],
    });
    assert!(matches!(e, Err(LaraError::Schema(_))), "{e:?}");
    let plus = vec![("v".to_string(), PlusFn::sum(Value::Null, ScalarType::Float64))];
    let p = b.build_ra(RaOp::Project { input: a, keep, plus }).unwrap();
    let out = env.eval(b.plan(), p);
    let temp = out.get(&[Value::Str("temp".into())]);
    assert!((temp[0].as_f64().unwrap() - (55.2 + 56.3 + 56.5)).abs() < 1e-9);
}

/// Relations with a count value: keys are attributes, `n` is multiplicity.
fn relation(rng: &mut ChaCha8Rng, k1: &str, k2: &str) -> AssociativeTable {
    let s = Schema::build(
        &[(k1, ScalarType::Int64), (k2, ScalarType::Int64)],
        &[("n", ScalarType::Int64, Value::Int(0))],
    );
    let rows = (0..rng.random_range(0..8))
        .map(|_| {
            let k = vec![Value::Int(rng.random_range(0..4)), Value::Int(rng.random_range(0..4))];
            (k, vec![Value::Int(rng.random_range(1..3))])
        })
        .collect::<BTreeMap<_, _>>();
    AssociativeTable::from_entries(s, rows.into_iter().collect()).unwrap()
}

fn times_n() -> Vec<(String, TimesFn)> {
    let f = TimesFn::builtin(Builtin::Times, (Value::Int(0), Value::Int(0)), ScalarType::Int64, ScalarType::Int64);
    vec![("n".to_string(), f)]
}

fn triples(t: &AssociativeTable, names: [&str; 3]) -> BTreeSet<(i64, i64, i64, i64)> {
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let t = t.with_key_order(&names).unwrap();
    t.iter()
        .map(|(k, v)| {
            let i = |x: &Value| x.as_i64().unwrap();
            (i(&k[0]), i(&k[1]), i(&k[2]), i(&v[0]))
        })
        .collect()
}

#[test]
fn natural_join_matches_nested_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let mut env = Env::new();
        let (r, s) = (relation(&mut rng, "a", "c"), relation(&mut rng, "c2", "d"));
        let mut want = BTreeSet::new();
        for (rk, rv) in r.iter() {
            for (sk, sv) in s.iter() {
                if rk[1] == sk[0] {
                    let i = |x: &Value| x.as_i64().unwrap();
                    want.insert((i(&rk[0]), i(&rk[1]), i(&sk[1]), i(&rv[0]) * i(&sv[0])));
                }
            }
        }
        env.add("r", r);
        env.add("s", s);
        let mut b = Builder::new(&env.schemas);
        let (x, y) = (b.load("r").unwrap(), b.load("s").unwrap());
        let j = b
            .build_ra(RaOp::Join {
                a: x,
                b: y,
                on: vec![("c".into(), "c2".into())],
                times: times_n(),
            })
            .unwrap();
        assert_eq!(triples(&env.eval(b.plan(), j), ["a", "c", "d"]), want);
    }
}

#[test]
fn product_requires_disjoint_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut env = Env::new();
    env.add("r", relation(&mut rng, "a", "c"));
    env.add("s", relation(&mut rng, "c", "d"));
    let mut b = Builder::new(&env.schemas);
    let (x, y) = (b.load("r").unwrap(), b.load("s").unwrap());
    let e = b.build_ra(RaOp::Product {
        a: x,
        b: y,
        times: times_n(),
    });
    assert!(e.is_err());
}

#[test]
fn union_and_aggregate_sum_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let plus = || vec![("n".to_string(), PlusFn::sum(Value::Int(0), ScalarType::Int64))];
    for _ in 0..50 {
        let mut env = Env::new();
        let (r, s) = (relation(&mut rng, "a", "c"), relation(&mut rng, "a", "c"));
        let mut want: BTreeMap<i64, i64> = BTreeMap::new();
        for t in [&r, &s] {
            for (k, v) in t.iter() {
                *want.entry(k[0].as_i64().unwrap()).or_default() += v[0].as_i64().unwrap();
            }
        }
        env.add("r", r);
        env.add("s", s);
        let mut b = Builder::new(&env.schemas);
        let (x, y) = (b.load("r").unwrap(), b.load("s").unwrap());
        let u = b.build_ra(RaOp::Union { a: x, b: y, plus: plus() }).unwrap();
        let g = b
            .build_ra(RaOp::Aggregate {
                input: u,
                on: vec!["a".into()],
                plus: plus(),
            })
            .unwrap();
        let got: BTreeMap<i64, i64> = env
            .eval(b.plan(), g)
            .iter()
            .map(|(k, v)| (k[0].as_i64().unwrap(), v[0].as_i64().unwrap()))
            .collect();
        want.retain(|_, v| *v != 0);
        assert_eq!(got, want);
    }
}

#[test]
fn u_transpose_u_gives_the_covariance_numerators() {
    let s = Schema::build(
        &[("t'", ScalarType::Int64), ("c", ScalarType::Utf8)],
        &[("v", ScalarType::Float64, Value::Float(0.0))],
    );
    let rows = [(460, "temp", 0.4), (460, "hum", 1.2), (520, "temp", -0.4), (520, "hum", -1.2)];
    let entries = rows
        .iter()
        .map(|&(t, c, v)| (vec![Value::Int(t), Value::Str(c.into())], vec![Value::Float(v)]))
        .collect();
    let mut env = Env::new();
    env.add("U", AssociativeTable::from_entries(s, entries).unwrap());
    let mut b = Builder::new(&env.schemas);
    let n = b.load("U").unwrap();
    let u = b.matrix(n, "t'", "c", "v").unwrap();
    let ut = b.build_la(LaOp::Transpose { a: u.clone() }).unwrap().matrix().unwrap();
    let c = b
        .build_la(LaOp::MatMul {
            a: ut,
            b: u,
            plus: Builtin::Sum,
            times: Builtin::Times,
        })
        .unwrap()
        .matrix()
        .unwrap();
    assert_eq!((c.row.as_str(), c.col.as_str()), ("c", "c'"));
    assert_eq!(b.reports.len(), 1, "{:?}", b.reports);
    let out = env.eval(b.plan(), c.node);
    let want = [("temp", "temp", 0.32), ("temp", "hum", 0.96), ("hum", "temp", 0.96), ("hum", "hum", 2.88)];
    assert_eq!(out.len(), 4);
    for (x, y, v) in want {
        let got = out.get(&[Value::Str(x.into()), Value::Str(y.into())])[0].as_f64().unwrap();
        assert!((got - v).abs() < 1e-9, "({x},{y}) = {got}");
    }
}

#[test]
fn double_transpose_is_the_identity() {
    let mut env = Env::new();
    env.add("A", to_table(&vec![vec![1, 2], vec![3, 4]], "i", "j"));
    let mut b = Builder::new(&env.schemas);
    let n = b.load("A").unwrap();
    let a = b.matrix(n, "i", "j", "v").unwrap();
    let t = b.build_la(LaOp::Transpose { a: a.clone() }).unwrap().matrix().unwrap();
    let tt = b.build_la(LaOp::Transpose { a: t }).unwrap().matrix().unwrap();
    assert_eq!(tt, a);
    assert_eq!(b.plan().nodes.len(), 1);
}

/// Matrices stored as `M0`, `M1`, ... with keys i, j.
fn matrices(ms: &[Dense]) -> Env {
    let mut env = Env::new();
    for (n, m) in ms.iter().enumerate() {
        env.add(&format!("M{n}"), to_table(m, "i", "j"));
    }
    env
}

fn load_all<'a>(env: &'a Env, count: usize) -> (Builder<'a>, Vec<MatrixView>) {
    let mut b = Builder::new(&env.schemas);
    let views = (0..count)
        .map(|n| {
            let id = b.load(&format!("M{n}")).unwrap();
            b.matrix(id, "i", "j", "v").unwrap()
        })
        .collect();
    (b, views)
}

#[test]
fn la_operators_match_dense_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let n = rng.random_range(1..=8);
        let (a, c) = (random(&mut rng, n, n), random(&mut rng, n, n));
        let env = matrices(&[a.clone(), c.clone()]);
        let (mut b, v) = load_all(&env, 2);
        let mm = b
            .build_la(LaOp::MatMul {
                a: v[0].clone(),
                b: v[1].clone(),
                plus: Builtin::Sum,
                times: Builtin::Times,
            })
            .unwrap()
            .matrix()
            .unwrap();
        let em = b
            .build_la(LaOp::EwiseMul {
                a: v[0].clone(),
                b: v[1].clone(),
                times: Builtin::Times,
            })
            .unwrap()
            .matrix()
            .unwrap();
        let ea = b
            .build_la(LaOp::EwiseAdd {
                a: v[0].clone(),
                b: v[1].clone(),
                plus: Builtin::Sum,
            })
            .unwrap()
            .matrix()
            .unwrap();
        let sq = b
            .build_la(LaOp::Apply {
                a: v[0].clone(),
                f: ScalarExpr::binary(BinOp::Mul, ScalarExpr::attr("v"), ScalarExpr::attr("v")),
            })
            .unwrap()
            .matrix()
            .unwrap();
        let rows = b
            .build_la(LaOp::Reduce {
                a: v[0].clone(),
                plus: Builtin::Sum,
                keep: Reduce::Rows,
            })
            .unwrap();
        let all = b
            .build_la(LaOp::Reduce {
                a: v[0].clone(),
                plus: Builtin::Sum,
                keep: Reduce::All,
            })
            .unwrap();
        let vals = b.plan().evaluate_nodes(&env.data).unwrap();
        let d = |m: &MatrixView| to_dense(&vals[m.node], &m.row, &m.col, n, n);
        assert_eq!(d(&mm), naive_mul(&a, &c));
        let zip = |f: fn(i64, i64) -> i64| -> Dense {
            (0..n).map(|i| (0..n).map(|j| f(a[i][j], c[i][j])).collect()).collect()
        };
        assert_eq!(d(&em), zip(|x, y| x * y));
        assert_eq!(d(&ea), zip(|x, y| x + y));
        assert_eq!(d(&sq), zip(|x, _| x * x));
        let row_sums: Vec<i64> = a.iter().map(|r| r.iter().sum()).collect();
        let got: Vec<i64> = (0..n).map(|i| vals[rows.node()].get(&[Value::Int(i as i64)])[0].as_i64().unwrap()).collect();
        assert_eq!(got, row_sums);
        assert_eq!(scalar(&vals[all.node()]), row_sums.iter().sum::<i64>());
    }
}

#[test]
fn subref_keeps_selected_rows_and_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let set = |name: &str, idx: &BTreeSet<i64>| {
        let s = Schema::build(&[(name, ScalarType::Int64)], &[("p", ScalarType::Bool, Value::Bool(false))]);
        let e = idx.iter().map(|&x| (vec![Value::Int(x)], vec![Value::Bool(true)])).collect();
        AssociativeTable::from_entries(s, e).unwrap()
    };
    for _ in 0..30 {
        let n = rng.random_range(1..=8);
        let a = random(&mut rng, n, n);
        let pick = |rng: &mut ChaCha8Rng| -> BTreeSet<i64> { (0..n as i64).filter(|_| rng.random_bool(0.5)).collect() };
        let (ri, ci) = (pick(&mut rng), pick(&mut rng));
        let mut env = matrices(&[a.clone()]);
        env.add("I", set("x", &ri));
        env.add("J", set("y", &ci));
        let (mut b, v) = load_all(&env, 1);
        let (i, j) = (b.load("I").unwrap(), b.load("J").unwrap());
        let s = b
            .build_la(LaOp::Subref {
                a: v[0].clone(),
                rows: i,
                cols: j,
            })
            .unwrap()
            .matrix()
            .unwrap();
        let got = to_dense(&env.eval(b.plan(), s.node), "i", "j", n, n);
        let want: Dense = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| if ri.contains(&(r as i64)) && ci.contains(&(c as i64)) { a[r][c] } else { 0 })
                    .collect()
            })
            .collect();
        assert_eq!(got, want);
    }
}

#[test]
fn trace_of_identity_is_its_size() {
    let id: Dense = (0..3).map(|i| (0..3).map(|j| i64::from(i == j)).collect()).collect();
    let env = matrices(&[id]);
    let (mut b, v) = load_all(&env, 1);
    let t = b.trace(&v).unwrap();
    assert_eq!(scalar(&env.eval(b.plan(), t)), 3);
}

#[test]
fn trace_is_invariant_under_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let ms: Vec<Dense> = (0..3).map(|_| random(&mut rng, 6, 6)).collect();
        let env = matrices(&ms);
        let (mut b, v) = load_all(&env, ms.len());
        let abc = b.trace(&v).unwrap();
        let bca = b.trace(&[v[1].clone(), v[2].clone(), v[0].clone()]).unwrap();
        let vals = b.plan().evaluate_nodes(&env.data).unwrap();
        let want = naive_trace(&naive_mul(&naive_mul(&ms[0], &ms[1]), &ms[2]));
        assert_eq!(scalar(&vals[abc]), want);
        assert_eq!(scalar(&vals[bca]), want);
    }
}

#[test]
fn trace_of_product_is_sum_of_hadamard_with_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let n = rng.random_range(1..=8);
        let ms = vec![random(&mut rng, n, n), random(&mut rng, n, n)];
        let env = matrices(&ms);
        let (mut b, v) = load_all(&env, ms.len());
        let tr = b.trace(&v).unwrap();
        let bt = b.build_la(LaOp::Transpose { a: v[1].clone() }).unwrap().matrix().unwrap();
        let h = b
            .build_la(LaOp::EwiseMul {
                a: v[0].clone(),
                b: bt,
                times: Builtin::Times,
            })
            .unwrap()
            .matrix()
            .unwrap();
        let s = b
            .build_la(LaOp::Reduce {
                a: h,
                plus: Builtin::Sum,
                keep: Reduce::All,
            })
            .unwrap();
        let vals = b.plan().evaluate_nodes(&env.data).unwrap();
        let want = naive_trace(&naive_mul(&ms[0], &ms[1]));
        let bt = transpose(&ms[1]);
        let had: i64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| ms[0][i][j] * bt[i][j]).sum();
        assert_eq!(want, had);
        assert_eq!(scalar(&vals[tr]), want);
        assert_eq!(scalar(&vals[s.node()]), want);
    }
}

#[test]
fn join_expands_and_union_reduces_a_vector() {
    let mut env = Env::new();
    env.add("A", to_table(&vec![vec![1, 2], vec![3, 4]], "i", "j"));
    let vs = Schema::build(&[("i", ScalarType::Int64)], &[("v", ScalarType::Int64, Value::Int(0))]);
    let e = vec![(vec![Value::Int(0)], vec![Value::Int(10)]), (vec![Value::Int(1)], vec![Value::Int(20)])];
    env.add("x", AssociativeTable::from_entries(vs, e).unwrap());
    let mut b = Builder::new(&env.schemas);
    let (a, x) = (b.load("A").unwrap(), b.load("x").unwrap());
    let t = TimesFn::builtin(Builtin::Times, (Value::Int(0), Value::Int(0)), ScalarType::Int64, ScalarType::Int64);
    let j = b
        .build_ra(RaOp::Join {
            a,
            b: x,
            on: vec![],
            times: vec![("v".into(), t)],
        })
        .unwrap();
    let u = b
        .build_ra(RaOp::Union {
            a,
            b: x,
            plus: vec![("v".into(), PlusFn::sum(Value::Int(0), ScalarType::Int64))],
        })
        .unwrap();
    assert_eq!(b.schema(j).key_names(), ["i", "j"]);
    assert_eq!(b.schema(u).key_names(), ["i"]);
    let vals = b.plan().evaluate_nodes(&env.data).unwrap();
    assert_eq!(to_dense(&vals[j], "i", "j", 2, 2), vec![vec![10, 20], vec![60, 80]]);
    let u: Vec<i64> = (0..2).map(|i| vals[u].get(&[Value::Int(i)])[0].as_i64().unwrap()).collect();
    assert_eq!(u, [13, 27]);
}

fn outer(a: &Dense, b: &Dense) -> (Dense, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::open(dir.path()).unwrap();
    let path = |x: &str, y: &str| vec![x.to_string(), y.to_string()];
    // A is i×j stored column-major; B is j×k stored row-major
    cat.write_table("A", &to_table(a, "i", "j"), &path("j", "i"), &WriteOptions::default()).unwrap();
    cat.write_table("B", &to_table(b, "j", "k"), &path("j", "k"), &WriteOptions::default()).unwrap();
    let pp = matmul_outer_plan("A", "B", &cat).unwrap();
    assert!(pp.visible().iter().any(|&i| matches!(pp.nodes[i].op, PhysOp::SortAgg { .. })));
    let ctx = ExecContext::new(cat).unwrap();
    execute(&pp, &ctx).unwrap();
    let c = read_table(&ctx.catalog, "C", &ctx).unwrap();
    (to_dense(&c, "i", "k", a.len(), b[0].len()), dir)
}

#[test]
fn outer_product_plan_multiplies() {
    let (c, _d) = outer(&vec![vec![1, 2], vec![3, 4]], &vec![vec![5, 6], vec![7, 8]]);
    assert_eq!(c, vec![vec![19, 22], vec![43, 50]]);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let a = random(&mut rng, 5, 5);
    let id: Dense = (0..5).map(|i| (0..5).map(|j| i64::from(i == j)).collect()).collect();
    assert_eq!(outer(&a, &id).0, a);
    for _ in 0..10 {
        let (n, k, m) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let (a, b) = (random(&mut rng, n, k), random(&mut rng, k, m));
        assert_eq!(outer(&a, &b).0, naive_mul(&a, &b));
    }
}

#[test]
fn outer_product_plan_rejects_row_major_a() {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::open(dir.path()).unwrap();
    let m = vec![vec![1, 2], vec![3, 4]];
    let p = |x: &str, y: &str| vec![x.to_string(), y.to_string()];
    cat.write_table("A", &to_table(&m, "i", "j"), &p("i", "j"), &WriteOptions::default()).unwrap();
    cat.write_table("B", &to_table(&m, "j", "k"), &p("j", "k"), &WriteOptions::default()).unwrap();
    let e = matmul_outer_plan("A", "B", &cat).unwrap_err();
    assert!(e.to_string().contains("sort it to [j,i]"), "{e}");
}
