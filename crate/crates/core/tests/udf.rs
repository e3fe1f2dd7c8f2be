use laradb_core::udf::{verify_plus, verify_times, Builtin, PlusFn, TimesFn, VerifyConfig};
use laradb_core::{ScalarType, Value};
use proptest::prelude::*;

fn int_or_null() -> impl Strategy<Value = Value> {
    prop_oneof![1 => Just(Value::Null), 4 => (-50i64..50).prop_map(Value::Int)]
}

const FOLDS: [Builtin; 3] = [Builtin::Sum, Builtin::Max, Builtin::Min];

proptest! {
    #[test]
    fn builtin_folds_obey_their_laws(a in int_or_null(), b in int_or_null(), c in int_or_null()) {
        for op in FOLDS {
            prop_assert_eq!(op.apply(&a, &b), op.apply(&b, &a));
            prop_assert_eq!(op.apply(&op.apply(&a, &b), &c), op.apply(&a, &op.apply(&b, &c)));
            // null is the identity of every fold
            prop_assert_eq!(op.apply(&a, &Value::Null), a.clone());
        }
        prop_assert_eq!(Builtin::Max.apply(&a, &a), a.clone());
        prop_assert!(Builtin::Times.apply(&Value::Null, &b).is_null());
    }

    #[test]
    fn times_distributes_over_sum(a in -50i64..50, b in -50i64..50, c in -50i64..50) {
        let (a, b, c) = (Value::Int(a), Value::Int(b), Value::Int(c));
        let (t, s) = (Builtin::Times, Builtin::Sum);
        prop_assert_eq!(t.apply(&a, &s.apply(&b, &c)), s.apply(&t.apply(&a, &b), &t.apply(&a, &c)));
    }
}

#[test]
fn standard_plus_functions_verify() {
    let cfg = VerifyConfig::with_samples(300);
    for (op, id, ty) in [
        (Builtin::Sum, Value::Int(0), ScalarType::Int64),
        (Builtin::Sum, Value::Float(0.0), ScalarType::Float64),
        (Builtin::Max, Value::Null, ScalarType::Float64),
        (Builtin::Min, Value::Null, ScalarType::Int64),
        (Builtin::Or, Value::Bool(false), ScalarType::Bool),
        (Builtin::And, Value::Bool(true), ScalarType::Bool),
    ] {
        let r = verify_plus(&PlusFn::builtin(op, id, ty), cfg);
        assert!(r.passed(), "{r}");
    }
}

#[test]
fn wrong_identity_is_caught() {
    let r = verify_plus(&PlusFn::builtin(Builtin::Max, Value::Int(0), ScalarType::Int64), VerifyConfig::default());
    let c = r.check("identity").unwrap();
    assert!(!c.passed);
    assert!(c.counterexample.is_some());
}

#[test]
fn false_law_claims_are_caught() {
    let mut minus = PlusFn::builtin(Builtin::Minus, Value::Int(0), ScalarType::Int64);
    minus.associative = true;
    minus.commutative = true;
    let r = verify_plus(&minus, VerifyConfig::default());
    assert!(!r.check("associative").unwrap().passed);
    assert!(!r.check("commutative").unwrap().passed);

    let mut any = PlusFn::builtin(Builtin::Any, Value::Null, ScalarType::Int64);
    any.commutative = true;
    assert!(!verify_plus(&any, VerifyConfig::default()).passed());
}

#[test]
fn times_annihilates_and_distributes_over_sum() {
    let t = TimesFn::builtin(Builtin::Times, (Value::Int(0), Value::Int(0)), ScalarType::Int64, ScalarType::Int64);
    let sum = PlusFn::sum(Value::Int(0), ScalarType::Int64);
    let r = verify_times(&t, Some(&sum), VerifyConfig::default());
    assert!(r.passed(), "{r}");

    let bad = TimesFn::builtin(Builtin::Times, (Value::Int(1), Value::Int(1)), ScalarType::Int64, ScalarType::Int64);
    assert!(!verify_times(&bad, None, VerifyConfig::default()).check("annihilator").unwrap().passed);
}
