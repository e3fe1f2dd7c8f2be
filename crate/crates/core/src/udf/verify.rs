//! Randomized checking of the algebraic laws a UDF declares.
//!
//! This is sampling, not proof: a passing report means no counterexample
//! turned up among the sampled points for the given seed.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::schema::Schema;
use crate::udf::func::{BoundBinary, ExtFn, PlusFn, TimesFn};
use crate::value::{ScalarType, Value};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl VerifyConfig {
    pub fn with_samples(samples: usize) -> Self {
        VerifyConfig {
            samples: samples.max(1),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawCheck {
    pub law: String,
    pub passed: bool,
    pub samples: usize,
    pub counterexample: Option<Vec<Value>>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub subject: String,
    pub checks: Vec<LawCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, law: &str) -> Option<&LawCheck> {
        self.checks.iter().find(|c| c.law == law)
    }

    pub fn failures(&self) -> Vec<&LawCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.subject)?;
        for c in &self.checks {
            write!(
                f,
                "  {:<18} {} ({} samples)",
                c.law,
                if c.passed { "pass" } else { "FAIL" },
                c.samples
            )?;
            if let Some(cx) = &c.counterexample {
                let parts: Vec<String> = cx.iter().map(|v| v.to_string()).collect();
                write!(f, " counterexample ({})", parts.join(", "))?;
            }
            if let Some(n) = &c.note {
                write!(f, " [{n}]")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Draws scalar values. Floats are multiples of 1/4 in a small range so
/// float addition on samples is exact and associativity checks are fair.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn value(&mut self, ty: ScalarType) -> Value {
        match ty {
            ScalarType::Int64 => {
                if self.rng.random_bool(0.9) {
                    Value::Int(self.rng.random_range(-10..=10))
                } else {
                    Value::Int(self.rng.random_range(-1000..=1000))
                }
            }
            ScalarType::Float64 => Value::Float(self.rng.random_range(-40..=40) as f64 / 4.0),
            ScalarType::Bool => Value::Bool(self.rng.random_bool(0.5)),
            ScalarType::Utf8 => {
                const WORDS: [&str; 6] = ["", "a", "b", "hum", "temp", "z"];
                Value::str(WORDS[self.rng.random_range(0..WORDS.len())])
            }
        }
    }

    /// Like `value`, but sometimes returns one of `specials`.
    pub fn value_or(&mut self, ty: ScalarType, specials: &[Value]) -> Value {
        if !specials.is_empty() && self.rng.random_bool(0.2) {
            specials[self.rng.random_range(0..specials.len())].clone()
        } else {
            self.value(ty)
        }
    }
}

fn same(ty: ScalarType, a: &Value, b: &Value) -> bool {
    let a = ty.coerce(a.clone()).unwrap_or_else(|_| a.clone());
    let b = ty.coerce(b.clone()).unwrap_or_else(|_| b.clone());
    a == b
}

struct LawRunner {
    law: String,
    samples: usize,
    counterexample: Option<Vec<Value>>,
}

impl LawRunner {
    fn new(law: impl Into<String>) -> Self {
        LawRunner {
            law: law.into(),
            samples: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, args: impl FnOnce() -> Vec<Value>) {
        self.samples += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(args());
        }
    }

    fn done(self) -> LawCheck {
        LawCheck {
            law: self.law,
            passed: self.counterexample.is_none(),
            samples: self.samples,
            counterexample: self.counterexample,
            note: None,
        }
    }
}

fn bind_failure(subject: String, err: impl fmt::Display) -> VerificationReport {
    VerificationReport {
        subject,
        checks: vec![LawCheck {
            law: "well-typed".into(),
            passed: false,
            samples: 0,
            counterexample: None,
            note: Some(err.to_string()),
        }],
    }
}

/// Small deterministic grid first, so simple counterexamples like (1,2,3)
/// are found before random ones.
fn grid_value(ty: ScalarType, i: usize) -> Option<Value> {
    const INTS: [i64; 5] = [1, 2, 3, 0, -1];
    match ty {
        ScalarType::Int64 => INTS.get(i).map(|x| Value::Int(*x)),
        ScalarType::Float64 => INTS.get(i).map(|x| Value::Float(*x as f64)),
        _ => None,
    }
}

/// Checks ⊕'s identity law and every law it declares.
pub fn verify_plus(f: &PlusFn, cfg: VerifyConfig) -> VerificationReport {
    let subject = format!("plus `{}` over {} with identity {}", f.name, f.domain, f.identity);
    let op = match f.bind() {
        Ok(op) => op,
        Err(e) => return bind_failure(subject, e),
    };
    let mut s = Sampler::new(cfg.seed);
    let ty = f.domain;
    let specials = [f.identity.clone()];
    let apply = |a: &Value, b: &Value| op.apply(a, b);

    let mut identity = LawRunner::new("identity");
    for _ in 0..cfg.samples {
        let x = s.value(ty);
        let ok = same(ty, &apply(&x, &f.identity), &x) && same(ty, &apply(&f.identity, &x), &x);
        identity.record(ok, || vec![x.clone(), f.identity.clone()]);
    }
    let mut checks = vec![identity.done()];

    let triples = |s: &mut Sampler, i: usize| -> (Value, Value, Value) {
        match (grid_value(ty, i % 5), grid_value(ty, (i / 5) % 5), grid_value(ty, i / 25)) {
            (Some(a), Some(b), Some(c)) if i < 125 => (a, b, c),
            _ => (
                s.value_or(ty, &specials),
                s.value_or(ty, &specials),
                s.value_or(ty, &specials),
            ),
        }
    };

    if f.associative {
        let mut r = LawRunner::new("associative");
        for i in 0..cfg.samples {
            let (a, b, c) = triples(&mut s, i);
            let l = apply(&apply(&a, &b), &c);
            let rr = apply(&a, &apply(&b, &c));
            r.record(same(ty, &l, &rr), || vec![a.clone(), b.clone(), c.clone()]);
        }
        checks.push(r.done());
    }
    if f.commutative {
        let mut r = LawRunner::new("commutative");
        for i in 0..cfg.samples {
            let (a, b, _) = triples(&mut s, i);
            r.record(same(ty, &apply(&a, &b), &apply(&b, &a)), || vec![a.clone(), b.clone()]);
        }
        checks.push(r.done());
    }
    if f.idempotent {
        let mut r = LawRunner::new("idempotent");
        for _ in 0..cfg.samples {
            let a = s.value_or(ty, &specials);
            r.record(same(ty, &apply(&a, &a), &a), || vec![a.clone()]);
        }
        checks.push(r.done());
    }
    VerificationReport { subject, checks }
}

/// Checks ⊗'s annihilator law, declared commutativity, and distributivity
/// over `plus` when one is given.
pub fn verify_times(f: &TimesFn, plus: Option<&PlusFn>, cfg: VerifyConfig) -> VerificationReport {
    let subject = format!(
        "times `{}` over {} x {} with annihilators ({}, {})",
        f.name, f.left, f.right, f.annihilators.0, f.annihilators.1
    );
    let op = match f.bind() {
        Ok(op) => op,
        Err(e) => return bind_failure(subject, e),
    };
    let out = op.output_type();
    let (za, zb) = f.annihilators.clone();
    let d = op.apply(&za, &zb);
    let mut s = Sampler::new(cfg.seed);

    let mut ann = LawRunner::new("annihilator");
    for _ in 0..cfg.samples {
        let va = s.value(f.left);
        let vb = s.value(f.right);
        let ok = same(out, &op.apply(&za, &vb), &d) && same(out, &op.apply(&va, &zb), &d);
        ann.record(ok, || vec![va.clone(), vb.clone()]);
    }
    let mut checks = vec![ann.done()];

    if f.commutative {
        let mut r = LawRunner::new("commutative");
        if f.left != f.right {
            let mut c = r.done();
            c.passed = false;
            c.note = Some("operand types differ".into());
            checks.push(c);
        } else {
            for _ in 0..cfg.samples {
                let a = s.value(f.left);
                let b = s.value(f.right);
                r.record(same(out, &op.apply(&a, &b), &op.apply(&b, &a)), || {
                    vec![a.clone(), b.clone()]
                });
            }
            checks.push(r.done());
        }
    }

    if let Some(p) = plus {
        checks.push(check_distributes(f, &op, p, &mut s, cfg));
    }
    VerificationReport { subject, checks }
}

fn check_distributes(
    f: &TimesFn,
    op: &BoundBinary,
    p: &PlusFn,
    s: &mut Sampler,
    cfg: VerifyConfig,
) -> LawCheck {
    let law = format!("distributes-over {}", p.name);
    let inner = match p.op.bind(f.right, f.right) {
        Ok(b) => b,
        Err(e) => {
            return LawCheck {
                law,
                passed: false,
                samples: 0,
                counterexample: None,
                note: Some(e.to_string()),
            }
        }
    };
    let outer = match p.op.bind(op.output_type(), op.output_type()) {
        Ok(b) => b,
        Err(e) => {
            return LawCheck {
                law,
                passed: false,
                samples: 0,
                counterexample: None,
                note: Some(e.to_string()),
            }
        }
    };
    let out = outer.output_type();
    let mut r = LawRunner::new(law);
    // small integer grid first: negative values expose max/min failures
    let grid: Vec<i64> = vec![-2, -1, 0, 1, 2];
    let mut n = 0;
    'grid: for a in &grid {
        for b in &grid {
            for c in &grid {
                if n >= cfg.samples {
                    break 'grid;
                }
                n += 1;
                let (Some(a), Some(b), Some(c)) = (
                    f.left.coerce(Value::Int(*a)).ok(),
                    f.right.coerce(Value::Int(*b)).ok(),
                    f.right.coerce(Value::Int(*c)).ok(),
                ) else {
                    continue;
                };
                let l = op.apply(&a, &inner.apply(&b, &c));
                let rr = outer.apply(&op.apply(&a, &b), &op.apply(&a, &c));
                r.record(same(out, &l, &rr), || vec![a.clone(), b.clone(), c.clone()]);
            }
        }
    }
    while n < cfg.samples {
        n += 1;
        let a = s.value(f.left);
        let b = s.value(f.right);
        let c = s.value(f.right);
        let l = op.apply(&a, &inner.apply(&b, &c));
        let rr = outer.apply(&op.apply(&a, &b), &op.apply(&a, &c));
        r.record(same(out, &l, &rr), || vec![a.clone(), b.clone(), c.clone()]);
    }
    r.done()
}

/// Checks that f maps default inputs to empty support and that its output
/// always fits the declared output schema.
pub fn verify_ext(f: &ExtFn, input: &Schema, cfg: VerifyConfig) -> VerificationReport {
    let subject = format!("ext {f} over {input}");
    let b = match f.bind(input) {
        Ok(b) => b,
        Err(e) => return bind_failure(subject, e),
    };
    let mut s = Sampler::new(cfg.seed);
    let defaults = input.defaults();
    let keys = |s: &mut Sampler| -> Vec<Value> { input.keys.iter().map(|k| s.value(k.ty)).collect() };

    let mut empty = LawRunner::new("empty-on-defaults");
    for _ in 0..cfg.samples {
        let k = keys(&mut s);
        let ok = matches!(b.apply(&k, &defaults), Ok(rows) if rows.is_empty());
        empty.record(ok, || k.iter().chain(&defaults).cloned().collect());
    }

    let mut consistent = LawRunner::new("schema-consistent");
    for _ in 0..cfg.samples {
        let k = keys(&mut s);
        let v: Vec<Value> = input
            .values
            .iter()
            .map(|a| s.value_or(a.ty, std::slice::from_ref(a.default_value())))
            .collect();
        let ok = b.apply(&k, &v).is_ok();
        consistent.record(ok, || k.iter().chain(&v).cloned().collect());
    }
    VerificationReport {
        subject,
        checks: vec![empty.done(), consistent.done()],
    }
}

/// Samples ordered pairs k1 < k2 of `key_attr` (other inputs held equal) and
/// checks max f(k1) <= min f(k2) over the emitted new keys.
pub fn check_monotone(
    f: &ExtFn,
    input: &Schema,
    key_attr: &str,
    cfg: VerifyConfig,
) -> VerificationReport {
    let subject = format!("ext {f} monotone in `{key_attr}`");
    let b = match f.bind(input) {
        Ok(b) => b,
        Err(e) => return bind_failure(subject, e),
    };
    let Some(pos) = input.key_index(key_attr) else {
        return bind_failure(subject, format!("`{key_attr}` is not an input key"));
    };
    let ty = input.keys[pos].ty;
    let mut s = Sampler::new(cfg.seed);
    let mut r = LawRunner::new("monotone");
    for i in 0..cfg.samples {
        let (k1, k2) = if i < 20 && ty == ScalarType::Int64 {
            (Value::Int(i as i64 + 1), Value::Int(i as i64 + 2))
        } else {
            let (x, y) = match ty {
                ScalarType::Int64 => (
                    Value::Int(s.rng().random_range(-100_000..100_000)),
                    Value::Int(s.rng().random_range(-100_000..100_000)),
                ),
                ScalarType::Float64 => (
                    Value::Float(s.rng().random_range(-1e5..1e5)),
                    Value::Float(s.rng().random_range(-1e5..1e5)),
                ),
                other => (s.value(other), s.value(other)),
            };
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        };
        let mut key: Vec<Value> = input.keys.iter().map(|k| s.value(k.ty)).collect();
        let vals: Vec<Value> = input.values.iter().map(|a| s.value(a.ty)).collect();
        key[pos] = k1.clone();
        let o1 = b.apply(&key, &vals);
        key[pos] = k2.clone();
        let o2 = b.apply(&key, &vals);
        let ok = match (o1, o2) {
            (Ok(a), Ok(c)) => {
                let hi = a.iter().map(|r| &r.0).max();
                let lo = c.iter().map(|r| &r.0).min();
                match (hi, lo) {
                    (Some(h), Some(l)) => h <= l,
                    _ => true,
                }
            }
            _ => false,
        };
        r.record(ok, || vec![k1.clone(), k2.clone()]);
    }
    let mut c = r.done();
    if !f.monotone_in.iter().any(|m| m == key_attr) {
        c.note = Some(format!("f does not declare monotonicity in `{key_attr}`"));
    }
    VerificationReport {
        subject,
        checks: vec![c],
    }
}

/// Sampled law check used by the rewrite guards: returns the first input on
/// which `pred` fails.
pub fn find_counterexample(
    ty: ScalarType,
    cfg: VerifyConfig,
    specials: &[Value],
    mut pred: impl FnMut(&Value) -> Result<bool>,
) -> Result<Option<Value>> {
    for v in specials {
        if !pred(v)? {
            return Ok(Some(v.clone()));
        }
    }
    let mut s = Sampler::new(cfg.seed);
    for _ in 0..cfg.samples {
        let v = s.value(ty);
        if !pred(&v)? {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udf::func::{BinaryFn, Builtin, TableauRow};
    use crate::udf::parse::parse_expr;

    #[test]
    fn sum_passes() {
        let r = verify_plus(&PlusFn::sum(Value::Float(0.0), ScalarType::Float64), VerifyConfig::default());
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 3);
    }

    #[test]
    fn any_with_null_identity_passes() {
        let r = verify_plus(
            &PlusFn::builtin(Builtin::Any, Value::Null, ScalarType::Int64),
            VerifyConfig::default(),
        );
        assert!(r.passed(), "{r}");
        assert!(r.check("idempotent").unwrap().passed);
    }

    #[test]
    fn minus_declared_associative_fails_on_small_triple() {
        let mut f = PlusFn::builtin(Builtin::Minus, Value::Int(0), ScalarType::Int64);
        f.associative = true;
        let r = verify_plus(&f, VerifyConfig::default());
        let a = r.check("associative").unwrap();
        assert!(!a.passed);
        assert_eq!(
            a.counterexample.as_deref(),
            Some(&[Value::Int(1), Value::Int(1), Value::Int(1)][..])
        );
    }

    #[test]
    fn times_over_max_fails_with_negative() {
        let mut t = TimesFn::builtin(
            Builtin::Times,
            (Value::Int(0), Value::Int(0)),
            ScalarType::Int64,
            ScalarType::Int64,
        );
        t.distributes_over = Some("max".into());
        let max = PlusFn::builtin(Builtin::Max, Value::Int(i64::MIN), ScalarType::Int64);
        let r = verify_times(&t, Some(&max), VerifyConfig::default());
        let c = r.check("distributes-over max").unwrap();
        assert!(!c.passed);
        assert!(c.counterexample.as_ref().unwrap()[0] < Value::Int(0));
    }

    #[test]
    fn constant_new_key_is_weakly_monotone() {
        let schema = Schema::build(
            &[("t", ScalarType::Int64)],
            &[("v", ScalarType::Float64, Value::Null)],
        );
        let f = ExtFn::new(
            vec![TableauRow {
                keys: vec![("k".into(), ScalarExpr::lit(7i64))],
                vals: vec![("v".into(), ScalarExpr::attr("v"))],
            }],
            vec!["t".into()],
        )
        .unwrap();
        assert!(check_monotone(&f, &schema, "t", VerifyConfig::default()).passed());
    }

    #[test]
    fn expression_plus_binds_prime_operand() {
        let f = PlusFn {
            name: "maxish".into(),
            op: BinaryFn::expr("v", parse_expr("if(v >= v', v, v')").unwrap()),
            identity: Value::Int(i64::MIN),
            domain: ScalarType::Int64,
            associative: true,
            commutative: true,
            idempotent: true,
        };
        assert!(verify_plus(&f, VerifyConfig::with_samples(200)).passed());
    }

    use crate::udf::expr::ScalarExpr;
}
