mod common;

use common::*;
use laradb_core::physical::ExecContext;
use laradb_core::planner::{execute, lower, optimize, parse_plan, read_outputs, RuleOptions, PRIORITY};
use laradb_core::storage::store::Catalog;

#[test]
fn sensor_plan_executes_like_the_oracle() {
    let data = fig_data();
    let lp = parse_plan(SENSOR, &sensors()).unwrap();
    let want = lp.evaluate(&data).unwrap();
    for optimized in [false, true] {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        write_all(&cat, &data);
        let mut pp = lower(&lp).unwrap();
        if optimized {
            optimize(&mut pp, &PRIORITY, RuleOptions::default());
        }
        let ctx = ExecContext::new(cat).unwrap();
        let rep = execute(&pp, &ctx).unwrap();
        eprintln!("{:?}", rep.stored);
        let got = read_outputs(&pp, &ctx).unwrap();
        for (name, t) in &want {
            if let Some(d) = got[name].diff(t, 1e-9) {
                panic!("optimized={optimized} {name}: {d}");
            }
        }
    }
}
