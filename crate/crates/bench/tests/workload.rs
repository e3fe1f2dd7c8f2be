use laradb_bench::gen::{gen_sensor_data, SensorGenConfig};
use laradb_bench::workload::{matmul_table, run_matmul_bench, run_sensor_pipeline, same_outputs, sensor_table};
use laradb_core::physical::ExecContext;
use laradb_core::planner::{Rule, PRIORITY};
use laradb_core::storage::store::Catalog;

fn ctx() -> (tempfile::TempDir, ExecContext) {
    let d = tempfile::tempdir().unwrap();
    let c = ExecContext::new(Catalog::open(d.path()).unwrap()).unwrap();
    (d, c)
}

fn sensor_ctx() -> (tempfile::TempDir, ExecContext) {
    let (d, c) = ctx();
    let cfg = SensorGenConfig {
        // the plan looks at t in 460..=860
        span: 1200,
        mean_gap: 7.0,
        rate_spread: 0.3,
        segment: 300,
        ..SensorGenConfig::default()
    };
    gen_sensor_data(&cfg, &c.catalog).unwrap();
    (d, c)
}

#[test]
fn every_rule_set_gives_the_same_m_and_c() {
    let (_d, ctx) = sensor_ctx();
    let mut reports = Vec::new();
    for rules in [vec![], vec![Rule::F], vec![Rule::M], vec![Rule::S], vec![Rule::A], vec![Rule::D], PRIORITY.to_vec()] {
        reports.push(run_sensor_pipeline(&ctx, &rules).unwrap());
    }
    same_outputs(&reports, 1e-9).unwrap();
    let c = &reports[0].outputs["C"];
    // upper triangle of 2 classes
    assert_eq!(c.len(), 3);
    assert_eq!(reports[0].outputs["M"].len(), 2);
    let (text, tsv) = sensor_table(&reports);
    assert_eq!(text.lines().count(), 8);
    assert!(tsv.starts_with("rules\tseconds\tscan->X\tX->U\tU->C\t"));
}

#[test]
fn rule_a_materializes_fewer_tuples() {
    let (_d, ctx) = sensor_ctx();
    let off = run_sensor_pipeline(&ctx, &[]).unwrap();
    let on = run_sensor_pipeline(&ctx, &[Rule::A]).unwrap();
    assert!(
        on.metrics.tuples_materialized < off.metrics.tuples_materialized,
        "{} vs {}",
        on.metrics.tuples_materialized,
        off.metrics.tuples_materialized
    );
}

#[test]
fn segments_cover_the_whole_plan() {
    let (_d, ctx) = sensor_ctx();
    let r = run_sensor_pipeline(&ctx, &[]).unwrap();
    let names: Vec<&str> = r.segments.iter().map(|s| s.name).collect();
    assert_eq!(names, ["scan->X", "X->U", "U->C"]);
    assert!(r.segments.iter().all(|s| s.records > 0), "{:?}", r.segments);
    assert!(r.segments.iter().map(|s| s.time).sum::<std::time::Duration>() <= r.elapsed);
}

#[test]
fn matmul_matches_the_oracle_and_predicted_products() {
    let (_d, ctx) = ctx();
    let rows = run_matmul_bench(&ctx, &[5, 6], &[Rule::A, Rule::D], 3).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.correct, Some(true));
        assert_eq!((r.nnz_a, r.nnz_b), (16 << r.scale, 16 << r.scale));
        let measured = r.metrics.partial_products as f64;
        let predicted = r.predicted_products as f64;
        assert!((measured - predicted).abs() <= 0.01 * predicted, "{measured} vs {predicted}");
    }
    let (text, tsv) = matmul_table(&rows);
    assert_eq!(text.lines().count(), 3);
    assert_eq!(tsv.lines().next().unwrap().split('\t').count(), 10);
}

#[test]
fn empty_scale_list_gives_empty_report() {
    let (_d, ctx) = ctx();
    assert!(run_matmul_bench(&ctx, &[], &PRIORITY, 1).unwrap().is_empty());
}

#[test]
fn matmul_without_a_materializes_more() {
    let (_d, ctx) = ctx();
    let with = run_matmul_bench(&ctx, &[6], &[Rule::A], 2).unwrap();
    let without = run_matmul_bench(&ctx, &[6], &[], 2).unwrap();
    assert_eq!(with[0].correct, Some(true));
    assert_eq!(without[0].correct, Some(true));
    assert!(with[0].metrics.tuples_materialized < without[0].metrics.tuples_materialized);
}
