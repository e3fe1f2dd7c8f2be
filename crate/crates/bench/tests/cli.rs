use std::fs;
use std::path::Path;

use laradb_bench::cli::{parse_cell, parse_schema_spec, run};
use laradb_core::planner::read_table;
use laradb_core::physical::ExecContext;
use laradb_core::storage::store::Catalog;
use laradb_core::{ScalarType, Value};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn laradb(dir: &Path, args: &[&str]) -> Out {
    let mut argv = vec!["laradb".to_string(), "--data-dir".into(), dir.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(argv, &mut o, &mut e);
    Out {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

const PLAN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/plans/sensor.lara");

fn write_sensor_csvs(dir: &Path) {
    fs::write(
        dir.join("s1.csv"),
        "t:int,c:str,v:float\n440,hum,38.6\n466,temp,55.2\n466,hum,40.1\n492,temp,56.3\n492,hum,35.0\n528,temp,56.5\n",
    )
    .unwrap();
    fs::write(
        dir.join("s2.csv"),
        "t,c,v\n470,temp,58.3\n461,hum,38.5\n515,temp,60.4\n530,hum,35.8\n",
    )
    .unwrap();
}

fn ingest_sensors(data: &Path, csvs: &Path) {
    let s1 = csvs.join("s1.csv").display().to_string();
    let o = laradb(data, &["ingest", &s1, "--table", "s1", "--keys", "t,c"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let s2 = csvs.join("s2.csv").display().to_string();
    let o = laradb(data, &["ingest", &s2, "--table", "s2", "--schema", "t:int, c:str -> v:float=null", "--partitions", "2"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("s2: 4 records, 2 partitions"), "{}", o.stdout);
}

#[test]
fn catalog_ls_on_empty_dir_is_empty() {
    let d = tempfile::tempdir().unwrap();
    let o = laradb(d.path(), &["catalog", "ls"]);
    assert_eq!((o.code, o.stdout.as_str()), (0, ""));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let d = tempfile::tempdir().unwrap();
    let o = laradb(d.path(), &["frobnicate"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("Usage"), "{}", o.stderr);
    assert_eq!(laradb(d.path(), &["--help"]).code, 0);
    assert_eq!(laradb(d.path(), &["run"]).code, 1);
    let o = laradb(d.path(), &["run", PLAN, "--rules", "Q"]);
    assert_eq!(o.code, 1, "{}", o.stderr);
    assert!(o.stderr.contains("unknown rule"));
}

#[test]
fn runtime_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = laradb(d.path(), &["run", PLAN]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("s1"), "{}", o.stderr);
    assert_eq!(laradb(d.path(), &["catalog", "describe", "nope"]).code, 2);
}

#[test]
fn data_dir_comes_from_the_environment() {
    let d = tempfile::tempdir().unwrap();
    std::env::set_var("LARADB_DATA_DIR", d.path());
    let (mut o, mut e) = (Vec::new(), Vec::new());
    assert_eq!(run(["laradb", "catalog", "ls"], &mut o, &mut e), 0);
    std::env::remove_var("LARADB_DATA_DIR");
    assert!(d.path().exists());
}

#[test]
fn run_with_and_without_rules_stores_equal_c() {
    let d = tempfile::tempdir().unwrap();
    write_sensor_csvs(d.path());
    let data = d.path().join("data");
    ingest_sensors(&data, d.path());
    let ctx = || ExecContext::new(Catalog::open(&data).unwrap()).unwrap();
    let o = laradb(&data, &["run", PLAN, "--no-opt"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let plain = read_table(&ctx().catalog, "C", &ctx()).unwrap();
    let o = laradb(&data, &["run", PLAN, "--explain"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("(A) applied"), "{}", o.stdout);
    assert!(o.stdout.contains("tuples_materialized"));
    let opt = read_table(&ctx().catalog, "C", &ctx()).unwrap();
    assert!(plain.diff(&opt, 1e-9).is_none());
    assert_eq!(plain.len(), 3);
}

#[test]
fn explain_shows_the_access_paths() {
    let d = tempfile::tempdir().unwrap();
    write_sensor_csvs(d.path());
    ingest_sensors(d.path(), d.path());
    let o = laradb(d.path(), &["explain", PLAN]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    for (label, name, path) in [("3.5", "A20", "[t',c,t]"), ("10.5", "X0", "[c,t']"), ("16.5", "U20", "[c,c',t']"), ("17", "U3", "[c,c']")] {
        let line = o.stdout.lines().find(|l| l.trim_start().starts_with(label) && l.contains(name)).unwrap();
        assert!(line.contains(path), "{line}");
    }
    let o = laradb(d.path(), &["explain", PLAN, "--rules", "M,F"]);
    assert!(!o.stdout.contains("A20 = "), "{}", o.stdout);
    assert!(o.stdout.contains("from 460 to 860"));
}

#[test]
fn describe_lists_partitions() {
    let d = tempfile::tempdir().unwrap();
    write_sensor_csvs(d.path());
    ingest_sensors(d.path(), d.path());
    let o = laradb(d.path(), &["--parallelism", "1", "catalog", "describe", "s2"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("path      [t,c]"), "{}", o.stdout);
    let counts: usize = o
        .stdout
        .lines()
        .filter(|l| l.starts_with("partition"))
        .map(|l| l.split(", ").nth(1).unwrap().trim_end_matches(" records").parse::<usize>().unwrap())
        .sum();
    assert_eq!(counts, 4);
    let o = laradb(d.path(), &["catalog", "ls"]);
    assert_eq!(o.stdout.lines().count(), 2);
}

#[test]
fn verify_udfs_reports_each_function() {
    let d = tempfile::tempdir().unwrap();
    write_sensor_csvs(d.path());
    ingest_sensors(d.path(), d.path());
    let o = laradb(d.path(), &["verify-udfs", PLAN, "--samples", "50"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("X2 (9)"), "{}", o.stdout);
    assert!(o.stdout.trim_end().ends_with("failed checks"));
}

#[test]
fn bench_matmul_writes_tsv() {
    let d = tempfile::tempdir().unwrap();
    let tsv = d.path().join("m.tsv");
    let o = laradb(d.path(), &["bench", "matmul", "--scales", "4,5", "--out", tsv.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = fs::read_to_string(tsv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with("\tyes")), "{text}");
}

#[test]
fn bench_sensor_compares_rule_sets() {
    let d = tempfile::tempdir().unwrap();
    let o = laradb(d.path(), &["bench", "sensor", "--span", "1200", "--gap", "10", "--sets", "none;A;all"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("outputs identical"));
    assert_eq!(fs::read_to_string(d.path().join("bench_sensor.tsv")).unwrap().lines().count(), 4);
}

#[test]
fn csv_cells_and_schema_specs_parse() {
    assert_eq!(parse_cell("", ScalarType::Int64).unwrap(), Value::Null);
    assert_eq!(parse_cell("-4", ScalarType::Int64).unwrap(), Value::Int(-4));
    assert_eq!(parse_cell("2.5", ScalarType::Float64).unwrap(), Value::Float(2.5));
    assert_eq!(parse_cell("TRUE", ScalarType::Bool).unwrap(), Value::Bool(true));
    assert!(parse_cell("x", ScalarType::Int64).is_err());
    let s = parse_schema_spec("i:int, j:int -> v:int=0, w:float").unwrap();
    assert_eq!(s.key_names(), ["i", "j"]);
    assert_eq!(s.values[0].default_value(), &Value::Int(0));
    assert_eq!(s.values[1].default_value(), &Value::Null);
    assert!(parse_schema_spec("i:int").is_err());
    assert!(parse_schema_spec("i:int=3 -> v:int").is_err());
}

#[test]
fn duplicate_csv_keys_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("dup.csv");
    fs::write(&f, "i:int,v:int\n1,2\n1,3\n").unwrap();
    let o = laradb(d.path(), &["ingest", f.to_str().unwrap(), "--table", "t", "--keys", "i"]);
    assert_eq!(o.code, 2, "{}", o.stdout);
}
