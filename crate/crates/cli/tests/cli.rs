use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hop_cli::commands::{compare, profile_csv, CSV_HEADER};
use hop_cli::document::{self, InputsDocument, ScenarioDocument, SchemeDocument};
use hop_testkit::grid::{grid_optimum, GridOptions};
use hop_testkit::instances::{cutting_stock_pipeline, random_instance, toy3, Pattern, RandomShape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn hop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hop"))
        .args(args)
        .output()
        .expect("hop runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn write_doc<T: serde::Serialize>(dir: &Path, name: &str, doc: &T) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, document::to_json(doc)).unwrap();
    p
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn bundled_toy_matches_the_test_fixture() {
    let expected = ScenarioDocument::from_scenario(&toy3());
    let path = repo("scenarios/toy3.json");
    if std::env::var_os("HOP_BLESS").is_some() {
        std::fs::write(&path, document::to_json(&expected)).unwrap();
    }
    let doc: ScenarioDocument = document::read(&path).unwrap();
    assert_eq!(doc, expected);
}

#[test]
fn solve_toy_matches_the_grid_oracle_and_evaluates_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scheme.json");
    let log = dir.path().join("nodes.log");
    let scen_path = repo("scenarios/toy3.json");
    let res = hop(&["solve", p(&scen_path), "--out", p(&out), "--log", p(&log)]);
    assert_eq!(res.status.code(), Some(0), "{}", text(&res.stderr));

    let doc: SchemeDocument = document::read(&out).unwrap();
    let summary = doc.solve.as_ref().unwrap();
    assert_eq!(summary.status, "optimal");
    assert!(doc.totals_mismatch() <= 1e-6);
    assert_eq!(summary.cost, Some(doc.totals.cost_per_day));

    let scen = document::read::<ScenarioDocument>(&scen_path).unwrap().to_scenario().unwrap();
    let grid = grid_optimum(&scen, GridOptions::default());
    let best = grid.cost.unwrap();
    let cost = doc.totals.cost_per_day;
    assert!(cost <= best * (1.0 + 1e-6));
    assert!(best - cost <= grid.resolution + 1e-4 * best);

    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), summary.nodes);
    assert!(lines.lines().all(|l| l.starts_with("node=")));

    let eval_path = dir.path().join("eval.json");
    let res = hop(&["evaluate", p(&scen_path), "--scheme", p(&out), "--out", p(&eval_path)]);
    assert_eq!(res.status.code(), Some(0), "{}", text(&res.stderr));
    let eval: SchemeDocument = document::read(&eval_path).unwrap();
    assert!(eval.feasibility.as_ref().unwrap().feasible);
    assert!((eval.totals.cost_per_day - cost).abs() <= 1e-9 * cost);
    assert_eq!(eval.scenario_hash, doc.scenario_hash);
}

#[test]
fn inverted_bounds_report_the_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = ScenarioDocument::from_scenario(&toy3());
    doc.stations[1].h_in_lb = Some(300.0);
    let path = write_doc(dir.path(), "bad.json", &doc);
    let res = hop(&["solve", p(&path)]);
    assert_eq!(res.status.code(), Some(2));
    let err = text(&res.stderr);
    assert!(err.contains("stations[1].h_in_lb"), "{err}");
}

#[test]
fn type_errors_report_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = document::to_json(&ScenarioDocument::from_scenario(&toy3()));
    let bad = good.replacen("\"n_csp\": 2", "\"n_csp\": \"two\"", 1);
    let line = bad.lines().position(|l| l.contains("\"two\"")).unwrap() + 1;
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let res = hop(&["solve", p(&path)]);
    assert_eq!(res.status.code(), Some(2));
    let err = text(&res.stderr);
    assert!(err.contains("stations[0].n_csp"), "{err}");
    assert!(err.contains(&format!("line {line}")), "{err}");

    let unknown = good.replacen("\"density\"", "\"densty\"", 1);
    std::fs::write(&path, unknown).unwrap();
    let res = hop(&["solve", p(&path)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(text(&res.stderr).contains("densty"));
}

#[test]
fn missing_file_is_an_input_error() {
    let res = hop(&["solve", "/nonexistent/scenario.json"]);
    assert_eq!(res.status.code(), Some(2));
    let res = hop(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn zero_node_limit_exits_with_the_root_bound() {
    let res = hop(&["solve", p(&repo("scenarios/toy3.json")), "--max-nodes", "0"]);
    assert_eq!(res.status.code(), Some(3));
    let summary: hop_cli::document::SolveSummary = document::parse(&text(&res.stdout)).unwrap();
    assert_eq!(summary.status, "gap_limit");
    assert!(summary.cost.is_none());
    assert!(summary.root_lower_bound.unwrap() > 0.0);
}

#[test]
fn unmeetable_demand_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = [
        Pattern { max_uses: 1, yield_per_use: 4, efficiency: 0.8 },
        Pattern { max_uses: 2, yield_per_use: 3, efficiency: 0.8 },
    ];
    let doc = ScenarioDocument::from_scenario(&cutting_stock_pipeline(&patterns, 11));
    let path = write_doc(dir.path(), "cs.json", &doc);
    let res = hop(&["solve", p(&path)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(text(&res.stdout).contains("\"infeasible\""));
}

#[test]
fn cold_start_reaches_the_same_cost() {
    let scen = repo("scenarios/toy3.json");
    let warm: SchemeDocument = document::parse(&text(&hop(&["solve", p(&scen)]).stdout)).unwrap();
    let cold: SchemeDocument = document::parse(&text(&hop(&["solve", p(&scen), "--cold-start"]).stdout)).unwrap();
    let (w, c) = (warm.solve.unwrap(), cold.solve.unwrap());
    assert!(!c.warm_start && w.warm_start);
    assert!((warm.totals.cost_per_day - cold.totals.cost_per_day).abs() <= 1e-6 * warm.totals.cost_per_day);
    assert!(w.lp_solves <= c.lp_solves);
}

fn toy_inputs() -> InputsDocument {
    InputsDocument {
        x: vec![2.0, 1.0],
        y: vec![1.0, 1.0],
        dh_sp: vec![60.0, 40.0],
        dt: vec![2.0, 1.0],
        h_out: vec![250.0, 160.0],
    }
}

#[test]
fn negative_heating_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = toy_inputs();
    inputs.dt[1] = -0.5;
    let path = write_doc(dir.path(), "in.json", &inputs);
    let res = hop(&["evaluate", p(&repo("scenarios/toy3.json")), "--inputs", p(&path)]);
    assert_eq!(res.status.code(), Some(1));
    let doc: SchemeDocument = document::parse(&text(&res.stdout)).unwrap();
    let feas = doc.feasibility.unwrap();
    assert!(!feas.feasible);
    assert!(feas
        .violations
        .iter()
        .any(|v| v.constraint == "temperature_rise" && v.location == "station 1"));
}

#[test]
fn wrong_input_lengths_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = toy_inputs();
    inputs.dt.push(0.0);
    let path = write_doc(dir.path(), "in.json", &inputs);
    let res = hop(&["evaluate", p(&repo("scenarios/toy3.json")), "--inputs", p(&path)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(text(&res.stderr).contains("dT: expected 2 entries"));
}

fn evaluated(scen_doc: &ScenarioDocument, inputs: &InputsDocument) -> SchemeDocument {
    let scen = scen_doc.to_scenario().unwrap();
    hop_cli::commands::evaluate(scen_doc, &scen, inputs).unwrap()
}

#[test]
fn profile_has_one_row_per_segment_end() {
    let doc = ScenarioDocument::from_scenario(&toy3());
    let scheme = evaluated(&doc, &toy_inputs());
    let dir = tempfile::tempdir().unwrap();
    let path = write_doc(dir.path(), "scheme.json", &scheme);
    let res = hop(&["export-profile", p(&path)]);
    assert_eq!(res.status.code(), Some(0));
    let csv = text(&res.stdout);
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let segs: usize = doc.gaps.iter().map(|g| g.segments.len()).sum();
    assert_eq!(rows.len(), 1 + segs);
    for (row, pt) in rows.iter().zip(&scheme.points) {
        assert_eq!(row[0].to_bits(), pt.cumulative_length.to_bits());
        assert_eq!(row[1].to_bits(), pt.elevation.to_bits());
        assert_eq!(row[2].to_bits(), pt.head.to_bits());
        assert_eq!(row[3].to_bits(), pt.temperature.to_bits());
    }
    assert_eq!(rows[0][2], scheme.stations[0].h_out);
    assert_eq!(rows[segs][2], scheme.terminal.h_in);
    assert_eq!(rows[segs][0], 57_000.0);
}

#[test]
fn single_segment_profile_has_two_rows() {
    let mut scen = toy3();
    scen.stations.remove(1);
    scen.gaps = vec![vec![scen.gaps[0][0]]];
    let doc = ScenarioDocument::from_scenario(&scen);
    let inputs = InputsDocument {
        x: vec![1.0],
        y: vec![0.0],
        dh_sp: vec![0.0],
        dt: vec![0.0],
        h_out: vec![120.0],
    };
    let csv = profile_csv(&evaluated(&doc, &inputs));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn malformed_scheme_cannot_be_exported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scheme.json");
    std::fs::write(&path, "{\"scenario_hash\": 3}").unwrap();
    assert_eq!(hop(&["export-profile", p(&path)]).status.code(), Some(2));
}

#[test]
fn comparison_is_antisymmetric() {
    let doc = ScenarioDocument::from_scenario(&toy3());
    let a = evaluated(&doc, &toy_inputs());
    let mut other = toy_inputs();
    other.dt = vec![3.0, 0.5];
    let b = evaluated(&doc, &other);
    let ab = compare(&a, &b).unwrap();
    let ba = compare(&b, &a).unwrap();
    assert_eq!(ab.delta(), -ba.delta());
    assert_eq!(compare(&a, &a).unwrap().saving_percent(), 0.0);

    let dir = tempfile::tempdir().unwrap();
    let pa = write_doc(dir.path(), "a.json", &a);
    let res = hop(&["compare", p(&pa), p(&pa)]);
    assert_eq!(res.status.code(), Some(0));
    assert!(text(&res.stdout).contains("saving_percent 0.00"));

    let mut foreign = b.clone();
    foreign.scenario_hash = "0".repeat(64);
    let pb = write_doc(dir.path(), "b.json", &foreign);
    let res = hop(&["compare", p(&pa), p(&pb)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(text(&res.stderr).contains("different scenarios"));
}

#[test]
fn scenario_hash_tracks_content() {
    let doc = ScenarioDocument::from_scenario(&toy3());
    let mut other = doc.clone();
    assert_eq!(doc.hash(), other.hash());
    other.economics.fuel_price *= 1.0 + 1e-15;
    assert_ne!(doc.hash(), other.hash());
    assert_eq!(doc.hash().len(), 64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scenario_documents_round_trip(seed in any::<u64>()) {
        let scen = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), RandomShape::default());
        let doc = ScenarioDocument::from_scenario(&scen);
        let back: ScenarioDocument = document::parse(&document::to_json(&doc)).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.hash(), doc.hash());
        let again = ScenarioDocument::from_scenario(&back.to_scenario().unwrap());
        prop_assert_eq!(document::to_json(&again), document::to_json(&doc));
    }

    #[test]
    fn scheme_documents_round_trip(dt0 in 0.0..6.0f64, dt1 in 0.0..6.0f64, h in 150.0..300.0f64) {
        let doc = ScenarioDocument::from_scenario(&toy3());
        let mut inputs = toy_inputs();
        inputs.dt = vec![dt0, dt1];
        inputs.h_out[0] = h;
        let scheme = evaluated(&doc, &inputs);
        prop_assert!(scheme.totals_mismatch() <= 1e-6);
        let back: SchemeDocument = document::parse(&document::to_json(&scheme)).unwrap();
        prop_assert_eq!(back, scheme);
    }
}
