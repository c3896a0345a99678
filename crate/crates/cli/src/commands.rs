use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hop_core::scheme::{check_feasibility, propagate, FeasibilityOptions};
use hop_core::{solve, NodeBounds, Scenario, SolveOptions, SolveReport, SolveStatus};

use crate::document::{
    self, FeasibilityDoc, InputsDocument, ScenarioDocument, SchemeDocument, SolveSummary,
};
use crate::error::CliError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INFEASIBLE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const LIMIT: i32 = 3;
}

/// Result of a command: the exit code and the text for standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

pub const CSV_HEADER: &str = "cumulative_length_m,elevation_m,head_m,temperature_C";

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `text` to `out` when given, otherwise returns it for standard output.
fn emit(out: Option<&Path>, text: String) -> Result<String, CliError> {
    match out {
        Some(p) => {
            write_file(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn load_scenario(path: &Path) -> Result<(ScenarioDocument, Scenario), CliError> {
    let doc: ScenarioDocument = document::read(path)?;
    let scen = doc.to_scenario()?;
    Ok((doc, scen))
}

#[derive(Debug, Clone, Default)]
pub struct SolveArgs {
    pub eps: Option<f64>,
    pub gap: Option<f64>,
    pub cold_start: bool,
    pub max_nodes: Option<usize>,
    pub out: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

pub fn summary(report: &SolveReport, warm_start: bool) -> SolveSummary {
    SolveSummary {
        status: match report.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::GapLimit => "gap_limit",
        }
        .to_string(),
        cost: report.gub.is_finite().then_some(report.gub),
        lower_bound: report.glb,
        root_lower_bound: report.root_lb,
        nodes: report.node_count,
        oa_iterations: report.oa_iterations,
        lp_solves: report.lp_solves,
        lp_iterations: report.lp_iterations,
        cut_pool: report.pool_size,
        warm_start,
        wall_time_s: report.wall_time.as_secs_f64(),
    }
}

pub fn cmd_solve(scenario: &Path, args: &SolveArgs) -> Result<Outcome, CliError> {
    let (doc, scen) = load_scenario(scenario)?;
    let mut opts = SolveOptions::default();
    if let Some(eps) = args.eps {
        opts.eps = eps;
    }
    if let Some(gap) = args.gap {
        opts.gap_tol = gap;
    }
    if let Some(n) = args.max_nodes {
        opts.max_nodes = n;
    }
    opts.warm_start = !args.cold_start;
    let report = solve(&scen, &opts)?;

    if let Some(log) = &args.log {
        let mut text = String::new();
        for node in &report.nodes {
            text.push_str(&node.log_line());
            text.push('\n');
        }
        write_file(log, &text)?;
    }

    let summary = summary(&report, opts.warm_start);
    let text = match (&report.scheme, &report.incumbent) {
        (Some(sch), Some(inc)) => {
            let cost = inc.cost(&scen)?;
            let mut out = SchemeDocument::new(&scen, doc.hash(), sch, &cost);
            out.solve = Some(summary);
            document::to_json(&out)
        }
        _ => document::to_json(&summary),
    };
    let code = match report.status {
        SolveStatus::Optimal => exit::OK,
        SolveStatus::Infeasible => exit::INFEASIBLE,
        SolveStatus::GapLimit => exit::LIMIT,
    };
    Ok(Outcome {
        code,
        stdout: emit(args.out.as_deref(), text)?,
    })
}

/// Prices the decision inputs on `scen` and checks every bound.
pub fn evaluate(
    doc: &ScenarioDocument,
    scen: &Scenario,
    inputs: &InputsDocument,
) -> Result<SchemeDocument, CliError> {
    let np = scen.n_pump_stations();
    for (name, len) in [
        ("x", inputs.x.len()),
        ("y", inputs.y.len()),
        ("dH_sp", inputs.dh_sp.len()),
        ("dT", inputs.dt.len()),
        ("H_out", inputs.h_out.len()),
    ] {
        if len != np {
            return Err(CliError::Shape(format!(
                "{name}: expected {np} entries (one per pump station), got {len}"
            )));
        }
    }
    let s = inputs.to_solution();
    let sch = propagate(&s, scen)?;
    let cost = s.cost(scen)?;
    let report = check_feasibility(&sch, scen, &NodeBounds::root(scen), FeasibilityOptions::default());
    let mut out = SchemeDocument::new(scen, doc.hash(), &sch, &cost);
    out.feasibility = Some(FeasibilityDoc::from(&report));
    Ok(out)
}

/// Decision inputs come from a plain inputs document or a scheme document.
#[derive(Debug, Clone)]
pub enum InputsSource {
    Inputs(PathBuf),
    Scheme(PathBuf),
}

pub fn cmd_evaluate(scenario: &Path, src: &InputsSource, out: Option<&Path>) -> Result<Outcome, CliError> {
    let (doc, scen) = load_scenario(scenario)?;
    let inputs = match src {
        InputsSource::Inputs(p) => document::read::<InputsDocument>(p)?,
        InputsSource::Scheme(p) => document::read::<SchemeDocument>(p)?.inputs(),
    };
    let result = evaluate(&doc, &scen, &inputs)?;
    let feasible = result.feasibility.as_ref().is_some_and(|f| f.feasible);
    Ok(Outcome {
        code: if feasible { exit::OK } else { exit::INFEASIBLE },
        stdout: emit(out, document::to_json(&result))?,
    })
}

/// One CSV row per segment end plus the outlet of the first station.
pub fn profile_csv(doc: &SchemeDocument) -> String {
    let mut s = String::with_capacity(64 * (doc.points.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for p in &doc.points {
        let _ = writeln!(s, "{},{},{},{}", p.cumulative_length, p.elevation, p.head, p.temperature);
    }
    s
}

pub fn cmd_export_profile(scheme: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let doc: SchemeDocument = document::read(scheme)?;
    Ok(Outcome {
        code: exit::OK,
        stdout: emit(out, profile_csv(&doc))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationDelta {
    pub cost_a: f64,
    pub cost_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub stations: Vec<StationDelta>,
    pub total_a: f64,
    pub total_b: f64,
}

impl Comparison {
    /// `total_b - total_a`, yuan/d.
    pub fn delta(&self) -> f64 {
        self.total_b - self.total_a
    }

    /// Saving of B relative to A, percent.
    pub fn saving_percent(&self) -> f64 {
        100.0 * (self.total_a - self.total_b) / self.total_a
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>7} {:>14} {:>14} {:>14}", "station", "cost_a", "cost_b", "delta");
        for (j, st) in self.stations.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>7} {:>14.2} {:>14.2} {:>14.2}",
                j,
                st.cost_a,
                st.cost_b,
                st.cost_b - st.cost_a
            );
        }
        let _ = writeln!(s, "{:>7} {:>14.2} {:>14.2} {:>14.2}", "total", self.total_a, self.total_b, self.delta());
        let _ = writeln!(s, "saving_percent {:.2}", self.saving_percent());
        s
    }
}

pub fn compare(a: &SchemeDocument, b: &SchemeDocument) -> Result<Comparison, CliError> {
    if a.scenario_hash != b.scenario_hash {
        return Err(CliError::ScenarioMismatch {
            a: a.scenario_hash.clone(),
            b: b.scenario_hash.clone(),
        });
    }
    if a.stations.len() != b.stations.len() {
        return Err(CliError::Shape(format!(
            "station counts differ: {} vs {}",
            a.stations.len(),
            b.stations.len()
        )));
    }
    Ok(Comparison {
        stations: a
            .stations
            .iter()
            .zip(&b.stations)
            .map(|(x, y)| StationDelta {
                cost_a: x.cost_power + x.cost_fuel,
                cost_b: y.cost_power + y.cost_fuel,
            })
            .collect(),
        total_a: a.totals.cost_per_day,
        total_b: b.totals.cost_per_day,
    })
}

pub fn cmd_compare(a: &Path, b: &Path) -> Result<Outcome, CliError> {
    let a: SchemeDocument = document::read(a)?;
    let b: SchemeDocument = document::read(b)?;
    Ok(Outcome {
        code: exit::OK,
        stdout: compare(&a, &b)?.table(),
    })
}
