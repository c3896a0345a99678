//! JSON documents read and written by the `hop` binary.
//!
//! Flows are given in m³/h in documents and converted to m³/s on load. A
//! missing or `null` bound means the side is unbounded.

use std::path::Path;

use hop_core::model::{m3h_to_m3s, m3s_to_m3h, CostBreakdown};
use hop_core::scheme::FeasibilityReport;
use hop_core::{
    EconomicParams, FluidProps, FrictionModel, Interval, PipeSegment, Scenario, Scheme,
    SolutionVector, ViscosityModel,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub fluid: FluidDoc,
    #[serde(default = "FrictionDoc::hydraulic_smooth")]
    pub friction: FrictionDoc,
    pub economics: EconomicsDoc,
    pub inlet: InletDoc,
    pub stations: Vec<StationDoc>,
    pub gaps: Vec<GapDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidDoc {
    pub density: f64,
    pub specific_heat: f64,
    pub viscosity: ViscosityDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityDoc {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionDoc {
    pub beta: f64,
    pub m: f64,
}

impl FrictionDoc {
    fn hydraulic_smooth() -> Self {
        let f = FrictionModel::default();
        Self { beta: f.beta, m: f.m }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsDoc {
    /// yuan/J
    pub electricity_price: f64,
    /// yuan/m³ of fuel
    pub fuel_price: f64,
    /// J/m³ of fuel
    pub heat_value: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InletDoc {
    pub head: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationDoc {
    pub n_csp: u32,
    pub csp_head: f64,
    pub csp_eff: f64,
    pub n_ssp: u32,
    pub ssp_head_lb: f64,
    pub ssp_head_ub: f64,
    pub ssp_eff: f64,
    pub furnace_eff: f64,
    /// m³/h
    pub flow: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_in_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_in_ub: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_out_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_out_ub: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_in_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_in_ub: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_out_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_out_ub: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapDoc {
    pub segments: Vec<SegmentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub length: f64,
    pub inner_diameter: f64,
    pub outer_diameter: f64,
    pub elevation_change: f64,
    pub heat_transfer: f64,
    /// m³/h
    pub flow: f64,
    pub ground_temp: f64,
    #[serde(default)]
    pub friction_heat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_ub: Option<f64>,
}

fn interval(lo: Option<f64>, hi: Option<f64>) -> Interval {
    Interval {
        lo: lo.unwrap_or(f64::NEG_INFINITY),
        hi: hi.unwrap_or(f64::INFINITY),
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ScenarioDocument {
    /// Converts to a validated [`Scenario`]; errors carry the document key path.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let v = &self.fluid.viscosity;
        let fluid = FluidProps {
            density: self.fluid.density,
            specific_heat: self.fluid.specific_heat,
            viscosity: ViscosityModel {
                a1: v.a1,
                b1: v.b1,
                a2: v.a2,
                b2: v.b2,
            },
        };
        let friction = FrictionModel {
            beta: self.friction.beta,
            m: self.friction.m,
        };
        let e = &self.economics;
        let economics = EconomicParams {
            electricity_price: e.electricity_price,
            fuel_price: e.fuel_price,
            heat_value: e.heat_value,
            gravity: e.gravity,
        };
        let stations = self
            .stations
            .iter()
            .map(|s| hop_core::Station {
                n_csp: s.n_csp,
                csp_head: s.csp_head,
                csp_eff: s.csp_eff,
                n_ssp: s.n_ssp,
                ssp_head: Interval {
                    lo: s.ssp_head_lb,
                    hi: s.ssp_head_ub,
                },
                ssp_eff: s.ssp_eff,
                furnace_eff: s.furnace_eff,
                flow: m3h_to_m3s(s.flow),
                h_in: interval(s.h_in_lb, s.h_in_ub),
                h_out: interval(s.h_out_lb, s.h_out_ub),
                t_in: interval(s.t_in_lb, s.t_in_ub),
                t_out: interval(s.t_out_lb, s.t_out_ub),
            })
            .collect();
        let gaps = self
            .gaps
            .iter()
            .map(|g| {
                g.segments
                    .iter()
                    .map(|s| PipeSegment {
                        length: s.length,
                        inner_diameter: s.inner_diameter,
                        outer_diameter: s.outer_diameter,
                        elevation_change: s.elevation_change,
                        heat_transfer: s.heat_transfer,
                        flow: m3h_to_m3s(s.flow),
                        ground_temp: s.ground_temp,
                        friction_heat: s.friction_heat,
                        head: interval(s.head_lb, s.head_ub),
                    })
                    .collect()
            })
            .collect();
        Scenario::new(
            fluid,
            friction,
            economics,
            self.inlet.head,
            self.inlet.temperature,
            stations,
            gaps,
        )
        .map_err(|e| {
            let hop_core::ScenarioError::Invalid { path, reason } = e;
            CliError::Invalid { path, reason }
        })
    }

    pub fn from_scenario(scen: &Scenario) -> Self {
        let v = scen.fluid.viscosity;
        let e = scen.economics;
        Self {
            fluid: FluidDoc {
                density: scen.fluid.density,
                specific_heat: scen.fluid.specific_heat,
                viscosity: ViscosityDoc {
                    a1: v.a1,
                    b1: v.b1,
                    a2: v.a2,
                    b2: v.b2,
                },
            },
            friction: FrictionDoc {
                beta: scen.friction.beta,
                m: scen.friction.m,
            },
            economics: EconomicsDoc {
                electricity_price: e.electricity_price,
                fuel_price: e.fuel_price,
                heat_value: e.heat_value,
                gravity: e.gravity,
            },
            inlet: InletDoc {
                head: scen.inlet_head,
                temperature: scen.inlet_temp,
            },
            stations: scen
                .stations
                .iter()
                .map(|s| StationDoc {
                    n_csp: s.n_csp,
                    csp_head: s.csp_head,
                    csp_eff: s.csp_eff,
                    n_ssp: s.n_ssp,
                    ssp_head_lb: s.ssp_head.lo,
                    ssp_head_ub: s.ssp_head.hi,
                    ssp_eff: s.ssp_eff,
                    furnace_eff: s.furnace_eff,
                    flow: m3s_to_m3h(s.flow),
                    h_in_lb: finite(s.h_in.lo),
                    h_in_ub: finite(s.h_in.hi),
                    h_out_lb: finite(s.h_out.lo),
                    h_out_ub: finite(s.h_out.hi),
                    t_in_lb: finite(s.t_in.lo),
                    t_in_ub: finite(s.t_in.hi),
                    t_out_lb: finite(s.t_out.lo),
                    t_out_ub: finite(s.t_out.hi),
                })
                .collect(),
            gaps: scen
                .gaps
                .iter()
                .map(|segs| GapDoc {
                    segments: segs
                        .iter()
                        .map(|s| SegmentDoc {
                            length: s.length,
                            inner_diameter: s.inner_diameter,
                            outer_diameter: s.outer_diameter,
                            elevation_change: s.elevation_change,
                            heat_transfer: s.heat_transfer,
                            flow: m3s_to_m3h(s.flow),
                            ground_temp: s.ground_temp,
                            friction_heat: s.friction_heat,
                            head_lb: finite(s.head.lo),
                            head_ub: finite(s.head.hi),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// SHA-256 of the compact serialization, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario documents always serialize");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Decision inputs of a scheme, one entry per pump station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsDocument {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(rename = "dH_sp")]
    pub dh_sp: Vec<f64>,
    #[serde(rename = "dT")]
    pub dt: Vec<f64>,
    #[serde(rename = "H_out")]
    pub h_out: Vec<f64>,
}

impl InputsDocument {
    pub fn to_solution(&self) -> SolutionVector {
        SolutionVector {
            x: self.x.clone(),
            y: self.y.clone(),
            dh_sp: self.dh_sp.clone(),
            dt: self.dt.clone(),
            h_out: self.h_out.clone(),
            friction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationResult {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "dH_sp")]
    pub dh_sp: f64,
    #[serde(rename = "dT")]
    pub dt: f64,
    #[serde(rename = "H_in")]
    pub h_in: f64,
    #[serde(rename = "H_out")]
    pub h_out: f64,
    #[serde(rename = "T_in")]
    pub t_in: f64,
    #[serde(rename = "T_out")]
    pub t_out: f64,
    pub cost_power: f64,
    pub cost_fuel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalResult {
    #[serde(rename = "H_in")]
    pub h_in: f64,
    #[serde(rename = "T_in")]
    pub t_in: f64,
}

/// State at one segment end, with the distance and elevation from the inlet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointResult {
    pub gap: usize,
    pub segment: usize,
    pub cumulative_length: f64,
    pub elevation: f64,
    #[serde(rename = "H")]
    pub head: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Totals {
    pub cost_power: f64,
    pub cost_fuel: f64,
    pub cost_per_day: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationDoc {
    pub constraint: String,
    pub location: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityDoc {
    pub feasible: bool,
    pub max_violation: f64,
    pub violations: Vec<ViolationDoc>,
}

impl From<&FeasibilityReport> for FeasibilityDoc {
    fn from(r: &FeasibilityReport) -> Self {
        Self {
            feasible: r.feasible,
            max_violation: r.max_violation,
            violations: r
                .violations
                .iter()
                .map(|v| ViolationDoc {
                    constraint: v.constraint.id().to_string(),
                    location: v.location.to_string(),
                    magnitude: v.magnitude,
                })
                .collect(),
        }
    }
}

/// Summary of a branch-and-bound run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSummary {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    pub lower_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_lower_bound: Option<f64>,
    pub nodes: usize,
    pub oa_iterations: usize,
    pub lp_solves: usize,
    pub lp_iterations: usize,
    pub cut_pool: usize,
    pub warm_start: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDocument {
    pub scenario_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityDoc>,
    pub stations: Vec<StationResult>,
    pub terminal: TerminalResult,
    pub points: Vec<PointResult>,
    pub totals: Totals,
}

impl SchemeDocument {
    pub fn new(scen: &Scenario, scenario_hash: String, sch: &Scheme, cost: &CostBreakdown) -> Self {
        let np = scen.n_pump_stations();
        let stations = (0..np)
            .map(|j| StationResult {
                x: sch.x[j],
                y: sch.y[j],
                dh_sp: sch.dh_sp[j],
                dt: sch.dt[j],
                h_in: sch.h_in[j],
                h_out: sch.h_out[j],
                t_in: sch.t_in[j],
                t_out: sch.t_out[j],
                cost_power: cost.power[j],
                cost_fuel: cost.fuel[j],
            })
            .collect();
        let mut points = vec![PointResult {
            gap: 0,
            segment: 0,
            cumulative_length: 0.0,
            elevation: 0.0,
            head: sch.point_head[0][0],
            temperature: sch.point_temp[0][0],
        }];
        let (mut dist, mut elev) = (0.0, 0.0);
        for (j, segs) in scen.gaps.iter().enumerate() {
            for (r, seg) in segs.iter().enumerate() {
                dist += seg.length;
                elev += seg.elevation_change;
                points.push(PointResult {
                    gap: j,
                    segment: r + 1,
                    cumulative_length: dist,
                    elevation: elev,
                    head: sch.point_head[j][r + 1],
                    temperature: sch.point_temp[j][r + 1],
                });
            }
        }
        Self {
            scenario_hash,
            solve: None,
            feasibility: None,
            stations,
            terminal: TerminalResult {
                h_in: sch.h_in[np],
                t_in: sch.t_in[np],
            },
            points,
            totals: Totals {
                cost_power: cost.total_power(),
                cost_fuel: cost.total_fuel(),
                cost_per_day: cost.total(),
            },
        }
    }

    pub fn inputs(&self) -> InputsDocument {
        InputsDocument {
            x: self.stations.iter().map(|s| s.x).collect(),
            y: self.stations.iter().map(|s| s.y).collect(),
            dh_sp: self.stations.iter().map(|s| s.dh_sp).collect(),
            dt: self.stations.iter().map(|s| s.dt).collect(),
            h_out: self.stations.iter().map(|s| s.h_out).collect(),
        }
    }

    /// Largest gap between a total and the sum of its parts.
    pub fn totals_mismatch(&self) -> f64 {
        let power: f64 = self.stations.iter().map(|s| s.cost_power).sum();
        let fuel: f64 = self.stations.iter().map(|s| s.cost_fuel).sum();
        let t = &self.totals;
        (power - t.cost_power)
            .abs()
            .max((fuel - t.cost_fuel).abs())
            .max((t.cost_power + t.cost_fuel - t.cost_per_day).abs())
    }
}

/// Parses JSON text, reporting the key path and line of the first error.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "?" || p == "." => "document".to_string(),
            p => p,
        };
        let inner = e.into_inner();
        CliError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            reason: inner.to_string(),
        }
    })
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}
