//! Operating schemes: forward propagation of a decision vector through the
//! pipeline, feasibility checking, integer lifting and head repair.

use std::fmt;

use thiserror::Error;

use crate::bounds::NodeBounds;
use crate::error::ModelError;
use crate::model::{self, CostBreakdown};
use crate::preprocess::TightenedScenario;
use crate::scenario::Scenario;

/// Default tolerance for feasibility checks, in metres or °C.
pub const FEAS_TOL: f64 = 1e-6;
/// Distance to the nearest integer below which a pump count is integral.
pub const INT_TOL: f64 = 1e-6;

/// The decisions that determine a scheme: pump counts, shifted-speed head,
/// temperature rise and outlet head at every pump station.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionVector {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dh_sp: Vec<f64>,
    pub dt: Vec<f64>,
    pub h_out: Vec<f64>,
    /// Per-gap, per-segment friction losses of a relaxed solution.
    pub friction: Option<Vec<Vec<f64>>>,
}

impl SolutionVector {
    fn check_dims(&self, scen: &Scenario) -> Result<(), ModelError> {
        let n = scen.n_pump_stations();
        for (what, v) in [
            ("x", &self.x),
            ("y", &self.y),
            ("dh_sp", &self.dh_sp),
            ("dt", &self.dt),
            ("h_out", &self.h_out),
        ] {
            if v.len() != n {
                return Err(ModelError::Dimension {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        if let Some(fr) = &self.friction {
            if fr.len() != scen.gaps.len() {
                return Err(ModelError::Dimension {
                    what: "friction",
                    expected: scen.gaps.len(),
                    found: fr.len(),
                });
            }
            for (g, segs) in fr.iter().zip(&scen.gaps) {
                if g.len() != segs.len() {
                    return Err(ModelError::Dimension {
                        what: "friction",
                        expected: segs.len(),
                        found: g.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn cost(&self, scen: &Scenario) -> Result<CostBreakdown, ModelError> {
        model::total_cost(&self.x, &self.dh_sp, &self.dt, scen)
    }

    pub fn is_integral(&self, int_tol: f64) -> bool {
        self.x
            .iter()
            .chain(&self.y)
            .all(|v| (v - v.round()).abs() <= int_tol)
    }
}

/// Full operating state along the pipeline.
///
/// `point_head[j][r]` and `point_temp[j][r]` use the point convention of
/// [`crate::scenario`]: `r = 0` is the outlet of station `j` and the last
/// point is the inlet of station `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dh_sp: Vec<f64>,
    pub dt: Vec<f64>,
    pub h_in: Vec<f64>,
    pub h_out: Vec<f64>,
    pub t_in: Vec<f64>,
    pub t_out: Vec<f64>,
    pub point_head: Vec<Vec<f64>>,
    pub point_temp: Vec<Vec<f64>>,
    pub t_ave: Vec<Vec<f64>>,
    pub friction: Vec<Vec<f64>>,
}

impl Scheme {
    pub fn solution_vector(&self) -> SolutionVector {
        SolutionVector {
            x: self.x.clone(),
            y: self.y.clone(),
            dh_sp: self.dh_sp.clone(),
            dt: self.dt.clone(),
            h_out: self.h_out.clone(),
            friction: Some(self.friction.clone()),
        }
    }

    pub fn cost(&self, scen: &Scenario) -> Result<CostBreakdown, ModelError> {
        model::total_cost(&self.x, &self.dh_sp, &self.dt, scen)
    }
}

/// Builds the scheme defined by `s`, computing every friction loss from the
/// average temperatures. Any friction carried by `s` is ignored.
///
/// Fails only on a dimension mismatch or when an average temperature leaves
/// the viscosity model's domain.
pub fn propagate(s: &SolutionVector, scen: &Scenario) -> Result<Scheme, ModelError> {
    propagate_inner(s, scen, None)
}

/// Like [`propagate`] but takes the friction losses from `s.friction`.
pub fn propagate_relaxed(s: &SolutionVector, scen: &Scenario) -> Result<Scheme, ModelError> {
    let fr = s.friction.as_deref().ok_or(ModelError::Dimension {
        what: "friction",
        expected: scen.gaps.len(),
        found: 0,
    })?;
    propagate_inner(s, scen, Some(fr))
}

fn propagate_inner(
    s: &SolutionVector,
    scen: &Scenario,
    given: Option<&[Vec<f64>]>,
) -> Result<Scheme, ModelError> {
    s.check_dims(scen)?;
    let np = scen.n_pump_stations();
    let mut sch = Scheme {
        x: s.x.clone(),
        y: s.y.clone(),
        dh_sp: s.dh_sp.clone(),
        dt: s.dt.clone(),
        h_in: Vec::with_capacity(np + 1),
        h_out: s.h_out.clone(),
        t_in: Vec::with_capacity(np + 1),
        t_out: Vec::with_capacity(np),
        point_head: Vec::with_capacity(np),
        point_temp: Vec::with_capacity(np),
        t_ave: Vec::with_capacity(np),
        friction: Vec::with_capacity(np),
    };
    sch.h_in.push(scen.inlet_head);
    sch.t_in.push(scen.inlet_temp);
    for j in 0..np {
        let t_out = sch.t_in[j] + s.dt[j];
        sch.t_out.push(t_out);
        let segs = &scen.gaps[j];
        let mut heads = Vec::with_capacity(segs.len() + 1);
        let mut temps = Vec::with_capacity(segs.len() + 1);
        let mut aves = Vec::with_capacity(segs.len());
        let mut frs = Vec::with_capacity(segs.len());
        heads.push(s.h_out[j]);
        temps.push(t_out);
        for (k, seg) in segs.iter().enumerate() {
            let t0 = temps[k];
            let t1 = model::axial_outlet_temperature(t0, seg, &scen.fluid);
            let ave = model::average_temperature(t0, t1);
            let f = match given {
                Some(fr) => fr[j][k],
                None => model::friction_head_loss(ave, seg, &scen.fluid, &scen.friction)?,
            };
            heads.push(heads[k] - f - seg.elevation_change);
            temps.push(t1);
            aves.push(ave);
            frs.push(f);
        }
        sch.h_in.push(*heads.last().unwrap_or(&s.h_out[j]));
        sch.t_in.push(*temps.last().unwrap_or(&t_out));
        sch.point_head.push(heads);
        sch.point_temp.push(temps);
        sch.t_ave.push(aves);
        sch.friction.push(frs);
    }
    Ok(sch)
}

/// Named constraint families checked by [`check_feasibility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Outlet head cannot exceed inlet head plus pumped head.
    PumpHead,
    /// Shifted-speed head must lie in the band of the running pumps.
    SspBand,
    /// Pump counts must lie in the node box.
    PumpCountBox,
    Integrality,
    /// Furnaces can only heat.
    TemperatureRise,
    InletHead,
    OutletHead,
    InletTemp,
    OutletTemp,
    /// Head at a segment end.
    SegmentHead,
}

impl ConstraintKind {
    pub fn id(&self) -> &'static str {
        match self {
            Self::PumpHead => "pump_head",
            Self::SspBand => "ssp_band",
            Self::PumpCountBox => "pump_count_box",
            Self::Integrality => "integrality",
            Self::TemperatureRise => "temperature_rise",
            Self::InletHead => "inlet_head",
            Self::OutletHead => "outlet_head",
            Self::InletTemp => "inlet_temperature",
            Self::OutletTemp => "outlet_temperature",
            Self::SegmentHead => "segment_head",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Station(usize),
    /// Segment index `seg` of gap `gap`; the head is checked at its end.
    Segment { gap: usize, seg: usize },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Station(j) => write!(f, "station {j}"),
            Location::Segment { gap, seg } => write!(f, "gap {gap} segment {seg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub location: Location,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub max_violation: f64,
}

impl FeasibilityReport {
    pub fn worst(&self) -> Option<&Violation> {
        self.violations
            .iter()
            .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityOptions {
    pub tol: f64,
    /// Also require integral pump counts.
    pub integral: bool,
    pub int_tol: f64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            tol: FEAS_TOL,
            integral: true,
            int_tol: INT_TOL,
        }
    }
}

impl FeasibilityOptions {
    pub fn relaxed() -> Self {
        Self {
            integral: false,
            ..Self::default()
        }
    }
}

/// Checks every inequality of the model against `sch`. Violations smaller
/// than `1e-12` are not listed.
pub fn check_feasibility(
    sch: &Scheme,
    scen: &Scenario,
    bounds: &NodeBounds,
    opts: FeasibilityOptions,
) -> FeasibilityReport {
    let mut out = Vec::new();
    let mut push = |constraint, location, magnitude: f64| {
        if magnitude > 1e-12 || magnitude.is_nan() {
            out.push(Violation {
                constraint,
                location,
                magnitude: if magnitude.is_nan() { f64::INFINITY } else { magnitude },
            });
        }
    };
    let np = scen.n_pump_stations();
    for j in 0..np {
        let st = &scen.stations[j];
        let at = Location::Station(j);
        let pumped = sch.h_in[j] + sch.x[j] * st.csp_head + sch.dh_sp[j];
        push(ConstraintKind::PumpHead, at, sch.h_out[j] - pumped);
        let band_lo = sch.y[j] * st.ssp_head.lo;
        let band_hi = sch.y[j] * st.ssp_head.hi;
        push(
            ConstraintKind::SspBand,
            at,
            (band_lo - sch.dh_sp[j]).max(sch.dh_sp[j] - band_hi).max(-sch.dh_sp[j]),
        );
        let box_v = (f64::from(bounds.x_lo[j]) - sch.x[j])
            .max(sch.x[j] - f64::from(bounds.x_hi[j]))
            .max(f64::from(bounds.y_lo[j]) - sch.y[j])
            .max(sch.y[j] - f64::from(bounds.y_hi[j]));
        push(ConstraintKind::PumpCountBox, at, box_v);
        if opts.integral {
            let frac = (sch.x[j] - sch.x[j].round())
                .abs()
                .max((sch.y[j] - sch.y[j].round()).abs());
            if frac > opts.int_tol {
                push(ConstraintKind::Integrality, at, frac);
            }
        }
        push(ConstraintKind::TemperatureRise, at, -sch.dt[j]);
        push(ConstraintKind::OutletHead, at, st.h_out.violation(sch.h_out[j]));
        push(ConstraintKind::OutletTemp, at, st.t_out.violation(sch.t_out[j]));
    }
    for (j, st) in scen.stations.iter().enumerate() {
        let at = Location::Station(j);
        push(ConstraintKind::InletHead, at, st.h_in.violation(sch.h_in[j]));
        push(ConstraintKind::InletTemp, at, st.t_in.violation(sch.t_in[j]));
    }
    for (j, segs) in scen.gaps.iter().enumerate() {
        for (k, seg) in segs.iter().enumerate() {
            push(
                ConstraintKind::SegmentHead,
                Location::Segment { gap: j, seg: k },
                seg.head.violation(sch.point_head[j][k + 1]),
            );
        }
    }
    let max_violation = out.iter().fold(0.0f64, |acc, v| acc.max(v.magnitude));
    FeasibilityReport {
        feasible: max_violation <= opts.tol,
        violations: out,
        max_violation,
    }
}

/// Rounds fractional pump counts up and moves the shifted-speed head into the
/// band of the rounded count. Counts within `int_tol` of an integer snap to it.
pub fn lift_integer(s: &SolutionVector, scen: &Scenario, int_tol: f64) -> SolutionVector {
    let up = |v: f64| -> f64 {
        let r = v.round();
        if (v - r).abs() <= int_tol {
            r.max(0.0)
        } else {
            v.ceil().max(0.0)
        }
    };
    let x: Vec<f64> = s.x.iter().map(|&v| up(v)).collect();
    let y: Vec<f64> = s.y.iter().map(|&v| up(v)).collect();
    let dh_sp = s
        .dh_sp
        .iter()
        .zip(&y)
        .zip(&scen.stations)
        .map(|((&dh, &yj), st)| {
            let lo = yj * st.ssp_head.lo;
            let hi = yj * st.ssp_head.hi;
            if dh < lo {
                lo
            } else if dh > hi {
                hi
            } else {
                dh
            }
        })
        .collect();
    SolutionVector {
        x,
        y,
        dh_sp,
        dt: s.dt.clone(),
        h_out: s.h_out.clone(),
        friction: None,
    }
}

/// The witness solution of a tightened scenario: all pumps of the box
/// running at full head, outlet heads at their lower bounds and outlet
/// temperatures at their upper bounds.
pub fn reference_solution(t: &TightenedScenario) -> SolutionVector {
    let scen = &t.scenario;
    let b = &t.bounds;
    let np = scen.n_pump_stations();
    let mut dt = Vec::with_capacity(np);
    let mut t_in = scen.inlet_temp;
    for j in 0..np {
        let t_out = scen.stations[j].t_out.hi;
        dt.push(t_out - t_in);
        t_in = model::gap_temperature_map(scen, j, scen.gaps[j].len()).apply(t_out);
    }
    SolutionVector {
        x: b.x_hi.iter().map(|&v| f64::from(v)).collect(),
        y: b.y_hi.iter().map(|&v| f64::from(v)).collect(),
        dh_sp: (0..np)
            .map(|j| f64::from(b.y_hi[j]) * scen.stations[j].ssp_head.hi)
            .collect(),
        dt,
        h_out: scen.stations[..np].iter().map(|st| st.h_out.lo).collect(),
        friction: None,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepairError {
    #[error("relaxed point carries no friction values")]
    MissingFriction,
    #[error("relaxed point violates the convex relaxation by {max_violation}")]
    NotRelaxedFeasible { max_violation: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Turns a point of the convex relaxation (friction only bounded below by the
/// exact loss) into one that satisfies the exact friction model, by lowering
/// outlet heads where the smaller exact losses push the profile over an upper
/// bound. Pump counts, pumped head and heating are untouched, so the cost is
/// unchanged.
pub fn repair_to_hopnr1(
    relaxed: &SolutionVector,
    reference: &SolutionVector,
    scen: &Scenario,
    bounds: &NodeBounds,
    tol: f64,
) -> Result<SolutionVector, RepairError> {
    if relaxed.friction.is_none() {
        return Err(RepairError::MissingFriction);
    }
    let loose = propagate_relaxed(relaxed, scen)?;
    let mut worst = check_feasibility(&loose, scen, bounds, FeasibilityOptions::relaxed()).max_violation;
    let exact = propagate(relaxed, scen)?;
    for (given, true_f) in loose.friction.iter().zip(&exact.friction) {
        for (g, f) in given.iter().zip(true_f) {
            worst = worst.max(f - g);
        }
    }
    if worst > tol {
        return Err(RepairError::NotRelaxedFeasible { max_violation: worst });
    }
    let witness = propagate(reference, scen)?;

    let mut h_out = relaxed.h_out.clone();
    for j in 0..scen.n_pump_stations() {
        let mut best = 0usize;
        let mut best_excess = f64::NEG_INFINITY;
        for (r, &h) in exact.point_head[j].iter().enumerate() {
            let excess = h - scen.head_bounds(j, r).hi;
            if excess > best_excess {
                best_excess = excess;
                best = r;
            }
        }
        if best_excess > 0.0 {
            let target = loose.point_head[j][best].max(witness.point_head[j][best]);
            let shift = exact.point_head[j][best] - target;
            if shift > 0.0 {
                h_out[j] -= shift;
            }
        }
    }
    Ok(SolutionVector {
        h_out,
        friction: None,
        ..relaxed.clone()
    })
}

/// For fixed pump and furnace decisions, picks the largest admissible outlet
/// head at every station, station by station. Returns `None` when no outlet
/// head satisfies the head bounds of some gap.
pub fn complete_heads(
    x: &[f64],
    y: &[f64],
    dh_sp: &[f64],
    dt: &[f64],
    scen: &Scenario,
) -> Result<Option<SolutionVector>, ModelError> {
    let np = scen.n_pump_stations();
    let mut s = SolutionVector {
        x: x.to_vec(),
        y: y.to_vec(),
        dh_sp: dh_sp.to_vec(),
        dt: dt.to_vec(),
        h_out: vec![0.0; np],
        friction: None,
    };
    // Temperatures do not depend on heads, so the losses are known upfront.
    let sch = propagate(&s, scen)?;
    let mut h_in = scen.inlet_head;
    for j in 0..np {
        let st = &scen.stations[j];
        let mut hi = (h_in + x[j] * st.csp_head + dh_sp[j]).min(st.h_out.hi);
        let mut lo = st.h_out.lo;
        let drop: Vec<f64> = sch.point_head[j].iter().map(|h| sch.point_head[j][0] - h).collect();
        for (r, d) in drop.iter().enumerate().skip(1) {
            let b = scen.head_bounds(j, r);
            hi = hi.min(b.hi + d);
            lo = lo.max(b.lo + d);
        }
        if hi < lo - FEAS_TOL * 1e-3 {
            return Ok(None);
        }
        s.h_out[j] = hi.max(lo);
        h_in = s.h_out[j] - drop[drop.len() - 1];
    }
    Ok(Some(s))
}
