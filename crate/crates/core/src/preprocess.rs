//! Bound tightening for a node box.
//!
//! Stations are processed from the last pump station back to the first. For
//! each one the outlet temperature is pushed to its upper bound and the outlet
//! head to its lower bound; the resulting head profile along the following
//! gap either fits the head bounds, or an upper bound is hit, in which case
//! the largest admissible outlet temperature is found by solving a monotone
//! scalar equation. The outcome is a scenario whose bounds are tight enough
//! that the "hottest, lowest-head" scheme is feasible, or a proof that the
//! node contains no feasible point.

use std::fmt;

use crate::bounds::NodeBounds;
use crate::error::ModelError;
use crate::model::{self, AffineMap};
use crate::scenario::{Interval, Scenario};
use crate::scheme::{self, SolutionVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    /// Plain bisection down to the tolerance.
    Bisection,
    /// Bisection until the bracket is narrow, then Illinois-type secant steps.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessOptions {
    pub max_tighten_iters: usize,
    /// Inner loop stops once the outlet temperature bound moves less than this, °C.
    pub stall_tol: f64,
    /// Residual tolerance of the head-temperature equation, m.
    pub head_tol: f64,
    /// Bracket width at which bisection hands over to secant steps, °C.
    pub secant_switch: f64,
    pub root_method: RootMethod,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            max_tighten_iters: 50,
            stall_tol: 1e-9,
            head_tol: 1e-9,
            secant_switch: 0.1,
            root_method: RootMethod::Hybrid,
        }
    }
}

/// Why a node was found to contain no feasible point.
#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibleCause {
    /// An upper head bound is exceeded upstream of the point whose lower
    /// bound fixes the profile, so no outlet head or temperature can help.
    UpperBeforeLower {
        gap: usize,
        upper_point: usize,
        lower_point: usize,
    },
    /// Even the coldest admissible outlet temperature cannot burn enough head.
    NoRoot { gap: usize, lower_point: usize, upper_point: usize },
    /// Some lower bound exceeds its upper bound after tightening.
    Unreasonable { what: String },
    Model(ModelError),
}

impl fmt::Display for InfeasibleCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UpperBeforeLower {
                gap,
                upper_point,
                lower_point,
            } => write!(
                f,
                "gap {gap}: upper head bound at point {upper_point} is violated before the binding lower bound at point {lower_point}"
            ),
            Self::NoRoot {
                gap,
                lower_point,
                upper_point,
            } => write!(
                f,
                "gap {gap}: no admissible outlet temperature keeps point {upper_point} below its upper head bound when point {lower_point} sits on its lower bound"
            ),
            Self::Unreasonable { what } => write!(f, "empty bounds: {what}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreprocessStatus {
    Feasible,
    Infeasible(InfeasibleCause),
}

/// A scenario whose bounds went through [`preprocess`] for a given box.
#[derive(Debug, Clone, PartialEq)]
pub struct TightenedScenario {
    pub(crate) scenario: Scenario,
    pub(crate) bounds: NodeBounds,
}

impl TightenedScenario {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn bounds(&self) -> &NodeBounds {
        &self.bounds
    }

    pub fn into_scenario(self) -> Scenario {
        self.scenario
    }
}

/// What happened at one station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationLog {
    pub station: usize,
    pub t_out_hi_before: f64,
    pub t_out_hi_after: f64,
    pub h_out_lo_before: f64,
    pub h_out_lo_after: f64,
    /// Number of head-temperature equations solved.
    pub equations_solved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessResult {
    pub status: PreprocessStatus,
    pub tightened: Option<TightenedScenario>,
    pub reference: Option<SolutionVector>,
    pub log: Vec<StationLog>,
}

impl PreprocessResult {
    pub fn is_feasible(&self) -> bool {
        self.status == PreprocessStatus::Feasible
    }
}

pub fn preprocess(scen: &Scenario, bounds: &NodeBounds) -> PreprocessResult {
    preprocess_with(scen, bounds, &PreprocessOptions::default())
}

pub fn preprocess_with(scen: &Scenario, bounds: &NodeBounds, opts: &PreprocessOptions) -> PreprocessResult {
    let mut work = scen.clone();
    let mut log = Vec::new();
    let fail = |cause, log| PreprocessResult {
        status: PreprocessStatus::Infeasible(cause),
        tightened: None,
        reference: None,
        log,
    };
    for j in (0..work.n_pump_stations()).rev() {
        if let Err(cause) = domain_propagation(&mut work, j) {
            return fail(cause, log);
        }
        match tighten_station(&mut work, bounds, j, opts) {
            Ok(entry) => log.push(entry),
            Err(cause) => return fail(cause, log),
        }
        if let Err(cause) = check_reasonable(&work, j) {
            return fail(cause, log);
        }
    }
    let tightened = TightenedScenario {
        scenario: work,
        bounds: bounds.clone(),
    };
    let reference = scheme::reference_solution(&tightened);
    PreprocessResult {
        status: PreprocessStatus::Feasible,
        tightened: Some(tightened),
        reference: Some(reference),
        log,
    }
}

fn inverse(map: &AffineMap, v: f64) -> f64 {
    (v - map.offset) / map.slope
}

/// Shrinks the temperature bounds at both ends of `gap` through the monotone
/// temperature map and identifies the head bounds at the inlet of the next
/// station with those of the last segment end. Never widens an interval.
pub fn domain_propagation(scen: &mut Scenario, gap: usize) -> Result<(), InfeasibleCause> {
    let n = scen.gaps[gap].len();
    let map = model::gap_temperature_map(scen, gap, n);
    let out = scen.stations[gap].t_out;
    let next_in = scen.stations[gap + 1].t_in;
    let forward = Interval::new(map.apply(out.lo), map.apply(out.hi));
    let new_in = next_in.intersect(&forward);
    let backward = Interval::new(inverse(&map, new_in.lo), inverse(&map, new_in.hi));
    let new_out = out.intersect(&backward);
    scen.stations[gap].t_out = new_out;
    scen.stations[gap + 1].t_in = new_in;

    let last = &mut scen.gaps[gap][n - 1];
    let joint = last.head.intersect(&scen.stations[gap + 1].h_in);
    last.head = joint;
    scen.stations[gap + 1].h_in = joint;

    for (what, iv) in [
        (format!("stations[{gap}].t_out"), new_out),
        (format!("stations[{}].t_in", gap + 1), new_in),
        (format!("stations[{}].h_in", gap + 1), joint),
    ] {
        if iv.is_empty(1e-12) {
            return Err(InfeasibleCause::Unreasonable {
                what: format!("{what} = {iv}"),
            });
        }
    }
    Ok(())
}

/// Result of [`solve_head_temperature_equation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadEquationRoot {
    /// Temperature at the anchor point, °C.
    pub u: f64,
    /// Residual at `u`; never positive.
    pub residual: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoRoot {
    /// The upper bound is exceeded even at the coldest admissible temperature.
    ViolatedAtFloor { residual: f64 },
    /// The upper bound holds even at the hottest admissible temperature.
    SatisfiedAtCeiling { residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadEquationError {
    NoRoot(NoRoot),
    Model(ModelError),
    Index { lower_point: usize, upper_point: usize },
}

impl From<ModelError> for HeadEquationError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Finds the temperature `u` at point `lower_point` of `gap` for which the
/// head profile that sits on the lower head bound at `lower_point` reaches
/// exactly the upper head bound at `upper_point`.
///
/// The residual `lb - sum(friction + elevation) - ub` increases with `u`
/// (warmer oil loses less head), so the root is bracketed over the
/// temperatures reachable from the station outlet bounds. The returned root
/// is on the safe side: its residual is in `[-head_tol, 0]`.
pub fn solve_head_temperature_equation(
    scen: &Scenario,
    gap: usize,
    lower_point: usize,
    upper_point: usize,
    opts: &PreprocessOptions,
) -> Result<HeadEquationRoot, HeadEquationError> {
    let n = scen.gaps[gap].len();
    if lower_point >= upper_point || upper_point > n {
        return Err(HeadEquationError::Index {
            lower_point,
            upper_point,
        });
    }
    let map = model::gap_temperature_map(scen, gap, lower_point);
    let t_out = scen.stations[gap].t_out;
    let lo = map.apply(t_out.lo);
    let hi = map.apply(t_out.hi);
    let head_lb = scen.head_bounds(gap, lower_point).lo;
    let head_ub = scen.head_bounds(gap, upper_point).hi;
    let coeffs = model::chain_coefficients(scen, gap, lower_point, upper_point - lower_point)?;
    let segs = &scen.gaps[gap][lower_point..upper_point];
    let mut evaluations = 0usize;
    let mut residual = |u: f64| -> Result<f64, ModelError> {
        evaluations += 1;
        let mut drop = 0.0;
        for (c, seg) in coeffs.iter().zip(segs) {
            drop += model::friction_head_loss(c.average_at(u), seg, &scen.fluid, &scen.friction)?;
            drop += seg.elevation_change;
        }
        Ok(head_lb - drop - head_ub)
    };

    let r_lo = residual(lo)?;
    if r_lo > 0.0 {
        return Err(HeadEquationError::NoRoot(NoRoot::ViolatedAtFloor { residual: r_lo }));
    }
    if r_lo >= -opts.head_tol {
        return Ok(HeadEquationRoot {
            u: lo,
            residual: r_lo,
            evaluations,
        });
    }
    let r_hi = residual(hi)?;
    if r_hi <= 0.0 {
        return Err(HeadEquationError::NoRoot(NoRoot::SatisfiedAtCeiling { residual: r_hi }));
    }

    // Invariant: residual(a) < 0 < residual(b). The weights implement the
    // Illinois modification of false position.
    let (mut a, mut fa, mut b, mut fb) = (lo, r_lo, hi, r_hi);
    let (mut wa, mut wb) = (1.0, 1.0);
    let mut last_moved = 0i8;
    for _ in 0..400 {
        let width = b - a;
        if width <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        let use_secant = opts.root_method == RootMethod::Hybrid && width < opts.secant_switch;
        let mut c = if use_secant {
            let (ga, gb) = (fa * wa, fb * wb);
            (a * gb - b * ga) / (gb - ga)
        } else {
            0.5 * (a + b)
        };
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = residual(c)?;
        if fc > 0.0 {
            b = c;
            fb = fc;
            wb = 1.0;
            if last_moved == 1 {
                wa *= 0.5;
            }
            last_moved = 1;
        } else {
            a = c;
            fa = fc;
            wa = 1.0;
            if fc >= -opts.head_tol {
                break;
            }
            if last_moved == -1 {
                wb *= 0.5;
            }
            last_moved = -1;
        }
    }
    Ok(HeadEquationRoot {
        u: a,
        residual: fa,
        evaluations,
    })
}

fn tighten_station(
    scen: &mut Scenario,
    bounds: &NodeBounds,
    j: usize,
    opts: &PreprocessOptions,
) -> Result<StationLog, InfeasibleCause> {
    let n = scen.gaps[j].len();
    let t_before = scen.stations[j].t_out.hi;
    let h_before = scen.stations[j].h_out.lo;
    let mut solved = 0usize;
    let mut stalled = false;
    let lifted = loop {
        let t_out = scen.stations[j].t_out.hi;
        let profile = head_profile(scen, j, t_out, scen.stations[j].h_out.lo).map_err(InfeasibleCause::Model)?;
        let mut lower_point = 0usize;
        let mut lift = f64::NEG_INFINITY;
        for (r, &h) in profile.iter().enumerate() {
            let need = scen.head_bounds(j, r).lo - h;
            if need > lift {
                lift = need;
                lower_point = r;
            }
        }
        let lifted: Vec<f64> = profile.iter().map(|h| h + lift).collect();

        let mut upper_point = None;
        let mut worst = 0.0f64;
        let mut first_violation = None;
        for (r, &h) in lifted.iter().enumerate() {
            let ub = scen.head_bounds(j, r).hi;
            let excess = h - ub;
            if excess > 1e-9 * (1.0 + ub.abs()) {
                first_violation.get_or_insert(r);
                if excess > worst {
                    worst = excess;
                    upper_point = Some(r);
                }
            }
        }
        let (Some(upper_point), Some(first)) = (upper_point, first_violation) else {
            break lifted;
        };
        if first < lower_point {
            return Err(InfeasibleCause::UpperBeforeLower {
                gap: j,
                upper_point: first,
                lower_point,
            });
        }
        if first == lower_point {
            return Err(InfeasibleCause::Unreasonable {
                what: format!("head bounds at point {lower_point} of gap {j} = {}", scen.head_bounds(j, lower_point)),
            });
        }
        if stalled || solved >= opts.max_tighten_iters {
            break lifted;
        }
        let root = match solve_head_temperature_equation(scen, j, lower_point, upper_point, opts) {
            Ok(root) => root,
            Err(HeadEquationError::NoRoot(NoRoot::ViolatedAtFloor { .. })) => {
                return Err(InfeasibleCause::NoRoot {
                    gap: j,
                    lower_point,
                    upper_point,
                })
            }
            Err(HeadEquationError::NoRoot(NoRoot::SatisfiedAtCeiling { .. })) => break lifted,
            Err(HeadEquationError::Model(e)) => return Err(InfeasibleCause::Model(e)),
            Err(HeadEquationError::Index { .. }) => unreachable!("points come from the profile"),
        };
        solved += 1;
        let candidate = model::inverse_temperature_to_station(scen, j, lower_point, root.u);
        let new_hi = candidate.min(t_out).max(scen.stations[j].t_out.lo);
        scen.stations[j].t_out.hi = new_hi;
        stalled = t_out - new_hi < opts.stall_tol;
    };
    debug_assert_eq!(lifted.len(), n + 1);

    let st = scen.stations[j];
    let capacity = f64::from(bounds.x_hi[j]) * st.csp_head + f64::from(bounds.y_hi[j]) * st.ssp_head.hi;
    let h_out_lo = lifted[0];
    let s = &mut scen.stations[j];
    s.h_out.lo = h_out_lo;
    s.h_in.lo = s.h_in.lo.max(h_out_lo - capacity);
    s.t_in.hi = s.t_in.hi.min(s.t_out.hi);
    Ok(StationLog {
        station: j,
        t_out_hi_before: t_before,
        t_out_hi_after: s.t_out.hi,
        h_out_lo_before: h_before,
        h_out_lo_after: h_out_lo,
        equations_solved: solved,
    })
}

/// Head at every point of `gap` when the station outlet is at `t_out` and `h_out`.
fn head_profile(scen: &Scenario, gap: usize, t_out: f64, h_out: f64) -> Result<Vec<f64>, ModelError> {
    let mut heads = Vec::with_capacity(scen.gaps[gap].len() + 1);
    heads.push(h_out);
    let mut t = t_out;
    for seg in &scen.gaps[gap] {
        let t1 = model::axial_outlet_temperature(t, seg, &scen.fluid);
        let f = model::friction_head_loss(model::average_temperature(t, t1), seg, &scen.fluid, &scen.friction)?;
        heads.push(heads.last().copied().unwrap_or(h_out) - f - seg.elevation_change);
        t = t1;
    }
    Ok(heads)
}

fn check_reasonable(scen: &Scenario, j: usize) -> Result<(), InfeasibleCause> {
    let tol = 1e-12;
    let st = &scen.stations[j];
    let next = &scen.stations[j + 1];
    let mut checks = vec![
        (format!("stations[{j}].h_in"), st.h_in),
        (format!("stations[{j}].h_out"), st.h_out),
        (format!("stations[{j}].t_in"), st.t_in),
        (format!("stations[{j}].t_out"), st.t_out),
        (format!("stations[{}].h_in", j + 1), next.h_in),
        (format!("stations[{}].t_in", j + 1), next.t_in),
    ];
    for (k, seg) in scen.gaps[j].iter().enumerate() {
        checks.push((format!("gaps[{j}].segments[{k}].head"), seg.head));
    }
    for (what, iv) in checks {
        if iv.is_empty(tol) {
            return Err(InfeasibleCause::Unreasonable {
                what: format!("{what} = {iv}"),
            });
        }
    }
    Ok(())
}
