//! Linear outer approximation of the convex relaxation.
//!
//! The relaxation keeps every linear relation of the model, treats pump
//! counts as continuous within the node box and replaces each friction
//! equality by `F >= f(T_ave)`. That convex constraint is represented by
//! tangent cuts collected in a [`CutPool`]; cuts never mention pump counts,
//! so one pool serves every node of the search tree.

use std::collections::HashSet;

use thiserror::Error;

pub use crate::bounds::NodeBounds;
use crate::error::ModelError;
use crate::lp::{LpError, LpProblem, LpStatus, Relation};
use crate::model;
use crate::scenario::{Interval, Scenario};
use crate::scheme::{Scheme, SolutionVector};

/// Tangent of the friction loss of one segment at temperature `omega`:
/// `F >= value + slope * (T_ave - omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub gap: usize,
    pub seg: usize,
    /// °C
    pub omega: f64,
    /// m/°C, never positive.
    pub slope: f64,
    /// Segment friction loss at `omega`, m.
    pub value: f64,
}

impl Cut {
    /// Right-hand side of the cut at average temperature `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.value + self.slope * (t - self.omega)
    }

    fn key(&self) -> (usize, usize, i64) {
        (self.gap, self.seg, (self.omega * 1e6).round() as i64)
    }
}

pub fn subgradient_cut(scen: &Scenario, gap: usize, seg: usize, omega: f64) -> Result<Cut, ModelError> {
    Ok(Cut {
        gap,
        seg,
        omega,
        slope: scen.friction_slope(gap, seg, omega)?,
        value: scen.friction(gap, seg, omega)?,
    })
}

/// Insertion-ordered set of cuts, deduplicated on segment and the
/// linearisation temperature rounded to 1e-6 °C.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    seen: HashSet<(usize, usize, i64)>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `cut` unless an equivalent one is present. Returns whether it was added.
    pub fn insert(&mut self, cut: Cut) -> bool {
        if self.seen.insert(cut.key()) {
            self.cuts.push(cut);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, cut: &Cut) -> bool {
        self.seen.contains(&cut.key())
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cut> {
        self.cuts.iter()
    }

    /// Adds every cut of `other` not yet present.
    pub fn merge(&mut self, other: &CutPool) {
        for c in &other.cuts {
            self.insert(*c);
        }
    }
}

/// Column indices of the relaxation LP.
///
/// Columns are laid out station by station. Pump station `j` owns, in this
/// order: `x, y, dh_sp, dt, h_in, h_out, t_in, t_out`; the terminal station
/// owns `h_in, t_in`. Then for every gap and segment: `head_end` and
/// `temp_end` (absent for the last segment of a gap, whose end is the inlet
/// of the next station), `t_ave` and `friction`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableMap {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub dh_sp: Vec<usize>,
    pub dt: Vec<usize>,
    pub h_in: Vec<usize>,
    pub h_out: Vec<usize>,
    pub t_in: Vec<usize>,
    pub t_out: Vec<usize>,
    /// `point_head[j][r]` for every point `r` of gap `j`, aliasing station columns at the ends.
    pub point_head: Vec<Vec<usize>>,
    pub point_temp: Vec<Vec<usize>>,
    pub t_ave: Vec<Vec<usize>>,
    pub friction: Vec<Vec<usize>>,
    /// Number of rows before the cut rows.
    pub structural_rows: usize,
}

impl VariableMap {
    /// Reads the decision vector, with friction, out of an LP point.
    pub fn decode(&self, v: &[f64]) -> SolutionVector {
        let pick = |ix: &[usize]| ix.iter().map(|&i| v[i]).collect::<Vec<_>>();
        SolutionVector {
            x: pick(&self.x),
            y: pick(&self.y),
            dh_sp: pick(&self.dh_sp),
            dt: pick(&self.dt),
            h_out: pick(&self.h_out),
            friction: Some(self.friction.iter().map(|g| pick(g)).collect()),
        }
    }

    pub fn decode_t_ave(&self, v: &[f64]) -> Vec<Vec<f64>> {
        self.t_ave.iter().map(|g| g.iter().map(|&i| v[i]).collect()).collect()
    }

    /// LP point corresponding to a scheme.
    pub fn encode(&self, sch: &Scheme, n_cols: usize) -> Vec<f64> {
        let mut v = vec![0.0; n_cols];
        for j in 0..self.x.len() {
            v[self.x[j]] = sch.x[j];
            v[self.y[j]] = sch.y[j];
            v[self.dh_sp[j]] = sch.dh_sp[j];
            v[self.dt[j]] = sch.dt[j];
            v[self.h_out[j]] = sch.h_out[j];
            v[self.t_out[j]] = sch.t_out[j];
        }
        for j in 0..self.h_in.len() {
            v[self.h_in[j]] = sch.h_in[j];
            v[self.t_in[j]] = sch.t_in[j];
        }
        for j in 0..self.point_head.len() {
            for (r, &c) in self.point_head[j].iter().enumerate() {
                v[c] = sch.point_head[j][r];
            }
            for (r, &c) in self.point_temp[j].iter().enumerate() {
                v[c] = sch.point_temp[j][r];
            }
            for (k, &c) in self.t_ave[j].iter().enumerate() {
                v[c] = sch.t_ave[j][k];
            }
            for (k, &c) in self.friction[j].iter().enumerate() {
                v[c] = sch.friction[j][k];
            }
        }
        v
    }
}

/// Number of rows of a relaxation LP without cuts: three per segment and
/// four per pump station.
pub fn structural_row_count(scen: &Scenario) -> usize {
    3 * scen.total_segments() + 4 * scen.n_pump_stations()
}

/// Bounds on the temperature at every point of `gap` implied by the outlet
/// temperature box of its upstream station.
fn point_temperature_bounds(scen: &Scenario, gap: usize) -> Vec<Interval> {
    let out = scen.stations[gap].t_out;
    let mut cur = out;
    let mut pts = vec![cur];
    for seg in &scen.gaps[gap] {
        cur = Interval::new(
            model::axial_outlet_temperature(cur.lo, seg, &scen.fluid),
            model::axial_outlet_temperature(cur.hi, seg, &scen.fluid),
        );
        pts.push(cur);
    }
    pts
}

/// Builds the relaxation LP of `scen` over the box `bounds` with the cuts of `pool`.
pub fn build_hoplr(scen: &Scenario, bounds: &NodeBounds, pool: &CutPool) -> (LpProblem, VariableMap) {
    let np = scen.n_pump_stations();
    let inf = f64::INFINITY;
    let mut lp = LpProblem::new();
    let mut map = VariableMap {
        x: Vec::new(),
        y: Vec::new(),
        dh_sp: Vec::new(),
        dt: Vec::new(),
        h_in: Vec::new(),
        h_out: Vec::new(),
        t_in: Vec::new(),
        t_out: Vec::new(),
        point_head: Vec::new(),
        point_temp: Vec::new(),
        t_ave: Vec::new(),
        friction: Vec::new(),
        structural_rows: 0,
    };
    for (j, st) in scen.stations.iter().enumerate() {
        let mut h_in = st.h_in;
        if j > 0 {
            if let Some(last) = scen.gaps[j - 1].last() {
                h_in = h_in.intersect(&last.head);
            }
        }
        if j < np {
            let rates = scen.cost_rates(j);
            map.x.push(lp.add_variable(rates.per_csp, f64::from(bounds.x_lo[j]), f64::from(bounds.x_hi[j])));
            map.y.push(lp.add_variable(0.0, f64::from(bounds.y_lo[j]), f64::from(bounds.y_hi[j])));
            map.dh_sp.push(lp.add_variable(rates.per_ssp_metre, 0.0, inf));
            map.dt.push(lp.add_variable(rates.per_degree, 0.0, inf));
            map.h_in.push(lp.add_variable(0.0, h_in.lo, h_in.hi));
            map.h_out.push(lp.add_variable(0.0, st.h_out.lo, st.h_out.hi));
            map.t_in.push(lp.add_variable(0.0, st.t_in.lo, st.t_in.hi));
            map.t_out.push(lp.add_variable(0.0, st.t_out.lo, st.t_out.hi));
        } else {
            map.h_in.push(lp.add_variable(0.0, h_in.lo, h_in.hi));
            map.t_in.push(lp.add_variable(0.0, st.t_in.lo, st.t_in.hi));
        }
    }
    for j in 0..np {
        let segs = &scen.gaps[j];
        let n = segs.len();
        let temps = point_temperature_bounds(scen, j);
        let mut heads = vec![map.h_out[j]];
        let mut pts = vec![map.t_out[j]];
        let mut aves = Vec::with_capacity(n);
        let mut frs = Vec::with_capacity(n);
        for (k, seg) in segs.iter().enumerate() {
            if k + 1 < n {
                heads.push(lp.add_variable(0.0, seg.head.lo, seg.head.hi));
                pts.push(lp.add_variable(0.0, temps[k + 1].lo, temps[k + 1].hi));
            } else {
                heads.push(map.h_in[j + 1]);
                pts.push(map.t_in[j + 1]);
            }
            let ave = Interval::new(
                model::average_temperature(temps[k].lo, temps[k + 1].lo),
                model::average_temperature(temps[k].hi, temps[k + 1].hi),
            );
            aves.push(lp.add_variable(0.0, ave.lo, ave.hi));
            frs.push(lp.add_variable(0.0, 0.0, inf));
        }
        map.point_head.push(heads);
        map.point_temp.push(pts);
        map.t_ave.push(aves);
        map.friction.push(frs);
    }

    for j in 0..np {
        let st = &scen.stations[j];
        lp.add_constraint(
            vec![(map.t_in[j], 1.0), (map.dt[j], 1.0), (map.t_out[j], -1.0)],
            Relation::Eq,
            0.0,
        );
        lp.add_constraint(
            vec![
                (map.h_in[j], 1.0),
                (map.x[j], st.csp_head),
                (map.dh_sp[j], 1.0),
                (map.h_out[j], -1.0),
            ],
            Relation::Ge,
            0.0,
        );
        lp.add_constraint(vec![(map.dh_sp[j], 1.0), (map.y[j], -st.ssp_head.lo)], Relation::Ge, 0.0);
        lp.add_constraint(vec![(map.dh_sp[j], 1.0), (map.y[j], -st.ssp_head.hi)], Relation::Le, 0.0);
        for (k, seg) in scen.gaps[j].iter().enumerate() {
            let a = model::thermal_decay(seg, &scen.fluid).factor;
            let (t0, t1) = (map.point_temp[j][k], map.point_temp[j][k + 1]);
            lp.add_constraint(vec![(t1, 1.0), (t0, -a)], Relation::Eq, seg.ambient() * (1.0 - a));
            lp.add_constraint(
                vec![(map.t_ave[j][k], 1.0), (t0, -1.0 / 3.0), (t1, -2.0 / 3.0)],
                Relation::Eq,
                0.0,
            );
            let (h0, h1) = (map.point_head[j][k], map.point_head[j][k + 1]);
            lp.add_constraint(
                vec![(h1, 1.0), (h0, -1.0), (map.friction[j][k], 1.0)],
                Relation::Eq,
                -seg.elevation_change,
            );
        }
    }
    map.structural_rows = lp.n_rows();
    for cut in pool.iter() {
        lp.add_constraint(
            vec![(map.friction[cut.gap][cut.seg], 1.0), (map.t_ave[cut.gap][cut.seg], -cut.slope)],
            Relation::Ge,
            cut.value - cut.slope * cut.omega,
        );
    }
    (lp, map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutStrategy {
    /// One cut per iteration, at the most violated segment overall.
    MaxViolation,
    /// One cut per iteration for the most violated segment of every gap.
    PerGap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OaOptions {
    /// Friction violation accepted at termination, m.
    pub eps: f64,
    pub max_iters: usize,
    pub strategy: CutStrategy,
}

impl Default for OaOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iters: 500,
            strategy: CutStrategy::MaxViolation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OaStatus {
    /// Friction violation at most `eps` everywhere.
    Converged,
    Infeasible,
    IterationLimit,
    /// The most violated cut is already in the pool (LP round-off).
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OaResult {
    pub status: OaStatus,
    /// Last LP point; `None` when the LP is infeasible.
    pub solution: Option<SolutionVector>,
    /// Last LP objective, yuan/d. A valid lower bound whenever the LP was solved.
    pub lower_bound: f64,
    pub iterations: usize,
    pub lp_solves: usize,
    pub lp_iterations: usize,
    /// Objective of every LP solved, in order.
    pub objective_trace: Vec<f64>,
    /// Largest `exact friction - LP friction` at the last LP point, m.
    pub max_violation: f64,
    pub cuts_added: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OaError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("relaxation LP is unbounded")]
    Unbounded,
}

/// Cutting-plane loop on the relaxation of the box `bounds`. Cuts found are
/// added to `pool`, which may already hold cuts from other nodes.
pub fn outer_approximate(
    scen: &Scenario,
    bounds: &NodeBounds,
    pool: &mut CutPool,
    opts: &OaOptions,
) -> Result<OaResult, OaError> {
    let mut res = OaResult {
        status: OaStatus::IterationLimit,
        solution: None,
        lower_bound: f64::NEG_INFINITY,
        iterations: 0,
        lp_solves: 0,
        lp_iterations: 0,
        objective_trace: Vec::new(),
        max_violation: f64::INFINITY,
        cuts_added: 0,
    };
    while res.iterations < opts.max_iters {
        res.iterations += 1;
        let (lp, map) = build_hoplr(scen, bounds, pool);
        let sol = lp.solve()?;
        res.lp_solves += 1;
        res.lp_iterations += sol.iterations;
        match sol.status {
            LpStatus::Infeasible => {
                res.status = OaStatus::Infeasible;
                res.solution = None;
                return Ok(res);
            }
            LpStatus::Unbounded => return Err(OaError::Unbounded),
            LpStatus::Optimal => {}
        }
        res.lower_bound = sol.objective;
        res.objective_trace.push(sol.objective);
        let point = map.decode(&sol.x);
        let t_ave = map.decode_t_ave(&sol.x);
        let given = point.friction.as_ref().expect("decode fills friction");

        let mut worst = f64::NEG_INFINITY;
        let mut picks: Vec<(f64, usize, usize)> = Vec::new();
        for (j, aves) in t_ave.iter().enumerate() {
            let mut gap_best: Option<(f64, usize, usize)> = None;
            for (k, &t) in aves.iter().enumerate() {
                let v = scen.friction(j, k, t)? - given[j][k];
                if v > worst {
                    worst = v;
                }
                if gap_best.is_none_or(|(bv, _, _)| v > bv) {
                    gap_best = Some((v, j, k));
                }
            }
            if let Some(b) = gap_best {
                picks.push(b);
            }
        }
        res.max_violation = worst.max(0.0);
        res.solution = Some(point);
        if worst <= opts.eps {
            res.status = OaStatus::Converged;
            return Ok(res);
        }
        if opts.strategy == CutStrategy::MaxViolation {
            let best = picks
                .iter()
                .copied()
                .fold(None::<(f64, usize, usize)>, |acc, p| match acc {
                    Some(a) if a.0 >= p.0 => Some(a),
                    _ => Some(p),
                });
            picks = best.into_iter().collect();
        }
        let mut added = 0;
        for (v, j, k) in picks {
            if v <= opts.eps {
                continue;
            }
            if pool.insert(subgradient_cut(scen, j, k, t_ave[j][k])?) {
                added += 1;
            }
        }
        res.cuts_added += added;
        if added == 0 {
            res.status = OaStatus::Stalled;
            return Ok(res);
        }
    }
    Ok(res)
}
