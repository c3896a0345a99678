//! Best-first branch-and-bound over the integer pump counts.
//!
//! Every node is a box on the pump counts. A node is tightened by
//! [`preprocess`](crate::preprocess::preprocess), bounded from below by the
//! outer approximation of its convex relaxation, and turned into a feasible
//! scheme by head repair followed by rounding the pump counts up. Nodes whose
//! relaxation has a fractional pump count are split on the most fractional one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::bounds::NodeBounds;
use crate::preprocess::{self, InfeasibleCause, PreprocessOptions, PreprocessStatus, TightenedScenario};
use crate::relax::{self, CutPool, CutStrategy, OaError, OaOptions, OaResult, OaStatus};
use crate::scenario::Scenario;
use crate::scheme::{self, FeasibilityOptions, Scheme, SolutionVector, FEAS_TOL, INT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Friction tolerance of the outer approximation, m.
    pub eps: f64,
    /// Relative gap at which the search stops.
    pub gap_tol: f64,
    /// Nodes to process before giving up; `0` only bounds the root.
    pub max_nodes: usize,
    /// Share one cut pool across all nodes.
    pub warm_start: bool,
    pub feas_tol: f64,
    pub int_tol: f64,
    pub oa_max_iters: usize,
    pub cut_strategy: CutStrategy,
    pub preprocess: PreprocessOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            gap_tol: 1e-6,
            max_nodes: 100_000,
            warm_start: true,
            feas_tol: FEAS_TOL,
            int_tol: INT_TOL,
            oa_max_iters: 500,
            cut_strategy: CutStrategy::MaxViolation,
            preprocess: PreprocessOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Stopped by the node limit before the gap closed.
    GapLimit,
}

/// An open node: a pump-count box and the lower bound inherited from its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub bounds: NodeBounds,
    pub lb: f64,
    pub parent: Option<usize>,
    pub depth: usize,
    seq: u64,
}

impl Eq for BnbNode {}

impl Ord for BnbNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the maximum: smallest bound first, then oldest.
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for BnbNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority queue of open nodes ordered by lower bound, ties first-in first-out.
#[derive(Debug, Default)]
pub struct NodeQueue {
    heap: BinaryHeap<BnbNode>,
    next_seq: u64,
}

impl NodeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bounds: NodeBounds, lb: f64, parent: Option<usize>, depth: usize) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(BnbNode {
            bounds,
            lb,
            parent,
            depth,
            seq,
        });
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Smallest lower bound among open nodes.
    pub fn min_lb(&self) -> Option<f64> {
        self.heap.peek().map(|n| n.lb)
    }
}

/// Removes and returns the open node with the smallest lower bound.
pub fn select_node(queue: &mut NodeQueue) -> Option<BnbNode> {
    queue.heap.pop()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PumpKind {
    ConstantSpeed,
    ShiftedSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub kind: PumpKind,
    pub station: usize,
    pub value: f64,
}

/// Most fractional pump count of `s`; constant-speed pumps win ties, then
/// the lowest station index. `None` when every count is within `int_tol` of
/// an integer.
pub fn select_branch_variable(s: &SolutionVector, int_tol: f64) -> Option<Branch> {
    let mut best: Option<(f64, Branch)> = None;
    let candidates = s
        .x
        .iter()
        .enumerate()
        .map(|(j, &v)| (PumpKind::ConstantSpeed, j, v))
        .chain(s.y.iter().enumerate().map(|(j, &v)| (PumpKind::ShiftedSpeed, j, v)));
    for (kind, station, value) in candidates {
        let frac = (value - value.floor()).min(value.ceil() - value);
        if frac <= int_tol {
            continue;
        }
        if best.is_none_or(|(b, _)| frac > b) {
            best = Some((frac, Branch { kind, station, value }));
        }
    }
    best.map(|(_, b)| b)
}

/// Splits `bounds` on `branch` into the lower box (count rounded down) and
/// the upper box (count rounded up).
pub fn split(bounds: &NodeBounds, branch: &Branch) -> (NodeBounds, NodeBounds) {
    let j = branch.station;
    let mut down = bounds.clone();
    let mut up = bounds.clone();
    let (lo, hi) = match branch.kind {
        PumpKind::ConstantSpeed => (bounds.x_lo[j], bounds.x_hi[j]),
        PumpKind::ShiftedSpeed => (bounds.y_lo[j], bounds.y_hi[j]),
    };
    let floor = (branch.value.floor() as i64).clamp(i64::from(lo), i64::from(hi)) as u32;
    let floor = floor.min(hi.saturating_sub(1)).max(lo);
    let ceil = floor + 1;
    match branch.kind {
        PumpKind::ConstantSpeed => {
            down.x_hi[j] = floor;
            up.x_lo[j] = ceil;
        }
        PumpKind::ShiftedSpeed => {
            down.y_hi[j] = floor;
            up.y_lo[j] = ceil;
        }
    }
    (down, up)
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeOutcome {
    /// Inherited bound already at least the incumbent.
    PrunedByBound,
    /// Preprocessing proved the box empty.
    Infeasible(InfeasibleCause),
    /// The relaxation LP is infeasible.
    RelaxationInfeasible,
    /// Relaxation bound at least the incumbent after bounding.
    Fathomed,
    /// Relaxation optimum has integral pump counts.
    Integral,
    Branched(Branch),
    /// Root bound only (node limit of zero).
    BoundOnly,
}

impl NodeOutcome {
    fn tag(&self) -> &'static str {
        match self {
            Self::PrunedByBound => "pruned",
            Self::Infeasible(_) => "infeasible",
            Self::RelaxationInfeasible => "lp_infeasible",
            Self::Fathomed => "fathomed",
            Self::Integral => "integral",
            Self::Branched(_) => "branched",
            Self::BoundOnly => "bound_only",
        }
    }
}

/// Everything recorded about one processed node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub bounds: NodeBounds,
    pub inherited_lb: f64,
    /// Relaxation bound, when the relaxation was solved.
    pub lb: Option<f64>,
    pub oa_status: Option<OaStatus>,
    pub oa_iterations: usize,
    pub lp_solves: usize,
    pub oa_max_violation: f64,
    /// LP objectives never decreased during the cutting-plane loop.
    pub oa_monotone: bool,
    /// Cost of the relaxation point, yuan/d.
    pub relaxed_cost: Option<f64>,
    /// Cost and exact feasibility of the head-repaired relaxation point.
    pub repaired_cost: Option<f64>,
    pub repaired_feasible: Option<bool>,
    /// Exact cost of the integer scheme derived at this node, if feasible.
    pub candidate_cost: Option<f64>,
    /// Tightened outlet temperatures and reference feasibility.
    pub reference_feasible: Option<bool>,
    pub reference_temperature_tight: Option<bool>,
    pub outcome: NodeOutcome,
    pub gub: f64,
    pub glb: f64,
    pub pool_size: usize,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

impl NodeRecord {
    /// One `key=value` line, space separated, fixed key order.
    pub fn log_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "node={} parent={} depth={} box={} inherited_lb={} lb={} gub={} glb={} pool={} oa_iters={} lp_solves={} outcome={}",
            self.id,
            self.parent.map_or("-".to_string(), |p| p.to_string()),
            self.depth,
            self.bounds,
            num(self.inherited_lb),
            self.lb.map_or("-".to_string(), num),
            num(self.gub),
            num(self.glb),
            self.pool_size,
            self.oa_iterations,
            self.lp_solves,
            self.outcome.tag(),
        );
        if let NodeOutcome::Branched(b) = &self.outcome {
            let kind = match b.kind {
                PumpKind::ConstantSpeed => "x",
                PumpKind::ShiftedSpeed => "y",
            };
            let _ = write!(s, " branch={kind}{} value={}", b.station, b.value);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub incumbent: Option<SolutionVector>,
    pub scheme: Option<Scheme>,
    /// Cost of the incumbent, yuan/d (`inf` without one).
    pub gub: f64,
    pub glb: f64,
    pub root_lb: Option<f64>,
    pub node_count: usize,
    pub oa_iterations: usize,
    pub lp_solves: usize,
    pub lp_iterations: usize,
    pub wall_time: Duration,
    pub nodes: Vec<NodeRecord>,
    pub pool_size: usize,
}

fn closes(lb: f64, gub: f64, gap_tol: f64) -> bool {
    gub.is_finite() && lb >= gub - gap_tol * gub.abs().max(1.0)
}

struct Candidate {
    repaired_cost: Option<f64>,
    repaired_feasible: Option<bool>,
    incumbent: Option<(SolutionVector, Scheme, f64)>,
}

fn exact_integer_check(
    s: &SolutionVector,
    scen: &Scenario,
    bounds: &NodeBounds,
    opts: &SolveOptions,
) -> Option<(Scheme, f64)> {
    let sch = scheme::propagate(s, scen).ok()?;
    let fo = FeasibilityOptions {
        tol: opts.feas_tol,
        integral: true,
        int_tol: opts.int_tol,
    };
    if !scheme::check_feasibility(&sch, scen, bounds, fo).feasible {
        return None;
    }
    let cost = s.cost(scen).ok()?.total();
    Some((sch, cost))
}

fn make_candidate(
    scen: &Scenario,
    tight: &TightenedScenario,
    reference: &SolutionVector,
    bounds: &NodeBounds,
    relaxed: &SolutionVector,
    opts: &SolveOptions,
) -> Candidate {
    let mut out = Candidate {
        repaired_cost: None,
        repaired_feasible: None,
        incumbent: None,
    };
    let repair_tol = opts.feas_tol.max(opts.eps);
    let repaired = scheme::repair_to_hopnr1(relaxed, reference, tight.scenario(), bounds, repair_tol).ok();
    let base = match &repaired {
        Some(r) => {
            out.repaired_cost = r.cost(scen).ok().map(|c| c.total());
            out.repaired_feasible = Some(
                scheme::propagate(r, scen)
                    .map(|sch| {
                        let fo = FeasibilityOptions {
                            tol: opts.feas_tol,
                            integral: false,
                            int_tol: opts.int_tol,
                        };
                        scheme::check_feasibility(&sch, scen, bounds, fo).feasible
                    })
                    .unwrap_or(false),
            );
            r.clone()
        }
        None => relaxed.clone(),
    };
    let lifted = scheme::lift_integer(&base, scen, opts.int_tol);
    if let Some((sch, cost)) = exact_integer_check(&lifted, scen, bounds, opts) {
        out.incumbent = Some((lifted, sch, cost));
        return out;
    }
    if let Ok(Some(completed)) = scheme::complete_heads(&lifted.x, &lifted.y, &lifted.dh_sp, &lifted.dt, scen) {
        if let Some((sch, cost)) = exact_integer_check(&completed, scen, bounds, opts) {
            out.incumbent = Some((completed, sch, cost));
        }
    }
    out
}

/// Solves the scheduling problem to global optimality (within `gap_tol`).
pub fn solve(scen: &Scenario, opts: &SolveOptions) -> Result<SolveReport, OaError> {
    let start = Instant::now();
    let oa_opts = OaOptions {
        eps: opts.eps,
        max_iters: opts.oa_max_iters,
        strategy: opts.cut_strategy,
    };
    let mut shared_pool = CutPool::new();
    let mut queue = NodeQueue::new();
    queue.push(NodeBounds::root(scen), f64::NEG_INFINITY, None, 0);
    let mut report = SolveReport {
        status: SolveStatus::Infeasible,
        incumbent: None,
        scheme: None,
        gub: f64::INFINITY,
        glb: f64::NEG_INFINITY,
        root_lb: None,
        node_count: 0,
        oa_iterations: 0,
        lp_solves: 0,
        lp_iterations: 0,
        wall_time: Duration::ZERO,
        nodes: Vec::new(),
        pool_size: 0,
    };
    // Smallest bound among nodes dropped only because of the gap tolerance.
    let mut tolerance_floor = f64::INFINITY;
    let mut limit_hit = false;
    let bound_only = opts.max_nodes == 0;

    while let Some(node) = select_node(&mut queue) {
        if !bound_only && report.node_count >= opts.max_nodes {
            limit_hit = true;
            queue.push(node.bounds, node.lb, node.parent, node.depth);
            break;
        }
        let id = report.node_count;
        report.node_count += 1;
        let mut rec = NodeRecord {
            id,
            parent: node.parent,
            depth: node.depth,
            bounds: node.bounds.clone(),
            inherited_lb: node.lb,
            lb: None,
            oa_status: None,
            oa_iterations: 0,
            lp_solves: 0,
            oa_max_violation: 0.0,
            oa_monotone: true,
            relaxed_cost: None,
            repaired_cost: None,
            repaired_feasible: None,
            candidate_cost: None,
            reference_feasible: None,
            reference_temperature_tight: None,
            outcome: NodeOutcome::PrunedByBound,
            gub: report.gub,
            glb: report.glb,
            pool_size: shared_pool.len(),
        };
        let finish = |rec: &mut NodeRecord, report: &mut SolveReport, queue: &NodeQueue, floor: f64, pool: usize| {
            let open = queue.min_lb().unwrap_or(f64::INFINITY);
            report.glb = open.min(floor).min(report.gub);
            rec.gub = report.gub;
            rec.glb = report.glb;
            rec.pool_size = pool;
        };

        if closes(node.lb, report.gub, opts.gap_tol) {
            if node.lb < report.gub {
                tolerance_floor = tolerance_floor.min(node.lb);
            }
            finish(&mut rec, &mut report, &queue, tolerance_floor, shared_pool.len());
            report.nodes.push(rec);
            continue;
        }

        let pre = preprocess::preprocess_with(scen, &node.bounds, &opts.preprocess);
        let (tight, reference) = match (pre.status, pre.tightened, pre.reference) {
            (PreprocessStatus::Feasible, Some(t), Some(r)) => (t, r),
            (PreprocessStatus::Infeasible(cause), _, _) => {
                rec.outcome = NodeOutcome::Infeasible(cause);
                finish(&mut rec, &mut report, &queue, tolerance_floor, shared_pool.len());
                report.nodes.push(rec);
                continue;
            }
            _ => unreachable!("feasible preprocessing carries its scenario"),
        };
        if let Ok(sch) = scheme::propagate(&reference, tight.scenario()) {
            let rep = scheme::check_feasibility(&sch, tight.scenario(), &NodeBounds::root(scen), FeasibilityOptions::default());
            rec.reference_feasible = Some(rep.feasible);
            let tight_t = sch
                .t_out
                .iter()
                .zip(&tight.scenario().stations)
                .all(|(t, st)| (t - st.t_out.hi).abs() <= 1e-9 * (1.0 + t.abs()));
            rec.reference_temperature_tight = Some(tight_t);
        } else {
            rec.reference_feasible = Some(false);
        }

        let mut local_pool = CutPool::new();
        let pool = if opts.warm_start {
            &mut shared_pool
        } else {
            &mut local_pool
        };
        let oa = relax::outer_approximate(tight.scenario(), &node.bounds, pool, &oa_opts)?;
        account(&mut report, &mut rec, &oa);
        if oa.status == OaStatus::Infeasible {
            rec.outcome = NodeOutcome::RelaxationInfeasible;
            let pool_len = pool.len();
            finish(&mut rec, &mut report, &queue, tolerance_floor, pool_len);
            report.nodes.push(rec);
            continue;
        }
        let lb = oa.lower_bound.max(node.lb);
        rec.lb = Some(lb);
        if id == 0 {
            report.root_lb = Some(lb);
        }
        if bound_only {
            rec.outcome = NodeOutcome::BoundOnly;
            let pool_len = pool.len();
            queue.push(node.bounds, lb, node.parent, node.depth);
            finish(&mut rec, &mut report, &queue, tolerance_floor, pool_len);
            report.nodes.push(rec);
            limit_hit = true;
            break;
        }
        let relaxed = oa.solution.clone().expect("solved relaxation has a point");
        rec.relaxed_cost = relaxed.cost(tight.scenario()).ok().map(|c| c.total());

        let mut cand = make_candidate(scen, &tight, &reference, &node.bounds, &relaxed, opts);
        let mut branch_point = relaxed;
        if cand.incumbent.is_none() || cand.repaired_feasible != Some(true) {
            // Retry on a tighter approximation before giving up on this node.
            let fine = OaOptions {
                eps: opts.eps * 1e-3,
                ..oa_opts
            };
            let oa2 = relax::outer_approximate(tight.scenario(), &node.bounds, pool, &fine)?;
            account(&mut report, &mut rec, &oa2);
            if let Some(point) = oa2.solution.clone() {
                let retry = make_candidate(scen, &tight, &reference, &node.bounds, &point, opts);
                if retry.repaired_feasible == Some(true) || cand.repaired_feasible != Some(true) {
                    cand.repaired_cost = retry.repaired_cost;
                    cand.repaired_feasible = retry.repaired_feasible;
                    rec.relaxed_cost = point.cost(tight.scenario()).ok().map(|c| c.total());
                    branch_point = point;
                }
                if cand.incumbent.is_none() {
                    cand.incumbent = retry.incumbent;
                }
                if oa2.status != OaStatus::Infeasible {
                    let lb2 = oa2.lower_bound.max(lb);
                    rec.lb = Some(lb2);
                    if id == 0 {
                        report.root_lb = Some(lb2);
                    }
                }
            }
        }
        let lb = rec.lb.unwrap_or(lb);
        rec.repaired_cost = cand.repaired_cost;
        rec.repaired_feasible = cand.repaired_feasible;
        if let Some((s, sch, cost)) = cand.incumbent {
            rec.candidate_cost = Some(cost);
            if cost < report.gub {
                report.gub = cost;
                report.incumbent = Some(s);
                report.scheme = Some(sch);
            }
        }
        let pool_len = pool.len();

        if closes(lb, report.gub, opts.gap_tol) {
            if lb < report.gub {
                tolerance_floor = tolerance_floor.min(lb);
            }
            rec.outcome = NodeOutcome::Fathomed;
        } else if let Some(branch) = select_branch_variable(&branch_point, opts.int_tol) {
            let (down, up) = split(&node.bounds, &branch);
            queue.push(down, lb, Some(id), node.depth + 1);
            queue.push(up, lb, Some(id), node.depth + 1);
            rec.outcome = NodeOutcome::Branched(branch);
        } else {
            rec.outcome = NodeOutcome::Integral;
            if rec.candidate_cost.is_none() {
                // No verified scheme here; the bound stays valid for the box.
                tolerance_floor = tolerance_floor.min(lb);
            }
        }
        finish(&mut rec, &mut report, &queue, tolerance_floor, pool_len);
        report.nodes.push(rec);
    }

    report.pool_size = shared_pool.len();
    let open = queue.min_lb().unwrap_or(f64::INFINITY);
    report.glb = open.min(tolerance_floor).min(report.gub);
    report.status = if limit_hit || (report.incumbent.is_some() && !closes(report.glb, report.gub, opts.gap_tol)) {
        SolveStatus::GapLimit
    } else if report.incumbent.is_some() {
        SolveStatus::Optimal
    } else if tolerance_floor.is_finite() {
        // Some integral box had a relaxation point but no verified scheme.
        SolveStatus::GapLimit
    } else {
        SolveStatus::Infeasible
    };
    if report.status == SolveStatus::Infeasible {
        report.glb = f64::INFINITY;
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

fn account(report: &mut SolveReport, rec: &mut NodeRecord, oa: &OaResult) {
    report.oa_iterations += oa.iterations;
    report.lp_solves += oa.lp_solves;
    report.lp_iterations += oa.lp_iterations;
    rec.oa_iterations += oa.iterations;
    rec.lp_solves += oa.lp_solves;
    rec.oa_status = Some(oa.status);
    rec.oa_max_violation = oa.max_violation;
    rec.oa_monotone &= oa
        .objective_trace
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
}
