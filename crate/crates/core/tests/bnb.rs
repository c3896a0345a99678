use std::collections::HashSet;

use hop_core::bnb::{select_branch_variable, select_node, split, Branch, NodeOutcome, NodeQueue, PumpKind};
use hop_core::{solve, NodeBounds, Scenario, SolutionVector, SolveOptions, SolveStatus};
use hop_testkit::cutting_stock::min_cost_cover;
use hop_testkit::grid::{grid_optimum, GridOptions};
use hop_testkit::instances::{cutting_stock_pipeline, random_instance, toy3, Pattern, RandomShape};
use hop_testkit::physics::{evaluate_decision, station_prices, Decision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Scenario {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), RandomShape::default())
}

fn decision(s: &SolutionVector) -> Decision {
    Decision {
        x: s.x.clone(),
        y: s.y.clone(),
        dh_sp: s.dh_sp.clone(),
        dt: s.dt.clone(),
        h_out: s.h_out.clone(),
    }
}

#[test]
fn queue_pops_smallest_bound_first_and_breaks_ties_by_age() {
    let b = |v: u32| NodeBounds::fixed(&[v], &[0]);
    let mut q = NodeQueue::new();
    q.push(b(0), 3.0, None, 0);
    q.push(b(1), 1.0, None, 0);
    q.push(b(2), 2.0, None, 0);
    q.push(b(3), 1.0, None, 0);
    assert_eq!(q.min_lb(), Some(1.0));
    let order: Vec<u32> = std::iter::from_fn(|| select_node(&mut q)).map(|n| n.bounds.x_lo[0]).collect();
    assert_eq!(order, vec![1, 3, 2, 0]);
    assert!(q.is_empty());
}

#[test]
fn branching_picks_the_most_fractional_count() {
    let s = SolutionVector {
        x: vec![1.2, 0.55],
        y: vec![0.5, 1.0],
        dh_sp: vec![0.0; 2],
        dt: vec![0.0; 2],
        h_out: vec![0.0; 2],
        friction: None,
    };
    let b = select_branch_variable(&s, 1e-6).unwrap();
    assert_eq!((b.kind, b.station), (PumpKind::ShiftedSpeed, 0));
    let tie = SolutionVector {
        x: vec![0.5, 0.0],
        ..s.clone()
    };
    assert_eq!(select_branch_variable(&tie, 1e-6).unwrap().kind, PumpKind::ConstantSpeed);
    let integral = SolutionVector {
        x: vec![1.0, 2.0 + 1e-9],
        y: vec![0.0, 1.0],
        ..s
    };
    assert!(select_branch_variable(&integral, 1e-6).is_none());
}

#[test]
fn split_partitions_the_box() {
    let root = NodeBounds {
        x_lo: vec![0, 0],
        x_hi: vec![2, 3],
        y_lo: vec![0, 0],
        y_hi: vec![1, 1],
    };
    let br = Branch {
        kind: PumpKind::ConstantSpeed,
        station: 1,
        value: 1.4,
    };
    let (down, up) = split(&root, &br);
    assert_eq!((down.x_lo[1], down.x_hi[1]), (0, 1));
    assert_eq!((up.x_lo[1], up.x_hi[1]), (2, 3));
    assert_eq!(down.cardinality() + up.cardinality(), root.cardinality());
    assert_eq!(root.to_string(), "x=0-2,0-3;y=0-1,0-1");
}

#[test]
fn optimum_matches_the_grid_oracle() {
    let mut compared = 0;
    for seed in 100..112 {
        let scen = instance(seed);
        let grid = grid_optimum(&scen, GridOptions::default());
        let rep = solve(&scen, &SolveOptions::default()).unwrap();
        match grid.cost {
            None => assert_eq!(rep.status, SolveStatus::Infeasible, "seed {seed}"),
            Some(best) => {
                assert_eq!(rep.status, SolveStatus::Optimal, "seed {seed}");
                let inc = rep.incumbent.as_ref().unwrap();
                assert!(inc.is_integral(0.0));
                let cost = evaluate_decision(&scen, &decision(inc), 1e-6).unwrap();
                assert!((cost - rep.gub).abs() <= 1e-9 * cost);
                assert!(rep.gub <= best * (1.0 + 1e-6), "seed {seed}: {} > grid {best}", rep.gub);
                assert!(best - rep.gub <= grid.resolution + 1e-4 * best, "seed {seed}");
                compared += 1;
            }
        }
    }
    assert!(compared >= 8);
}

#[test]
fn every_node_bound_stays_below_the_incumbent() {
    for seed in 0..15 {
        let scen = instance(seed);
        let rep = solve(&scen, &SolveOptions::default()).unwrap();
        if rep.status != SolveStatus::Optimal {
            continue;
        }
        let tol = 1e-6 * rep.gub;
        assert!(rep.root_lb.unwrap() <= rep.gub + tol);
        assert!(rep.glb <= rep.gub + tol && rep.glb >= rep.gub - 1e-6 * rep.gub - 1e-9);
        let mut boxes = HashSet::new();
        for node in &rep.nodes {
            if node.outcome != NodeOutcome::PrunedByBound {
                assert!(node.inherited_lb <= rep.gub + tol, "seed {seed} {}", node.log_line());
            }
            if let (Some(lb), NodeOutcome::Branched(_)) = (node.lb, &node.outcome) {
                assert!(lb < node.gub, "seed {seed} {}", node.log_line());
            }
            assert!(node.oa_monotone);
            if node.lb.is_some() {
                assert!(node.oa_max_violation <= 1e-6);
                assert!(boxes.insert(node.bounds.clone()), "box solved twice");
            }
            if let Some(c) = node.candidate_cost {
                assert!(c >= rep.gub - tol);
            }
        }
    }
}

#[test]
fn warm_and_cold_pools_agree_on_the_optimum() {
    let scen = toy3();
    let warm = solve(&scen, &SolveOptions::default()).unwrap();
    let cold = solve(
        &scen,
        &SolveOptions {
            warm_start: false,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert_eq!(warm.status, SolveStatus::Optimal);
    assert!((warm.gub - cold.gub).abs() <= 1e-6 * warm.gub);
    assert!(warm.lp_solves <= cold.lp_solves);
    assert!(warm.pool_size > 0);
}

#[test]
fn zero_node_limit_reports_the_root_bound_only() {
    let scen = toy3();
    let rep = solve(
        &scen,
        &SolveOptions {
            max_nodes: 0,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert_eq!(rep.status, SolveStatus::GapLimit);
    assert!(rep.incumbent.is_none());
    assert_eq!(rep.node_count, 1);
    assert_eq!(rep.nodes[0].outcome, NodeOutcome::BoundOnly);
    assert_eq!(Some(rep.glb), rep.root_lb);
    let full = solve(&scen, &SolveOptions::default()).unwrap();
    assert!(rep.root_lb.unwrap() <= full.gub);
}

#[test]
fn node_limit_stops_with_a_gap() {
    let mut limited = None;
    for seed in 0..40 {
        let scen = instance(seed);
        let full = solve(&scen, &SolveOptions::default()).unwrap();
        if full.node_count >= 5 {
            limited = Some((scen, full));
            break;
        }
    }
    let (scen, full) = limited.expect("some instance branches");
    let rep = solve(
        &scen,
        &SolveOptions {
            max_nodes: 2,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert_eq!(rep.status, SolveStatus::GapLimit);
    assert_eq!(rep.node_count, 2);
    assert!(rep.glb <= full.gub + 1e-6 * full.gub);
}

#[test]
fn log_lines_have_a_fixed_key_order() {
    let rep = solve(&toy3(), &SolveOptions::default()).unwrap();
    let line = rep.nodes[0].log_line();
    let keys: Vec<&str> = line.split(' ').map(|kv| kv.split('=').next().unwrap()).collect();
    assert_eq!(
        &keys[..12],
        &["node", "parent", "depth", "box", "inherited_lb", "lb", "gub", "glb", "pool", "oa_iters", "lp_solves", "outcome"]
    );
}

fn cutting_stock_case(patterns: &[Pattern], demand: u32) {
    let scen = cutting_stock_pipeline(patterns, demand);
    let items: Vec<(u32, u32, f64)> = patterns
        .iter()
        .enumerate()
        .map(|(j, p)| (p.max_uses, p.yield_per_use, station_prices(&scen, j).csp))
        .collect();
    let dp = min_cost_cover(&items, demand);
    let rep = solve(&scen, &SolveOptions::default()).unwrap();
    match dp {
        None => assert_eq!(rep.status, SolveStatus::Infeasible),
        Some(dp) => {
            assert_eq!(rep.status, SolveStatus::Optimal, "{patterns:?} demand {demand}");
            assert!((rep.gub - dp.cost).abs() <= 1e-9 * dp.cost.max(1.0), "{} vs {}", rep.gub, dp.cost);
        }
    }
}

#[test]
fn cutting_stock_reduction_matches_the_dynamic_program() {
    let fixed = [
        Pattern { max_uses: 3, yield_per_use: 7, efficiency: 0.8 },
        Pattern { max_uses: 2, yield_per_use: 11, efficiency: 0.7 },
        Pattern { max_uses: 4, yield_per_use: 5, efficiency: 0.85 },
    ];
    cutting_stock_case(&fixed, 29);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let n = rng.gen_range(2..=4);
        let patterns: Vec<Pattern> = (0..n)
            .map(|_| Pattern {
                max_uses: rng.gen_range(1..=4),
                yield_per_use: rng.gen_range(3..=20),
                efficiency: rng.gen_range(0.6..0.9),
            })
            .collect();
        let cap: u32 = patterns.iter().map(|p| p.max_uses * p.yield_per_use).sum();
        let demand = rng.gen_range(1..cap);
        cutting_stock_case(&patterns, demand);
    }
}

#[test]
fn unmeetable_demand_is_infeasible() {
    let patterns = [
        Pattern { max_uses: 1, yield_per_use: 4, efficiency: 0.8 },
        Pattern { max_uses: 2, yield_per_use: 3, efficiency: 0.8 },
    ];
    let scen = cutting_stock_pipeline(&patterns, 11);
    let rep = solve(&scen, &SolveOptions::default()).unwrap();
    assert_eq!(rep.status, SolveStatus::Infeasible);
    assert!(rep.incumbent.is_none());
    assert_eq!(rep.gub, f64::INFINITY);
}
