use hop_core::lp::{LpProblem, LpStatus, Relation};
use hop_testkit::lp_oracle::{random_lp, vertex_optimum};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn simplex_matches_vertex_enumeration_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut optimal = 0;
    let mut infeasible = 0;
    for case in 0..20 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=6);
        let lp = random_lp(&mut rng, n, m);
        let sol = lp.solve().unwrap();
        match vertex_optimum(&lp) {
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
                let tol = 1e-6 * best.abs().max(1.0);
                assert!((sol.objective - best).abs() <= tol, "case {case}: {} vs {best}", sol.objective);
                assert!(lp.max_violation(&sol.x) <= 1e-7, "case {case}");
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}");
                infeasible += 1;
            }
        }
    }
    assert!(optimal >= 15, "only {optimal} feasible cases ({infeasible} infeasible)");
}

#[test]
fn larger_random_lps_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..5 {
        let lp = random_lp(&mut rng, 8, 7);
        let sol = lp.solve().unwrap();
        let best = vertex_optimum(&lp);
        match best {
            Some(b) => assert!((sol.objective - b).abs() <= 1e-6 * b.abs().max(1.0), "case {case}"),
            None => assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }
}

#[test]
fn equality_with_free_variables_and_reduced_costs() {
    // min x + 2y  s.t.  x + y = 4,  x - y <= 1, x free, y >= 0.
    let mut lp = LpProblem::new();
    let x = lp.add_variable(1.0, f64::NEG_INFINITY, f64::INFINITY);
    let y = lp.add_variable(2.0, 0.0, f64::INFINITY);
    lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 4.0);
    lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.x[x] - 2.5).abs() < 1e-9);
    assert!((sol.x[y] - 1.5).abs() < 1e-9);
    assert!((sol.objective - 5.5).abs() < 1e-9);
    // c - A'y = reduced costs, and both columns are basic.
    for j in 0..2 {
        let col: f64 = lp
            .constraints
            .iter()
            .zip(&sol.duals)
            .map(|(row, d)| row.coeffs.iter().filter(|(c, _)| *c == j).map(|(_, a)| a * d).sum::<f64>())
            .sum();
        assert!((lp.objective[j] - col - sol.reduced_costs[j]).abs() < 1e-9);
        assert!(sol.reduced_costs[j].abs() < 1e-9);
    }
}

#[test]
fn mps_export_lists_every_row_and_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lp = random_lp(&mut rng, 3, 2);
    let mps = lp.to_mps("rand");
    assert!(mps.starts_with("NAME          rand"));
    assert!(mps.contains(" N  COST"));
    assert!(mps.contains("R0000002"));
    assert!(mps.contains("C0000003"));
    assert!(mps.trim_end().ends_with("ENDATA"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn optimal_points_satisfy_reduced_cost_signs(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=7);
        let m = rng.gen_range(1..=7);
        let lp = random_lp(&mut rng, n, m);
        let sol = lp.solve().unwrap();
        if sol.status == LpStatus::Optimal {
            prop_assert!(lp.max_violation(&sol.x) <= 1e-7);
            for j in 0..n {
                let d = sol.reduced_costs[j];
                let at_lo = (sol.x[j] - lp.lower[j]).abs() <= 1e-7;
                let at_hi = (sol.x[j] - lp.upper[j]).abs() <= 1e-7;
                if !at_lo && !at_hi {
                    prop_assert!(d.abs() <= 1e-6, "interior column {j} has reduced cost {d}");
                } else if at_lo && !at_hi {
                    prop_assert!(d >= -1e-6);
                } else if at_hi && !at_lo {
                    prop_assert!(d <= 1e-6);
                }
            }
            let obj: f64 = lp.objective.iter().zip(&sol.x).map(|(c, v)| c * v).sum();
            prop_assert!((obj - sol.objective).abs() <= 1e-8 * obj.abs().max(1.0));
        }
    }
}
