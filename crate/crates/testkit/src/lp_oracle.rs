//! Brute-force LP optimum by enumerating every basic solution.

use hop_core::lp::{LpProblem, Relation};
use rand::Rng;

/// Random boxed LP with `n` variables and `m` dense rows of mixed sense.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LpProblem {
    let mut lp = LpProblem::new();
    for _ in 0..n {
        let lo = rng.gen_range(-5.0..2.0);
        let hi = lo + rng.gen_range(0.5..8.0);
        lp.add_variable(rng.gen_range(-3.0..3.0), lo, hi);
    }
    for _ in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n).map(|i| (i, rng.gen_range(-4.0..4.0))).collect();
        let relation = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Le,
            _ => Relation::Ge,
        };
        // Anchor the row at a random interior point so most instances are feasible.
        let anchor: Vec<f64> = (0..n)
            .map(|i| rng.gen_range(lp.lower[i]..=lp.upper[i]))
            .collect();
        let act: f64 = coeffs.iter().map(|(i, a)| a * anchor[*i]).sum();
        let rhs = match relation {
            Relation::Eq => act,
            Relation::Le => act + rng.gen_range(-1.0..4.0),
            Relation::Ge => act - rng.gen_range(-1.0..4.0),
        };
        lp.add_constraint(coeffs, relation, rhs);
    }
    lp
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum objective over all vertices of a bounded LP, `None` if infeasible.
/// Every variable must have finite bounds.
pub fn vertex_optimum(lp: &LpProblem) -> Option<f64> {
    let n = lp.n_vars();
    // Candidate hyperplanes: each row and each bound, as (dense coefficients, rhs).
    let mut planes: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![0.0; n];
        for (i, a) in &c.coeffs {
            row[*i] += a;
        }
        planes.push((row, c.rhs, c.relation == Relation::Eq));
    }
    for i in 0..n {
        assert!(lp.lower[i].is_finite() && lp.upper[i].is_finite(), "oracle needs a box");
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        planes.push((e.clone(), lp.lower[i], false));
        planes.push((e, lp.upper[i], false));
    }
    let forced: Vec<usize> = (0..planes.len()).filter(|&p| planes[p].2).collect();
    let free: Vec<usize> = (0..planes.len()).filter(|&p| !planes[p].2).collect();
    if forced.len() > n {
        return None;
    }
    let need = n - forced.len();
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(need);
    fn walk(
        start: usize,
        need: usize,
        free: &[usize],
        pick: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == need {
            visit(pick);
            return;
        }
        for i in start..free.len() {
            pick.push(free[i]);
            walk(i + 1, need, free, pick, visit);
            pick.pop();
        }
    }
    let mut visit = |chosen: &[usize]| {
        let active: Vec<usize> = forced.iter().chain(chosen).copied().collect();
        let a = active.iter().map(|&p| planes[p].0.clone()).collect();
        let b = active.iter().map(|&p| planes[p].1).collect();
        if let Some(x) = solve_square(a, b) {
            let scale = x.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
            if lp.max_violation(&x) <= 1e-9 * scale {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    };
    walk(0, need, &free, &mut pick, &mut visit);
    best
}
