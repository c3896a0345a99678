//! Dynamic program for the bounded covering form of cutting stock:
//! minimise `sum(price_j * uses_j)` subject to `sum(yield_j * uses_j) >= demand`.

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSolution {
    pub cost: f64,
    pub uses: Vec<u32>,
}

/// `items[j] = (max_uses, yield_per_use, price_per_use)`. `None` if the demand
/// cannot be met.
pub fn min_cost_cover(items: &[(u32, u32, f64)], demand: u32) -> Option<CoverSolution> {
    let d = demand as usize;
    // best[j][v]: cheapest way to cover at least v using items 0..j.
    let mut best = vec![vec![f64::INFINITY; d + 1]; items.len() + 1];
    best[0][0] = 0.0;
    for (j, &(max_uses, yld, price)) in items.iter().enumerate() {
        for v in 0..=d {
            let mut b = f64::INFINITY;
            for k in 0..=max_uses as usize {
                let rest = v.saturating_sub(k * yld as usize);
                b = b.min(best[j][rest] + k as f64 * price);
                if rest == 0 {
                    break;
                }
            }
            best[j + 1][v] = b;
        }
    }
    let cost = best[items.len()][d];
    if !cost.is_finite() {
        return None;
    }
    let mut uses = vec![0; items.len()];
    let mut v = d;
    for j in (0..items.len()).rev() {
        let (max_uses, yld, price) = items[j];
        for k in 0..=max_uses as usize {
            let rest = v.saturating_sub(k * yld as usize);
            if (best[j][rest] + k as f64 * price - best[j + 1][v]).abs() <= 1e-9 * cost.max(1.0) {
                uses[j] = k as u32;
                v = rest;
                break;
            }
        }
    }
    Some(CoverSolution { cost, uses })
}
