//! Exhaustive reference optimum on a fine grid.
//!
//! Outlet temperatures are enumerated on a 0.05 °C lattice (plus the window
//! ends, the no-heating value and the value that lands exactly on the next
//! inlet lower bound). Inlet heads live on a 0.1 m lattice anchored at each
//! station's lower inlet bound; a head between lattice points is rounded down,
//! which can only cost more because surplus head can always be throttled.
//! Every value the oracle reports is therefore the cost of a scheme that is
//! feasible for the exact model.

use hop_core::Scenario;

use crate::physics::{self, gap_profile, station_prices};

#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    pub temp_step: f64,
    pub head_step: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            temp_step: 0.05,
            head_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridResult {
    /// Best cost found, `None` when no grid point is feasible.
    pub cost: Option<f64>,
    /// Cost of one lattice step at every station: how far the grid optimum
    /// may sit above the continuous optimum.
    pub resolution: f64,
}

const INF: f64 = f64::INFINITY;

fn temperature_candidates(lo: f64, hi: f64, step: f64, extra: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let n = ((hi - lo) / step).floor() as usize;
    for i in 0..=n {
        out.push(lo + step * i as f64);
    }
    out.push(hi);
    out.extend(extra.iter().copied().filter(|t| *t >= lo && *t <= hi));
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

/// Sparse table for range minimum queries.
struct RangeMin {
    table: Vec<Vec<f64>>,
}

impl RangeMin {
    fn new(values: Vec<f64>) -> Self {
        let mut table = vec![values];
        let mut width = 1;
        while 2 * width <= table[0].len() {
            let prev = table.last().unwrap();
            let next = (0..prev.len() - width)
                .map(|i| prev[i].min(prev[i + width]))
                .collect();
            table.push(next);
            width *= 2;
        }
        Self { table }
    }

    /// Minimum over `lo..=hi`.
    fn query(&self, lo: usize, hi: usize) -> f64 {
        let len = hi - lo + 1;
        let level = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let row = &self.table[level];
        row[lo].min(row[hi + 1 - (1 << level)])
    }
}

struct HeadLattice {
    lo: f64,
    points: usize,
}

impl HeadLattice {
    fn value(&self, k: usize, step: f64) -> f64 {
        self.lo + step * k as f64
    }

    /// Index of the highest lattice point not above `h`, if any.
    fn floor(&self, h: f64, step: f64) -> Option<usize> {
        let k = ((h - self.lo) / step + 1e-9).floor();
        if k < 0.0 {
            None
        } else {
            Some((k as usize).min(self.points - 1))
        }
    }
}

pub fn grid_optimum(scen: &Scenario, opts: GridOptions) -> GridResult {
    let np = scen.n_pump_stations();
    let ns = scen.n_stations();
    let step = opts.head_step;
    let prices: Vec<_> = (0..np).map(|j| station_prices(scen, j)).collect();
    let resolution = prices
        .iter()
        .zip(&scen.stations)
        .map(|(p, st)| {
            let ssp = if st.n_ssp > 0 { p.ssp_metre } else { 0.0 };
            opts.temp_step * p.degree + 2.0 * step * ssp
        })
        .sum();

    // Outlet temperature candidates, station by station.
    let mut cands: Vec<Vec<f64>> = Vec::with_capacity(np);
    for j in 0..np {
        let st = &scen.stations[j];
        let mut extra = vec![physics::outlet_for_exit_temperature(
            scen,
            j,
            scen.stations[j + 1].t_in.lo,
        )];
        if j == 0 {
            extra.push(scen.inlet_temp);
        } else {
            extra.extend(
                cands[j - 1]
                    .iter()
                    .map(|t| gap_profile(scen, j - 1, *t).exit_temperature()),
            );
        }
        cands.push(temperature_candidates(st.t_out.lo, st.t_out.hi, opts.temp_step, &extra));
    }
    // Per candidate: exit temperature and drops along the gap.
    let profiles: Vec<Vec<physics::GapProfile>> = (0..np)
        .map(|j| cands[j].iter().map(|t| gap_profile(scen, j, *t)).collect())
        .collect();

    // Inlet head lattice of every station.
    let mut lattices: Vec<HeadLattice> = Vec::with_capacity(ns);
    lattices.push(HeadLattice {
        lo: scen.inlet_head,
        points: 1,
    });
    let mut reach = scen.inlet_head;
    for j in 1..ns {
        let prev = &scen.stations[j - 1];
        reach += f64::from(prev.n_csp) * prev.csp_head + f64::from(prev.n_ssp) * prev.ssp_head.hi;
        let min_drop = profiles[j - 1]
            .iter()
            .map(|p| p.total_drop())
            .fold(INF, f64::min);
        let max_drop = profiles[j - 1]
            .iter()
            .map(|p| p.total_drop())
            .fold(-INF, f64::max);
        reach = reach.min(prev.h_out.hi) - min_drop;
        let bounds = scen.stations[j].h_in;
        let lo = if bounds.lo.is_finite() {
            bounds.lo
        } else {
            prev.h_out.lo - max_drop
        };
        let hi = bounds.hi.min(reach);
        let points = if hi >= lo {
            ((hi - lo) / step).floor() as usize + 1
        } else {
            0
        };
        lattices.push(HeadLattice { lo, points });
        reach = reach.min(bounds.hi);
    }
    if lattices.iter().any(|l| l.points == 0) {
        return GridResult {
            cost: None,
            resolution,
        };
    }

    // value[c][k]: cheapest completion when the previous station used outlet
    // candidate c and this station's inlet head is lattice point k.
    let terminal = &scen.stations[np];
    let mut value: Vec<Vec<f64>> = profiles[np - 1]
        .iter()
        .map(|p| {
            let ok = terminal.t_in.contains(p.exit_temperature(), 1e-12);
            vec![if ok { 0.0 } else { INF }; lattices[np].points]
        })
        .collect();

    for j in (0..np).rev() {
        let st = &scen.stations[j];
        let price = prices[j];
        let here = &lattices[j];
        let next = &lattices[j + 1];
        let segs = &scen.gaps[j];
        let n = segs.len();

        // best[c][k]: pumping cost at station j plus downstream value, with
        // outlet temperature candidate c and inlet lattice point k.
        let mut best = vec![vec![INF; here.points]; cands[j].len()];
        for (c, prof) in profiles[j].iter().enumerate() {
            if !scen.stations[j + 1].t_in.contains(prof.exit_temperature(), 1e-12) {
                continue;
            }
            let mut lo_out = f64::NEG_INFINITY;
            let mut hi_out = INF;
            for r in 0..=n {
                let b = scen.head_bounds(j, r);
                lo_out = lo_out.max(b.lo + prof.drops[r]);
                hi_out = hi_out.min(b.hi + prof.drops[r]);
            }
            if lo_out > hi_out + 1e-12 {
                continue;
            }
            let drop = prof.total_drop();
            let downstream = &value[c];
            let out_at = |m: usize| next.value(m, step) + drop;
            let weighted = RangeMin::new(
                (0..next.points)
                    .map(|m| price.ssp_metre * out_at(m) + downstream[m])
                    .collect(),
            );
            for x in 0..=st.n_csp {
                for y in 0..=st.n_ssp {
                    let fixed = f64::from(x) * price.csp;
                    let band_lo = f64::from(y) * st.ssp_head.lo;
                    let band_hi = f64::from(y) * st.ssp_head.hi;
                    for k in 0..here.points {
                        let h = here.value(k, step);
                        let base = h + f64::from(x) * st.csp_head;
                        // Outlet head reachable without paying above the band floor.
                        let free = base + band_lo;
                        let mut cost = INF;
                        let top = free.min(hi_out);
                        if top >= lo_out - 1e-12 {
                            if let Some(m) = next.floor(top - drop, step) {
                                cost = price.ssp_metre * band_lo + downstream[m];
                            }
                        }
                        if y > 0 {
                            let ceiling = (base + band_hi).min(hi_out);
                            let start = free.max(lo_out);
                            let m_lo = ((start - drop - next.lo) / step - 1e-9).ceil().max(0.0) as usize;
                            if let Some(m_hi) = next.floor(ceiling - drop, step) {
                                if m_lo <= m_hi && out_at(m_hi) <= ceiling + 1e-9 {
                                    cost = cost.min(weighted.query(m_lo, m_hi) - price.ssp_metre * base);
                                }
                            }
                        }
                        let total = fixed + cost;
                        if total < best[c][k] {
                            best[c][k] = total;
                        }
                    }
                }
            }
        }

        // Fold in the heating decision against the previous station's candidates.
        let arrivals: Vec<f64> = if j == 0 {
            vec![scen.inlet_temp]
        } else {
            profiles[j - 1].iter().map(|p| p.exit_temperature()).collect()
        };
        let mut new_value = vec![vec![INF; here.points]; arrivals.len()];
        for (p, t_in) in arrivals.iter().enumerate() {
            if !st.t_in.contains(*t_in, 1e-12) {
                continue;
            }
            for (c, t_out) in cands[j].iter().enumerate() {
                let dt = t_out - t_in;
                if dt < -1e-9 {
                    continue;
                }
                let heat = price.degree * dt.max(0.0);
                for k in 0..here.points {
                    let v = heat + best[c][k];
                    if v < new_value[p][k] {
                        new_value[p][k] = v;
                    }
                }
            }
        }
        value = new_value;
    }

    let v = value[0][0];
    GridResult {
        cost: v.is_finite().then_some(v),
        resolution,
    }
}
