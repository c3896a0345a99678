//! Random feasible operating points of the continuous relaxation with exact
//! friction (pump counts may be fractional).

use hop_core::Scenario;
use rand::Rng;

use crate::physics::{evaluate_decision, gap_profile, Decision};

/// Draws station decisions one at a time, retrying a station when its gap
/// admits no head. Returns `None` after `attempts` failed full passes.
pub fn sample_feasible<R: Rng>(rng: &mut R, scen: &Scenario, attempts: usize) -> Option<Decision> {
    let np = scen.n_pump_stations();
    'outer: for _ in 0..attempts {
        let mut d = Decision {
            x: vec![0.0; np],
            y: vec![0.0; np],
            dh_sp: vec![0.0; np],
            dt: vec![0.0; np],
            h_out: vec![0.0; np],
        };
        let mut h_in = scen.inlet_head;
        let mut t_in = scen.inlet_temp;
        for j in 0..np {
            let st = &scen.stations[j];
            let mut placed = false;
            for _ in 0..50 {
                let t_lo = st.t_out.lo.max(t_in);
                if t_lo > st.t_out.hi {
                    continue 'outer;
                }
                let t_out = rng.gen_range(t_lo..=st.t_out.hi);
                let x = rng.gen_range(0.0..=f64::from(st.n_csp));
                let y = rng.gen_range(0.0..=f64::from(st.n_ssp));
                let dh = y * rng.gen_range(st.ssp_head.lo..=st.ssp_head.hi);
                let prof = gap_profile(scen, j, t_out);
                let mut lo = f64::NEG_INFINITY;
                let mut hi = (h_in + x * st.csp_head + dh).min(1e6);
                for r in 0..=scen.gaps[j].len() {
                    let b = scen.head_bounds(j, r);
                    lo = lo.max(b.lo + prof.drops[r]);
                    hi = hi.min(b.hi + prof.drops[r]);
                }
                if lo > hi {
                    continue;
                }
                let h_out = rng.gen_range(lo..=hi);
                d.x[j] = x;
                d.y[j] = y;
                d.dh_sp[j] = dh;
                d.dt[j] = t_out - t_in;
                d.h_out[j] = h_out;
                h_in = h_out - prof.total_drop();
                t_in = prof.exit_temperature();
                placed = true;
                break;
            }
            if !placed {
                continue 'outer;
            }
        }
        if evaluate_decision(scen, &d, 1e-9).is_ok() {
            return Some(d);
        }
    }
    None
}
