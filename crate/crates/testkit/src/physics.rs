//! Straight transcription of the hydraulic, thermal and cost formulas, kept
//! separate from `hop_core::model` so tests compare two implementations.

use hop_core::{PipeSegment, Scenario};

pub fn kinematic_viscosity(scen: &Scenario, t: f64) -> f64 {
    let v = &scen.fluid.viscosity;
    let mu_mpas = v.a1 * (v.b1 * t).exp() + v.a2 * (v.b2 * t).exp();
    mu_mpas * 1e-3 / scen.fluid.density
}

pub fn segment_friction(scen: &Scenario, seg: &PipeSegment, t_ave: f64) -> f64 {
    let m = scen.friction.m;
    let nu = kinematic_viscosity(scen, t_ave);
    scen.friction.beta * seg.flow.powf(2.0 - m) * nu.powf(m) * seg.length
        / seg.inner_diameter.powf(5.0 - m)
}

fn decay_rate(scen: &Scenario, seg: &PipeSegment) -> f64 {
    let circumference = std::f64::consts::PI * seg.outer_diameter;
    seg.heat_transfer * circumference
        / (scen.fluid.density * seg.flow * scen.fluid.specific_heat)
}

pub fn segment_exit_temperature(scen: &Scenario, seg: &PipeSegment, t_start: f64) -> f64 {
    let ambient = seg.ground_temp + seg.friction_heat;
    ambient + (t_start - ambient) * (-decay_rate(scen, seg) * seg.length).exp()
}

/// Entry temperature of a segment whose exit temperature is `t_end`.
pub fn segment_entry_temperature(scen: &Scenario, seg: &PipeSegment, t_end: f64) -> f64 {
    let ambient = seg.ground_temp + seg.friction_heat;
    ambient + (t_end - ambient) * (decay_rate(scen, seg) * seg.length).exp()
}

/// Temperatures and cumulative head losses along one gap.
#[derive(Debug, Clone)]
pub struct GapProfile {
    /// Temperature at points `0..=n`.
    pub temps: Vec<f64>,
    /// Head lost between the station outlet and point `r` (friction plus climb).
    pub drops: Vec<f64>,
    pub frictions: Vec<f64>,
}

impl GapProfile {
    pub fn exit_temperature(&self) -> f64 {
        *self.temps.last().unwrap()
    }

    pub fn total_drop(&self) -> f64 {
        *self.drops.last().unwrap()
    }
}

pub fn gap_profile(scen: &Scenario, gap: usize, t_out: f64) -> GapProfile {
    let segs = &scen.gaps[gap];
    let mut temps = vec![t_out];
    let mut drops = vec![0.0];
    let mut frictions = Vec::with_capacity(segs.len());
    for seg in segs {
        let t0 = *temps.last().unwrap();
        let t1 = segment_exit_temperature(scen, seg, t0);
        let f = segment_friction(scen, seg, (t0 + 2.0 * t1) / 3.0);
        frictions.push(f);
        drops.push(drops.last().unwrap() + f + seg.elevation_change);
        temps.push(t1);
    }
    GapProfile {
        temps,
        drops,
        frictions,
    }
}

/// Station outlet temperature that makes the gap deliver `t_end` to the next station.
pub fn outlet_for_exit_temperature(scen: &Scenario, gap: usize, t_end: f64) -> f64 {
    scen.gaps[gap]
        .iter()
        .rev()
        .fold(t_end, |t, seg| segment_entry_temperature(scen, seg, t))
}

/// Daily cost of one running constant-speed pump, one metre of shifted-speed
/// head and one degree of heating.
#[derive(Debug, Clone, Copy)]
pub struct StationPrices {
    pub csp: f64,
    pub ssp_metre: f64,
    pub degree: f64,
}

pub fn station_prices(scen: &Scenario, station: usize) -> StationPrices {
    let st = &scen.stations[station];
    let e = &scen.economics;
    let day = 24.0 * 3600.0;
    let watts_per_metre = scen.fluid.density * e.gravity * st.flow;
    let heat_watts_per_degree = scen.fluid.density * st.flow * scen.fluid.specific_heat;
    StationPrices {
        csp: e.electricity_price * watts_per_metre * st.csp_head / st.csp_eff * day,
        ssp_metre: e.electricity_price * watts_per_metre / st.ssp_eff * day,
        degree: e.fuel_price * heat_watts_per_degree / (e.heat_value * st.furnace_eff) * day,
    }
}

/// A complete candidate decision, evaluated independently of the library.
#[derive(Debug, Clone)]
pub struct Decision {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dh_sp: Vec<f64>,
    pub dt: Vec<f64>,
    pub h_out: Vec<f64>,
}

/// Cost of a decision, or the first constraint it breaks beyond `tol`.
pub fn evaluate_decision(scen: &Scenario, d: &Decision, tol: f64) -> Result<f64, String> {
    let np = scen.n_pump_stations();
    let mut h_in = scen.inlet_head;
    let mut t_in = scen.inlet_temp;
    let mut cost = 0.0;
    let check = |ok: bool, what: String| if ok { Ok(()) } else { Err(what) };
    for j in 0..np {
        let st = &scen.stations[j];
        let p = station_prices(scen, j);
        cost += p.csp * d.x[j] + p.ssp_metre * d.dh_sp[j] + p.degree * d.dt[j];
        check(st.h_in.contains(h_in, tol), format!("station {j} inlet head {h_in}"))?;
        check(st.t_in.contains(t_in, tol), format!("station {j} inlet temperature {t_in}"))?;
        check(d.dt[j] >= -tol, format!("station {j} negative heating"))?;
        check(
            d.x[j] >= -tol && d.x[j] <= f64::from(st.n_csp) + tol,
            format!("station {j} csp count {}", d.x[j]),
        )?;
        check(
            d.y[j] >= -tol && d.y[j] <= f64::from(st.n_ssp) + tol,
            format!("station {j} ssp count {}", d.y[j]),
        )?;
        check(
            d.dh_sp[j] >= d.y[j] * st.ssp_head.lo - tol && d.dh_sp[j] <= d.y[j] * st.ssp_head.hi + tol,
            format!("station {j} ssp head {}", d.dh_sp[j]),
        )?;
        let t_out = t_in + d.dt[j];
        check(st.t_out.contains(t_out, tol), format!("station {j} outlet temperature {t_out}"))?;
        let h_out = d.h_out[j];
        check(
            h_out <= h_in + d.x[j] * st.csp_head + d.dh_sp[j] + tol,
            format!("station {j} outlet head {h_out} above pumped head"),
        )?;
        check(st.h_out.contains(h_out, tol), format!("station {j} outlet head {h_out}"))?;
        let prof = gap_profile(scen, j, t_out);
        for (k, seg) in scen.gaps[j].iter().enumerate() {
            let h = h_out - prof.drops[k + 1];
            check(seg.head.contains(h, tol), format!("gap {j} segment {k} head {h}"))?;
        }
        h_in = h_out - prof.total_drop();
        t_in = prof.exit_temperature();
    }
    let term = &scen.stations[np];
    check(term.h_in.contains(h_in, tol), format!("terminal inlet head {h_in}"))?;
    check(term.t_in.contains(t_in, tol), format!("terminal inlet temperature {t_in}"))?;
    Ok(cost)
}
