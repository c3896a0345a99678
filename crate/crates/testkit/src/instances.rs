//! Scenario builders: a random small-instance generator plus hand-made
//! fixtures with known answers.

use hop_core::model::m3h_to_m3s;
use hop_core::{
    EconomicParams, FluidProps, FrictionModel, Interval, PipeSegment, Scenario, Station,
    ViscosityModel,
};
use rand::Rng;

use crate::physics;

pub const ELECTRICITY_PRICE: f64 = 1.8035e-7;
pub const FUEL_PRICE: f64 = 2.5;
pub const HEAT_VALUE: f64 = 3.6e7;
pub const GRAVITY: f64 = 9.81;

pub fn crude() -> FluidProps {
    FluidProps {
        density: 859.0,
        specific_heat: 2400.0,
        viscosity: ViscosityModel::CRUDE_FIT,
    }
}

pub fn economics(fuel_price: f64) -> EconomicParams {
    EconomicParams {
        electricity_price: ELECTRICITY_PRICE,
        fuel_price,
        heat_value: HEAT_VALUE,
        gravity: GRAVITY,
    }
}

pub fn segment(length: f64, elevation_change: f64, flow: f64) -> PipeSegment {
    PipeSegment {
        length,
        inner_diameter: 0.6,
        outer_diameter: 0.62,
        elevation_change,
        heat_transfer: 1.5,
        flow,
        ground_temp: 6.0,
        friction_heat: 0.5,
        head: Interval::new(0.0, 750.0),
    }
}

pub fn pump_station(flow: f64, n_csp: u32, csp_head: f64, n_ssp: u32, ssp_head: Interval) -> Station {
    Station {
        n_csp,
        csp_head,
        csp_eff: 0.8,
        n_ssp,
        ssp_head,
        ssp_eff: 0.78,
        furnace_eff: 0.85,
        flow,
        h_in: Interval::new(20.0, 200.0),
        h_out: Interval::new(0.0, 700.0),
        t_in: Interval::new(25.0, 80.0),
        t_out: Interval::new(30.0, 60.0),
    }
}

/// Parameters of [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub min_stations: usize,
    pub max_stations: usize,
    pub max_segments: usize,
    pub max_csp: u32,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self {
            min_stations: 2,
            max_stations: 4,
            max_segments: 4,
            max_csp: 2,
        }
    }
}

/// A small random pipeline with 2 to 4 stations, at most two constant-speed
/// pumps and one shifted-speed pump per station, and at most four segments per
/// gap. Pumps are sized so the instance is usually, but not always, feasible.
pub fn random_instance<R: Rng>(rng: &mut R, shape: RandomShape) -> Scenario {
    let ns = rng.gen_range(shape.min_stations..=shape.max_stations);
    let np = ns - 1;
    let flow = m3h_to_m3s(rng.gen_range(1800.0..2400.0));
    let inner = rng.gen_range(0.55..0.7);
    let fluid = crude();
    let econ = economics(FUEL_PRICE * rng.gen_range(0.02..1.0));

    let inlet_temp: f64 = rng.gen_range(38.0..44.0);
    let inlet_head: f64 = rng.gen_range(20.0..50.0);

    let mut gaps = Vec::with_capacity(np);
    for _ in 0..np {
        let n_seg = rng.gen_range(1..=shape.max_segments);
        let segs: Vec<PipeSegment> = (0..n_seg)
            .map(|_| {
                let lower = if rng.gen_bool(0.3) { rng.gen_range(0.0..40.0) } else { 0.0 };
                PipeSegment {
                    length: rng.gen_range(4_000.0..12_000.0),
                    inner_diameter: inner,
                    outer_diameter: inner + 0.02,
                    elevation_change: rng.gen_range(-15.0..35.0),
                    heat_transfer: rng.gen_range(1.0..2.0),
                    flow,
                    ground_temp: rng.gen_range(4.0..10.0),
                    friction_heat: rng.gen_range(0.0..1.0),
                    head: Interval::new(lower, 750.0),
                }
            })
            .collect();
        gaps.push(segs);
    }

    let mut stations = Vec::with_capacity(ns);
    let mut arrival = Interval::point(inlet_temp);
    for j in 0..np {
        let width = rng.gen_range(1.5..3.0);
        let lo = (arrival.lo - rng.gen_range(0.0..2.0)).max(20.0);
        let hi = (lo + width).max(arrival.hi + rng.gen_range(0.2..1.5));
        let t_out = Interval::new(lo, hi);
        let t_in = if j == 0 {
            Interval::point(inlet_temp)
        } else {
            Interval::new(arrival.lo - rng.gen_range(-0.5..1.5), 80.0)
        };
        let h_in = if j == 0 {
            Interval::point(inlet_head)
        } else {
            let lo = rng.gen_range(15.0..40.0);
            Interval::new(lo, lo + rng.gen_range(80.0..160.0))
        };
        stations.push(Station {
            n_csp: 0,
            csp_head: 0.0,
            csp_eff: rng.gen_range(0.75..0.85),
            n_ssp: 0,
            ssp_head: Interval::point(0.0),
            ssp_eff: rng.gen_range(0.7..0.85),
            furnace_eff: rng.gen_range(0.8..0.9),
            flow,
            h_in,
            h_out: Interval::new(0.0, 700.0),
            t_in,
            t_out,
        });
        let tmp = Scenario {
            fluid,
            friction: FrictionModel::default(),
            economics: econ,
            inlet_head,
            inlet_temp,
            stations: vec![],
            gaps: gaps.clone(),
        };
        arrival = Interval::new(
            physics::gap_profile(&tmp, j, t_out.lo).exit_temperature(),
            physics::gap_profile(&tmp, j, t_out.hi).exit_temperature(),
        );
    }
    let term_lo = rng.gen_range(15.0..40.0);
    stations.push(Station::terminal(
        Interval::new(term_lo, term_lo + rng.gen_range(80.0..160.0)),
        Interval::new(arrival.lo - rng.gen_range(-0.5..1.5), 80.0),
    ));

    let mut scen = Scenario {
        fluid,
        friction: FrictionModel::default(),
        economics: econ,
        inlet_head,
        inlet_temp,
        stations,
        gaps,
    };

    for j in 0..np {
        let t_mid = 0.5 * (scen.stations[j].t_out.lo + scen.stations[j].t_out.hi);
        let prof = physics::gap_profile(&scen, j, t_mid);
        let n = scen.gaps[j].len();
        let mut need_out = prof.drops[n] + scen.stations[j + 1].h_in.lo;
        for r in 1..n {
            need_out = need_out.max(prof.drops[r] + scen.gaps[j][r - 1].head.lo);
        }
        let arriving = if j == 0 {
            inlet_head
        } else {
            0.5 * (scen.stations[j].h_in.lo + scen.stations[j].h_in.hi)
        };
        let req = (need_out + rng.gen_range(10.0..40.0) - arriving).max(30.0);
        let cap = req * rng.gen_range(1.1..1.4);
        let st = &mut scen.stations[j];
        st.n_csp = rng.gen_range(1..=shape.max_csp);
        let with_ssp = if np == 3 { j + 1 == np } else { rng.gen_bool(0.6) };
        let mut ssp_hi = 0.0;
        if with_ssp {
            st.n_ssp = 1;
            ssp_hi = cap * rng.gen_range(0.25..0.45);
            st.ssp_head = Interval::new(ssp_hi * rng.gen_range(0.2..0.5), ssp_hi);
        }
        st.csp_head = (cap - ssp_hi) / f64::from(st.n_csp);
    }
    scen.validate().expect("generated scenario is structurally valid");
    scen
}

/// Three stations, two gaps, mixed pumps: the small benchmark used for
/// warm-start comparisons and the bundled `toy3` scenario.
pub fn toy3() -> Scenario {
    let q = m3h_to_m3s(2000.0);
    let gap0 = vec![
        segment(12_000.0, 25.0, q),
        segment(10_000.0, -10.0, q),
        segment(8_000.0, 15.0, q),
    ];
    let mut gap1 = vec![segment(15_000.0, 5.0, q), segment(12_000.0, 20.0, q)];
    gap1[0].head = Interval::new(10.0, 750.0);
    let mut s0 = pump_station(q, 2, 110.0, 1, Interval::new(30.0, 90.0));
    s0.h_in = Interval::point(30.0);
    s0.t_in = Interval::point(40.0);
    s0.t_out = Interval::new(38.0, 46.0);
    let mut s1 = pump_station(q, 2, 95.0, 1, Interval::new(25.0, 80.0));
    s1.h_in = Interval::new(20.0, 180.0);
    s1.t_in = Interval::new(35.0, 80.0);
    s1.t_out = Interval::new(36.0, 44.0);
    let term = Station::terminal(Interval::new(25.0, 150.0), Interval::new(33.5, 80.0));
    Scenario::new(
        crude(),
        FrictionModel::default(),
        economics(0.6),
        30.0,
        40.0,
        vec![s0, s1, term],
        vec![gap0, gap1],
    )
    .expect("toy3 is valid")
}

/// Two stations joined by a climb and a long descent. The head band is
/// pinched so the descent only stays below its upper bound while the oil is
/// cold enough: every outlet temperature above the returned threshold is
/// infeasible.
pub fn pinched_descent() -> (Scenario, f64) {
    let threshold = 40.0;
    let q = m3h_to_m3s(2000.0);
    let band = 60.0;
    let mut climb = segment(30_000.0, 150.0, q);
    climb.head = Interval::new(20.0, 700.0);
    let mut descent = segment(50_000.0, 0.0, q);
    descent.head = Interval::new(0.0, 20.0 + band);

    let mut a = pump_station(q, 3, 150.0, 0, Interval::point(0.0));
    a.h_in = Interval::point(40.0);
    a.t_in = Interval::point(35.0);
    a.t_out = Interval::new(30.0, 60.0);
    let b = Station::terminal(Interval::new(0.0, 1000.0), Interval::new(0.0, 100.0));
    let mut scen = Scenario {
        fluid: crude(),
        friction: FrictionModel::default(),
        economics: economics(FUEL_PRICE),
        inlet_head: 40.0,
        inlet_temp: 35.0,
        stations: vec![a, b],
        gaps: vec![vec![climb, descent]],
    };
    // Descent steep enough that the gain minus friction equals the band at the threshold.
    let prof = physics::gap_profile(&scen, 0, threshold);
    scen.gaps[0][1].elevation_change = -(band + prof.frictions[1]);
    scen.validate().expect("pinched instance is valid");
    (scen, threshold)
}

/// Outlet temperature above which [`pinched_descent`]-style gaps break the
/// head band between `lower_point` and `upper_point`, found by bisection.
pub fn bisection_threshold(scen: &Scenario, gap: usize, lower_point: usize, upper_point: usize) -> f64 {
    let lb = scen.head_bounds(gap, lower_point).lo;
    let ub = scen.head_bounds(gap, upper_point).hi;
    // Head at the upper point when the lower point sits exactly on its bound.
    let excess = |t: f64| {
        let prof = physics::gap_profile(scen, gap, t);
        lb - (prof.drops[upper_point] - prof.drops[lower_point]) - ub
    };
    let (mut lo, mut hi) = (scen.stations[gap].t_out.lo, scen.stations[gap].t_out.hi);
    assert!(excess(lo) <= 0.0 && excess(hi) > 0.0, "threshold is not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One cutting pattern: how many times it may be used, how many rolls it
/// yields and the pump efficiency that sets its price.
#[derive(Debug, Clone, Copy)]
pub struct Pattern {
    pub max_uses: u32,
    pub yield_per_use: u32,
    pub efficiency: f64,
}

/// Pipeline whose optimal schedule solves a cutting-stock instance: zero-length
/// flat gaps, pinned temperatures, constant-speed pumps only, and a terminal
/// inlet head `demand` metres above the first inlet head.
pub fn cutting_stock_pipeline(patterns: &[Pattern], demand: u32) -> Scenario {
    let q = m3h_to_m3s(2000.0);
    let temp = 50.0;
    let inlet = 10.0;
    let mut stations: Vec<Station> = patterns
        .iter()
        .map(|p| Station {
            n_csp: p.max_uses,
            csp_head: f64::from(p.yield_per_use),
            csp_eff: p.efficiency,
            n_ssp: 0,
            ssp_head: Interval::point(0.0),
            ssp_eff: 1.0,
            furnace_eff: 0.85,
            flow: q,
            h_in: Interval::new(0.0, f64::INFINITY),
            h_out: Interval::new(0.0, f64::INFINITY),
            t_in: Interval::point(temp),
            t_out: Interval::point(temp),
        })
        .collect();
    stations[0].h_in = Interval::point(inlet);
    let target = inlet + f64::from(demand);
    stations.push(Station::terminal(Interval::point(target), Interval::point(temp)));
    let gaps = patterns
        .iter()
        .map(|_| {
            let mut s = segment(0.0, 0.0, q);
            s.head = Interval::new(0.0, f64::INFINITY);
            vec![s]
        })
        .collect();
    Scenario::new(
        crude(),
        FrictionModel::default(),
        economics(FUEL_PRICE),
        inlet,
        temp,
        stations,
        gaps,
    )
    .expect("cutting-stock pipeline is valid")
}
