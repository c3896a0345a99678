//! Static description of a pipeline: fluid, stations, pipe segments, prices
//! and every bound the operating scheme has to respect.
//!
//! Indexing convention used throughout the crate:
//!
//! * stations are numbered `0..n_stations()`; the last one is the terminal
//!   station and carries no pumps or furnaces;
//! * gap `j` is the pipe between station `j` and station `j + 1`;
//! * inside a gap, *point* `r` ranges over `0..=n` where `n` is the number of
//!   segments: point `0` is the outlet of station `j`, point `r` is the end of
//!   segment `r - 1`, and point `n` coincides with the inlet of station `j + 1`.

use std::fmt;

use crate::error::ScenarioError;
use crate::model::{FluidProps, FrictionModel};

/// Closed interval with possibly infinite ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn at_least(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    /// Amount by which `v` lies outside the interval (0 when inside).
    pub fn violation(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.violation(v) <= tol
    }

    pub fn is_empty(&self, tol: f64) -> bool {
        self.lo > self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Electricity and fuel prices plus the physical constants the cost needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomicParams {
    /// yuan per joule of electrical energy (yuan/(W·s)).
    pub electricity_price: f64,
    /// yuan per m³ of fuel gas.
    pub fuel_price: f64,
    /// Heating value of the fuel gas, J/m³.
    pub heat_value: f64,
    /// m/s².
    pub gravity: f64,
}

/// One pipe segment between two consecutive stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeSegment {
    /// m
    pub length: f64,
    /// m
    pub inner_diameter: f64,
    /// m
    pub outer_diameter: f64,
    /// Elevation of the segment end minus elevation of its start, m.
    pub elevation_change: f64,
    /// W/(m²·°C)
    pub heat_transfer: f64,
    /// Volume flow in m³/s (documents carry m³/h and convert on load).
    pub flow: f64,
    /// °C
    pub ground_temp: f64,
    /// Constant temperature contribution of friction heat, °C.
    pub friction_heat: f64,
    /// Admissible head at the end of the segment, m.
    pub head: Interval,
}

impl PipeSegment {
    /// Temperature the oil relaxes towards along this segment.
    pub fn ambient(&self) -> f64 {
        self.ground_temp + self.friction_heat
    }
}

/// A pumping and heating station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub n_csp: u32,
    /// Head added by one constant-speed pump, m.
    pub csp_head: f64,
    pub csp_eff: f64,
    pub n_ssp: u32,
    /// Admissible head band of one shifted-speed pump, m.
    pub ssp_head: Interval,
    pub ssp_eff: f64,
    pub furnace_eff: f64,
    /// Volume flow through the station, m³/s.
    pub flow: f64,
    pub h_in: Interval,
    pub h_out: Interval,
    pub t_in: Interval,
    pub t_out: Interval,
}

impl Station {
    /// Terminal station without equipment.
    pub fn terminal(h_in: Interval, t_in: Interval) -> Self {
        Self {
            n_csp: 0,
            csp_head: 0.0,
            csp_eff: 1.0,
            n_ssp: 0,
            ssp_head: Interval::point(0.0),
            ssp_eff: 1.0,
            furnace_eff: 1.0,
            flow: 0.0,
            h_in,
            h_out: Interval::UNBOUNDED,
            t_in,
            t_out: Interval::UNBOUNDED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub fluid: FluidProps,
    pub friction: FrictionModel,
    pub economics: EconomicParams,
    /// Given head at the inlet of the first station, m.
    pub inlet_head: f64,
    /// Given temperature at the inlet of the first station, °C.
    pub inlet_temp: f64,
    pub stations: Vec<Station>,
    /// `gaps[j]` holds the segments between station `j` and `j + 1`.
    pub gaps: Vec<Vec<PipeSegment>>,
}

const BOUND_TOL: f64 = 1e-12;

impl Scenario {
    /// Builds a scenario and checks every structural invariant.
    pub fn new(
        fluid: FluidProps,
        friction: FrictionModel,
        economics: EconomicParams,
        inlet_head: f64,
        inlet_temp: f64,
        stations: Vec<Station>,
        gaps: Vec<Vec<PipeSegment>>,
    ) -> Result<Self, ScenarioError> {
        let scen = Self {
            fluid,
            friction,
            economics,
            inlet_head,
            inlet_temp,
            stations,
            gaps,
        };
        scen.validate()?;
        Ok(scen)
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    /// Stations that carry decisions (all but the terminal one).
    pub fn n_pump_stations(&self) -> usize {
        self.stations.len().saturating_sub(1)
    }

    pub fn segments(&self, gap: usize) -> &[PipeSegment] {
        &self.gaps[gap]
    }

    pub fn total_segments(&self) -> usize {
        self.gaps.iter().map(Vec::len).sum()
    }

    /// Admissible head at point `r` of gap `j` (see the module docs).
    pub fn head_bounds(&self, gap: usize, point: usize) -> Interval {
        let segs = &self.gaps[gap];
        if point == 0 {
            self.stations[gap].h_out
        } else if point == segs.len() {
            self.stations[gap + 1].h_in.intersect(&segs[point - 1].head)
        } else {
            segs[point - 1].head
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |path: String, reason: String| Err(ScenarioError::Invalid { path, reason });
        let positive = |path: &str, v: f64| -> Result<(), ScenarioError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ScenarioError::Invalid {
                    path: path.to_string(),
                    reason: format!("must be a positive finite number, got {v}"),
                })
            }
        };

        positive("fluid.density", self.fluid.density)?;
        positive("fluid.specific_heat", self.fluid.specific_heat)?;
        let v = &self.fluid.viscosity;
        for (name, val) in [("a1", v.a1), ("a2", v.a2)] {
            if !(val.is_finite() && val >= 0.0) {
                return err(format!("fluid.viscosity.{name}"), format!("must be >= 0, got {val}"));
            }
        }
        for (name, val) in [("b1", v.b1), ("b2", v.b2)] {
            if !(val.is_finite() && val <= 0.0) {
                return err(
                    format!("fluid.viscosity.{name}"),
                    format!("must be <= 0 so viscosity decreases with temperature, got {val}"),
                );
            }
        }
        if v.a1 + v.a2 <= 0.0 {
            return err("fluid.viscosity".into(), "a1 + a2 must be positive".into());
        }
        positive("friction.beta", self.friction.beta)?;
        if !(self.friction.m > 0.0 && self.friction.m < 1.0) {
            return err("friction.m".into(), format!("must lie in (0, 1), got {}", self.friction.m));
        }
        positive("economics.electricity_price", self.economics.electricity_price)?;
        positive("economics.fuel_price", self.economics.fuel_price)?;
        positive("economics.heat_value", self.economics.heat_value)?;
        positive("economics.gravity", self.economics.gravity)?;
        if !self.inlet_head.is_finite() {
            return err("inlet.head".into(), "must be finite".into());
        }
        positive("inlet.temperature", self.inlet_temp)?;

        let ns = self.stations.len();
        if ns < 2 {
            return err("stations".into(), format!("need at least 2 stations, got {ns}"));
        }
        if self.gaps.len() != ns - 1 {
            return err(
                "gaps".into(),
                format!("expected {} gaps for {ns} stations, got {}", ns - 1, self.gaps.len()),
            );
        }

        for (j, st) in self.stations.iter().enumerate() {
            let p = format!("stations[{j}]");
            let last = j + 1 == ns;
            if last && (st.n_csp != 0 || st.n_ssp != 0) {
                return err(p, "the terminal station cannot have pumps".into());
            }
            for (name, iv) in [("h_in", st.h_in), ("t_in", st.t_in)] {
                check_interval(&p, name, iv)?;
            }
            if last {
                continue;
            }
            for (name, iv) in [("h_out", st.h_out), ("t_out", st.t_out)] {
                check_interval(&p, name, iv)?;
            }
            positive(&format!("{p}.flow"), st.flow)?;
            positive(&format!("{p}.furnace_eff"), st.furnace_eff)?;
            if st.furnace_eff > 1.0 {
                return err(format!("{p}.furnace_eff"), "efficiency must lie in (0, 1]".into());
            }
            if st.n_csp > 0 {
                positive(&format!("{p}.csp_head"), st.csp_head)?;
                check_efficiency(&p, "csp_eff", st.csp_eff)?;
            }
            if st.n_ssp > 0 {
                check_efficiency(&p, "ssp_eff", st.ssp_eff)?;
                if !(st.ssp_head.lo >= 0.0 && st.ssp_head.lo <= st.ssp_head.hi && st.ssp_head.hi.is_finite()) {
                    return err(
                        format!("{p}.ssp_head_lb"),
                        format!("need 0 <= ssp_head_lb <= ssp_head_ub < inf, got {}", st.ssp_head),
                    );
                }
            }
            if !st.h_out.lo.is_finite() {
                return err(format!("{p}.h_out_lb"), "outlet head needs a finite lower bound".into());
            }
            if !(st.t_out.lo.is_finite() && st.t_out.hi.is_finite() && st.t_out.lo > 0.0) {
                return err(
                    format!("{p}.t_out_lb"),
                    format!("outlet temperature bounds must be finite and positive, got {}", st.t_out),
                );
            }
        }

        let first = &self.stations[0];
        if first.h_in != Interval::point(self.inlet_head) {
            return err(
                "stations[0].h_in_lb".into(),
                format!("first station inlet head must be pinned to {}, got {}", self.inlet_head, first.h_in),
            );
        }
        if first.t_in != Interval::point(self.inlet_temp) {
            return err(
                "stations[0].t_in_lb".into(),
                format!("first station inlet temperature must be pinned to {}, got {}", self.inlet_temp, first.t_in),
            );
        }

        for (j, segs) in self.gaps.iter().enumerate() {
            if segs.is_empty() {
                return err(format!("gaps[{j}].segments"), "a gap needs at least one segment".into());
            }
            for (k, seg) in segs.iter().enumerate() {
                let p = format!("gaps[{j}].segments[{k}]");
                if !(seg.length.is_finite() && seg.length >= 0.0) {
                    return err(format!("{p}.length"), format!("must be >= 0, got {}", seg.length));
                }
                positive(&format!("{p}.inner_diameter"), seg.inner_diameter)?;
                if !(seg.outer_diameter >= seg.inner_diameter && seg.outer_diameter.is_finite()) {
                    return err(
                        format!("{p}.outer_diameter"),
                        "outer diameter must be at least the inner diameter".into(),
                    );
                }
                if !seg.elevation_change.is_finite() {
                    return err(format!("{p}.elevation_change"), "must be finite".into());
                }
                if !(seg.heat_transfer.is_finite() && seg.heat_transfer >= 0.0) {
                    return err(format!("{p}.heat_transfer"), "must be >= 0".into());
                }
                positive(&format!("{p}.flow"), seg.flow)?;
                if !(seg.ground_temp.is_finite() && seg.friction_heat.is_finite()) {
                    return err(format!("{p}.ground_temp"), "must be finite".into());
                }
                check_interval(&p, "head", seg.head)?;
            }
        }

        // Friction is only defined for positive temperatures, so the lowest
        // reachable average temperature has to stay above zero.
        for j in 0..ns - 1 {
            let mut lo = self.stations[j].t_out.lo;
            for (k, seg) in self.gaps[j].iter().enumerate() {
                let next = crate::model::axial_outlet_temperature(lo, seg, &self.fluid);
                let ave = crate::model::average_temperature(lo, next);
                if ave.min(next) <= 0.0 {
                    return err(
                        format!("gaps[{j}].segments[{k}].ground_temp"),
                        "oil temperature can fall to 0 °C or below along this segment".into(),
                    );
                }
                lo = next;
            }
        }
        Ok(())
    }
}

fn check_interval(prefix: &str, name: &str, iv: Interval) -> Result<(), ScenarioError> {
    if iv.lo.is_nan() || iv.hi.is_nan() {
        return Err(ScenarioError::Invalid {
            path: format!("{prefix}.{name}_lb"),
            reason: "bound is NaN".into(),
        });
    }
    if iv.is_empty(BOUND_TOL) {
        return Err(ScenarioError::Invalid {
            path: format!("{prefix}.{name}_lb"),
            reason: format!("lower bound {} exceeds upper bound {}", iv.lo, iv.hi),
        });
    }
    Ok(())
}

fn check_efficiency(prefix: &str, name: &str, eff: f64) -> Result<(), ScenarioError> {
    if eff > 0.0 && eff <= 1.0 {
        Ok(())
    } else {
        Err(ScenarioError::Invalid {
            path: format!("{prefix}.{name}"),
            reason: format!("efficiency must lie in (0, 1], got {eff}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_violation_is_distance_outside() {
        let iv = Interval::new(1.0, 3.0);
        assert_eq!(iv.violation(2.0), 0.0);
        assert_eq!(iv.violation(0.5), 0.5);
        assert_eq!(iv.violation(5.0), 2.0);
        assert_eq!(Interval::UNBOUNDED.violation(1e300), 0.0);
    }

    #[test]
    fn intersection_can_be_empty() {
        let a = Interval::new(0.0, 1.0);
        let b = Interval::new(2.0, 3.0);
        assert!(a.intersect(&b).is_empty(0.0));
        assert!(!a.intersect(&Interval::new(0.5, 4.0)).is_empty(0.0));
    }
}
