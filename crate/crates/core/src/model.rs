//! Physical property models, the energy cost and the temperature chain
//! helpers shared by preprocessing and the relaxation.
//!
//! Everything here works in SI units. Flows are m³/s, lengths m, heads m,
//! temperatures °C. Costs are reported in yuan per day.

use crate::error::ModelError;
use crate::scenario::{PipeSegment, Scenario};

/// Friction coefficient for hydraulically smooth turbulent flow.
pub const HYDRAULIC_SMOOTH_BETA: f64 = 0.0246;
/// Flow-regime exponent for hydraulically smooth turbulent flow.
pub const HYDRAULIC_SMOOTH_M: f64 = 0.25;
pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const SECONDS_PER_HOUR: f64 = 3_600.0;

/// Converts a volume flow from m³/h to m³/s.
pub fn m3h_to_m3s(q: f64) -> f64 {
    q / SECONDS_PER_HOUR
}

pub fn m3s_to_m3h(q: f64) -> f64 {
    q * SECONDS_PER_HOUR
}

/// Two-term exponential fit of dynamic viscosity,
/// `mu(T) = a1 exp(b1 T) + a2 exp(b2 T)` in mPa·s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityModel {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl ViscosityModel {
    /// The fit used for the bundled crude oil example.
    pub const CRUDE_FIT: ViscosityModel = ViscosityModel {
        a1: 8.166e6,
        b1: -0.3302,
        a2: 77.04,
        b2: -0.02882,
    };

    /// Temperature-independent viscosity of `mu` mPa·s.
    pub fn constant(mu: f64) -> Self {
        Self {
            a1: mu,
            b1: 0.0,
            a2: 0.0,
            b2: 0.0,
        }
    }

    /// Dynamic viscosity in mPa·s.
    pub fn dynamic(&self, t: f64) -> f64 {
        self.a1 * (self.b1 * t).exp() + self.a2 * (self.b2 * t).exp()
    }

    /// Derivative of [`dynamic`](Self::dynamic), mPa·s/°C.
    pub fn dynamic_slope(&self, t: f64) -> f64 {
        self.a1 * self.b1 * (self.b1 * t).exp() + self.a2 * self.b2 * (self.b2 * t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProps {
    /// kg/m³
    pub density: f64,
    /// J/(kg·°C)
    pub specific_heat: f64,
    pub viscosity: ViscosityModel,
}

fn check_temperature(t: f64) -> Result<(), ModelError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(ModelError::Domain(t))
    }
}

impl FluidProps {
    /// Kinematic viscosity in m²/s.
    pub fn kinematic_viscosity(&self, t: f64) -> Result<f64, ModelError> {
        check_temperature(t)?;
        Ok(self.viscosity.dynamic(t) / 1000.0 / self.density)
    }

    /// d(nu)/dT in m²/(s·°C). Never positive for a valid model.
    pub fn viscosity_slope(&self, t: f64) -> Result<f64, ModelError> {
        check_temperature(t)?;
        Ok(self.viscosity.dynamic_slope(t) / 1000.0 / self.density)
    }
}

/// Leibenzon form of the friction factor: `beta Q^(2-m) nu^m / D^(5-m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionModel {
    pub beta: f64,
    pub m: f64,
}

impl Default for FrictionModel {
    fn default() -> Self {
        Self {
            beta: HYDRAULIC_SMOOTH_BETA,
            m: HYDRAULIC_SMOOTH_M,
        }
    }
}

impl FrictionModel {
    /// Temperature-independent part of the segment friction, `beta Q^(2-m) L / D^(5-m)`.
    pub fn segment_factor(&self, seg: &PipeSegment) -> f64 {
        self.beta * seg.flow.powf(2.0 - self.m) / seg.inner_diameter.powf(5.0 - self.m) * seg.length
    }
}

/// Friction head loss over a whole segment at average temperature `t_ave`, m.
pub fn friction_head_loss(
    t_ave: f64,
    seg: &PipeSegment,
    fluid: &FluidProps,
    friction: &FrictionModel,
) -> Result<f64, ModelError> {
    let nu = fluid.kinematic_viscosity(t_ave)?;
    Ok(friction.segment_factor(seg) * nu.powf(friction.m))
}

/// Derivative of [`friction_head_loss`] with respect to the average temperature, m/°C.
pub fn friction_slope(
    t_ave: f64,
    seg: &PipeSegment,
    fluid: &FluidProps,
    friction: &FrictionModel,
) -> Result<f64, ModelError> {
    let nu = fluid.kinematic_viscosity(t_ave)?;
    let dnu = fluid.viscosity_slope(t_ave)?;
    let m = friction.m;
    Ok(friction.segment_factor(seg) * m * nu.powf(m - 1.0) * dnu)
}

/// Heat-loss rate of a segment and the resulting decay factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalDecay {
    /// 1/m
    pub alpha: f64,
    /// `exp(-alpha L)`, in (0, 1].
    pub factor: f64,
}

pub fn thermal_decay(seg: &PipeSegment, fluid: &FluidProps) -> ThermalDecay {
    let alpha = seg.heat_transfer * std::f64::consts::PI * seg.outer_diameter
        / (fluid.density * seg.flow * fluid.specific_heat);
    ThermalDecay {
        alpha,
        factor: (-alpha * seg.length).exp(),
    }
}

/// Temperature at the end of a segment entered at `t_in`.
pub fn axial_outlet_temperature(t_in: f64, seg: &PipeSegment, fluid: &FluidProps) -> f64 {
    let ambient = seg.ambient();
    ambient + (t_in - ambient) * thermal_decay(seg, fluid).factor
}

/// Segment average temperature weighted one third start, two thirds end.
pub fn average_temperature(t_start: f64, t_end: f64) -> f64 {
    t_start / 3.0 + 2.0 * t_end / 3.0
}

/// `value = slope * input + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub slope: f64,
    pub offset: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        slope: 1.0,
        offset: 0.0,
    };

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }

    /// `self` after `inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            slope: self.slope * inner.slope,
            offset: self.slope * inner.offset + self.offset,
        }
    }
}

/// Affine map from the station outlet temperature of `gap` to the temperature at `point`.
pub fn gap_temperature_map(scen: &Scenario, gap: usize, point: usize) -> AffineMap {
    scen.gaps[gap][..point]
        .iter()
        .fold(AffineMap::IDENTITY, |acc, seg| {
            let a = thermal_decay(seg, &scen.fluid).factor;
            AffineMap {
                slope: a,
                offset: seg.ambient() * (1.0 - a),
            }
            .compose(&acc)
        })
}

/// Coefficients expressing a downstream segment average temperature as an
/// affine function of the temperature at an anchor point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainCoefficient {
    pub phi: f64,
    pub psi: f64,
}

impl ChainCoefficient {
    pub fn average_at(&self, u: f64) -> f64 {
        self.phi * u + self.psi
    }
}

/// For `t = 1..=count`, the average temperature of segment `anchor + t - 1`
/// of `gap` equals `phi_t u + psi_t` where `u` is the temperature at point `anchor`.
pub fn chain_coefficients(
    scen: &Scenario,
    gap: usize,
    anchor: usize,
    count: usize,
) -> Result<Vec<ChainCoefficient>, ModelError> {
    let segs = scen.gaps.get(gap).ok_or(ModelError::Index {
        gap,
        anchor,
        end: anchor + count,
        len: 0,
    })?;
    if anchor + count > segs.len() {
        return Err(ModelError::Index {
            gap,
            anchor,
            end: anchor + count,
            len: segs.len(),
        });
    }
    // Running map from u to the temperature at the start of the current segment.
    let mut start = AffineMap::IDENTITY;
    let mut out = Vec::with_capacity(count);
    for seg in &segs[anchor..anchor + count] {
        let a = thermal_decay(seg, &scen.fluid).factor;
        let ambient = seg.ambient();
        let w = (1.0 + 2.0 * a) / 3.0;
        out.push(ChainCoefficient {
            phi: w * start.slope,
            psi: w * start.offset + 2.0 / 3.0 * ambient * (1.0 - a),
        });
        start = AffineMap {
            slope: a * start.slope,
            offset: a * start.offset + ambient * (1.0 - a),
        };
    }
    Ok(out)
}

/// Station outlet temperature of `gap` whose forward propagation reaches `u` at `point`.
pub fn inverse_temperature_to_station(scen: &Scenario, gap: usize, point: usize, u: f64) -> f64 {
    scen.gaps[gap][..point].iter().rev().fold(u, |t, seg| {
        let ThermalDecay { alpha, .. } = thermal_decay(seg, &scen.fluid);
        let growth = (alpha * seg.length).exp();
        let ambient = seg.ambient();
        ambient * (1.0 - growth) + growth * t
    })
}

/// Marginal daily cost of each decision at one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRates {
    /// yuan/d per running constant-speed pump.
    pub per_csp: f64,
    /// yuan/d per metre of shifted-speed pump head.
    pub per_ssp_metre: f64,
    /// yuan/d per °C of furnace temperature rise.
    pub per_degree: f64,
}

impl Scenario {
    pub fn cost_rates(&self, station: usize) -> CostRates {
        let st = &self.stations[station];
        let e = &self.economics;
        let rho = self.fluid.density;
        let hydraulic = e.electricity_price * rho * st.flow * e.gravity * SECONDS_PER_DAY;
        CostRates {
            per_csp: hydraulic * st.csp_head / st.csp_eff,
            per_ssp_metre: hydraulic / st.ssp_eff,
            per_degree: e.fuel_price * self.fluid.specific_heat * rho * st.flow
                / (st.furnace_eff * e.heat_value)
                * SECONDS_PER_DAY,
        }
    }

    /// Friction loss of segment `seg` of `gap` at average temperature `t_ave`.
    pub fn friction(&self, gap: usize, seg: usize, t_ave: f64) -> Result<f64, ModelError> {
        friction_head_loss(t_ave, &self.gaps[gap][seg], &self.fluid, &self.friction)
    }

    pub fn friction_slope(&self, gap: usize, seg: usize, t_ave: f64) -> Result<f64, ModelError> {
        friction_slope(t_ave, &self.gaps[gap][seg], &self.fluid, &self.friction)
    }
}

/// Per-station power and fuel cost, yuan/d.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub power: Vec<f64>,
    pub fuel: Vec<f64>,
}

impl CostBreakdown {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn total_fuel(&self) -> f64 {
        self.fuel.iter().sum()
    }

    /// yuan/d
    pub fn total(&self) -> f64 {
        self.total_power() + self.total_fuel()
    }

    pub fn total_per_hour(&self) -> f64 {
        self.total() / 24.0
    }
}

/// Energy cost of running `x` constant-speed pumps, `dh_sp` metres of
/// shifted-speed head and `dt` °C of heating at each pump station.
pub fn total_cost(
    x: &[f64],
    dh_sp: &[f64],
    dt: &[f64],
    scen: &Scenario,
) -> Result<CostBreakdown, ModelError> {
    let n = scen.n_pump_stations();
    for (what, v) in [("x", x), ("dh_sp", dh_sp), ("dt", dt)] {
        if v.len() != n {
            return Err(ModelError::Dimension {
                what,
                expected: n,
                found: v.len(),
            });
        }
    }
    let mut power = Vec::with_capacity(n);
    let mut fuel = Vec::with_capacity(n);
    for j in 0..n {
        let r = scen.cost_rates(j);
        power.push(r.per_csp * x[j] + r.per_ssp_metre * dh_sp[j]);
        fuel.push(r.per_degree * dt[j]);
    }
    Ok(CostBreakdown { power, fuel })
}
