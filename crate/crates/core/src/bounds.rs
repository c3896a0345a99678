use std::fmt;

use crate::scenario::Scenario;

/// Integer box on the number of running pumps at each pump station.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeBounds {
    pub x_lo: Vec<u32>,
    pub x_hi: Vec<u32>,
    pub y_lo: Vec<u32>,
    pub y_hi: Vec<u32>,
}

impl NodeBounds {
    /// Full box `0..=installed` for every station.
    pub fn root(scen: &Scenario) -> Self {
        let pumps = &scen.stations[..scen.n_pump_stations()];
        Self {
            x_lo: vec![0; pumps.len()],
            x_hi: pumps.iter().map(|s| s.n_csp).collect(),
            y_lo: vec![0; pumps.len()],
            y_hi: pumps.iter().map(|s| s.n_ssp).collect(),
        }
    }

    /// Box pinned to one integer assignment.
    pub fn fixed(x: &[u32], y: &[u32]) -> Self {
        Self {
            x_lo: x.to_vec(),
            x_hi: x.to_vec(),
            y_lo: y.to_vec(),
            y_hi: y.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.x_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_lo.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.x_lo.iter().zip(&self.x_hi).all(|(lo, hi)| lo <= hi)
            && self.y_lo.iter().zip(&self.y_hi).all(|(lo, hi)| lo <= hi)
    }

    /// Number of integer points in the box.
    pub fn cardinality(&self) -> u128 {
        let span = |lo: &[u32], hi: &[u32]| -> u128 {
            lo.iter().zip(hi).map(|(l, h)| u128::from(h - l + 1)).product()
        };
        span(&self.x_lo, &self.x_hi) * span(&self.y_lo, &self.y_hi)
    }
}

impl fmt::Display for NodeBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |lo: &[u32], hi: &[u32]| -> String {
            lo.iter()
                .zip(hi)
                .map(|(l, h)| format!("{l}-{h}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "x={};y={}", side(&self.x_lo, &self.x_hi), side(&self.y_lo, &self.y_hi))
    }
}
