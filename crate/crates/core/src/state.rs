//! State vectors in the three coordinate systems and the maps between them.

use serde::{Deserialize, Serialize};

use crate::params::{PhysicalParams, Scales};

/// Western/eastern surface temperatures [°C] and western thermocline depth [m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysState {
    pub t1: f64,
    pub t2: f64,
    pub h1: f64,
}

/// Anomaly coordinates: S = T2 − T1, T = T1 − T_r, h = h1 + K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyState {
    pub s: f64,
    pub t: f64,
    pub h: f64,
}

/// Dimensionless coordinates of the fast/slow systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimlessState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PhysState {
    pub const fn new(t1: f64, t2: f64, h1: f64) -> Self {
        Self { t1, t2, h1 }
    }

    pub fn to_anomaly(&self, p: &PhysicalParams) -> AnomalyState {
        AnomalyState {
            s: self.t2 - self.t1,
            t: self.t1 - p.t_r,
            h: self.h1 + p.k_offset(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t1.is_finite() && self.t2.is_finite() && self.h1.is_finite()
    }
}

impl AnomalyState {
    pub const fn new(s: f64, t: f64, h: f64) -> Self {
        Self { s, t, h }
    }

    pub fn to_physical(&self, p: &PhysicalParams) -> PhysState {
        let t1 = self.t + p.t_r;
        PhysState {
            t1,
            t2: self.s + t1,
            h1: self.h - p.k_offset(),
        }
    }

    pub fn to_dimless(&self, s: &Scales) -> DimlessState {
        DimlessState {
            x: self.s / s.s0,
            y: self.t / s.t0,
            z: self.h / s.h0,
        }
    }
}

impl DimlessState {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_anomaly(&self, s: &Scales) -> AnomalyState {
        AnomalyState {
            s: self.x * s.s0,
            t: self.y * s.t0,
            h: self.z * s.h0,
        }
    }

    pub fn to_physical(&self, p: &PhysicalParams, s: &Scales) -> PhysState {
        self.to_anomaly(s).to_physical(p)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for DimlessState {
    fn from(u: [f64; 3]) -> Self {
        Self::new(u[0], u[1], u[2])
    }
}

impl From<DimlessState> for [f64; 3] {
    fn from(u: DimlessState) -> Self {
        u.to_array()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn radiative_equilibrium_maps_to_origin() {
        let p = PhysicalParams::table1();
        let a = PhysState::new(p.t_r, p.t_r, p.z0 - p.h_ref).to_anomaly(&p);
        assert_eq!(a, AnomalyState::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_computed_anomaly() {
        let p = PhysicalParams::table1();
        let a = PhysState::new(28.0, 24.0, -5.0).to_anomaly(&p);
        assert_eq!(a, AnomalyState::new(-4.0, -1.5, 20.0));
    }

    proptest! {
        #[test]
        fn anomaly_round_trip(t1 in -10.0f64..40.0, t2 in -10.0f64..40.0, h1 in -200.0f64..200.0) {
            let p = PhysicalParams::table1();
            let s = PhysState::new(t1, t2, h1);
            let back = s.to_anomaly(&p).to_physical(&p);
            prop_assert!((back.t1 - t1).abs() < 1e-12);
            prop_assert!((back.t2 - t2).abs() < 1e-12);
            prop_assert!((back.h1 - h1).abs() < 1e-12);
        }

        #[test]
        fn dimless_round_trip(s in -20.0f64..20.0, t in -20.0f64..20.0, h in -200.0f64..200.0) {
            let (_, sc) = PhysicalParams::table1().nondimensionalize().unwrap();
            let a = AnomalyState::new(s, t, h);
            let back = a.to_dimless(&sc).to_anomaly(&sc);
            prop_assert!((back.s - s).abs() < 1e-12);
            prop_assert!((back.t - t).abs() < 1e-12);
            prop_assert!((back.h - h).abs() < 1e-12);
        }
    }
}
