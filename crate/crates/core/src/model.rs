//! Right-hand sides of the recharge oscillator in every coordinate system,
//! with analytic Jacobians for the dimensionless forms.
//!
//! Fast time τ: x' = ρδ(x² − ax) + x(x + y + c − c·tanh(x+z)),
//! y' = −ρδ(ay + x²), z' = δ(k − z − x/2). The slow system is the fast one
//! divided by δ; the layer problem is the fast one at δ = 0.

use crate::numeric::{sech2, tanh_sat, Mat3};
use crate::params::{DimensionlessParams, PhysicalParams};
use crate::state::{AnomalyState, DimlessState, PhysState};

/// Eastern subsurface temperature closure [°C].
pub fn subsurface_temperature(s: &PhysState, p: &PhysicalParams) -> f64 {
    let arg = (p.k_offset() + s.h1 + p.bl_over_beta * p.mu * (s.t2 - s.t1)) / p.h_star;
    0.5 * (p.t_r + p.t_r0) - 0.5 * (p.t_r - p.t_r0) * tanh_sat(arg)
}

/// Time derivatives of (T1, T2, h1) per day.
pub fn physical_rhs(s: &PhysState, p: &PhysicalParams) -> PhysState {
    let grad = s.t2 - s.t1;
    let t_sub = subsurface_temperature(s, p);
    PhysState {
        t1: -p.alpha * (s.t1 - p.t_r) - p.epsilon * p.mu * grad * grad,
        t2: -p.alpha * (s.t2 - p.t_r) + p.zeta * p.mu * grad * (s.t2 - t_sub),
        h1: p.r * (-s.h1 - 0.5 * p.bl_over_beta * p.mu * grad),
    }
}

/// Time derivatives of (S, T, h) per day, in the form used for the
/// nondimensionalization.
pub fn anomaly_rhs(u: &AnomalyState, p: &PhysicalParams) -> AnomalyState {
    let c = p.c_amplitude();
    let g = p.bl_over_beta * p.mu;
    let arg = u.h / p.h_star + g / p.h_star * u.s;
    AnomalyState {
        s: -p.alpha * u.s + p.epsilon * p.mu * u.s * u.s + p.zeta * p.mu * u.s * (u.s + u.t + c - c * tanh_sat(arg)),
        t: -p.alpha * u.t - p.epsilon * p.mu * u.s * u.s,
        h: -p.r * (u.h - p.k_offset() + 0.5 * g * u.s),
    }
}

/// x + y + c − c·tanh(x + z): the Ms factor of the fast equation.
#[inline]
pub fn ms_factor(u: &DimlessState, q: &DimensionlessParams) -> f64 {
    u.x + u.y + q.c - q.c * tanh_sat(u.x + u.z)
}

/// Fast system, derivatives with respect to τ.
pub fn fast_rhs(u: &DimlessState, q: &DimensionlessParams) -> DimlessState {
    let rd = q.rho * q.delta;
    DimlessState {
        x: rd * (u.x * u.x - q.a * u.x) + u.x * ms_factor(u, q),
        y: -rd * (q.a * u.y + u.x * u.x),
        z: q.delta * (q.k - u.z - 0.5 * u.x),
    }
}

/// Slow system, derivatives with respect to s = δτ.
pub fn slow_rhs(u: &DimlessState, q: &DimensionlessParams) -> DimlessState {
    let f = fast_rhs(u, q);
    DimlessState {
        x: f.x / q.delta,
        y: -q.rho * (q.a * u.y + u.x * u.x),
        z: q.k - u.z - 0.5 * u.x,
    }
}

/// Layer problem: slow variables frozen.
pub fn layer_rhs(u: &DimlessState, q: &DimensionlessParams) -> DimlessState {
    DimlessState {
        x: u.x * ms_factor(u, q),
        y: 0.0,
        z: 0.0,
    }
}

/// ∂(fast_rhs)/∂(x, y, z), row-major.
pub fn fast_jacobian(u: &DimlessState, q: &DimensionlessParams) -> Mat3 {
    let rd = q.rho * q.delta;
    let s2 = sech2(u.x + u.z);
    [
        [
            rd * (2.0 * u.x - q.a) + ms_factor(u, q) + u.x * (1.0 - q.c * s2),
            u.x,
            -q.c * u.x * s2,
        ],
        [-2.0 * rd * u.x, -rd * q.a, 0.0],
        [-0.5 * q.delta, 0.0, -q.delta],
    ]
}

/// ∂(slow_rhs)/∂(x, y, z).
pub fn slow_jacobian(u: &DimlessState, q: &DimensionlessParams) -> Mat3 {
    let mut j = fast_jacobian(u, q);
    for row in j.iter_mut() {
        for v in row.iter_mut() {
            *v /= q.delta;
        }
    }
    j
}

/// ∂(layer_rhs)/∂(x, y, z).
pub fn layer_jacobian(u: &DimlessState, q: &DimensionlessParams) -> Mat3 {
    let s2 = sech2(u.x + u.z);
    [
        [ms_factor(u, q) + u.x * (1.0 - q.c * s2), u.x, -q.c * u.x * s2],
        [0.0; 3],
        [0.0; 3],
    ]
}

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Fast,
    Slow,
    Layer,
}

impl System {
    pub fn rhs(self, q: DimensionlessParams) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
        move |_t, u| {
            let s = DimlessState::from(*u);
            match self {
                System::Fast => fast_rhs(&s, &q),
                System::Slow => slow_rhs(&s, &q),
                System::Layer => layer_rhs(&s, &q),
            }
            .to_array()
        }
    }
}
