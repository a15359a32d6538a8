//! The five-segment singular cycle S1 → S2 → F1 → S3 → F2 built from reduced
//! and layer trajectories, and its distance to a computed MMO orbit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, Direction, Event, IntegratorConfig, Trajectory};
use crate::manifold::{fold_factor, fx_on_m0, ms_chart, solve_x_on_ms, stability_ms, FoldSide, Stability};
use crate::model::{layer_rhs, System};
use crate::numeric::eigenvector2;
use crate::params::DimensionlessParams;
use crate::reduced::{
    desingularized_jacobian, desingularized_rhs, find_folded_singularities, find_reduced_equilibria, funnel_contains,
    strong_singular_canard, EquilibriumKind, FoldedSingularity, ReducedEquilibrium, SingularityKind, StripLocation,
    FUNNEL_RADIUS,
};
use crate::state::DimlessState;

/// Default initial condition of reference simulations.
pub const DEFAULT_INITIAL: [f64; 3] = [-4.0, -1.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentLabel {
    S1,
    S2,
    F1,
    S3,
    F2,
}

impl SegmentLabel {
    pub const ORDER: [SegmentLabel; 5] = [Self::S1, Self::S2, Self::F1, Self::S3, Self::F2];

    pub fn label(self) -> &'static str {
        match self {
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::F1 => "F1",
            Self::S3 => "S3",
            Self::F2 => "F2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    ReducedMs,
    ReducedM0,
    Layer,
}

impl SegmentKind {
    pub fn label(self) -> &'static str {
        match self {
            SegmentKind::ReducedMs => "reduced-Ms",
            SegmentKind::ReducedM0 => "reduced-M0",
            SegmentKind::Layer => "layer",
        }
    }

    pub fn is_fast(self) -> bool {
        self == SegmentKind::Layer
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: SegmentLabel,
    pub kind: SegmentKind,
    pub points: Vec<DimlessState>,
}

impl Segment {
    pub fn start(&self) -> DimlessState {
        self.points[0]
    }

    pub fn end(&self) -> DimlessState {
        *self.points.last().unwrap()
    }
}

/// Where the cycle leaves M0.
#[derive(Debug, Clone, PartialEq)]
pub enum Departure<'a> {
    /// Explicit z value.
    Z(f64),
    /// Minimum z of a reference orbit.
    Orbit(&'a Trajectory<3>),
    /// Minimum z of an orbit simulated with the cycle's parameters.
    Simulate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOptions<'a> {
    pub departure: Departure<'a>,
    /// (x, z) start of S1; defaults to the landing point of F2.
    pub s1_start: Option<[f64; 2]>,
    /// Displacement from EQ along its eigenvector that starts S2.
    pub eq_offset: f64,
    /// Displacement off an invariant set that starts a layer jump.
    pub jump_offset: f64,
    /// Layer jumps end within this distance of their target.
    pub jump_tol: f64,
    /// Largest allowed closure gap.
    pub closure_tol: f64,
}

impl Default for CycleOptions<'_> {
    fn default() -> Self {
        Self {
            departure: Departure::Simulate,
            s1_start: None,
            eq_offset: 1e-6,
            jump_offset: 1e-6,
            jump_tol: 1e-6,
            closure_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularCycle {
    pub params: DimensionlessParams,
    pub segments: Vec<Segment>,
    pub folded_node: FoldedSingularity,
    pub equilibrium: ReducedEquilibrium,
    pub z_departure: f64,
    /// Distance from the end of F2 to the start of S1.
    pub closure_gap: f64,
}

impl SingularCycle {
    pub fn segment(&self, label: SegmentLabel) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.label == label)
            .expect("all segments present")
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        self.segments
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.to_array()))
            .collect()
    }
}

fn ms_state(x: f64, z: f64, q: &DimensionlessParams) -> DimlessState {
    DimlessState::new(x, ms_chart(x, z, q), z)
}

fn slow_config(t_end: f64) -> IntegratorConfig {
    IntegratorConfig::new(0.0, t_end)
        .tolerances(1e-10, 1e-12)
        .max_step(0.05)
}

/// Orbit of the desingularized flow with the true reduced orientation (or
/// its reverse) until it enters the FN neighborhood.
fn ms_orbit_to_node(
    start: [f64; 2],
    node: &FoldedSingularity,
    q: &DimensionlessParams,
    reverse: bool,
    segment: &str,
) -> Result<Vec<[f64; 2]>> {
    let sign = if reverse { -1.0 } else { 1.0 };
    let rhs = |_: f64, u: &[f64; 2]| {
        let d = desingularized_rhs(u[0], u[1], q);
        let s = sign * fold_factor(u[0], u[1], q).signum();
        [s * d[0], s * d[1]]
    };
    let (nx, nz) = (node.x, node.z);
    let ev = [
        Event::new("node", Direction::Falling, move |u: &[f64; 2]| {
            (u[0] - nx).hypot(u[1] - nz) - FUNNEL_RADIUS
        })
        .terminal(),
        Event::threshold("x-min", 0, -30.0, Direction::Falling).terminal(),
        Event::threshold("x-max", 0, 0.0, Direction::Rising).terminal(),
    ];
    let tr = integrate(rhs, start, &slow_config(1e4), &ev).map_err(|e| Error::construction(segment, e.to_string()))?;
    if tr.stopped_by.as_deref() != Some("node") {
        return Err(Error::construction(
            segment,
            format!("orbit from ({}, {}) did not reach the folded node", start[0], start[1]),
        ));
    }
    Ok(tr.states)
}

/// Layer jump at fixed (y, z) from `x0` until within `tol` of `target`.
fn layer_jump(
    x0: f64,
    y: f64,
    z: f64,
    target: f64,
    tol: f64,
    q: &DimensionlessParams,
    segment: &str,
) -> Result<Vec<DimlessState>> {
    let rhs = |_: f64, u: &[f64; 3]| layer_rhs(&DimlessState::from(*u), q).to_array();
    let ev = [Event::new("arrived", Direction::Falling, move |u: &[f64; 3]| {
        (target - u[0]).abs() - tol
    })
    .terminal()];
    let cfg = IntegratorConfig::new(0.0, 1e4).tolerances(1e-10, 1e-14).max_step(0.1);
    let tr = integrate(rhs, [x0, y, z], &cfg, &ev).map_err(|e| Error::construction(segment, e.to_string()))?;
    if tr.stopped_by.is_none() {
        return Err(Error::construction(
            segment,
            format!("layer jump from x = {x0} did not converge to {target}"),
        ));
    }
    Ok(tr.states.into_iter().map(DimlessState::from).collect())
}

/// Minimum z of a reference orbit simulated with `q`.
pub fn reference_departure(q: &DimensionlessParams) -> Result<f64> {
    let cfg = IntegratorConfig::new(0.0, (60.0 / q.delta).max(3000.0))
        .transient_fraction(0.3)
        .sao_step_cap(q.delta, false);
    let tr = integrate(System::Fast.rhs(*q), DEFAULT_INITIAL, &cfg, &[])?;
    Ok(min_z(&tr))
}

fn min_z(tr: &Trajectory<3>) -> f64 {
    tr.states.iter().map(|s| s[2]).fold(f64::INFINITY, f64::min)
}

pub fn build_singular_cycle(q: &DimensionlessParams, opts: &CycleOptions<'_>) -> Result<SingularCycle> {
    q.validate()?;
    let node = find_folded_singularities(q)
        .into_iter()
        .find(|f| f.side == FoldSide::Minus && f.kind == SingularityKind::Node)
        .ok_or_else(|| Error::construction("S1", "no folded node on L-"))?;
    let eq = find_reduced_equilibria(q)
        .into_iter()
        .filter(|e| e.kind == EquilibriumKind::Saddle && e.location == StripLocation::InStrip && e.x < 0.0)
        .min_by(|a, b| {
            (a.x - node.x)
                .hypot(a.z - node.z)
                .total_cmp(&(b.x - node.x).hypot(b.z - node.z))
        })
        .ok_or_else(|| Error::construction("S2", "no saddle equilibrium between the folds"))?;

    // S2: the true stable manifold of EQ, traced backwards from EQ to FN.
    let j = desingularized_jacobian(eq.x, eq.z, q);
    let (mu_a, mu_b) = (eq.mu_s.re, eq.mu_w.re);
    // true reduced eigenvalues are these divided by the fold factor
    let stable = if mu_a / eq.fold_factor < 0.0 { mu_a } else { mu_b };
    let v = eigenvector2(j, stable);
    let mut s2 = None;
    for sgn in [1.0, -1.0] {
        let start = [eq.x + sgn * opts.eq_offset * v[0], eq.z + sgn * opts.eq_offset * v[1]];
        if let Ok(path) = ms_orbit_to_node(start, &node, q, true, "S2") {
            s2 = Some(path);
            break;
        }
    }
    let mut s2 =
        s2.ok_or_else(|| Error::construction("S2", "neither branch of the stable manifold reaches the folded node"))?;
    s2.reverse();
    s2.push([eq.x, eq.z]);
    let s2: Vec<DimlessState> = s2.iter().map(|p| ms_state(p[0], p[1], q)).collect();

    // F1: fast jump from EQ to M0.
    let (y1, z1) = (eq.y, eq.z);
    if fx_on_m0(y1, z1, q) >= 0.0 {
        return Err(Error::construction(
            "F1",
            "M0 is not attracting at the equilibrium's (y, z)",
        ));
    }
    let x_start = eq.x + opts.jump_offset * (-eq.x).signum();
    let mut f1 = vec![DimlessState::new(eq.x, y1, z1)];
    f1.extend(layer_jump(x_start, y1, z1, 0.0, opts.jump_tol, q, "F1")?);

    // S3: reduced flow on M0 in closed form until z = z_dep.
    let z_dep = match &opts.departure {
        Departure::Z(z) => *z,
        Departure::Orbit(tr) => min_z(tr),
        Departure::Simulate => reference_departure(q).map_err(|e| Error::construction("S3", e.to_string()))?,
    };
    let (lo, hi) = if z1 > q.k { (q.k, z1) } else { (z1, q.k) };
    if !(z_dep > lo && z_dep < hi) {
        return Err(Error::construction(
            "S3",
            format!("departure z = {z_dep} is not reached from z = {z1} (limit k = {})", q.k),
        ));
    }
    let s_end = ((z1 - q.k) / (z_dep - q.k)).ln();
    let n3 = 2001;
    let s3: Vec<DimlessState> = (0..n3)
        .map(|i| {
            let s = s_end * i as f64 / (n3 - 1) as f64;
            let z = if i == n3 - 1 {
                z_dep
            } else {
                q.k + (z1 - q.k) * (-s).exp()
            };
            DimlessState::new(0.0, y1 * (-q.rho * q.a * s).exp(), z)
        })
        .collect();
    let y3 = s3.last().unwrap().y;

    // F2: fast jump from M0 to the left attracting branch of Ms.
    if fx_on_m0(y3, z_dep, q) <= 0.0 {
        return Err(Error::construction(
            "F2",
            "M0 is still attracting at the departure point",
        ));
    }
    let roots = solve_x_on_ms(y3, z_dep, q).map_err(|e| Error::construction("F2", e.to_string()))?;
    let target = roots[0];
    if !(target < 0.0) || stability_ms(target, z_dep, q) != Stability::Attracting {
        return Err(Error::construction(
            "F2",
            format!("left branch root {target} is not attracting"),
        ));
    }
    let mut f2 = vec![DimlessState::new(0.0, y3, z_dep)];
    f2.extend(layer_jump(
        -opts.jump_offset,
        y3,
        z_dep,
        target,
        opts.jump_tol,
        q,
        "F2",
    )?);

    // S1: from the landing point (or a given start) into the folded node.
    let land = f2.last().unwrap();
    let s1_start = opts.s1_start.unwrap_or([target, z_dep]);
    let canard = strong_singular_canard(&node, q).map_err(|e| Error::construction("S1", e.to_string()))?;
    if !funnel_contains(s1_start, &canard, q) {
        return Err(Error::construction(
            "S1",
            format!("start ({}, {}) is outside the funnel", s1_start[0], s1_start[1]),
        ));
    }
    let mut s1: Vec<DimlessState> = ms_orbit_to_node(s1_start, &node, q, false, "S1")?
        .iter()
        .map(|p| ms_state(p[0], p[1], q))
        .collect();
    s1.push(ms_state(node.x, node.z, q));
    let gap = {
        let s = s1[0];
        (s.x - land.x).hypot(s.y - land.y).hypot(s.z - land.z)
    };
    if gap > opts.closure_tol && opts.s1_start.is_none() {
        return Err(Error::construction(
            "F2",
            format!("closure gap {gap:e} exceeds {:e}", opts.closure_tol),
        ));
    }

    let seg = |label, kind, points| Segment { label, kind, points };
    Ok(SingularCycle {
        params: *q,
        segments: vec![
            seg(SegmentLabel::S1, SegmentKind::ReducedMs, s1),
            seg(SegmentLabel::S2, SegmentKind::ReducedMs, s2),
            seg(SegmentLabel::F1, SegmentKind::Layer, f1),
            seg(SegmentLabel::S3, SegmentKind::ReducedM0, s3),
            seg(SegmentLabel::F2, SegmentKind::Layer, f2),
        ],
        folded_node: node,
        equilibrium: eq,
        z_departure: z_dep,
        closure_gap: gap,
    })
}

/// Nearest-neighbour queries over a uniform 3-D bucket grid.
struct PointGrid {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<[f64; 3]>>,
}

impl PointGrid {
    fn new(points: &[[f64; 3]], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<[f64; 3]>> = HashMap::new();
        for p in points {
            buckets.entry(Self::key(p, cell)).or_default().push(*p);
        }
        Self { cell, buckets }
    }

    fn key(p: &[f64; 3], cell: f64) -> [i64; 3] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    }

    fn nearest(&self, p: &[f64; 3]) -> f64 {
        if self.buckets.is_empty() {
            return f64::INFINITY;
        }
        let k = Self::key(p, self.cell);
        let mut best = f64::INFINITY;
        for r in 0i64.. {
            for i in -r..=r {
                for j in -r..=r {
                    for l in -r..=r {
                        if i.abs().max(j.abs()).max(l.abs()) != r {
                            continue;
                        }
                        if let Some(b) = self.buckets.get(&[k[0] + i, k[1] + j, k[2] + l]) {
                            for q in b {
                                let d = (p[0] - q[0]).hypot(p[1] - q[1]).hypot(p[2] - q[2]);
                                best = best.min(d);
                            }
                        }
                    }
                }
            }
            // anything outside ring r is at least r cells away
            if best <= r as f64 * self.cell || r > 4000 {
                break;
            }
        }
        best
    }
}

/// Inserts points so that consecutive points are at most `spacing` apart.
fn densify(points: &[[f64; 3]], spacing: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]).hypot(w[1][2] - w[0][2]);
        let n = (d / spacing).ceil().max(1.0) as usize;
        for i in 0..n {
            let t = i as f64 / n as f64;
            out.push([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
                w[0][2] + t * (w[1][2] - w[0][2]),
            ]);
        }
    }
    if let Some(l) = points.last() {
        out.push(*l);
    }
    out
}

/// Orbit samples with Hermite-interpolated points between steps.
fn densify_orbit(tr: &Trajectory<3>, spacing: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(tr.len());
    for k in 0..tr.len().saturating_sub(1) {
        let (a, b) = (tr.states[k], tr.states[k + 1]);
        let d = (b[0] - a[0]).hypot(b[1] - a[1]).hypot(b[2] - a[2]);
        let n = (d / spacing).ceil().max(1.0) as usize;
        out.push(a);
        for i in 1..n {
            let t = tr.times[k] + (tr.times[k + 1] - tr.times[k]) * i as f64 / n as f64;
            if let Some(p) = tr.interpolate(t) {
                out.push(p);
            }
        }
    }
    if let Some((_, l)) = tr.last() {
        out.push(l);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDistance {
    pub label: SegmentLabel,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleComparison {
    pub segments: Vec<SegmentDistance>,
    pub max: f64,
}

impl CycleComparison {
    pub fn get(&self, label: SegmentLabel) -> f64 {
        self.segments
            .iter()
            .find(|s| s.label == label)
            .map_or(f64::NAN, |s| s.max)
    }
}

const COMPARE_SPACING: f64 = 0.01;

/// Distance from every point of each segment to the nearest orbit point.
pub fn compare_cycle_to_points(cycle: &SingularCycle, orbit: &[[f64; 3]]) -> CycleComparison {
    let grid = PointGrid::new(orbit, 0.1);
    let segments: Vec<SegmentDistance> = cycle
        .segments
        .iter()
        .map(|s| {
            let pts: Vec<[f64; 3]> = s.points.iter().map(|p| p.to_array()).collect();
            let pts = densify(&pts, COMPARE_SPACING);
            let d: Vec<f64> = pts.iter().map(|p| grid.nearest(p)).collect();
            SegmentDistance {
                label: s.label,
                max: d.iter().copied().fold(0.0, f64::max),
                mean: d.iter().sum::<f64>() / d.len().max(1) as f64,
            }
        })
        .collect();
    let max = segments.iter().map(|s| s.max).fold(0.0, f64::max);
    CycleComparison { segments, max }
}

pub fn compare_cycle_to_orbit(cycle: &SingularCycle, traj: &Trajectory<3>) -> CycleComparison {
    compare_cycle_to_points(cycle, &densify_orbit(traj, COMPARE_SPACING))
}
