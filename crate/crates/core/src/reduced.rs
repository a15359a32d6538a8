//! Reduced flows on M0 and Ms, the desingularized flow on Ms, and its
//! special points: folded singularities, ordinary equilibria, the strong
//! singular canard of a folded node and funnel membership.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, Direction, Event, IntegratorConfig};
use crate::manifold::{fold_curves, fold_factor, fx_on_ms, ms_chart, FoldSide};
use crate::numeric::{eigenvector2, quadratic_real_roots, scan_roots, sech2, tanh_sat, Eigen2, ScanGrid};
use crate::params::DimensionlessParams;

/// Discriminants and eigenvalues smaller than this count as degenerate.
pub const CLASSIFY_TOL: f64 = 1e-10;

/// Folded singularities closer than this to the nullcline k − z − x/2 = 0
/// are ordinary equilibria in disguise and are dropped.
pub const NULLCLINE_EXCLUSION: f64 = 1e-6;

/// Reduced flow on M0 (x = 0) in slow time.
pub fn reduced_m0_rhs(y: f64, z: f64, q: &DimensionlessParams) -> [f64; 2] {
    [-q.rho * q.a * y, q.k - z]
}

/// k − z − x/2.
#[inline]
fn drift(x: f64, z: f64, q: &DimensionlessParams) -> f64 {
    q.k - z - 0.5 * x
}

/// Numerator of ẋ on Ms: ρ(a·h + x²) + c(k − z − x/2)·sech²(x + z).
#[inline]
fn x_numerator(x: f64, z: f64, q: &DimensionlessParams) -> f64 {
    q.rho * (q.a * ms_chart(x, z, q) + x * x) + q.c * drift(x, z, q) * sech2(x + z)
}

/// Reduced flow on Ms in the (x, z) chart. Singular on the folds.
pub fn reduced_ms_rhs(x: f64, z: f64, q: &DimensionlessParams) -> Result<[f64; 2]> {
    let ff = fold_factor(x, z, q);
    if ff.abs() < 1e-12 {
        return Err(Error::SingularPoint { x, z });
    }
    Ok([x_numerator(x, z, q) / ff, drift(x, z, q)])
}

/// Reduced flow on Ms multiplied by the fold factor 1 − c·sech²(x + z).
/// Orientation is reversed wherever that factor is negative.
pub fn desingularized_rhs(x: f64, z: f64, q: &DimensionlessParams) -> [f64; 2] {
    [x_numerator(x, z, q), fold_factor(x, z, q) * drift(x, z, q)]
}

pub fn desingularized_jacobian(x: f64, z: f64, q: &DimensionlessParams) -> [[f64; 2]; 2] {
    let u = x + z;
    let t = tanh_sat(u);
    let s2 = sech2(u);
    let w = drift(x, z, q);
    let cs2 = q.c * s2;
    // d(sech²)/du = −2·sech²·tanh
    let dw = -2.0 * cs2 * t * w;
    [
        [
            q.rho * (q.a * (-1.0 + cs2) + 2.0 * x) - 0.5 * cs2 + dw,
            q.rho * q.a * cs2 - cs2 + dw,
        ],
        [-dw - 0.5 * (1.0 - cs2), -dw - (1.0 - cs2)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularityKind {
    Node,
    Saddle,
    Focus,
    Degenerate,
}

impl SingularityKind {
    pub fn label(self) -> &'static str {
        match self {
            SingularityKind::Node => "node",
            SingularityKind::Saddle => "saddle",
            SingularityKind::Focus => "focus",
            SingularityKind::Degenerate => "degenerate",
        }
    }
}

/// Kind of an ordinary equilibrium of the desingularized flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Sink,
    Saddle,
    Source,
    Degenerate,
}

impl EquilibriumKind {
    pub fn label(self) -> &'static str {
        match self {
            EquilibriumKind::Sink => "sink",
            EquilibriumKind::Saddle => "saddle",
            EquilibriumKind::Source => "source",
            EquilibriumKind::Degenerate => "degenerate",
        }
    }
}

/// Eigenvalues of a 2×2 linearization, strong (larger modulus) first.
fn strong_weak(m: [[f64; 2]; 2]) -> (Complex64, Complex64, Eigen2) {
    let e = Eigen2::of(m);
    match e {
        Eigen2::Real(small, big) => (Complex64::new(big, 0.0), Complex64::new(small, 0.0), e),
        Eigen2::Complex { re, im } => (Complex64::new(re, im), Complex64::new(re, -im), e),
    }
}

fn near_degenerate(m: [[f64; 2]; 2], e: Eigen2) -> bool {
    if Eigen2::discriminant(m).abs() < CLASSIFY_TOL {
        return true;
    }
    match e {
        Eigen2::Real(small, _) => small.abs() < CLASSIFY_TOL,
        Eigen2::Complex { re, .. } => re.abs() < CLASSIFY_TOL,
    }
}

fn singularity_kind(m: [[f64; 2]; 2]) -> (Complex64, Complex64, SingularityKind) {
    let (s, w, e) = strong_weak(m);
    let kind = if near_degenerate(m, e) {
        SingularityKind::Degenerate
    } else {
        match e {
            Eigen2::Complex { .. } => SingularityKind::Focus,
            Eigen2::Real(a, b) if a.signum() == b.signum() => SingularityKind::Node,
            Eigen2::Real(..) => SingularityKind::Saddle,
        }
    };
    (s, w, kind)
}

fn equilibrium_kind(m: [[f64; 2]; 2]) -> (Complex64, Complex64, EquilibriumKind) {
    let (s, w, e) = strong_weak(m);
    let kind = if near_degenerate(m, e) {
        EquilibriumKind::Degenerate
    } else {
        match e {
            Eigen2::Complex { re, .. } if re < 0.0 => EquilibriumKind::Sink,
            Eigen2::Complex { .. } => EquilibriumKind::Source,
            Eigen2::Real(a, b) if a.signum() != b.signum() => EquilibriumKind::Saddle,
            Eigen2::Real(_, b) if b < 0.0 => EquilibriumKind::Sink,
            Eigen2::Real(..) => EquilibriumKind::Source,
        }
    };
    (s, w, kind)
}

/// Equilibrium of the desingularized flow lying on a fold curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldedSingularity {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub side: FoldSide,
    /// Strong eigenvalue (larger modulus).
    pub mu_s: Complex64,
    /// Weak eigenvalue.
    pub mu_w: Complex64,
    pub kind: SingularityKind,
}

impl FoldedSingularity {
    /// μw/μs for a node; governs the number of small oscillations.
    pub fn eigenvalue_ratio(&self) -> Option<f64> {
        (self.kind == SingularityKind::Node).then(|| self.mu_w.re / self.mu_s.re)
    }

    /// Unit eigenvector of the strong eigenvalue.
    pub fn strong_direction(&self, q: &DimensionlessParams) -> Option<[f64; 2]> {
        (self.mu_s.im == 0.0).then(|| eigenvector2(desingularized_jacobian(self.x, self.z, q), self.mu_s.re))
    }
}

/// Folded singularities on both fold lines, ordered by side then x.
pub fn find_folded_singularities(q: &DimensionlessParams) -> Vec<FoldedSingularity> {
    let Some(folds) = fold_curves(q) else {
        return Vec::new();
    };
    if folds.is_degenerate() {
        return Vec::new();
    }
    let tanh_eta = tanh_sat(folds.eta);
    let mut out = Vec::new();
    for side in [FoldSide::Minus, FoldSide::Plus] {
        let s = side.sign();
        // On x + z = s·eta, c·sech² = 1 and z = s·eta − x.
        let c0 = q.rho * q.a * (-q.c + s * q.c * tanh_eta) + q.k - s * folds.eta;
        for x in quadratic_real_roots(q.rho, 0.5 - q.rho * q.a, c0) {
            let z = folds.x_on(side, 0.0) - x;
            if drift(x, z, q).abs() <= NULLCLINE_EXCLUSION {
                continue;
            }
            let (mu_s, mu_w, kind) = singularity_kind(desingularized_jacobian(x, z, q));
            out.push(FoldedSingularity {
                x,
                y: ms_chart(x, z, q),
                z,
                side,
                mu_s,
                mu_w,
                kind,
            });
        }
    }
    out
}

/// Position of a point of Ms relative to the fold strip |x + z| < eta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StripLocation {
    /// x + z < −eta
    BeyondMinus,
    /// −eta < x + z < eta
    InStrip,
    /// x + z > eta
    BeyondPlus,
    /// c ≤ 1, there is no strip
    NoFolds,
}

impl StripLocation {
    pub fn of(x: f64, z: f64, q: &DimensionlessParams) -> Self {
        match fold_curves(q) {
            Some(f) if !f.is_degenerate() => {
                let u = x + z;
                if u < -f.eta {
                    StripLocation::BeyondMinus
                } else if u > f.eta {
                    StripLocation::BeyondPlus
                } else {
                    StripLocation::InStrip
                }
            }
            _ => StripLocation::NoFolds,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StripLocation::BeyondMinus => "beyond L-",
            StripLocation::InStrip => "between folds",
            StripLocation::BeyondPlus => "beyond L+",
            StripLocation::NoFolds => "no folds",
        }
    }
}

/// Ordinary equilibrium of the reduced flow on Ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedEquilibrium {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Classification in the desingularized plane.
    pub kind: EquilibriumKind,
    pub mu_s: Complex64,
    pub mu_w: Complex64,
    pub fold_factor: f64,
    pub location: StripLocation,
}

/// Scan used for the scalar equilibrium condition.
pub const EQUILIBRIUM_GRID: ScanGrid = ScanGrid::new(-20.0, 5.0, 20001);

pub fn find_reduced_equilibria(q: &DimensionlessParams) -> Vec<ReducedEquilibrium> {
    find_reduced_equilibria_with(q, EQUILIBRIUM_GRID)
}

pub fn find_reduced_equilibria_with(q: &DimensionlessParams, grid: ScanGrid) -> Vec<ReducedEquilibrium> {
    let g = |x: f64| q.a * ms_chart(x, q.k - 0.5 * x, q) + x * x;
    let roots = scan_roots(g, grid, 1e-14).unwrap_or_default();
    roots
        .into_iter()
        .filter_map(|x| {
            let z = q.k - 0.5 * x;
            let ff = fold_factor(x, z, q);
            if ff.abs() < 1e-12 {
                return None;
            }
            let (mu_s, mu_w, kind) = equilibrium_kind(desingularized_jacobian(x, z, q));
            Some(ReducedEquilibrium {
                x,
                y: ms_chart(x, z, q),
                z,
                kind,
                mu_s,
                mu_w,
                fold_factor: ff,
                location: StripLocation::of(x, z, q),
            })
        })
        .collect()
}

/// Axis-aligned box in the (x, z) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: (f64, f64),
    pub z: (f64, f64),
}

impl BoundingBox {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x.0 && p[0] <= self.x.1 && p[1] >= self.z.0 && p[1] <= self.z.1
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self {
            x: (-12.0, 0.0),
            z: (-2.0, 6.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanardOptions {
    /// Initial displacement from the folded node along the strong direction.
    pub offset: f64,
    /// Step bound in arc length.
    pub max_step: f64,
    pub max_arc_length: f64,
    pub bounds: BoundingBox,
}

impl Default for CanardOptions {
    fn default() -> Self {
        Self {
            offset: 1e-6,
            max_step: 1e-3,
            max_arc_length: 60.0,
            bounds: BoundingBox::default(),
        }
    }
}

/// The strong stable manifold of a folded node on the attracting sheet,
/// as an (x, z) polyline starting at the node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularCanard {
    pub node: FoldedSingularity,
    pub direction: [f64; 2],
    pub eta: f64,
    pub bounds: BoundingBox,
    pub points: Vec<[f64; 2]>,
}

/// Signed distance to the node's fold line, positive on the outer
/// (attracting for x < 0) side.
fn outer_side(x: f64, z: f64, side: FoldSide, eta: f64) -> f64 {
    side.sign() * (x + z) - eta
}

fn box_events<'a>(b: BoundingBox) -> Vec<Event<'a, 2>> {
    vec![
        Event::threshold("x-min", 0, b.x.0, Direction::Falling).terminal(),
        Event::threshold("x-max", 0, b.x.1, Direction::Rising).terminal(),
        Event::threshold("z-min", 1, b.z.0, Direction::Falling).terminal(),
        Event::threshold("z-max", 1, b.z.1, Direction::Rising).terminal(),
    ]
}

pub fn strong_singular_canard(node: &FoldedSingularity, q: &DimensionlessParams) -> Result<SingularCanard> {
    strong_singular_canard_with(node, q, CanardOptions::default())
}

pub fn strong_singular_canard_with(
    node: &FoldedSingularity,
    q: &DimensionlessParams,
    opts: CanardOptions,
) -> Result<SingularCanard> {
    if node.kind != SingularityKind::Node {
        return Err(Error::validation(format!(
            "the singular canard needs a folded node, got a {}",
            node.kind.label()
        )));
    }
    let eta = fold_curves(q).map(|f| f.eta).unwrap_or(0.0);
    let v = node
        .strong_direction(q)
        .ok_or_else(|| Error::Numerical("folded node without a real strong eigenvector".into()))?;
    let start = |sgn: f64| [node.x + sgn * opts.offset * v[0], node.z + sgn * opts.offset * v[1]];
    // Take the branch on the attracting sheet.
    let sgn = if fx_on_ms(start(1.0)[0], start(1.0)[1], q) < fx_on_ms(start(-1.0)[0], start(-1.0)[1], q) {
        1.0
    } else {
        -1.0
    };
    let direction = [sgn * v[0], sgn * v[1]];
    let u0 = start(sgn);

    let rhs = |_: f64, u: &[f64; 2]| {
        let f = desingularized_rhs(u[0], u[1], q);
        let n = f[0].hypot(f[1]);
        if n < 1e-300 {
            [0.0, 0.0]
        } else {
            [-f[0] / n, -f[1] / n]
        }
    };
    let cfg = IntegratorConfig::new(0.0, opts.max_arc_length)
        .tolerances(1e-10, 1e-12)
        .max_step(opts.max_step);
    let tr = integrate(rhs, u0, &cfg, &box_events(opts.bounds))?;
    let mut points = Vec::with_capacity(tr.len() + 1);
    points.push([node.x, node.z]);
    points.extend(tr.states.iter().copied());
    Ok(SingularCanard {
        node: *node,
        direction,
        eta,
        bounds: opts.bounds,
        points,
    })
}

/// Radius of the neighborhood of the folded node that counts as arrival.
pub const FUNNEL_RADIUS: f64 = 1e-4;

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Whether the point of Ms with chart coordinates (x, z) flows to the folded
/// node under the desingularized flow without crossing its fold line.
/// Points on the canard itself count as inside.
pub fn funnel_contains(point: [f64; 2], canard: &SingularCanard, q: &DimensionlessParams) -> bool {
    let node = &canard.node;
    let (side, eta) = (node.side, canard.eta);
    let to_node = |u: &[f64; 2]| (u[0] - node.x).hypot(u[1] - node.z);
    if to_node(&point) <= FUNNEL_RADIUS {
        return true;
    }
    if canard
        .points
        .windows(2)
        .any(|w| segment_distance(point, w[0], w[1]) <= FUNNEL_RADIUS)
    {
        return true;
    }
    if outer_side(point[0], point[1], side, eta) <= 0.0 || !canard.bounds.contains(point) {
        return false;
    }
    let mut events = box_events(canard.bounds);
    events.push(
        Event::new("node", Direction::Falling, move |u: &[f64; 2]| {
            to_node(u) - FUNNEL_RADIUS
        })
        .terminal(),
    );
    events.push(
        Event::new("fold", Direction::Falling, move |u: &[f64; 2]| {
            outer_side(u[0], u[1], side, eta)
        })
        .terminal(),
    );
    let cfg = IntegratorConfig::new(0.0, 1e4).tolerances(1e-9, 1e-12).max_step(0.5);
    let rhs = |_: f64, u: &[f64; 2]| desingularized_rhs(u[0], u[1], q);
    match integrate(rhs, point, &cfg, &events) {
        Ok(tr) => tr.stopped_by.as_deref() == Some("node"),
        Err(_) => false,
    }
}

/// Sign of ẋ of the desingularized flow at the fold point of `side` at
/// height z; `None` at a folded singularity or without folds.
pub fn fold_crossing_direction(side: FoldSide, z: f64, q: &DimensionlessParams) -> Option<f64> {
    let f = fold_curves(q)?;
    let x = f.x_on(side, z);
    let xd = desingularized_rhs(x, z, q)[0];
    (xd.abs() > CLASSIFY_TOL).then_some(xd.signum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use proptest::prelude::*;

    fn fig4() -> DimensionlessParams {
        Preset::Fig4.dimensionless()
    }

    #[test]
    fn m0_fixed_point_and_hand_value() {
        let q = fig4();
        assert_eq!(reduced_m0_rhs(0.0, q.k, &q), [0.0, 0.0]);
        let r = reduced_m0_rhs(-1.0, 0.0, &q);
        assert!((r[0] - 1.275).abs() < 1e-12);
        assert!((r[1] - 0.34).abs() < 1e-12);
    }

    #[test]
    fn m0_flow_decays_exponentially() {
        let q = fig4();
        let cfg = IntegratorConfig::new(0.0, 5.0).tolerances(1e-11, 1e-14);
        let tr = integrate(|_, u: &[f64; 2]| reduced_m0_rhs(u[0], u[1], &q), [1.0, q.k], &cfg, &[]).unwrap();
        for (s, u) in tr.times.iter().zip(&tr.states) {
            assert!((u[0] - (-q.rho * q.a * s).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn ms_flow_far_left_saturates() {
        let q = fig4();
        let (x, z) = (-10.0, 0.0);
        let r = reduced_ms_rhs(x, z, &q).unwrap();
        let approx = q.rho * (q.a * ms_chart(x, z, &q) + x * x);
        assert!(((r[0] - approx) / approx).abs() < 1e-6);
        assert_eq!(r[1], q.k - z - 0.5 * x);
    }

    #[test]
    fn ms_flow_is_singular_on_folds() {
        let q = fig4();
        let eta = fold_curves(&q).unwrap().eta;
        assert!(matches!(
            reduced_ms_rhs(-eta - 1.0, 1.0, &q),
            Err(Error::SingularPoint { .. })
        ));
        // diverges approaching a regular fold point
        let near = reduced_ms_rhs(-eta - 1.0 - 1e-7, 1.0, &q).unwrap()[0].abs();
        let nearer = reduced_ms_rhs(-eta - 1.0 - 1e-9, 1.0, &q).unwrap()[0].abs();
        assert!(nearer > 50.0 * near);
    }

    #[test]
    fn fig4_folded_node() {
        let q = fig4();
        let fs = find_folded_singularities(&q);
        let nodes: Vec<_> = fs
            .iter()
            .filter(|f| f.kind == SingularityKind::Node && f.side == FoldSide::Minus)
            .collect();
        assert_eq!(nodes.len(), 1);
        let n = nodes[0];
        assert!((n.mu_s.re + 3.48).abs() < 0.05, "{}", n.mu_s);
        assert!((n.mu_w.re + 0.13).abs() < 0.05, "{}", n.mu_w);
        assert!((n.x + 3.112_541_9).abs() < 1e-6);
        assert!((n.z - 1.833_052_4).abs() < 1e-6);
        assert!((n.y + 3.848_766_3).abs() < 1e-6);
        let r = n.eigenvalue_ratio().unwrap();
        assert!(r > 0.0 && r < 0.1);
    }

    #[test]
    fn fig4_singularity_inventory() {
        let q = fig4();
        let fs = find_folded_singularities(&q);
        let summary: Vec<_> = fs.iter().map(|f| (f.side, f.kind)).collect();
        assert_eq!(
            summary,
            vec![
                (FoldSide::Minus, SingularityKind::Node),
                (FoldSide::Minus, SingularityKind::Saddle),
                (FoldSide::Plus, SingularityKind::Focus),
                (FoldSide::Plus, SingularityKind::Focus),
            ]
        );
        assert!((fs[1].x - 4.6625).abs() < 1e-3);
        assert!((fs[2].x + 1.188).abs() < 1e-3);
        assert!((fs[3].x - 2.738).abs() < 1e-3);
    }

    #[test]
    fn folded_singularity_residuals() {
        for preset in Preset::ALL {
            let q = preset.dimensionless();
            let eta = fold_curves(&q).unwrap().eta;
            for f in find_folded_singularities(&q) {
                assert!((f.side.sign() * eta - f.x - f.z).abs() < 1e-10);
                assert!(desingularized_rhs(f.x, f.z, &q)[0].abs() < 1e-10);
                assert!(drift(f.x, f.z, &q).abs() > NULLCLINE_EXCLUSION);
                assert_eq!(f.y, ms_chart(f.x, f.z, &q));
            }
        }
    }

    #[test]
    fn no_folds_no_singularities() {
        let mut q = fig4();
        q.c = 0.8;
        assert!(find_folded_singularities(&q).is_empty());
    }

    #[test]
    fn fig4_equilibrium_is_a_saddle_between_the_folds() {
        let q = fig4();
        let eqs = find_reduced_equilibria(&q);
        let eq = eqs.iter().find(|e| e.x < 0.0).unwrap();
        assert_eq!(eq.kind, EquilibriumKind::Saddle);
        assert_eq!(eq.location, StripLocation::InStrip);
        assert!((eq.x + 3.106_585_5).abs() < 1e-6);
        assert!((eq.z - 1.893_292_8).abs() < 1e-6);
        assert!((eq.mu_s.re + 3.5196).abs() < 1e-3 && (eq.mu_w.re - 0.12371).abs() < 1e-4);
        assert_eq!(eqs.len(), 2);
        assert!((eqs[1].x - 2.764).abs() < 1e-3);
    }

    #[test]
    fn equilibrium_matches_fine_sign_scan() {
        let q = fig4();
        let g = |x: f64| q.a * ms_chart(x, q.k - 0.5 * x, &q) + x * x;
        let n = 1_000_000;
        let mut oracle = Vec::new();
        let mut prev = g(-10.0);
        for i in 1..=n {
            let x = -10.0 + 10.0 * i as f64 / n as f64;
            let v = g(x);
            if prev.signum() != v.signum() {
                oracle.push(x);
            }
            prev = v;
        }
        let found: Vec<f64> = find_reduced_equilibria(&q)
            .iter()
            .map(|e| e.x)
            .filter(|x| *x < 0.0)
            .collect();
        assert_eq!(oracle.len(), found.len());
        for (o, f) in oracle.iter().zip(&found) {
            assert!((o - f).abs() <= 1e-5);
        }
        for e in find_reduced_equilibria(&q) {
            assert!(drift(e.x, e.z, &q).abs() < 1e-10);
            assert!((q.a * ms_chart(e.x, e.z, &q) + e.x * e.x).abs() < 1e-10);
            assert!(e.fold_factor.abs() > 1e-12);
            assert!(desingularized_rhs(e.x, e.z, &q)[1].abs() < 1e-10);
        }
    }

    #[test]
    fn equilibrium_condition_ignores_rho() {
        let q = fig4();
        let mut q2 = q;
        q2.rho = 3.0;
        let a: Vec<f64> = find_reduced_equilibria(&q).iter().map(|e| e.x).collect();
        let b: Vec<f64> = find_reduced_equilibria(&q2).iter().map(|e| e.x).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn kinds_stable_under_tiny_perturbations() {
        let base = fig4();
        let kinds = |q: &DimensionlessParams| {
            (
                find_folded_singularities(q).iter().map(|f| f.kind).collect::<Vec<_>>(),
                find_reduced_equilibria(q).iter().map(|e| e.kind).collect::<Vec<_>>(),
            )
        };
        let k0 = kinds(&base);
        for key in ["rho", "a", "c", "k"] {
            for d in [-1e-8, 1e-8] {
                let mut q = base;
                q.set(key, base.get(key).unwrap() + d).unwrap();
                assert_eq!(kinds(&q), k0, "{key} {d}");
            }
        }
    }

    #[test]
    fn canard_leaves_the_node_along_the_strong_direction() {
        let q = fig4();
        let node = find_folded_singularities(&q)[0];
        let sc = strong_singular_canard(&node, &q).unwrap();
        assert_eq!(sc.points[0], [node.x, node.z]);
        let p = sc.points[1];
        let d = [p[0] - node.x, p[1] - node.z];
        let n = d[0].hypot(d[1]);
        let cos = (d[0] * sc.direction[0] + d[1] * sc.direction[1]) / n;
        assert!((cos - 1.0).abs() < 1e-6);
        assert!(fx_on_ms(p[0], p[1], &q) < 0.0);
        assert!(sc.points.len() > 100);
        assert!(sc.points.iter().all(|p| p[0] >= -12.0 - 1e-9 && p[0] <= 1e-9));
    }

    #[test]
    fn canard_requires_a_node() {
        let q = fig4();
        let saddle = find_folded_singularities(&q)[1];
        assert!(strong_singular_canard(&saddle, &q).is_err());
    }

    #[test]
    fn funnel_membership() {
        let q = fig4();
        let node = find_folded_singularities(&q)[0];
        let sc = strong_singular_canard(&node, &q).unwrap();
        // landing point of the fast return jump
        assert!(funnel_contains([-7.2883, 0.5018], &sc, &q));
        // inside the fold strip
        assert!(!funnel_contains([-1.0, 0.5], &sc, &q));
        for p in sc.points.iter().step_by(97) {
            assert!(funnel_contains(*p, &sc, &q));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn desingularization_identity(x in -12.0f64..3.0, z in -3.0f64..6.0) {
            let q = fig4();
            let d = desingularized_rhs(x, z, &q);
            let ff = fold_factor(x, z, &q);
            prop_assume!(ff.abs() > 1e-6);
            let r = reduced_ms_rhs(x, z, &q).unwrap();
            prop_assert!((d[0] - r[0] * ff).abs() <= 1e-9 * (1.0 + d[0].abs()));
            prop_assert!((d[1] - r[1] * ff).abs() <= 1e-12 * (1.0 + d[1].abs()));
            // orientation agrees exactly where the factor is positive
            let same = d[0] * r[0] + d[1] * r[1] >= 0.0;
            prop_assert_eq!(same, ff > 0.0);
        }
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(x in -10.0f64..3.0, z in -3.0f64..5.0) {
            let q = fig4();
            let j = desingularized_jacobian(x, z, &q);
            let h = 1e-6;
            for (col, (dx, dz)) in [(h, 0.0), (0.0, h)].into_iter().enumerate() {
                let p = desingularized_rhs(x + dx, z + dz, &q);
                let m = desingularized_rhs(x - dx, z - dz, &q);
                for row in 0..2 {
                    let fd = (p[row] - m[row]) / (2.0 * h);
                    let scale = j[row][col].abs().max(1e-2);
                    prop_assert!((fd - j[row][col]).abs() / scale < 1e-5, "row {} col {}: {} vs {}", row, col, fd, j[row][col]);
                }
            }
        }
    }
}
