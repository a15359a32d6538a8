//! Parameter scans in `a`: the collision of the reduced equilibrium with the
//! folded singularity on L−, full-system equilibria and their spectra, the
//! singular Hopf point, and the growth of the rotation frequency as δ → 0.

use std::thread;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{fold_curves, ms_chart, FoldSide};
use crate::model::{fast_jacobian, slow_jacobian};
use crate::numeric::{
    brent, char_det3, det3, eigenvalues3, loglog_slope, minor_sum3, scan_roots, tanh_sat, trace3, ScanGrid,
};
use crate::params::DimensionlessParams;
use crate::reduced::{desingularized_rhs, find_folded_singularities, EquilibriumKind, StripLocation, EQUILIBRIUM_GRID};
use crate::state::DimlessState;

/// Default number of grid points in a parameter scan.
pub const DEFAULT_SCAN_POINTS: usize = 401;
/// Bisection tolerance in the parameter.
pub const PARAM_TOL: f64 = 1e-10;

/// Grid for the scalar equation of nontrivial full equilibria.
const FULL_EQ_GRID: ScanGrid = ScanGrid::new(-30.0, 30.0, 60001);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScale {
    /// Derivatives per unit slow time s = δτ.
    Slow,
    /// Derivatives per unit fast time τ.
    Fast,
}

/// Equilibrium of the full three-dimensional system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullEquilibrium {
    pub state: DimlessState,
    /// Real eigenvalue first, then the pair (upper half-plane member first).
    pub eigenvalues: [Complex64; 3],
    pub time_scale: TimeScale,
    /// max |det(J − λI)| over the eigenvalues.
    pub residual: f64,
}

impl FullEquilibrium {
    fn new(state: DimlessState, q: &DimensionlessParams, ts: TimeScale) -> Self {
        let j = match ts {
            TimeScale::Slow => slow_jacobian(&state, q),
            TimeScale::Fast => fast_jacobian(&state, q),
        };
        let mut ev = eigenvalues3(&j);
        // order: most-real first, then the pair with Im ≥ 0 first
        ev.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()).then(b.im.total_cmp(&a.im)));
        let residual = ev.iter().map(|l| char_det3(&j, *l).norm()).fold(0.0, f64::max);
        Self {
            state,
            eigenvalues: ev,
            time_scale: ts,
            residual,
        }
    }

    /// The member of a complex-conjugate pair with positive imaginary part.
    pub fn complex_pair(&self) -> Option<Complex64> {
        self.eigenvalues.iter().copied().find(|l| l.im > 0.0)
    }

    /// One negative real eigenvalue and a complex pair with positive real part.
    pub fn is_saddle_focus(&self) -> bool {
        match self.complex_pair() {
            Some(p) => p.re > 0.0 && self.eigenvalues.iter().any(|l| l.im == 0.0 && l.re < 0.0),
            None => false,
        }
    }

    /// Differences between eigenvalue sum/product and trace/determinant.
    pub fn vieta_residual(&self, q: &DimensionlessParams) -> (f64, f64) {
        let j = match self.time_scale {
            TimeScale::Slow => slow_jacobian(&self.state, q),
            TimeScale::Fast => fast_jacobian(&self.state, q),
        };
        let sum: Complex64 = self.eigenvalues.iter().sum();
        let prod: Complex64 = self.eigenvalues.iter().product();
        ((sum - trace3(&j)).norm(), (prod - det3(&j)).norm())
    }
}

/// Residual of the scalar equation for nontrivial equilibria (x ≠ 0).
fn full_eq_scalar(x: f64, q: &DimensionlessParams) -> f64 {
    q.rho * q.delta * (x - q.a) + x - x * x / q.a + q.c - q.c * tanh_sat(0.5 * x + q.k)
}

/// All equilibria of the full system: (0, 0, k) and the nontrivial ones.
pub fn full_equilibria(q: &DimensionlessParams, ts: TimeScale) -> Result<Vec<FullEquilibrium>> {
    q.validate()?;
    let mut out = vec![FullEquilibrium::new(DimlessState::new(0.0, 0.0, q.k), q, ts)];
    for x in scan_roots(|x| full_eq_scalar(x, q), FULL_EQ_GRID, 1e-14)? {
        if x == 0.0 {
            continue;
        }
        let res = full_eq_scalar(x, q).abs();
        if res > 1e-9 {
            return Err(Error::Numerical(format!(
                "equilibrium at x = {x} polished only to {res:e}"
            )));
        }
        let state = DimlessState::new(x, -x * x / q.a, q.k - 0.5 * x);
        out.push(FullEquilibrium::new(state, q, ts));
    }
    Ok(out)
}

/// The nontrivial equilibrium on the left sheet (x < 0) nearest L−.
pub fn left_equilibrium(q: &DimensionlessParams, ts: TimeScale) -> Result<Option<FullEquilibrium>> {
    let eta = fold_curves(q).map(|f| f.eta).unwrap_or(0.0);
    Ok(full_equilibria(q, ts)?
        .into_iter()
        .filter(|e| e.state.x < 0.0)
        .min_by(|a, b| {
            let d = |e: &FullEquilibrium| (e.state.x + e.state.z + eta).abs();
            d(a).total_cmp(&d(b))
        }))
}

/// Reduced equilibrium with x < 0 nearest L−, without the fold exclusion.
fn left_reduced_equilibrium(q: &DimensionlessParams, eta: f64) -> Option<(f64, f64)> {
    let g = |x: f64| q.a * ms_chart(x, q.k - 0.5 * x, q) + x * x;
    scan_roots(g, EQUILIBRIUM_GRID, 1e-14)
        .ok()?
        .into_iter()
        .filter(|x| *x < 0.0)
        .map(|x| (x, q.k - 0.5 * x))
        .min_by(|a, b| (a.0 + a.1 + eta).abs().total_cmp(&(b.0 + b.1 + eta).abs()))
}

/// One grid point of an FSN-II scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub a: f64,
    /// Folded singularity on L− nearest the equilibrium, if any.
    pub fold_point: Option<(f64, f64)>,
    pub equilibrium: Option<(f64, f64)>,
    /// x + z + eta at the equilibrium; negative beyond L−.
    pub signed_distance: Option<f64>,
    pub equilibrium_kind: Option<EquilibriumKind>,
    pub location: Option<StripLocation>,
    pub full_eigenvalues: Option<[Complex64; 3]>,
    pub saddle_focus: bool,
    /// Re of the complex pair changes sign between this and the next point.
    pub hopf: bool,
}

impl ScanRecord {
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if let Some(l) = self.location {
            f.push(match l {
                StripLocation::BeyondMinus => "beyond-L-",
                StripLocation::InStrip => "strip",
                StripLocation::BeyondPlus => "beyond-L+",
                StripLocation::NoFolds => "no-folds",
            });
        }
        if let Some(k) = self.equilibrium_kind {
            f.push(k.label());
        }
        if self.saddle_focus {
            f.push("saddle-focus");
        }
        if self.hopf {
            f.push("hopf");
        }
        f.join("|")
    }
}

/// Residuals of both point conditions at the collision parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionCheck {
    pub x: f64,
    pub z: f64,
    /// |x + z + eta|
    pub fold: f64,
    /// |k − z − x/2|
    pub nullcline: f64,
    /// |a·h + x²|
    pub equilibrium: f64,
    /// |ẋ| of the desingularized flow
    pub numerator: f64,
}

impl CollisionCheck {
    pub fn max(&self) -> f64 {
        self.fold.max(self.nullcline).max(self.equilibrium).max(self.numerator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub parameter: String,
    pub base: DimensionlessParams,
    pub records: Vec<ScanRecord>,
    pub a_star: Option<f64>,
    pub collision: Option<CollisionCheck>,
}

fn scan_point(q: &DimensionlessParams) -> ScanRecord {
    let eta = fold_curves(q).map(|f| f.eta);
    let eq = eta.and_then(|eta| left_reduced_equilibrium(q, eta));
    let fold_point = eq.and_then(|(ex, ez)| {
        find_folded_singularities(q)
            .into_iter()
            .filter(|f| f.side == FoldSide::Minus)
            .map(|f| (f.x, f.z))
            .min_by(|a, b| ((a.0 - ex).hypot(a.1 - ez)).total_cmp(&(b.0 - ex).hypot(b.1 - ez)))
    });
    let (kind, location) = match eq {
        Some((x, z)) => {
            let kinds = crate::reduced::find_reduced_equilibria(q);
            let k = kinds.iter().find(|e| (e.x - x).abs() < 1e-9).map(|e| e.kind);
            (
                k.or(Some(EquilibriumKind::Degenerate)),
                Some(StripLocation::of(x, z, q)),
            )
        }
        None => (None, None),
    };
    let full = left_equilibrium(q, TimeScale::Slow).ok().flatten();
    ScanRecord {
        a: q.a,
        fold_point,
        equilibrium: eq,
        signed_distance: eq.zip(eta).map(|((x, z), eta)| x + z + eta),
        equilibrium_kind: kind,
        location,
        saddle_focus: full.as_ref().is_some_and(|f| f.is_saddle_focus()),
        full_eigenvalues: full.map(|f| f.eigenvalues),
        hopf: false,
    }
}

fn grid(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(range.1 > range.0) {
        return Err(Error::validation(
            "parameter range needs hi > lo and at least two points",
        ));
    }
    Ok((0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Evaluates `f` on every grid value using a small worker pool. The result
/// is in grid order regardless of scheduling.
fn par_map<T: Send>(values: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(values.len().max(1));
    let chunk = values.len().div_ceil(workers.max(1)).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(|&v| f(v)).collect::<Vec<T>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scan worker panicked"))
            .collect()
    })
}

/// Scans `a` over `a_range` and locates a*, where the reduced equilibrium
/// crosses L− and collides with the folded singularity.
pub fn fsn2_scan(base: &DimensionlessParams, a_range: (f64, f64), n_points: usize) -> Result<ScanResult> {
    base.validate()?;
    if fold_curves(base).is_none_or(|f| f.is_degenerate()) {
        return Err(Error::validation("the scan needs c > 1"));
    }
    let values = grid(a_range, n_points)?;
    let mut records = par_map(&values, |a| scan_point(&base.with_a(a)));
    for i in 0..records.len().saturating_sub(1) {
        let re = |r: &ScanRecord| {
            r.full_eigenvalues
                .and_then(|e| e.iter().find(|l| l.im > 0.0).map(|l| l.re))
        };
        if let (Some(r0), Some(r1)) = (re(&records[i]), re(&records[i + 1])) {
            records[i].hopf = r0.signum() != r1.signum();
        }
    }
    let a_star = locate_a_star(base, &records)?;
    let collision = a_star.map(|a| collision_check(&base.with_a(a))).transpose()?;
    Ok(ScanResult {
        parameter: "a".into(),
        base: *base,
        records,
        a_star,
        collision,
    })
}

fn signed_distance(q: &DimensionlessParams) -> f64 {
    let eta = fold_curves(q).map_or(0.0, |f| f.eta);
    left_reduced_equilibrium(q, eta).map_or(f64::NAN, |(x, z)| x + z + eta)
}

fn locate_a_star(base: &DimensionlessParams, records: &[ScanRecord]) -> Result<Option<f64>> {
    for w in records.windows(2) {
        if let (Some(d0), Some(d1)) = (w[0].signed_distance, w[1].signed_distance) {
            if d0 == 0.0 {
                return Ok(Some(w[0].a));
            }
            if d0.signum() != d1.signum() {
                return brent(|a| signed_distance(&base.with_a(a)), w[0].a, w[1].a, PARAM_TOL).map(Some);
            }
        }
    }
    Ok(None)
}

/// Re-solves both point conditions at `q` (expected to be at a*).
pub fn collision_check(q: &DimensionlessParams) -> Result<CollisionCheck> {
    let eta = fold_curves(q)
        .map(|f| f.eta)
        .ok_or_else(|| Error::validation("no folds"))?;
    let (x, z) =
        left_reduced_equilibrium(q, eta).ok_or_else(|| Error::Numerical("no reduced equilibrium with x < 0".into()))?;
    Ok(CollisionCheck {
        x,
        z,
        fold: (x + z + eta).abs(),
        nullcline: (q.k - z - 0.5 * x).abs(),
        equilibrium: (q.a * ms_chart(x, z, q) + x * x).abs(),
        numerator: desingularized_rhs(x, z, q)[0].abs(),
    })
}

/// The singular Hopf point of the left equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub a: f64,
    pub delta: f64,
    pub equilibrium: FullEquilibrium,
    /// |Re| of the complex pair at `a`.
    pub re_residual: f64,
}

fn pair_real_part(q: &DimensionlessParams) -> Option<f64> {
    left_equilibrium(q, TimeScale::Slow)
        .ok()
        .flatten()?
        .complex_pair()
        .map(|p| p.re)
}

/// Locates a_H for the given δ as the root of Re(complex pair) in `a`.
pub fn hopf_locate(base: &DimensionlessParams, delta: f64, a_range: (f64, f64)) -> Result<Option<HopfPoint>> {
    hopf_locate_with(base, delta, a_range, DEFAULT_SCAN_POINTS)
}

pub fn hopf_locate_with(
    base: &DimensionlessParams,
    delta: f64,
    a_range: (f64, f64),
    n_points: usize,
) -> Result<Option<HopfPoint>> {
    if !(delta > 0.0) {
        return Err(Error::validation("delta must be positive"));
    }
    let q = base.with_delta(delta);
    q.validate()?;
    let values = grid(a_range, n_points)?;
    let re = par_map(&values, |a| pair_real_part(&q.with_a(a)));
    for i in 0..values.len() - 1 {
        let (Some(r0), Some(r1)) = (re[i], re[i + 1]) else {
            continue;
        };
        if r0.signum() == r1.signum() {
            continue;
        }
        let a = brent(
            |a| pair_real_part(&q.with_a(a)).unwrap_or(f64::NAN),
            values[i],
            values[i + 1],
            PARAM_TOL,
        )?;
        let qa = q.with_a(a);
        let equilibrium = left_equilibrium(&qa, TimeScale::Slow)?
            .ok_or_else(|| Error::Numerical("equilibrium vanished at the Hopf point".into()))?;
        let re_residual = equilibrium.complex_pair().map_or(f64::NAN, |p| p.re.abs());
        return Ok(Some(HopfPoint {
            a,
            delta,
            equilibrium,
            re_residual,
        }));
    }
    Ok(None)
}

/// |a_H(δ) − a*| over a list of δ and its log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfDistance {
    pub a_star: f64,
    pub deltas: Vec<f64>,
    pub a_hopf: Vec<f64>,
    pub slope: f64,
}

pub fn hopf_distance_scaling(base: &DimensionlessParams, deltas: &[f64], a_range: (f64, f64)) -> Result<HopfDistance> {
    let a_star = fsn2_scan(base, a_range, DEFAULT_SCAN_POINTS)?
        .a_star
        .ok_or_else(|| Error::Numerical("no FSN-II crossing in range".into()))?;
    let mut a_hopf = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let h =
            hopf_locate(base, d, a_range)?.ok_or_else(|| Error::Numerical(format!("no Hopf point for delta = {d}")))?;
        a_hopf.push(h.a);
    }
    let dist: Vec<f64> = a_hopf.iter().map(|a| (a - a_star).abs()).collect();
    Ok(HopfDistance {
        a_star,
        deltas: deltas.to_vec(),
        slope: loglog_slope(deltas, &dist),
        a_hopf,
    })
}

/// Slow-time |Im λ| of the left equilibrium at a = a* + offset, against δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImScaling {
    pub a: f64,
    pub deltas: Vec<f64>,
    pub imag: Vec<f64>,
    pub slope: f64,
}

pub fn im_scaling(base: &DimensionlessParams, a_offset: f64, deltas: &[f64]) -> Result<ImScaling> {
    let a_star = fsn2_scan(base, (2.0, 3.5), DEFAULT_SCAN_POINTS)?
        .a_star
        .ok_or_else(|| Error::Numerical("no FSN-II crossing in [2, 3.5]".into()))?;
    im_scaling_at(base, a_star + a_offset, deltas)
}

pub fn im_scaling_at(base: &DimensionlessParams, a: f64, deltas: &[f64]) -> Result<ImScaling> {
    let mut imag = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let q = base.with_a(a).with_delta(d);
        let eq = left_equilibrium(&q, TimeScale::Slow)?
            .ok_or_else(|| Error::Numerical(format!("no equilibrium for delta = {d}")))?;
        let p = eq
            .complex_pair()
            .ok_or_else(|| Error::Numerical(format!("equilibrium has real spectrum for delta = {d}")))?;
        imag.push(p.im);
    }
    Ok(ImScaling {
        a,
        deltas: deltas.to_vec(),
        slope: loglog_slope(deltas, &imag),
        imag,
    })
}

/// Sum of principal minors, exposed for diagnostics.
pub fn jacobian_invariants(u: &DimlessState, q: &DimensionlessParams, ts: TimeScale) -> (f64, f64, f64) {
    let j = match ts {
        TimeScale::Slow => slow_jacobian(u, q),
        TimeScale::Fast => fast_jacobian(u, q),
    };
    (trace3(&j), minor_sum3(&j), det3(&j))
}
