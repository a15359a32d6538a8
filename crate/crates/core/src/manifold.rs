//! Critical manifold M = M0 ∪ Ms of the layer problem: residual, the Ms
//! chart, branch solving, normal stability, and the fold curves L±.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{scan_roots_with_breaks, sech2, tanh_sat, ScanGrid};
use crate::params::DimensionlessParams;
use crate::state::DimlessState;

/// |F_x| below this is reported as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Default bracketing grid for solving Ms for x.
pub const DEFAULT_X_GRID: ScanGrid = ScanGrid::new(-20.0, 5.0, 4001);

/// F(x, y, z) = x·(x + y + c − c·tanh(x + z)).
pub fn manifold_residual(u: &DimlessState, q: &DimensionlessParams) -> f64 {
    u.x * (u.x + u.y + q.c - q.c * tanh_sat(u.x + u.z))
}

/// y = h(x, z) = −x − c + c·tanh(x + z), the global chart of Ms.
pub fn ms_chart(x: f64, z: f64, q: &DimensionlessParams) -> f64 {
    -x - q.c + q.c * tanh_sat(x + z)
}

/// 1 − c·sech²(x + z); zero exactly on the fold curves.
pub fn fold_factor(x: f64, z: f64, q: &DimensionlessParams) -> f64 {
    1.0 - q.c * sech2(x + z)
}

/// All x with (x, y, z) ∈ Ms, in increasing order, using [`DEFAULT_X_GRID`].
pub fn solve_x_on_ms(y: f64, z: f64, q: &DimensionlessParams) -> Result<Vec<f64>> {
    solve_x_on_ms_with(y, z, q, DEFAULT_X_GRID)
}

pub fn solve_x_on_ms_with(y: f64, z: f64, q: &DimensionlessParams, grid: ScanGrid) -> Result<Vec<f64>> {
    let f = |x: f64| x + y + q.c - q.c * tanh_sat(x + z);
    // f' = 1 − c·sech²(x + z) vanishes only on the folds, so f is monotone
    // between them.
    let breaks: Vec<f64> = fold_curves(q)
        .map(|fc| vec![fc.x_on(FoldSide::Minus, z), fc.x_on(FoldSide::Plus, z)])
        .unwrap_or_default();
    let roots = scan_roots_with_breaks(f, grid, &breaks, 1e-13)?;
    if roots.is_empty() {
        return Err(Error::BracketFailure(format!(
            "no sign change of the Ms equation on x ∈ [{}, {}] for y = {y}, z = {z}",
            grid.lo, grid.hi
        )));
    }
    for &r in &roots {
        let res = f(r).abs();
        if res >= 1e-10 {
            return Err(Error::BracketFailure(format!("root {r} has residual {res:e}")));
        }
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    Degenerate,
}

impl Stability {
    fn from_fx(fx: f64) -> Self {
        if fx.abs() < DEGENERATE_TOL {
            Stability::Degenerate
        } else if fx < 0.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Stability::Attracting => "attracting",
            Stability::Repelling => "repelling",
            Stability::Degenerate => "degenerate",
        }
    }
}

/// F_x restricted to M0: y + c − c·tanh(z).
pub fn fx_on_m0(y: f64, z: f64, q: &DimensionlessParams) -> f64 {
    y + q.c - q.c * tanh_sat(z)
}

/// F_x restricted to Ms: x·(1 − c·sech²(x + z)).
pub fn fx_on_ms(x: f64, z: f64, q: &DimensionlessParams) -> f64 {
    x * fold_factor(x, z, q)
}

pub fn stability_m0(y: f64, z: f64, q: &DimensionlessParams) -> Stability {
    Stability::from_fx(fx_on_m0(y, z, q))
}

pub fn stability_ms(x: f64, z: f64, q: &DimensionlessParams) -> Stability {
    Stability::from_fx(fx_on_ms(x, z, q))
}

/// The fold curves L± = {x + z = ±eta} ∩ Ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldCurves {
    pub eta: f64,
}

/// Which fold line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoldSide {
    #[serde(rename = "L-")]
    Minus,
    #[serde(rename = "L+")]
    Plus,
}

impl FoldSide {
    pub fn sign(self) -> f64 {
        match self {
            FoldSide::Minus => -1.0,
            FoldSide::Plus => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FoldSide::Minus => "L-",
            FoldSide::Plus => "L+",
        }
    }
}

impl FoldCurves {
    /// x + z on the given fold line.
    pub fn offset(&self, side: FoldSide) -> f64 {
        side.sign() * self.eta
    }

    /// x on the fold line at height z.
    pub fn x_on(&self, side: FoldSide, z: f64) -> f64 {
        self.offset(side) - z
    }

    /// c = 1: the two lines coincide and Ms has a tangency, not a fold pair.
    pub fn is_degenerate(&self) -> bool {
        self.eta == 0.0
    }

    /// Sampled polyline (x, y, z) of one fold line for z in `[z_lo, z_hi]`.
    pub fn polyline(
        &self,
        side: FoldSide,
        z_lo: f64,
        z_hi: f64,
        n: usize,
        q: &DimensionlessParams,
    ) -> Vec<DimlessState> {
        (0..n)
            .map(|i| {
                let z = z_lo + (z_hi - z_lo) * i as f64 / (n.max(2) - 1) as f64;
                let x = self.x_on(side, z);
                DimlessState::new(x, ms_chart(x, z, q), z)
            })
            .collect()
    }
}

/// eta = arccosh(√c). `None` when c < 1 (no folds).
pub fn fold_curves(q: &DimensionlessParams) -> Option<FoldCurves> {
    if !(q.c >= 1.0) || !q.c.is_finite() {
        return None;
    }
    Some(FoldCurves {
        eta: q.c.sqrt().acosh(),
    })
}

/// Relative order of the fold crossings and x = 0 along a z = const line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootOrdering {
    /// x− < x+ < 0
    BothNegative,
    /// x− < 0 < x+
    Straddling,
    /// 0 < x− < x+
    BothPositive,
    /// coinciding roots or no folds
    Degenerate,
}

/// Roots X1 < X2 < X3 of x·(1 − c·sech²(x + z)) at fixed z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRoots {
    pub z: f64,
    pub roots: Vec<f64>,
    pub ordering: RootOrdering,
}

pub fn branch_roots(z: f64, q: &DimensionlessParams) -> BranchRoots {
    let Some(folds) = fold_curves(q) else {
        return BranchRoots {
            z,
            roots: vec![0.0],
            ordering: RootOrdering::Degenerate,
        };
    };
    let xm = folds.x_on(FoldSide::Minus, z);
    let xp = folds.x_on(FoldSide::Plus, z);
    let mut roots = vec![xm, 0.0, xp];
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    let ordering = if roots.len() < 3 {
        RootOrdering::Degenerate
    } else if xp < 0.0 {
        RootOrdering::BothNegative
    } else if xm > 0.0 {
        RootOrdering::BothPositive
    } else {
        RootOrdering::Straddling
    };
    BranchRoots { z, roots, ordering }
}

/// Stability label of Ms over a regular (x, z) raster, row-major in z.
pub fn ms_stability_grid(
    x_range: (f64, f64),
    z_range: (f64, f64),
    nx: usize,
    nz: usize,
    q: &DimensionlessParams,
) -> Vec<(f64, f64, Stability)> {
    raster(x_range, z_range, nx, nz, |x, z| stability_ms(x, z, q))
}

/// Stability label of M0 over a regular (y, z) raster, row-major in z.
pub fn m0_stability_grid(
    y_range: (f64, f64),
    z_range: (f64, f64),
    ny: usize,
    nz: usize,
    q: &DimensionlessParams,
) -> Vec<(f64, f64, Stability)> {
    raster(y_range, z_range, ny, nz, |y, z| stability_m0(y, z, q))
}

fn raster(
    r0: (f64, f64),
    r1: (f64, f64),
    n0: usize,
    n1: usize,
    f: impl Fn(f64, f64) -> Stability,
) -> Vec<(f64, f64, Stability)> {
    let at = |r: (f64, f64), n: usize, i: usize| {
        if n <= 1 {
            r.0
        } else {
            r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n0 * n1);
    for j in 0..n1 {
        let b = at(r1, n1, j);
        for i in 0..n0 {
            let a = at(r0, n0, i);
            out.push((a, b, f(a, b)));
        }
    }
    out
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
    fn residual_examples() {
        let q = fig4();
        assert_eq!(manifold_residual(&DimlessState::new(0.0, 3.0, -2.0), &q), 0.0);
        let (x, z) = (-2.5, 0.7);
        let on_ms = DimlessState::new(x, ms_chart(x, z, &q), z);
        assert!(manifold_residual(&on_ms, &q).abs() < 1e-14);
        // -1·(-1 + 3.75 - 3.75·tanh(-1)), 30-digit reference
        let r = manifold_residual(&DimlessState::new(-1.0, 0.0, 0.0), &q);
        assert!((r + 5.605_978_084_834_118).abs() < 1e-12);
    }

    #[test]
    fn chart_limits() {
        let q = fig4();
        assert!(ms_chart(0.0, 50.0, &q).abs() < 1e-15);
        assert_eq!(ms_chart(0.0, 0.0, &q), -q.c);
    }

    #[test]
    fn solve_recovers_saturated_root() {
        let q = fig4();
        let roots = solve_x_on_ms(0.0, 30.0, &q).unwrap();
        assert!(roots.iter().any(|r| r.abs() < 1e-9));
    }

    #[test]
    fn solve_matches_brute_force_sign_scan() {
        // 10⁶-point sign scan over [-20, 20] as an independent oracle.
        let q = fig4();
        let (y, z) = (-2.0, 0.0);
        let f = |x: f64| x + y + q.c - q.c * (x + z).tanh();
        let n = 1_000_000;
        let mut oracle = Vec::new();
        let mut xp = -20.0;
        let mut fp = f(xp);
        for i in 1..=n {
            let x = -20.0 + 40.0 * i as f64 / n as f64;
            let fx = f(x);
            if fp.signum() != fx.signum() {
                oracle.push(0.5 * (xp + x));
            }
            xp = x;
            fp = fx;
        }
        let roots = solve_x_on_ms(y, z, &q).unwrap();
        assert_eq!(roots.len(), oracle.len());
        for (r, o) in roots.iter().zip(&oracle) {
            assert!((r - o).abs() < 4e-5, "{r} vs {o}");
        }
    }

    #[test]
    fn stability_examples() {
        let q = fig4();
        assert_eq!(stability_m0(0.0, 0.0, &q), Stability::Repelling);
        for c in [0.5, 2.0, 3.75] {
            let mut qq = q;
            qq.c = c;
            assert_eq!(stability_m0(0.0, qq.k, &qq), Stability::Repelling);
        }
        assert_eq!(stability_ms(-5.0, 0.0, &q), Stability::Attracting);
        let eta = fold_curves(&q).unwrap().eta;
        assert_eq!(stability_ms(-eta, 0.0, &q), Stability::Degenerate);
        assert_eq!(
            stability_m0(q.c * (0.3f64).tanh() - q.c, 0.3, &q),
            Stability::Degenerate
        );
    }

    #[test]
    fn fold_curves_examples() {
        let q = fig4();
        let f = fold_curves(&q).unwrap();
        assert!((f.eta - 1.279_489_488_514_306).abs() < 1e-12);
        assert!((q.c * sech2(f.eta) - 1.0).abs() < 1e-12);
        let mut q1 = q;
        q1.c = 1.0;
        let f1 = fold_curves(&q1).unwrap();
        assert_eq!(f1.eta, 0.0);
        assert!(f1.is_degenerate());
        q1.c = 0.8;
        assert!(fold_curves(&q1).is_none());
    }

    #[test]
    fn branch_roots_at_zero_height() {
        let q = fig4();
        let b = branch_roots(0.0, &q);
        let eta = fold_curves(&q).unwrap().eta;
        assert_eq!(b.roots, vec![-eta, 0.0, eta]);
        assert_eq!(b.ordering, RootOrdering::Straddling);
        assert_eq!(branch_roots(3.0, &q).ordering, RootOrdering::BothNegative);
        assert_eq!(branch_roots(-3.0, &q).ordering, RootOrdering::BothPositive);
    }

    #[test]
    fn stability_sign_changes_only_at_roots() {
        let q = fig4();
        for &z in &[-2.0, 0.0, 0.9, 2.5] {
            let b = branch_roots(z, &q);
            let n = 20_000;
            let mut prev = fx_on_ms(-10.0, z, &q).signum();
            for i in 1..=n {
                let x = -10.0 + 20.0 * i as f64 / n as f64;
                let s = fx_on_ms(x, z, &q).signum();
                if s != prev && s != 0.0 {
                    let dx = 20.0 / n as f64;
                    assert!(b.roots.iter().any(|r| (r - x).abs() <= dx + 1e-8), "z={z} x={x}");
                }
                if s != 0.0 {
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn grids_have_requested_shape() {
        let q = fig4();
        let g = ms_stability_grid((-6.0, 1.0), (-1.0, 4.0), 8, 5, &q);
        assert_eq!(g.len(), 40);
        assert_eq!((g[0].0, g[0].1), (-6.0, -1.0));
        assert_eq!((g[39].0, g[39].1), (1.0, 4.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn chart_and_solver_agree(x in -8.0f64..3.0, z in -3.0f64..5.0) {
            let q = fig4();
            let y = ms_chart(x, z, &q);
            let roots = solve_x_on_ms(y, z, &q).unwrap();
            prop_assert!(roots.iter().any(|r| (r - x).abs() < 1e-9), "x={} roots={:?}", x, roots);
        }
    }
}
