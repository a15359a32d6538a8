//! Small numerical kernels shared by the analysis modules: saturated
//! hyperbolic functions, bracketing root finders, and closed-form
//! eigenvalues for 2×2 and 3×3 real matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Beyond this magnitude `tanh` is replaced by its saturated value.
pub const SATURATION: f64 = 40.0;

pub fn tanh_sat(u: f64) -> f64 {
    if u > SATURATION {
        1.0
    } else if u < -SATURATION {
        -1.0
    } else {
        u.tanh()
    }
}

/// `sech²(u)`, zero once `|u|` exceeds [`SATURATION`].
pub fn sech2(u: f64) -> f64 {
    if u.abs() > SATURATION {
        0.0
    } else {
        let c = u.cosh();
        1.0 / (c * c)
    }
}

/// Brent's method on a bracketing interval. `xtol` is the absolute
/// tolerance on the root location.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::BracketFailure(format!(
            "non-finite function value on [{lo}, {hi}]"
        )));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo}, {hi}] (f = {fa:e}, {fb:e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::BracketFailure(format!("non-finite value at {b}")));
        }
    }
    Err(Error::BracketFailure(format!(
        "Brent iteration did not converge on [{lo}, {hi}]"
    )))
}

/// Uniform sign-change scan used to bracket roots before polishing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl ScanGrid {
    pub const fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    fn node(&self, i: usize) -> f64 {
        let n = (self.points - 1) as f64;
        self.lo + (self.hi - self.lo) * (i as f64) / n
    }
}

/// All roots of `f` found by a sign scan over `grid`, polished to `xtol`.
/// Roots are returned in increasing order.
pub fn scan_roots<F: FnMut(f64) -> f64>(f: F, grid: ScanGrid, xtol: f64) -> Result<Vec<f64>> {
    scan_roots_with_breaks(f, grid, &[], xtol)
}

/// Like [`scan_roots`], with extra scan nodes (typically the critical points
/// of `f`, so that no pair of roots can hide inside one grid cell).
pub fn scan_roots_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    grid: ScanGrid,
    breaks: &[f64],
    xtol: f64,
) -> Result<Vec<f64>> {
    if grid.points < 2 || !(grid.hi > grid.lo) {
        return Err(Error::validation("scan grid needs at least two points and hi > lo"));
    }
    let mut nodes: Vec<f64> = (0..grid.points).map(|i| grid.node(i)).collect();
    nodes.extend(breaks.iter().copied().filter(|b| *b > grid.lo && *b < grid.hi));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut roots = Vec::new();
    let mut x_prev = nodes[0];
    let mut f_prev = f(x_prev);
    if f_prev == 0.0 {
        roots.push(x_prev);
    }
    for &x in &nodes[1..] {
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0 && f_prev.signum() != fx.signum() {
            roots.push(brent(&mut f, x_prev, x, xtol)?);
        }
        x_prev = x;
        f_prev = fx;
    }
    Ok(roots)
}

/// Real roots of `a x² + b x + c` using the cancellation-free form.
pub fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let mut r = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    r.sort_by(f64::total_cmp);
    r
}

/// Eigenvalues of a real 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eigen2 {
    /// Two real eigenvalues, ordered by increasing magnitude.
    Real(f64, f64),
    /// Complex pair `re ± i·im` with `im > 0`.
    Complex { re: f64, im: f64 },
}

impl Eigen2 {
    pub fn of(m: [[f64; 2]; 2]) -> Self {
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let half = 0.5 * tr;
        // Discriminant written as a sum of squares where possible to avoid
        // cancellation when the diagonal entries are close.
        let disc = 0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0];
        if disc >= 0.0 {
            let s = disc.sqrt();
            let big = half + s.copysign(half);
            let small = if big == 0.0 { 0.0 } else { det / big };
            if small.abs() <= big.abs() {
                Eigen2::Real(small, big)
            } else {
                Eigen2::Real(big, small)
            }
        } else {
            Eigen2::Complex {
                re: half,
                im: (-disc).sqrt(),
            }
        }
    }

    pub fn discriminant(m: [[f64; 2]; 2]) -> f64 {
        0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0]
    }

    pub fn values(&self) -> [Complex64; 2] {
        match *self {
            Eigen2::Real(a, b) => [Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
            Eigen2::Complex { re, im } => [Complex64::new(re, im), Complex64::new(re, -im)],
        }
    }
}

/// Unit eigenvector of a real 2×2 matrix for a real eigenvalue `lambda`.
pub fn eigenvector2(m: [[f64; 2]; 2], lambda: f64) -> [f64; 2] {
    // Rows of (M - λI) are orthogonal to the eigenvector; use the larger row.
    let r0 = [m[0][0] - lambda, m[0][1]];
    let r1 = [m[1][0], m[1][1] - lambda];
    let n0 = r0[0].hypot(r0[1]);
    let n1 = r1[0].hypot(r1[1]);
    let (r, n) = if n0 >= n1 { (r0, n0) } else { (r1, n1) };
    if n == 0.0 {
        return [1.0, 0.0];
    }
    [-r[1] / n, r[0] / n]
}

pub type Mat3 = [[f64; 3]; 3];

pub fn trace3(m: &Mat3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Sum of the principal 2×2 minors.
pub fn minor_sum3(m: &Mat3) -> f64 {
    (m[0][0] * m[1][1] - m[0][1] * m[1][0])
        + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
        + (m[1][1] * m[2][2] - m[1][2] * m[2][1])
}

/// `det(M − λI)` evaluated in complex arithmetic.
pub fn char_det3(m: &Mat3, lambda: Complex64) -> Complex64 {
    let e = |i: usize, j: usize| {
        let v = Complex64::new(m[i][j], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    };
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

/// Roots of the monic cubic `λ³ + b λ² + c λ + d`.
///
/// One real root comes from the trigonometric/Cardano closed form and is
/// Newton-polished; the remaining quadratic factor is solved exactly and each
/// of its roots gets one complex Newton step on the full cubic.
pub fn cubic_roots(b: f64, c: f64, d: f64) -> [Complex64; 3] {
    let p = |l: Complex64| ((l + b) * l + c) * l + d;
    let dp = |l: Complex64| (3.0 * l + 2.0 * b) * l + c;

    // Depressed cubic t³ + pt + q with λ = t − b/3.
    let shift = b / 3.0;
    let pp = c - b * b / 3.0;
    let qq = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (qq / 2.0).powi(2) + (pp / 3.0).powi(3);
    let t = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-qq / 2.0 + s.copysign(-qq)).cbrt();
        if u == 0.0 {
            0.0
        } else {
            u - pp / (3.0 * u)
        }
    } else if pp == 0.0 {
        0.0
    } else {
        let r = (-pp / 3.0).sqrt();
        let arg = (3.0 * qq / (2.0 * pp) / r).clamp(-1.0, 1.0);
        2.0 * r * (arg.acos() / 3.0).cos()
    };
    let mut r0 = t - shift;
    for _ in 0..3 {
        let f = ((r0 + b) * r0 + c) * r0 + d;
        let df = (3.0 * r0 + 2.0 * b) * r0 + c;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        r0 -= step;
        if step.abs() <= 1e-16 * r0.abs().max(1.0) {
            break;
        }
    }
    // Deflate: λ² + (b + r0)λ + (c + r0(b + r0)).
    let b1 = b + r0;
    let c1 = c + r0 * b1;
    let disc2 = b1 * b1 - 4.0 * c1;
    let (r1, r2) = if disc2 >= 0.0 {
        let q = -0.5 * (b1 + disc2.sqrt().copysign(b1));
        let a1 = Complex64::new(q, 0.0);
        let a2 = if q == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(c1 / q, 0.0)
        };
        (a1, a2)
    } else {
        let im = 0.5 * (-disc2).sqrt();
        (Complex64::new(-0.5 * b1, im), Complex64::new(-0.5 * b1, -im))
    };
    let polish = |l: Complex64| {
        let d = dp(l);
        if d.norm() == 0.0 {
            l
        } else {
            let next = l - p(l) / d;
            if p(next).norm() < p(l).norm() {
                next
            } else {
                l
            }
        }
    };
    let mut r1 = polish(r1);
    let mut r2 = polish(r2);
    if disc2 < 0.0 {
        // keep the pair exactly conjugate
        let re = 0.5 * (r1.re + r2.re);
        let im = 0.5 * (r1.im.abs() + r2.im.abs());
        r1 = Complex64::new(re, im);
        r2 = Complex64::new(re, -im);
    }
    [Complex64::new(r0, 0.0), r1, r2]
}

/// Eigenvalues of a real 3×3 matrix from its characteristic cubic.
pub fn eigenvalues3(m: &Mat3) -> [Complex64; 3] {
    cubic_roots(-trace3(m), minor_sum3(m), -det3(m))
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares slope in log-log coordinates.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    ls_slope(&lx, &ly)
}
