//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4), PI step
//! control) with cubic Hermite dense output and threshold-crossing events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_span: (f64, f64),
    /// Samples earlier than `t_span.0 + transient_discard` are not stored.
    pub transient_discard: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            t_span: (t_start, t_end),
            transient_discard: 0.0,
            max_steps: 50_000_000,
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn transient(mut self, discard: f64) -> Self {
        self.transient_discard = discard;
        self
    }

    /// Discards the given fraction of the span.
    pub fn transient_fraction(mut self, frac: f64) -> Self {
        self.transient_discard = frac * (self.t_span.1 - self.t_span.0);
        self
    }

    /// Caps the step so small-amplitude oscillations stay resolved when
    /// δ ≤ 0.005: δ/2 in slow time, which is 1/2 in fast time.
    pub fn sao_step_cap(mut self, delta: f64, slow_time: bool) -> Self {
        if delta <= 0.005 {
            let cap = if slow_time { 0.5 * delta } else { 0.5 };
            self.max_step = self.max_step.min(cap);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::validation(format!("{name} must lie in (0, 1e-2], got {tol}")));
            }
        }
        let (a, b) = self.t_span;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::validation(format!(
                "t_span end must exceed start, got ({a}, {b})"
            )));
        }
        if !(self.transient_discard >= 0.0 && self.transient_discard < b - a) {
            return Err(Error::validation(format!(
                "transient_discard must lie in [0, {}), got {}",
                b - a,
                self.transient_discard
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::validation("max_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rising,
    Falling,
    Both,
}

impl Direction {
    fn matches(self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Both => rising || falling,
        }
    }
}

pub type EventFn<'a, const N: usize> = Box<dyn Fn(&[f64; N]) -> f64 + 'a>;

/// A scalar function of the state whose zero crossings are located.
pub struct Event<'a, const N: usize> {
    pub function: EventFn<'a, N>,
    pub direction: Direction,
    pub label: String,
    /// Stop integrating at the first occurrence.
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(label: impl Into<String>, direction: Direction, f: impl Fn(&[f64; N]) -> f64 + 'a) -> Self {
        Self {
            function: Box::new(f),
            direction,
            label: label.into(),
            terminal: false,
        }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    /// Section `u[index] = value`.
    pub fn threshold(label: impl Into<String>, index: usize, value: f64, direction: Direction) -> Self {
        Self::new(label, direction, move |u: &[f64; N]| u[index] - value)
    }

    fn eval(&self, u: &[f64; N]) -> f64 {
        (self.function)(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord<const N: usize> {
    pub time: f64,
    pub label: String,
    #[serde(with = "serde_arrays")]
    pub state: [f64; N],
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom(format!("expected {N} components")))
    }
}

/// Densely sampled solution. `derivs` holds the right-hand side at each
/// sample so the cubic Hermite interpolant can be evaluated anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub derivs: Vec<[f64; N]>,
    pub events: Vec<EventRecord<N>>,
    /// Label of the terminal event that stopped the run, if any.
    pub stopped_by: Option<String>,
}

fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let th = (t - t0) / h;
    let th2 = th * th;
    let th3 = th2 * th;
    let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    let h10 = th3 - 2.0 * th2 + th;
    let h01 = -2.0 * th3 + 3.0 * th2;
    let h11 = th3 - th2;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

impl<const N: usize> Trajectory<N> {
    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            derivs: Vec::new(),
            events: Vec::new(),
            stopped_by: None,
        }
    }

    /// Builds a trajectory from samples only. Derivatives are estimated by
    /// finite differences so interpolation stays available.
    pub fn from_samples(times: Vec<f64>, states: Vec<[f64; N]>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::validation("times and states differ in length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("times must be strictly increasing"));
        }
        let n = times.len();
        let mut derivs = vec![[0.0; N]; n];
        if n >= 2 {
            for k in 0..n {
                let (i, j) = if k == 0 {
                    (0, 1)
                } else if k == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (k - 1, k + 1)
                };
                for c in 0..N {
                    derivs[k][c] = (states[j][c] - states[i][c]) / (times[j] - times[i]);
                }
            }
        }
        Ok(Self {
            times,
            states,
            derivs,
            events: Vec::new(),
            stopped_by: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, [f64; N])> {
        self.times.last().map(|&t| (t, *self.states.last().unwrap()))
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    /// Dense-output state at time `t` (None outside the sampled range).
    pub fn interpolate(&self, t: f64) -> Option<[f64; N]> {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        if n == 1 {
            return Some(self.states[0]);
        }
        let k = match self.times.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(k) => return Some(self.states[k]),
            Err(k) => k,
        };
        let i = k - 1;
        Some(hermite(
            self.times[i],
            &self.states[i],
            &self.derivs[i],
            self.times[i + 1],
            &self.states[i + 1],
            &self.derivs[i + 1],
            t,
        ))
    }

    /// Interpolated states on a uniform grid of spacing `dt`.
    pub fn resample(&self, dt: f64) -> (Vec<f64>, Vec<[f64; N]>) {
        let mut ts = Vec::new();
        let mut ys = Vec::new();
        if self.is_empty() || !(dt > 0.0) {
            return (ts, ys);
        }
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        let count = ((t1 - t0) / dt).floor() as usize;
        for i in 0..=count {
            let t = t0 + dt * i as f64;
            if let Some(y) = self.interpolate(t) {
                ts.push(t);
                ys.push(y);
            }
        }
        (ts, ys)
    }

    /// Samples with `t >= t_from`, starting with the interpolated state at
    /// `t_from`.
    pub fn after(&self, t_from: f64) -> Self {
        let mut out = Self::empty();
        let Some(start) = self.interpolate(t_from) else {
            return if self.times.first().is_some_and(|&t| t >= t_from) {
                self.clone()
            } else {
                out
            };
        };
        let k = self.times.partition_point(|&t| t <= t_from);
        let d0 = if k > 0 && self.times[k - 1] == t_from {
            self.derivs[k - 1]
        } else {
            self.interp_deriv(t_from, k)
        };
        out.times.push(t_from);
        out.states.push(start);
        out.derivs.push(d0);
        out.times.extend_from_slice(&self.times[k..]);
        out.states.extend_from_slice(&self.states[k..]);
        out.derivs.extend_from_slice(&self.derivs[k..]);
        out.events = self.events.iter().filter(|e| e.time >= t_from).cloned().collect();
        out.stopped_by = self.stopped_by.clone();
        out
    }

    fn interp_deriv(&self, t: f64, k: usize) -> [f64; N] {
        if k == 0 || k >= self.times.len() {
            return self.derivs[k.min(self.derivs.len() - 1)];
        }
        let i = k - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let th = (t - t0) / h;
        let mut out = [0.0; N];
        for c in 0..N {
            let (y0, y1, f0, f1) = (
                self.states[i][c],
                self.states[i + 1][c],
                self.derivs[i][c],
                self.derivs[i + 1][c],
            );
            let d00 = (6.0 * th * th - 6.0 * th) / h;
            let d10 = 3.0 * th * th - 4.0 * th + 1.0;
            let d01 = (-6.0 * th * th + 6.0 * th) / h;
            let d11 = 3.0 * th * th - 2.0 * th;
            out[c] = d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1;
        }
        out
    }

    pub fn events_labeled<'s>(&'s self, label: &'s str) -> impl Iterator<Item = &'s EventRecord<N>> + 's {
        self.events.iter().filter(move |e| e.label == label)
    }
}

/// Interpolated states where `section` crosses zero in its direction, in
/// time order.
pub fn poincare_samples<const N: usize>(traj: &Trajectory<N>, section: &Event<'_, N>) -> Vec<[f64; N]> {
    crossings(traj, section).into_iter().map(|(_, s)| s).collect()
}

/// Crossing times and states of `section` along the dense output.
pub fn crossings<const N: usize>(traj: &Trajectory<N>, section: &Event<'_, N>) -> Vec<(f64, [f64; N])> {
    let mut out = Vec::new();
    if traj.len() < 2 {
        return out;
    }
    let mut g_prev = section.eval(&traj.states[0]);
    for i in 1..traj.len() {
        let g = section.eval(&traj.states[i]);
        if section.direction.matches(g_prev, g) {
            let (t0, t1) = (traj.times[i - 1], traj.times[i]);
            let (y0, y1, f0, f1) = (
                &traj.states[i - 1],
                &traj.states[i],
                &traj.derivs[i - 1],
                &traj.derivs[i],
            );
            if let Some(hit) = locate(section, t0, y0, f0, t1, y1, f1) {
                out.push(hit);
            }
        }
        g_prev = g;
    }
    out
}

fn locate<const N: usize>(
    ev: &Event<'_, N>,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
) -> Option<(f64, [f64; N])> {
    let g = |t: f64| ev.eval(&hermite(t0, y0, f0, t1, y1, f1, t));
    let g1 = g(t1);
    if g1 == 0.0 {
        return Some((t1, *y1));
    }
    let xtol = 4.0 * f64::EPSILON * t1.abs().max(1.0);
    let t = brent(g, t0, t1, xtol).ok()?;
    Some((t, hermite(t0, y0, f0, t1, y1, f1, t)))
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants (Hairer–Wanner, DOPRI5).
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates `u' = rhs(t, u)` over `cfg.t_span`.
pub fn integrate<const N: usize, F>(
    rhs: F,
    u0: [f64; N],
    cfg: &IntegratorConfig,
    events: &[Event<'_, N>],
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    cfg.validate()?;
    if !finite(&u0) {
        return Err(Error::validation(format!("initial state is not finite: {u0:?}")));
    }
    let (t_start, t_end) = cfg.t_span;
    let t_keep = t_start + cfg.transient_discard;
    let norm = |e: &[f64; N], y: &[f64; N], yn: &[f64; N]| -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(yn[i].abs());
            s += (e[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    };

    let mut t = t_start;
    let mut y = u0;
    let mut f = rhs(t, &y);
    if !finite(&f) {
        return Err(Error::NonFinite { t, state: y.to_vec() });
    }

    let mut traj = Trajectory::empty();
    let record = |traj: &mut Trajectory<N>, t: f64, y: [f64; N], f: [f64; N]| {
        traj.times.push(t);
        traj.states.push(y);
        traj.derivs.push(f);
    };
    if t_keep <= t_start {
        record(&mut traj, t, y, f);
    }

    // Initial step (Hairer–Wanner heuristic).
    let mut h = {
        let d0 = norm(&y, &y, &y).max(1e-300);
        let d1 = norm(&f, &y, &y).max(1e-300);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(&y, h0, &[(1.0, &f)]);
        let f1 = rhs(t + h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - f[i];
        }
        let d2 = norm(&diff, &y, &y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(cfg.max_step).min(t_end - t_start)
    };

    let mut g_prev: Vec<f64> = events.iter().map(|e| e.eval(&y)).collect();
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::Numerical(format!("exceeded {} steps at t = {t}", cfg.max_steps)));
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepUnderflow {
                t,
                h,
                state: y.to_vec(),
            });
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };

        let k1 = f;
        let k2 = rhs(t + C2 * h_try, &axpy(&y, h_try, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h_try, &axpy(&y, h_try, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h_try, &axpy(&y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * h_try,
            &axpy(&y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h_try,
            &axpy(&y, h_try, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h_try, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t_end } else { t + h_try };
        let k7 = rhs(t_new, &y_new);
        if !(finite(&k2) && finite(&k3) && finite(&k4) && finite(&k5) && finite(&k6) && finite(&k7) && finite(&y_new)) {
            // Overflow inside a trial step: shrink, and give up only when the
            // step can no longer shrink.
            h = 0.25 * h_try;
            rejected = true;
            if h < h_min {
                return Err(Error::NonFinite { t, state: y.to_vec() });
            }
            continue;
        }
        let mut e = [0.0; N];
        for i in 0..N {
            e[i] = h_try * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = norm(&e, &y, &y_new);

        if err <= 1.0 {
            // Events on the accepted step.
            let mut hits: Vec<(f64, usize, [f64; N])> = Vec::new();
            let mut g_new = Vec::with_capacity(events.len());
            for (idx, ev) in events.iter().enumerate() {
                let g = ev.eval(&y_new);
                if ev.direction.matches(g_prev[idx], g) {
                    if let Some((te, ye)) = locate(ev, t, &y, &k1, t_new, &y_new, &k7) {
                        hits.push((te, idx, ye));
                    }
                }
                g_new.push(g);
            }
            hits.sort_by(|a, b| a.0.total_cmp(&b.0));
            let stop = hits.iter().position(|(_, idx, _)| events[*idx].terminal);
            for (te, idx, ye) in hits.iter().take(stop.map_or(hits.len(), |s| s + 1)) {
                if *te >= t_keep {
                    traj.events.push(EventRecord {
                        time: *te,
                        label: events[*idx].label.clone(),
                        state: *ye,
                    });
                }
            }
            if let Some(s) = stop {
                let (te, idx, ye) = hits[s];
                let fe = rhs(te, &ye);
                if te > t && te >= t_keep {
                    if traj.is_empty() && t_keep > t_start {
                        let yk = hermite(t, &y, &k1, t_new, &y_new, &k7, t_keep.max(t));
                        record(&mut traj, t_keep.max(t), yk, rhs(t_keep, &yk));
                    }
                    if traj.times.last().is_none_or(|&tl| te > tl) {
                        record(&mut traj, te, ye, fe);
                    }
                }
                traj.stopped_by = Some(events[idx].label.clone());
                return Ok(traj);
            }

            if t_new > t_keep {
                if traj.is_empty() {
                    let yk = hermite(t, &y, &k1, t_new, &y_new, &k7, t_keep);
                    if t_keep < t_new {
                        record(&mut traj, t_keep, yk, rhs(t_keep, &yk));
                    }
                }
                record(&mut traj, t_new, y_new, k7);
            }

            g_prev = g_new;
            t = t_new;
            y = y_new;
            f = k7;

            let mut fac = SAFETY * err.max(1e-10).powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected {
                fac = fac.min(1.0);
            }
            err_old = err.max(1e-4);
            h = (h_try * fac).min(cfg.max_step);
            rejected = false;
        } else {
            let fac = (SAFETY * err.powf(-ALPHA)).max(FAC_MIN);
            h = h_try * fac;
            rejected = true;
        }
    }
    Ok(traj)
}
