//! Mixed-mode oscillation analysis: peak extraction, LAO/SAO signatures,
//! SAO amplitude profiles and burst statistics.

use serde::{Deserialize, Serialize};

use crate::integrate::Trajectory;
use crate::params::Scales;

pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    /// State component analysed (0 = x).
    pub component: usize,
    /// Peaks with smaller topographic prominence are ripple.
    pub prominence_floor: f64,
    /// Peaks above this value are large oscillations (El Niño events).
    pub lao_threshold: f64,
    /// Troughs below this value are strong La Niña states.
    pub trough_threshold: f64,
    /// Relative tolerance when comparing successive SAO amplitudes.
    pub amplitude_rel_tol: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            component: 0,
            prominence_floor: 1e-4,
            lao_threshold: -2.0,
            trough_threshold: -4.0,
            amplitude_rel_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeakClass {
    #[serde(rename = "LAO")]
    Lao,
    #[serde(rename = "SAO")]
    Sao,
}

impl PeakClass {
    pub fn label(self) -> &'static str {
        match self {
            PeakClass::Lao => "LAO",
            PeakClass::Sao => "SAO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
    pub prominence: f64,
    pub class: PeakClass,
    /// Minimum between this peak and the next one (or the series end).
    pub next_trough: f64,
}

impl Peak {
    /// Peak height above the following trough.
    pub fn amplitude(&self) -> f64 {
        self.value - self.next_trough
    }
}

/// Vertex of the parabola through three points, if it is a maximum
/// lying inside the outer two.
fn parabolic_vertex(t: [f64; 3], v: [f64; 3]) -> Option<(f64, f64)> {
    let (d1, d2) = (t[1] - t[0], t[2] - t[1]);
    let s1 = (v[1] - v[0]) / d1;
    let s2 = (v[2] - v[1]) / d2;
    let curv = (s2 - s1) / (t[2] - t[0]);
    if !(curv < 0.0) {
        return None;
    }
    // v(t) = v1 + b (t − t1) + curv (t − t1)², b from the two secants
    let b = s1 + curv * d1;
    let tv = t[1] - b / (2.0 * curv);
    if !(tv > t[0] && tv < t[2]) {
        return None;
    }
    let vv = v[1] + b * (tv - t[1]) + curv * (tv - t[1]).powi(2);
    Some((tv, vv.max(v[1])))
}

/// Local maxima of a sampled series with their prominence.
pub fn extract_peaks_series(times: &[f64], values: &[f64], cfg: &PeakConfig) -> Vec<Peak> {
    let n = values.len().min(times.len());
    if n < 3 {
        return Vec::new();
    }
    let mut idx = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if values[i] > values[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                idx.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let mut peaks = Vec::with_capacity(idx.len());
    for &p in &idx {
        let h = values[p];
        let mut left_min = h;
        let mut k = p;
        while k > 0 {
            k -= 1;
            if values[k] > h {
                break;
            }
            left_min = left_min.min(values[k]);
        }
        let mut right_min = h;
        let mut k = p;
        while k + 1 < n {
            k += 1;
            if values[k] > h {
                break;
            }
            right_min = right_min.min(values[k]);
        }
        let prominence = h - left_min.max(right_min);
        if prominence < cfg.prominence_floor {
            continue;
        }
        let (time, value) = if p > 0 && p + 1 < n && values[p - 1] < h && values[p + 1] < h {
            parabolic_vertex(
                [times[p - 1], times[p], times[p + 1]],
                [values[p - 1], h, values[p + 1]],
            )
            .unwrap_or((times[p], h))
        } else {
            (times[p], h)
        };
        peaks.push((
            p,
            Peak {
                time,
                value,
                prominence,
                class: if value > cfg.lao_threshold {
                    PeakClass::Lao
                } else {
                    PeakClass::Sao
                },
                next_trough: f64::NAN,
            },
        ));
    }
    for k in 0..peaks.len() {
        let from = peaks[k].0;
        let to = peaks.get(k + 1).map_or(n, |p| p.0);
        peaks[k].1.next_trough = values[from..to].iter().copied().fold(f64::INFINITY, f64::min);
    }
    peaks.into_iter().map(|(_, p)| p).collect()
}

pub fn extract_peaks<const N: usize>(traj: &Trajectory<N>, cfg: &PeakConfig) -> Vec<Peak> {
    extract_peaks_series(&traj.times, &traj.column(cfg.component), cfg)
}

/// Run-length encoding L1^s1 L2^s2 … of peak classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmoSignature {
    pub pairs: Vec<(u32, u32)>,
    /// No alternation: only LAOs, only SAOs, or no peaks at all.
    pub degenerate: bool,
}

impl MmoSignature {
    /// Encodes a class sequence. SAOs before the first LAO are dropped since
    /// their run is cut by the analysis window.
    pub fn from_classes(classes: &[PeakClass]) -> Self {
        let Some(first) = classes.iter().position(|c| *c == PeakClass::Lao) else {
            return Self {
                pairs: vec![(0, classes.len() as u32)],
                degenerate: true,
            };
        };
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut prev = PeakClass::Sao;
        for &c in &classes[first..] {
            match (prev, c) {
                (PeakClass::Sao, PeakClass::Lao) => pairs.push((1, 0)),
                (PeakClass::Lao, PeakClass::Lao) => pairs.last_mut().unwrap().0 += 1,
                (_, PeakClass::Sao) => pairs.last_mut().unwrap().1 += 1,
            }
            prev = c;
        }
        let degenerate = pairs.iter().all(|p| p.1 == 0);
        Self { pairs, degenerate }
    }

    pub fn from_peaks(peaks: &[Peak]) -> Self {
        Self::from_classes(&peaks.iter().map(|p| p.class).collect::<Vec<_>>())
    }

    /// Rendering with `^` exponents, pairs separated by spaces.
    pub fn render(&self) -> String {
        render_pairs(&self.pairs)
    }

    /// Shortest block whose repetition reproduces every complete pair. The
    /// last pair is ignored because the window may cut its SAO run.
    pub fn repeating_unit(&self) -> Vec<(u32, u32)> {
        let body = if self.pairs.len() > 1 {
            &self.pairs[..self.pairs.len() - 1]
        } else {
            &self.pairs[..]
        };
        for p in 1..=body.len() {
            if (p..body.len()).all(|i| body[i] == body[i - p]) {
                return body[..p].to_vec();
            }
        }
        body.to_vec()
    }

    pub fn lao_count(&self) -> u32 {
        self.pairs.iter().map(|p| p.0).sum()
    }

    pub fn sao_count(&self) -> u32 {
        self.pairs.iter().map(|p| p.1).sum()
    }
}

pub fn render_pairs(pairs: &[(u32, u32)]) -> String {
    pairs
        .iter()
        .map(|(l, s)| format!("{l}^{s}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl std::fmt::Display for MmoSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn signature<const N: usize>(traj: &Trajectory<N>, cfg: &PeakConfig) -> MmoSignature {
    MmoSignature::from_peaks(&extract_peaks(traj, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaoShape {
    MonotoneIncreasing,
    NonMonotone,
    Other,
}

impl SaoShape {
    pub fn label(self) -> &'static str {
        match self {
            SaoShape::MonotoneIncreasing => "monotone-increasing",
            SaoShape::NonMonotone => "non-monotone",
            SaoShape::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaoProfile {
    pub amplitudes: Vec<f64>,
    pub shape: SaoShape,
    pub diagnostic: Option<String>,
}

/// Shape of a sequence of SAO amplitudes: increasing throughout, or
/// decreasing then increasing. Differences within `rel_tol` of the largest
/// amplitude count as flat.
pub fn classify_amplitudes(amps: &[f64], rel_tol: f64) -> SaoProfile {
    if amps.len() < 3 {
        return SaoProfile {
            amplitudes: amps.to_vec(),
            shape: SaoShape::Other,
            diagnostic: Some(format!("{} SAO peaks, at least 3 needed", amps.len())),
        };
    }
    let scale = amps.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let signs: Vec<i8> = amps
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d.abs() <= rel_tol * scale {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .filter(|s| *s != 0)
        .collect();
    let first_up = signs.iter().position(|s| *s > 0);
    let shape = match first_up {
        Some(0) if signs.iter().all(|s| *s > 0) => SaoShape::MonotoneIncreasing,
        Some(i) if i > 0 && signs[i..].iter().all(|s| *s > 0) => SaoShape::NonMonotone,
        _ => SaoShape::Other,
    };
    SaoProfile {
        amplitudes: amps.to_vec(),
        shape,
        diagnostic: None,
    }
}

/// Profile of the SAO peaks with time in `[window.0, window.1]`.
pub fn sao_profile<const N: usize>(traj: &Trajectory<N>, window: (f64, f64), cfg: &PeakConfig) -> SaoProfile {
    let amps: Vec<f64> = extract_peaks(traj, cfg)
        .iter()
        .filter(|p| p.class == PeakClass::Sao && p.time >= window.0 && p.time <= window.1)
        .map(Peak::amplitude)
        .collect();
    classify_amplitudes(&amps, cfg.amplitude_rel_tol)
}

/// Profiles of every complete SAO run between two LAO bursts.
pub fn sao_runs(peaks: &[Peak], cfg: &PeakConfig) -> Vec<SaoProfile> {
    let mut out = Vec::new();
    let mut run: Option<Vec<f64>> = None;
    for p in peaks {
        match p.class {
            PeakClass::Lao => {
                if let Some(r) = run.take() {
                    if !r.is_empty() {
                        out.push(classify_amplitudes(&r, cfg.amplitude_rel_tol));
                    }
                }
                run = Some(Vec::new());
            }
            PeakClass::Sao => {
                if let Some(r) = run.as_mut() {
                    r.push(p.amplitude());
                }
            }
        }
    }
    out
}

/// Largest SAO amplitude (peak above the following trough).
pub fn max_sao_amplitude(peaks: &[Peak]) -> Option<f64> {
    peaks
        .iter()
        .filter(|p| p.class == PeakClass::Sao)
        .map(Peak::amplitude)
        .filter(|a| a.is_finite())
        .reduce(f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstStats {
    /// Rising crossings of the LAO threshold that open a burst.
    pub burst_starts: Vec<f64>,
    pub intervals: Vec<f64>,
    pub mean_interval: Option<f64>,
    /// Intervals between successive LAO peaks.
    pub lao_intervals: Vec<f64>,
    pub mean_interval_days: Option<f64>,
    pub mean_interval_years: Option<f64>,
}

/// A burst is a maximal run of consecutive LAO peaks; it starts at the rising
/// crossing of the LAO threshold before its first peak. Times are fast time;
/// with `scales` the mean is also converted to days.
pub fn burst_stats<const N: usize>(traj: &Trajectory<N>, scales: Option<&Scales>, cfg: &PeakConfig) -> BurstStats {
    burst_stats_with_unit(traj, scales.map(|s| s.time0), cfg)
}

/// As [`burst_stats`], with an explicit number of days per unit of the
/// trajectory's time.
pub fn burst_stats_with_unit<const N: usize>(
    traj: &Trajectory<N>,
    days_per_unit: Option<f64>,
    cfg: &PeakConfig,
) -> BurstStats {
    let xs = traj.column(cfg.component);
    let peaks = extract_peaks_series(&traj.times, &xs, cfg);
    let thr = cfg.lao_threshold;
    let rising: Vec<f64> = traj
        .times
        .windows(2)
        .zip(xs.windows(2))
        .filter(|(_, v)| v[0] < thr && v[1] >= thr)
        .map(|(t, v)| t[0] + (thr - v[0]) / (v[1] - v[0]) * (t[1] - t[0]))
        .collect();
    let mut burst_starts = Vec::new();
    let mut prev = PeakClass::Sao;
    for p in &peaks {
        if p.class == PeakClass::Lao && prev == PeakClass::Sao {
            if let Some(&t) = rising.iter().rev().find(|t| **t <= p.time) {
                if burst_starts.last() != Some(&t) {
                    burst_starts.push(t);
                }
            }
        }
        prev = p.class;
    }
    let intervals: Vec<f64> = burst_starts.windows(2).map(|w| w[1] - w[0]).collect();
    let lao_times: Vec<f64> = peaks
        .iter()
        .filter(|p| p.class == PeakClass::Lao)
        .map(|p| p.time)
        .collect();
    let lao_intervals = lao_times.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_interval = (!intervals.is_empty()).then(|| intervals.iter().sum::<f64>() / intervals.len() as f64);
    let mean_interval_days = mean_interval.zip(days_per_unit).map(|(m, d)| m * d);
    BurstStats {
        burst_starts,
        intervals,
        mean_interval,
        lao_intervals,
        mean_interval_years: mean_interval_days.map(|d| d / DAYS_PER_YEAR),
        mean_interval_days,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lao: f64,
    pub trough: f64,
    pub prominence: f64,
}

/// JSON-ready summary of one analysed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmoSummary {
    pub signature: String,
    pub pairs: Vec<(u32, u32)>,
    pub repeating_unit: String,
    pub degenerate: bool,
    pub lao_count: u32,
    pub sao_count: u32,
    pub sao_shapes: Vec<SaoShape>,
    pub max_sao_amplitude: Option<f64>,
    pub min_trough: Option<f64>,
    pub burst_period_dimless: Option<f64>,
    pub burst_period_days: Option<f64>,
    pub thresholds: Thresholds,
}

pub fn summarize<const N: usize>(traj: &Trajectory<N>, days_per_unit: Option<f64>, cfg: &PeakConfig) -> MmoSummary {
    let peaks = extract_peaks(traj, cfg);
    let sig = MmoSignature::from_peaks(&peaks);
    let bursts = burst_stats_with_unit(traj, days_per_unit, cfg);
    let col = traj.column(cfg.component);
    MmoSummary {
        signature: sig.render(),
        repeating_unit: render_pairs(&sig.repeating_unit()),
        degenerate: sig.degenerate,
        lao_count: sig.lao_count(),
        sao_count: sig.sao_count(),
        pairs: sig.pairs,
        sao_shapes: sao_runs(&peaks, cfg).iter().map(|p| p.shape).collect(),
        max_sao_amplitude: max_sao_amplitude(&peaks),
        min_trough: col.iter().copied().reduce(f64::min),
        burst_period_dimless: bursts.mean_interval,
        burst_period_days: bursts.mean_interval_days,
        thresholds: Thresholds {
            lao: cfg.lao_threshold,
            trough: cfg.trough_threshold,
            prominence: cfg.prominence_floor,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PeakClass::{Lao as L, Sao as S};

    fn series(f: impl Fn(f64) -> f64, t1: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| t1 * i as f64 / (n - 1) as f64).collect();
        let v = t.iter().map(|&t| f(t)).collect();
        (t, v)
    }

    #[test]
    fn constant_series_has_no_peaks() {
        let (t, v) = series(|_| -3.0, 10.0, 100);
        assert!(extract_peaks_series(&t, &v, &PeakConfig::default()).is_empty());
    }

    #[test]
    fn two_sinusoid_extrema() {
        // sin t + 0.5 sin 2t has maxima where cos t + cos 2t = 0, i.e. t = π/3 + 2πn
        let dt = 0.01;
        let (t, v) = series(|t| t.sin() + 0.5 * (2.0 * t).sin(), 30.0, 3001);
        let peaks = extract_peaks_series(&t, &v, &PeakConfig::default());
        assert_eq!(peaks.len(), 5);
        for (n, p) in peaks.iter().enumerate() {
            let want = std::f64::consts::FRAC_PI_3 + 2.0 * std::f64::consts::PI * n as f64;
            assert!((p.time - want).abs() < dt, "{} vs {want}", p.time);
            assert!((p.value - 0.75 * 3f64.sqrt()).abs() < 1e-4);
        }
    }

    #[test]
    fn ripple_below_floor_is_ignored() {
        let (t, v) = series(|t| -3.0 + 1e-6 * (50.0 * t).sin(), 10.0, 5001);
        assert!(extract_peaks_series(&t, &v, &PeakConfig::default()).is_empty());
    }

    #[test]
    fn classes_follow_threshold() {
        let (t, v) = series(|t| -3.0 + 1.5 * t.sin(), 20.0, 2001);
        let peaks = extract_peaks_series(&t, &v, &PeakConfig::default());
        assert!(peaks.iter().all(|p| p.class == L));
        let (t, v) = series(|t| -3.0 + 0.5 * t.sin(), 20.0, 2001);
        let peaks = extract_peaks_series(&t, &v, &PeakConfig::default());
        assert!(peaks.iter().all(|p| p.class == S));
    }

    #[test]
    fn run_length_encoding() {
        let s = MmoSignature::from_classes(&[L, S, S, L, S, S]);
        assert_eq!(s.render(), "1^2 1^2");
        assert!(!s.degenerate);
        let s = MmoSignature::from_classes(&[S, S, L, L, S, L, S, S, S]);
        assert_eq!(s.pairs, vec![(2, 1), (1, 3)]);
    }

    #[test]
    fn degenerate_signatures() {
        assert!(MmoSignature::from_classes(&[S, S, S]).degenerate);
        assert_eq!(MmoSignature::from_classes(&[S, S, S]).pairs, vec![(0, 3)]);
        assert!(MmoSignature::from_classes(&[L, L]).degenerate);
        assert!(MmoSignature::from_classes(&[]).degenerate);
    }

    #[test]
    fn repeating_unit() {
        let s = MmoSignature::from_classes(&[L, S, S, L, S, L, S, S, L, S, L, S, S, L]);
        assert_eq!(render_pairs(&s.repeating_unit()), "1^2 1^1");
        let s = MmoSignature::from_classes(&[L, S, S, L, S, S, L, S]);
        assert_eq!(render_pairs(&s.repeating_unit()), "1^2");
    }

    #[test]
    fn shift_by_whole_periods_keeps_unit() {
        let period = [L, S, S, S, L, S];
        let long: Vec<_> = period.iter().cycle().take(period.len() * 6).copied().collect();
        let a = MmoSignature::from_classes(&long);
        let b = MmoSignature::from_classes(&long[period.len() * 2..]);
        assert_eq!(a.repeating_unit(), b.repeating_unit());
    }

    #[test]
    fn amplitude_shapes() {
        assert_eq!(
            classify_amplitudes(&[0.3, 0.2, 0.25, 0.4], 1e-3).shape,
            SaoShape::NonMonotone
        );
        assert_eq!(
            classify_amplitudes(&[0.1, 0.2, 0.4], 1e-3).shape,
            SaoShape::MonotoneIncreasing
        );
        assert_eq!(classify_amplitudes(&[0.4, 0.2, 0.1], 1e-3).shape, SaoShape::Other);
        let short = classify_amplitudes(&[0.1, 0.2], 1e-3);
        assert_eq!(short.shape, SaoShape::Other);
        assert!(short.diagnostic.is_some());
    }

    #[test]
    fn burst_intervals_of_a_square_pattern() {
        // one LAO burst every 10 time units
        let f = |t: f64| {
            let ph = t.rem_euclid(10.0);
            if ph < 2.0 {
                -1.0 - (std::f64::consts::PI * ph).cos()
            } else {
                -3.0 + 0.1 * (3.0 * ph).sin()
            }
        };
        let (t, v) = series(f, 60.0, 60001);
        let tr = Trajectory::<1>::from_samples(t, v.into_iter().map(|x| [x]).collect()).unwrap();
        let b = burst_stats(&tr, None, &PeakConfig::default());
        assert!((b.mean_interval.unwrap() - 10.0).abs() < 1e-3, "{:?}", b.intervals);
        assert!(b.mean_interval_days.is_none());
        let scales = Scales {
            s0: 1.0,
            t0: 1.0,
            h0: 1.0,
            time0: 36.525,
        };
        let b = burst_stats(&tr, Some(&scales), &PeakConfig::default());
        assert!((b.mean_interval_years.unwrap() - 1.0).abs() < 1e-3);
    }
}
