//! Parameter sets of the recharge oscillator, their nondimensionalization,
//! the named presets, and the plain-text `key = value` preset format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensional parameters of the three-box model.
///
/// `bl_over_beta` stores the group bL/β only; b, L and β never appear
/// separately in the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Subsurface reference temperature T_r0 [°C].
    pub t_r0: f64,
    /// Radiative-convective equilibrium temperature T_r [°C].
    pub t_r: f64,
    /// Thermal relaxation rate α [1/day].
    pub alpha: f64,
    /// Thermocline damping rate r [1/day].
    pub r: f64,
    /// Eastern thermocline reference depth H [m].
    pub h_ref: f64,
    /// Depth of the T_r0 level z0 [m].
    pub z0: f64,
    /// Thermocline sharpness h* [m].
    pub h_star: f64,
    /// Coupling coefficient μ [1/(K·day)].
    pub mu: f64,
    /// Zonal advection efficiency ε [-].
    pub epsilon: f64,
    /// Upwelling efficiency ζ [-].
    pub zeta: f64,
    /// bL/β [m·day/K].
    pub bl_over_beta: f64,
}

impl PhysicalParams {
    /// The published standard set (μbL/β = 22 m/K).
    pub fn table1() -> Self {
        let mu = 0.0026;
        Self {
            t_r0: 16.0,
            t_r: 29.5,
            alpha: 1.0 / 180.0,
            r: 1.0 / 400.0,
            h_ref: 100.0,
            z0: 75.0,
            h_star: 62.0,
            mu,
            epsilon: 0.11,
            zeta: 1.3,
            bl_over_beta: 22.0 / mu,
        }
    }

    /// C = (T_r − T_r0)/2.
    pub fn c_amplitude(&self) -> f64 {
        0.5 * (self.t_r - self.t_r0)
    }

    /// K = H − z0.
    pub fn k_offset(&self) -> f64 {
        self.h_ref - self.z0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("r", self.r),
            ("H", self.h_ref),
            ("z0", self.z0),
            ("h_star", self.h_star),
            ("mu", self.mu),
            ("epsilon", self.epsilon),
            ("zeta", self.zeta),
            ("bL_over_beta", self.bl_over_beta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_r.is_finite() && self.t_r0.is_finite() && self.t_r > self.t_r0) {
            return Err(Error::validation(format!(
                "T_r must exceed T_r0 (got T_r = {}, T_r0 = {})",
                self.t_r, self.t_r0
            )));
        }
        Ok(())
    }

    /// Maps to the dimensionless parameters and the scales linking the two
    /// coordinate systems.
    pub fn nondimensionalize(&self) -> Result<(DimensionlessParams, Scales)> {
        self.validate()?;
        let bl = self.bl_over_beta;
        let s0 = self.h_star / (bl * self.mu);
        let scales = Scales {
            s0,
            t0: s0,
            h0: self.h_star,
            time0: bl / (self.zeta * self.h_star),
        };
        let q = DimensionlessParams {
            delta: self.r * bl / (self.zeta * self.h_star),
            rho: self.epsilon * self.h_star / (self.r * bl),
            a: self.alpha * bl / (self.epsilon * self.h_star),
            c: self.c_amplitude() / s0,
            k: self.k_offset() / self.h_star,
        };
        q.validate()?;
        Ok((q, scales))
    }
}

/// Parameters of the dimensionless fast system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub delta: f64,
    pub rho: f64,
    pub a: f64,
    pub c: f64,
    pub k: f64,
}

impl DimensionlessParams {
    pub const fn new(delta: f64, rho: f64, a: f64, c: f64, k: f64) -> Self {
        Self { delta, rho, a, c, k }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("rho", self.rho), ("a", self.a), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.k.is_finite() {
            return Err(Error::validation("k must be finite"));
        }
        Ok(())
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "delta" => self.delta,
            "rho" => self.rho,
            "a" => self.a,
            "c" => self.c,
            "k" => self.k,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "delta" => self.delta = value,
            "rho" => self.rho = value,
            "a" => self.a = value,
            "c" => self.c = value,
            "k" => self.k = value,
            _ => return Err(Error::validation(format!("unknown dimensionless parameter '{key}'"))),
        }
        Ok(())
    }
}

/// Scale factors: S = S0·x, T = T0·y, h = h0·z, t = t0·τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// Temperature-difference scale S0 [°C].
    pub s0: f64,
    /// Temperature scale T0 [°C]; equal to S0.
    pub t0: f64,
    /// Depth scale h0 [m].
    pub h0: f64,
    /// Time scale t0 [days].
    pub time0: f64,
}

/// Named parameter sets shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Table1,
    Fig2a,
    Fig2b,
    Fig2c,
    Fig4,
    Fig6,
    Fig7,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Table1,
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig2c,
        Preset::Fig4,
        Preset::Fig6,
        Preset::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig4 => "fig4",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
        }
    }

    pub fn params(self) -> ParamSet {
        let fig4 = DimensionlessParams::new(0.1, 0.5, 2.55, 3.75, 0.34);
        match self {
            Preset::Table1 => ParamSet::Physical(PhysicalParams::table1()),
            Preset::Fig2a => ParamSet::Dimensionless(DimensionlessParams::new(0.01, 0.5, 2.75, 3.75, 0.34)),
            Preset::Fig2b => ParamSet::Dimensionless(DimensionlessParams::new(0.1, 0.35, 2.75, 3.75, 0.35)),
            Preset::Fig2c => ParamSet::Dimensionless(DimensionlessParams::new(0.2, 0.25, 2.75, 3.75, 0.34)),
            Preset::Fig4 => ParamSet::Dimensionless(fig4),
            Preset::Fig6 => ParamSet::Dimensionless(fig4.with_delta(0.005)),
            Preset::Fig7 => ParamSet::Dimensionless(fig4.with_delta(0.3)),
        }
    }

    pub fn dimensionless(self) -> DimensionlessParams {
        self.params().dimensionless().expect("shipped presets are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::validation(format!("unknown preset '{s}' (known: {})", names.join(", ")))
            })
    }
}

/// A parameter record in either coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamSet {
    Physical(PhysicalParams),
    Dimensionless(DimensionlessParams),
}

impl ParamSet {
    pub fn dimensionless(&self) -> Result<DimensionlessParams> {
        match self {
            ParamSet::Physical(p) => Ok(p.nondimensionalize()?.0),
            ParamSet::Dimensionless(q) => {
                q.validate()?;
                Ok(*q)
            }
        }
    }

    pub fn physical(&self) -> Option<&PhysicalParams> {
        match self {
            ParamSet::Physical(p) => Some(p),
            ParamSet::Dimensionless(_) => None,
        }
    }

    pub fn scales(&self) -> Result<Option<Scales>> {
        match self {
            ParamSet::Physical(p) => Ok(Some(p.nondimensionalize()?.1)),
            ParamSet::Dimensionless(_) => Ok(None),
        }
    }

    /// Applies `key = value` overrides. Physical keys require a physical
    /// base set and dimensionless keys a dimensionless one.
    pub fn apply(&mut self, overrides: &BTreeMap<String, f64>) -> Result<()> {
        for (key, &value) in overrides {
            match self {
                ParamSet::Dimensionless(q) => q.set(key, value)?,
                ParamSet::Physical(p) => set_physical(p, key, value)?,
            }
        }
        Ok(())
    }

    /// Parses the `key = value` text format. A `preset = name` line selects
    /// the base set; without it the keys decide: physical keys start from
    /// `table1`, dimensionless keys must then be complete.
    pub fn parse_config(text: &str) -> Result<ParamSet> {
        let mut preset: Option<Preset> = None;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("line {}: expected key = value, got '{raw}'", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if key == "preset" {
                preset = Some(value.parse()?);
                continue;
            }
            let v: f64 = value
                .parse()
                .map_err(|_| Error::validation(format!("line {}: '{value}' is not a number", lineno + 1)))?;
            entries.insert(key.to_string(), v);
        }
        ParamSet::from_entries(preset, entries)
    }

    /// Parses a comma-separated `k=v,k=v` override list.
    pub fn parse_inline(text: &str) -> Result<BTreeMap<String, f64>> {
        let mut map = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("expected k=v, got '{item}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::validation(format!("'{v}' is not a number")))?;
            map.insert(k.trim().to_string(), v);
        }
        Ok(map)
    }

    pub fn from_entries(preset: Option<Preset>, entries: BTreeMap<String, f64>) -> Result<ParamSet> {
        let mut set = match preset {
            Some(p) => p.params(),
            None => {
                let physical = entries.keys().any(|k| is_physical_key(k));
                if physical {
                    ParamSet::Physical(PhysicalParams::table1())
                } else {
                    for key in ["delta", "rho", "a", "c", "k"] {
                        if !entries.contains_key(key) {
                            return Err(Error::validation(format!(
                                "dimensionless parameter set is missing '{key}'"
                            )));
                        }
                    }
                    ParamSet::Dimensionless(DimensionlessParams::new(0.0, 0.0, 0.0, 0.0, 0.0))
                }
            }
        };
        set.apply(&entries)?;
        match &set {
            ParamSet::Physical(p) => p.validate()?,
            ParamSet::Dimensionless(q) => q.validate()?,
        }
        Ok(set)
    }

    /// Renders the set in the `key = value` format accepted by
    /// [`ParamSet::parse_config`].
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        match self {
            ParamSet::Dimensionless(q) => vec![("delta", q.delta), ("rho", q.rho), ("a", q.a), ("c", q.c), ("k", q.k)],
            ParamSet::Physical(p) => vec![
                ("T_r0", p.t_r0),
                ("T_r", p.t_r),
                ("alpha", p.alpha),
                ("r", p.r),
                ("H", p.h_ref),
                ("z0", p.z0),
                ("h_star", p.h_star),
                ("mu", p.mu),
                ("epsilon", p.epsilon),
                ("zeta", p.zeta),
                ("bL_over_beta", p.bl_over_beta),
            ],
        }
    }
}

const PHYSICAL_KEYS: [&str; 11] = [
    "T_r0",
    "T_r",
    "alpha",
    "r",
    "H",
    "z0",
    "h_star",
    "mu",
    "epsilon",
    "zeta",
    "bL_over_beta",
];

fn is_physical_key(key: &str) -> bool {
    PHYSICAL_KEYS.contains(&key)
}

fn set_physical(p: &mut PhysicalParams, key: &str, value: f64) -> Result<()> {
    match key {
        "T_r0" => p.t_r0 = value,
        "T_r" => p.t_r = value,
        "alpha" => p.alpha = value,
        "r" => p.r = value,
        "H" => p.h_ref = value,
        "z0" => p.z0 = value,
        "h_star" => p.h_star = value,
        "mu" => p.mu = value,
        "epsilon" => p.epsilon = value,
        "zeta" => p.zeta = value,
        "bL_over_beta" => p.bl_over_beta = value,
        _ => return Err(Error::validation(format!("unknown physical parameter '{key}'"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn table1_reproduces_rescaled_values() {
        let (q, s) = PhysicalParams::table1().nondimensionalize().unwrap();
        for (got, want) in [
            (q.delta, 0.2625),
            (q.rho, 0.3224),
            (q.a, 6.8927),
            (q.c, 2.3952),
            (q.k, 0.4032),
            (s.s0, 2.8182),
            (s.t0, 2.8182),
            (s.h0, 62.0),
            (s.time0, 104.9819),
        ] {
            assert!(rel(got, want) <= 5e-3, "{got} vs {want}");
        }
        assert_eq!(s.s0, s.t0);
        assert!((q.k - 25.0 / 62.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_r_keeps_rho_delta() {
        let p = PhysicalParams::table1();
        let mut p2 = p;
        p2.r *= 2.0;
        let (q, _) = p.nondimensionalize().unwrap();
        let (q2, _) = p2.nondimensionalize().unwrap();
        assert!(rel(q2.delta, 2.0 * q.delta) < 1e-14);
        assert!(rel(q2.rho, 0.5 * q.rho) < 1e-14);
        assert!(rel(q2.rho * q2.delta, q.rho * q.delta) < 1e-14);
    }

    #[test]
    fn rejects_non_positive_groups() {
        let mut p = PhysicalParams::table1();
        p.h_star = 0.0;
        assert!(matches!(p.nondimensionalize(), Err(Error::Validation(_))));
        let mut p = PhysicalParams::table1();
        p.t_r = 10.0;
        assert!(p.nondimensionalize().is_err());
    }

    #[test]
    fn presets_parse_by_name() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            p.params().dimensionless().unwrap();
        }
        assert!("fig9".parse::<Preset>().is_err());
        let q = Preset::Fig6.dimensionless();
        assert_eq!(q, DimensionlessParams::new(0.005, 0.5, 2.55, 3.75, 0.34));
    }

    #[test]
    fn config_round_trip() {
        for p in Preset::ALL {
            let set = p.params();
            let back = ParamSet::parse_config(&set.to_config()).unwrap();
            assert_eq!(back, set);
        }
    }

    #[test]
    fn config_with_preset_and_override() {
        let set = ParamSet::parse_config("# base\npreset = fig4\ndelta = 0.05 # smaller\n").unwrap();
        assert_eq!(set.dimensionless().unwrap().delta, 0.05);
        assert_eq!(set.dimensionless().unwrap().a, 2.55);
    }

    #[test]
    fn config_errors() {
        assert!(ParamSet::parse_config("delta = 0.1\n").is_err());
        assert!(ParamSet::parse_config("delta 0.1\n").is_err());
        assert!(ParamSet::parse_config("preset = fig4\nbogus = 1\n").is_err());
        assert!(ParamSet::parse_config("preset = fig4\nc = x\n").is_err());
        assert!(ParamSet::parse_config("preset = fig4\nalpha = 1\n").is_err());
    }

    #[test]
    fn physical_keys_start_from_table1() {
        let set = ParamSet::parse_config("r = 0.005\n").unwrap();
        let p = set.physical().unwrap();
        assert_eq!(p.r, 0.005);
        assert_eq!(p.h_star, 62.0);
    }
}
