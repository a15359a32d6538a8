//! CSV tables with a `#` units line, trajectory import/export, and the run
//! manifest written next to every output file.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::System;
use crate::params::{ParamSet, PhysicalParams, Scales};
use crate::state::{DimlessState, PhysState};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::validation(format!("{}: {e}", path.display()))
}

/// A table: one `#` metadata line, a header row, then data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(meta: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            meta: meta.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|v| v.to_string()).collect());
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let fail = |e: &dyn std::fmt::Display| Error::validation(format!("writing table: {e}"));
        writeln!(w, "# {}", self.meta).map_err(|e| fail(&e))?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(&self.headers).map_err(|e| fail(&e))?;
        for r in &self.rows {
            cw.write_record(r).map_err(|e| fail(&e))?;
        }
        cw.flush().map_err(|e| fail(&e))?;
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let meta = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim())
            .collect::<Vec<_>>()
            .join("; ");
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = rd
            .headers()
            .map_err(|e| Error::validation(format!("csv header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for r in rd.records() {
            let r = r.map_err(|e| Error::validation(format!("csv: {e}")))?;
            rows.push(r.iter().map(|v| v.trim().to_string()).collect());
        }
        Ok(Self { meta, headers, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut s = String::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut s))
            .map_err(|e| io_err(path, e))?;
        Self::parse(&s)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation(format!("missing column '{name}'")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(n, r)| {
                r.get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::validation(format!("row {}: bad value in column '{name}'", n + 1)))
            })
            .collect()
    }

    /// Value of `key=` in the metadata line.
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .split(|c: char| c == ';' || c.is_whitespace())
            .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
    }
}

fn system_name(s: System) -> &'static str {
    match s {
        System::Fast => "fast",
        System::Slow => "slow",
        System::Layer => "layer",
    }
}

fn parse_system(s: &str) -> Option<System> {
    match s {
        "fast" => Some(System::Fast),
        "slow" => Some(System::Slow),
        "layer" => Some(System::Layer),
        _ => None,
    }
}

/// Dimensional conversion for trajectory output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensional {
    pub params: PhysicalParams,
    pub scales: Scales,
    /// Days per unit of trajectory time.
    pub days_per_unit: f64,
}

impl Dimensional {
    pub fn new(params: PhysicalParams, scales: Scales, system: System, delta: f64) -> Self {
        let days_per_unit = match system {
            System::Slow => scales.time0 / delta,
            System::Fast | System::Layer => scales.time0,
        };
        Self {
            params,
            scales,
            days_per_unit,
        }
    }
}

pub fn trajectory_table(traj: &Trajectory<3>, system: System, dim: Option<&Dimensional>) -> Table {
    match dim {
        None => {
            let meta = format!(
                "system={} units: t=dimensionless ({} time), x=dimensionless, y=dimensionless, z=dimensionless",
                system_name(system),
                if system == System::Slow { "slow" } else { "fast" }
            );
            let mut t = Table::new(meta, &["t", "x", "y", "z"]);
            for (time, s) in traj.times.iter().zip(&traj.states) {
                t.push([*time, s[0], s[1], s[2]]);
            }
            t
        }
        Some(d) => {
            let meta = format!(
                "system={} units: t_days=days, T1=degC, T2=degC, h1=m; days_per_unit={}",
                system_name(system),
                d.days_per_unit
            );
            let mut t = Table::new(meta, &["t_days", "T1", "T2", "h1"]);
            for (time, s) in traj.times.iter().zip(&traj.states) {
                let p = DimlessState::from(*s).to_physical(&d.params, &d.scales);
                t.push([time * d.days_per_unit, p.t1, p.t2, p.h1]);
            }
            t
        }
    }
}

/// A trajectory read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrajectory {
    pub trajectory: Trajectory<3>,
    pub system: Option<System>,
    /// Days per unit time when the file was dimensional.
    pub days_per_unit: Option<f64>,
}

/// Reads `t,x,y,z` directly; `t_days,T1,T2,h1` needs `params` to convert back.
pub fn parse_trajectory(table: &Table, params: Option<&ParamSet>) -> Result<LoadedTrajectory> {
    let system = table.meta_value("system").and_then(parse_system);
    if table.headers.iter().any(|h| h == "x") {
        let (t, x, y, z) = (
            table.column("t")?,
            table.column("x")?,
            table.column("y")?,
            table.column("z")?,
        );
        let states = (0..t.len()).map(|i| [x[i], y[i], z[i]]).collect();
        return Ok(LoadedTrajectory {
            trajectory: Trajectory::from_samples(t, states)?,
            system,
            days_per_unit: None,
        });
    }
    if table.headers.iter().any(|h| h == "T1") {
        let set = params
            .ok_or_else(|| Error::validation("a dimensional trajectory needs physical parameters to convert back"))?;
        let (p, scales) = match (set.physical(), set.scales()?) {
            (Some(p), Some(s)) => (*p, s),
            _ => {
                return Err(Error::validation(
                    "a dimensional trajectory needs a physical parameter set",
                ))
            }
        };
        let days = table
            .meta_value("days_per_unit")
            .and_then(|v| v.parse::<f64>().ok())
            .unwrap_or(scales.time0);
        let (t, t1, t2, h1) = (
            table.column("t_days")?,
            table.column("T1")?,
            table.column("T2")?,
            table.column("h1")?,
        );
        let states = (0..t.len())
            .map(|i| {
                PhysState::new(t1[i], t2[i], h1[i])
                    .to_anomaly(&p)
                    .to_dimless(&scales)
                    .to_array()
            })
            .collect();
        let times = t.iter().map(|v| v / days).collect();
        return Ok(LoadedTrajectory {
            trajectory: Trajectory::from_samples(times, states)?,
            system,
            days_per_unit: Some(days),
        });
    }
    Err(Error::validation(
        "trajectory CSV needs columns t,x,y,z or t_days,T1,T2,h1",
    ))
}

pub fn load_trajectory(path: &Path, params: Option<&ParamSet>) -> Result<LoadedTrajectory> {
    parse_trajectory(&Table::load(path)?, params)
}

/// Record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub preset: Option<String>,
    pub params: Option<ParamSet>,
    pub options: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            preset: None,
            params: None,
            options: serde_json::Map::new(),
            outputs: Vec::new(),
        }
    }

    pub fn option(&mut self, key: &str, value: impl Serialize) {
        self.options.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    /// `<output>.manifest.json`
    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn save_next_to(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::validation(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| io_err(path, e))
    }
}
