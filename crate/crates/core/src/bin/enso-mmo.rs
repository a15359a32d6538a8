//! Command-line front end: one subcommand per analysis stage.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use enso_mmo::bifurcation::{self, TimeScale};
use enso_mmo::cycle::{self, CycleOptions, Departure, SegmentLabel, SingularCycle};
use enso_mmo::integrate::{integrate, IntegratorConfig, Trajectory};
use enso_mmo::io::{self, Dimensional, RunManifest, Table};
use enso_mmo::manifold::{self, FoldSide};
use enso_mmo::mmo::{self, PeakConfig};
use enso_mmo::model::System;
use enso_mmo::reduced;
use enso_mmo::{DimensionlessParams, Error, ParamSet, Preset, Result};

#[derive(Parser, Debug)]
#[command(
    name = "enso-mmo",
    version,
    about = "Fast-slow analysis of a three-variable ENSO recharge oscillator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the fast, slow or layer system and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Convert a physical parameter set to dimensionless form and scales.
    Nondim(CommonArgs),
    /// Stability raster of a critical manifold branch.
    Manifold(ManifoldArgs),
    /// Fold curves and branch roots.
    Folds(FoldsArgs),
    /// Folded singularities of the desingularized reduced flow.
    Singularities(SingularitiesArgs),
    /// Reduced and full-system equilibria.
    Equilibria(EquilibriaArgs),
    /// Scan a for the folded saddle-node of type II.
    #[command(name = "scan-fsn2")]
    ScanFsn2(ScanArgs),
    /// Locate Hopf points of the full system and their δ scaling.
    Hopf(HopfArgs),
    /// MMO signature and burst statistics of a trajectory.
    Signature(SignatureArgs),
    /// Build the singular cycle S1, S2, F1, S3, F2.
    #[command(name = "singular-cycle")]
    SingularCycle(CycleArgs),
    /// Per-segment distance between the singular cycle and an orbit.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ParamArgs {
    /// Named parameter set.
    #[arg(long, conflicts_with_all = ["params", "params_file"])]
    preset: Option<String>,
    /// Explicit parameters as k=v,k=v.
    #[arg(long, conflicts_with = "params_file")]
    params: Option<String>,
    /// key = value parameter file.
    #[arg(long)]
    params_file: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
}

impl ParamArgs {
    fn explicit(&self) -> bool {
        self.preset.is_some()
            || self.params.is_some()
            || self.params_file.is_some()
            || self.overrides().next().is_some()
    }

    fn overrides(&self) -> impl Iterator<Item = (&'static str, f64)> {
        [
            ("delta", self.delta),
            ("rho", self.rho),
            ("a", self.a),
            ("c", self.c),
            ("k", self.k),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
    }

    /// Resolves the parameter set; `default` applies when nothing is given.
    fn resolve(&self, default: Preset) -> Result<(Option<Preset>, ParamSet)> {
        let (preset, mut set) = if let Some(name) = &self.preset {
            let p: Preset = name.parse()?;
            (Some(p), p.params())
        } else if let Some(list) = &self.params {
            (None, ParamSet::from_entries(None, ParamSet::parse_inline(list)?)?)
        } else if let Some(path) = &self.params_file {
            let text = fs::read_to_string(path).map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
            (None, ParamSet::parse_config(&text)?)
        } else {
            (Some(default), default.params())
        };
        let overrides: BTreeMap<String, f64> = self.overrides().map(|(k, v)| (k.to_string(), v)).collect();
        if !overrides.is_empty() {
            if let ParamSet::Physical(_) = set {
                set = ParamSet::Dimensionless(set.dimensionless()?);
            }
            set.apply(&overrides)?;
        }
        set.dimensionless()?;
        Ok((preset, set))
    }
}

#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Output file; a manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    atol: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum SystemArg {
    Fast,
    Slow,
    Layer,
}

impl From<SystemArg> for System {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Fast => System::Fast,
            SystemArg::Slow => System::Slow,
            SystemArg::Layer => System::Layer,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[arg(long, value_enum, default_value_t = SystemArg::Fast)]
    system: SystemArg,
    /// Time span in the chosen system's time.
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
    tspan: Option<Vec<f64>>,
    /// Initial state x y z.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    init: Option<Vec<f64>>,
    /// Time discarded at the start; defaults to 30% of the span.
    #[arg(long)]
    transient: Option<f64>,
    /// Largest step size.
    #[arg(long)]
    max_step: Option<f64>,
    /// Write days, °C and metres instead of dimensionless values.
    #[arg(long)]
    dimensional: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Ms,
    M0,
}

#[derive(Args, Debug, Clone)]
struct ManifoldArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Branch::Ms)]
    branch: Branch,
    /// Range of the first coordinate (x on Ms, y on M0).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values_t = [-8.0, 2.0])]
    range: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values_t = [-2.0, 4.0])]
    z_range: Vec<f64>,
    #[arg(long, default_value_t = 101)]
    n: usize,
    #[arg(long, default_value_t = 101)]
    nz: usize,
}

#[derive(Args, Debug, Clone)]
struct FoldsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values_t = [-2.0, 4.0])]
    z_range: Vec<f64>,
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// z value at which branch roots are reported.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    z: f64,
}

#[derive(Args, Debug, Clone)]
struct SingularitiesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also trace the strong singular canard of each folded node.
    #[arg(long)]
    canard: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TimeArg {
    Slow,
    Fast,
}

impl From<TimeArg> for TimeScale {
    fn from(t: TimeArg) -> Self {
        match t {
            TimeArg::Slow => TimeScale::Slow,
            TimeArg::Fast => TimeScale::Fast,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct EquilibriaArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Time scale of the reported full-system eigenvalues.
    #[arg(long, value_enum, default_value_t = TimeArg::Slow)]
    time: TimeArg,
}

#[derive(Args, Debug, Clone)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [2.0, 3.5])]
    a_range: Vec<f64>,
    #[arg(long, default_value_t = bifurcation::DEFAULT_SCAN_POINTS)]
    points: usize,
}

#[derive(Args, Debug, Clone)]
struct HopfArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [2.0, 3.5])]
    a_range: Vec<f64>,
    /// δ values for the scaling fits.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025])]
    deltas: Vec<f64>,
    /// Offset from a* at which the imaginary parts are measured.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a_offset: f64,
}

#[derive(Args, Debug, Clone)]
struct PeakArgs {
    #[arg(long, default_value_t = 1e-4)]
    prominence: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    lao_threshold: f64,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    trough_threshold: f64,
}

impl PeakArgs {
    fn config(&self) -> PeakConfig {
        PeakConfig {
            prominence_floor: self.prominence,
            lao_threshold: self.lao_threshold,
            trough_threshold: self.trough_threshold,
            ..PeakConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SignatureArgs {
    /// Trajectory CSV written by `simulate`.
    file: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    peaks: PeakArgs,
}

#[derive(Args, Debug, Clone)]
struct CycleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// z at which the cycle leaves M0; by default the minimum z of a simulated orbit.
    #[arg(long, allow_negative_numbers = true)]
    departure: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CompareArgs {
    /// Orbit CSV; simulated from the parameters when absent.
    file: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    tol: TolArgs,
}

/// Result of one command: a JSON summary and an optional table.
struct Output {
    json: Value,
    table: Option<Table>,
    /// Print the table rather than the summary when no --out is given.
    table_first: bool,
}

impl Output {
    fn json(json: Value) -> Self {
        Self {
            json,
            table: None,
            table_first: false,
        }
    }
}

fn to_json(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn pair(v: &[f64]) -> (f64, f64) {
    (v[0], v[1])
}

fn default_span(system: System, delta: f64) -> (f64, f64) {
    match system {
        System::Fast => (0.0, (60.0 / delta).max(3000.0)),
        System::Slow => (0.0, 60.0_f64.max(3000.0 * delta)),
        System::Layer => (0.0, 100.0),
    }
}

fn simulate_default(q: &DimensionlessParams, tol: TolArgs) -> Result<Trajectory<3>> {
    let span = default_span(System::Fast, q.delta);
    let cfg = IntegratorConfig::new(span.0, span.1)
        .tolerances(tol.rtol, tol.atol)
        .transient_fraction(0.3)
        .sao_step_cap(q.delta, false);
    integrate(System::Fast.rhs(*q), cycle::DEFAULT_INITIAL, &cfg, &[])
}

fn run(cmd: &Command, manifest: &mut RunManifest) -> Result<(Option<PathBuf>, Output)> {
    let mut record = |preset: Option<Preset>, set: &ParamSet| {
        manifest.preset = preset.map(|p| p.name().to_string());
        manifest.params = Some(*set);
    };
    match cmd {
        Command::Simulate(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            let system = System::from(args.system);
            let span = match &args.tspan {
                Some(v) => pair(v),
                None => default_span(system, q.delta),
            };
            let init = match &args.init {
                Some(v) => [v[0], v[1], v[2]],
                None => cycle::DEFAULT_INITIAL,
            };
            let transient = args.transient.unwrap_or(0.3 * (span.1 - span.0));
            let mut cfg = IntegratorConfig::new(span.0, span.1)
                .tolerances(args.tol.rtol, args.tol.atol)
                .transient(transient)
                .sao_step_cap(q.delta, system == System::Slow);
            if let Some(h) = args.max_step {
                cfg = cfg.max_step(h);
            }
            let dim = if args.dimensional {
                let p = *set
                    .physical()
                    .ok_or_else(|| Error::validation("--dimensional needs a physical parameter set such as table1"))?;
                let scales = set.scales()?.expect("physical sets have scales");
                Some(Dimensional::new(p, scales, system, q.delta))
            } else {
                None
            };
            manifest.option("system", args.system);
            manifest.option("tspan", span);
            manifest.option("init", init);
            manifest.option("transient", transient);
            manifest.option("rtol", args.tol.rtol);
            manifest.option("atol", args.tol.atol);
            manifest.option("max_step", cfg.max_step.is_finite().then_some(cfg.max_step));
            manifest.option("dimensional", args.dimensional);
            let traj = integrate(system.rhs(q), init, &cfg, &[])?;
            let table = io::trajectory_table(&traj, system, dim.as_ref());
            let json = json!({
                "samples": traj.len(),
                "t_end": traj.last().map(|(t, _)| t),
                "final_state": traj.last().map(|(_, s)| s),
            });
            Ok((
                args.common.out.clone(),
                Output {
                    json,
                    table: Some(table),
                    table_first: true,
                },
            ))
        }
        Command::Nondim(args) => {
            let (preset, set) = args.params.resolve(Preset::Table1)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            let mut json = json!({
                "delta": q.delta,
                "rho": q.rho,
                "a": q.a,
                "c": q.c,
                "k": q.k,
            });
            match set.scales()? {
                Some(s) => {
                    json["S0"] = json!(s.s0);
                    json["T0"] = json!(s.t0);
                    json["h0"] = json!(s.h0);
                    json["t0"] = json!(s.time0);
                }
                None if args.params.explicit() => {
                    return Err(Error::validation(
                        "nondim needs a physical parameter set such as table1",
                    ));
                }
                None => {}
            }
            Ok((args.out.clone(), Output::json(json)))
        }
        Command::Manifold(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            if args.n < 2 || args.nz < 2 {
                return Err(Error::validation("raster needs at least 2 points per axis"));
            }
            let (first, grid) = match args.branch {
                Branch::Ms => (
                    "x",
                    manifold::ms_stability_grid(pair(&args.range), pair(&args.z_range), args.n, args.nz, &q),
                ),
                Branch::M0 => (
                    "y",
                    manifold::m0_stability_grid(pair(&args.range), pair(&args.z_range), args.n, args.nz, &q),
                ),
            };
            let meta = format!(
                "branch={} units: {first}=dimensionless, z=dimensionless, stability=label",
                if args.branch == Branch::Ms { "Ms" } else { "M0" }
            );
            let mut table = Table::new(meta, &[first, "z", "stability"]);
            for (u, z, s) in &grid {
                table.push([u.to_string(), z.to_string(), s.label().to_string()]);
            }
            manifest.option("range", pair(&args.range));
            manifest.option("z_range", pair(&args.z_range));
            manifest.option("n", args.n);
            manifest.option("nz", args.nz);
            let json = json!({ "cells": grid.len() });
            Ok((
                args.common.out.clone(),
                Output {
                    json,
                    table: Some(table),
                    table_first: true,
                },
            ))
        }
        Command::Folds(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            manifest.option("z_range", pair(&args.z_range));
            manifest.option("points", args.points);
            let json = match manifold::fold_curves(&q).filter(|f| !f.is_degenerate()) {
                None => json!({ "status": "no folds", "c": q.c, "eta": null, "curves": [] }),
                Some(folds) => {
                    let curves: Vec<Value> = [FoldSide::Minus, FoldSide::Plus]
                        .into_iter()
                        .map(|side| {
                            let pts: Vec<[f64; 3]> = folds
                                .polyline(side, args.z_range[0], args.z_range[1], args.points, &q)
                                .iter()
                                .map(|p| p.to_array())
                                .collect();
                            json!({ "side": side.label(), "offset": folds.offset(side), "points": pts })
                        })
                        .collect();
                    json!({
                        "status": "ok",
                        "c": q.c,
                        "eta": folds.eta,
                        "curves": curves,
                        "branch_roots": manifold::branch_roots(args.z, &q),
                    })
                }
            };
            Ok((args.common.out.clone(), Output::json(json)))
        }
        Command::Singularities(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            require_folds(&q)?;
            let list: Vec<Value> = reduced::find_folded_singularities(&q)
                .iter()
                .map(|s| {
                    let mut v = to_json(s);
                    v["eigenvalue_ratio"] = to_json(s.eigenvalue_ratio());
                    if args.canard && s.kind == reduced::SingularityKind::Node {
                        v["strong_canard"] = match reduced::strong_singular_canard(s, &q) {
                            Ok(c) => to_json(c.points),
                            Err(e) => json!({ "error": e.to_string() }),
                        };
                    }
                    v
                })
                .collect();
            manifest.option("canard", args.canard);
            Ok((args.common.out.clone(), Output::json(json!({ "singularities": list }))))
        }
        Command::Equilibria(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            let ts = TimeScale::from(args.time);
            let full: Vec<Value> = bifurcation::full_equilibria(&q, ts)?
                .iter()
                .map(|e| {
                    let mut v = to_json(e);
                    v["saddle_focus"] = json!(e.is_saddle_focus());
                    v
                })
                .collect();
            manifest.option("time", format!("{:?}", ts).to_lowercase());
            let json = json!({
                "reduced": reduced::find_reduced_equilibria(&q),
                "full": full,
            });
            Ok((args.common.out.clone(), Output::json(json)))
        }
        Command::ScanFsn2(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            require_folds(&q)?;
            let res = bifurcation::fsn2_scan(&q, pair(&args.a_range), args.points)?;
            manifest.option("a_range", pair(&args.a_range));
            manifest.option("points", args.points);
            let mut table = Table::new(
                "units: all columns dimensionless",
                &[
                    "a",
                    "fold_x",
                    "fold_z",
                    "eq_x",
                    "eq_z",
                    "signed_distance",
                    "eq_kind",
                    "location",
                    "flags",
                ],
            );
            for r in &res.records {
                let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                table.push([
                    r.a.to_string(),
                    num(r.fold_point.map(|p| p.0)),
                    num(r.fold_point.map(|p| p.1)),
                    num(r.equilibrium.map(|p| p.0)),
                    num(r.equilibrium.map(|p| p.1)),
                    num(r.signed_distance),
                    r.equilibrium_kind.map(|k| k.label().to_string()).unwrap_or_default(),
                    r.location.map(|l| l.label().to_string()).unwrap_or_default(),
                    r.flags(),
                ]);
            }
            let json = json!({
                "parameter": res.parameter,
                "a_star": res.a_star,
                "collision": res.collision,
                "records": res.records.len(),
            });
            Ok((
                args.common.out.clone(),
                Output {
                    json,
                    table: Some(table),
                    table_first: false,
                },
            ))
        }
        Command::Hopf(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            require_folds(&q)?;
            let range = pair(&args.a_range);
            let distance = bifurcation::hopf_distance_scaling(&q, &args.deltas, range)?;
            let imag = bifurcation::im_scaling(&q, args.a_offset, &args.deltas)?;
            let at_delta = bifurcation::hopf_locate(&q, q.delta, range)?;
            manifest.option("a_range", range);
            manifest.option("deltas", &args.deltas);
            manifest.option("a_offset", args.a_offset);
            let json = json!({
                "hopf": at_delta,
                "distance_scaling": distance,
                "imag_scaling": imag,
            });
            Ok((args.common.out.clone(), Output::json(json)))
        }
        Command::Signature(args) => {
            let explicit = args.common.params.explicit();
            let set = if explicit {
                let (preset, set) = args.common.params.resolve(Preset::Table1)?;
                record(preset, &set);
                Some(set)
            } else {
                None
            };
            let loaded = match io::load_trajectory(&args.file, set.as_ref()) {
                Err(Error::Validation(msg)) if set.is_none() && msg.contains("physical") => {
                    io::load_trajectory(&args.file, Some(&Preset::Table1.params()))?
                }
                other => other?,
            };
            let days = match (loaded.days_per_unit, &set) {
                (Some(d), _) => Some(d),
                (None, Some(s)) => match (s.scales()?, loaded.system) {
                    (Some(sc), Some(System::Slow)) => Some(sc.time0 / s.dimensionless()?.delta),
                    (Some(sc), _) => Some(sc.time0),
                    (None, _) => None,
                },
                (None, None) => None,
            };
            let cfg = args.peaks.config();
            manifest.option("input", args.file.display().to_string());
            manifest.option("peaks", cfg);
            let summary = mmo::summarize(&loaded.trajectory, days, &cfg);
            Ok((args.common.out.clone(), Output::json(to_json(summary))))
        }
        Command::SingularCycle(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            require_folds(&q)?;
            let opts = CycleOptions {
                departure: match args.departure {
                    Some(z) => Departure::Z(z),
                    None => Departure::Simulate,
                },
                ..CycleOptions::default()
            };
            manifest.option("departure", args.departure);
            let cycle = cycle::build_singular_cycle(&q, &opts)?;
            let table = cycle_table(&cycle);
            let json = json!({
                "z_departure": cycle.z_departure,
                "closure_gap": cycle.closure_gap,
                "folded_node": cycle.folded_node,
                "equilibrium": cycle.equilibrium,
                "segments": cycle.segments.iter().map(|s| json!({
                    "label": s.label.label(),
                    "kind": s.kind.label(),
                    "points": s.points.len(),
                    "start": s.start().to_array(),
                    "end": s.end().to_array(),
                })).collect::<Vec<_>>(),
            });
            Ok((
                args.common.out.clone(),
                Output {
                    json,
                    table: Some(table),
                    table_first: false,
                },
            ))
        }
        Command::Compare(args) => {
            let (preset, set) = args.common.params.resolve(Preset::Fig4)?;
            record(preset, &set);
            let q = set.dimensionless()?;
            require_folds(&q)?;
            let traj = match &args.file {
                Some(path) => {
                    manifest.option("input", path.display().to_string());
                    let loaded = io::load_trajectory(path, Some(&set))?;
                    if loaded.system == Some(System::Slow) {
                        return Err(Error::validation("compare expects a fast-time orbit"));
                    }
                    loaded.trajectory
                }
                None => simulate_default(&q, args.tol)?,
            };
            let cycle = cycle::build_singular_cycle(
                &q,
                &CycleOptions {
                    departure: Departure::Orbit(&traj),
                    ..CycleOptions::default()
                },
            )?;
            let cmp = cycle::compare_cycle_to_orbit(&cycle, &traj);
            let per: BTreeMap<&str, f64> = SegmentLabel::ORDER.iter().map(|l| (l.label(), cmp.get(*l))).collect();
            let json = json!({
                "delta": q.delta,
                "z_departure": cycle.z_departure,
                "max": cmp.max,
                "segments": per,
                "detail": cmp.segments,
            });
            Ok((args.common.out.clone(), Output::json(json)))
        }
    }
}

fn require_folds(q: &DimensionlessParams) -> Result<()> {
    match manifold::fold_curves(q) {
        Some(f) if !f.is_degenerate() => Ok(()),
        _ => Err(Error::validation(format!(
            "c = {} gives no fold curves; this command needs c > 1",
            q.c
        ))),
    }
}

fn cycle_table(cycle: &SingularCycle) -> Table {
    let mut table = Table::new(
        format!("z_departure={} units: x,y,z=dimensionless", cycle.z_departure),
        &["segment", "kind", "x", "y", "z"],
    );
    for seg in &cycle.segments {
        for p in &seg.points {
            table.push([
                seg.label.label().to_string(),
                seg.kind.label().to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
            ]);
        }
    }
    table
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Simulate(_) => "simulate",
        Command::Nondim(_) => "nondim",
        Command::Manifold(_) => "manifold",
        Command::Folds(_) => "folds",
        Command::Singularities(_) => "singularities",
        Command::Equilibria(_) => "equilibria",
        Command::ScanFsn2(_) => "scan-fsn2",
        Command::Hopf(_) => "hopf",
        Command::Signature(_) => "signature",
        Command::SingularCycle(_) => "singular-cycle",
        Command::Compare(_) => "compare",
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_else(|_| "null".into())
}

/// Prints a line, ignoring a closed stdout.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit(out: Option<&Path>, output: Output, mut manifest: RunManifest) -> Result<()> {
    match out {
        None => match (&output.table, output.table_first) {
            (Some(t), true) => {
                let _ = t.write_to(std::io::stdout().lock());
            }
            _ => say(&pretty(&output.json)),
        },
        Some(path) => {
            match &output.table {
                Some(t) => t.save(path)?,
                None => fs::write(path, pretty(&output.json) + "\n")
                    .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?,
            }
            manifest.outputs.push(path.display().to_string());
            let manifest_path = manifest.save_next_to(path)?;
            let mut summary = output.json;
            if output.table.is_none() {
                summary = json!({});
            }
            summary["out"] = json!(path.display().to_string());
            summary["manifest"] = json!(manifest_path.display().to_string());
            say(&pretty(&summary));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut manifest = RunManifest::new(command_name(&cli.command), args);
    let result = run(&cli.command, &mut manifest).and_then(|(out, output)| emit(out.as_deref(), output, manifest));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
