// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment orchestration: builds the configured model, runs one task and
//! writes its CSV tables, plot scripts and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::config::{Model, PartitionSpec, RunConfig, Task};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::ness::{self, solve_ness};
use crate::operator::{self, assemble_liouvillian, lindblad_pair, HilbertSpace, Operator, SuperOperator};
use crate::output::{self, Cell, Table};
use crate::partition::{self, LiouvillePartition, Partition};
use crate::rates::{self, rate_matrix, RateMatrix, Route};
use crate::spinboson::{self, SBWorkspace};
use crate::vsystem::{self, VParams};

/// Upper bound on the number of stored time points.
pub const MAX_TIME_POINTS: usize = 200_000;
/// Default number of steps when the fast and slow timescales are far apart.
pub const DEFAULT_MIN_STEPS: f64 = 20_000.0;

/// A model ready for the steady-state tasks.
pub struct Workload {
    pub liouvillian: SuperOperator,
    pub partition: Partition,
    pub parameters: Map<String, Value>,
    /// Model-specific diagnostics for the manifest.
    pub diagnostics: Map<String, Value>,
    pub spinboson: Option<SBWorkspace>,
}

/// Matrix given as rows of real parts with optional imaginary rows.
#[derive(Debug, Deserialize)]
struct MatrixSpec {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpSpec {
    /// Either an explicit operator or a `from`/`to` pair of basis labels.
    #[serde(default)]
    operator: Option<MatrixSpec>,
    #[serde(default)]
    from: Option<String>,
    #[serde(default)]
    to: Option<String>,
    rate: f64,
    #[serde(default)]
    n: f64,
}

/// Custom network read from JSON:
/// `{"labels": [...], "hamiltonian": {"re": [[...]], "im": [[...]]}, "jumps": [...]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomSpec {
    labels: Vec<String>,
    hamiltonian: MatrixSpec,
    #[serde(default)]
    jumps: Vec<JumpSpec>,
}

fn matrix(spec: &MatrixSpec, d: usize, what: &str) -> Result<Array2<C64>> {
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
    if !shape_ok(&spec.re) || spec.im.as_ref().is_some_and(|im| !shape_ok(im)) {
        return Err(Error::Config(format!("{what} must be {d}x{d}")));
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| {
        C64::new(spec.re[i][j], spec.im.as_ref().map_or(0.0, |im| im[i][j]))
    }))
}

fn custom_liouvillian(path: &Path) -> Result<(Arc<HilbertSpace>, SuperOperator, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let spec: CustomSpec =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let space = Arc::new(HilbertSpace::new(spec.labels.iter().cloned())?);
    let d = space.dim();
    let h = Operator::new(space.clone(), matrix(&spec.hamiltonian, d, "hamiltonian")?)?;
    if h.hermiticity_error() > 1e-12 * linalg::max_abs(h.matrix()).max(1.0) {
        return Err(Error::Validation("custom hamiltonian is not Hermitian".into()));
    }
    let mut dissipators = Vec::with_capacity(spec.jumps.len());
    for (i, jump) in spec.jumps.iter().enumerate() {
        let s = match (&jump.operator, &jump.from, &jump.to) {
            (Some(m), None, None) => Operator::new(space.clone(), matrix(m, d, "jump operator")?)?,
            (None, Some(from), Some(to)) => {
                let idx = |l: &str| {
                    space
                        .index_of(l)
                        .ok_or_else(|| Error::Config(format!("jump {i}: unknown label '{l}'")))
                };
                Operator::ket_bra(space.clone(), idx(to)?, idx(from)?)?
            }
            _ => return Err(Error::Config(format!("jump {i}: give either operator or from/to"))),
        };
        dissipators.push(lindblad_pair(&s, jump.rate, jump.n)?);
    }
    let l = assemble_liouvillian(&h, &dissipators)?;
    Ok((space, l, spec.jumps.len()))
}

fn partition_from_groups(space: &Arc<HilbertSpace>, groups: &[(String, Vec<String>)]) -> Result<Partition> {
    let g: Vec<(&str, Vec<&str>)> = groups
        .iter()
        .map(|(n, ls)| (n.as_str(), ls.iter().map(String::as_str).collect()))
        .collect();
    Partition::from_label_groups(space.clone(), &g)
}

fn param_map(entries: Vec<(&'static str, f64)>) -> Map<String, Value> {
    entries.into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect()
}

/// Builds the configured model and partition.
pub fn build_workload(cfg: &RunConfig) -> Result<Workload> {
    let builtin = match &cfg.partition {
        Some(PartitionSpec::Builtin(b)) => Some(b.as_str()),
        _ => None,
    };
    let groups = match &cfg.partition {
        Some(PartitionSpec::Groups(g)) => Some(g),
        _ => None,
    };
    let mut diagnostics = Map::new();
    match cfg.model {
        Model::VSystem => {
            let v = vsystem::build(&cfg.vsystem)?;
            let partition = match (builtin, groups) {
                (_, Some(g)) => partition_from_groups(&v.space, g)?,
                (Some("grouped"), _) => v.grouped.clone(),
                _ => v.standard.clone(),
            };
            let d = vsystem::derived(&cfg.vsystem, None)?;
            diagnostics.insert("beta".into(), json!(d.beta));
            diagnostics.insert("gamma_star".into(), json!(d.gamma_star));
            diagnostics.insert("delta".into(), json!(d.delta));
            Ok(Workload {
                liouvillian: v.liouvillian,
                partition,
                parameters: param_map(cfg.vsystem.entries()),
                diagnostics,
                spinboson: None,
            })
        }
        Model::SpinBoson => {
            let ws = spinboson::build_truncated(&cfg.spinboson)?;
            let partition = match (builtin, groups) {
                (_, Some(g)) => partition_from_groups(&ws.space, g)?,
                (Some("three"), _) => ws.three.clone(),
                _ => ws.sides.clone(),
            };
            for (k, v) in [
                ("q_x", ws.q_x),
                ("radiative_gap", ws.radiative_gap),
                ("n_rad", ws.n_rad),
                ("side_rounding", ws.side_rounding),
                ("ground_rounding", ws.ground_rounding),
                ("overlap_cond", ws.overlap_cond),
            ] {
                diagnostics.insert(k.into(), json!(v));
            }
            diagnostics.insert("n_left".into(), json!(ws.n_left));
            Ok(Workload {
                liouvillian: ws.liouvillian.clone(),
                partition,
                parameters: param_map(cfg.spinboson.entries()),
                diagnostics,
                spinboson: Some(ws),
            })
        }
        Model::Custom => {
            let path = cfg
                .custom_file
                .as_ref()
                .ok_or_else(|| Error::Config("custom.file not set".into()))?;
            let (space, l, jumps) = custom_liouvillian(path)?;
            let partition = match groups {
                Some(g) => partition_from_groups(&space, g)?,
                None => Partition::basis_states(space.clone())?,
            };
            diagnostics.insert("jumps".into(), json!(jumps));
            diagnostics.insert("trace_preservation_error".into(), json!(l.trace_preservation_error()));
            Ok(Workload {
                liouvillian: l,
                partition,
                parameters: Map::new(),
                diagnostics,
                spinboson: None,
            })
        }
    }
}

/// Files written by a run and its manifest.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub manifest: Value,
}

struct Recorder {
    dir: PathBuf,
    files: Vec<PathBuf>,
    sections: Map<String, Value>,
}

impl Recorder {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            sections: Map::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<PathBuf> {
        let p = self.path(name);
        t.write(&p)?;
        self.files.push(p.clone());
        Ok(p)
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let p = self.path(name);
        output::write_json(&p, v)?;
        self.files.push(p);
        Ok(())
    }

    fn script(&mut self, p: PathBuf) {
        self.files.push(p);
    }

    fn set(&mut self, key: &str, v: Value) {
        self.sections.insert(key.to_string(), v);
    }
}

fn tolerances() -> Value {
    json!({
        "nullity_rel": ness::NULLITY_REL_TOL,
        "ness_residual_rel": ness::RESIDUAL_REL_TOL,
        "state": operator::STATE_TOL,
        "positivity": operator::POSITIVITY_TOL,
        "partition": partition::PARTITION_TOL,
        "eps_pop": partition::EPS_POP,
        "rank_rel": rates::RANK_REL_TOL,
        "imag_rel": rates::IMAG_REL_TOL,
        "structural_zero": dynamics::STRUCTURAL_ZERO_TOL,
        "settle": dynamics::SETTLE_TOL,
        "markov_ratio": dynamics::MARKOV_RATIO,
        "gram_cond_max": dynamics::GRAM_COND_MAX,
        "drift": dynamics::DRIFT_TOL,
    })
}

fn dims(w: &Workload) -> Value {
    let d = w.liouvillian.space().dim();
    json!({
        "hilbert": d,
        "liouville": d * d,
        "components": w.partition.len(),
        "complement": d * d - w.partition.len(),
    })
}

fn c64_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn rates_json(k: &RateMatrix) -> Value {
    let n = k.len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| k.k.row(i).to_vec()).collect();
    json!({
        "names": k.names,
        "k": rows,
        "route": k.route.as_str(),
        "imag_residue": k.imag_residue,
        "rcond": k.rcond,
        "eigenvalues": k.eigenvalues().map(|e| e.into_iter().map(c64_json).collect::<Vec<_>>()).ok(),
    })
}

/// Runs `task` for `cfg`, writing everything under `cfg.output_dir`.
pub fn run(cfg: &RunConfig, task: Task) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut rec = Recorder::new(&cfg.output_dir)?;
    match task {
        Task::Ness => task_ness(cfg, &mut rec)?,
        Task::Rates => task_rates(cfg, &mut rec)?,
        Task::Dynamics => task_dynamics(cfg, &mut rec, false)?,
        Task::Markov => task_dynamics(cfg, &mut rec, true)?,
        Task::Sweep => task_sweep(cfg, &mut rec)?,
    }
    let mut manifest = Map::new();
    manifest.insert("tool".into(), json!(format!("nessrate {}", env!("CARGO_PKG_VERSION"))));
    manifest.insert("task".into(), json!(task.as_str()));
    manifest.insert("model".into(), json!(cfg.model.as_str()));
    manifest.insert("seed".into(), json!(cfg.seed));
    manifest.insert("full_scale".into(), json!(cfg.full_scale));
    manifest.insert("config".into(), json!(cfg.assignments));
    manifest.insert("tolerances".into(), tolerances());
    manifest.insert("threads".into(), json!(rayon::current_num_threads()));
    manifest.extend(std::mem::take(&mut rec.sections));
    manifest.insert(
        "outputs".into(),
        json!(rec
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect::<Vec<_>>()),
    );
    manifest.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    let manifest = Value::Object(manifest);
    let path = rec.path("manifest.json");
    output::write_json(&path, &manifest)?;
    rec.files.push(path);
    Ok(RunOutcome {
        files: rec.files,
        manifest,
    })
}

fn record_model(rec: &mut Recorder, w: &Workload) {
    rec.set("parameters", Value::Object(w.parameters.clone()));
    rec.set("diagnostics", Value::Object(w.diagnostics.clone()));
    rec.set("dims", dims(w));
    rec.set("components", json!(w.partition.names()));
}

fn task_ness(cfg: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let w = build_workload(cfg)?;
    let r = solve_ness(&w.liouvillian)?;
    let pops = w.partition.populations(&r.rho_s)?;
    let mut t = Table::new(["component", "population", "residual", "null_dim", "min_eig"]);
    for (name, p) in w.partition.names().iter().zip(pops.iter()) {
        t.push(vec![
            name.as_str().into(),
            (*p).into(),
            r.residual.into(),
            r.null_dim.into(),
            r.min_eig.into(),
        ])?;
    }
    rec.table("ness.csv", &t)?;
    record_model(rec, &w);
    rec.set(
        "residuals",
        json!({"ness": r.residual, "ness_relative": r.residual / r.l_norm, "null_dim": r.null_dim, "min_eig": r.min_eig}),
    );
    Ok(())
}

fn task_rates(cfg: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let w = build_workload(cfg)?;
    let r = solve_ness(&w.liouvillian)?;
    let lp = LiouvillePartition::new(w.partition.clone(), &r.rho_s)?;
    let k = rate_matrix(&w.liouvillian, &lp, cfg.route)?;
    let other = match cfg.route {
        Route::Direct => Route::LinearSolve,
        _ => Route::Direct,
    };
    let k_other = rate_matrix(&w.liouvillian, &lp, other)?;
    let agreement = k.relative_difference(&k_other);
    let balance = rates::balance_report(&k, lp.steady_populations())?;
    let kp = k.k.dot(lp.steady_populations());

    let mut t = Table::new([
        "to",
        "from",
        "k",
        "route",
        "imag_residue",
        "column_sum_residue",
        "balance_residue",
    ]);
    for (m, to) in k.names.iter().enumerate() {
        for (n, from) in k.names.iter().enumerate() {
            t.push(vec![
                to.as_str().into(),
                from.as_str().into(),
                k.k[[m, n]].into(),
                k.route.as_str().into(),
                k.imag_residue.into(),
                balance.column_sums[n].into(),
                kp[m].into(),
            ])?;
        }
    }
    rec.table("rates.csv", &t)?;
    record_model(rec, &w);
    rec.set(
        "residuals",
        json!({
            "ness": r.residual,
            "ness_relative": r.residual / r.l_norm,
            "null_dim": r.null_dim,
            "column_sum": k.column_sum_residue(),
            "balance_inf": balance.kp_inf,
            "imag_residue": k.imag_residue,
        }),
    );
    rec.set(
        "route_agreement",
        json!({"routes": [k.route.as_str(), other.as_str()], "relative_difference": agreement}),
    );
    rec.set("rates", rates_json(&k));
    rec.set("steady_populations", json!(lp.steady_populations().to_vec()));
    Ok(())
}

enum Initial {
    Vertical(spinboson::VerticalExcitation),
    Mixture(String),
}

fn task_dynamics(cfg: &RunConfig, rec: &mut Recorder, markov: bool) -> Result<()> {
    let w = build_workload(cfg)?;
    let r = solve_ness(&w.liouvillian)?;
    let lp = LiouvillePartition::new(w.partition.clone(), &r.rho_s)?;
    let k = rate_matrix(&w.liouvillian, &lp, cfg.route)?;
    let pre = dynamics::timescales(&w.liouvillian, &k, &lp, None)?;

    let label = match (&cfg.dynamics.initial, cfg.model) {
        (Some(l), _) => l.clone(),
        (None, Model::VSystem) => "1".into(),
        (None, Model::SpinBoson) => "vertical".into(),
        (None, Model::Custom) => return Err(Error::Config("dynamics.initial is required for custom matrices".into())),
    };
    let space = w.liouvillian.space().clone();
    let (rho0, initial) = if label == "vertical" {
        let ws = w
            .spinboson
            .as_ref()
            .ok_or_else(|| Error::Config("initial state 'vertical' needs the spin-boson model".into()))?;
        let ve = spinboson::vertical_excitation(ws, &r.rho_s, cfg.vertical.alpha_dip)?;
        (ve.rho.clone(), Initial::Vertical(ve))
    } else {
        let i = space
            .index_of(&label)
            .ok_or_else(|| Error::Config(format!("dynamics.initial: unknown basis label '{label}'")))?;
        let target = Operator::ket_bra(space.clone(), i, i)?;
        (
            dynamics::perturbed_state(&r.rho_s, &target, cfg.dynamics.eta)?,
            Initial::Mixture(label.clone()),
        )
    };

    // a vertical kick relaxes on vibrational timescales, not on the steady-state ones
    let (t_default, dt_default) = match (&initial, &w.spinboson) {
        (Initial::Vertical(_), Some(ws)) => {
            let t = cfg.vertical.periods * 2.0 * std::f64::consts::PI / ws.params.omega_1.min(ws.params.omega_2);
            (t, t / cfg.vertical.steps as f64)
        }
        _ => {
            let t = 2.0 * pre.t1.max(pre.t2);
            (t, (pre.t1.min(pre.t2) / 10.0).max(t / DEFAULT_MIN_STEPS))
        }
    };
    let t_final = cfg.dynamics.t_final.unwrap_or(t_default);
    let dt = cfg.dynamics.dt.unwrap_or(dt_default);
    if !(t_final.is_finite() && dt.is_finite()) {
        return Err(Error::Config(
            "no finite default time grid; set dynamics.t_final and dynamics.dt".into(),
        ));
    }
    if t_final / dt > MAX_TIME_POINTS as f64 {
        return Err(Error::Config(format!(
            "time grid t_final/dt = {:.3e} exceeds {MAX_TIME_POINTS} points",
            t_final / dt
        )));
    }
    let grid = dynamics::uniform_grid(t_final, dt)?;
    let traj = dynamics::propagate(&w.liouvillian, &rho0, grid.as_slice().unwrap(), &w.partition, false)?;
    let report = dynamics::timescales(&w.liouvillian, &k, &lp, Some(&traj))?;
    let split = dynamics::m_split(&traj, &k)?;

    let names = traj.names.clone();
    let mut header = vec!["t".to_string()];
    for prefix in ["p", "pdot", "m1", "m2"] {
        header.extend(names.iter().map(|n| format!("{prefix}_{n}")));
    }
    let mut t = Table::new(header);
    for (j, &time) in traj.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![time.into()];
        for m in [&traj.p, &traj.pdot, &split.m1, &split.m2] {
            row.extend(m.column(j).iter().map(|&x| Cell::Num(x)));
        }
        t.push(row)?;
    }
    let csv = rec.table("dynamics.csv", &t)?;
    rec.script(output::dynamics_script(&csv, &names)?);

    let mut rep = Map::new();
    rep.insert(
        "timescales".into(),
        json!({
            "kappa1": c64_json(report.kappa1),
            "kappa2": c64_json(report.kappa2),
            "t1": report.t1,
            "t2": report.t2,
            "ts": report.ts,
            "markovian": report.markovian,
        }),
    );
    rep.insert(
        "grid".into(),
        json!({"dt": dt, "t_final": t_final, "points": traj.len()}),
    );
    rep.insert("rates".into(), rates_json(&k));
    match &initial {
        Initial::Vertical(ve) => {
            rep.insert(
                "initial".into(),
                json!({"kind": "vertical", "alpha_dip": cfg.vertical.alpha_dip, "energy": ve.energy,
                       "excited_population": ve.excited_population, "terms": ve.terms}),
            );
            if let Some(right) = names.iter().position(|n| n == "R") {
                let pr = traj.p.row(right).to_vec();
                match spinboson::fit_first_rise(traj.times.as_slice().unwrap(), &pr) {
                    Ok(f) => rep.insert(
                        "first_rise".into(),
                        json!({"rate": f.rate, "plateau": f.plateau, "start": f.start, "end": f.end, "residual": f.residual}),
                    ),
                    Err(e) => rep.insert("first_rise".into(), json!({"error": e.to_string()})),
                };
            }
        }
        Initial::Mixture(l) => {
            rep.insert(
                "initial".into(),
                json!({"kind": "mixture", "target": l, "eta": cfg.dynamics.eta}),
            );
        }
    }
    if markov {
        let window_start = cfg.dynamics.window_start.unwrap_or(report.t2).min(t_final);
        let err = dynamics::relative_error(&traj, &k, window_start, t_final)?;
        let fit = dynamics::fit_rate_matrix(&traj, window_start, t_final);
        let integrated = |m: &Array2<f64>| m.iter().map(|x| x.abs()).sum::<f64>();
        rep.insert(
            "markov".into(),
            json!({
                "window": [window_start, t_final],
                "relative_error": err,
                "integrated_m1": integrated(&split.m1),
                "integrated_m2": integrated(&split.m2),
                "max_ratio": split.ratio.iter().cloned().fold(0.0, f64::max),
            }),
        );
        match fit {
            Ok(kf) => {
                rep.insert("k_fit".into(), rates_json(&kf));
                rep.insert(
                    "eigenvalue_agreement".into(),
                    json!(dynamics::eigenvalue_agreement(&kf, &k).ok()),
                );
            }
            Err(e) => {
                rep.insert("k_fit".into(), json!({"error": e.to_string()}));
            }
        }
    }
    let rep = Value::Object(rep);
    rec.json(if markov { "markov.json" } else { "dynamics.json" }, &rep)?;
    record_model(rec, &w);
    rec.set("residuals", json!({"ness": r.residual, "null_dim": r.null_dim}));
    rec.set("report", rep);
    Ok(())
}

/// Applies one swept V-system key, including the `Delta` and `Gamma` grid axes.
pub fn set_vsystem(p: &mut VParams, key: &str, value: f64) -> Result<()> {
    match key {
        "Delta" => {
            p.eps_2 = p.eps_1 + value;
            Ok(())
        }
        "Gamma" => {
            p.gamma_c2 = value;
            p.gamma_df = value;
            Ok(())
        }
        k => p.set(k, value),
    }
}

fn sweep_points(cfg: &RunConfig) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("task sweep needs sweep.parameter".into()))?;
    let mut keys = vec![sw.primary.key.clone()];
    let mut points = Vec::new();
    match &sw.secondary {
        Some(g2) => {
            keys.push(g2.key.clone());
            for &a in &sw.primary.values {
                for &b in &g2.values {
                    points.push(vec![a, b]);
                }
            }
        }
        None => points.extend(sw.primary.values.iter().map(|&a| vec![a])),
    }
    Ok((keys, points))
}

struct VPoint {
    values: Vec<f64>,
    beta: f64,
    standard: RateMatrix,
    grouped: RateMatrix,
    pops: Vec<f64>,
    residual: f64,
}

fn vsystem_point(cfg: &RunConfig, keys: &[String], values: &[f64]) -> Result<VPoint> {
    let mut p = cfg.vsystem;
    for (k, &v) in keys.iter().zip(values) {
        set_vsystem(&mut p, k, v)?;
    }
    let v = vsystem::build(&p)?;
    let r = solve_ness(&v.liouvillian)?;
    let lps = LiouvillePartition::new(v.standard.clone(), &r.rho_s)?;
    let lpg = LiouvillePartition::new(v.grouped.clone(), &r.rho_s)?;
    Ok(VPoint {
        values: values.to_vec(),
        beta: vsystem::derived(&p, None)?.beta,
        standard: rate_matrix(&v.liouvillian, &lps, cfg.route)?,
        grouped: rate_matrix(&v.liouvillian, &lpg, cfg.route)?,
        pops: lps.steady_populations().to_vec(),
        residual: r.residual,
    })
}

fn task_sweep(cfg: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let (keys, points) = sweep_points(cfg)?;
    let csv_name = "sweep.csv";
    match cfg.model {
        Model::VSystem => {
            let rows: Vec<VPoint> = points
                .par_iter()
                .map(|v| vsystem_point(cfg, &keys, v))
                .collect::<Result<_>>()?;
            let mut header = keys.clone();
            header.extend(
                ["beta", "k21", "k12", "k2A", "kA2", "p_g", "p_1", "p_2", "residual"]
                    .iter()
                    .map(|s| s.to_string()),
            );
            let mut t = Table::new(header);
            let get = |k: &RateMatrix, to: &str, from: &str| k.get(to, from).unwrap_or(f64::NAN);
            let mut max_residual: f64 = 0.0;
            for r in &rows {
                let mut row: Vec<Cell> = r.values.iter().map(|&x| x.into()).collect();
                row.extend(
                    [
                        r.beta,
                        get(&r.standard, "2", "1"),
                        get(&r.standard, "1", "2"),
                        get(&r.grouped, "2", "A"),
                        get(&r.grouped, "A", "2"),
                    ]
                    .map(Cell::Num),
                );
                row.extend(r.pops.iter().map(|&x| Cell::Num(x)));
                row.push(r.residual.into());
                max_residual = max_residual.max(r.residual);
                t.push(row)?;
            }
            let csv = rec.table(csv_name, &t)?;
            if keys.len() == 2 {
                rec.script(output::heatmap_script(&csv, &keys[0], &keys[1], "beta")?);
            } else {
                rec.script(output::loglog_script(&csv, &keys[0], &["k21", "k12", "k2A", "kA2"])?);
            }
            rec.set("parameters", param_map(cfg.vsystem.entries()).into());
            rec.set("dims", json!({"hilbert": 3, "liouville": 9}));
            rec.set("residuals", json!({"ness_max": max_residual}));
        }
        Model::SpinBoson => {
            if keys.len() != 1 {
                return Err(Error::Config("spin-boson sweeps take one parameter".into()));
            }
            let with_three = matches!(&cfg.partition, Some(PartitionSpec::Builtin(b)) if b == "three");
            let values: Vec<f64> = points.iter().map(|v| v[0]).collect();
            let pts = spinboson::sweep(&cfg.spinboson, &keys[0], &values, with_three)?;
            let mut header = vec![keys[0].clone(), "forward".into(), "backward".into(), "p_R".into()];
            if with_three {
                header.extend(["k_1g".to_string(), "k_21".to_string()]);
            }
            header.extend(["dim".to_string(), "residual".to_string(), "route_agreement".to_string()]);
            let mut t = Table::new(header);
            for p in &pts {
                let mut row: Vec<Cell> = vec![p.value.into(), p.forward.into(), p.backward.into(), p.p_right.into()];
                if with_three {
                    row.push(p.k_1g.unwrap_or(f64::NAN).into());
                    row.push(p.k_21.unwrap_or(f64::NAN).into());
                }
                row.extend([Cell::from(p.dim), p.residual.into(), p.route_agreement.into()]);
                t.push(row)?;
            }
            let csv = rec.table(csv_name, &t)?;
            let mut cols = vec!["forward", "backward"];
            if with_three {
                cols.extend(["k_1g", "k_21"]);
            }
            rec.script(output::loglog_script(&csv, &keys[0], &cols)?);
            let slope = spinboson::loglog_slope(&values, &pts.iter().map(|p| p.forward).collect::<Vec<_>>()).ok();
            rec.set("parameters", param_map(cfg.spinboson.entries()).into());
            rec.set(
                "dims",
                json!({"hilbert": pts.iter().map(|p| p.dim).collect::<Vec<_>>()}),
            );
            rec.set(
                "residuals",
                json!({"ness_max": pts.iter().map(|p| p.residual).fold(0.0, f64::max)}),
            );
            rec.set(
                "route_agreement",
                json!({"max_relative_difference": pts.iter().map(|p| p.route_agreement).fold(0.0, f64::max)}),
            );
            rec.set("forward_loglog_slope", json!(slope));
        }
        Model::Custom => return Err(Error::Config("sweeps are not available for custom matrices".into())),
    }
    rec.set("sweep", json!({"parameters": keys, "points": points.len()}));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Assignments;

    #[test]
    fn delta_and_gamma_axes() {
        let mut p = VParams::default();
        set_vsystem(&mut p, "Delta", -0.01).unwrap();
        assert!((p.delta() + 0.01).abs() < 1e-15);
        set_vsystem(&mut p, "Gamma", 1e-3).unwrap();
        assert_eq!((p.gamma_c2, p.gamma_df), (1e-3, 1e-3));
        assert!(set_vsystem(&mut p, "nope", 1.0).is_err());
    }

    #[test]
    fn custom_two_level_ness() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("tls.json");
        fs::write(
            &file,
            r#"{"labels": ["g", "e"], "hamiltonian": {"re": [[0, 0], [0, 0.1]]},
                "jumps": [{"from": "e", "to": "g", "rate": 1e-3}]}"#,
        )
        .unwrap();
        let mut a = Assignments::default();
        a.set("model", "custom-matrices").unwrap();
        a.set("custom.file", file.to_str().unwrap()).unwrap();
        a.set("output_dir", dir.path().join("out").to_str().unwrap()).unwrap();
        let cfg = a.resolve(false).unwrap();
        let out = run(&cfg, Task::Ness).unwrap();
        let text = fs::read_to_string(dir.path().join("out/ness.csv")).unwrap();
        let g: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        assert_eq!(out.manifest["dims"]["hilbert"], 2);

        fs::write(&file, r#"{"labels": ["g"], "hamiltonian": {"re": [[0]]}, "extra": 1}"#).unwrap();
        assert!(build_workload(&cfg).is_err());
    }
}
