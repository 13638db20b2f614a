// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration.
//!
//! A config is a set of flat dotted keys (`vsystem.J`, `spinboson.alpha_att`,
//! `sweep.points`, ...). They may be written as a TOML file, either literally
//! dotted or grouped in tables, and any key can be overridden from the
//! environment as `NESSRATE_<key with '.' replaced by '__'>` (case-insensitive),
//! e.g. `NESSRATE_VSYSTEM__GAMMA_H1=1e-4`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rates::Route;
use crate::spinboson::{SBParams, VeOptions, DESK_CUTOFF_MULTIPLE, FULL_CUTOFF_MULTIPLE, FULL_N_BASIS};
use crate::vsystem::VParams;

pub const ENV_PREFIX: &str = "NESSRATE_";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    VSystem,
    SpinBoson,
    Custom,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::VSystem => "vsystem",
            Model::SpinBoson => "spinboson",
            Model::Custom => "custom-matrices",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Ness,
    Rates,
    Dynamics,
    Markov,
    Sweep,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Ness => "ness",
            Task::Rates => "rates",
            Task::Dynamics => "dynamics",
            Task::Markov => "markov",
            Task::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ness" => Task::Ness,
            "rates" => Task::Rates,
            "dynamics" => Task::Dynamics,
            "markov" => Task::Markov,
            "sweep" => Task::Sweep,
            other => return Err(Error::Config(format!("unknown task '{other}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PartitionSpec {
    /// `standard` / `grouped` for the V-system, `sides` / `three` for the spin-boson
    /// model, `basis` for custom matrices.
    Builtin(String),
    /// Named groups of basis labels.
    Groups(Vec<(String, Vec<String>)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// One swept parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    /// Model parameter name, e.g. `Gamma_H1` or `alpha_att`.
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub primary: Grid,
    pub secondary: Option<Grid>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsSpec {
    /// Weight of the target state in the initial mixture `(1 - eta) rho_s + eta |x><x|`.
    pub eta: f64,
    /// Basis label of the target state.
    pub initial: Option<String>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub window_start: Option<f64>,
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        Self {
            eta: 0.5,
            initial: None,
            dt: None,
            t_final: None,
            window_start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: Model,
    pub task: Option<Task>,
    pub vsystem: VParams,
    pub spinboson: SBParams,
    pub vertical: VeOptions,
    pub custom_file: Option<PathBuf>,
    pub partition: Option<PartitionSpec>,
    pub route: Route,
    pub dynamics: DynamicsSpec,
    pub sweep: Option<SweepSpec>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub full_scale: bool,
    /// Every key that was set, with its final textual value, for the manifest.
    pub assignments: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Bool,
    Str,
    FloatList,
}

/// Raw value before it is applied to the typed config.
#[derive(Clone, Debug, PartialEq)]
enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    List(Vec<f64>),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:e}"),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => s.clone(),
            Value::List(v) => format!("{v:?}"),
        }
    }
}

const GENERAL_KEYS: [(&str, Kind); 6] = [
    ("model", Kind::Str),
    ("task", Kind::Str),
    ("seed", Kind::Int),
    ("output_dir", Kind::Str),
    ("threads", Kind::Int),
    ("full_scale", Kind::Bool),
];

const OTHER_KEYS: [(&str, Kind); 24] = [
    ("spinboson.alpha_dip", Kind::Float),
    ("spinboson.ve_periods", Kind::Float),
    ("spinboson.ve_steps", Kind::Int),
    ("custom.file", Kind::Str),
    ("partition.builtin", Kind::Str),
    ("partition.groups", Kind::Str),
    ("rates.route", Kind::Str),
    ("dynamics.eta", Kind::Float),
    ("dynamics.initial", Kind::Str),
    ("dynamics.dt", Kind::Float),
    ("dynamics.t_final", Kind::Float),
    ("dynamics.window_start", Kind::Float),
    ("sweep.parameter", Kind::Str),
    ("sweep.start", Kind::Float),
    ("sweep.stop", Kind::Float),
    ("sweep.points", Kind::Int),
    ("sweep.scale", Kind::Str),
    ("sweep.values", Kind::FloatList),
    ("sweep.parameter2", Kind::Str),
    ("sweep.start2", Kind::Float),
    ("sweep.stop2", Kind::Float),
    ("sweep.points2", Kind::Int),
    ("sweep.scale2", Kind::Str),
    ("sweep.values2", Kind::FloatList),
];

/// Every accepted key with its type.
fn schema() -> Vec<(String, Kind)> {
    let mut keys: Vec<(String, Kind)> = GENERAL_KEYS.iter().map(|(k, t)| (k.to_string(), *t)).collect();
    keys.extend(VParams::KEYS.iter().map(|k| (format!("vsystem.{k}"), Kind::Float)));
    keys.extend(SBParams::KEYS.iter().map(|k| {
        let kind = if *k == "n_basis" { Kind::Int } else { Kind::Float };
        (format!("spinboson.{k}"), kind)
    }));
    keys.extend(OTHER_KEYS.iter().map(|(k, t)| (k.to_string(), *t)));
    keys
}

/// All accepted keys, for documentation and error messages.
pub fn known_keys() -> Vec<String> {
    schema().into_iter().map(|(k, _)| k).collect()
}

fn kind_of(key: &str) -> Result<Kind> {
    schema()
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, t)| t)
        .ok_or_else(|| Error::Config(format!("unknown key '{key}'")))
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn from_toml(key: &str, v: &toml::Value) -> Result<Value> {
    let kind = kind_of(key)?;
    let bad = || Error::Config(format!("key '{key}' has the wrong type"));
    Ok(match (kind, v) {
        (Kind::Float, toml::Value::Float(x)) => Value::Num(*x),
        (Kind::Float | Kind::Int, toml::Value::Integer(i)) => Value::Num(*i as f64),
        (Kind::Bool, toml::Value::Boolean(b)) => Value::Bool(*b),
        (Kind::Str, toml::Value::String(s)) => Value::Str(s.clone()),
        (Kind::FloatList, toml::Value::Array(a)) => Value::List(
            a.iter()
                .map(|x| match x {
                    toml::Value::Float(f) => Ok(*f),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(bad()),
                })
                .collect::<Result<_>>()?,
        ),
        _ => return Err(bad()),
    })
}

fn from_text(key: &str, text: &str) -> Result<Value> {
    let kind = kind_of(key)?;
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("key '{key}': '{s}' is not a number")))
    };
    Ok(match kind {
        Kind::Float | Kind::Int => Value::Num(num(text)?),
        Kind::Bool => match text.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => Value::Bool(true),
            "0" | "false" | "no" => Value::Bool(false),
            other => return Err(Error::Config(format!("key '{key}': '{other}' is not a boolean"))),
        },
        Kind::Str => Value::Str(text.to_string()),
        Kind::FloatList => Value::List(
            text.trim_matches(|c| c == '[' || c == ']')
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(num)
                .collect::<Result<_>>()?,
        ),
    })
}

fn int_value(key: &str, x: f64) -> Result<u64> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(Error::Config(format!("key '{key}': {x} is not a nonnegative integer")))
    }
}

/// `A=g,1;2=2` into named label groups.
pub fn parse_groups(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    let groups: Vec<(String, Vec<String>)> = text
        .split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            let (name, labels) = g
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("partition group '{g}' is not NAME=label,label")))?;
            let labels: Vec<String> = labels
                .split(',')
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            if name.trim().is_empty() || labels.is_empty() {
                return Err(Error::Config(format!("partition group '{g}' is empty")));
            }
            Ok((name.trim().to_string(), labels))
        })
        .collect::<Result<_>>()?;
    if groups.is_empty() {
        return Err(Error::Config("partition.groups is empty".into()));
    }
    Ok(groups)
}

fn grid(
    key: &str,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<u64>,
    scale: Option<&str>,
) -> Result<Vec<f64>> {
    let (start, stop, points) = match (start, stop, points) {
        (Some(a), Some(b), Some(n)) => (a, b, n as usize),
        _ => {
            return Err(Error::Config(format!(
                "sweep over '{key}' needs start, stop and points (or values)"
            )))
        }
    };
    if points == 0 {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let spacing = match scale.unwrap_or("linear") {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        other => return Err(Error::Config(format!("unknown sweep scale '{other}'"))),
    };
    if points == 1 {
        return Ok(vec![start]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok(match spacing {
        Spacing::Linear => (0..points).map(|i| start + (stop - start) * step(i)).collect(),
        Spacing::Log => {
            if !(start > 0.0 && stop > 0.0) {
                return Err(Error::Config("log-spaced sweep needs positive bounds".into()));
            }
            let (a, b) = (start.log10(), stop.log10());
            (0..points).map(|i| 10f64.powf(a + (b - a) * step(i))).collect()
        }
    })
}

fn check_monotone(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("sweep grid must be finite and strictly monotone".into()));
    }
    Ok(())
}

/// Ordered key/value assignments gathered from the file and the environment.
#[derive(Clone, Debug, Default)]
pub struct Assignments {
    entries: BTreeMap<String, Value>,
}

impl Assignments {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut out = Self::default();
        for (k, v) in flat {
            let value = from_toml(&k, &v)?;
            out.entries.insert(k, value);
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies `NESSRATE_*` variables from an iterator of `(name, value)` pairs.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        let keys = known_keys();
        for (name, text) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let dotted = rest.replace("__", ".");
            let key = keys
                .iter()
                .find(|k| k.eq_ignore_ascii_case(&dotted))
                .ok_or_else(|| Error::Config(format!("unknown key '{dotted}' from environment variable {name}")))?;
            let value = from_text(key, &text)?;
            self.entries.insert(key.clone(), value);
        }
        Ok(())
    }

    /// Sets one key from its textual form.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let value = from_text(key, text)?;
        self.entries.insert(key.to_string(), value);
        Ok(())
    }

    fn num(&self, key: &str) -> Option<f64> {
        match self.entries.get(key) {
            Some(Value::Num(x)) => Some(*x),
            _ => None,
        }
    }

    fn int(&self, key: &str) -> Result<Option<u64>> {
        self.num(key).map(|x| int_value(key, x)).transpose()
    }

    fn string(&self, key: &str) -> Option<&str> {
        match self.entries.get(key) {
            Some(Value::Str(s)) => Some(s),
            _ => None,
        }
    }

    fn list(&self, key: &str) -> Option<&[f64]> {
        match self.entries.get(key) {
            Some(Value::List(v)) => Some(v),
            _ => None,
        }
    }

    fn boolean(&self, key: &str) -> Option<bool> {
        match self.entries.get(key) {
            Some(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    fn sweep_grid(&self, suffix: &str) -> Result<Option<Grid>> {
        let Some(param) = self.string(&format!("sweep.parameter{suffix}")) else {
            for k in ["start", "stop", "points", "scale", "values"] {
                if self.entries.contains_key(&format!("sweep.{k}{suffix}")) {
                    return Err(Error::Config(format!(
                        "sweep.{k}{suffix} set without sweep.parameter{suffix}"
                    )));
                }
            }
            return Ok(None);
        };
        let values = match self.list(&format!("sweep.values{suffix}")) {
            Some(v) => v.to_vec(),
            None => grid(
                param,
                self.num(&format!("sweep.start{suffix}")),
                self.num(&format!("sweep.stop{suffix}")),
                self.int(&format!("sweep.points{suffix}"))?,
                self.string(&format!("sweep.scale{suffix}")),
            )?,
        };
        check_monotone(&values)?;
        let key = param.rsplit('.').next().unwrap_or(param).to_string();
        Ok(Some(Grid { key, values }))
    }

    /// Resolves the assignments into a typed configuration.
    pub fn resolve(&self, full_scale_flag: bool) -> Result<RunConfig> {
        let model = match self.string("model").unwrap_or("vsystem") {
            "vsystem" => Model::VSystem,
            "spinboson" => Model::SpinBoson,
            "custom-matrices" | "custom" => Model::Custom,
            other => return Err(Error::Config(format!("unknown model '{other}'"))),
        };
        let task = self.string("task").map(Task::parse).transpose()?;
        let full_scale = full_scale_flag || self.boolean("full_scale").unwrap_or(false);

        let mut vsystem = VParams::default();
        let mut spinboson = if full_scale {
            SBParams::default()
        } else {
            SBParams::desk()
        };
        for (key, value) in &self.entries {
            if let (Some(k), Value::Num(x)) = (key.strip_prefix("vsystem."), value) {
                vsystem.set(k, *x)?;
            }
            if let Some(k) = key.strip_prefix("spinboson.") {
                if SBParams::KEYS.contains(&k) {
                    if let Value::Num(x) = value {
                        spinboson.set(k, *x)?;
                    }
                }
            }
        }
        if full_scale && !self.entries.contains_key("spinboson.n_basis") {
            spinboson.n_basis = FULL_N_BASIS;
        }
        if !self.entries.contains_key("spinboson.e_cut") {
            let multiple = if full_scale {
                FULL_CUTOFF_MULTIPLE
            } else {
                DESK_CUTOFF_MULTIPLE
            };
            spinboson.e_cut = spinboson.default_cutoff(multiple);
        }
        let mut vertical = VeOptions::default();
        if let Some(a) = self.num("spinboson.alpha_dip") {
            vertical.alpha_dip = a;
        }
        if let Some(p) = self.num("spinboson.ve_periods") {
            vertical.periods = p;
        }
        if let Some(n) = self.int("spinboson.ve_steps")? {
            vertical.steps = n as usize;
        }

        let partition = match (self.string("partition.builtin"), self.string("partition.groups")) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either partition.builtin or partition.groups, not both".into(),
                ))
            }
            (Some(b), None) => Some(PartitionSpec::Builtin(b.to_string())),
            (None, Some(g)) => Some(PartitionSpec::Groups(parse_groups(g)?)),
            (None, None) => None,
        };
        let route: Route = self.string("rates.route").unwrap_or("linear-solve").parse()?;
        if route == Route::Fitted {
            return Err(Error::Config("rates.route must be direct or linear-solve".into()));
        }

        let mut dynamics = DynamicsSpec::default();
        if let Some(e) = self.num("dynamics.eta") {
            dynamics.eta = e;
        }
        dynamics.initial = self.string("dynamics.initial").map(str::to_string);
        dynamics.dt = self.num("dynamics.dt");
        dynamics.t_final = self.num("dynamics.t_final");
        dynamics.window_start = self.num("dynamics.window_start");

        let sweep = match self.sweep_grid("")? {
            Some(primary) => Some(SweepSpec {
                primary,
                secondary: self.sweep_grid("2")?,
            }),
            None => {
                if self.sweep_grid("2")?.is_some() {
                    return Err(Error::Config("sweep.parameter2 without sweep.parameter".into()));
                }
                None
            }
        };
        let config = RunConfig {
            model,
            task,
            vsystem,
            spinboson,
            vertical,
            custom_file: self.string("custom.file").map(PathBuf::from),
            partition,
            route,
            dynamics,
            sweep,
            output_dir: PathBuf::from(self.string("output_dir").unwrap_or("nessrate-out")),
            seed: self.int("seed")?.unwrap_or(0),
            threads: self.int("threads")?.map(|t| t as usize),
            full_scale,
            assignments: self.entries.iter().map(|(k, v)| (k.clone(), v.render())).collect(),
        };
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    /// Model-level checks that need the whole configuration.
    pub fn validate(&self) -> Result<()> {
        match self.model {
            Model::VSystem => self.vsystem.validate()?,
            Model::SpinBoson => self.spinboson.validate()?,
            Model::Custom => {
                if self.custom_file.is_none() {
                    return Err(Error::Config("model custom-matrices needs custom.file".into()));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.dynamics.eta) {
            return Err(Error::Config(format!(
                "dynamics.eta = {} outside [0, 1]",
                self.dynamics.eta
            )));
        }
        for (k, v) in [
            ("dynamics.dt", self.dynamics.dt),
            ("dynamics.t_final", self.dynamics.t_final),
        ] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::Config(format!("{k} = {x} must be positive")));
                }
            }
        }
        if let Some(PartitionSpec::Builtin(b)) = &self.partition {
            let allowed: &[&str] = match self.model {
                Model::VSystem => &["standard", "grouped"],
                Model::SpinBoson => &["sides", "three"],
                Model::Custom => &["basis"],
            };
            if !allowed.contains(&b.as_str()) {
                return Err(Error::Config(format!(
                    "partition '{b}' not available for {} (choose from {allowed:?})",
                    self.model.as_str()
                )));
            }
        }
        if let Some(sw) = &self.sweep {
            for g in std::iter::once(&sw.primary).chain(sw.secondary.as_ref()) {
                let ok = match self.model {
                    Model::VSystem => {
                        VParams::KEYS.contains(&g.key.as_str()) || ["Delta", "Gamma"].contains(&g.key.as_str())
                    }
                    Model::SpinBoson => SBParams::KEYS.contains(&g.key.as_str()) && g.key != "n_basis",
                    Model::Custom => false,
                };
                if !ok {
                    return Err(Error::Config(format!(
                        "cannot sweep '{}' for model {}",
                        g.key,
                        self.model.as_str()
                    )));
                }
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// Loads a config file (optional), applies environment overrides, and resolves it.
pub fn load(path: Option<&Path>, full_scale: bool) -> Result<RunConfig> {
    let mut a = match path {
        Some(p) => Assignments::from_file(p)?,
        None => Assignments::default(),
    };
    a.apply_env(std::env::vars())?;
    a.resolve(full_scale)
}
