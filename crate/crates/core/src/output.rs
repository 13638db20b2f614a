// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV tables, plot scripts and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One CSV cell. Numbers are written with 17 significant digits.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Full double precision in scientific notation.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension(format!(
                "row has {} cells, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Header of a CSV file on disk.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    Ok(r.headers().map_err(csv_err)?.iter().map(str::to_string).collect())
}

fn require_columns(path: &Path, columns: &[&str]) -> Result<Vec<String>> {
    let header = read_header(path)?;
    for c in columns {
        if !header.iter().any(|h| h == c) {
            return Err(Error::MissingColumn {
                column: c.to_string(),
                file: path.display().to_string(),
            });
        }
    }
    Ok(header)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

const SCRIPT_HEAD: &str = r#"#!/usr/bin/env python3
# Generated by nessrate. Reads only the CSV next to this script.
import csv
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name), newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


"#;

const HEATMAP: &str = r#"d = load("@CSV@")
X, Y, Z = "@X@", "@Y@", "@Z@"
xs = sorted(set(d[X]))
ys = sorted(set(d[Y]))
grid = [[float("nan")] * len(xs) for _ in ys]
for a, b, v in zip(d[X], d[Y], d[Z]):
    grid[ys.index(b)][xs.index(a)] = v
ylabel = Y
if min(ys) > 0 and max(ys) / min(ys) > 100:
    ys = [math.log10(y) for y in ys]
    ylabel = "log10 " + Y
fig, ax = plt.subplots(figsize=(6, 4.5))
mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", norm=matplotlib.colors.LogNorm())
ax.set_xlabel(X)
ax.set_ylabel(ylabel)
fig.colorbar(mesh, ax=ax, label=Z)
fig.tight_layout()
fig.savefig(os.path.join(HERE, Z + "_heatmap.png"), dpi=150)
"#;

const LOGLOG: &str = r#"d = load("@CSV@")
X = "@X@"
fig, ax = plt.subplots(figsize=(6, 4.5))
for col in [@COLS@]:
    pts = [(a, abs(b)) for a, b in zip(d[X], d[col]) if a > 0 and b == b and b != 0]
    ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=col)
ax.set_xlabel(X)
ax.set_ylabel("rate (1/a.u. time)")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "rates_loglog.png"), dpi=150)
"#;

const DYNAMICS: &str = r#"d = load("@CSV@")
t = d["t"]
fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
for n in [@COLS@]:
    top.plot(t, d["p_" + n], label="p_" + n)
    (line,) = bottom.plot(t, d["m1_" + n], label="M1_" + n)
    bottom.plot(t, d["m2_" + n], "--", color=line.get_color(), label="M2_" + n)
if len(t) > 1:
    top.set_xscale("symlog", linthresh=t[1])
top.set_ylabel("population")
top.legend()
bottom.set_xlabel("t (a.u.)")
bottom.set_ylabel("dp/dt terms")
bottom.legend(ncol=2, fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "dynamics.png"), dpi=150)
"#;

fn quoted(names: &[&str]) -> String {
    names.iter().map(|n| format!("\"{n}\"")).collect::<Vec<_>>().join(", ")
}

fn fill(template: &str, csv_path: &Path, pairs: &[(&str, &str)]) -> String {
    let mut body = template.replace("@CSV@", &file_name(csv_path));
    for (k, v) in pairs {
        body = body.replace(k, v);
    }
    format!("{SCRIPT_HEAD}{body}")
}

/// Heatmap of `z` over the grid spanned by columns `x` and `y`.
pub fn heatmap_script(csv_path: &Path, x: &str, y: &str, z: &str) -> Result<PathBuf> {
    require_columns(csv_path, &[x, y, z])?;
    let body = fill(HEATMAP, csv_path, &[("@X@", x), ("@Y@", y), ("@Z@", z)]);
    write_script(csv_path, &format!("plot_{z}_heatmap.py"), &body)
}

/// Log-log lines of each `ys` column against `x`.
pub fn loglog_script(csv_path: &Path, x: &str, ys: &[&str]) -> Result<PathBuf> {
    let mut cols = vec![x];
    cols.extend_from_slice(ys);
    require_columns(csv_path, &cols)?;
    let body = fill(LOGLOG, csv_path, &[("@X@", x), ("@COLS@", &quoted(ys))]);
    write_script(csv_path, "plot_rates_loglog.py", &body)
}

/// Populations on top, rate terms `M1`/`M2` below, one line per component.
pub fn dynamics_script(csv_path: &Path, components: &[String]) -> Result<PathBuf> {
    let mut cols = vec!["t".to_string()];
    for n in components {
        cols.extend([format!("p_{n}"), format!("m1_{n}"), format!("m2_{n}")]);
    }
    require_columns(csv_path, &cols.iter().map(String::as_str).collect::<Vec<_>>())?;
    let names: Vec<&str> = components.iter().map(String::as_str).collect();
    let body = fill(DYNAMICS, csv_path, &[("@COLS@", &quoted(&names))]);
    write_script(csv_path, "plot_dynamics.py", &body)
}

fn write_script(csv_path: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let dir = csv_path.parent().unwrap_or(Path::new("."));
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
