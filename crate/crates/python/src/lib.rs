// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Matrices cross the boundary as nested lists.

use std::sync::Arc;

use ndarray::Array2;
use nessrate::config::{Assignments, Task};
use nessrate::dynamics;
use nessrate::linalg::C64;
use nessrate::spinboson::{self, SBParams, SBWorkspace, VeOptions};
use nessrate::vsystem::{self, VParams};
use nessrate::{
    assemble_liouvillian, lindblad_pair, rate_matrix, runner, solve_ness, Error, HilbertSpace, LiouvillePartition,
    Operator, Partition, Route, SuperOperator,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Dimension(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn route(name: &str) -> PyResult<Route> {
    name.parse().map_err(py_err)
}

fn kwargs(params: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<(String, f64)>> {
    let mut out = Vec::new();
    if let Some(d) = params {
        for (k, v) in d.iter() {
            out.push((k.extract::<String>()?, v.extract::<f64>()?));
        }
    }
    Ok(out)
}

fn matrix(rows: Vec<Vec<Complex64>>, d: usize, what: &str) -> PyResult<Array2<C64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err(format!("{what} must be {d}x{d}")));
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| rows[i][j]))
}

fn rows(m: &Array2<C64>) -> Vec<Vec<Complex64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

/// Population rate matrix; `k[m][n]` is the rate from component `n` into `m`.
#[pyclass(name = "RateMatrix", module = "nessrate", frozen)]
struct PyRateMatrix {
    inner: nessrate::RateMatrix,
}

#[pymethods]
impl PyRateMatrix {
    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names.clone()
    }

    #[getter]
    fn k(&self) -> Vec<Vec<f64>> {
        self.inner.k.outer_iter().map(|r| r.to_vec()).collect()
    }

    #[getter]
    fn route(&self) -> &'static str {
        self.inner.route.as_str()
    }

    #[getter]
    fn imag_residue(&self) -> f64 {
        self.inner.imag_residue
    }

    /// Rate from `src` into `dst`.
    fn get(&self, dst: &str, src: &str) -> PyResult<f64> {
        self.inner
            .get(dst, src)
            .ok_or_else(|| PyKeyError::new_err(format!("no component pair ({dst}, {src})")))
    }

    fn eigenvalues(&self) -> PyResult<Vec<Complex64>> {
        self.inner.eigenvalues().map_err(py_err)
    }

    fn column_sum_residue(&self) -> f64 {
        self.inner.column_sum_residue()
    }

    fn relative_difference(&self, other: &PyRateMatrix) -> f64 {
        self.inner.relative_difference(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("RateMatrix(names={:?}, route={})", self.inner.names, self.inner.route)
    }
}

/// Steady state, partition and rates for one Liouvillian.
fn steady_rates(l: &SuperOperator, part: &Partition, route_name: &str) -> PyResult<(PyRateMatrix, Vec<f64>)> {
    let rho = solve_ness(l).map_err(py_err)?.rho_s;
    let lp = LiouvillePartition::new(part.clone(), &rho).map_err(py_err)?;
    let k = rate_matrix(l, &lp, route(route_name)?).map_err(py_err)?;
    Ok((PyRateMatrix { inner: k }, lp.steady_populations().to_vec()))
}

fn ness_dict<'py>(py: Python<'py>, l: &SuperOperator, part: &Partition) -> PyResult<Bound<'py, PyDict>> {
    let r = solve_ness(l).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("rho", rows(r.rho_s.matrix()))?;
    d.set_item("residual", r.residual)?;
    d.set_item("null_dim", r.null_dim)?;
    d.set_item("min_eig", r.min_eig)?;
    d.set_item("components", part.names().to_vec())?;
    d.set_item("populations", part.populations(&r.rho_s).map_err(py_err)?.to_vec())?;
    Ok(d)
}

/// Three-level V-system; keyword arguments override the default parameter set.
#[pyclass(name = "VSystem", module = "nessrate", frozen)]
struct PyVSystem {
    inner: vsystem::VSystem,
}

#[pymethods]
impl PyVSystem {
    #[new]
    #[pyo3(signature = (**params))]
    fn new(params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = VParams::default();
        for (k, v) in kwargs(params)? {
            p.set(&k, v).map_err(py_err)?;
        }
        Ok(Self {
            inner: vsystem::build(&p).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        VParams::KEYS.to_vec()
    }

    #[getter]
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in self.inner.params.entries() {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn liouvillian(&self) -> Vec<Vec<Complex64>> {
        rows(self.inner.liouvillian.matrix())
    }

    #[pyo3(signature = (partition = "standard"))]
    fn ness<'py>(&self, py: Python<'py>, partition: &str) -> PyResult<Bound<'py, PyDict>> {
        ness_dict(py, &self.inner.liouvillian, self.partition(partition)?)
    }

    /// Rate matrix for the `standard` (g, 1, 2) or `grouped` (A = g+1, 2) partition.
    #[pyo3(signature = (partition = "standard", route = "linear-solve"))]
    fn rates(&self, partition: &str, route: &str) -> PyResult<PyRateMatrix> {
        Ok(steady_rates(&self.inner.liouvillian, self.partition(partition)?, route)?.0)
    }

    /// Closed-form `(k21, k12)` for the standard partition.
    fn analytic_rates(&self) -> PyResult<(f64, f64)> {
        vsystem::analytic_rates_standard(&self.inner.params).map_err(py_err)
    }

    fn beta(&self) -> PyResult<f64> {
        Ok(vsystem::derived(&self.inner.params, None).map_err(py_err)?.beta)
    }

    /// Slowest population and complement timescales.
    fn timescales<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let l = &self.inner.liouvillian;
        let rho = solve_ness(l).map_err(py_err)?.rho_s;
        let lp = LiouvillePartition::new(self.inner.standard.clone(), &rho).map_err(py_err)?;
        let k = rate_matrix(l, &lp, Route::LinearSolve).map_err(py_err)?;
        let r = dynamics::timescales(l, &k, &lp, None).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("kappa1", r.kappa1)?;
        d.set_item("kappa2", r.kappa2)?;
        d.set_item("t1", r.t1)?;
        d.set_item("t2", r.t2)?;
        d.set_item("markovian", r.markovian)?;
        Ok(d)
    }

    /// Populations after starting from `(1 - eta) rho_s + eta |target><target|`,
    /// with the relative error of the rate equation over `[window_start, t_final]`.
    #[pyo3(signature = (dt, t_final, eta = 0.5, target = "1", window_start = 0.0))]
    fn trajectory<'py>(
        &self,
        py: Python<'py>,
        dt: f64,
        t_final: f64,
        eta: f64,
        target: &str,
        window_start: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let v = &self.inner;
        let rho = solve_ness(&v.liouvillian).map_err(py_err)?.rho_s;
        let lp = LiouvillePartition::new(v.standard.clone(), &rho).map_err(py_err)?;
        let k = rate_matrix(&v.liouvillian, &lp, Route::LinearSolve).map_err(py_err)?;
        let i = v
            .space
            .index_of(target)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown label '{target}'")))?;
        let x = Operator::ket_bra(v.space.clone(), i, i).map_err(py_err)?;
        let rho0 = dynamics::perturbed_state(&rho, &x, eta).map_err(py_err)?;
        let grid = dynamics::uniform_grid(t_final, dt).map_err(py_err)?;
        let traj = py
            .detach(|| dynamics::propagate(&v.liouvillian, &rho0, grid.as_slice().unwrap(), &v.standard, false))
            .map_err(py_err)?;
        let err = dynamics::relative_error(&traj, &k, window_start, t_final).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("t", traj.times.to_vec())?;
        d.set_item("names", traj.names.clone())?;
        d.set_item("p", traj.p.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>())?;
        d.set_item("relative_error", err)?;
        Ok(d)
    }
}

impl PyVSystem {
    fn partition(&self, name: &str) -> PyResult<&Partition> {
        match name {
            "standard" => Ok(&self.inner.standard),
            "grouped" => Ok(&self.inner.grouped),
            other => Err(PyValueError::new_err(format!("unknown partition '{other}'"))),
        }
    }
}

/// Truncated two-diabat spin-boson workspace.
#[pyclass(name = "SpinBoson", module = "nessrate", frozen)]
struct PySpinBoson {
    inner: SBWorkspace,
}

#[pymethods]
impl PySpinBoson {
    /// Desk-scale truncation unless `full_scale`; keyword arguments override parameters.
    #[new]
    #[pyo3(signature = (full_scale = false, **params))]
    fn new(py: Python<'_>, full_scale: bool, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let p = sb_params(full_scale, kwargs(params)?)?;
        let inner = py.detach(|| spinboson::build_truncated(&p)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        SBParams::KEYS.to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_left(&self) -> usize {
        self.inner.n_left
    }

    #[getter]
    fn q_x(&self) -> f64 {
        self.inner.q_x
    }

    #[getter]
    fn e_cut(&self) -> f64 {
        self.inner.params.e_cut
    }

    #[pyo3(signature = (partition = "sides"))]
    fn ness<'py>(&self, py: Python<'py>, partition: &str) -> PyResult<Bound<'py, PyDict>> {
        ness_dict(py, &self.inner.liouvillian, self.partition(partition)?)
    }

    /// Rate matrix for the `sides` (L, R) or `three` (g, 1, 2) partition.
    #[pyo3(signature = (partition = "sides", route = "linear-solve"))]
    fn rates(&self, py: Python<'_>, partition: &str, route: &str) -> PyResult<PyRateMatrix> {
        let part = self.partition(partition)?;
        let l = &self.inner.liouvillian;
        Ok(py.detach(|| steady_rates(l, part, route))?.0)
    }
}

impl PySpinBoson {
    fn partition(&self, name: &str) -> PyResult<&Partition> {
        match name {
            "sides" => Ok(&self.inner.sides),
            "three" => Ok(&self.inner.three),
            other => Err(PyValueError::new_err(format!("unknown partition '{other}'"))),
        }
    }
}

fn sb_params(full_scale: bool, overrides: Vec<(String, f64)>) -> PyResult<SBParams> {
    let mut p = if full_scale {
        SBParams::default()
    } else {
        SBParams::desk()
    };
    let mut cut_set = false;
    for (k, v) in overrides {
        cut_set |= k == "e_cut";
        p.set(&k, v).map_err(py_err)?;
    }
    if !cut_set {
        let multiple = if full_scale {
            spinboson::FULL_CUTOFF_MULTIPLE
        } else {
            spinboson::DESK_CUTOFF_MULTIPLE
        };
        p.e_cut = p.default_cutoff(multiple);
    }
    Ok(p)
}

/// Steady-state spin-boson rates over a grid of one parameter, in grid order.
#[pyfunction]
#[pyo3(signature = (key, values, three = false, full_scale = false, **params))]
fn spinboson_sweep<'py>(
    py: Python<'py>,
    key: &str,
    values: Vec<f64>,
    three: bool,
    full_scale: bool,
    params: Option<&Bound<'py, PyDict>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let p = sb_params(full_scale, kwargs(params)?)?;
    let pts = py
        .detach(|| spinboson::sweep(&p, key, &values, three))
        .map_err(py_err)?;
    pts.iter()
        .map(|pt| {
            let d = PyDict::new(py);
            d.set_item(key, pt.value)?;
            d.set_item("forward", pt.forward)?;
            d.set_item("backward", pt.backward)?;
            d.set_item("p_R", pt.p_right)?;
            d.set_item("k_1g", pt.k_1g)?;
            d.set_item("k_21", pt.k_21)?;
            d.set_item("dim", pt.dim)?;
            Ok(d)
        })
        .collect()
}

/// Transfer rate fitted after a vertical excitation of the dark steady state.
#[pyfunction]
#[pyo3(signature = (alpha_dip = spinboson::DEFAULT_DIPOLE, full_scale = false, **params))]
fn vertical_excitation_rate<'py>(
    py: Python<'py>,
    alpha_dip: f64,
    full_scale: bool,
    params: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = sb_params(full_scale, kwargs(params)?)?;
    let opts = VeOptions {
        alpha_dip,
        ..VeOptions::default()
    };
    let ve = py
        .detach(|| spinboson::vertical_excitation_rate(&p, &opts))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("rate", ve.fit.rate)?;
    d.set_item("plateau", ve.fit.plateau)?;
    d.set_item("fit_residual", ve.fit.residual)?;
    d.set_item("energy", ve.excitation.energy)?;
    d.set_item("excited_population", ve.excitation.excited_population)?;
    d.set_item("t", ve.times.to_vec())?;
    d.set_item("p_R", ve.p_right.to_vec())?;
    Ok(d)
}

/// A network from explicit matrices.
///
/// `jumps` is a list of `(operator, rate, n)`; each adds the thermal pair
/// `rate (n + 1) D[S] + rate n D[S^dag]`.
#[pyclass(name = "Network", module = "nessrate", frozen)]
struct PyNetwork {
    space: Arc<HilbertSpace>,
    liouvillian: SuperOperator,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (labels, hamiltonian, jumps = Vec::new()))]
    fn new(
        labels: Vec<String>,
        hamiltonian: Vec<Vec<Complex64>>,
        jumps: Vec<(Vec<Vec<Complex64>>, f64, f64)>,
    ) -> PyResult<Self> {
        let space = Arc::new(HilbertSpace::new(labels).map_err(py_err)?);
        let d = space.dim();
        let h = Operator::new(space.clone(), matrix(hamiltonian, d, "hamiltonian")?).map_err(py_err)?;
        let diss = jumps
            .into_iter()
            .map(|(s, rate, n)| {
                let s = Operator::new(space.clone(), matrix(s, d, "jump operator")?).map_err(py_err)?;
                lindblad_pair(&s, rate, n).map_err(py_err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        let liouvillian = assemble_liouvillian(&h, &diss).map_err(py_err)?;
        Ok(Self { space, liouvillian })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.space.labels().to_vec()
    }

    fn liouvillian(&self) -> Vec<Vec<Complex64>> {
        rows(self.liouvillian.matrix())
    }

    fn trace_preservation_error(&self) -> f64 {
        self.liouvillian.trace_preservation_error()
    }

    /// Steady state with populations per group (one group per basis state by default).
    #[pyo3(signature = (groups = None))]
    fn ness<'py>(&self, py: Python<'py>, groups: Option<Vec<(String, Vec<String>)>>) -> PyResult<Bound<'py, PyDict>> {
        let part = self.partition(groups)?;
        ness_dict(py, &self.liouvillian, &part)
    }

    /// Rate matrix between named groups of basis labels.
    #[pyo3(signature = (groups = None, route = "linear-solve"))]
    fn rates(&self, groups: Option<Vec<(String, Vec<String>)>>, route: &str) -> PyResult<PyRateMatrix> {
        let part = self.partition(groups)?;
        Ok(steady_rates(&self.liouvillian, &part, route)?.0)
    }
}

impl PyNetwork {
    fn partition(&self, groups: Option<Vec<(String, Vec<String>)>>) -> PyResult<Partition> {
        match groups {
            None => Partition::basis_states(self.space.clone()).map_err(py_err),
            Some(g) => {
                let g: Vec<(&str, Vec<&str>)> = g
                    .iter()
                    .map(|(n, ls)| (n.as_str(), ls.iter().map(String::as_str).collect()))
                    .collect();
                Partition::from_label_groups(self.space.clone(), &g).map_err(py_err)
            }
        }
    }
}

/// Coherence contribution `J^2 G / (G^2 + Delta^2)`.
#[pyfunction]
fn beta(j: f64, gamma_star: f64, delta: f64) -> PyResult<f64> {
    vsystem::beta(j, gamma_star, delta).map_err(py_err)
}

/// Runs one CLI task from a dict of dotted config keys; returns the manifest as JSON text.
#[pyfunction]
#[pyo3(signature = (task, config, full_scale = false))]
fn run(py: Python<'_>, task: &str, config: &Bound<'_, PyDict>, full_scale: bool) -> PyResult<String> {
    let task = match task {
        "ness" => Task::Ness,
        "rates" => Task::Rates,
        "dynamics" => Task::Dynamics,
        "markov" => Task::Markov,
        "sweep" => Task::Sweep,
        other => return Err(PyValueError::new_err(format!("unknown task '{other}'"))),
    };
    let mut a = Assignments::default();
    for (k, v) in config.iter() {
        let key: String = k.extract()?;
        let text: String = v.str()?.extract()?;
        a.set(&key, &text).map_err(py_err)?;
    }
    let cfg = a.resolve(full_scale).map_err(py_err)?;
    let out = py.detach(|| runner::run(&cfg, task)).map_err(py_err)?;
    Ok(out.manifest.to_string())
}

#[pymodule]
fn _nessrate(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyRateMatrix>()?;
    m.add_class::<PyVSystem>()?;
    m.add_class::<PySpinBoson>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(spinboson_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(vertical_excitation_rate, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
