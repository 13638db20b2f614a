// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact propagation of the master equation and the Markovian analysis of the
//! resulting population flow.
//!
//! `dp/dt` is split into `M1 = k p`, the part generated by the steady-state
//! rates, and the remainder `M2 = dp/dt - M1`, which carries memory and
//! initial-condition effects.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};
use crate::operator::{vectorize, Operator, SuperOperator};
use crate::partition::{LiouvillePartition, Partition};
use crate::rates::{ComplementSystem, RateMatrix, Route};

/// Eigenvalues with `|Re| <= STRUCTURAL_ZERO_TOL * max |Re|` count as the stationary mode.
pub const STRUCTURAL_ZERO_TOL: f64 = 1e-14;
/// `|p(t) - p_s|_inf` below which the system counts as settled.
pub const SETTLE_TOL: f64 = 1e-6;
/// `t2 / t1` below which the dynamics is classed as Markovian.
pub const MARKOV_RATIO: f64 = 0.1;
/// Largest accepted condition number of the population Gram matrix.
pub const GRAM_COND_MAX: f64 = 1e12;
/// Trace and Hermiticity drift tolerated at the end of a propagation.
pub const DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Array1<f64>,
    /// Populations, one row per component and one column per time.
    pub p: Array2<f64>,
    /// `tr(P_n L[rho(t)])`.
    pub pdot: Array2<f64>,
    pub states: Option<Vec<Operator>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices of the samples with `start <= t <= end`.
    fn window(&self, start: f64, end: f64) -> Result<Vec<usize>> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.times[i] >= start && self.times[i] <= end)
            .collect();
        if idx.len() < 2 {
            return Err(Error::EmptyWindow { start, end });
        }
        Ok(idx)
    }
}

/// `n + 1` evenly spaced times from 0 to `t_final` with spacing close to `dt`.
pub fn uniform_grid(t_final: f64, dt: f64) -> Result<Array1<f64>> {
    if !(t_final > 0.0 && dt > 0.0) || !t_final.is_finite() {
        return Err(Error::Validation(format!("bad grid: t_final {t_final}, dt {dt}")));
    }
    let n = ((t_final / dt).round() as usize).max(1);
    Ok(Array1::linspace(0.0, t_final, n + 1))
}

/// `(1 - eta) rho_s + eta target`.
pub fn perturbed_state(rho_s: &Operator, target: &Operator, eta: f64) -> Result<Operator> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Validation(format!("mixing weight {eta} outside [0, 1]")));
    }
    rho_s.scaled(c(1.0 - eta)).add(&target.scaled(c(eta)))
}

/// `rho(t) = exp(L t) rho0` sampled on `grid`.
///
/// One propagator is formed per distinct step length, so a uniform grid costs a
/// single matrix exponential.
pub fn propagate(
    l: &SuperOperator,
    rho0: &Operator,
    grid: &[f64],
    partition: &Partition,
    keep_states: bool,
) -> Result<Trajectory> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::Validation(
            "time grid must be nonnegative and strictly increasing".into(),
        ));
    }
    if l.space() != partition.space() || l.space() != rho0.space() {
        return Err(Error::Dimension(
            "Liouvillian, state and partition on different spaces".into(),
        ));
    }
    rho0.validate_state()?;
    let n = partition.len();
    let nt = grid.len();
    let pm = partition.projector_columns();
    // tr(P rho) = vec(P)^dag vec(rho); tr(P L rho) = (L^dag vec(P))^dag vec(rho)
    let pm_h = linalg::dagger(&pm);
    let gm_h = pm_h.dot(l.matrix());

    let mut p = Array2::zeros((n, nt));
    let mut pdot = Array2::zeros((n, nt));
    let mut states = keep_states.then(Vec::new);
    let mut v = vectorize(rho0);
    let mut step: Option<(f64, Array2<C64>)> = None;
    let mut t_prev = 0.0;
    for (j, &t) in grid.iter().enumerate() {
        let h = t - t_prev;
        if h > 0.0 {
            let reuse = matches!(&step, Some((h0, _)) if (h - h0).abs() <= 1e-12 * h0);
            if !reuse {
                let lh = l.matrix().mapv(|z| z * h);
                step = Some((h, linalg::expm(&lh)?));
            }
            v = step.as_ref().unwrap().1.dot(&v);
        }
        t_prev = t;
        p.column_mut(j).assign(&pm_h.dot(&v).mapv(|z| z.re));
        pdot.column_mut(j).assign(&gm_h.dot(&v).mapv(|z| z.re));
        if let Some(s) = states.as_mut() {
            s.push(crate::operator::devectorize(&v, l.space().clone())?);
        }
    }

    let last = crate::operator::devectorize(&v, l.space().clone())?;
    let drift = (last.trace() - rho0.trace()).norm().max(last.hermiticity_error());
    if !(drift <= DRIFT_TOL) {
        return Err(Error::PropagationFailed(format!("trace/Hermiticity drift {drift:.3e}")));
    }
    for j in 0..nt {
        let total: f64 = p.column(j).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::PropagationFailed(format!(
                "populations sum to {total} at t = {}",
                grid[j]
            )));
        }
    }
    Ok(Trajectory {
        names: partition.names().to_vec(),
        times: Array1::from(grid.to_vec()),
        p,
        pdot,
        states,
    })
}

/// Markovian term `M1 = k p` and remainder `M2 = dp/dt - M1`.
#[derive(Clone, Debug)]
pub struct MarkovSplit {
    pub m1: Array2<f64>,
    pub m2: Array2<f64>,
    /// `|M2(t)|_inf / |M1(t)|_inf` per sample.
    pub ratio: Array1<f64>,
}

pub fn m_split(traj: &Trajectory, k: &RateMatrix) -> Result<MarkovSplit> {
    if k.names != traj.names {
        return Err(Error::Dimension(
            "rate matrix and trajectory use different partitions".into(),
        ));
    }
    let m1 = k.k.dot(&traj.p);
    let m2 = &traj.pdot - &m1;
    let inf = |a: ndarray::ArrayView1<f64>| a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ratio = Array1::from_shape_fn(traj.len(), |j| {
        let (a, b) = (inf(m1.column(j)), inf(m2.column(j)));
        if a > 0.0 {
            b / a
        } else if b == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    });
    Ok(MarkovSplit { m1, m2, ratio })
}

#[derive(Clone, Debug)]
pub struct TimescaleReport {
    /// Slowest nonzero eigenvalue of `k`.
    pub kappa1: C64,
    /// Slowest eigenvalue of `Q L Q` on `range(Q)`.
    pub kappa2: C64,
    pub t1: f64,
    pub t2: f64,
    /// Time after which populations stay within `SETTLE_TOL` of the steady state.
    pub ts: Option<f64>,
    pub markovian: bool,
}

/// Slowest mode after dropping eigenvalues indistinguishable from zero.
fn slowest(ev: &[C64], drop_zero: bool) -> Result<C64> {
    let scale = ev.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let kept: Vec<C64> = ev
        .iter()
        .copied()
        .filter(|z| !drop_zero || z.re.abs() > STRUCTURAL_ZERO_TOL * scale)
        .collect();
    let top = kept
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::Validation("no nonzero relaxation mode".into()))?;
    if top.re > 0.0 {
        return Err(Error::UnstableGenerator { re: top.re });
    }
    if top.re == 0.0 {
        return Err(Error::Validation("slowest mode does not decay".into()));
    }
    Ok(top)
}

/// First time from which `|p(t) - p_s|_inf <= SETTLE_TOL` holds for the rest of the trajectory.
pub fn settle_time(traj: &Trajectory, p_s: &Array1<f64>) -> Option<f64> {
    let mut ts = None;
    for j in (0..traj.len()).rev() {
        let dev = traj
            .p
            .column(j)
            .iter()
            .zip(p_s.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if dev > SETTLE_TOL {
            break;
        }
        ts = Some(traj.times[j]);
    }
    ts
}

pub fn timescales(
    l: &SuperOperator,
    k: &RateMatrix,
    lp: &LiouvillePartition,
    traj: Option<&Trajectory>,
) -> Result<TimescaleReport> {
    let kappa1 = slowest(&k.eigenvalues()?, true)?;
    let sys = ComplementSystem::new(l, lp)?;
    let kappa2 = slowest(&linalg::eigvals(sys.restricted())?.to_vec(), false)?;
    let t1 = 1.0 / kappa1.re.abs();
    let t2 = 1.0 / kappa2.re.abs();
    Ok(TimescaleReport {
        kappa1,
        kappa2,
        t1,
        t2,
        ts: traj.and_then(|t| settle_time(t, lp.steady_populations())),
        markovian: t2 / t1 < MARKOV_RATIO,
    })
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `2 int |dp/dt - k p| dt / int |dp/dt + k p| dt` over `[start, end]` (Euclidean norm, trapezoid rule).
pub fn relative_error(traj: &Trajectory, k: &RateMatrix, start: f64, end: f64) -> Result<f64> {
    let idx = traj.window(start, end)?;
    let kp = k.k.dot(&traj.p);
    let times: Vec<f64> = idx.iter().map(|&j| traj.times[j]).collect();
    let norm = |sign: f64, j: usize| {
        traj.pdot
            .column(j)
            .iter()
            .zip(kp.column(j).iter())
            .map(|(a, b)| (a + sign * b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let num: Vec<f64> = idx.iter().map(|&j| norm(-1.0, j)).collect();
    let den: Vec<f64> = idx.iter().map(|&j| norm(1.0, j)).collect();
    let den = trapezoid(&times, &den);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * trapezoid(&times, &num) / den)
}

/// `k_fit = (int dp/dt p^T dt) (int p p^T dt)^-1` over `[start, end]`.
pub fn fit_rate_matrix(traj: &Trajectory, start: f64, end: f64) -> Result<RateMatrix> {
    let idx = traj.window(start, end)?;
    let n = traj.names.len();
    let times: Vec<f64> = idx.iter().map(|&j| traj.times[j]).collect();
    let integral = |f: &dyn Fn(usize) -> f64| trapezoid(&times, &idx.iter().map(|&j| f(j)).collect::<Vec<_>>());
    let gram = Array2::from_shape_fn((n, n), |(a, b)| integral(&|j| traj.p[[a, j]] * traj.p[[b, j]]));
    let cross = Array2::from_shape_fn((n, n), |(a, b)| integral(&|j| traj.pdot[[a, j]] * traj.p[[b, j]]));
    let sv = linalg::singular_values_real(&gram)?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= GRAM_COND_MAX) {
        return Err(Error::DegenerateTrajectories { cond });
    }
    let k = cross.dot(&linalg::inverse_real(&gram)?);
    Ok(RateMatrix {
        names: traj.names.clone(),
        k,
        route: Route::Fitted,
        imag_residue: 0.0,
        rcond: Some(1.0 / cond),
    })
}

/// Populations of a trajectory generated exactly by `dp/dt = k p`, used to
/// exercise the analysis on known Markovian data.
pub fn markovian_trajectory(k: &RateMatrix, p0: &Array1<f64>, grid: &[f64]) -> Result<Trajectory> {
    let n = k.len();
    if p0.len() != n {
        return Err(Error::Dimension(format!(
            "{} initial populations for {n} components",
            p0.len()
        )));
    }
    let kc = linalg::to_complex(k.k.view());
    let p0c = p0.mapv(c);
    let mut p = Array2::zeros((n, grid.len()));
    for (j, &t) in grid.iter().enumerate() {
        let e = linalg::expm(&kc.mapv(|z| z * t))?;
        p.column_mut(j).assign(&e.dot(&p0c).mapv(|z| z.re));
    }
    let pdot = k.k.dot(&p);
    Ok(Trajectory {
        names: k.names.clone(),
        times: Array1::from(grid.to_vec()),
        p,
        pdot,
        states: None,
    })
}

/// Largest relative deviation between the nonzero eigenvalues of two rate matrices,
/// matched in order of decreasing real part.
pub fn eigenvalue_agreement(a: &RateMatrix, b: &RateMatrix) -> Result<f64> {
    let (ea, eb) = (a.eigenvalues()?, b.eigenvalues()?);
    let scale = ea.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    Ok(ea
        .iter()
        .zip(eb.iter())
        .filter(|(x, _)| x.norm() > 1e-6 * scale)
        .map(|(x, y)| (x - y).norm() / x.norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ness::solve_ness;
    use crate::operator::{assemble_liouvillian, lindblad_pair, HilbertSpace};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn rates(k: Array2<f64>) -> RateMatrix {
        let names = (0..k.nrows()).map(|i| i.to_string()).collect();
        RateMatrix {
            names,
            k,
            route: Route::LinearSolve,
            imag_residue: 0.0,
            rcond: None,
        }
    }

    fn two_level(gamma: f64) -> (SuperOperator, Partition) {
        let sp = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let h = Operator::from_real(sp.clone(), &ndarray::arr2(&[[0.0, 0.0], [0.0, 0.05]])).unwrap();
        let s = Operator::ket_bra(sp.clone(), 0, 1).unwrap();
        let l = assemble_liouvillian(&h, &[lindblad_pair(&s, gamma, 0.0).unwrap()]).unwrap();
        (l, Partition::basis_states(sp).unwrap())
    }

    #[test]
    fn pure_decay_is_exponential() {
        let gamma = 3e-4;
        let (l, part) = two_level(gamma);
        let rho0 = Operator::ket_bra(part.space().clone(), 1, 1).unwrap();
        let grid = uniform_grid(2e4, 100.0).unwrap();
        let traj = propagate(&l, &rho0, grid.as_slice().unwrap(), &part, false).unwrap();
        for (j, &t) in traj.times.iter().enumerate() {
            assert!((traj.p[[1, j]] - (-gamma * t).exp()).abs() < 1e-9);
            assert!((traj.pdot[[1, j]] + gamma * traj.p[[1, j]]).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        let (l, part) = two_level(1e-3);
        let rho_s = solve_ness(&l).unwrap().rho_s;
        let traj = propagate(&l, &rho_s, &[0.0, 10.0, 500.0, 1e4], &part, true).unwrap();
        for j in 0..traj.len() {
            assert!((traj.p[[0, j]] - 1.0).abs() < 1e-10);
        }
        assert_eq!(traj.states.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn bad_grid_and_window() {
        let (l, part) = two_level(1e-3);
        let rho0 = Operator::ket_bra(part.space().clone(), 1, 1).unwrap();
        assert!(propagate(&l, &rho0, &[0.0, 2.0, 1.0], &part, false).is_err());
        let traj = propagate(&l, &rho0, &[0.0, 1.0, 2.0], &part, false).unwrap();
        let k = rates(ndarray::arr2(&[[0.0, 1e-3], [0.0, -1e-3]]));
        assert!(matches!(
            relative_error(&traj, &k, 5.0, 9.0),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn absorbing_pair_timescale() {
        let k = rates(ndarray::arr2(&[[0.0, 2e-3], [0.0, -2e-3]]));
        let ev = k.eigenvalues().unwrap();
        let top = slowest(&ev, true).unwrap();
        assert!((1.0 / top.re.abs() - 500.0).abs() < 1e-9);
    }

    #[test]
    fn constant_data_has_singular_gram() {
        let k = rates(ndarray::arr2(&[[-1e-3, 2e-3], [1e-3, -2e-3]]));
        let p_s = ndarray::arr1(&[2.0 / 3.0, 1.0 / 3.0]);
        let traj = markovian_trajectory(&k, &p_s, &[0.0, 100.0, 200.0, 300.0]).unwrap();
        assert!(matches!(
            fit_rate_matrix(&traj, 0.0, 300.0),
            Err(Error::DegenerateTrajectories { .. })
        ));
    }

    fn random_rates(raw: &[f64]) -> RateMatrix {
        let n = 3;
        let mut k = Array2::zeros((n, n));
        let mut it = raw.iter();
        for m in 0..n {
            for j in 0..n {
                if m != j {
                    k[[m, j]] = *it.next().unwrap();
                }
            }
        }
        for j in 0..n {
            let s: f64 = k.column(j).sum();
            k[[j, j]] = -s;
        }
        rates(k)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fit_recovers_markovian_generator(raw in proptest::collection::vec(0.1f64..2.0, 6)) {
            let k = random_rates(&raw);
            let p0 = ndarray::arr1(&[1.0, 0.0, 0.0]);
            let grid = uniform_grid(3.0, 1e-3).unwrap();
            let traj = markovian_trajectory(&k, &p0, grid.as_slice().unwrap()).unwrap();
            let fit = fit_rate_matrix(&traj, 0.0, 3.0).unwrap();
            // trapezoid error on both integrals, O(dt^2 |k|^2)
            prop_assert!(fit.relative_difference(&k) < 1e-5);
            prop_assert!(relative_error(&traj, &k, 0.0, 3.0).unwrap() < 1e-14);
            let split = m_split(&traj, &k).unwrap();
            prop_assert!(split.m2 == &traj.pdot - &split.m1);
        }
    }
}
