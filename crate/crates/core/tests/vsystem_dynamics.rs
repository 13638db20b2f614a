// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::rel;
use nessrate::dynamics::{self, Trajectory};
use nessrate::vsystem::{self, VParams};
use nessrate::{rate_matrix, solve_ness, LiouvillePartition, Operator, RateMatrix, Route};

struct Run {
    k: RateMatrix,
    traj: Trajectory,
    report: dynamics::TimescaleReport,
}

fn run(p: &VParams, dt: f64) -> Run {
    let v = vsystem::build(p).unwrap();
    let rho_s = solve_ness(&v.liouvillian).unwrap().rho_s;
    let lp = LiouvillePartition::new(v.standard.clone(), &rho_s).unwrap();
    let k = rate_matrix(&v.liouvillian, &lp, Route::LinearSolve).unwrap();
    let pre = dynamics::timescales(&v.liouvillian, &k, &lp, None).unwrap();
    let excited = Operator::ket_bra(v.space.clone(), 1, 1).unwrap();
    let rho0 = dynamics::perturbed_state(&rho_s, &excited, 0.5).unwrap();
    let t_f = 2.0 * pre.t1.max(pre.t2);
    let grid = dynamics::uniform_grid(t_f, dt).unwrap();
    let traj = dynamics::propagate(&v.liouvillian, &rho0, grid.as_slice().unwrap(), &v.standard, false).unwrap();
    let report = dynamics::timescales(&v.liouvillian, &k, &lp, Some(&traj)).unwrap();
    Run { k, traj, report }
}

#[test]
fn reference_timescales() {
    let r = run(&VParams::default(), 7e4);
    assert!(rel(r.report.t1, 4.0e8) < 0.05, "t1 = {}", r.report.t1);
    assert!(rel(r.report.t2, 6.6e5) < 0.05, "t2 = {}", r.report.t2);
    assert!(r.report.markovian);
    assert!(r.report.t2 / r.report.t1 < 2e-3);
    // settling from a half-excited start takes many slow lifetimes
    assert!(r.report.ts.is_none_or(|ts| ts > r.report.t1));
}

#[test]
fn strong_coupling_timescales() {
    let p = VParams {
        j: 0.02,
        ..VParams::default()
    };
    let r = run(&p, 2e3);
    assert!(rel(r.report.kappa2.re, -3.3e-6) < 0.05, "kappa2 = {}", r.report.kappa2);
    assert!(rel(r.report.t2, 3.0e5) < 0.05);
    assert!(rel(r.report.t1, 1.4e5) < 0.05, "t1 = {}", r.report.t1);
    assert!(!r.report.markovian);
}

#[test]
fn populations_conserved_and_relax_monotonically() {
    let r = run(&VParams::default(), 7e4);
    let n = r.traj.len();
    for j in 0..n {
        assert!((r.traj.p.column(j).sum() - 1.0).abs() < 1e-9);
    }
    // the perturbed excited population decays without oscillation
    let p1 = r.traj.p.row(1);
    assert!(p1.windows(2).into_iter().all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn remainder_negligible_after_fast_relaxation() {
    let r = run(&VParams::default(), 7e4);
    let split = dynamics::m_split(&r.traj, &r.k).unwrap();
    assert!(split.m2 == &r.traj.pdot - &split.m1);
    for (j, &t) in r.traj.times.iter().enumerate() {
        if t >= 3.0 * r.report.t2 {
            assert!(split.ratio[j] < 0.05, "t = {t}, ratio = {}", split.ratio[j]);
        }
    }
}

#[test]
fn strong_coupling_remainder_dominates() {
    let p = VParams {
        j: 0.02,
        ..VParams::default()
    };
    let r = run(&p, 2e3);
    let split = dynamics::m_split(&r.traj, &r.k).unwrap();
    // M1 and M2 both pass through zero as the populations oscillate, so the
    // pointwise ratio dips below 1 at isolated samples
    let above = split.ratio.iter().filter(|&&x| x > 1.0).count() as f64 / r.traj.len() as f64;
    assert!(above > 0.95, "fraction {above}");
    let n1: f64 = split.m1.iter().map(|x| x.abs()).sum();
    let n2: f64 = split.m2.iter().map(|x| x.abs()).sum();
    assert!(n2 > 10.0 * n1);
}

#[test]
fn relative_error_and_fit() {
    let r = run(&VParams::default(), 7e4);
    let t_f = *r.traj.times.last().unwrap();
    let err = dynamics::relative_error(&r.traj, &r.k, r.report.t2, t_f).unwrap();
    assert!(err > 0.0 && err < 0.1);
    // later windows see less of the non-Markovian transient
    let later = dynamics::relative_error(&r.traj, &r.k, 5.0 * r.report.t2, t_f).unwrap();
    assert!(later < err);

    let fit = dynamics::fit_rate_matrix(&r.traj, r.report.t2, t_f).unwrap();
    let ev = fit.eigenvalues().unwrap();
    let slow = r.k.eigenvalues().unwrap()[1];
    assert!(rel(ev[2].re, slow.re) < 0.1 || rel(ev[1].re, slow.re) < 0.1, "{ev:?}");

    let strong = run(
        &VParams {
            j: 0.02,
            ..VParams::default()
        },
        2e3,
    );
    let t_f = *strong.traj.times.last().unwrap();
    let err = dynamics::relative_error(&strong.traj, &strong.k, strong.report.t2, t_f).unwrap();
    assert!(rel(err, 2.0) < 0.3, "relative error {err}");
}
