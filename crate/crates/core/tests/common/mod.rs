// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use ndarray::{s, Array2};
use nessrate::linalg::{self, C64, ONE};
use nessrate::{LiouvillePartition, SuperOperator};

/// Rates from the bordered system
///
/// ```text
/// [ L     -R ] [ y ]   [ 0   ]
/// [ P^dag  0 ] [ k ] = [ e_n ]
/// ```
///
/// with `R = [vec rho_n]`, `P = [vec P_n]`. The solution has `y = rho_n + x_n`
/// with `tr(P_m x_n) = 0` and `Q L y = 0`, so `k` is the rate column. No
/// complement projector or basis of its range is involved.
pub fn bordered_rates(l: &SuperOperator, lp: &LiouvillePartition) -> Array2<f64> {
    let d2 = l.side();
    let n = lp.len();
    let r = lp.component_columns();
    let p = lp.partition().projector_columns();
    let mut m = Array2::<C64>::zeros((d2 + n, d2 + n));
    m.slice_mut(s![..d2, ..d2]).assign(l.matrix());
    m.slice_mut(s![..d2, d2..]).assign(&r.mapv(|z| -z));
    m.slice_mut(s![d2.., ..d2]).assign(&linalg::dagger(&p));
    let mut rhs = Array2::<C64>::zeros((d2 + n, n));
    for j in 0..n {
        rhs[[d2 + j, j]] = ONE;
    }
    let sol = linalg::Lu::new(&m).unwrap().solve_many(&rhs).unwrap();
    sol.slice(s![d2.., ..]).mapv(|z| z.re)
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Max entrywise difference relative to the largest entry of `b`.
pub fn rel_matrix(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}
