// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Steady-state rate matrices.
//!
//! For component `n` the rate column is
//!
//! ```text
//! k_mn = tr{ P_m L (rho_n + x_n) },   Q L Q x_n = -Q L rho_n,   x_n in range(Q)
//! ```
//!
//! `range(Q)` is the common kernel of the trace functionals `tr(P_n .)`, so an
//! orthonormal basis for it comes from a Householder QR of the `D x N` matrix
//! `[vec P_1 ... vec P_N]`: with `U^dag [vec P] = [R; 0]` the trailing `D - N`
//! columns of `U` span `range(Q)`. `U` is applied as reflectors and never formed.

use std::fmt;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::linalg::{self, Lu, C64, ZERO};
use crate::operator::SuperOperator;
use crate::partition::LiouvillePartition;

/// Relative cutoff for rank decisions and for the restricted-operator condition estimate.
pub const RANK_REL_TOL: f64 = 1e-12;
/// Largest tolerated imaginary residue relative to `max |k|`.
pub const IMAG_REL_TOL: f64 = 1e-10;
const REFINE_MAX_STEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Explicit inverse of the restricted complement operator.
    Direct,
    /// LU solves, one per component.
    LinearSolve,
    /// Least-squares fit to a population trajectory.
    Fitted,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::LinearSolve => "linear-solve",
            Route::Fitted => "fitted",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Route::Direct),
            "linear-solve" => Ok(Route::LinearSolve),
            "fitted" => Ok(Route::Fitted),
            other => Err(Error::Config(format!("unknown route '{other}'"))),
        }
    }
}

/// Population rate matrix; `k[[m, n]]` is the rate from `n` into `m`.
#[derive(Clone, Debug)]
pub struct RateMatrix {
    pub names: Vec<String>,
    pub k: Array2<f64>,
    pub route: Route,
    pub imag_residue: f64,
    /// Reciprocal condition estimate of the restricted complement operator.
    pub rcond: Option<f64>,
}

impl RateMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.k.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn get(&self, to: &str, from: &str) -> Option<f64> {
        let m = self.names.iter().position(|n| n == to)?;
        let n = self.names.iter().position(|n| n == from)?;
        Some(self.k[[m, n]])
    }

    /// `max_n |sum_m k_mn|`.
    pub fn column_sum_residue(&self) -> f64 {
        self.k.axis_iter(Axis(1)).map(|c| c.sum().abs()).fold(0.0, f64::max)
    }

    /// Eigenvalues sorted by real part, largest first.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let mut ev = linalg::eigvals_real(&self.k)?.to_vec();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        Ok(ev)
    }

    /// `max |a - b| / max |a|` over entries.
    pub fn relative_difference(&self, other: &RateMatrix) -> f64 {
        let scale = self.max_abs();
        let diff = self
            .k
            .iter()
            .zip(other.k.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Product of Householder reflectors `U = H_1 H_2 ... H_N`, `H_j = I - tau_j v_j v_j^dag`.
#[derive(Clone, Debug)]
struct Reflectors {
    vs: Vec<Array1<C64>>,
    taus: Vec<f64>,
}

impl Reflectors {
    /// Factors `a = U [R; 0]` and returns the reflectors with the `N x N` block `R`.
    fn qr(a: &Array2<C64>) -> Result<(Self, Array2<C64>)> {
        let (rows, cols) = a.dim();
        let mut work = a.clone();
        let mut vs = Vec::with_capacity(cols);
        let mut taus = Vec::with_capacity(cols);
        for j in 0..cols {
            let x = work.slice(s![j.., j]).to_owned();
            let norm = linalg::vector_norm(&x);
            let mut v = Array1::zeros(rows);
            if norm == 0.0 {
                vs.push(v);
                taus.push(0.0);
                continue;
            }
            let phase = if x[0].norm() == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                x[0] / x[0].norm()
            };
            let alpha = -phase * norm;
            v.slice_mut(s![j..]).assign(&x);
            v[j] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let tau = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            apply_reflector_left(&mut work, &v, tau);
            vs.push(v);
            taus.push(tau);
        }
        let r = work.slice(s![..cols, ..]).to_owned();
        Ok((Self { vs, taus }, r))
    }

    /// `X <- U^dag X`.
    fn adjoint_left(&self, x: &mut Array2<C64>) {
        for (v, &tau) in self.vs.iter().zip(&self.taus) {
            apply_reflector_left(x, v, tau);
        }
    }

    /// `X <- X U`.
    fn right(&self, x: &mut Array2<C64>) {
        for (v, &tau) in self.vs.iter().zip(&self.taus) {
            apply_reflector_right(x, v, tau);
        }
    }

    /// `x <- U x`.
    fn left_vec(&self, x: &mut Array1<C64>) {
        for (v, &tau) in self.vs.iter().zip(&self.taus).rev() {
            let dot: C64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
            x.scaled_add(-dot * tau, v);
        }
    }
}

fn apply_reflector_left(x: &mut Array2<C64>, v: &Array1<C64>, tau: f64) {
    if tau == 0.0 {
        return;
    }
    // w = v^dag X, X -= tau v w
    let vc = v.mapv(|z| z.conj());
    let w = vc.dot(&*x);
    for (i, vi) in v.iter().enumerate() {
        if *vi == ZERO {
            continue;
        }
        let f = vi * tau;
        x.row_mut(i).scaled_add(-f, &w);
    }
}

fn apply_reflector_right(x: &mut Array2<C64>, v: &Array1<C64>, tau: f64) {
    if tau == 0.0 {
        return;
    }
    // w = X v, X -= tau w v^dag
    let w = x.dot(v);
    for (j, vj) in v.iter().enumerate() {
        if *vj == ZERO {
            continue;
        }
        let f = vj.conj() * tau;
        x.column_mut(j).scaled_add(-f, &w);
    }
}

/// `Q L Q` restricted to `range(Q)` together with what the rate formula needs.
#[derive(Clone, Debug)]
pub struct ComplementSystem {
    names: Vec<String>,
    n: usize,
    reflectors: Reflectors,
    r_qr: Array2<C64>,
    /// Leading `N` rows of `U^dag L U`.
    lt_top: Array2<C64>,
    /// `U^dag L U vec(rho_n)` columns.
    ell: Array2<C64>,
    /// `U^dag vec(rho_n)` trailing rows.
    rt_bottom: Array2<C64>,
    restricted: Array2<C64>,
}

impl ComplementSystem {
    pub fn new(l: &SuperOperator, lp: &LiouvillePartition) -> Result<Self> {
        if l.space() != lp.partition().space() {
            return Err(Error::Dimension("Liouvillian and partition on different spaces".into()));
        }
        let n = lp.len();
        let d2 = l.side();
        let pm = lp.partition().projector_columns();
        let (reflectors, r_qr) = Reflectors::qr(&pm)?;
        let rmax = (0..n).map(|j| r_qr[[j, j]].norm()).fold(0.0, f64::max);
        for j in 0..n {
            if r_qr[[j, j]].norm() <= RANK_REL_TOL * rmax {
                return Err(Error::Validation(format!(
                    "projector '{}' is linearly dependent on the others",
                    lp.names()[j]
                )));
            }
        }

        let mut lt = l.matrix().clone();
        reflectors.adjoint_left(&mut lt);
        reflectors.right(&mut lt);
        let mut rt = lp.component_columns();
        reflectors.adjoint_left(&mut rt);
        let ell = lt.dot(&rt);

        let l_bb = lt.slice(s![n.., n..]);
        let l_tb = lt.slice(s![..n, n..]);
        let rt_b = rt.slice(s![n.., ..]);
        let coupling = rt_b.dot(&linalg::dagger(&r_qr));
        let restricted = &l_bb - &coupling.dot(&l_tb);
        debug_assert_eq!(restricted.nrows(), d2 - n);

        Ok(Self {
            names: lp.names().to_vec(),
            n,
            reflectors,
            r_qr,
            lt_top: lt.slice(s![..n, ..]).to_owned(),
            ell,
            rt_bottom: rt_b.to_owned(),
            restricted,
        })
    }

    /// Matrix of `Q L Q` in an orthonormal basis of `range(Q)`.
    pub fn restricted(&self) -> &Array2<C64> {
        &self.restricted
    }

    pub fn complement_dim(&self) -> usize {
        self.restricted.nrows()
    }

    /// Coordinates of `-Q L vec(rho_n)` in the `range(Q)` basis, one column per component.
    fn rhs(&self) -> Array2<C64> {
        let ell_t = self.ell.slice(s![..self.n, ..]);
        let ell_b = self.ell.slice(s![self.n.., ..]);
        let proj = self.rt_bottom.dot(&linalg::dagger(&self.r_qr)).dot(&ell_t);
        (&proj - &ell_b).to_owned()
    }

    /// Solves the restricted systems; returns coordinates `y_n` and the condition estimate.
    pub fn solve(&self, route: Route) -> Result<(Array2<C64>, f64)> {
        let b = self.rhs();
        if self.complement_dim() == 0 {
            return Ok((b, 1.0));
        }
        let lu = Lu::new(&self.restricted).map_err(|_| Error::ComplementSingular { rcond: 0.0 })?;
        let rcond = lu.rcond()?;
        if !(rcond >= RANK_REL_TOL) {
            return Err(Error::ComplementSingular { rcond });
        }
        let y = match route {
            Route::LinearSolve => self.refine(lu.solve_many(&b)?, &b, |r| lu.solve_many(r))?,
            Route::Direct => {
                let inv = lu.inverse()?;
                self.refine(inv.dot(&b), &b, |r| Ok(inv.dot(r)))?
            }
            Route::Fitted => {
                return Err(Error::Validation(
                    "fitted rates come from trajectories, not the complement solve".into(),
                ))
            }
        };
        Ok((y, rcond))
    }

    /// Iterative refinement with the route's own solver. The rates come from a
    /// near-cancelling sum over `y`, so the residual of the restricted system,
    /// not just its backward error, sets their accuracy.
    fn refine(
        &self,
        mut y: Array2<C64>,
        b: &Array2<C64>,
        solve: impl Fn(&Array2<C64>) -> Result<Array2<C64>>,
    ) -> Result<Array2<C64>> {
        let norm = |a: &Array2<C64>| a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for _ in 0..REFINE_MAX_STEPS {
            let r = b - &self.restricted.dot(&y);
            let dy = solve(&r)?;
            y += &dy;
            if norm(&dy) <= 4.0 * f64::EPSILON * norm(&y) {
                break;
            }
        }
        Ok(y)
    }

    /// Full-space vector `x_n = U [0; y_n]`.
    pub fn embed(&self, y: ArrayView1<C64>) -> Array1<C64> {
        let mut x = Array1::zeros(self.n + y.len());
        x.slice_mut(s![self.n..]).assign(&y);
        self.reflectors.left_vec(&mut x);
        x
    }

    pub fn rate_matrix(&self, route: Route) -> Result<RateMatrix> {
        let (y, rcond) = self.solve(route)?;
        let ell_t = self.ell.slice(s![..self.n, ..]);
        let l_tb = self.lt_top.slice(s![.., self.n..]);
        let inner = &ell_t + &l_tb.dot(&y);
        let kc = linalg::dagger(&self.r_qr).dot(&inner);
        let k = kc.mapv(|z| z.re);
        let imag_residue = kc.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        let scale = k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if imag_residue > IMAG_REL_TOL * scale {
            return Err(Error::NonRealRate {
                residue: imag_residue,
                bound: IMAG_REL_TOL * scale,
            });
        }
        Ok(RateMatrix {
            names: self.names.clone(),
            k,
            route,
            imag_residue,
            rcond: Some(rcond),
        })
    }
}

/// `x_n` with `Q L Q x_n = -Q L rho_n`, as a full-space vectorized operator.
pub fn qlq_restricted_solve(l: &SuperOperator, lp: &LiouvillePartition, n: usize) -> Result<Array1<C64>> {
    if n >= lp.len() {
        return Err(Error::Dimension(format!("component {n} out of range")));
    }
    let sys = ComplementSystem::new(l, lp)?;
    let (y, _) = sys.solve(Route::LinearSolve)?;
    Ok(sys.embed(y.column(n)))
}

pub fn rate_matrix(l: &SuperOperator, lp: &LiouvillePartition, route: Route) -> Result<RateMatrix> {
    ComplementSystem::new(l, lp)?.rate_matrix(route)
}

/// Balance diagnostics of a rate matrix against steady populations.
#[derive(Clone, Debug)]
pub struct BalanceReport {
    /// `|k p_s|_inf`.
    pub kp_inf: f64,
    pub column_sums: Vec<f64>,
    /// `flux[[m, n]] = k_mn p_n - k_nm p_m`, the net flow from `n` to `m`.
    pub pair_flux: Array2<f64>,
}

impl BalanceReport {
    /// Largest pairwise net flux; zero under detailed balance.
    pub fn max_pair_flux(&self) -> f64 {
        self.pair_flux.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn balance_report(k: &RateMatrix, p_s: &Array1<f64>) -> Result<BalanceReport> {
    let n = k.len();
    if p_s.len() != n {
        return Err(Error::Dimension(format!(
            "{} populations for {n} components",
            p_s.len()
        )));
    }
    let kp = k.k.dot(p_s);
    let kp_inf = kp.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let column_sums = k.k.axis_iter(Axis(1)).map(|c| c.sum()).collect();
    let pair_flux = Array2::from_shape_fn((n, n), |(a, b)| k.k[[a, b]] * p_s[b] - k.k[[b, a]] * p_s[a]);
    Ok(BalanceReport {
        kp_inf,
        column_sums,
        pair_flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, eye};
    use crate::ness::solve_ness;
    use crate::operator::{assemble_liouvillian, lindblad_pair, vectorize, HilbertSpace, Operator};
    use crate::partition::Partition;
    use std::sync::Arc;

    #[test]
    fn householder_basis_spans_trace_kernel() {
        let a = ndarray::arr2(&[
            [c(1.0), c(0.0)],
            [C64::new(0.0, 1.0), c(1.0)],
            [c(0.0), c(2.0)],
            [c(1.0), C64::new(-1.0, 0.5)],
        ]);
        let (refl, r) = Reflectors::qr(&a).unwrap();
        // U [R; 0] reproduces a
        let mut full = Array2::zeros((4, 2));
        full.slice_mut(s![..2, ..]).assign(&r);
        for j in 0..2 {
            let mut col = full.column(j).to_owned();
            refl.left_vec(&mut col);
            full.column_mut(j).assign(&col);
        }
        assert!(linalg::max_abs_diff(&full, &a) < 1e-14);
        // U^dag U = I
        let mut u = eye(4);
        refl.right(&mut u);
        let mut uu = u.clone();
        refl.adjoint_left(&mut uu);
        assert!(linalg::max_abs_diff(&uu, &eye(4)) < 1e-14);
    }

    fn two_level_equilibrium(n: f64) -> (SuperOperator, LiouvillePartition) {
        let sp = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let h = Operator::from_real(sp.clone(), &ndarray::arr2(&[[0.0, 0.0], [0.0, 0.01]])).unwrap();
        let s = Operator::ket_bra(sp.clone(), 0, 1).unwrap();
        let l = assemble_liouvillian(&h, &[lindblad_pair(&s, 1e-6, n).unwrap()]).unwrap();
        let rho = solve_ness(&l).unwrap().rho_s;
        let lp = LiouvillePartition::new(Partition::basis_states(sp).unwrap(), &rho).unwrap();
        (l, lp)
    }

    #[test]
    fn equilibrium_two_level_rates_and_detailed_balance() {
        let n = 0.4;
        let (l, lp) = two_level_equilibrium(n);
        let k = rate_matrix(&l, &lp, Route::LinearSolve).unwrap();
        // k_eg = Gamma n, k_ge = Gamma (n + 1)
        assert!((k.k[[1, 0]] - 1e-6 * n).abs() < 1e-18);
        assert!((k.k[[0, 1]] - 1e-6 * (n + 1.0)).abs() < 1e-18);
        let rep = balance_report(&k, lp.steady_populations()).unwrap();
        assert!(rep.max_pair_flux() < 1e-20);
        assert!(rep.kp_inf < 1e-20);
    }

    #[test]
    fn single_component_has_zero_rate() {
        let (l, lp) = two_level_equilibrium(0.2);
        let all = Partition::from_label_groups(lp.partition().space().clone(), &[("all", vec!["g", "e"])]).unwrap();
        let rho = solve_ness(&l).unwrap().rho_s;
        let lp1 = LiouvillePartition::new(all, &rho).unwrap();
        let k = rate_matrix(&l, &lp1, Route::Direct).unwrap();
        assert_eq!(k.k.dim(), (1, 1));
        assert!(k.k[[0, 0]].abs() < 1e-20);
        let x = qlq_restricted_solve(&l, &lp1, 0).unwrap();
        // Q[rho_s] vanishes for a single component, and so does x_1
        assert!(linalg::vector_norm(&x) < 1e-12);
        let q = lp1.complement().unwrap();
        assert!(linalg::vector_norm(&q.apply_vec(&vectorize(&rho))) < 1e-14);
    }

    #[test]
    fn routes_parse_and_print() {
        for r in [Route::Direct, Route::LinearSolve, Route::Fitted] {
            assert_eq!(r.as_str().parse::<Route>().unwrap(), r);
        }
        assert!("bogus".parse::<Route>().is_err());
    }

    #[test]
    fn fitted_route_is_not_a_complement_solve() {
        let (l, lp) = two_level_equilibrium(0.2);
        assert!(rate_matrix(&l, &lp, Route::Fitted).is_err());
    }
}
