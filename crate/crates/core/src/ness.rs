// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Steady-state solver.
//!
//! One scalar equation of `L vec(rho) = 0` is redundant for a trace-preserving
//! generator (the diagonal rows sum to zero), so row 0 is replaced by the
//! trace functional and the square system is solved directly.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{self, Lu, C64, ONE, ZERO};
use crate::operator::{devectorize, vectorize, Operator, SuperOperator, POSITIVITY_TOL};

/// Singular values below this fraction of the largest count toward the nullity.
pub const NULLITY_REL_TOL: f64 = 1e-10;
/// Accepted `|L vec(rho_s)| / sigma_max(L)`.
pub const RESIDUAL_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct NessResult {
    pub rho_s: Operator,
    /// `|L vec(rho_s)|_2`.
    pub residual: f64,
    pub null_dim: usize,
    pub min_eig: f64,
    /// Largest singular value of `L`.
    pub l_norm: f64,
}

/// Numerical nullity of a superoperator and its largest singular value.
pub fn nullity(l: &SuperOperator) -> Result<(usize, f64)> {
    let sv = linalg::singular_values(l.matrix())?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok((sv.len(), 0.0));
    }
    Ok((sv.iter().filter(|&&s| s <= NULLITY_REL_TOL * smax).count(), smax))
}

pub fn solve_ness(l: &SuperOperator) -> Result<NessResult> {
    let (null_dim, l_norm) = nullity(l)?;
    if null_dim != 1 {
        return Err(Error::SteadyStateNotUnique { null_dim });
    }
    let d = l.space().dim();
    let mut a = l.matrix().clone();
    let trace_row = vectorize(&Operator::identity(l.space().clone()));
    a.row_mut(0).assign(&trace_row.mapv(|z| z.conj()));
    let mut b: Array1<C64> = Array1::from_elem(d * d, ZERO);
    b[0] = ONE;
    let x = Lu::new(&a)?.solve(&b)?;

    let rho = devectorize(&x, l.space().clone())?.hermitized();
    let tr = rho.trace().re;
    let rho_s = rho.scaled(C64::new(1.0 / tr, 0.0));

    let residual = linalg::vector_norm(&l.apply_vec(&vectorize(&rho_s)));
    if residual > RESIDUAL_REL_TOL * l_norm {
        return Err(Error::Linalg(format!(
            "steady-state residual {residual:.3e} exceeds {:.3e}",
            RESIDUAL_REL_TOL * l_norm
        )));
    }
    let min_eig = rho_s.min_eigenvalue()?;
    if min_eig < POSITIVITY_TOL {
        return Err(Error::NonPhysicalSteadyState { min_eig });
    }
    Ok(NessResult {
        rho_s,
        residual,
        null_dim,
        min_eig,
        l_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_liouvillian, lindblad_pair, HilbertSpace};
    use ndarray::Array2;
    use std::sync::Arc;

    #[test]
    fn decay_to_dark_ground_state() {
        let sp = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let h = Operator::from_real(sp.clone(), &ndarray::arr2(&[[0.0, 0.0], [0.0, 0.3]])).unwrap();
        let s = Operator::ket_bra(sp.clone(), 0, 1).unwrap();
        let l = assemble_liouvillian(&h, &[lindblad_pair(&s, 1e-3, 0.0).unwrap()]).unwrap();
        let res = solve_ness(&l).unwrap();
        let expected = Operator::ket_bra(sp, 0, 0).unwrap();
        assert!(linalg::max_abs_diff(res.rho_s.matrix(), expected.matrix()) < 1e-12);
        assert_eq!(res.null_dim, 1);
        assert_eq!(res.rho_s.trace(), ONE);
    }

    #[test]
    fn pure_hamiltonian_is_not_unique() {
        let sp = Arc::new(HilbertSpace::with_dim(3).unwrap());
        let h = Operator::from_real(sp, &Array2::from_diag(&ndarray::arr1(&[0.0, 0.1, 0.35]))).unwrap();
        let l = assemble_liouvillian(&h, &[]).unwrap();
        match solve_ness(&l) {
            Err(Error::SteadyStateNotUnique { null_dim }) => assert_eq!(null_dim, 3),
            other => panic!("expected non-unique steady state, got {other:?}"),
        }
    }

    #[test]
    fn thermal_two_level_populations() {
        // single bath with occupation n: p_e / p_g = n / (n + 1)
        let sp = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let h = Operator::from_real(sp.clone(), &ndarray::arr2(&[[0.0, 0.0], [0.0, 0.02]])).unwrap();
        let s = Operator::ket_bra(sp, 0, 1).unwrap();
        let n = 0.37;
        let l = assemble_liouvillian(&h, &[lindblad_pair(&s, 2e-6, n).unwrap()]).unwrap();
        let rho = solve_ness(&l).unwrap().rho_s;
        let ratio = rho.matrix()[[1, 1]].re / rho.matrix()[[0, 0]].re;
        assert!((ratio - n / (n + 1.0)).abs() < 1e-12);
        assert!(rho.matrix()[[0, 1]].norm() < 1e-14);
    }
}
