// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Hilbert-space partitions and the Liouville-space projectors built from them.
//!
//! A component `n` is a Hermitian idempotent `P_n`. Given a steady state the
//! renormalized component is `rho_n = P_n rho_s P_n / tr(P_n rho_s)` and the
//! Liouville projector is the rank-one map `B -> rho_n tr(P_n B)`.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, eye, C64, ZERO};
use crate::operator::{vectorize, HilbertSpace, Operator, SuperOperator};

/// Tolerance for the partition axioms.
pub const PARTITION_TOL: f64 = 1e-10;
/// Smallest steady population a component may carry.
pub const EPS_POP: f64 = 1e-12;

/// A validated complete set of orthogonal projectors.
#[derive(Clone, Debug)]
pub struct Partition {
    space: Arc<HilbertSpace>,
    projectors: Vec<Operator>,
    names: Vec<String>,
}

impl Partition {
    /// Checks Hermiticity, completeness and orthogonality of the projectors.
    pub fn validate(projectors: Vec<Operator>, names: Vec<String>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::Validation("partition needs at least one projector".into()))?;
        if names.len() != projectors.len() {
            return Err(Error::Validation(format!(
                "{} names for {} projectors",
                names.len(),
                projectors.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Validation(format!("duplicate component name '{n}'")));
            }
        }
        let space = first.space().clone();
        for p in &projectors {
            p.check_space(&space)?;
        }
        for (p, name) in projectors.iter().zip(&names) {
            let herm = p.hermiticity_error();
            if herm > PARTITION_TOL {
                return Err(Error::Validation(format!(
                    "projector '{name}' not Hermitian: {herm:.3e}"
                )));
            }
        }

        let d = space.dim();
        let mut sum: Array2<C64> = Array2::zeros((d, d));
        for p in &projectors {
            sum += p.matrix();
        }
        let residual = linalg::max_abs_diff(&sum, &eye(d));
        if residual > PARTITION_TOL {
            return Err(Error::IncompletePartition { residual });
        }

        for (m, pm) in projectors.iter().enumerate() {
            for (n, pn) in projectors.iter().enumerate() {
                let prod = pm.matrix().dot(pn.matrix());
                let residual = if m == n {
                    linalg::max_abs_diff(&prod, pn.matrix())
                } else {
                    linalg::max_abs(&prod)
                };
                if residual > PARTITION_TOL {
                    return Err(Error::OverlappingComponents { m, n, residual });
                }
            }
        }

        Ok(Self {
            space,
            projectors,
            names,
        })
    }

    /// Partition whose components are sums of basis states, given by label.
    pub fn from_label_groups(space: Arc<HilbertSpace>, groups: &[(&str, Vec<&str>)]) -> Result<Self> {
        let mut projectors = Vec::with_capacity(groups.len());
        let mut names = Vec::with_capacity(groups.len());
        for (name, labels) in groups {
            projectors.push(Operator::projector_onto(space.clone(), labels)?);
            names.push(name.to_string());
        }
        Self::validate(projectors, names)
    }

    /// One component per basis state, named after its label.
    pub fn basis_states(space: Arc<HilbertSpace>) -> Result<Self> {
        let labels: Vec<String> = space.labels().to_vec();
        let groups: Vec<(&str, Vec<&str>)> = labels.iter().map(|l| (l.as_str(), vec![l.as_str()])).collect();
        Self::from_label_groups(space, &groups)
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `p_n = tr(P_n rho)`.
    pub fn populations(&self, rho: &Operator) -> Result<Array1<f64>> {
        rho.check_space(&self.space)?;
        let scale = 1.0 + rho.trace().norm();
        let mut p = Array1::zeros(self.len());
        for (n, proj) in self.projectors.iter().enumerate() {
            let z = trace_product(proj.matrix(), rho.matrix());
            if z.im.abs() > 1e-12 * scale {
                return Err(Error::Validation(format!(
                    "population of '{}' has imaginary part {:.3e}",
                    self.names[n], z.im
                )));
            }
            p[n] = z.re;
        }
        Ok(p)
    }

    /// Columns `vec(P_n)`; `vec(P_n)^dag vec(B) = tr(P_n B)` for Hermitian `P_n`.
    pub fn projector_columns(&self) -> Array2<C64> {
        let d2 = self.space.dim() * self.space.dim();
        let mut m = Array2::zeros((d2, self.len()));
        for (n, p) in self.projectors.iter().enumerate() {
            m.column_mut(n).assign(&vectorize(p));
        }
        m
    }
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let mut s = ZERO;
    for ((i, j), &aij) in a.indexed_iter() {
        s += aij * b[[j, i]];
    }
    s
}

/// A partition tied to a steady state.
#[derive(Clone, Debug)]
pub struct LiouvillePartition {
    partition: Partition,
    steady_components: Vec<Operator>,
    steady_populations: Array1<f64>,
}

impl LiouvillePartition {
    pub fn new(partition: Partition, rho_s: &Operator) -> Result<Self> {
        let steady_populations = partition.populations(rho_s)?;
        let mut steady_components = Vec::with_capacity(partition.len());
        for (n, p) in partition.projectors().iter().enumerate() {
            let pop = steady_populations[n];
            if !(pop > EPS_POP) {
                return Err(Error::DegenerateComponent {
                    name: partition.names()[n].clone(),
                    population: pop,
                });
            }
            let m = p.matrix().dot(rho_s.matrix()).dot(p.matrix()).mapv(|z| z / pop);
            steady_components.push(Operator::new(partition.space().clone(), linalg::hermitize(&m))?);
        }
        Ok(Self {
            partition,
            steady_components,
            steady_populations,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn names(&self) -> &[String] {
        self.partition.names()
    }

    /// The renormalized steady components `rho_n`.
    pub fn steady_components(&self) -> &[Operator] {
        &self.steady_components
    }

    pub fn steady_populations(&self) -> &Array1<f64> {
        &self.steady_populations
    }

    /// Columns `vec(rho_n)`.
    pub fn component_columns(&self) -> Array2<C64> {
        let d = self.partition.space().dim();
        let mut m = Array2::zeros((d * d, self.len()));
        for (n, r) in self.steady_components.iter().enumerate() {
            m.column_mut(n).assign(&vectorize(r));
        }
        m
    }

    /// Rank-one Liouville projector `vec(rho_n) vec(P_n)^dag`.
    pub fn pi(&self, n: usize) -> Result<SuperOperator> {
        if n >= self.len() {
            return Err(Error::Dimension(format!("component {n} out of range")));
        }
        let r = vectorize(&self.steady_components[n]);
        let p = vectorize(&self.partition.projectors()[n]);
        let m = Array2::from_shape_fn((r.len(), p.len()), |(i, j)| r[i] * p[j].conj());
        SuperOperator::new(self.partition.space().clone(), m)
    }

    /// Complement `Q = I - sum_n Pi_n`.
    pub fn complement(&self) -> Result<SuperOperator> {
        let r = self.component_columns();
        let p = self.partition.projector_columns();
        let d2 = r.nrows();
        let m = eye(d2) - r.dot(&linalg::dagger(&p));
        SuperOperator::new(self.partition.space().clone(), m)
    }

    /// `Pi_n[B] = rho_n tr(P_n B)`, evaluated without the superoperator.
    pub fn apply_pi(&self, n: usize, b: &Operator) -> Result<Operator> {
        let t = trace_product(self.partition.projectors()[n].matrix(), b.matrix());
        Ok(self.steady_components[n].scaled(t))
    }

    /// `Q[B] = B - sum_n Pi_n[B]`.
    pub fn apply_complement(&self, b: &Operator) -> Result<Operator> {
        let mut out = b.clone();
        for n in 0..self.len() {
            out = out.sub(&self.apply_pi(n, b)?)?;
        }
        Ok(out)
    }
}
