// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Hilbert-space operators, column-stacked vectorization and Lindblad
//! superoperator assembly.
//!
//! Vectorization stacks columns: entry (i, j) of a `d x d` matrix lands at
//! index `j * d + i`. Under this convention `vec(A X B) = (B^T ⊗ A) vec(X)`,
//! which is how every generator below is built.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, c, dagger, eye, kron, C64, I, ONE, ZERO};

/// Hermiticity and unit-trace tolerance for states.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = -1e-8;

/// A finite labeled basis, optionally a row-major tensor product of named factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    labels: Vec<String>,
    factors: Option<Vec<(String, usize)>>,
}

impl HilbertSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Validation("Hilbert space needs at least one state".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Validation(format!("duplicate basis label '{l}'")));
            }
        }
        Ok(Self { labels, factors: None })
    }

    /// Unnamed basis `0, 1, ..., dim-1`.
    pub fn with_dim(dim: usize) -> Result<Self> {
        Self::new((0..dim).map(|i| i.to_string()))
    }

    /// Tensor product of named factors. Composite index is row-major
    /// (the last factor varies fastest); labels join factor labels with `,`.
    pub fn product(factors: &[(&str, Vec<String>)]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Validation("empty factor list".into()));
        }
        let mut labels = vec![String::new()];
        for (_, fl) in factors {
            if fl.is_empty() {
                return Err(Error::Validation("factor of dimension zero".into()));
            }
            labels = labels
                .iter()
                .flat_map(|prefix| {
                    fl.iter().map(move |l| {
                        if prefix.is_empty() {
                            l.clone()
                        } else {
                            format!("{prefix},{l}")
                        }
                    })
                })
                .collect();
        }
        let mut space = Self::new(labels)?;
        space.factors = Some(factors.iter().map(|(n, l)| (n.to_string(), l.len())).collect());
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn factors(&self) -> Option<&[(String, usize)]> {
        self.factors.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn same_space(a: &Arc<HilbertSpace>, b: &Arc<HilbertSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Dense operator on a [`HilbertSpace`], atomic units (ħ = 1).
#[derive(Clone, Debug)]
pub struct Operator {
    space: Arc<HilbertSpace>,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: Arc<HilbertSpace>, matrix: Array2<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.dim() != (d, d) {
            return Err(Error::Dimension(format!(
                "operator matrix is {:?}, space has dimension {d}",
                matrix.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn from_real(space: Arc<HilbertSpace>, matrix: &Array2<f64>) -> Result<Self> {
        Self::new(space, matrix.mapv(c))
    }

    pub fn zeros(space: Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: Array2::zeros((d, d)),
        }
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        Self { space, matrix: eye(d) }
    }

    /// `|i><j|` in the basis of `space`.
    pub fn ket_bra(space: Arc<HilbertSpace>, i: usize, j: usize) -> Result<Self> {
        let d = space.dim();
        if i >= d || j >= d {
            return Err(Error::Dimension(format!("index out of range for dim {d}")));
        }
        let mut m = Array2::zeros((d, d));
        m[[i, j]] = ONE;
        Ok(Self { space, matrix: m })
    }

    /// Sum of `|l><l|` over the given basis labels.
    pub fn projector_onto(space: Arc<HilbertSpace>, labels: &[&str]) -> Result<Self> {
        let d = space.dim();
        let mut m = Array2::zeros((d, d));
        for l in labels {
            let i = space
                .index_of(l)
                .ok_or_else(|| Error::Validation(format!("unknown basis label '{l}'")))?;
            m[[i, i]] = ONE;
        }
        Ok(Self { space, matrix: m })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: dagger(&self.matrix),
        }
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn hermitized(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: linalg::hermitize(&self.matrix),
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * s),
        }
    }

    pub fn dot(&self, other: &Operator) -> Result<Self> {
        self.check_space(other.space())?;
        Ok(Self {
            space: self.space.clone(),
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_space(other.space())?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check_space(other.space())?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// `-i [self, rho]`, evaluated directly.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_space(other.space())?;
        let m = self.matrix.dot(&other.matrix) - other.matrix.dot(&self.matrix);
        Ok(Self {
            space: self.space.clone(),
            matrix: m,
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (w, _) = linalg::eigh(&linalg::hermitize(&self.matrix))?;
        Ok(w[0])
    }

    /// Checks the density-matrix contract: Hermitian, unit trace, positive.
    pub fn validate_state(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::Validation(format!(
                "state not Hermitian: max |A - A^dag| = {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::Validation(format!("state trace {tr} != 1")));
        }
        let min_eig = self.min_eigenvalue()?;
        if min_eig < POSITIVITY_TOL {
            return Err(Error::Validation(format!(
                "state not positive: min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub(crate) fn check_space(&self, other: &Arc<HilbertSpace>) -> Result<()> {
        if same_space(&self.space, other) {
            Ok(())
        } else {
            Err(Error::Dimension("operators live on different spaces".into()))
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.matrix.rows() {
            let cells: Vec<String> = row.iter().map(|z| format!("{:+.6e}{:+.6e}i", z.re, z.im)).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Column-stacked vector of length `dim^2`.
pub fn vectorize(op: &Operator) -> Array1<C64> {
    op.matrix.t().iter().copied().collect()
}

pub fn devectorize(v: &Array1<C64>, space: Arc<HilbertSpace>) -> Result<Operator> {
    let d = space.dim();
    if v.len() != d * d {
        return Err(Error::Dimension(format!(
            "vector of length {} is not a vectorized {d}x{d} operator",
            v.len()
        )));
    }
    let m = Array2::from_shape_fn((d, d), |(i, j)| v[j * d + i]);
    Operator::new(space, m)
}

/// Dense superoperator acting on column-stacked operators.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    space: Arc<HilbertSpace>,
    matrix: Array2<C64>,
}

impl SuperOperator {
    pub fn new(space: Arc<HilbertSpace>, matrix: Array2<C64>) -> Result<Self> {
        let d2 = space.dim() * space.dim();
        if matrix.dim() != (d2, d2) {
            return Err(Error::Dimension(format!(
                "superoperator matrix is {:?}, expected {d2}x{d2}",
                matrix.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: Arc<HilbertSpace>) -> Self {
        let d2 = space.dim() * space.dim();
        Self {
            space,
            matrix: Array2::zeros((d2, d2)),
        }
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        let d2 = space.dim() * space.dim();
        Self { space, matrix: eye(d2) }
    }

    /// Superoperator `X -> A X B`.
    pub fn sandwich(a: &Operator, b: &Operator) -> Result<Self> {
        a.check_space(b.space())?;
        Ok(Self {
            space: a.space.clone(),
            matrix: kron(&b.matrix.t().to_owned(), &a.matrix),
        })
    }

    /// Superoperator `X -> A X`.
    pub fn left(a: &Operator) -> Self {
        Self {
            space: a.space.clone(),
            matrix: kron(&eye(a.dim()), &a.matrix),
        }
    }

    /// Superoperator `X -> X B`.
    pub fn right(b: &Operator) -> Self {
        Self {
            space: b.space.clone(),
            matrix: kron(&b.matrix.t().to_owned(), &eye(b.dim())),
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    /// Side length `dim^2`.
    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn apply(&self, op: &Operator) -> Result<Operator> {
        op.check_space(&self.space)?;
        let v = self.matrix.dot(&vectorize(op));
        devectorize(&v, self.space.clone())
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    pub fn compose(&self, other: &SuperOperator) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    pub fn add(&self, other: &SuperOperator) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * s),
        }
    }

    /// `max_j |(vec(I)^dag L)_j|`; zero for a trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.space.dim();
        let mut worst: f64 = 0.0;
        for col in 0..self.side() {
            let mut s = ZERO;
            for k in 0..d {
                s += self.matrix[[k * d + k, col]];
            }
            worst = worst.max(s.norm());
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    fn check_space(&self, other: &SuperOperator) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::Dimension("superoperators live on different spaces".into()))
        }
    }
}

/// `-i (I ⊗ H - H^T ⊗ I)`, the generator of `rho -> -i [H, rho]`.
pub fn commutator_generator(h: &Operator) -> Result<SuperOperator> {
    let herm = h.hermiticity_error();
    if herm > STATE_TOL {
        return Err(Error::Validation(format!(
            "Hamiltonian not Hermitian: max |H - H^dag| = {herm:.3e}"
        )));
    }
    let d = h.dim();
    let id = eye(d);
    let m = (kron(&id, h.matrix()) - kron(&h.matrix().t().to_owned(), &id)).mapv(|z| -I * z);
    SuperOperator::new(h.space().clone(), m)
}

/// Lindblad dissipator `rate * (S rho S^dag - 1/2 {S^dag S, rho})`.
pub fn dissipator(s: &Operator, rate: f64) -> Result<SuperOperator> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Validation(format!("dissipator rate {rate} must be >= 0")));
    }
    let d = s.dim();
    if rate == 0.0 {
        return Ok(SuperOperator::zeros(s.space().clone()));
    }
    let sm = s.matrix();
    let sds = dagger(sm).dot(sm);
    let id = eye(d);
    let jump = kron(&sm.mapv(|z| z.conj()), sm);
    let anti = kron(&id, &sds) + kron(&sds.t().to_owned(), &id);
    let m = (jump - anti.mapv(|z| z * 0.5)).mapv(|z| z * rate);
    SuperOperator::new(s.space().clone(), m)
}

/// Thermal Lindblad pair: downward channel `S` at `gamma (n + 1)` and upward
/// channel `S^dag` at `gamma n`.
pub fn lindblad_pair(s: &Operator, gamma: f64, n: f64) -> Result<SuperOperator> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Validation(format!("bath rate {gamma} must be >= 0")));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::Validation(format!("mean occupation {n} must be >= 0")));
    }
    let down = dissipator(s, gamma * (n + 1.0))?;
    if gamma * n == 0.0 {
        return Ok(down);
    }
    let up = dissipator(&s.dagger(), gamma * n)?;
    down.add(&up)
}

/// Total generator `-i[H, .] + sum of dissipators`.
pub fn assemble_liouvillian(h: &Operator, dissipators: &[SuperOperator]) -> Result<SuperOperator> {
    let mut total = commutator_generator(h)?;
    for d in dissipators {
        if !same_space(h.space(), d.space()) {
            return Err(Error::Dimension(
                "dissipator and Hamiltonian live on different spaces".into(),
            ));
        }
        total.matrix += &d.matrix;
    }
    Ok(total)
}

/// Bose-Einstein mean occupation `1 / (exp(E / (k_B T)) - 1)` with `T` in kelvin.
pub fn bose_occupation(energy: f64, temperature: f64) -> f64 {
    1.0 / (energy / (crate::BOLTZMANN_HARTREE_PER_KELVIN * temperature)).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, d: usize) -> Array2<C64> {
        Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn space(d: usize) -> Arc<HilbertSpace> {
        Arc::new(HilbertSpace::with_dim(d).unwrap())
    }

    fn rand_hermitian(rng: &mut ChaCha8Rng, d: usize) -> Array2<C64> {
        linalg::hermitize(&rand_matrix(rng, d))
    }

    #[test]
    fn identity_vectorizes_column_stacked() {
        let v = vectorize(&Operator::identity(space(2)));
        assert_eq!(v.to_vec(), vec![ONE, ZERO, ZERO, ONE]);
    }

    #[test]
    fn vec_index_convention() {
        let sp = space(3);
        let op = Operator::ket_bra(sp, 0, 2).unwrap();
        let v = vectorize(&op);
        assert_eq!(v[2 * 3], ONE);
    }

    #[test]
    fn sandwich_kronecker_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sp = space(3);
        let a = Operator::new(sp.clone(), rand_matrix(&mut rng, 3)).unwrap();
        let b = Operator::new(sp.clone(), rand_matrix(&mut rng, 3)).unwrap();
        let rho = Operator::new(sp.clone(), rand_matrix(&mut rng, 3)).unwrap();
        let direct = a.matrix().dot(rho.matrix()).dot(b.matrix());
        let via = SuperOperator::sandwich(&a, &b).unwrap().apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(&direct, via.matrix()) < 1e-12);
    }

    #[test]
    fn left_right_sandwich_generators_on_4x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sp = space(4);
        let a = Operator::new(sp.clone(), rand_matrix(&mut rng, 4)).unwrap();
        let b = Operator::new(sp.clone(), rand_matrix(&mut rng, 4)).unwrap();
        let x = Operator::new(sp.clone(), rand_matrix(&mut rng, 4)).unwrap();
        let l = SuperOperator::left(&a).apply(&x).unwrap();
        assert!(linalg::max_abs_diff(l.matrix(), &a.matrix().dot(x.matrix())) < 1e-12);
        let r = SuperOperator::right(&b).apply(&x).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), &x.matrix().dot(b.matrix())) < 1e-12);
        let s = SuperOperator::sandwich(&a, &b).unwrap().apply(&x).unwrap();
        let direct = a.matrix().dot(x.matrix()).dot(b.matrix());
        assert!(linalg::max_abs_diff(s.matrix(), &direct) < 1e-12);
    }

    #[test]
    fn round_trip_hermitian_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sp = space(5);
        let rho = Operator::new(sp.clone(), rand_hermitian(&mut rng, 5)).unwrap();
        let back = devectorize(&vectorize(&rho), sp).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn devectorize_rejects_wrong_length() {
        let v = Array1::from(vec![ONE; 5]);
        assert!(matches!(devectorize(&v, space(2)), Err(Error::Dimension(_))));
    }

    #[test]
    fn commutator_diagonal_phase() {
        let sp = space(2);
        let (e1, e2) = (0.3, -0.7);
        let h = Operator::from_real(sp.clone(), &ndarray::arr2(&[[e1, 0.0], [0.0, e2]])).unwrap();
        let rho = Operator::ket_bra(sp.clone(), 0, 1).unwrap();
        let out = commutator_generator(&h).unwrap().apply(&rho).unwrap();
        let expected = rho.scaled(-I * (e1 - e2));
        assert!(linalg::max_abs_diff(out.matrix(), expected.matrix()) < 1e-15);
    }

    #[test]
    fn commutator_of_identity_vanishes() {
        let g = commutator_generator(&Operator::identity(space(3))).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn commutator_matches_direct_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sp = space(4);
        let h = Operator::new(sp.clone(), rand_hermitian(&mut rng, 4)).unwrap();
        let rho = Operator::new(sp.clone(), rand_matrix(&mut rng, 4)).unwrap();
        let via = commutator_generator(&h).unwrap().apply(&rho).unwrap();
        let direct = h.commutator(&rho).unwrap().scaled(-I);
        assert!(linalg::max_abs_diff(via.matrix(), direct.matrix()) < 1e-12);
    }

    #[test]
    fn commutator_rejects_non_hermitian() {
        let sp = space(2);
        let h = Operator::ket_bra(sp, 0, 1).unwrap();
        assert!(matches!(commutator_generator(&h), Err(Error::Validation(_))));
    }

    #[test]
    fn downward_channel_moves_population() {
        // S = |g><1| at 2 * Gamma, applied to |1><1| on {g, 1, 2}
        let sp = Arc::new(HilbertSpace::new(["g", "1", "2"]).unwrap());
        let gc1 = 4.5e-6;
        let s = Operator::ket_bra(sp.clone(), 0, 1).unwrap();
        let gen = lindblad_pair(&s, 2.0 * gc1, 0.0).unwrap();
        let rho = Operator::ket_bra(sp.clone(), 1, 1).unwrap();
        let out = gen.apply(&rho).unwrap();
        assert!((out.matrix()[[0, 0]] - c(2.0 * gc1)).norm() < 1e-20);
        assert!((out.matrix()[[1, 1]] - c(-2.0 * gc1)).norm() < 1e-20);
        assert_eq!(out.matrix()[[2, 2]], ZERO);
    }

    #[test]
    fn zero_rate_is_zero_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sp = space(3);
        let s = Operator::new(sp, rand_matrix(&mut rng, 3)).unwrap();
        assert_eq!(lindblad_pair(&s, 0.0, 2.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lindblad_rejects_negative_inputs() {
        let s = Operator::identity(space(2));
        assert!(lindblad_pair(&s, -1.0, 0.0).is_err());
        assert!(lindblad_pair(&s, 1.0, -0.1).is_err());
    }

    #[test]
    fn lindblad_trace_free_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sp = space(4);
        for _ in 0..10 {
            let s = Operator::new(sp.clone(), rand_matrix(&mut rng, 4)).unwrap();
            let rho = Operator::new(sp.clone(), rand_matrix(&mut rng, 4)).unwrap();
            let gen = lindblad_pair(&s, 0.7, 1.3).unwrap();
            assert!(gen.apply(&rho).unwrap().trace().norm() <= 1e-12);
            assert!(gen.trace_preservation_error() <= 1e-12);
        }
    }

    #[test]
    fn empty_liouvillian_is_zero() {
        let l = assemble_liouvillian(&Operator::zeros(space(3)), &[]).unwrap();
        assert_eq!(l.max_abs(), 0.0);
    }

    #[test]
    fn assemble_rejects_mixed_spaces() {
        let h = Operator::zeros(space(2));
        let other = Arc::new(HilbertSpace::new(["a", "b"]).unwrap());
        let d = dissipator(&Operator::identity(other), 1.0).unwrap();
        assert!(matches!(assemble_liouvillian(&h, &[d]), Err(Error::Dimension(_))));
    }

    #[test]
    fn product_space_indexing_is_row_major() {
        let sp = HilbertSpace::product(&[
            ("el", vec!["1".into(), "2".into()]),
            ("nuc", vec!["0".into(), "1".into(), "2".into()]),
        ])
        .unwrap();
        assert_eq!(sp.dim(), 6);
        assert_eq!(sp.labels()[4], "2,1");
        assert_eq!(sp.factors().unwrap()[1], ("nuc".to_string(), 3));
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(HilbertSpace::new(["a", "a"]).is_err());
    }

    #[test]
    fn bose_at_solar_temperature() {
        let n = bose_occupation(0.0192, 5800.0);
        assert!(n > 0.0 && n < 1.0);
        // independent arithmetic: 0.0192 / (3.166811563e-6 * 5800) = 1.04532...
        let x: f64 = 0.0192 / (3.166811563e-6 * 5800.0);
        assert!((n - 1.0 / (x.exp() - 1.0)).abs() < 1e-14);
    }
}
