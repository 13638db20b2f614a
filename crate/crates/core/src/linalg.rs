// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense helpers shared by the physics modules.

use lax::{layout::MatrixLayout, Lapack, Transpose};
use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eig, EigVals, Eigh, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Kronecker product with the conventional block ordering: block (i, j) is a[i, j] * b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.zip_mut_with(b, |o, &bv| *o = aij * bv);
        }
    }
    out
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermiticity_error(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

pub fn hermitize(a: &Array2<C64>) -> Array2<C64> {
    (a + &dagger(a)).mapv(|z| z * 0.5)
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().iter().sum()
}

pub fn vector_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn one_norm(a: &Array2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Ascending eigenvalues and eigenvectors of a Hermitian matrix (upper triangle is ignored).
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    Ok(a.eigh(UPLO::Lower)?)
}

pub fn eigh_real(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    Ok(a.eigh(UPLO::Lower)?)
}

pub fn eigvals(a: &Array2<C64>) -> Result<Array1<C64>> {
    Ok(a.eigvals()?)
}

pub fn eigvals_real(a: &Array2<f64>) -> Result<Array1<C64>> {
    Ok(a.eigvals()?)
}

pub fn singular_values(a: &Array2<C64>) -> Result<Array1<f64>> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s)
}

pub fn singular_values_real(a: &Array2<f64>) -> Result<Array1<f64>> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s)
}

/// Pivoted LU factorization kept in column-major storage, with the 1-norm of
/// the original matrix retained for condition estimates.
pub struct Lu {
    n: usize,
    factors: Vec<C64>,
    ipiv: Vec<i32>,
    anorm: f64,
}

impl Lu {
    pub fn new(a: &Array2<C64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() || n == 0 {
            return Err(Error::Dimension(format!(
                "LU needs a nonempty square matrix, got {:?}",
                a.dim()
            )));
        }
        let mut factors: Vec<C64> = a.t().iter().copied().collect();
        let ipiv = C64::lu(Self::layout(n), &mut factors)?;
        Ok(Self {
            n,
            factors,
            ipiv,
            anorm: one_norm(a),
        })
    }

    fn layout(n: usize) -> MatrixLayout {
        MatrixLayout::F {
            col: n as i32,
            lda: n as i32,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// LAPACK estimate of `1 / (|A|_1 |A^-1|_1)`.
    pub fn rcond(&self) -> Result<f64> {
        if self.anorm == 0.0 {
            return Ok(0.0);
        }
        Ok(C64::rcond(Self::layout(self.n), &self.factors, self.anorm)?)
    }

    pub fn solve(&self, b: &Array1<C64>) -> Result<Array1<C64>> {
        if b.len() != self.n {
            return Err(Error::Dimension(format!("rhs length {} != {}", b.len(), self.n)));
        }
        let mut x = b.to_vec();
        C64::solve(Self::layout(self.n), Transpose::No, &self.factors, &self.ipiv, &mut x)?;
        Ok(Array1::from(x))
    }

    pub fn solve_many(&self, b: &Array2<C64>) -> Result<Array2<C64>> {
        let mut x = Array2::zeros(b.raw_dim());
        for (j, col) in b.axis_iter(Axis(1)).enumerate() {
            x.column_mut(j).assign(&self.solve(&col.to_owned())?);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Array2<C64>> {
        let mut inv = self.factors.clone();
        <C64 as Lapack>::inv(Self::layout(self.n), &mut inv, &self.ipiv)?;
        Array2::from_shape_vec((self.n, self.n).f(), inv).map_err(|e| Error::Linalg(e.to_string()))
    }
}

pub fn solve(a: &Array2<C64>, b: &Array1<C64>) -> Result<Array1<C64>> {
    Lu::new(a)?.solve(b)
}

pub fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    Lu::new(a)?.inverse()
}

pub fn inverse_real(a: &Array2<f64>) -> Result<Array2<f64>> {
    use ndarray_linalg::Inverse;
    Ok(a.inv()?)
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn eig(a: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    Ok(a.eig()?)
}

pub fn matvec(a: &Array2<C64>, v: &Array1<C64>) -> Array1<C64> {
    a.dot(v)
}

pub fn to_complex(a: ArrayView2<f64>) -> Array2<C64> {
    a.mapv(c)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension("expm needs a square matrix".into()));
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::PropagationFailed("non-finite generator".into()));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = c(0.5f64.powi(squarings));
    let a1 = a.mapv(|z| z * scale);
    let ident = eye(n);
    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let w1 = &a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]);
    let w2 = &a6 * c(B[7]) + &a4 * c(B[5]) + &a2 * c(B[3]) + &ident * c(B[1]);
    let z1 = &a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]);
    let z2 = &a6 * c(B[6]) + &a4 * c(B[4]) + &a2 * c(B[2]) + &ident * c(B[0]);
    let u = a1.dot(&(a6.dot(&w1) + w2));
    let v = a6.dot(&z1) + z2;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = Lu::new(&q)?.solve_many(&p)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::PropagationFailed("non-finite propagator".into()));
    }
    Ok(r)
}
