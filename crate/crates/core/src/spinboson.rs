// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-diabat spin-boson model driven by a radiative bath and damped by one
//! phonon bath per diabat.
//!
//! The nuclear coordinate is expanded in unit-frequency oscillator states
//! centred at `q = 0`; composite index `e * n_basis + nu` with `e` the diabat.
//! The primitive space is truncated to low-energy eigenstates of the
//! Hamiltonian localized on each side of the diabat crossing, so the left and
//! right projectors stay exact on the truncated space.

use std::sync::Arc;

use ndarray::{s, Array1, Array2};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::linalg::{self, c, I};
use crate::ness::{solve_ness, NessResult};
use crate::operator::{assemble_liouvillian, bose_occupation, lindblad_pair, HilbertSpace, Operator, SuperOperator};
use crate::partition::{LiouvillePartition, Partition};
use crate::rates::{RateMatrix, Route};

/// Position at which the radiative gap between the diabats is evaluated.
pub const RADIATIVE_GAP_POSITION: f64 = -3.0;
/// Eigenvalues of `q` this close to the dividing surface are assigned to the left.
pub const SURFACE_TIE_TOL: f64 = 1e-12;
/// Largest accepted condition number of the retained-state overlap matrix.
pub const OVERLAP_COND_MAX: f64 = 1e8;
pub const DESK_N_BASIS: usize = 128;
pub const DESK_CUTOFF_MULTIPLE: f64 = 25.0;
pub const FULL_N_BASIS: usize = 400;
pub const FULL_CUTOFF_MULTIPLE: f64 = 50.0;
/// Dipole strength of the vertical excitation.
pub const DEFAULT_DIPOLE: f64 = 0.45;
const SERIES_TOL: f64 = 1e-14;
const SERIES_MAX_TERMS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SBParams {
    pub omega_1: f64,
    pub omega_2: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub q_1: f64,
    pub q_2: f64,
    pub lambda: f64,
    pub gamma_rad: f64,
    pub gamma_ph1: f64,
    pub gamma_ph2: f64,
    pub t_rad: f64,
    pub t_ph: f64,
    pub alpha_att: f64,
    pub n_basis: usize,
    pub e_cut: f64,
}

impl Default for SBParams {
    /// Full-scale settings: 400 primitives, cutoff `50 Omega_2 + eps_2 - eps_1`.
    fn default() -> Self {
        let mut p = Self {
            omega_1: 2e-3,
            omega_2: 4e-4,
            eps_1: 0.0,
            eps_2: 0.012,
            q_1: -3.0,
            q_2: 3.0,
            lambda: 2e-5,
            gamma_rad: 1e-6,
            gamma_ph1: 1e-9,
            gamma_ph2: 1e-9,
            t_rad: 5800.0,
            t_ph: 300.0,
            alpha_att: 1.0,
            n_basis: FULL_N_BASIS,
            e_cut: 0.0,
        };
        p.e_cut = p.default_cutoff(FULL_CUTOFF_MULTIPLE);
        p
    }
}

impl SBParams {
    /// Reduced basis for routine runs: 128 primitives, cutoff `25 Omega_2 + eps_2 - eps_1`.
    pub fn desk() -> Self {
        let mut p = Self {
            n_basis: DESK_N_BASIS,
            ..Self::default()
        };
        p.e_cut = p.default_cutoff(DESK_CUTOFF_MULTIPLE);
        p
    }

    /// `multiple * Omega_2 + eps_2 - eps_1`.
    pub fn default_cutoff(&self, multiple: f64) -> f64 {
        multiple * self.omega_2 + self.eps_2 - self.eps_1
    }

    pub const KEYS: [&'static str; 15] = [
        "Omega_1",
        "Omega_2",
        "eps_1",
        "eps_2",
        "q_1",
        "q_2",
        "lambda",
        "Gamma_rad",
        "Gamma_ph1",
        "Gamma_ph2",
        "T_rad",
        "T_ph",
        "alpha_att",
        "n_basis",
        "e_cut",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "Omega_1" => &mut self.omega_1,
            "Omega_2" => &mut self.omega_2,
            "eps_1" => &mut self.eps_1,
            "eps_2" => &mut self.eps_2,
            "q_1" => &mut self.q_1,
            "q_2" => &mut self.q_2,
            "lambda" => &mut self.lambda,
            "Gamma_rad" => &mut self.gamma_rad,
            "Gamma_ph1" => &mut self.gamma_ph1,
            "Gamma_ph2" => &mut self.gamma_ph2,
            "T_rad" => &mut self.t_rad,
            "T_ph" => &mut self.t_ph,
            "alpha_att" => &mut self.alpha_att,
            "e_cut" => &mut self.e_cut,
            "n_basis" => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(Error::Config(format!("n_basis = {value} is not a count")));
                }
                self.n_basis = value as usize;
                return Ok(());
            }
            _ => return Err(Error::Config(format!("unknown spin-boson parameter '{key}'"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "Omega_1" => self.omega_1,
            "Omega_2" => self.omega_2,
            "eps_1" => self.eps_1,
            "eps_2" => self.eps_2,
            "q_1" => self.q_1,
            "q_2" => self.q_2,
            "lambda" => self.lambda,
            "Gamma_rad" => self.gamma_rad,
            "Gamma_ph1" => self.gamma_ph1,
            "Gamma_ph2" => self.gamma_ph2,
            "T_rad" => self.t_rad,
            "T_ph" => self.t_ph,
            "alpha_att" => self.alpha_att,
            "n_basis" => self.n_basis as f64,
            "e_cut" => self.e_cut,
            _ => return None,
        })
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        Self::KEYS.iter().map(|k| (*k, self.get(k).unwrap())).collect()
    }

    /// Diabat potential `V_k(q) = (Omega_k / 2) (q - q_k)^2 + eps_k`, `k` in {1, 2}.
    pub fn diabat(&self, k: usize, q: f64) -> f64 {
        let (om, qk, ek) = if k == 1 {
            (self.omega_1, self.q_1, self.eps_1)
        } else {
            (self.omega_2, self.q_2, self.eps_2)
        };
        0.5 * om * (q - qk).powi(2) + ek
    }

    /// `V_2 - V_1` at the radiative gap position.
    pub fn radiative_gap(&self) -> f64 {
        self.diabat(2, RADIATIVE_GAP_POSITION) - self.diabat(1, RADIATIVE_GAP_POSITION)
    }

    /// Attenuated radiative occupation `alpha_att n(E_rad, T_rad)`.
    pub fn n_rad(&self) -> f64 {
        self.alpha_att * bose_occupation(self.radiative_gap(), self.t_rad)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.entries() {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{k} = {v} is not finite")));
            }
        }
        if !(self.omega_1 > 0.0 && self.omega_2 > 0.0) {
            return Err(Error::Validation("diabat frequencies must be > 0".into()));
        }
        if self.gamma_rad < 0.0 || self.gamma_ph1 < 0.0 || self.gamma_ph2 < 0.0 || self.alpha_att < 0.0 {
            return Err(Error::Validation("bath strengths and alpha_att must be >= 0".into()));
        }
        if !(self.t_rad > 0.0 && self.t_ph > 0.0) {
            return Err(Error::Validation("temperatures must be > 0".into()));
        }
        if self.n_basis < 2 {
            return Err(Error::Validation(format!("n_basis = {} < 2", self.n_basis)));
        }
        if !(self.e_cut > self.eps_1.min(self.eps_2)) {
            return Err(Error::Validation(format!(
                "e_cut = {} does not exceed the lowest diabat energy",
                self.e_cut
            )));
        }
        Ok(())
    }
}

/// Nuclear operators in the unit oscillator basis.
#[derive(Clone, Debug)]
pub struct PrimitiveBasis {
    /// Annihilation operator, `a[[n - 1, n]] = sqrt(n)`.
    pub a: Array2<f64>,
    pub q: Array2<f64>,
    pub q2: Array2<f64>,
    /// Second derivative `d^2/dq^2`.
    pub d2: Array2<f64>,
}

impl PrimitiveBasis {
    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Ladder operators of a unit-frequency oscillator truncated to `n_basis` states.
///
/// `q^2` and `d^2/dq^2` are built from normal-ordered ladder products so that
/// only the outermost diagonal element feels the truncation.
pub fn primitive_basis(n_basis: usize) -> Result<PrimitiveBasis> {
    if n_basis < 2 {
        return Err(Error::Validation(format!("n_basis = {n_basis} < 2")));
    }
    let n = n_basis;
    let mut a = Array2::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = (k as f64).sqrt();
    }
    let ad = a.t().to_owned();
    let q = (&a + &ad) / 2f64.sqrt();
    let aa = a.dot(&a);
    let adad = ad.dot(&ad);
    let number = Array2::from_diag(&Array1::from_shape_fn(n, |k| k as f64));
    let ident = Array2::<f64>::eye(n);
    let q2 = (&aa + &adad + &(&number * 2.0) + &ident) / 2.0;
    let d2 = (&aa + &adad - &(&number * 2.0) - &ident) / 2.0;
    Ok(PrimitiveBasis { a, q, q2, d2 })
}

/// Crossing of the two diabats strictly between their minima, polished to `|V_1 - V_2| <= 1e-14`.
pub fn dividing_surface(p: &SBParams) -> Result<f64> {
    let (lo, hi) = if p.q_1 < p.q_2 { (p.q_1, p.q_2) } else { (p.q_2, p.q_1) };
    // V_1 - V_2 = A q^2 + B q + C
    let a = 0.5 * (p.omega_1 - p.omega_2);
    let b = -(p.omega_1 * p.q_1 - p.omega_2 * p.q_2);
    let cc = 0.5 * (p.omega_1 * p.q_1 * p.q_1 - p.omega_2 * p.q_2 * p.q_2) + p.eps_1 - p.eps_2;
    let f = |q: f64| p.diabat(1, q) - p.diabat(2, q);
    let roots: Vec<f64> = if a == 0.0 {
        if b == 0.0 {
            vec![]
        } else {
            vec![-cc / b]
        }
    } else {
        let disc = b * b - 4.0 * a * cc;
        if disc < 0.0 {
            vec![]
        } else {
            // numerically stable pair
            let t = -0.5 * (b + b.signum() * disc.sqrt());
            let mut r = vec![t / a];
            if t != 0.0 {
                r.push(cc / t);
            }
            r
        }
    };
    let inside: Vec<f64> = roots.into_iter().filter(|&r| r > lo && r < hi).collect();
    let root = match inside.as_slice() {
        [r] => *r,
        [r1, r2] if (r1 - r2).abs() <= 1e-12 * (1.0 + r1.abs()) => *r1,
        _ => return Err(Error::NoCrossing),
    };
    // Newton polish on the exact difference of the potentials
    let mut q = root;
    for _ in 0..4 {
        let df = 2.0 * a * q + b;
        if df == 0.0 {
            break;
        }
        q -= f(q) / df;
    }
    if f(q).abs() > 1e-14 || !(q > lo && q < hi) {
        return Err(Error::NoCrossing);
    }
    Ok(q)
}

/// Eigenvectors of the position operator on either side of the dividing surface.
#[derive(Clone, Debug)]
pub struct HalfSpaces {
    /// Orthonormal columns spanning `range(P_L)`.
    pub left: Array2<f64>,
    pub right: Array2<f64>,
    /// Position eigenvalues within `SURFACE_TIE_TOL` of the surface (assigned left).
    pub ties: usize,
}

impl HalfSpaces {
    pub fn projectors(&self) -> (Array2<f64>, Array2<f64>) {
        (self.left.dot(&self.left.t()), self.right.dot(&self.right.t()))
    }
}

pub fn half_space_projectors(q: &Array2<f64>, q_x: f64) -> Result<HalfSpaces> {
    let (x, v) = linalg::eigh_real(q)?;
    let mut ties = 0;
    let left_idx: Vec<usize> = (0..x.len())
        .filter(|&i| {
            if (x[i] - q_x).abs() <= SURFACE_TIE_TOL {
                ties += 1;
                log::warn!(
                    "position eigenvalue {} within tolerance of the surface, assigned left",
                    x[i]
                );
                return true;
            }
            x[i] < q_x
        })
        .collect();
    let right_idx: Vec<usize> = (0..x.len()).filter(|i| !left_idx.contains(i)).collect();
    Ok(HalfSpaces {
        left: v.select(ndarray::Axis(1), &left_idx),
        right: v.select(ndarray::Axis(1), &right_idx),
        ties,
    })
}

/// Truncated spin-boson model with its projectors and Liouvillian.
#[derive(Clone, Debug)]
pub struct SBWorkspace {
    pub params: SBParams,
    pub space: Arc<HilbertSpace>,
    pub hamiltonian: Operator,
    pub liouvillian: SuperOperator,
    pub p_left: Operator,
    pub p_right: Operator,
    /// Electronic flip `|1><2| + |2><1|` (unit dipole).
    pub dipole: Operator,
    /// `|2><2|` on the upper diabat.
    pub upper: Operator,
    pub q_x: f64,
    pub radiative_gap: f64,
    pub n_rad: f64,
    /// Left/right partition named `L`, `R`.
    pub sides: Partition,
    /// `{P_L |1><1|, P_L |2><2|, P_R}` named `g`, `1`, `2`.
    pub three: Partition,
    pub n_left: usize,
    /// Largest deviation from {0, 1} of the truncated left projector's eigenvalues.
    pub side_rounding: f64,
    /// Same for `P_L |1><1| P_L`, which is only approximately idempotent because
    /// the electronic and positional projectors do not commute.
    pub ground_rounding: f64,
    pub overlap_cond: f64,
    /// Retained localized energies, left then right.
    pub energies: Array1<f64>,
}

impl SBWorkspace {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// Places `e[i][j] * nuc` in block `(i, j)` of a two-diabat operator.
fn electronic(e: [[f64; 2]; 2], nuc: &Array2<f64>) -> Array2<f64> {
    let n = nuc.nrows();
    let mut out = Array2::zeros((2 * n, 2 * n));
    for i in 0..2 {
        for j in 0..2 {
            if e[i][j] != 0.0 {
                out.slice_mut(s![i * n..(i + 1) * n, j * n..(j + 1) * n])
                    .assign(&(nuc * e[i][j]));
            }
        }
    }
    out
}

/// Spectral rounding of a nearly idempotent Hermitian matrix: eigenvalues above
/// one half become 1, the rest 0. Returns the projector and the largest
/// eigenvalue deviation from {0, 1}.
pub fn round_projector(m: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let sym = (m + &m.t()) / 2.0;
    let (w, v) = linalg::eigh_real(&sym)?;
    let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.5).collect();
    let dev = w.iter().fold(0.0f64, |acc, &x| acc.max(x.abs().min((x - 1.0).abs())));
    let vk = v.select(ndarray::Axis(1), &keep);
    Ok((vk.dot(&vk.t()), dev))
}

fn congruence(w: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    w.t().dot(x).dot(w)
}

pub fn build_truncated(params: &SBParams) -> Result<SBWorkspace> {
    params.validate()?;
    let nb = params.n_basis;
    let pb = primitive_basis(nb)?;
    let ident = Array2::<f64>::eye(nb);
    let one = [[1.0, 0.0], [0.0, 0.0]];
    let two = [[0.0, 0.0], [0.0, 1.0]];
    let diabat_h = |om: f64, qk: f64, ek: f64| {
        // -(Omega/2) d^2 + (Omega/2)(q - q_k)^2 + eps
        &pb.d2 * (-0.5 * om) + &((&pb.q2 - &(&pb.q * (2.0 * qk)) + &(&ident * (qk * qk))) * (0.5 * om)) + &ident * ek
    };
    let h1 = diabat_h(params.omega_1, params.q_1, params.eps_1);
    let h2 = diabat_h(params.omega_2, params.q_2, params.eps_2);
    let h_prim =
        electronic(one, &h1) + electronic(two, &h2) + electronic([[0.0, 1.0], [1.0, 0.0]], &ident) * params.lambda;

    let q_x = dividing_surface(params)?;
    let halves = half_space_projectors(&pb.q, q_x)?;
    // both diabats times the nuclear half-space
    let lift = |v: &Array2<f64>| {
        let k = v.ncols();
        let mut b = Array2::zeros((2 * nb, 2 * k));
        b.slice_mut(s![..nb, ..k]).assign(v);
        b.slice_mut(s![nb.., k..]).assign(v);
        b
    };
    let localized = |basis: &Array2<f64>| -> Result<(Array1<f64>, Array2<f64>)> {
        let (e, cvec) = linalg::eigh_real(&congruence(basis, &h_prim))?;
        let keep: Vec<usize> = (0..e.len()).filter(|&i| e[i] < params.e_cut).collect();
        Ok((
            e.select(ndarray::Axis(0), &keep),
            basis.dot(&cvec.select(ndarray::Axis(1), &keep)),
        ))
    };
    let (el, wl) = localized(&lift(&halves.left))?;
    let (er, wr) = localized(&lift(&halves.right))?;
    let n_left = wl.ncols();
    let d = n_left + wr.ncols();
    if d < 4 {
        return Err(Error::CutoffTooAggressive { dim: d });
    }
    let mut w = Array2::zeros((2 * nb, d));
    w.slice_mut(s![.., ..n_left]).assign(&wl);
    w.slice_mut(s![.., n_left..]).assign(&wr);

    // Loewdin orthonormalization; a no-op up to rounding because the two sides
    // are orthogonal by construction
    let (sw, sv) = linalg::eigh_real(&w.t().dot(&w))?;
    let smin = sw.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sw.iter().cloned().fold(0.0, f64::max);
    let overlap_cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(overlap_cond <= OVERLAP_COND_MAX) {
        return Err(Error::IllConditionedTruncation { cond: overlap_cond });
    }
    let inv_sqrt = sv.dot(&Array2::from_diag(&sw.mapv(|x| 1.0 / x.sqrt()))).dot(&sv.t());
    let w = w.dot(&inv_sqrt);

    let labels = (0..d).map(|i| {
        if i < n_left {
            format!("L{i}")
        } else {
            format!("R{}", i - n_left)
        }
    });
    let space = Arc::new(HilbertSpace::new(labels)?);
    let op = |m: Array2<f64>| Operator::from_real(space.clone(), &m);

    let h = congruence(&w, &h_prim);
    let h = (&h + &h.t()) / 2.0;
    let hamiltonian = op(h)?;

    let (pl_prim, _) = halves.projectors();
    let pl_prim = electronic([[1.0, 0.0], [0.0, 1.0]], &pl_prim);
    let (p_left, dev_l) = round_projector(&congruence(&w, &pl_prim))?;
    let p_right = Array2::eye(d) - &p_left;
    let diabat_one = congruence(&w, &electronic(one, &ident));
    let (p_g, dev_g) = round_projector(&p_left.dot(&diabat_one).dot(&p_left))?;
    let p_1 = &p_left - &p_g;

    let s_rad = congruence(&w, &electronic([[0.0, 1.0], [0.0, 0.0]], &ident));
    let shifted = |qk: f64| &pb.a - &(&ident * (qk / 2f64.sqrt()));
    let s_ph1 = congruence(&w, &electronic(one, &shifted(params.q_1)));
    let s_ph2 = congruence(&w, &electronic(two, &shifted(params.q_2)));
    let dipole = congruence(&w, &electronic([[0.0, 1.0], [1.0, 0.0]], &ident));
    let upper = congruence(&w, &electronic(two, &ident));

    let radiative_gap = params.radiative_gap();
    let n_rad = params.n_rad();
    let dissipators = vec![
        lindblad_pair(&op(s_rad)?, params.gamma_rad, n_rad)?,
        lindblad_pair(
            &op(s_ph1)?,
            params.gamma_ph1,
            bose_occupation(params.omega_1, params.t_ph),
        )?,
        lindblad_pair(
            &op(s_ph2)?,
            params.gamma_ph2,
            bose_occupation(params.omega_2, params.t_ph),
        )?,
    ];
    let liouvillian = assemble_liouvillian(&hamiltonian, &dissipators)?;

    let sides = Partition::validate(
        vec![op(p_left.clone())?, op(p_right.clone())?],
        vec!["L".into(), "R".into()],
    )?;
    let three = Partition::validate(
        vec![op(p_g)?, op(p_1)?, op(p_right.clone())?],
        vec!["g".into(), "1".into(), "2".into()],
    )?;
    let mut energies = el.to_vec();
    energies.extend(er.iter());
    Ok(SBWorkspace {
        params: *params,
        space: space.clone(),
        hamiltonian,
        liouvillian,
        p_left: op(p_left)?,
        p_right: op(p_right)?,
        dipole: op(dipole)?,
        upper: op(upper)?,
        q_x,
        radiative_gap,
        n_rad,
        sides,
        three,
        n_left,
        side_rounding: dev_l,
        ground_rounding: dev_g,
        overlap_cond,
        energies: Array1::from(energies),
    })
}

/// Result of the dipole kick applied to a steady state.
#[derive(Clone, Debug)]
pub struct VerticalExcitation {
    pub rho: Operator,
    /// `tr(H (rho_VE - rho_s))`.
    pub energy: f64,
    /// Population moved onto the upper diabat.
    pub excited_population: f64,
    pub terms: usize,
}

/// `exp(-i mu) rho_s exp(i mu)` with `mu = alpha (|2><1| + |1><2|)`, summed as
/// `rho_k = (-i / k) [mu, rho_(k-1)]`.
pub fn vertical_excitation(ws: &SBWorkspace, rho_s: &Operator, alpha: f64) -> Result<VerticalExcitation> {
    kick(&ws.dipole.scaled(c(alpha)), rho_s, &ws.hamiltonian, Some(&ws.upper))
}

fn kick(mu: &Operator, rho_s: &Operator, h: &Operator, upper: Option<&Operator>) -> Result<VerticalExcitation> {
    let mut term = rho_s.clone();
    let mut total = rho_s.clone();
    let mut terms = 0;
    loop {
        if terms >= SERIES_MAX_TERMS {
            return Err(Error::SeriesNotConverged { terms });
        }
        terms += 1;
        term = mu.commutator(&term)?.scaled(-I / c(terms as f64));
        total = total.add(&term)?;
        if linalg::frobenius(term.matrix()) <= SERIES_TOL {
            break;
        }
    }
    let rho = total.hermitized();
    let rho = rho.scaled(c(1.0 / rho.trace().re));
    let energy = h.dot(&rho.sub(rho_s)?)?.trace().re;
    let excited_population = match upper {
        Some(p) => p.dot(&rho.sub(rho_s)?)?.trace().re,
        None => 0.0,
    };
    Ok(VerticalExcitation {
        rho,
        energy,
        excited_population,
        terms,
    })
}

/// Unitary dipole kick on an arbitrary operator pair, exposed for checks on small systems.
pub fn dipole_kick(mu: &Operator, rho: &Operator) -> Result<Operator> {
    Ok(kick(mu, rho, &Operator::zeros(rho.space().clone()), None)?.rho)
}

/// Steady-state rates of one spin-boson configuration.
#[derive(Clone, Debug)]
pub struct SBRates {
    pub ness: NessResult,
    /// Population right of the dividing surface.
    pub p_right: f64,
    /// Left/right rate matrix.
    pub sides: RateMatrix,
    /// Three-component rate matrix, when requested.
    pub three: Option<RateMatrix>,
    /// Largest relative difference between the direct and linear-solve routes.
    pub route_agreement: f64,
}

impl SBRates {
    /// Left-to-right rate.
    pub fn forward(&self) -> f64 {
        self.sides.get("R", "L").unwrap()
    }

    pub fn backward(&self) -> f64 {
        self.sides.get("L", "R").unwrap()
    }

    pub fn k_1g(&self) -> Option<f64> {
        self.three.as_ref().and_then(|k| k.get("1", "g"))
    }

    pub fn k_21(&self) -> Option<f64> {
        self.three.as_ref().and_then(|k| k.get("2", "1"))
    }
}

fn both_routes(l: &SuperOperator, lp: &LiouvillePartition) -> Result<(RateMatrix, f64)> {
    let sys = crate::rates::ComplementSystem::new(l, lp)?;
    let k = sys.rate_matrix(Route::LinearSolve)?;
    let kd = sys.rate_matrix(Route::Direct)?;
    let agreement = k.relative_difference(&kd);
    Ok((k, agreement))
}

pub fn ness_rates(ws: &SBWorkspace, with_three: bool) -> Result<SBRates> {
    let ness = solve_ness(&ws.liouvillian)?;
    let lp = LiouvillePartition::new(ws.sides.clone(), &ness.rho_s)?;
    let p_right = lp.steady_populations()[1];
    let (sides, mut agreement) = both_routes(&ws.liouvillian, &lp)?;
    let three = if with_three {
        let lp3 = LiouvillePartition::new(ws.three.clone(), &ness.rho_s)?;
        let (k3, a3) = both_routes(&ws.liouvillian, &lp3)?;
        agreement = agreement.max(a3);
        Some(k3)
    } else {
        None
    };
    Ok(SBRates {
        ness,
        p_right,
        sides,
        three,
        route_agreement: agreement,
    })
}

/// Single-exponential fit `p(t) = plateau + b exp(-rate (t - start))` on `[start, end]`.
#[derive(Clone, Copy, Debug)]
pub struct ExpFit {
    pub rate: f64,
    pub plateau: f64,
    pub start: f64,
    pub end: f64,
    /// RMS misfit relative to the fitted amplitude `|b|`.
    pub residual: f64,
}

const MIN_FIT_POINTS: usize = 8;

/// Linear least squares for `(a, b)` in `a + b exp(-k tau)` and the relative misfit.
fn exp_misfit(tau: &[f64], y: &[f64], k: f64) -> Option<(f64, f64, f64)> {
    let n = tau.len() as f64;
    let e: Vec<f64> = tau.iter().map(|t| (-k * t).exp()).collect();
    let (se, see) = (e.iter().sum::<f64>(), e.iter().map(|x| x * x).sum::<f64>());
    let (sy, sey) = (y.iter().sum::<f64>(), e.iter().zip(y).map(|(a, b)| a * b).sum::<f64>());
    let det = n * see - se * se;
    if det.abs() <= 1e-14 * n * see {
        return None;
    }
    let b = (n * sey - se * sy) / det;
    let a = (sy - b * se) / n;
    let rms = (e.iter().zip(y).map(|(x, yy)| (a + b * x - yy).powi(2)).sum::<f64>() / n).sqrt();
    Some((a, b, rms / b.abs()))
}

fn fit_window(tau: &[f64], y: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let span = tau[tau.len() - 1];
    let dt = tau[1] - tau[0];
    let (lo, hi) = ((0.1 / span).ln(), (10.0 / dt).ln());
    let n_grid = 200;
    let at = |i: usize| lo + (hi - lo) * i as f64 / n_grid as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..=n_grid {
        if let Some((_, b, r)) = exp_misfit(tau, y, at(i).exp()) {
            if b < 0.0 && best.is_none_or(|(_, rb)| r < rb) {
                best = Some((i, r));
            }
        }
    }
    let (i, _) = best?;
    if i == 0 || i == n_grid {
        return None;
    }
    // golden-section refinement in log k
    let (mut a, mut b) = (at(i - 1), at(i + 1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let cost = |x: f64| exp_misfit(tau, y, x.exp()).map_or(f64::INFINITY, |m| m.2);
    for _ in 0..60 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if cost(x1) < cost(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let k = (0.5 * (a + b)).exp();
    let (plateau, amp, r) = exp_misfit(tau, y, k)?;
    (amp < 0.0).then_some((k, plateau, amp, r))
}

/// Fits the first rise of a transferred-population curve to a single exponential.
///
/// The rise runs up to the first pronounced maximum; candidate windows start
/// anywhere from the steepest point of the rise, and the window with the
/// smallest relative misfit wins.
pub fn fit_first_rise(t: &[f64], p: &[f64]) -> Result<ExpFit> {
    let n = t.len();
    if n < MIN_FIT_POINTS + 2 || p.len() != n {
        return Err(Error::Validation("too few samples for a rate fit".into()));
    }
    let top = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = p[0] + 0.5 * (top - p[0]);
    let peak = (1..n - 1)
        .find(|&i| p[i] >= p[i - 1] && p[i] > p[i + 1] && p[i] > half)
        .unwrap_or(n - 1);
    let steepest = (0..peak)
        .max_by(|&a, &b| (p[a + 1] - p[a]).total_cmp(&(p[b + 1] - p[b])))
        .unwrap_or(0);
    let mut best: Option<ExpFit> = None;
    for s0 in steepest..(peak + 1).saturating_sub(MIN_FIT_POINTS) {
        let tau: Vec<f64> = t[s0..=peak].iter().map(|x| x - t[s0]).collect();
        if let Some((rate, plateau, _, residual)) = fit_window(&tau, &p[s0..=peak]) {
            if best.is_none_or(|b| residual < b.residual) {
                best = Some(ExpFit {
                    rate,
                    plateau,
                    start: t[s0],
                    end: t[peak],
                    residual,
                });
            }
        }
    }
    best.ok_or_else(|| Error::Validation("no exponential rise in the transferred population".into()))
}

#[derive(Clone, Debug)]
pub struct VeRate {
    pub excitation: VerticalExcitation,
    pub fit: ExpFit,
    pub times: Array1<f64>,
    pub p_right: Array1<f64>,
}

/// Sampling of the post-excitation propagation: `periods` oscillations of the
/// slower diabat, `steps` uniform steps.
#[derive(Clone, Copy, Debug)]
pub struct VeOptions {
    pub alpha_dip: f64,
    pub periods: f64,
    pub steps: usize,
}

impl Default for VeOptions {
    fn default() -> Self {
        Self {
            alpha_dip: DEFAULT_DIPOLE,
            periods: 1.0,
            steps: 400,
        }
    }
}

/// Transfer rate after a vertical excitation of the dark steady state.
pub fn vertical_excitation_rate(params: &SBParams, opts: &VeOptions) -> Result<VeRate> {
    let dark = SBParams {
        gamma_rad: 0.0,
        ..*params
    };
    let ws = build_truncated(&dark)?;
    let rho_s = solve_ness(&ws.liouvillian)?.rho_s;
    let excitation = vertical_excitation(&ws, &rho_s, opts.alpha_dip)?;
    let t_final = opts.periods * 2.0 * std::f64::consts::PI / params.omega_1.min(params.omega_2);
    let grid = Array1::linspace(0.0, t_final, opts.steps + 1);
    let traj = dynamics::propagate(
        &ws.liouvillian,
        &excitation.rho,
        grid.as_slice().unwrap(),
        &ws.sides,
        false,
    )?;
    let p_right = traj.p.row(1).to_owned();
    let fit = fit_first_rise(grid.as_slice().unwrap(), p_right.as_slice().unwrap())?;
    Ok(VeRate {
        excitation,
        fit,
        times: grid,
        p_right,
    })
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub forward: f64,
    pub backward: f64,
    pub p_right: f64,
    pub k_1g: Option<f64>,
    pub k_21: Option<f64>,
    pub dim: usize,
    pub residual: f64,
    pub route_agreement: f64,
}

/// Steady-state rates over a grid of one parameter; points run in parallel and
/// come back in grid order.
pub fn sweep(base: &SBParams, key: &str, values: &[f64], with_three: bool) -> Result<Vec<SweepPoint>> {
    use rayon::prelude::*;
    values
        .par_iter()
        .map(|&v| {
            let mut p = *base;
            p.set(key, v)?;
            let ws = build_truncated(&p)?;
            let r = ness_rates(&ws, with_three)?;
            Ok(SweepPoint {
                value: v,
                forward: r.forward(),
                backward: r.backward(),
                p_right: r.p_right,
                k_1g: r.k_1g(),
                k_21: r.k_21(),
                dim: ws.dim(),
                residual: r.ness.residual,
                route_agreement: r.route_agreement,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Validation(
            "log-log slope needs at least two positive pairs".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation("log-log slope needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Crossing of the default diabats, from the closed-form root polished by Newton steps.
    const Q_X_DEFAULT: f64 = 0.6234753829797992;

    #[test]
    fn ladder_operators() {
        let pb = primitive_basis(2).unwrap();
        let r = 0.5f64.sqrt();
        assert!((&pb.q - &ndarray::arr2(&[[0.0, r], [r, 0.0]]))
            .iter()
            .all(|x| x.abs() < 1e-15));
        let pb = primitive_basis(12).unwrap();
        assert!((pb.q2[[0, 0]] - 0.5).abs() < 1e-15);
        for k in 0..11 {
            assert!((pb.q[[k, k + 1]] - ((k + 1) as f64 / 2.0).sqrt()).abs() < 1e-15);
            assert!((pb.a[[k, k + 1]] - ((k + 1) as f64).sqrt()).abs() < 1e-15);
        }
        // q^2 - d^2 = 2N + 1 and [a, a^dag] = 1 away from the truncation edge
        let h = &pb.q2 - &pb.d2;
        let comm = pb.a.dot(&pb.a.t()) - pb.a.t().dot(&pb.a);
        for i in 0..11 {
            for j in 0..11 {
                let want = if i == j { 2.0 * i as f64 + 1.0 } else { 0.0 };
                assert!((h[[i, j]] - want).abs() < 1e-12);
                assert!((comm[[i, j]] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        // q^2 from ladders equals q.q except in the last diagonal element
        let qq = pb.q.dot(&pb.q);
        assert!((&qq - &pb.q2).slice(s![..11, ..11]).iter().all(|x| x.abs() < 1e-12));
        assert!(primitive_basis(1).is_err());
    }

    #[test]
    fn crossing_points() {
        let p = SBParams::default();
        let qx = dividing_surface(&p).unwrap();
        assert!(p.q_1 < qx && qx < p.q_2);
        assert!((p.diabat(1, qx) - p.diabat(2, qx)).abs() <= 1e-14);
        assert_eq!(qx, Q_X_DEFAULT);

        let sym = SBParams {
            omega_2: 2e-3,
            eps_2: 0.0,
            ..p
        };
        assert!(dividing_surface(&sym).unwrap().abs() < 1e-15);
        let same = SBParams {
            omega_2: 2e-3,
            eps_2: 0.0,
            q_2: -3.0,
            ..p
        };
        assert!(matches!(dividing_surface(&same), Err(Error::NoCrossing)));
    }

    #[test]
    fn half_line_projectors() {
        let pb = primitive_basis(400).unwrap();
        let h = half_space_projectors(&pb.q, 0.0).unwrap();
        let (pl, pr) = h.projectors();
        assert_eq!(h.left.ncols(), 200);
        assert!((pl[[0, 0]] - 0.5).abs() < 1e-3);
        let id = &pl + &pr;
        assert!((&id - &Array2::<f64>::eye(400)).iter().all(|x| x.abs() < 1e-10));
        assert!((&pl.dot(&pl) - &pl).iter().all(|x| x.abs() < 1e-10));
        let all = half_space_projectors(&pb.q, 1e3).unwrap();
        assert_eq!(all.left.ncols(), 400);
    }

    #[test]
    fn radiative_occupation_is_fractional() {
        let p = SBParams::default();
        let n = p.n_rad();
        assert!(n > 0.0 && n < 1.0);
        assert!((p.radiative_gap() - 0.0192).abs() < 1e-15);
    }

    #[test]
    fn rabi_half_period_transfers_population() {
        let sp = Arc::new(HilbertSpace::new(["1", "2"]).unwrap());
        let flip = Operator::from_real(sp.clone(), &ndarray::arr2(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        let rho = Operator::ket_bra(sp.clone(), 0, 0).unwrap();
        let out = dipole_kick(&flip.scaled(c(std::f64::consts::FRAC_PI_2)), &rho).unwrap();
        assert!((out.matrix()[[1, 1]].re - 1.0).abs() < 1e-13);
        let same = dipole_kick(&flip.scaled(c(0.0)), &rho).unwrap();
        assert!(linalg::max_abs_diff(same.matrix(), rho.matrix()) == 0.0);
    }

    #[test]
    fn exponential_rise_is_recovered() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 10.0).collect();
        let p: Vec<f64> = t.iter().map(|&x| 0.3 - 0.25 * (-2e-3 * x).exp()).collect();
        let fit = fit_first_rise(&t, &p).unwrap();
        assert!((fit.rate - 2e-3).abs() < 1e-8 && (fit.plateau - 0.3).abs() < 1e-8);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1e-4, 1e-3, 1e-2];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.2)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn config_keys_round_trip() {
        let mut p = SBParams::desk();
        for (i, k) in SBParams::KEYS.iter().enumerate() {
            p.set(k, (i + 2) as f64).unwrap();
            assert_eq!(p.get(k), Some((i + 2) as f64));
        }
        assert!(p.set("n_basis", 2.5).is_err());
        assert!(p.set("omega", 1.0).is_err());
    }
}
