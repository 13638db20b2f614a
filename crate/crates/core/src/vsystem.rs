// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Three-level V-system: ground state `g` and two coupled excited states.
//!
//! Hot-bath channels pump `g -> k`, cold-bath channels relax `k -> g`, and a
//! pair of excited-manifold channels move population `1 -> 2` (forward) and
//! `2 -> 1` (backward). Every channel is a jump operator with rate `2 Gamma`
//! and zero thermal occupation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, C64, I};
use crate::operator::{assemble_liouvillian, lindblad_pair, HilbertSpace, Operator, SuperOperator};
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VParams {
    pub eps_g: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub j: f64,
    pub gamma_h1: f64,
    pub gamma_h2: f64,
    pub gamma_c1: f64,
    pub gamma_c2: f64,
    pub gamma_df: f64,
    pub gamma_db: f64,
}

impl Default for VParams {
    fn default() -> Self {
        Self {
            eps_g: 0.0,
            eps_1: 0.02,
            eps_2: 0.012,
            j: 2e-5,
            gamma_h1: 1.5e-6,
            gamma_h2: 0.0,
            gamma_c1: 4.5e-6,
            gamma_c2: 1e-9,
            gamma_df: 1e-9,
            gamma_db: 0.0,
        }
    }
}

impl VParams {
    /// Parameter names as used in configuration files.
    pub const KEYS: [&'static str; 10] = [
        "eps_g", "eps_1", "eps_2", "J", "Gamma_H1", "Gamma_H2", "Gamma_C1", "Gamma_C2", "Gamma_Df", "Gamma_Db",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "eps_g" => &mut self.eps_g,
            "eps_1" => &mut self.eps_1,
            "eps_2" => &mut self.eps_2,
            "J" => &mut self.j,
            "Gamma_H1" => &mut self.gamma_h1,
            "Gamma_H2" => &mut self.gamma_h2,
            "Gamma_C1" => &mut self.gamma_c1,
            "Gamma_C2" => &mut self.gamma_c2,
            "Gamma_Df" => &mut self.gamma_df,
            "Gamma_Db" => &mut self.gamma_db,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(key)
            .ok_or_else(|| Error::Config(format!("unknown V-system parameter '{key}'")))?;
        *slot = value;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        Self::KEYS.iter().map(|k| (*k, self.get(k).unwrap())).collect()
    }

    pub fn delta(&self) -> f64 {
        self.eps_2 - self.eps_1
    }

    pub fn gamma_star(&self) -> f64 {
        self.gamma_c1 + self.gamma_c2 + self.gamma_df + self.gamma_db
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.entries() {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{k} = {v} is not finite")));
            }
            if k.starts_with("Gamma") && v < 0.0 {
                return Err(Error::Validation(format!("{k} = {v} must be >= 0")));
            }
        }
        if self.gamma_c1 + self.gamma_c2 + self.gamma_df + self.gamma_db <= 0.0 {
            return Err(Error::Validation(
                "at least one cold-bath or excited-manifold rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Built model: Hamiltonian, Liouvillian and both partitions.
#[derive(Clone, Debug)]
pub struct VSystem {
    pub params: VParams,
    pub space: Arc<HilbertSpace>,
    pub hamiltonian: Operator,
    pub liouvillian: SuperOperator,
    /// `{|g><g|, |1><1|, |2><2|}`, named `g`, `1`, `2`.
    pub standard: Partition,
    /// `{|g><g| + |1><1|, |2><2|}`, named `A`, `2`.
    pub grouped: Partition,
}

pub fn build(params: &VParams) -> Result<VSystem> {
    params.validate()?;
    let space = Arc::new(HilbertSpace::new(["g", "1", "2"])?);
    let kb = |i, j| Operator::ket_bra(space.clone(), i, j);
    let mut h = ndarray::Array2::zeros((3, 3));
    h[[0, 0]] = c(params.eps_g);
    h[[1, 1]] = c(params.eps_1);
    h[[2, 2]] = c(params.eps_2);
    h[[1, 2]] = c(params.j);
    h[[2, 1]] = c(params.j);
    let hamiltonian = Operator::new(space.clone(), h)?;

    let channels = [
        (kb(1, 0)?, params.gamma_h1),
        (kb(2, 0)?, params.gamma_h2),
        (kb(0, 1)?, params.gamma_c1),
        (kb(0, 2)?, params.gamma_c2),
        (kb(2, 1)?, params.gamma_df),
        (kb(1, 2)?, params.gamma_db),
    ];
    let dissipators = channels
        .iter()
        .map(|(s, g)| lindblad_pair(s, 2.0 * g, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let liouvillian = assemble_liouvillian(&hamiltonian, &dissipators)?;

    let standard = Partition::basis_states(space.clone())?;
    let grouped = Partition::from_label_groups(space.clone(), &[("A", vec!["g", "1"]), ("2", vec!["2"])])?;
    Ok(VSystem {
        params: *params,
        space,
        hamiltonian,
        liouvillian,
        standard,
        grouped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VDerived {
    pub beta: f64,
    pub gamma_star: f64,
    pub delta: f64,
    /// Ground share of group A at the steady state, when one was supplied.
    pub r: Option<f64>,
}

/// Coherence-mediated transfer rate `J^2 G / (G^2 + Delta^2)`.
pub fn beta(j: f64, gamma_star: f64, delta: f64) -> Result<f64> {
    if j == 0.0 {
        return Ok(0.0);
    }
    let den = gamma_star * gamma_star + delta * delta;
    if den == 0.0 {
        return Err(Error::BetaUndefined);
    }
    Ok(j * j * gamma_star / den)
}

/// `rho_gg / (rho_gg + rho_11)` of a steady state.
pub fn ground_share(rho_s: &Operator) -> Result<f64> {
    let m = rho_s.matrix();
    let (gg, e1) = (m[[0, 0]].re, m[[1, 1]].re);
    if gg + e1 <= 0.0 {
        return Err(Error::GroupedRateUndefined);
    }
    Ok(gg / (gg + e1))
}

pub fn derived(params: &VParams, rho_s: Option<&Operator>) -> Result<VDerived> {
    let gamma_star = params.gamma_star();
    let delta = params.delta();
    Ok(VDerived {
        beta: beta(params.j, gamma_star, delta)?,
        gamma_star,
        delta,
        r: rho_s.map(ground_share).transpose()?,
    })
}

/// `(k21, k12) = (2 (beta + Gamma_Df), 2 (beta + Gamma_Db))`.
pub fn analytic_rates_standard(params: &VParams) -> Result<(f64, f64)> {
    let b = derived(params, None)?.beta;
    Ok((2.0 * (b + params.gamma_df), 2.0 * (b + params.gamma_db)))
}

/// `(k2A, kA2)` between group `A = {g, 1}` and state `2`.
pub fn analytic_rates_grouped(params: &VParams, r: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Validation(format!("ground share r = {r} outside [0, 1]")));
    }
    let p = params;
    let b = derived(p, None)?.beta;
    let den = r * (b + p.gamma_df) + p.gamma_h1 + (1.0 - r) * p.gamma_h2 + p.gamma_c1;
    if den == 0.0 {
        return Err(Error::GroupedRateUndefined);
    }
    let k2a = 2.0 * ((p.gamma_h1 + p.gamma_h2) * (b + p.gamma_df) + p.gamma_h2 * p.gamma_c1) / den;
    let ka2 = 2.0
        * ((b + p.gamma_df + p.gamma_h1 + p.gamma_c1) * p.gamma_c2
            + (b + p.gamma_db) * (p.gamma_h1 + p.gamma_h2 + p.gamma_c1))
        / den;
    Ok((k2a, ka2))
}

/// Closed-form limits of the grouped rates for strong pumping and no pumping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupedLimits {
    pub k2a_strong_h1: f64,
    pub k2a_strong_h2: f64,
    pub ka2_strong_h1: f64,
    pub ka2_strong_h2: f64,
    pub ka2_dark: f64,
}

pub fn grouped_limits(params: &VParams) -> Result<GroupedLimits> {
    let p = params;
    let b = derived(p, None)?.beta;
    let dark_den = b + p.gamma_df + p.gamma_c1;
    if dark_den == 0.0 {
        return Err(Error::GroupedRateUndefined);
    }
    Ok(GroupedLimits {
        k2a_strong_h1: 2.0 * (b + p.gamma_df),
        k2a_strong_h2: 2.0 * (b + p.gamma_df + p.gamma_c1),
        ka2_strong_h1: 2.0 * (b + p.gamma_db + p.gamma_c2),
        ka2_strong_h2: 2.0 * (b + p.gamma_db),
        ka2_dark: 2.0 * (p.gamma_c2 + (b + p.gamma_db) * p.gamma_c1 / dark_den),
    })
}

/// Steady coherence `rho_12 = i J (rho_11 - rho_22) / (Gamma* - i Delta)`.
pub fn steady_coherence(params: &VParams, rho11: f64, rho22: f64) -> C64 {
    I * params.j * (rho11 - rho22) / C64::new(params.gamma_star(), -params.delta())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaPoint {
    pub delta: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// `beta` on a grid of splittings and of `Gamma = Gamma_C2 = Gamma_Df`, other rates from `base`.
/// Rows are ordered delta-major.
pub fn sweep_beta(base: &VParams, deltas: &[f64], gammas: &[f64]) -> Result<Vec<BetaPoint>> {
    let mut out = Vec::with_capacity(deltas.len() * gammas.len());
    for &delta in deltas {
        for &gamma in gammas {
            if gamma < 0.0 {
                return Err(Error::Validation(format!("negative rate {gamma} in beta sweep")));
            }
            let gamma_star = base.gamma_c1 + 2.0 * gamma + base.gamma_db;
            out.push(BetaPoint {
                delta,
                gamma,
                beta: beta(base.j, gamma_star, delta)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn reference_derived_quantities() {
        let d = derived(&VParams::default(), None).unwrap();
        // hand arithmetic: Gamma* = 4.5e-6 + 1e-9 + 1e-9 + 0
        assert!(rel(d.gamma_star, 4.502e-6) < 1e-12);
        assert!(rel(d.delta, -0.008) < 1e-12);
        let expected = 4e-10 * 4.502e-6 / (4.502e-6f64.powi(2) + 6.4e-5);
        assert!(rel(d.beta, expected) < 1e-12);
        assert!(rel(d.beta, 2.8137e-11) < 1e-4);
        assert!(d.beta <= 4e-10 / d.gamma_star);
    }

    #[test]
    fn beta_maximal_at_zero_splitting_and_vanishes_for_wide_damping() {
        let (j, g) = (2e-5, 4.5e-6);
        let at_zero = beta(j, g, 0.0).unwrap();
        assert!(rel(at_zero, j * j / g) < 1e-14);
        for d in [1e-6, 1e-4, 0.01] {
            assert!(beta(j, g, d).unwrap() < at_zero);
        }
        assert!(beta(j, 1e12, -0.008).unwrap() < 1e-20);
    }

    #[test]
    fn beta_even_in_splitting() {
        for d in [1e-5, 0.008, 0.3] {
            assert_eq!(beta(2e-5, 4.5e-6, d).unwrap(), beta(2e-5, 4.5e-6, -d).unwrap());
        }
    }

    #[test]
    fn beta_undefined_without_damping_or_splitting() {
        let p = VParams {
            gamma_c1: 0.0,
            gamma_c2: 0.0,
            gamma_df: 0.0,
            gamma_db: 0.0,
            eps_1: 0.01,
            eps_2: 0.01,
            ..VParams::default()
        };
        assert!(matches!(derived(&p, None), Err(Error::BetaUndefined)));
    }

    #[test]
    fn standard_rates_at_reference_parameters() {
        let (k21, k12) = analytic_rates_standard(&VParams::default()).unwrap();
        assert!(rel(k21, 2.0 * (2.8137e-11 + 1e-9)) < 1e-4);
        assert!(rel(k12, 2.0 * 2.8137e-11) < 1e-4);
    }

    #[test]
    fn equal_excited_channels_give_symmetric_rates() {
        let p = VParams {
            gamma_db: 1e-9,
            ..VParams::default()
        };
        let (k21, k12) = analytic_rates_standard(&p).unwrap();
        assert_eq!(k21, k12);
    }

    #[test]
    fn grouped_forward_rate_needs_pumping() {
        let p = VParams {
            gamma_h1: 0.0,
            gamma_h2: 0.0,
            ..VParams::default()
        };
        let (k2a, ka2) = analytic_rates_grouped(&p, 1.0).unwrap();
        assert_eq!(k2a, 0.0);
        assert!(rel(ka2, grouped_limits(&p).unwrap().ka2_dark) < 1e-14);
    }

    #[test]
    fn grouped_strong_pump_limit() {
        let p = VParams {
            gamma_h1: 1e6,
            gamma_h2: 0.0,
            ..VParams::default()
        };
        let (k2a, _) = analytic_rates_grouped(&p, 0.0).unwrap();
        assert!(rel(k2a, grouped_limits(&p).unwrap().k2a_strong_h1) < 1e-9);
    }

    #[test]
    fn grouped_rejects_bad_share() {
        assert!(analytic_rates_grouped(&VParams::default(), 1.5).is_err());
    }

    #[test]
    fn build_shapes_and_trace_preservation() {
        let v = build(&VParams::default()).unwrap();
        assert_eq!(v.liouvillian.side(), 9);
        assert!(v.liouvillian.trace_preservation_error() <= 1e-12);
        assert_eq!(v.grouped.names(), ["A", "2"]);
    }

    #[test]
    fn coherence_equation_of_motion() {
        // d rho_12 / dt = (i Delta - Gamma*) rho_12 + i J (rho_11 - rho_22)
        let p = VParams::default();
        let v = build(&p).unwrap();
        let mut rho = ndarray::Array2::zeros((3, 3));
        rho[[1, 1]] = c(0.3);
        rho[[2, 2]] = c(0.2);
        rho[[0, 0]] = c(0.5);
        rho[[1, 2]] = C64::new(0.01, -0.02);
        rho[[2, 1]] = C64::new(0.01, 0.02);
        let rho = Operator::new(v.space.clone(), rho).unwrap();
        let out = v.liouvillian.apply(&rho).unwrap();
        let expected = C64::new(-p.gamma_star(), p.delta()) * rho.matrix()[[1, 2]] + I * p.j * (0.3 - 0.2);
        assert!((out.matrix()[[1, 2]] - expected).norm() < 1e-18);
        assert!(linalg::hermiticity_error(out.matrix()) < 1e-18);
    }

    #[test]
    fn beta_sweep_trends() {
        let base = VParams::default();
        let gammas = [1e-6, 1e-4, 1e-2, 0.1];
        let deltas = [0.0, 0.01, 0.1];
        let rows = sweep_beta(&base, &deltas, &gammas).unwrap();
        assert_eq!(rows.len(), 12);
        // delta = 0: decreasing in Gamma
        for w in rows[..4].windows(2) {
            assert!(w[1].beta < w[0].beta);
        }
        // fixed Gamma: decreasing in |delta|
        for g in 0..4 {
            assert!(rows[4 + g].beta < rows[g].beta && rows[8 + g].beta < rows[4 + g].beta);
        }
        // delta = 0.1, Gamma 1e-6 -> 0.1, independent arithmetic
        let b = |g: f64| {
            let gs = 4.5e-6 + 2.0 * g;
            4e-10 * gs / (gs * gs + 0.01)
        };
        assert!(rel(rows[11].beta / rows[8].beta, b(0.1) / b(1e-6)) < 1e-12);
    }

    #[test]
    fn config_keys_round_trip() {
        let mut p = VParams::default();
        p.set("Gamma_Db", 3e-9).unwrap();
        assert_eq!(p.get("Gamma_Db"), Some(3e-9));
        assert!(p.set("Gamma_X", 1.0).is_err());
        assert_eq!(p.entries().len(), 10);
    }

    #[test]
    fn negative_rate_rejected() {
        let p = VParams {
            gamma_h1: -1.0,
            ..VParams::default()
        };
        assert!(build(&p).is_err());
    }
}
