//! Closed-form energies of the quasi-exactly solvable levels.
//!
//! The energy follows from squaring the termination condition
//! `ξ₂ + 2nλ = 0`; every result is therefore re-checked against the
//! unsquared condition and flagged `physical` only if it holds.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use libm::sqrt;

use crate::error::{Error, Result};
use crate::model::{compute_scales, decay_rate, Branch, ModelParams};

/// Relative tolerance for the Coulomb locus and the termination check.
pub const CONDITION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EnergyResult {
    pub n: usize,
    pub epsilon: f64,
    pub branch: Branch,
    /// `|ε| < 1` and the unsquared termination condition holds.
    pub physical: bool,
    /// `|ε| < 1`.
    pub bound: bool,
    /// `ξ₂ + 2nλ` at this energy; `NaN` when not bound.
    pub condition_residual: f64,
}

/// `ℬ − (2n+3)𝒜`, factored through `|b − aC|` to avoid cancellation.
fn level_gap(params: &ModelParams, n: usize) -> Result<f64> {
    let t = params.trig()?;
    let k = params.b - params.a * t.c;
    let inner = libm::copysign(1.0, k) * (2.0 * params.alpha * params.u * k - 3.0 * t.s)
        - (2 * n + 3) as f64 * t.s.abs();
    Ok(params.alpha * k.abs() * inner)
}

/// `εₙ` on `params.branch`.
pub fn energy(params: &ModelParams, n: usize) -> Result<EnergyResult> {
    params.validate()?;
    let scales = compute_scales(params, 0.0)?;
    let (a, b, u, alpha) = (params.a, params.b, params.u, params.alpha);
    let g = level_gap(params, n)?;
    let t = alpha * alpha * scales.script_a * scales.script_a * u * u;
    let g2 = g * g;
    let p_ab = 4.0 * a * b * t;
    let p_aa = 4.0 * a * a * t;
    let denominator = p_aa + g2;
    if !(denominator > 0.0) {
        return Err(Error::DegenerateEnergy { denominator });
    }
    let radicand = 4.0 * t * (a * a - b * b) * g2 + g2 * g2;
    if radicand < 0.0 {
        return Err(Error::NoRealEnergy { radicand });
    }
    let epsilon = (-p_ab + params.branch.sign() * sqrt(radicand)) / denominator;
    Ok(classify(params, n, epsilon))
}

/// Both branches, `[plus, minus]`.
pub fn energies(params: &ModelParams, n: usize) -> Result<[EnergyResult; 2]> {
    Ok([
        energy(&params.with_branch(Branch::Plus), n)?,
        energy(&params.with_branch(Branch::Minus), n)?,
    ])
}

pub fn ground_energy(params: &ModelParams) -> Result<EnergyResult> {
    energy(params, 0)
}

pub fn first_excited_energy(params: &ModelParams) -> Result<EnergyResult> {
    energy(params, 1)
}

/// Ground-state energy written through ℱ, valid only on the Coulomb locus
/// `(b − aC)α = 3S/(2u)`.
pub fn coulomb_ground_energy(params: &ModelParams) -> Result<EnergyResult> {
    params.validate()?;
    let tr = params.trig()?;
    let (a, b, u, alpha, s) = (params.a, params.b, params.u, params.alpha, tr.s);
    let mismatch = params.coulomb_mismatch()?;
    let reference = ((b - a * tr.c) * alpha).abs().max((3.0 * s / (2.0 * u)).abs());
    if mismatch.abs() > CONDITION_TOL * reference {
        return Err(Error::NotCoulombPoint { mismatch });
    }
    let f = compute_scales(params, 0.0)?.script_f;
    let sgn_u = libm::copysign(1.0, u);
    let x = f * u.abs() + 3.0 * s * u;
    let y = f + 3.0 * s * sgn_u;
    let u2 = u * u;
    let u4 = u2 * u2;
    let base = alpha * alpha * s * s * u4;
    let denominator = 4.0 * a * a * base + x * x;
    if !(denominator > 0.0) {
        return Err(Error::DegenerateEnergy { denominator });
    }
    let radicand = 4.0 * alpha * alpha * s * s * (a * a - b * b) * x * x + y * y * y * y;
    if radicand < 0.0 {
        return Err(Error::NoRealEnergy { radicand });
    }
    let epsilon = (-4.0 * a * b * base + params.branch.sign() * u2 * sqrt(radicand)) / denominator;
    Ok(classify(params, 0, epsilon))
}

/// `ξ₂ + 2nλ = 2(δ + n)λ − 2u(aε + b)` with the exponent `δ` of the
/// decaying sheet.
pub fn termination_residual(params: &ModelParams, n: usize, epsilon: f64) -> Result<(f64, f64)> {
    let lambda = decay_rate(params.alpha, epsilon)?;
    let scales = compute_scales(params, 0.0)?;
    if scales.script_a == 0.0 {
        return Err(Error::DegenerateCoulombLimit);
    }
    let delta = 1.5 - scales.script_b / (2.0 * scales.script_a);
    let coulomb = 2.0 * params.u * (params.a * epsilon + params.b);
    let xi2 = 2.0 * delta * lambda - coulomb;
    Ok((xi2 + 2.0 * n as f64 * lambda, xi2))
}

fn classify(params: &ModelParams, n: usize, epsilon: f64) -> EnergyResult {
    let bound = epsilon.abs() < 1.0;
    let (physical, condition_residual) = match termination_residual(params, n, epsilon) {
        Ok((res, xi2)) => (res.abs() <= CONDITION_TOL * xi2.abs().max(1.0), res),
        Err(_) => (false, f64::NAN),
    };
    EnergyResult { n, epsilon, branch: params.branch, physical: bound && physical, bound, condition_residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, PI};

    fn coulomb_point(branch: Branch) -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.5, -FRAC_PI_4, -1.0, branch).unwrap()
    }

    #[test]
    fn coulomb_point_both_branches() {
        let [plus, minus] = energies(&coulomb_point(Branch::Plus), 0).unwrap();
        assert!(plus.epsilon.abs() < 1e-15);
        assert!((minus.epsilon + 12.0 / 13.0).abs() < 1e-15);
        assert!(plus.physical && minus.physical);
        assert!(plus.condition_residual.abs() < 1e-14);
        let g = ground_energy(&coulomb_point(Branch::Minus)).unwrap();
        assert_eq!(g, minus);
    }

    #[test]
    fn spurious_branches() {
        let p = ModelParams::new(1.0, 1.0, -1.5, FRAC_PI_4, -1.0, Branch::Plus).unwrap();
        let [plus, minus] = energies(&p, 0).unwrap();
        assert!((plus.epsilon - 12.0 / 13.0).abs() < 1e-15);
        assert!(minus.epsilon.abs() < 1e-15);
        assert!(!plus.physical && !minus.physical);
        assert!(plus.bound && minus.bound);
    }

    #[test]
    fn equal_strengths_collapse() {
        let p = ModelParams::new(0.37, -0.8, -0.8, 0.9, -1.3, Branch::Minus).unwrap();
        for n in 0..5 {
            let e = energy(&p, n).unwrap();
            assert_eq!(e.epsilon, -1.0);
            assert!(!e.bound && !e.physical);
        }
    }

    #[test]
    fn coulomb_form_matches_general() {
        for i in 1..20 {
            let eta = -PI / 2.0 * i as f64 / 20.0;
            for u in [-1.0, -0.4, 0.7] {
                let mut p = ModelParams::new(0.8, 1.1, 0.0, eta, u, Branch::Plus).unwrap();
                p.b = p.coulomb_b().unwrap();
                for br in Branch::BOTH {
                    let q = p.with_branch(br);
                    let (Ok(c), Ok(g)) = (coulomb_ground_energy(&q), energy(&q, 0)) else {
                        continue;
                    };
                    assert!((c.epsilon - g.epsilon).abs() < 1e-12, "{c:?} {g:?}");
                }
            }
        }
        let mut off = coulomb_point(Branch::Plus);
        off.u *= 1.1;
        assert!(matches!(coulomb_ground_energy(&off), Err(Error::NotCoulombPoint { .. })));
    }

    #[test]
    fn coulomb_form_positive_u() {
        let mut p = ModelParams::new(1.0, 1.0, 0.0, FRAC_PI_4, 1.0, Branch::Minus).unwrap();
        p.b = p.coulomb_b().unwrap();
        assert!((p.b - 1.5).abs() < 1e-15);
        let c = coulomb_ground_energy(&p).unwrap();
        let g = energy(&p, 0).unwrap();
        assert!((c.epsilon - g.epsilon).abs() < 1e-12);
        assert!((c.epsilon + 12.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_scale_is_degenerate() {
        let c = crate::model::derive_trig(0.3).unwrap().c;
        let p = ModelParams::new(1.0, 2.0, 2.0 * c, 0.3, -1.0, Branch::Plus).unwrap();
        assert!(matches!(energy(&p, 0), Err(Error::DegenerateEnergy { .. })));
    }
}
