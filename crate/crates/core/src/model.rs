//! Model parameters and the closed-form coefficient algebra of the
//! Schrödinger-like master equation
//!
//! ```text
//! ρ₁'' + W(r) ρ₁ = 0,   W(r) = c0 + c1/r + … + c6/r⁶
//! ```
//!
//! obtained from the rotated radial Dirac system with `V = a·z(r)`,
//! `U = b·z(r)` and `z(r) = u/r + v/r² + w/r³`, in units `m = ħ = 1`,
//! `c = 1/α`.

use core::f64::consts::FRAC_PI_2;

use libm::{cos, sin, sqrt};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|sin 2η|` below this is treated as a degenerate rotation.
const ROTATION_EPS: f64 = 1e-12;

/// Sign choice in front of the energy radical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

/// Fixed physical and geometric inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelParams {
    /// Fine-structure constant; `c = 1/α`.
    pub alpha: f64,
    /// Scalar potential strength, `V(r) = a·z(r)`.
    pub a: f64,
    /// Metric potential strength, `U(r) = b·z(r)`.
    pub b: f64,
    /// Spinor rotation angle in radians.
    pub eta: f64,
    /// Coulomb coefficient of `z(r)`.
    pub u: f64,
    pub branch: Branch,
}

impl ModelParams {
    pub fn new(alpha: f64, a: f64, b: f64, eta: f64, u: f64, branch: Branch) -> Result<Self> {
        let params = ModelParams { alpha, a, b, eta, u, branch };
        params.validate()?;
        Ok(params)
    }

    /// Checks every hard invariant: `α > 0`, `|η| ≤ π/2`, `S ≠ 0`, `a ≠ 0`, `u ≠ 0`.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.a, self.b, self.eta, self.u]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParams("alpha must be positive"));
        }
        if self.a == 0.0 {
            return Err(Error::InvalidParams("a must be nonzero"));
        }
        if self.u == 0.0 {
            return Err(Error::InvalidParams("u must be nonzero"));
        }
        self.trig()?.require_rotation()?;
        Ok(())
    }

    pub fn with_branch(self, branch: Branch) -> Self {
        ModelParams { branch, ..self }
    }

    pub fn trig(&self) -> Result<Trig> {
        derive_trig(self.eta)
    }

    /// The region `u < 0` is the one the model is usually studied in.
    /// Other signs are accepted.
    pub fn in_preferred_region(&self) -> bool {
        self.u < 0.0
    }

    /// `b − aC`, the combination that multiplies every `v`, `w` term.
    pub fn b_minus_ac(&self) -> Result<f64> {
        Ok(self.b - self.a * self.trig()?.c)
    }

    /// Signed violation `(b − aC)α − 3S/(2u)` of the Coulomb condition.
    pub fn coulomb_mismatch(&self) -> Result<f64> {
        let t = self.trig()?;
        Ok((self.b - self.a * t.c) * self.alpha - 3.0 * t.s / (2.0 * self.u))
    }

    /// The metric strength `b` that puts `(α, a, η, u)` on the Coulomb locus.
    pub fn coulomb_b(&self) -> Result<f64> {
        let t = self.trig()?;
        t.require_rotation()?;
        Ok(self.a * t.c + 3.0 * t.s / (2.0 * self.u * self.alpha))
    }

    pub fn potential(&self, v: f64, w: f64) -> PotentialCoefficients {
        PotentialCoefficients { u: self.u, v, w }
    }
}

/// `C = cos 2η`, `S = sin 2η`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Trig {
    pub c: f64,
    pub s: f64,
}

impl Trig {
    fn require_rotation(self) -> Result<Self> {
        if self.s.abs() < ROTATION_EPS {
            Err(Error::DegenerateRotation)
        } else {
            Ok(self)
        }
    }
}

pub fn derive_trig(eta: f64) -> Result<Trig> {
    if !(eta.abs() <= FRAC_PI_2) {
        return Err(Error::Domain { what: "eta", value: eta });
    }
    Ok(Trig { c: cos(2.0 * eta), s: sin(2.0 * eta) })
}

/// Coefficients of `z(r) = u/r + v/r² + w/r³`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PotentialCoefficients {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl PotentialCoefficients {
    pub fn coulomb(u: f64) -> Self {
        PotentialCoefficients { u, v: 0.0, w: 0.0 }
    }

    pub fn is_coulomb(&self) -> bool {
        self.v == 0.0 && self.w == 0.0
    }

    pub fn z(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        x * (self.u + x * (self.v + x * self.w))
    }

    pub fn dz(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        -x * x * (self.u + x * (2.0 * self.v + x * 3.0 * self.w))
    }

    pub fn d2z(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        x * x * x * (2.0 * self.u + x * (6.0 * self.v + x * 12.0 * self.w))
    }
}

/// Scales that recur throughout the energy and constraint formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DerivedScales {
    /// 𝒜 = √(α²S²(b−aC)²), always ≥ 0.
    pub script_a: f64,
    /// ℬ = α(b−aC)(2αu(b−aC) − 3S).
    pub script_b: f64,
    /// σ = √(α²w²(b−aC)²/S²), always ≥ 0.
    pub sigma: f64,
    /// ℱ = 3S − 2αu(b−aC); vanishes on the Coulomb locus.
    pub script_f: f64,
}

pub fn compute_scales(params: &ModelParams, w: f64) -> Result<DerivedScales> {
    let t = params.trig()?.require_rotation()?;
    let alpha = params.alpha;
    let k = params.b - params.a * t.c;
    let script_f = 3.0 * t.s - 2.0 * alpha * params.u * k;
    Ok(DerivedScales {
        script_a: alpha * t.s.abs() * k.abs(),
        script_b: -alpha * k * script_f,
        sigma: alpha * w.abs() * k.abs() / t.s.abs(),
        script_f,
    })
}

/// Exponents of the prefactor `exp(δ ln r + γ/r² + β/r + λr)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ExponentParams {
    pub delta: f64,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ExponentParams {
    /// `Δ(r)`.
    pub fn phase(&self, r: f64) -> f64 {
        self.delta * libm::log(r) + self.gamma / (r * r) + self.beta / r + self.lambda * r
    }

    /// `Δ'(r)`.
    pub fn d_phase(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        self.lambda + x * (self.delta - x * (self.beta + 2.0 * x * self.gamma))
    }

    /// `Δ''(r)`.
    pub fn d2_phase(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        x * x * (-self.delta + x * (2.0 * self.beta + 6.0 * x * self.gamma))
    }
}

/// `λ = −√((1−ε²)/α²)`.
pub fn decay_rate(alpha: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon.abs() < 1.0) {
        return Err(Error::NonNormalizable { epsilon });
    }
    Ok(-sqrt(1.0 - epsilon * epsilon) / alpha)
}

/// Exponents from the Riccati solution.
///
/// With `v = w = 0` the printed formulas are 0/0; the limit `w → 0⁻` is
/// returned: `δ = 3/2 − ℬ/(2𝒜)` (exactly 3/2 on the Coulomb locus, where
/// ℬ = 0) and `β = γ = 0`.
pub fn compute_exponents(
    params: &ModelParams,
    epsilon: f64,
    v: f64,
    w: f64,
) -> Result<ExponentParams> {
    let t = params.trig()?.require_rotation()?;
    let lambda = decay_rate(params.alpha, epsilon)?;
    let alpha = params.alpha;
    let k = params.b - params.a * t.c;
    if w == 0.0 {
        if v != 0.0 {
            return Err(Error::UnsupportedDegeneracy);
        }
        if k == 0.0 {
            return Err(Error::DegenerateCoulombLimit);
        }
        let scales = compute_scales(params, 0.0)?;
        return Ok(ExponentParams {
            delta: 1.5 - scales.script_b / (2.0 * scales.script_a),
            lambda,
            beta: 0.0,
            gamma: 0.0,
        });
    }
    if k == 0.0 {
        return Err(Error::SigmaZero);
    }
    let sigma = alpha * w.abs() * k.abs() / t.s.abs();
    let delta = 1.5
        + alpha * w * k * (2.0 * alpha * params.u * k - 3.0 * t.s) / (2.0 * sigma * t.s * t.s);
    Ok(ExponentParams {
        delta,
        lambda,
        beta: -(v / w) * sigma,
        gamma: -sigma / 2.0,
    })
}

/// Exponents continued from the `w < 0` sheet: `δ = 3/2 − ℬ/(2𝒜)`,
/// `β = κv`, `γ = κw/2` with `κ = α|b−aC|/|S|`.
///
/// Coincides with [`compute_exponents`] whenever `w < 0` and in the Coulomb
/// limit, and is affine in `(v, w)` everywhere, which is what the energy
/// closed form and the constraint solvers assume.
pub fn continued_exponents(
    params: &ModelParams,
    epsilon: f64,
    v: f64,
    w: f64,
) -> Result<ExponentParams> {
    let t = params.trig()?.require_rotation()?;
    let lambda = decay_rate(params.alpha, epsilon)?;
    let k = params.b - params.a * t.c;
    if k == 0.0 {
        return Err(Error::SigmaZero);
    }
    let scales = compute_scales(params, w)?;
    let kappa = params.alpha * k.abs() / t.s.abs();
    Ok(ExponentParams {
        delta: 1.5 - scales.script_b / (2.0 * scales.script_a),
        lambda,
        beta: kappa * v,
        gamma: kappa * w / 2.0,
    })
}

/// `Λ₂, Λ₃, Λ₄` as printed, i.e. `S²` times the r⁻², r⁻³, r⁻⁴ coefficients.
pub fn lambda_coefficients(
    params: &ModelParams,
    epsilon: f64,
    pot: &PotentialCoefficients,
) -> Result<[f64; 3]> {
    let t = params.trig()?;
    let (alpha, a, b, c, s) = (params.alpha, params.a, params.b, t.c, t.s);
    let (u, v, w) = (pot.u, pot.v, pot.w);
    let e = epsilon;
    let l2 = -b * (2.0 * s * s * v - 2.0 * a * alpha * alpha * c * u * u - alpha * s * u)
        - a * alpha * c * u * (a * alpha * c * u + s)
        - 2.0 * a * s * s * v * e
        - alpha * alpha * b * b * u * u;
    let l3 = -2.0
        * (b * (-2.0 * a * alpha * alpha * c * u * v + s * s * w - alpha * s * v)
            + a * alpha * c * v * (a * alpha * c * u + s)
            + a * s * s * w * e
            + alpha * alpha * b * b * u * v);
    let k = b - a * c;
    let l4 = alpha * k * (3.0 * s * w - alpha * k * (2.0 * u * w + v * v));
    Ok([l2, l3, l4])
}

/// Coefficients of `W(r) = Σ c_k r^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EffectivePotentialTerms {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl EffectivePotentialTerms {
    pub fn new(params: &ModelParams, epsilon: f64, pot: &PotentialCoefficients) -> Result<Self> {
        let t = params.trig()?.require_rotation()?;
        let [l2, l3, l4] = lambda_coefficients(params, epsilon, pot)?;
        let s2 = t.s * t.s;
        let alpha = params.alpha;
        let k = params.b - params.a * t.c;
        let core = alpha * alpha * k * k / s2;
        Ok(EffectivePotentialTerms {
            c0: (epsilon * epsilon - 1.0) / (alpha * alpha),
            c1: -2.0 * pot.u * (params.a * epsilon + params.b),
            c2: l2 / s2,
            c3: l3 / s2,
            c4: l4 / s2,
            c5: -2.0 * core * pot.v * pot.w,
            c6: -core * pot.w * pot.w,
        })
    }

    pub fn as_array(&self) -> [f64; 7] {
        [self.c0, self.c1, self.c2, self.c3, self.c4, self.c5, self.c6]
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        let c = self.as_array();
        c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
    }

    /// The individual terms `c_k r^{-k}`, for rescaling residuals.
    pub fn terms(&self, r: f64) -> [f64; 7] {
        let x = 1.0 / r;
        let mut out = self.as_array();
        let mut p = 1.0;
        for term in out.iter_mut() {
            *term *= p;
            p *= x;
        }
        out
    }
}

pub fn effective_potential(
    params: &ModelParams,
    epsilon: f64,
    pot: &PotentialCoefficients,
    r: f64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "r", value: r });
    }
    Ok(EffectivePotentialTerms::new(params, epsilon, pot)?.eval(r))
}

/// Coefficients of the reduced equation
/// `r³R'' + (2λr³ + 2δr² − 2βr − 4γ)R' + (ξ₂r² + ξ₁r/S² + ξ₀/S²)R = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct XiCoeffs {
    pub xi0: f64,
    pub xi1: f64,
    pub xi2: f64,
}

pub fn xi_coeffs(
    params: &ModelParams,
    epsilon: f64,
    pot: &PotentialCoefficients,
    exps: &ExponentParams,
) -> Result<XiCoeffs> {
    let t = params.trig()?.require_rotation()?;
    let [l2, l3, _] = lambda_coefficients(params, epsilon, pot)?;
    let s2 = t.s * t.s;
    let ExponentParams { delta, lambda, beta, gamma } = *exps;
    Ok(XiCoeffs {
        xi0: l3 - 2.0 * s2 * (beta * (delta - 1.0) + 2.0 * gamma * lambda),
        xi1: l2 + s2 * ((delta - 1.0) * delta - 2.0 * beta * lambda),
        xi2: 2.0 * delta * lambda - 2.0 * pot.u * (params.a * epsilon + params.b),
    })
}

/// Coefficients of `R'' + (aH/r + bH/r² + cH/r³ + dH/r⁴ + kH) R = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HeunCoeffs {
    pub a_h: f64,
    pub b_h: f64,
    pub c_h: f64,
    pub d_h: f64,
    pub k_h: f64,
}

/// Doubly confluent Heun form of the master equation; only defined without
/// the inverse-cube term.
pub fn heun_coefficients(params: &ModelParams, epsilon: f64, v: f64) -> Result<HeunCoeffs> {
    heun_coefficients_for(params, epsilon, &params.potential(v, 0.0))
}

/// As [`heun_coefficients`], rejecting potentials that carry an inverse-cube term.
pub fn heun_coefficients_for(
    params: &ModelParams,
    epsilon: f64,
    pot: &PotentialCoefficients,
) -> Result<HeunCoeffs> {
    if pot.w != 0.0 {
        return Err(Error::Classification { w: pot.w });
    }
    let terms = EffectivePotentialTerms::new(params, epsilon, pot)?;
    let t = params.trig()?;
    let k = params.b - params.a * t.c;
    Ok(HeunCoeffs {
        a_h: terms.c1,
        b_h: terms.c2,
        c_h: terms.c3,
        d_h: -params.alpha * params.alpha * k * k * pot.v * pot.v / (t.s * t.s),
        k_h: terms.c0,
    })
}

/// The spin–orbit number entering the unrotated first-order system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpinorContext {
    pub lam_ang: f64,
}

/// `A_r(r) = (α/S)(V − C·U) − (λ/r)(1 + α²U)`.
pub fn vector_potential(
    params: &ModelParams,
    ctx: &SpinorContext,
    pot: &PotentialCoefficients,
    r: f64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "r", value: r });
    }
    let t = params.trig()?.require_rotation()?;
    let z = pot.z(r);
    let (vv, uu) = (params.a * z, params.b * z);
    let alpha = params.alpha;
    Ok(alpha / t.s * (vv - t.c * uu) - ctx.lam_ang / r * (1.0 + alpha * alpha * uu))
}
