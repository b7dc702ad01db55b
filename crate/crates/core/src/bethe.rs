//! Bethe-ansatz roots and the constrained potential parameters `(v, w)`.
//!
//! For level `n` the unknowns are the polynomial roots `r₁…rₙ` together with
//! `v` and `w`; they satisfy the `n` Bethe equations
//!
//! ```text
//! Σ_{j≠i} 1/(rᵢ − rⱼ) + λ + δ/rᵢ − β/rᵢ² − 2γ/rᵢ³ = 0
//! ```
//!
//! and the two coefficient conditions of the reduced equation. All exponents
//! are taken on the decaying sheet (`β = κv`, `γ = κw/2`, `κ = α|b−aC|/|S|`),
//! so every equation is polynomial in the unknowns.

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, sqrt};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compute_scales, decay_rate, ModelParams};
use crate::numeric::linalg::{lu_solve, norm2, norm_inf, Matrix};
use crate::numeric::poly::real_roots_cubic;

/// A converged residual must satisfy `‖F‖∞ ≤ CONVERGENCE_TOL · scale`.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Minimum root separation, relative to `max(1, max|rᵢ|)`.
pub const DISTINCT_TOL: f64 = 1e-8;

const MAX_ITERATIONS: usize = 200;
const SEED_SCALES: usize = 8;
const SEED_VARIANTS: usize = 4;
/// Number of deterministic Newton starts.
pub const DEFAULT_STARTS: usize = SEED_SCALES * SEED_VARIANTS;
const ROOT_FLOOR: f64 = 1e-12;
/// `|ℱ|` below this fraction of its terms is treated as the Coulomb locus.
const COULOMB_SNAP: f64 = 1e-12;
const GAP_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BetheProblem {
    pub params: ModelParams,
    pub n: usize,
    pub epsilon: f64,
}

impl BetheProblem {
    pub fn new(params: ModelParams, n: usize, epsilon: f64) -> Self {
        BetheProblem { params, n, epsilon }
    }
}

/// Which algorithm produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    ClosedForm,
    Polynomial,
    Newton,
}

/// Another converged branch found during the multi-start search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Alternate {
    pub v: f64,
    pub w: f64,
    pub roots: Vec<f64>,
    pub residual_norm: f64,
    pub sign_consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BetheSolution {
    pub n: usize,
    pub epsilon: f64,
    pub v: f64,
    pub w: f64,
    /// Ascending.
    pub roots: Vec<f64>,
    /// Max absolute residual over all `n + 2` equations.
    pub residual_norm: f64,
    /// Largest absolute term entering the residuals, floored at 1.
    pub scale: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `w < 0` (or `v = w = 0`), the sheet on which the exponents solve the
    /// equation with a decaying prefactor.
    pub sign_consistent: bool,
    pub distinct: bool,
    /// Converged, sign consistent and every root positive.
    pub physical: bool,
    pub alternates: Vec<Alternate>,
    pub method: Method,
}

impl BetheSolution {
    pub fn in_domain_roots(&self) -> usize {
        self.roots.iter().filter(|&&r| r > 0.0).count()
    }
}

/// The `(n+1)`-scaled term of the `v` constraint and the root-sum term of the
/// `w` constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConstraintIntermediates {
    pub p: f64,
    pub q: f64,
}

/// Quantities shared by every constraint formula at fixed `(params, ε)`.
#[derive(Debug, Clone, Copy)]
struct Level {
    n: usize,
    alpha: f64,
    a: f64,
    b: f64,
    u: f64,
    s: f64,
    c: f64,
    /// `b − aC`.
    k: f64,
    /// `α|b−aC|/|S|`.
    kappa: f64,
    script_a: f64,
    script_f: f64,
    delta: f64,
    lambda: f64,
    epsilon: f64,
}

impl Level {
    fn new(problem: &BetheProblem) -> Result<Self> {
        let p = &problem.params;
        p.validate()?;
        let t = p.trig()?;
        let k = p.b - p.a * t.c;
        if k == 0.0 {
            return Err(Error::SigmaZero);
        }
        let lambda = decay_rate(p.alpha, problem.epsilon)?;
        let scales = compute_scales(p, 0.0)?;
        Ok(Level {
            n: problem.n,
            alpha: p.alpha,
            a: p.a,
            b: p.b,
            u: p.u,
            s: t.s,
            c: t.c,
            k,
            kappa: p.alpha * k.abs() / t.s.abs(),
            script_a: scales.script_a,
            script_f: scales.script_f,
            delta: 1.5 - scales.script_b / (2.0 * scales.script_a),
            lambda,
            epsilon: problem.epsilon,
        })
    }

    /// `q = −λ = √(1−ε²)/α`.
    fn q(&self) -> f64 {
        -self.lambda
    }

    fn coulomb_strength(&self) -> f64 {
        self.a * self.epsilon + self.b
    }

    /// Denominator of the `v` constraint.
    fn v_denominator(&self) -> f64 {
        let root = sqrt(1.0 - self.epsilon * self.epsilon);
        2.0 * self.alpha * self.s * self.k * (self.coulomb_strength() - root * (self.k / self.s).abs())
    }

    /// Denominator of the `w` constraint.
    fn w_denominator(&self) -> f64 {
        let root = sqrt(1.0 - self.epsilon * self.epsilon);
        2.0 * self.alpha * root * self.k * self.k - 2.0 * self.coulomb_strength() * self.script_a
    }

    fn check_denominator(&self, d: f64, reference: f64) -> Result<f64> {
        if d.abs() <= 1e-13 * reference.abs().max(f64::MIN_POSITIVE) || !d.is_finite() {
            Err(Error::ConstraintSingularity { denominator: d })
        } else {
            Ok(d)
        }
    }

    fn checked_v_denominator(&self) -> Result<f64> {
        let root = sqrt(1.0 - self.epsilon * self.epsilon);
        let reference = 2.0
            * self.alpha
            * (self.s * self.k).abs()
            * (self.coulomb_strength().abs() + root * (self.k / self.s).abs());
        self.check_denominator(self.v_denominator(), reference)
    }

    fn checked_w_denominator(&self) -> Result<f64> {
        let root = sqrt(1.0 - self.epsilon * self.epsilon);
        let reference = 2.0 * self.alpha * root * self.k * self.k
            + 2.0 * (self.coulomb_strength() * self.script_a).abs();
        self.check_denominator(self.w_denominator(), reference)
    }
}

/// `𝒫` and `𝒬` at the given roots and `v`.
pub fn constraint_intermediates(
    problem: &BetheProblem,
    roots: &[f64],
    v: f64,
) -> Result<ConstraintIntermediates> {
    let l = Level::new(problem)?;
    Ok(intermediates(&l, roots, v))
}

fn intermediates(l: &Level, roots: &[f64], v: f64) -> ConstraintIntermediates {
    let s1: f64 = roots.iter().sum();
    let n = l.n as f64;
    let ak = l.alpha * l.k;
    ConstraintIntermediates {
        p: (n + 1.0) * l.s * l.kappa * l.script_f,
        q: ak * (ak * ((2.0 * n + 1.0) * v + 2.0 * l.u * s1) - 3.0 * l.s * s1),
    }
}

/// `(v, w)` from the closed-form constraints at fixed roots.
pub fn constrained_vw(problem: &BetheProblem, roots: &[f64]) -> Result<(f64, f64)> {
    let l = Level::new(problem)?;
    if roots.len() != l.n {
        return Err(Error::InvalidParams("root count must equal n"));
    }
    constrained_vw_at(&l, roots)
}

fn constrained_vw_at(l: &Level, roots: &[f64]) -> Result<(f64, f64)> {
    let dv = l.checked_v_denominator()?;
    let dw = l.checked_w_denominator()?;
    let s1: f64 = roots.iter().sum();
    let s2: f64 = roots.iter().map(|r| r * r).sum();
    let n = l.n as f64;
    let q = l.q();
    let ak = l.alpha * l.k;
    let pp = intermediates(l, roots, 0.0).p;
    let v = (-ak * (2.0 * l.alpha * l.u * l.k - l.s * (n * n + 2.0 * n + 3.0 - 2.0 * q * s1)) + pp) / dv;
    let qq = intermediates(l, roots, v).q;
    let w = (l.s * l.kappa * (ak * v + l.s * (2.0 * q * s2 - (2.0 * n + 1.0) * s1)) + qq) / dw;
    Ok((v, w))
}

/// Ground-state constraints; exactly `(0, 0)` on the Coulomb locus (ℱ = 0 to
/// rounding).
pub fn solve_n0(problem: &BetheProblem) -> Result<BetheSolution> {
    if problem.n != 0 {
        return Err(Error::InvalidParams("solve_n0 requires n = 0"));
    }
    let l = Level::new(problem)?;
    let f_reference = 3.0 * l.s.abs() + (2.0 * l.alpha * l.u * l.k).abs();
    let (v, w) = if l.script_f.abs() <= COULOMB_SNAP * f_reference {
        (0.0, 0.0)
    } else {
        let dv = l.checked_v_denominator()?;
        let dw = l.checked_w_denominator()?;
        let shared = l.s * l.kappa + l.alpha * l.k;
        let v = l.script_f * shared / dv;
        let w = l.alpha * l.k * shared / dw * v;
        (v, w)
    };
    finish(&l, v, w, Vec::new(), 0, Method::ClosedForm)
}

/// First excited state: all real candidates of the cubic obtained by
/// substituting the closed-form `v(r₁)`, `w(r₁)` into the single Bethe
/// equation. Candidates are ordered by `r₁`.
pub fn solve_n1(problem: &BetheProblem) -> Result<Vec<BetheSolution>> {
    if problem.n != 1 {
        return Err(Error::InvalidParams("solve_n1 requires n = 1"));
    }
    let l = Level::new(problem)?;
    let dv = l.checked_v_denominator()?;
    let dw = l.checked_w_denominator()?;
    let (alpha, k, s, kappa, q) = (l.alpha, l.k, l.s, l.kappa, l.q());
    let ak = alpha * k;
    // v = v0 + v1·r₁
    let v0 = (2.0 * s * kappa * l.script_f - 2.0 * ak * (alpha * l.u * k - 3.0 * s)) / dv;
    let v1 = -2.0 * ak * s * q / dv;
    // w = (pv·v + qr·r₁ + rr·r₁²) / dw
    let pv = s * kappa * ak + 3.0 * ak * ak;
    let qr = -3.0 * s * s * kappa + 2.0 * ak * ak * l.u - 3.0 * ak * s;
    let rr = 2.0 * s * s * kappa * q;
    let w0 = v0 * pv / dw;
    let w1 = (v1 * pv + qr) / dw;
    let w2 = rr / dw;
    // κ(r₁v + w) − δ r₁² + q r₁³ = 0
    let c0 = kappa * w0;
    let c1 = kappa * (v0 + w1);
    let c2 = kappa * (v1 + w2) - l.delta;
    let c3 = q;
    let mut out = Vec::new();
    for r1 in real_roots_cubic(c0, c1, c2, c3) {
        if r1 == 0.0 || !r1.is_finite() {
            continue;
        }
        let v = v0 + v1 * r1;
        let w = (pv * v + qr * r1 + rr * r1 * r1) / dw;
        out.push(finish(&l, v, w, vec![r1], 0, Method::Polynomial)?);
    }
    Ok(out)
}

/// Residuals `[Bethe₁…Betheₙ, v-condition, w-condition]`.
pub fn bae_residuals(
    params: &ModelParams,
    epsilon: f64,
    v: f64,
    w: f64,
    roots: &[f64],
) -> Result<Vec<f64>> {
    let l = Level::new(&BetheProblem::new(*params, roots.len(), epsilon))?;
    check_roots(roots)?;
    Ok(System { level: l }.residual(&pack(roots, v, w)).0)
}

/// Largest absolute term entering [`bae_residuals`], floored at 1.
pub fn residual_scale(params: &ModelParams, epsilon: f64, v: f64, w: f64, roots: &[f64]) -> Result<f64> {
    let l = Level::new(&BetheProblem::new(*params, roots.len(), epsilon))?;
    check_roots(roots)?;
    Ok(System { level: l }.residual(&pack(roots, v, w)).1)
}

fn check_roots(roots: &[f64]) -> Result<()> {
    for (i, &r) in roots.iter().enumerate() {
        if r == 0.0 || !r.is_finite() || roots[..i].contains(&r) {
            return Err(Error::SingularRoots);
        }
    }
    Ok(())
}

fn pack(roots: &[f64], v: f64, w: f64) -> Vec<f64> {
    let mut x = roots.to_vec();
    x.push(v);
    x.push(w);
    x
}

struct System {
    level: Level,
}

impl System {
    /// Residual vector and the largest participating term.
    fn residual(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let l = &self.level;
        let n = l.n;
        let (roots, v, w) = (&x[..n], x[n], x[n + 1]);
        let beta = l.kappa * v;
        let gamma = l.kappa * w / 2.0;
        let (lambda, delta) = (l.lambda, l.delta);
        let mut out = Vec::with_capacity(n + 2);
        let mut scale = 1.0f64;
        for (i, &ri) in roots.iter().enumerate() {
            let mut pair = 0.0;
            for (j, &rj) in roots.iter().enumerate() {
                if j != i {
                    let t = 1.0 / (ri - rj);
                    pair += t;
                    scale = scale.max(t.abs());
                }
            }
            let inv = 1.0 / ri;
            let terms = [lambda, delta * inv, -beta * inv * inv, -2.0 * gamma * inv * inv * inv];
            for t in terms {
                scale = scale.max(t.abs());
            }
            out.push(pair + terms.iter().sum::<f64>());
        }
        let s2 = l.s * l.s;
        let nf = n as f64;
        let sum1: f64 = roots.iter().sum();
        let sum2: f64 = roots.iter().map(|r| r * r).sum();
        let strength = l.coulomb_strength();
        let (a, b, c, u, alpha, s) = (l.a, l.b, l.c, l.u, l.alpha, l.s);
        let lambda2_const = b * (2.0 * a * alpha * alpha * c * u * u + alpha * s * u)
            - a * alpha * c * u * (a * alpha * c * u + s)
            - alpha * alpha * b * b * u * u;
        let cond2 = [
            lambda2_const / s2,
            -2.0 * strength * v,
            (delta - 1.0) * delta,
            -2.0 * beta * lambda,
            2.0 * lambda * sum1,
            nf * (nf - 1.0),
            2.0 * nf * delta,
        ];
        let ak = alpha * l.k;
        let cond3 = [
            -2.0 * ak * (alpha * u * l.k - s) * v / s2,
            -2.0 * strength * w,
            -2.0 * beta * (delta - 1.0),
            -4.0 * gamma * lambda,
            2.0 * lambda * sum2,
            2.0 * (delta + nf - 1.0) * sum1,
            -2.0 * nf * beta,
        ];
        for t in cond2.iter().chain(cond3.iter()) {
            scale = scale.max(t.abs());
        }
        out.push(cond2.iter().sum());
        out.push(cond3.iter().sum());
        (out, scale)
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let l = &self.level;
        let n = l.n;
        let dim = n + 2;
        let (roots, v, w) = (&x[..n], x[n], x[n + 1]);
        let beta = l.kappa * v;
        let gamma = l.kappa * w / 2.0;
        let mut jac = Matrix::zeros(dim, dim);
        for (i, &ri) in roots.iter().enumerate() {
            let inv = 1.0 / ri;
            let mut diag = -l.delta * inv * inv + 2.0 * beta * inv * inv * inv
                + 6.0 * gamma * inv * inv * inv * inv;
            for (j, &rj) in roots.iter().enumerate() {
                if j != i {
                    let t = 1.0 / (ri - rj);
                    diag -= t * t;
                    jac.set(i, j, t * t);
                }
            }
            jac.set(i, i, diag);
            jac.set(i, n, -l.kappa * inv * inv);
            jac.set(i, n + 1, -l.kappa * inv * inv * inv);
        }
        let nf = n as f64;
        let strength = l.coulomb_strength();
        for (j, &rj) in roots.iter().enumerate() {
            jac.set(n, j, 2.0 * l.lambda);
            jac.set(n + 1, j, 4.0 * l.lambda * rj + 2.0 * (l.delta + nf - 1.0));
        }
        jac.set(n, n, -2.0 * strength - 2.0 * l.kappa * l.lambda);
        let ak = l.alpha * l.k;
        jac.set(
            n + 1,
            n,
            -2.0 * ak * (l.alpha * l.u * l.k - l.s) / (l.s * l.s)
                - 2.0 * l.kappa * (l.delta - 1.0)
                - 2.0 * nf * l.kappa,
        );
        jac.set(n + 1, n + 1, -2.0 * strength - 2.0 * l.kappa * l.lambda);
        jac
    }

    fn admissible(&self, x: &[f64]) -> bool {
        let roots = &x[..self.level.n];
        let spread = roots.iter().fold(1.0f64, |m, r| m.max(r.abs()));
        x.iter().all(|v| v.is_finite())
            && roots.iter().all(|r| r.abs() >= ROOT_FLOOR)
            && roots.iter().enumerate().all(|(i, ri)| {
                roots[..i].iter().all(|rj| (ri - rj).abs() >= GAP_FLOOR * spread)
            })
    }
}

struct Run {
    x: Vec<f64>,
    residual: f64,
    scale: f64,
    iterations: usize,
}

fn newton(sys: &System, mut x: Vec<f64>) -> Option<Run> {
    if !sys.admissible(&x) {
        return None;
    }
    let (mut f, mut scale) = sys.residual(&x);
    let mut fnorm = norm2(&f);
    let mut iterations = 0;
    let mut polish = 0;
    while iterations < MAX_ITERATIONS {
        if norm_inf(&f) <= 1e-15 * scale {
            break;
        }
        iterations += 1;
        let jac = sys.jacobian(&x);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = lu_solve(&jac, &neg)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            if sys.admissible(&trial) {
                let (ft, st) = sys.residual(&trial);
                let nt = norm2(&ft);
                if nt * nt <= (1.0 - 2e-4 * t) * fnorm * fnorm {
                    accepted = Some((trial, ft, st, nt));
                    break;
                }
                if norm_inf(&f) <= 1e-12 * scale && t == 1.0 {
                    // Rounding floor: accept the full step once and stop after a few.
                    accepted = Some((trial, ft, st, nt));
                    polish += 1;
                    break;
                }
            }
            t *= 0.5;
        }
        let (xn, fn_, sn, nn) = accepted?;
        x = xn;
        f = fn_;
        scale = sn;
        fnorm = nn;
        if polish >= 3 {
            break;
        }
    }
    Some(Run { residual: norm_inf(&f), x, scale, iterations })
}

/// Deterministic pseudo-random offsets in `[−1, 1]`.
fn jitter(seed: u64) -> f64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn chebyshev(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = cos((2 * i + 1) as f64 * core::f64::consts::PI / (2 * n) as f64);
            lo + (hi - lo) * 0.5 * (1.0 - x)
        })
        .collect()
}

/// The deterministic start set: Chebyshev roots over `(0, 2n/|λ|]` at eight
/// length scales, each in plain, ground-state-`(v, w)`, jittered and
/// sign-mixed variants.
fn default_starts(l: &Level) -> Vec<Vec<f64>> {
    let n = l.n;
    let length = if n == 0 { 1.0 } else { 2.0 * n as f64 / l.lambda.abs() };
    let ground = {
        let mut g = *l;
        g.n = 0;
        constrained_vw_at(&g, &[]).unwrap_or((0.0, 0.0))
    };
    let mut starts = Vec::with_capacity(DEFAULT_STARTS);
    for si in 0..SEED_SCALES {
        let factor = 0.25 * libm::pow(16.0, si as f64 / (SEED_SCALES - 1) as f64);
        let hi = length * factor;
        for variant in 0..SEED_VARIANTS {
            let roots = match variant {
                0 | 1 => chebyshev(n, 0.0, hi),
                2 => chebyshev(n, 0.0, hi)
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| r * (1.0 + 0.3 * jitter((si * 31 + i) as u64)))
                    .collect(),
                _ => chebyshev(n, -0.5 * hi, hi),
            };
            let (v, w) = if variant == 1 {
                ground
            } else {
                constrained_vw_at(l, &roots).unwrap_or(ground)
            };
            starts.push(pack(&roots, v, w));
        }
    }
    starts
}

/// Multi-start damped Newton on the full `(n + 2)`-dimensional system.
/// `seeds`, when given, replaces the default root seeds (length `n`); `(v, w)`
/// are then initialized from the closed-form constraints.
pub fn solve_general(problem: &BetheProblem, seeds: Option<&[f64]>) -> Result<BetheSolution> {
    let l = Level::new(problem)?;
    let n = l.n;
    let starts = match seeds {
        Some(s) => {
            if s.len() != n {
                return Err(Error::InvalidParams("seed count must equal n"));
            }
            let (v, w) = constrained_vw_at(&l, s).unwrap_or((0.0, 0.0));
            vec![pack(s, v, w)]
        }
        None => default_starts(&l),
    };
    let sys = System { level: l };
    let mut runs: Vec<Run> = Vec::new();
    for start in starts.iter() {
        let mut x = start.clone();
        for attempt in 0..3u64 {
            if let Some(run) = newton(&sys, x.clone()) {
                runs.push(run);
                break;
            }
            // Singular Jacobian or inadmissible start: perturb the roots.
            for (i, r) in x[..n].iter_mut().enumerate() {
                *r *= 1.0 + 1e-3 * (attempt + 1) as f64 * jitter(i as u64 + 97 * attempt);
            }
        }
    }
    let total = starts.len();
    let mut candidates: Vec<(Run, Candidate)> = runs
        .into_iter()
        .map(|run| {
            let c = Candidate::new(&run, n);
            (run, c)
        })
        .collect();
    candidates.sort_by(|a, b| a.1.rank(&b.1));
    let Some(((best, best_c), rest)) = candidates.split_first() else {
        return Err(Error::ConvergenceFailure { best_residual: f64::INFINITY, starts: total });
    };
    if !best_c.converged {
        return Err(Error::ConvergenceFailure {
            best_residual: best.residual / best.scale,
            starts: total,
        });
    }
    let mut roots = best.x[..n].to_vec();
    roots.sort_by(f64::total_cmp);
    let mut solution = finish(&sys.level, best.x[n], best.x[n + 1], roots, best.iterations, Method::Newton)?;
    for (run, c) in rest {
        if !c.converged {
            continue;
        }
        let mut r = run.x[..n].to_vec();
        r.sort_by(f64::total_cmp);
        let same = |a: &[f64], b: &[f64], va: f64, vb: f64| {
            a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-8 * (1.0 + x.abs()))
                && (va - vb).abs() <= 1e-8 * (1.0 + va.abs())
        };
        if same(&r, &solution.roots, run.x[n], solution.v)
            || solution.alternates.iter().any(|alt| same(&r, &alt.roots, run.x[n], alt.v))
        {
            continue;
        }
        solution.alternates.push(Alternate {
            v: run.x[n],
            w: run.x[n + 1],
            roots: r,
            residual_norm: run.residual,
            sign_consistent: c.sign_consistent,
        });
    }
    Ok(solution)
}

struct Candidate {
    converged: bool,
    sign_consistent: bool,
    positive: bool,
    rel: f64,
    roots: Vec<f64>,
}

impl Candidate {
    fn new(run: &Run, n: usize) -> Self {
        let mut roots = run.x[..n].to_vec();
        roots.sort_by(f64::total_cmp);
        let (v, w) = (run.x[n], run.x[n + 1]);
        Candidate {
            converged: run.residual <= CONVERGENCE_TOL * run.scale && distinct(&roots),
            sign_consistent: sign_consistent(v, w),
            positive: roots.iter().all(|&r| r > 0.0),
            rel: run.residual / run.scale,
            roots,
        }
    }

    fn rank(&self, other: &Self) -> core::cmp::Ordering {
        other
            .converged
            .cmp(&self.converged)
            .then(other.sign_consistent.cmp(&self.sign_consistent))
            .then(other.positive.cmp(&self.positive))
            .then(self.rel.total_cmp(&other.rel))
            .then_with(|| {
                for (a, b) in self.roots.iter().zip(&other.roots) {
                    match a.total_cmp(b) {
                        core::cmp::Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                core::cmp::Ordering::Equal
            })
    }
}

fn sign_consistent(v: f64, w: f64) -> bool {
    w < 0.0 || (w == 0.0 && v == 0.0)
}

fn distinct(roots: &[f64]) -> bool {
    let spread = roots.iter().fold(1.0f64, |m, r| m.max(r.abs()));
    roots.windows(2).all(|p| (p[1] - p[0]).abs() > DISTINCT_TOL * spread)
        && roots.iter().all(|&r| r != 0.0)
}

fn finish(l: &Level, v: f64, w: f64, roots: Vec<f64>, iterations: usize, method: Method) -> Result<BetheSolution> {
    let distinct = distinct(&roots);
    let sys = System { level: *l };
    let (res, scale) = if distinct {
        let (f, s) = sys.residual(&pack(&roots, v, w));
        (norm_inf(&f), s)
    } else {
        (f64::INFINITY, 1.0)
    };
    let converged = distinct && res <= CONVERGENCE_TOL * scale;
    let sign_consistent = sign_consistent(v, w);
    Ok(BetheSolution {
        n: l.n,
        epsilon: l.epsilon,
        v,
        w,
        physical: converged && sign_consistent && roots.iter().all(|&r| r > 0.0),
        roots,
        residual_norm: res,
        scale,
        iterations,
        converged,
        sign_consistent,
        distinct,
        alternates: Vec::new(),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Branch;
    use crate::spectrum::energy;
    use core::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn problem(params: ModelParams, n: usize) -> Option<BetheProblem> {
        for br in [Branch::Minus, Branch::Plus] {
            let p = params.with_branch(br);
            if let Ok(e) = energy(&p, n) {
                if e.physical {
                    return Some(BetheProblem::new(p, n, e.epsilon));
                }
            }
        }
        None
    }

    fn generic() -> ModelParams {
        ModelParams::new(0.7, 0.9, 1.3, 0.6, -1.1, Branch::Minus).unwrap()
    }

    #[test]
    fn coulomb_point_ground_state_vanishes() {
        let p = ModelParams::new(1.0, 1.0, 1.5, -FRAC_PI_4, -1.0, Branch::Minus).unwrap();
        let sol = solve_n0(&BetheProblem::new(p, 0, -12.0 / 13.0)).unwrap();
        assert_eq!((sol.v, sol.w), (0.0, 0.0));
        assert!(sol.converged && sol.physical && sol.roots.is_empty());
        assert!(sol.residual_norm < 1e-14);
    }

    #[test]
    fn ground_state_generic_plug_back() {
        let prob = problem(generic(), 0).expect("physical level");
        let sol = solve_n0(&prob).unwrap();
        let res = bae_residuals(&prob.params, prob.epsilon, sol.v, sol.w, &[]).unwrap();
        assert_eq!(res.len(), 2);
        assert!(norm_inf(&res) <= 1e-12 * sol.scale, "{res:?}");
        let (v, w) = constrained_vw(&prob, &[]).unwrap();
        assert!((v - sol.v).abs() < 1e-12 * sol.v.abs().max(1.0));
        assert!((w - sol.w).abs() < 1e-12 * sol.w.abs().max(1.0));
        let g = solve_general(&prob, None).unwrap();
        assert!((g.v - sol.v).abs() < 1e-12 * sol.v.abs().max(1.0));
        assert!((g.w - sol.w).abs() < 1e-12 * sol.w.abs().max(1.0));
    }

    #[test]
    fn spec_ground_instance() {
        let p = ModelParams::new(0.5, -1.0, 0.25, FRAC_PI_6, -1.0, Branch::Minus).unwrap();
        for br in Branch::BOTH {
            let p = p.with_branch(br);
            let e = energy(&p, 0).unwrap();
            if !e.bound {
                continue;
            }
            let prob = BetheProblem::new(p, 0, e.epsilon);
            match solve_n0(&prob) {
                Ok(sol) => {
                    let res = bae_residuals(&p, e.epsilon, sol.v, sol.w, &[]).unwrap();
                    assert!(norm_inf(&res) <= 1e-12 * sol.scale);
                }
                Err(err) => assert!(matches!(err, Error::ConstraintSingularity { .. })),
            }
        }
    }

    #[test]
    fn first_excited_candidates_and_newton_agree() {
        let prob = problem(generic(), 1).expect("physical level");
        let cands = solve_n1(&prob).unwrap();
        assert!(!cands.is_empty() && cands.len() <= 3);
        for c in &cands {
            let res = bae_residuals(&prob.params, prob.epsilon, c.v, c.w, &c.roots).unwrap();
            assert!(res[0].abs() <= 1e-12 * c.scale, "{res:?}");
            assert!(norm_inf(&res) <= 1e-10 * c.scale);
        }
        let g = solve_general(&prob, None).unwrap();
        let m = cands
            .iter()
            .find(|c| (c.roots[0] - g.roots[0]).abs() < 1e-6 * (1.0 + g.roots[0].abs()))
            .expect("Newton solution among the polynomial candidates");
        assert!((m.roots[0] - g.roots[0]).abs() <= 1e-10 * (1.0 + g.roots[0].abs()));
        assert!((m.v - g.v).abs() <= 1e-10 * (1.0 + g.v.abs()));
        assert!((m.w - g.w).abs() <= 1e-10 * (1.0 + g.w.abs()));
    }

    #[test]
    fn second_level_converges() {
        let prob = problem(generic(), 2).expect("physical level");
        let sol = solve_general(&prob, None).unwrap();
        assert!(sol.converged && sol.distinct, "{sol:?}");
        assert_eq!(sol.roots.len(), 2);
        assert!(sol.residual_norm <= 1e-10 * sol.scale);
    }

    #[test]
    fn residual_sensitivity() {
        let prob = problem(generic(), 2).expect("physical level");
        let sol = solve_general(&prob, None).unwrap();
        let base = bae_residuals(&prob.params, prob.epsilon, sol.v, sol.w, &sol.roots).unwrap();
        let mut moved = sol.roots.clone();
        moved[0] += 1e-3;
        let pert = bae_residuals(&prob.params, prob.epsilon, sol.v, sol.w, &moved).unwrap();
        assert!(pert[0].abs() > base[0].abs());
    }

    #[test]
    fn root_errors() {
        let p = generic();
        assert_eq!(bae_residuals(&p, 0.2, 0.1, -0.1, &[1.0, 1.0]), Err(Error::SingularRoots));
        assert_eq!(bae_residuals(&p, 0.2, 0.1, -0.1, &[0.0]), Err(Error::SingularRoots));
        let r = bae_residuals(&p, 0.2, 0.1, -0.1, &[]).unwrap();
        assert_eq!(r.len(), 2);
    }
}
