//! Numerical oracles that certify analytic solutions independently of the
//! code paths that produced them.

mod fd;
mod qes;

pub use fd::{fd_eigensolve, fd_eigensolve_checked, oracle_grid, OracleReport, ORACLE_POINTS};
pub use qes::{qes_form_check, qes_operator_check, Operator, QesCheck, QesReport, QES_LABELS};

use alloc::vec::Vec;

use libm::sqrt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bethe::{solve_n0, BetheProblem, BetheSolution};
use crate::error::Result;
use crate::model::{
    continued_exponents, lambda_coefficients, vector_potential, xi_coeffs, Branch,
    EffectivePotentialTerms, ModelParams, SpinorContext,
};
use crate::numeric::poly::from_roots;
use crate::spectrum::{coulomb_ground_energy, energy};
use crate::wavefunction::{eval_rho1, eval_rho2_with_deriv, unrotate, Grid, RadialSolution};

/// Fraction of grid points dropped at each end of residual and derivative scans.
pub const EDGE_FRACTION: f64 = 0.05;
/// Tolerance of [`master_consistency`], relative to the per-equation scale.
pub const MASTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ResidualReport {
    pub max_rel: f64,
    /// Root-mean-square relative residual.
    pub l2: f64,
    pub grid: Grid,
    pub worst_r: f64,
    /// Largest grid point excluded because the metric factor is not positive.
    pub breakdown_r: Option<f64>,
    /// Number of points that entered the statistics.
    pub points: usize,
}

#[derive(Default)]
struct Accumulator {
    max_rel: f64,
    sum_sq: f64,
    worst_r: f64,
    points: usize,
}

impl Accumulator {
    fn push(&mut self, r: f64, residual: f64, scale: f64) {
        if !(scale > 1e-290) || !scale.is_finite() {
            return;
        }
        let rel = (residual / scale).abs();
        self.points += 1;
        self.sum_sq += rel * rel;
        if rel > self.max_rel || self.points == 1 {
            self.max_rel = rel.max(self.max_rel);
            self.worst_r = r;
        }
    }

    fn report(self, grid: Grid, breakdown_r: Option<f64>) -> ResidualReport {
        ResidualReport {
            max_rel: self.max_rel,
            l2: if self.points > 0 { sqrt(self.sum_sq / self.points as f64) } else { 0.0 },
            grid,
            worst_r: self.worst_r,
            breakdown_r,
            points: self.points,
        }
    }
}

/// `|ρ₁'' + Wρ₁|` relative to the largest of `|ρ₁''|` and `|c_k r^{-k} ρ₁|`.
pub fn ode_residual(sol: &RadialSolution, grid: &Grid) -> Result<ResidualReport> {
    grid.validate()?;
    let terms = EffectivePotentialTerms::new(&sol.params, sol.bethe.epsilon, &sol.potential())?;
    let mut acc = Accumulator::default();
    for r in grid.interior(EDGE_FRACTION) {
        let (f, _, f2) = eval_rho1(sol, r)?;
        let parts = terms.terms(r);
        let w: f64 = parts.iter().sum();
        let scale = parts.iter().fold(f2.abs(), |m, t| m.max((t * f).abs()));
        acc.push(r, f2 + w * f, scale);
    }
    Ok(acc.report(*grid, None))
}

/// Agreement of the analytic `ρ₁'`, `ρ₁''` with central differences
/// (steps `1e-6·r` and `1e-4·r`), each relative to the largest term of its
/// analytic expression.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DerivativeReport {
    pub max_rel_d1: f64,
    pub max_rel_d2: f64,
    pub worst_r: f64,
    pub points: usize,
}

pub fn derivative_check(sol: &RadialSolution, grid: &Grid) -> Result<DerivativeReport> {
    grid.validate()?;
    let e = &sol.exps;
    let mut out = DerivativeReport { max_rel_d1: 0.0, max_rel_d2: 0.0, worst_r: grid.rmin, points: 0 };
    for r in grid.interior(EDGE_FRACTION) {
        let (f, d1, d2) = eval_rho1(sol, r)?;
        let (p, p1, p2) = crate::numeric::poly::product_with_derivs(&sol.bethe.roots, r);
        if f == 0.0 && d1 == 0.0 {
            continue;
        }
        let env = sol.norm_constant * libm::exp(e.phase(r));
        let (dp, ddp) = (e.d_phase(r), e.d2_phase(r));
        let scale1 = [d1, dp * f, env * p1].iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let scale2 = [d2, ddp * f, dp * dp * f, 2.0 * dp * env * p1, env * p2]
            .iter()
            .fold(0.0f64, |m, t| m.max(t.abs()));
        if !(scale1 > 1e-290 && scale2 > 1e-290) {
            continue;
        }
        let len = r.min(1.0 / dp.abs()).min(1.0 / libm::sqrt(ddp.abs()));
        // Samples are taken relative to the envelope at `r`.
        let g0 = p;
        let central = |h: f64| {
            let gp = shifted_sample(sol, r, h);
            let gm = shifted_sample(sol, r, -h);
            ((gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h))
        };
        let (h1, h2) = (1e-3 * len, 2e-3 * len);
        let fd1 = env * richardson(central(h1).0, central(0.5 * h1).0);
        let fd2 = env * richardson(central(h2).1, central(0.5 * h2).1);
        let rel1 = ((fd1 - d1) / scale1).abs();
        let rel2 = ((fd2 - d2) / scale2).abs();
        out.points += 1;
        if rel1.max(rel2) > out.max_rel_d1.max(out.max_rel_d2) {
            out.worst_r = r;
        }
        out.max_rel_d1 = out.max_rel_d1.max(rel1);
        out.max_rel_d2 = out.max_rel_d2.max(rel2);
    }
    Ok(out)
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// `ρ₁(r + h)` divided by the envelope at `r`, with the phase increment
/// formed without cancellation.
fn shifted_sample(sol: &RadialSolution, r: f64, h: f64) -> f64 {
    let e = &sol.exps;
    let rh = r + h;
    let inv = 1.0 / (r * rh);
    let increment = e.delta * libm::log1p(h / r) - e.gamma * h * (r + rh) * inv * inv - e.beta * h * inv
        + e.lambda * h;
    libm::exp(increment) * crate::numeric::poly::product_with_derivs(&sol.bethe.roots, rh).0
}

/// Plug-back of the reconstructed `(u, v)` into the unrotated first-order
/// system with the model's `A_r`.
pub fn first_order_system_residual(
    sol: &RadialSolution,
    ctx: &SpinorContext,
    grid: &Grid,
) -> Result<ResidualReport> {
    let pot = sol.potential();
    let params = sol.params;
    let mut err = None;
    let report = first_order_system_residual_with(sol, ctx, grid, |r| {
        vector_potential(&params, ctx, &pot, r).unwrap_or_else(|e| {
            err = Some(e);
            f64::NAN
        })
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// As [`first_order_system_residual`] with a caller-supplied `A_r(r)`.
pub fn first_order_system_residual_with<F: FnMut(f64) -> f64>(
    sol: &RadialSolution,
    ctx: &SpinorContext,
    grid: &Grid,
    mut a_r: F,
) -> Result<ResidualReport> {
    grid.validate()?;
    let p = &sol.params;
    let pot = sol.potential();
    let alpha = p.alpha;
    let eps = sol.bethe.epsilon;
    let mut acc = Accumulator::default();
    let mut breakdown = None;
    for r in grid.interior(EDGE_FRACTION) {
        let z = pot.z(r);
        let (vv, uu) = (p.a * z, p.b * z);
        let metric = 1.0 + alpha * alpha * uu;
        if !(metric > 0.0) {
            breakdown = Some(r);
            continue;
        }
        let (f, f1, _) = eval_rho1(sol, r)?;
        let (g, g1) = eval_rho2_with_deriv(sol, r)?;
        let (u, v) = unrotate(p.eta, f, g);
        let (u1, v1) = unrotate(p.eta, f1, g1);
        let ar = a_r(r);
        let spin = ctx.lam_ang / r * metric;
        let row1 = [
            (1.0 - eps) * u,
            alpha * alpha * (vv + uu) * u,
            -alpha * v1,
            alpha * spin * v,
            alpha * ar * v,
        ];
        let row2 = [
            alpha * u1,
            alpha * spin * u,
            alpha * ar * u,
            -(1.0 + eps) * v,
            alpha * alpha * (vv - uu) * v,
        ];
        for row in [row1, row2] {
            let scale = row.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            acc.push(r, row.iter().sum(), scale);
        }
    }
    Ok(acc.report(*grid, breakdown))
}

/// Independent re-check of a Bethe solution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MasterReport {
    /// Residuals of the termination and the two coefficient conditions.
    pub conditions: [f64; 3],
    /// Scales the conditions are measured against.
    pub scales: [f64; 3],
    /// Max relative coefficient of the reduced operator applied to `Π(r − rᵢ)`.
    pub operator_residual: f64,
    pub consistent: bool,
}

/// Rebuilds the reduced operator from the coefficient formulas, applies it to
/// the root polynomial, and checks the three master conditions.
pub fn master_report(sol: &BetheSolution, params: &ModelParams) -> Result<MasterReport> {
    let pot = params.potential(sol.v, sol.w);
    let exps = continued_exponents(params, sol.epsilon, sol.v, sol.w)?;
    let xi = xi_coeffs(params, sol.epsilon, &pot, &exps)?;
    let t = params.trig()?;
    let s2 = t.s * t.s;
    let n = sol.roots.len();
    let nf = n as f64;
    let (delta, lambda, beta) = (exps.delta, exps.lambda, exps.beta);
    let s1: f64 = sol.roots.iter().sum();
    let s2r: f64 = sol.roots.iter().map(|r| r * r).sum();
    let [l2, l3, _] = lambda_coefficients(params, sol.epsilon, &pot)?;
    let c1 = [xi.xi2, 2.0 * nf * lambda];
    let c2 = [l2 / s2, (xi.xi1 - l2) / s2, 2.0 * lambda * s1, nf * (nf - 1.0), 2.0 * nf * delta];
    let c3 = [l3 / s2, (xi.xi0 - l3) / s2, 2.0 * lambda * s2r, 2.0 * (delta + nf - 1.0) * s1, -2.0 * nf * beta];
    let sum = |x: &[f64]| x.iter().sum::<f64>();
    let scale = |x: &[f64]| x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let conditions = [sum(&c1), xi.xi1 / s2 + c2[2] + c2[3] + c2[4], xi.xi0 / s2 + c3[2] + c3[3] + c3[4]];
    let scales = [scale(&c1), scale(&c2), scale(&c3)];

    // L = r³D² + (2λr³ + 2δr² − 2βr − 4γ)D + (ξ₂r² + ξ₁r/S² + ξ₀/S²), on P = Σ p_k r^k.
    let pc = from_roots(&sol.roots);
    let d1: Vec<f64> = (1..pc.len()).map(|k| k as f64 * pc[k]).collect();
    let d2: Vec<f64> = (1..d1.len()).map(|k| k as f64 * d1[k]).collect();
    let mut out = alloc::vec![0.0; n + 3];
    let mut mag = alloc::vec![0.0f64; n + 3];
    let mut add = |power: usize, x: f64| {
        out[power] += x;
        mag[power] = mag[power].max(x.abs());
    };
    for (k, &c) in d2.iter().enumerate() {
        add(k + 3, c);
    }
    let first = [(3, 2.0 * lambda), (2, 2.0 * delta), (1, -2.0 * beta), (0, -4.0 * exps.gamma)];
    for (k, &c) in d1.iter().enumerate() {
        for &(shift, coef) in &first {
            add(k + shift, coef * c);
        }
    }
    // ξ₁, ξ₀ enter split as in the conditions so cancellation sets the scale.
    let zeroth = [(2, xi.xi2), (1, c2[0]), (1, c2[1]), (0, c3[0]), (0, c3[1])];
    for (k, &c) in pc.iter().enumerate() {
        for &(shift, coef) in &zeroth {
            add(k + shift, coef * c);
        }
    }
    let operator_residual = out
        .iter()
        .zip(&mag)
        .fold(0.0f64, |m, (o, s)| m.max(o.abs() / s.max(1.0)));
    let consistent = conditions.iter().zip(&scales).all(|(c, s)| c.abs() <= MASTER_TOL * s)
        && operator_residual <= MASTER_TOL;
    Ok(MasterReport { conditions, scales, operator_residual, consistent })
}

pub fn master_consistency(sol: &BetheSolution, params: &ModelParams) -> bool {
    master_report(sol, params).map(|r| r.consistent).unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CoulombBranchCheck {
    pub branch: Branch,
    pub epsilon: f64,
    pub coulomb_epsilon: f64,
    pub bound: bool,
    pub physical: bool,
    /// `(v, w)` from the ground-state constraints; `None` when not bound.
    pub vw: Option<(f64, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CoulombReport {
    /// Metric strength on the Coulomb locus.
    pub b: f64,
    /// Violation `(b − aC)α − 3S/(2u)` of the supplied parameters.
    pub input_mismatch: f64,
    pub branches: [CoulombBranchCheck; 2],
    pub passed: bool,
}

/// Moves `b` onto the Coulomb locus and checks that the ground-state
/// constraints vanish there and both energy forms agree on both branches.
pub fn coulomb_limit_check(params: &ModelParams) -> Result<CoulombReport> {
    params.validate()?;
    let input_mismatch = params.coulomb_mismatch()?;
    let b = params.coulomb_b()?;
    let on = ModelParams { b, ..*params };
    let check = |branch: Branch| -> Result<CoulombBranchCheck> {
        let p = on.with_branch(branch);
        let e = energy(&p, 0)?;
        let c = coulomb_ground_energy(&p)?;
        let vw = if e.bound {
            let sol = solve_n0(&BetheProblem::new(p, 0, e.epsilon))?;
            Some((sol.v, sol.w))
        } else {
            None
        };
        let small = vw.is_none_or(|(v, w)| v.abs() <= 1e-10 && w.abs() <= 1e-10);
        Ok(CoulombBranchCheck {
            branch,
            epsilon: e.epsilon,
            coulomb_epsilon: c.epsilon,
            bound: e.bound,
            physical: e.physical,
            vw,
            passed: small && (e.epsilon - c.epsilon).abs() <= 1e-12,
        })
    };
    let branches = [check(Branch::Plus)?, check(Branch::Minus)?];
    Ok(CoulombReport { b, input_mismatch, passed: branches.iter().all(|c| c.passed), branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_general, solve_n1};
    use crate::wavefunction::{NormMode, Spacing};
    use core::f64::consts::FRAC_PI_4;

    fn coulomb_solution(eps: f64) -> RadialSolution {
        let p = ModelParams::new(1.0, 1.0, 1.5, -FRAC_PI_4, -1.0, Branch::Minus).unwrap();
        let b = solve_n0(&BetheProblem::new(p, 0, -12.0 / 13.0)).unwrap();
        let b = BetheSolution { epsilon: eps, ..b };
        RadialSolution::new(p, b, NormMode::Rho1Only).unwrap()
    }

    fn level(params: ModelParams, n: usize) -> (ModelParams, f64) {
        for br in [Branch::Minus, Branch::Plus] {
            let p = params.with_branch(br);
            let e = energy(&p, n).unwrap();
            if e.physical {
                return (p, e.epsilon);
            }
        }
        panic!("no physical level");
    }

    fn generic() -> ModelParams {
        ModelParams::new(0.7, 0.9, 1.3, 0.6, -1.1, Branch::Minus).unwrap()
    }

    #[test]
    fn exact_coulomb_residual() {
        let sol = coulomb_solution(-12.0 / 13.0);
        let grid = Grid::default_for(sol.exps.lambda);
        let rep = ode_residual(&sol, &grid).unwrap();
        assert!(rep.max_rel <= 1e-12, "{rep:?}");
        let pert = coulomb_solution(-12.0 / 13.0 + 1e-3);
        assert!(ode_residual(&pert, &grid).unwrap().max_rel > 1e-4);
    }

    #[test]
    fn derivative_oracle_on_coulomb() {
        let sol = coulomb_solution(-12.0 / 13.0);
        let rep = derivative_check(&sol, &Grid::default_for(sol.exps.lambda)).unwrap();
        assert!(rep.max_rel_d1 < 1e-6 && rep.max_rel_d2 < 1e-6, "{rep:?}");
    }

    #[test]
    fn first_order_coulomb_and_zeroed_vector_potential() {
        let sol = coulomb_solution(-12.0 / 13.0);
        let ctx = SpinorContext { lam_ang: 1.0 };
        let grid = Grid::new(1e-2, 60.0, 2000, Spacing::Log).unwrap();
        let rep = first_order_system_residual(&sol, &ctx, &grid).unwrap();
        assert!(rep.max_rel <= 1e-8, "{rep:?}");
        assert!(rep.breakdown_r.is_some());
        let scaled = sol.clone().with_norm_constant(3.7);
        let rep2 = first_order_system_residual(&scaled, &ctx, &grid).unwrap();
        assert!((rep2.max_rel - rep.max_rel).abs() < 1e-12);
        let zero = first_order_system_residual_with(&sol, &ctx, &grid, |_| 0.0).unwrap();
        assert!(zero.max_rel > 1e-2);
    }

    #[test]
    fn master_checks() {
        let (p, eps) = level(generic(), 1);
        for c in solve_n1(&BetheProblem::new(p, 1, eps)).unwrap() {
            assert!(master_consistency(&c, &p), "{:?}", master_report(&c, &p));
            let bumped = BetheSolution { v: c.v + 1e-6, ..c.clone() };
            assert!(!master_consistency(&bumped, &p));
        }
        let (p, eps) = level(generic(), 2);
        let g = solve_general(&BetheProblem::new(p, 2, eps), None).unwrap();
        assert!(master_consistency(&g, &p));
        let spur = ModelParams::new(1.0, 1.0, -1.5, FRAC_PI_4, -1.0, Branch::Plus).unwrap();
        let fake = BetheSolution { epsilon: 12.0 / 13.0, ..coulomb_solution(-12.0 / 13.0).bethe };
        assert!(!master_consistency(&fake, &spur));
    }

    #[test]
    fn coulomb_check_reference() {
        let p = ModelParams::new(1.0, 1.0, 0.3, -FRAC_PI_4, -1.0, Branch::Plus).unwrap();
        let rep = coulomb_limit_check(&p).unwrap();
        assert!((rep.b - 1.5).abs() < 1e-15);
        assert!((rep.input_mismatch - (0.3 - 1.5)).abs() < 1e-14);
        assert!(rep.passed, "{rep:?}");
        assert!(rep.branches[0].epsilon.abs() < 1e-15);
        assert!((rep.branches[1].epsilon + 12.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn coulomb_sweep() {
        for i in 1..=20 {
            let eta = -core::f64::consts::FRAC_PI_2 * i as f64 / 21.0;
            let p = ModelParams::new(0.9, 1.2, 0.0, eta, -0.8, Branch::Plus).unwrap();
            assert!(coulomb_limit_check(&p).unwrap().passed);
        }
    }
}
