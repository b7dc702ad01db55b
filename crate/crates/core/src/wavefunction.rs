//! Analytic radial wavefunctions `ρ₁(r) = cₙ e^{Δ(r)} Π(r − rᵢ)`.

use alloc::vec::Vec;

use libm::{cos, exp, log, pow, sin, sqrt};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bethe::BetheSolution;
use crate::error::{Error, Result};
use crate::model::{compute_exponents, continued_exponents, ExponentParams, ModelParams, SpinorContext};
use crate::numeric::poly::product_with_derivs;
use crate::numeric::quad::integrate_panels;

/// Relative tail allowed at `rmax` before normalization is refused.
pub const TAIL_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Grid {
    pub rmin: f64,
    pub rmax: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(rmin: f64, rmax: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let g = Grid { rmin, rmax, count, spacing };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rmin > 0.0 && self.rmin.is_finite()) {
            return Err(Error::InvalidGrid("rmin must be positive"));
        }
        if !(self.rmax > self.rmin && self.rmax.is_finite()) {
            return Err(Error::InvalidGrid("rmax must exceed rmin"));
        }
        if self.count < 16 {
            return Err(Error::InvalidGrid("count must be at least 16"));
        }
        Ok(())
    }

    /// Log-spaced from 1e-4 to `max(40/|λ|, 50)` with 4096 points.
    pub fn default_for(lambda: f64) -> Self {
        Grid { rmin: 1e-4, rmax: (40.0 / lambda.abs()).max(50.0), count: 4096, spacing: Spacing::Log }
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.rmin;
                }
                if i == self.count - 1 {
                    return self.rmax;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.rmin + t * (self.rmax - self.rmin),
                    Spacing::Log => self.rmin * pow(self.rmax / self.rmin, t),
                }
            })
            .collect()
    }

    /// Points with the outer `fraction` of the index range dropped on each side.
    pub fn interior(&self, fraction: f64) -> Vec<f64> {
        let pts = self.points();
        let skip = libm::ceil(fraction * self.count as f64) as usize;
        pts[skip..self.count - skip].to_vec()
    }

    pub fn refined(&self, factor: usize) -> Self {
        Grid { count: (self.count - 1) * factor + 1, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NormMode {
    /// `∫ (ρ₁² + ρ₂²) dr = 1`.
    Spinor,
    /// `∫ ρ₁² dr = 1`.
    Rho1Only,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RadialSolution {
    pub params: ModelParams,
    pub bethe: BetheSolution,
    pub exps: ExponentParams,
    pub norm_constant: f64,
    pub norm_mode: NormMode,
}

impl RadialSolution {
    /// Unnormalized (`cₙ = 1`) solution.
    pub fn new(params: ModelParams, bethe: BetheSolution, norm_mode: NormMode) -> Result<Self> {
        let exps = if bethe.sign_consistent {
            compute_exponents(&params, bethe.epsilon, bethe.v, bethe.w)?
        } else {
            continued_exponents(&params, bethe.epsilon, bethe.v, bethe.w)?
        };
        Ok(RadialSolution { params, bethe, exps, norm_constant: 1.0, norm_mode })
    }

    /// Same solution with `cₙ` chosen by [`normalize`].
    pub fn normalized(mut self, grid: &Grid) -> Result<Self> {
        self.norm_constant = 1.0;
        self.norm_constant = normalize(&self, grid)?;
        Ok(self)
    }

    pub fn with_norm_constant(self, norm_constant: f64) -> Self {
        RadialSolution { norm_constant, ..self }
    }

    pub fn potential(&self) -> crate::model::PotentialCoefficients {
        self.params.potential(self.bethe.v, self.bethe.w)
    }
}

/// `(ρ₁, ρ₁', ρ₁'')` at `r`, all analytic.
pub fn eval_rho1(sol: &RadialSolution, r: f64) -> Result<(f64, f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "r", value: r });
    }
    let e = &sol.exps;
    let envelope = sol.norm_constant * exp(e.phase(r));
    let (p, p1, p2) = product_with_derivs(&sol.bethe.roots, r);
    let d = e.d_phase(r);
    let dd = e.d2_phase(r);
    Ok((
        envelope * p,
        envelope * (d * p + p1),
        envelope * ((dd + d * d) * p + 2.0 * d * p1 + p2),
    ))
}

fn rho2_prefactor(sol: &RadialSolution) -> Result<f64> {
    let t = sol.params.trig()?;
    let denom = t.c + sol.bethe.epsilon;
    if denom.abs() <= 1e-14 {
        return Err(Error::ComponentSingularity);
    }
    Ok(sol.params.alpha / denom)
}

/// `ρ₂ = α/(C+ε) · [−S/α + (α/S)(C·V − U) + d/dr] ρ₁`.
pub fn eval_rho2(sol: &RadialSolution, r: f64) -> Result<f64> {
    Ok(eval_rho2_with_deriv(sol, r)?.0)
}

/// `(ρ₂, ρ₂')`.
pub fn eval_rho2_with_deriv(sol: &RadialSolution, r: f64) -> Result<(f64, f64)> {
    let pre = rho2_prefactor(sol)?;
    let (f, f1, f2) = eval_rho1(sol, r)?;
    let p = &sol.params;
    let t = p.trig()?;
    let pot = sol.potential();
    let (z, dz) = (pot.z(r), pot.dz(r));
    let alpha = p.alpha;
    let mult = -t.s / alpha + alpha / t.s * (t.c * p.a - p.b) * z;
    let dmult = alpha / t.s * (t.c * p.a - p.b) * dz;
    Ok((pre * (mult * f + f1), pre * (dmult * f + mult * f1 + f2)))
}

fn density(sol: &RadialSolution, r: f64) -> f64 {
    let Ok((f, _, _)) = eval_rho1(sol, r) else { return 0.0 };
    match sol.norm_mode {
        NormMode::Rho1Only => f * f,
        NormMode::Spinor => {
            let g = eval_rho2(sol, r).unwrap_or(f64::NAN);
            f * f + g * g
        }
    }
}

/// `cₙ` making the configured norm equal to one.
pub fn normalize(sol: &RadialSolution, grid: &Grid) -> Result<f64> {
    grid.validate()?;
    let unit = sol.clone().with_norm_constant(1.0);
    if sol.norm_mode == NormMode::Spinor {
        rho2_prefactor(&unit)?;
    }
    let pts = grid.points();
    let mut peak = 0.0f64;
    for &r in &pts {
        peak = peak.max(eval_rho1(&unit, r)?.0.abs());
    }
    let tail = eval_rho1(&unit, grid.rmax)?.0.abs();
    if !(peak > 0.0 && peak.is_finite()) || tail > TAIL_TOL * peak {
        return Err(Error::Truncation { tail: if peak > 0.0 { tail / peak } else { f64::INFINITY } });
    }
    let panels = 128.min(grid.count - 1);
    let breaks: Vec<f64> = Grid { count: panels + 1, ..*grid }.points();
    let q = integrate_panels(&mut |r| density(&unit, r), &breaks, QUAD_TOL);
    if !(q.value > 0.0 && q.value.is_finite()) {
        return Err(Error::Truncation { tail: f64::INFINITY });
    }
    Ok(1.0 / sqrt(q.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NodeReport {
    pub nodes: usize,
    /// Two in-range roots lie within two grid cells of each other.
    pub crowded: bool,
}

/// Strict sign changes of `ρ₁` over the grid.
pub fn node_count(sol: &RadialSolution, grid: &Grid) -> Result<NodeReport> {
    grid.validate()?;
    let pts = grid.points();
    let mut nodes = 0;
    let mut last = 0.0f64;
    for &r in &pts {
        let (f, _, _) = eval_rho1(sol, r)?;
        if f != 0.0 {
            if last != 0.0 && (f > 0.0) != (last > 0.0) {
                nodes += 1;
            }
            last = f;
        }
    }
    let cell = |r: f64| -> f64 {
        match grid.spacing {
            Spacing::Linear => (grid.rmax - grid.rmin) / (grid.count - 1) as f64,
            Spacing::Log => r * (log(grid.rmax / grid.rmin) / (grid.count - 1) as f64),
        }
    };
    let inside: Vec<f64> =
        sol.bethe.roots.iter().copied().filter(|&r| r > grid.rmin && r < grid.rmax).collect();
    let crowded = inside.windows(2).any(|p| (p[1] - p[0]).abs() < 2.0 * cell(p[0]));
    Ok(NodeReport { nodes, crowded })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpinorSample {
    pub r: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub u_comp: f64,
    pub v_comp: f64,
    pub r1: f64,
    pub r2: f64,
    /// `1 + α²U(r)`.
    pub metric_factor: f64,
}

/// Undoes the η rotation and strips the radial and metric factors.
pub fn reconstruct_spinor(sol: &RadialSolution, _ctx: &SpinorContext, r: f64) -> Result<SpinorSample> {
    let metric_factor = metric_factor(sol, r)?;
    let rho1 = eval_rho1(sol, r)?.0;
    let rho2 = eval_rho2(sol, r)?;
    let (u_comp, v_comp) = unrotate(sol.params.eta, rho1, rho2);
    let inv = 1.0 / (r * sqrt(metric_factor));
    Ok(SpinorSample { r, rho1, rho2, u_comp, v_comp, r1: u_comp * inv, r2: v_comp * inv, metric_factor })
}

/// `1 + α² b z(r)`, required positive.
pub fn metric_factor(sol: &RadialSolution, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "r", value: r });
    }
    let alpha = sol.params.alpha;
    let factor = 1.0 + alpha * alpha * sol.params.b * sol.potential().z(r);
    if !(factor > 0.0) {
        return Err(Error::MetricBreakdown { r, factor });
    }
    Ok(factor)
}

/// `(u, v)` with `(ρ₁, ρ₂) = R(η)(u, v)`.
pub fn unrotate(eta: f64, rho1: f64, rho2: f64) -> (f64, f64) {
    let (c, s) = (cos(eta), sin(eta));
    (c * rho1 - s * rho2, s * rho1 + c * rho2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_n0, BetheProblem};
    use crate::model::Branch;
    use core::f64::consts::FRAC_PI_4;

    fn coulomb(mode: NormMode) -> RadialSolution {
        let p = ModelParams::new(1.0, 1.0, 1.5, -FRAC_PI_4, -1.0, Branch::Minus).unwrap();
        let b = solve_n0(&BetheProblem::new(p, 0, -12.0 / 13.0)).unwrap();
        RadialSolution::new(p, b, mode).unwrap()
    }

    #[test]
    fn coulomb_value_at_one() {
        let sol = coulomb(NormMode::Rho1Only);
        let (f, d1, d2) = eval_rho1(&sol, 1.0).unwrap();
        let want = exp(-5.0 / 13.0);
        assert!((f - want).abs() < 1e-15);
        assert!((d1 - want * (1.5 - 5.0 / 13.0)).abs() < 1e-14);
        let dd = -1.5 + (1.5f64 - 5.0 / 13.0).powi(2);
        assert!((d2 - want * dd).abs() < 1e-14);
        assert!(eval_rho1(&sol, 0.0).is_err());
    }

    #[test]
    fn coulomb_normalization_closed_form() {
        let sol = coulomb(NormMode::Rho1Only);
        let lam = -5.0f64 / 13.0;
        let grid = Grid::default_for(lam);
        let c = normalize(&sol, &grid).unwrap();
        let want = 1.0 / sqrt(3.0 / (8.0 * lam.powi(4)));
        assert!((c - want).abs() < 1e-9 * want, "{c} {want}");
        let c2 = normalize(&sol, &grid.refined(2)).unwrap();
        assert!((c - c2).abs() < 1e-8 * c);
    }

    #[test]
    fn spinor_mode_rescales() {
        let lam = -5.0f64 / 13.0;
        let grid = Grid::default_for(lam);
        let c1 = normalize(&coulomb(NormMode::Rho1Only), &grid).unwrap();
        let s = coulomb(NormMode::Spinor);
        let cs = normalize(&s, &grid).unwrap();
        let pts = Grid { count: 129, ..grid }.points();
        let f2 = integrate_panels(&mut |r| eval_rho1(&s, r).unwrap().0.powi(2), &pts, 1e-12).value;
        let g2 = integrate_panels(&mut |r| eval_rho2(&s, r).unwrap().powi(2), &pts, 1e-12).value;
        assert!((cs - c1 * sqrt(f2 / (f2 + g2))).abs() < 1e-9 * cs);
    }

    #[test]
    fn truncated_grid_is_reported() {
        let sol = coulomb(NormMode::Rho1Only);
        let g = Grid::new(1e-3, 10.0, 100, Spacing::Linear).unwrap();
        assert!(matches!(normalize(&sol, &g), Err(Error::Truncation { .. })));
    }

    #[test]
    fn rho2_is_linear_in_norm() {
        let sol = coulomb(NormMode::Spinor);
        let a = eval_rho2(&sol, 1.3).unwrap();
        let b = eval_rho2(&sol.clone().with_norm_constant(2.0), 1.3).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn ground_state_has_no_nodes() {
        let sol = coulomb(NormMode::Rho1Only);
        let r = node_count(&sol, &Grid::default_for(-5.0 / 13.0)).unwrap();
        assert_eq!(r, NodeReport { nodes: 0, crowded: false });
    }

    #[test]
    fn metric_breakdown_at_coulomb_point() {
        let sol = coulomb(NormMode::Spinor);
        let ctx = SpinorContext { lam_ang: 1.0 };
        match reconstruct_spinor(&sol, &ctx, 1.0) {
            Err(Error::MetricBreakdown { r, factor }) => {
                assert_eq!(r, 1.0);
                assert!((factor + 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let s = reconstruct_spinor(&sol, &ctx, 3.0).unwrap();
        let lhs = s.u_comp * s.u_comp + s.v_comp * s.v_comp;
        let rhs = s.rho1 * s.rho1 + s.rho2 * s.rho2;
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!((s.r1 - s.u_comp / (3.0 * sqrt(s.metric_factor))).abs() < 1e-15);
    }

    #[test]
    fn identity_rotation() {
        assert_eq!(unrotate(0.0, 0.3, -0.7), (0.3, -0.7));
    }
}
