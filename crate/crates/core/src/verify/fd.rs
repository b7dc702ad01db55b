use alloc::vec::Vec;

use libm::sqrt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bethe::BetheSolution;
use crate::error::{Error, Result};
use crate::model::{EffectivePotentialTerms, ModelParams};
use crate::numeric::tridiag::SymTridiagonal;
use crate::wavefunction::{eval_rho1, Grid, NormMode, RadialSolution, Spacing};

/// Default number of points of the oracle grid.
pub const ORACLE_POINTS: usize = 20_000;
/// Relative amplitude that delimits the support when trimming oracle grids.
const SUPPORT_CUT: f64 = 1e-14;
/// Smallest left edge of a trimmed oracle grid.
const ORACLE_RMIN: f64 = 1e-3;
/// Eigenvector entries below this fraction of the peak are ignored for nodes.
const NODE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OracleReport {
    /// `(ε² − 1)/α²`.
    pub target_e: f64,
    pub nearest_eig: f64,
    pub rel_gap: f64,
    pub overlap: f64,
    pub grid: Grid,
    /// Interior sign changes of the matching eigenvector.
    pub nodes: usize,
    /// `rel_gap` on the twice refined grid, when computed.
    pub refined_rel_gap: Option<f64>,
    /// The discretization, not the analytic solution, limits the agreement.
    pub resolution_warning: bool,
}

/// `H = −d²/dr² − (W(r) − (ε²−1)/α²)` on a linear Dirichlet grid; reports
/// the eigenpair nearest `(ε²−1)/α²` against the analytic `ρ₁`.
pub fn fd_eigensolve(params: &ModelParams, sol: &BetheSolution, grid: &Grid) -> Result<OracleReport> {
    grid.validate()?;
    if grid.spacing != Spacing::Linear {
        return Err(Error::InvalidGrid("the oracle requires a linear grid"));
    }
    let radial = RadialSolution::new(*params, sol.clone(), NormMode::Rho1Only)?;
    let terms = EffectivePotentialTerms::new(params, sol.epsilon, &params.potential(sol.v, sol.w))?;
    let target_e = terms.c0;
    let pts = grid.points();
    let interior = &pts[1..pts.len() - 1];
    let h = (grid.rmax - grid.rmin) / (grid.count - 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = interior.iter().map(|&r| 2.0 * inv_h2 - (terms.eval(r) - terms.c0)).collect();
    let off = alloc::vec![-inv_h2; interior.len() - 1];
    let mat = SymTridiagonal::new(diag, off);
    let (_, nearest_eig) = mat.nearest_eigenvalue(target_e);
    let vec = mat.eigenvector(nearest_eig);
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    for (x, &r) in vec.iter().zip(interior) {
        let f = eval_rho1(&radial, r)?.0;
        dot += x * f;
        norm_a += f * f;
    }
    let overlap = if norm_a > 0.0 { (dot.abs() / sqrt(norm_a)).min(1.0) } else { 0.0 };
    let peak = vec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut nodes = 0;
    let mut last = 0.0f64;
    for &x in &vec {
        if x.abs() < NODE_FLOOR * peak {
            continue;
        }
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            nodes += 1;
        }
        last = x;
    }
    Ok(OracleReport {
        target_e,
        nearest_eig,
        rel_gap: (nearest_eig - target_e).abs() / target_e.abs().max(1e-12),
        overlap,
        grid: *grid,
        nodes,
        refined_rel_gap: None,
        resolution_warning: false,
    })
}

/// [`fd_eigensolve`] plus a rerun on the twice refined grid. The warning is
/// raised when the coarse gap exceeds `gap_tol` but at least halves under
/// refinement, i.e. the discretization is still converging.
pub fn fd_eigensolve_checked(
    params: &ModelParams,
    sol: &BetheSolution,
    grid: &Grid,
    gap_tol: f64,
) -> Result<OracleReport> {
    let mut coarse = fd_eigensolve(params, sol, grid)?;
    let fine = fd_eigensolve(params, sol, &grid.refined(2))?;
    let (g0, g1) = (coarse.rel_gap, fine.rel_gap);
    coarse.refined_rel_gap = Some(g1);
    coarse.resolution_warning = g0 > gap_tol && g1 <= 0.5 * g0;
    Ok(coarse)
}

/// Linear grid over the numerical support of `ρ₁` (amplitude above
/// `1e-14` of the peak), starting no closer to the origin than `1e-3`.
pub fn oracle_grid(params: &ModelParams, sol: &BetheSolution, count: usize) -> Result<Grid> {
    let radial = RadialSolution::new(*params, sol.clone(), NormMode::Rho1Only)?;
    let probe = Grid::default_for(radial.exps.lambda);
    let probe = Grid { rmax: probe.rmax * 4.0, count: 16_384, ..probe };
    let pts = probe.points();
    let vals: Vec<f64> = pts.iter().map(|&r| eval_rho1(&radial, r).map(|v| v.0.abs())).collect::<Result<_>>()?;
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidGrid("wavefunction has no finite support"));
    }
    let first = vals.iter().position(|&v| v >= SUPPORT_CUT * peak).unwrap_or(0);
    let last = vals.iter().rposition(|&v| v >= SUPPORT_CUT * peak).unwrap_or(pts.len() - 1);
    let lo = pts[first.saturating_sub(1)].max(ORACLE_RMIN);
    let hi = pts[(last + 1).min(pts.len() - 1)];
    Grid::new(lo, hi.max(2.0 * lo), count, Spacing::Linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_n0, BetheProblem};
    use crate::model::Branch;
    use core::f64::consts::FRAC_PI_4;

    fn coulomb() -> (ModelParams, BetheSolution) {
        let p = ModelParams::new(1.0, 1.0, 1.5, -FRAC_PI_4, -1.0, Branch::Minus).unwrap();
        let s = solve_n0(&BetheProblem::new(p, 0, -12.0 / 13.0)).unwrap();
        (p, s)
    }

    #[test]
    fn coulomb_reference_grid() {
        let (p, s) = coulomb();
        let g = Grid::new(1e-3, 60.0, ORACLE_POINTS, Spacing::Linear).unwrap();
        let rep = fd_eigensolve(&p, &s, &g).unwrap();
        assert!((rep.target_e + 25.0 / 169.0).abs() < 1e-15);
        assert!(rep.rel_gap <= 1e-4, "{rep:?}");
        assert!(rep.overlap >= 0.9999);
        assert_eq!(rep.nodes, 0);
    }

    #[test]
    fn second_order_convergence() {
        let (p, s) = coulomb();
        let g = Grid::new(1e-3, 60.0, 500, Spacing::Linear).unwrap();
        let a = fd_eigensolve(&p, &s, &g).unwrap().rel_gap;
        let b = fd_eigensolve(&p, &s, &g.refined(2)).unwrap().rel_gap;
        let ratio = a / b;
        assert!((3.0..=5.0).contains(&ratio), "{a} {b} {ratio}");
    }

    #[test]
    fn log_grid_rejected() {
        let (p, s) = coulomb();
        let g = Grid::new(1e-3, 60.0, 100, Spacing::Log).unwrap();
        assert!(fd_eigensolve(&p, &s, &g).is_err());
    }

    #[test]
    fn coarse_grid_warns() {
        let (p, s) = coulomb();
        let g = Grid::new(1e-3, 60.0, 100, Spacing::Linear).unwrap();
        let rep = fd_eigensolve_checked(&p, &s, &g, 1e-4).unwrap();
        assert!(rep.resolution_warning, "{rep:?}");
    }
}
