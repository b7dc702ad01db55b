//! The solve, verify, scan and check workflows.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use qdirac_core::bethe::{solve_general, solve_n0, solve_n1, BetheProblem, BetheSolution};
use qdirac_core::model::{decay_rate, effective_potential, Branch, ModelParams, SpinorContext};
use qdirac_core::spectrum::{energies, termination_residual, EnergyResult, CONDITION_TOL};
use qdirac_core::verify::{
    coulomb_limit_check, derivative_check, fd_eigensolve_checked, first_order_system_residual, master_report,
    ode_residual, oracle_grid, qes_form_check, CoulombReport, DerivativeReport, MasterReport, OracleReport,
    QesCheck, ResidualReport,
};
use qdirac_core::wavefunction::{eval_rho1, eval_rho2, Grid, NormMode, RadialSolution, Spacing};
use qdirac_core::Error;

use crate::config::{Mode, RunConfig};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoPhysicalEnergy,
    NotConverged,
    CheckFailed,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selected {
    /// `None` when the energy was supplied by `epsilon_override`.
    pub branch: Option<Branch>,
    pub epsilon: f64,
    pub physical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    /// A failure attributed to discretization rather than the solution.
    pub warning: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Reports {
    pub ode: Option<ResidualReport>,
    pub derivative: Option<DerivativeReport>,
    pub oracle: Option<OracleReport>,
    pub master: Option<MasterReport>,
    pub first_order: Option<ResidualReport>,
    pub coulomb: Option<CoulombReport>,
    pub qes: Option<QesCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub tool_version: &'static str,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub params: Option<ModelParams>,
    pub status: Status,
    pub error: Option<String>,
    pub energies: Option<[EnergyResult; 2]>,
    pub selected: Option<Selected>,
    pub solution: Option<BetheSolution>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<BetheSolution>,
    pub radial: Option<RadialSolution>,
    pub checks: Vec<Check>,
    pub reports: Reports,
    pub warnings: Vec<String>,
    pub resolution_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl RunRecord {
    fn new(config: &RunConfig, sweep_value: Option<f64>) -> Self {
        RunRecord {
            tool_version: TOOL_VERSION,
            config: config.clone(),
            sweep_value,
            params: None,
            status: Status::Ok,
            error: None,
            energies: None,
            selected: None,
            solution: None,
            candidates: Vec::new(),
            radial: None,
            checks: Vec::new(),
            reports: Reports::default(),
            warnings: Vec::new(),
            resolution_warning: false,
            wall_time: None,
        }
    }

    fn fail(&mut self, status: Status, err: impl ToString) {
        self.status = status;
        self.error = Some(err.to_string());
    }

    pub fn ok(&self) -> bool {
        self.status == Status::Ok
    }

    fn check(&mut self, name: &'static str, value: f64, threshold: f64, passed: bool) {
        self.checks.push(Check { name, value, threshold, passed, warning: false });
    }
}

/// Log-spaced evaluation grid, defaulting to the decay length.
pub fn eval_grid(cfg: &RunConfig, lambda: f64) -> Result<Grid, Error> {
    let d = Grid::default_for(lambda);
    Grid::new(cfg.grid.rmin.unwrap_or(d.rmin), cfg.grid.rmax.unwrap_or(d.rmax), cfg.grid.eval_points, Spacing::Log)
}

fn select(cfg: &RunConfig, params: &ModelParams, pair: &[EnergyResult; 2]) -> Option<Selected> {
    let of = |b: Branch| if b == Branch::Plus { pair[0] } else { pair[1] };
    if let Some(eps) = cfg.epsilon_override {
        let physical = eps.abs() < 1.0
            && termination_residual(params, cfg.n, eps)
                .map(|(res, xi2)| res.abs() <= CONDITION_TOL * xi2.abs().max(1.0))
                .unwrap_or(false);
        return Some(Selected { branch: None, epsilon: eps, physical });
    }
    let order = cfg.branch.order();
    let pick = if order.len() == 1 { Some(of(order[0])) } else { order.iter().map(|&b| of(b)).find(|e| e.physical) };
    pick.map(|e| Selected { branch: Some(e.branch), epsilon: e.epsilon, physical: e.physical })
}

fn solve_level(problem: &BetheProblem) -> Result<(BetheSolution, Vec<BetheSolution>), Error> {
    match problem.n {
        0 => Ok((solve_n0(problem)?, Vec::new())),
        1 => {
            let all = solve_n1(problem)?;
            let best = all
                .iter()
                .find(|s| s.physical)
                .or_else(|| all.iter().find(|s| s.converged))
                .or(all.first())
                .cloned()
                .ok_or(Error::NoRealEnergy { radicand: f64::NAN })?;
            Ok((best, all))
        }
        _ => Ok((solve_general(problem, None)?, Vec::new())),
    }
}

/// Energies, constraints and the normalized wavefunction.
fn solve_into(rec: &mut RunRecord, cfg: &RunConfig, base: ModelParams) {
    let pair = match energies(&base, cfg.n) {
        Ok(p) => p,
        Err(e) => return rec.fail(Status::Error, e),
    };
    rec.energies = Some(pair);
    let Some(sel) = select(cfg, &base, &pair) else {
        return rec.fail(Status::NoPhysicalEnergy, "no physical energy on the configured branches");
    };
    let params = base.with_branch(sel.branch.unwrap_or(Branch::Minus));
    rec.params = Some(params);
    let epsilon = sel.epsilon;
    rec.selected = Some(sel);
    let (sol, candidates) = match solve_level(&BetheProblem::new(params, cfg.n, epsilon)) {
        Ok(s) => s,
        Err(e @ Error::ConvergenceFailure { .. }) => return rec.fail(Status::NotConverged, e),
        Err(e) => return rec.fail(Status::Error, e),
    };
    let converged = sol.converged;
    rec.solution = Some(sol.clone());
    rec.candidates = candidates;
    if !converged {
        return rec.fail(Status::NotConverged, "constraint system did not converge");
    }
    let lambda = match decay_rate(params.alpha, epsilon) {
        Ok(l) => l,
        Err(e) => return rec.fail(Status::Error, e),
    };
    let grid = match eval_grid(cfg, lambda) {
        Ok(g) => g,
        Err(e) => return rec.fail(Status::Error, e),
    };
    let radial = RadialSolution::new(params, sol.clone(), NormMode::Spinor)
        .and_then(|r| r.normalized(&grid))
        .or_else(|_| RadialSolution::new(params, sol.clone(), NormMode::Rho1Only).and_then(|r| r.normalized(&grid)));
    match radial {
        Ok(r) => rec.radial = Some(r),
        Err(e) => {
            rec.warnings.push(format!("normalization: {e}"));
            match RadialSolution::new(params, sol, NormMode::Rho1Only) {
                Ok(r) => rec.radial = Some(r),
                Err(e) => rec.fail(Status::Error, e),
            }
        }
    }
}

fn verify_into(rec: &mut RunRecord, cfg: &RunConfig) {
    let (Some(params), Some(sol), Some(radial)) = (rec.params, rec.solution.clone(), rec.radial.clone()) else {
        return;
    };
    let grid = match eval_grid(cfg, radial.exps.lambda) {
        Ok(g) => g,
        Err(e) => return rec.fail(Status::Error, e),
    };
    match master_report(&sol, &params) {
        Ok(m) => {
            let tol = cfg.tol("master");
            let worst = m.conditions.iter().zip(&m.scales).fold(m.operator_residual, |w, (c, s)| w.max(c.abs() / s));
            rec.check("master", worst, tol, worst <= tol);
            rec.reports.master = Some(m);
        }
        Err(e) => rec.warnings.push(format!("master: {e}")),
    }
    match ode_residual(&radial, &grid) {
        Ok(r) => {
            let tol = cfg.tol("ode_residual");
            rec.check("ode_residual", r.max_rel, tol, r.max_rel <= tol);
            rec.reports.ode = Some(r);
        }
        Err(e) => rec.warnings.push(format!("ode_residual: {e}")),
    }
    match derivative_check(&radial, &grid) {
        Ok(d) => {
            let tol = cfg.tol("derivative");
            let worst = d.max_rel_d1.max(d.max_rel_d2);
            rec.check("derivative", worst, tol, worst <= tol);
            rec.reports.derivative = Some(d);
        }
        Err(e) => rec.warnings.push(format!("derivative: {e}")),
    }
    let oracle = oracle_grid(&params, &sol, cfg.grid.oracle_points)
        .and_then(|g| fd_eigensolve_checked(&params, &sol, &g, cfg.tol("fd_rel_gap")));
    match oracle {
        Ok(o) => {
            let passed = o.rel_gap <= cfg.tol("fd_rel_gap")
                && o.overlap >= cfg.tol("fd_overlap")
                && o.nodes == sol.in_domain_roots();
            rec.checks.push(Check {
                name: "fd_oracle",
                value: o.rel_gap,
                threshold: cfg.tol("fd_rel_gap"),
                passed,
                warning: !passed && o.resolution_warning,
            });
            if o.resolution_warning {
                rec.resolution_warning = true;
                rec.warnings.push("fd_oracle: grid resolution limits the agreement".into());
            }
            rec.reports.oracle = Some(o);
        }
        Err(e) => rec.warnings.push(format!("fd_oracle: {e}")),
    }
    if let Some(lam_ang) = cfg.lam_ang {
        match first_order_system_residual(&radial, &SpinorContext { lam_ang }, &grid) {
            Ok(r) => {
                let tol = cfg.tol("first_order");
                rec.check("first_order", r.max_rel, tol, r.max_rel <= tol);
                rec.reports.first_order = Some(r);
            }
            Err(e) => rec.warnings.push(format!("first_order: {e}")),
        }
    }
    if cfg.checks.coulomb {
        coulomb_into(rec, &params);
    }
    if cfg.checks.qes {
        qes_into(rec, cfg, &params, &sol, &radial);
    }
    if rec.checks.iter().any(|c| !c.passed && !c.warning) {
        rec.status = Status::CheckFailed;
        let failed: Vec<&str> = rec.checks.iter().filter(|c| !c.passed && !c.warning).map(|c| c.name).collect();
        rec.error = Some(format!("failed checks: {}", failed.join(", ")));
    }
}

fn coulomb_into(rec: &mut RunRecord, params: &ModelParams) {
    match coulomb_limit_check(params) {
        Ok(c) => {
            rec.check("coulomb", c.input_mismatch, 0.0, c.passed);
            rec.reports.coulomb = Some(c);
        }
        Err(e) => rec.fail(Status::Error, e),
    }
}

fn qes_into(rec: &mut RunRecord, cfg: &RunConfig, params: &ModelParams, sol: &BetheSolution, radial: &RadialSolution) {
    match qes_form_check(params, sol.n, sol.epsilon, sol.v, sol.w, &radial.exps) {
        Ok(q) => {
            let tol = cfg.tol("qes_infeasible");
            let least = q.direct.residual.min(q.divided.residual);
            rec.check("qes_infeasible", least, tol, least > tol);
            rec.reports.qes = Some(q);
        }
        Err(e) => rec.fail(Status::Error, e),
    }
}

fn run_point(cfg: &RunConfig, sweep_value: Option<f64>) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord::new(cfg, sweep_value);
    match cfg.model_params(sweep_value) {
        Err(e) => rec.fail(Status::Error, e),
        Ok(base) => match cfg.mode {
            Mode::CoulombCheck => {
                rec.params = Some(base);
                coulomb_into(&mut rec, &base);
                if rec.checks.iter().any(|c| !c.passed) {
                    rec.fail(Status::CheckFailed, "coulomb limit check failed");
                }
            }
            mode => {
                solve_into(&mut rec, cfg, base);
                if rec.ok() {
                    match mode {
                        Mode::Verify | Mode::Scan => verify_into(&mut rec, cfg),
                        Mode::QesCheck => {
                            if let (Some(p), Some(s), Some(r)) = (rec.params, rec.solution.clone(), rec.radial.clone()) {
                                qes_into(&mut rec, cfg, &p, &s, &r);
                                if rec.checks.iter().any(|c| !c.passed) {
                                    rec.fail(Status::CheckFailed, "reduced operator lies in the generator span");
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        },
    }
    if cfg.timing {
        rec.wall_time = Some(start.elapsed().as_secs_f64());
    }
    rec
}

pub fn run_single(cfg: &RunConfig) -> RunRecord {
    run_point(cfg, None)
}

/// One record per sweep value, in sweep order.
pub fn run_scan(cfg: &RunConfig) -> Vec<RunRecord> {
    let values = cfg.sweep.as_ref().map(|s| s.values()).unwrap_or_default();
    values.par_iter().map(|&x| run_point(cfg, Some(x))).collect()
}

/// `r, rho1, rho2, W` on the evaluation grid.
pub fn wavefunction_rows(rec: &RunRecord, cfg: &RunConfig) -> Result<Vec<Vec<String>>, Error> {
    let radial = rec.radial.as_ref().ok_or(Error::InvalidParams("no wavefunction to export"))?;
    let grid = eval_grid(cfg, radial.exps.lambda)?;
    let pot = radial.potential();
    grid.points()
        .into_iter()
        .map(|r| {
            let rho2 = match eval_rho2(radial, r) {
                Ok(v) => crate::output::float(v),
                Err(Error::ComponentSingularity) => String::new(),
                Err(e) => return Err(e),
            };
            Ok(vec![
                crate::output::float(r),
                crate::output::float(eval_rho1(radial, r)?.0),
                rho2,
                crate::output::float(effective_potential(&radial.params, radial.bethe.epsilon, &pot, r)?),
            ])
        })
        .collect()
}

pub const RECORD_COLUMNS: [&str; 14] = [
    "sweep_value",
    "n",
    "epsilon_plus",
    "epsilon_minus",
    "physical_plus",
    "physical_minus",
    "branch",
    "epsilon",
    "v",
    "w",
    "roots",
    "residual_max",
    "oracle_rel_gap",
    "status",
];

pub fn record_row(rec: &RunRecord) -> Vec<String> {
    use crate::output::{float, joined, opt_float};
    let e = rec.energies;
    let sol = rec.solution.as_ref();
    let status = serde_json::to_value(rec.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    vec![
        opt_float(rec.sweep_value),
        rec.config.n.to_string(),
        opt_float(e.map(|p| p[0].epsilon)),
        opt_float(e.map(|p| p[1].epsilon)),
        e.map(|p| p[0].physical.to_string()).unwrap_or_default(),
        e.map(|p| p[1].physical.to_string()).unwrap_or_default(),
        rec.selected
            .as_ref()
            .map(|s| s.branch.map(|b| b.as_str()).unwrap_or("override").to_string())
            .unwrap_or_default(),
        opt_float(rec.selected.as_ref().map(|s| s.epsilon)),
        sol.map(|s| float(s.v)).unwrap_or_default(),
        sol.map(|s| float(s.w)).unwrap_or_default(),
        sol.map(|s| joined(&s.roots)).unwrap_or_default(),
        opt_float(rec.reports.ode.map(|r| r.max_rel)),
        opt_float(rec.reports.oracle.map(|o| o.rel_gap)),
        status,
    ]
}
