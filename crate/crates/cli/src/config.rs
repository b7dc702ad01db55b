//! Run configuration shared by the flag parser and the JSON config file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qdirac_core::model::{Branch, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Solve,
    Verify,
    Scan,
    CoulombCheck,
    QesCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Plus,
    Minus,
    #[default]
    Both,
}

impl BranchChoice {
    /// Branches in the order they are tried.
    pub fn order(self) -> &'static [Branch] {
        match self {
            BranchChoice::Plus => &[Branch::Plus],
            BranchChoice::Minus => &[Branch::Minus],
            BranchChoice::Both => &[Branch::Minus, Branch::Plus],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSet {
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub eta: Option<f64>,
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Points of the linear finite-difference oracle grid.
    pub oracle_points: usize,
    /// Points of the log-spaced evaluation grid.
    pub eval_points: usize,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { oracle_points: 20_000, eval_points: 4096, rmin: None, rmax: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub coulomb: bool,
    pub qes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Alpha,
    A,
    B,
    Eta,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    /// Move `b` onto the Coulomb locus at every point.
    #[serde(default)]
    pub coulomb_locus: bool,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

pub const TOLERANCE_NAMES: [&str; 7] =
    ["derivative", "fd_overlap", "fd_rel_gap", "first_order", "master", "ode_residual", "qes_infeasible"];

pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("derivative", 1e-6),
        ("fd_overlap", 0.999),
        ("fd_rel_gap", 1e-4),
        ("first_order", 1e-8),
        ("master", 1e-10),
        ("ode_residual", 1e-8),
        ("qes_infeasible", 1e-6),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: ParamSet,
    pub branch: BranchChoice,
    pub n: usize,
    pub lam_ang: Option<f64>,
    pub epsilon_override: Option<f64>,
    pub checks: Checks,
    pub grid: GridConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub sweep: Option<Sweep>,
    pub output: OutputConfig,
    pub emit_wavefunction: Option<PathBuf>,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Solve,
            params: ParamSet::default(),
            branch: BranchChoice::Both,
            n: 0,
            lam_ang: None,
            epsilon_override: None,
            checks: Checks::default(),
            grid: GridConfig::default(),
            tolerances: default_tolerances(),
            sweep: None,
            output: OutputConfig::default(),
            emit_wavefunction: None,
            timing: false,
        }
    }
}

/// An invariant violation. `missing` marks an absent required value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub missing: bool,
}

impl ConfigError {
    fn invalid(message: impl Into<String>) -> Self {
        ConfigError { message: message.into(), missing: false }
    }
}

impl RunConfig {
    /// Fills in default tolerances absent from the map.
    pub fn complete_tolerances(&mut self) {
        for (k, v) in default_tolerances() {
            self.tolerances.entry(k).or_insert(v);
        }
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let missing: Vec<&str> = [
            ("--alpha", self.params.alpha),
            ("--a", self.params.a),
            ("--b", self.params.b),
            ("--eta", self.params.eta),
            ("--u", self.params.u),
        ]
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(k, _)| *k)
        .collect();
        if !missing.is_empty() {
            return Err(ConfigError { message: format!("missing required arguments: {}", missing.join(" ")), missing: true });
        }
        for (name, value) in &self.tolerances {
            if !TOLERANCE_NAMES.contains(&name.as_str()) {
                return Err(ConfigError::invalid(format!("unknown tolerance '{name}'")));
            }
            if !(*value > 0.0 && value.is_finite()) {
                return Err(ConfigError::invalid(format!("tolerance '{name}' must be positive")));
            }
        }
        if self.grid.oracle_points < 16 || self.grid.eval_points < 16 {
            return Err(ConfigError::invalid("grids need at least 16 points"));
        }
        if let Some(l) = self.lam_ang {
            if !l.is_finite() {
                return Err(ConfigError::invalid("--lam-ang must be finite"));
            }
        }
        if let Some(e) = self.epsilon_override {
            if !e.is_finite() {
                return Err(ConfigError::invalid("--epsilon-override must be finite"));
            }
        }
        match (&self.sweep, self.mode) {
            (None, Mode::Scan) => return Err(ConfigError { message: "scan requires a sweep".into(), missing: true }),
            (Some(s), _) => {
                if s.steps < 2 {
                    return Err(ConfigError::invalid("sweep steps must be at least 2"));
                }
                if !(s.from.is_finite() && s.to.is_finite()) {
                    return Err(ConfigError::invalid("sweep bounds must be finite"));
                }
                if s.coulomb_locus && s.parameter == SweepParam::B {
                    return Err(ConfigError::invalid("b cannot be swept on the Coulomb locus"));
                }
            }
            _ => {}
        }
        self.model_params(None).map(|_| ()).map_err(|e| ConfigError::invalid(e.to_string()))
    }

    /// Parameters with the sweep value applied (and `b` moved onto the
    /// Coulomb locus when requested).
    pub fn model_params(&self, sweep_value: Option<f64>) -> qdirac_core::Result<ModelParams> {
        let p = &self.params;
        let mut m = ModelParams {
            alpha: p.alpha.unwrap_or(f64::NAN),
            a: p.a.unwrap_or(f64::NAN),
            b: p.b.unwrap_or(f64::NAN),
            eta: p.eta.unwrap_or(f64::NAN),
            u: p.u.unwrap_or(f64::NAN),
            branch: Branch::Minus,
        };
        if let (Some(s), Some(x)) = (&self.sweep, sweep_value) {
            match s.parameter {
                SweepParam::Alpha => m.alpha = x,
                SweepParam::A => m.a = x,
                SweepParam::B => m.b = x,
                SweepParam::Eta => m.eta = x,
                SweepParam::U => m.u = x,
            }
            if s.coulomb_locus {
                m.validate()?;
                m.b = m.coulomb_b()?;
            }
        }
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coulomb() -> RunConfig {
        RunConfig {
            params: ParamSet { alpha: Some(1.0), a: Some(1.0), b: Some(1.5), eta: Some(-std::f64::consts::FRAC_PI_4), u: Some(-1.0) },
            ..RunConfig::default()
        }
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = coulomb();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"params": {"alpha": 1}, "n": 2}"#).unwrap();
        assert_eq!(partial.n, 2);
        assert_eq!(partial.grid.oracle_points, 20_000);
    }

    #[test]
    fn invariants() {
        assert!(coulomb().validate().is_ok());
        let mut c = coulomb();
        c.params.u = None;
        assert!(c.validate().unwrap_err().missing);
        let mut c = coulomb();
        c.tolerances.insert("master".into(), -1.0);
        assert!(c.validate().is_err());
        let mut c = coulomb();
        c.mode = Mode::Scan;
        c.sweep = Some(Sweep { parameter: SweepParam::Eta, from: -1.0, to: -0.1, steps: 1, coulomb_locus: true });
        assert!(!c.validate().unwrap_err().missing);
    }

    #[test]
    fn sweep_endpoints_are_exact() {
        let s = Sweep { parameter: SweepParam::U, from: -1.5, to: -0.5, steps: 3, coulomb_locus: false };
        assert_eq!(s.values(), vec![-1.5, -1.0, -0.5]);
    }

    #[test]
    fn coulomb_locus_moves_b() {
        let mut c = coulomb();
        c.sweep = Some(Sweep { parameter: SweepParam::U, from: -2.0, to: -1.0, steps: 2, coulomb_locus: true });
        let m = c.model_params(Some(-2.0)).unwrap();
        assert!(m.coulomb_mismatch().unwrap().abs() < 1e-14);
    }
}
