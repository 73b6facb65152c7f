use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use linesol::exact::{
    DampingTerm, EntropyMethod, LineSolutionSpec, SolveOptions, DEFAULT_ENTROPY_NODES, DEFAULT_ODE_STEP,
    DEFAULT_TRAJECTORY_STEP,
};
use linesol::fvsolver::{Grid1D, SolverConfig, DEFAULT_CFL};

use crate::error::CliError;

/// A scenario file: one solution plus everything needed to verify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub solution: LineSolutionSpec,
    #[serde(default)]
    pub entropy: EntropySettings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub damping: Vec<DampingTerm>,
    #[serde(default)]
    pub verification: Verification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySettings {
    #[serde(default = "default_method")]
    pub method: EntropyMethod,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_ode_step")]
    pub ode_step: f64,
}

fn default_method() -> EntropyMethod {
    EntropyMethod::FirstIntegral
}
fn default_nodes() -> usize {
    DEFAULT_ENTROPY_NODES
}
fn default_ode_step() -> f64 {
    DEFAULT_ODE_STEP
}

impl Default for EntropySettings {
    fn default() -> Self {
        Self {
            method: default_method(),
            nodes: default_nodes(),
            ode_step: default_ode_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verification {
    #[serde(default = "default_residual_times")]
    pub residual_times: Vec<f64>,
    #[serde(default = "default_residual_points")]
    pub residual_points: usize,
    #[serde(default = "default_fd_h")]
    pub fd_h: f64,
    /// Steps of the finite-difference convergence study.
    #[serde(default = "default_fd_steps")]
    pub fd_steps: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_entropy_tolerance")]
    pub entropy_tolerance: f64,
    #[serde(default = "default_mass_times")]
    pub mass_times: Vec<f64>,
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
    #[serde(default)]
    pub trajectory: TimeGrid,
    #[serde(default = "default_trajectory_step")]
    pub trajectory_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fv: Option<FvSettings>,
}

fn default_residual_times() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_residual_points() -> usize {
    101
}
fn default_fd_h() -> f64 {
    linesol::residual::DEFAULT_FD_STEP
}
fn default_fd_steps() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_entropy_tolerance() -> f64 {
    1e-8
}
fn default_mass_times() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}
fn default_mass_tolerance() -> f64 {
    1e-8
}
fn default_trajectory_step() -> f64 {
    DEFAULT_TRAJECTORY_STEP
}

impl Default for Verification {
    fn default() -> Self {
        Self {
            residual_times: default_residual_times(),
            residual_points: default_residual_points(),
            fd_h: default_fd_h(),
            fd_steps: default_fd_steps(),
            tolerance: default_tolerance(),
            entropy_tolerance: default_entropy_tolerance(),
            mass_times: default_mass_times(),
            mass_tolerance: default_mass_tolerance(),
            trajectory: TimeGrid::default(),
            trajectory_step: default_trajectory_step(),
            fv: None,
        }
    }
}

/// `count` evenly spaced times from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: 2.0,
            count: 21,
        }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| {
                    if k + 1 == n {
                        self.end
                    } else {
                        self.start + (self.end - self.start) * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FvSettings {
    pub cells: Vec<usize>,
    /// Section interval in the coordinate along C/|C|.
    pub x_range: [f64; 2],
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default = "default_min_ratio")]
    pub min_ratio: f64,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn default_min_ratio() -> f64 {
    1.5
}

impl FvSettings {
    pub fn grids(&self) -> Result<Vec<Grid1D>, CliError> {
        self.cells
            .iter()
            .map(|&n| Grid1D::new(n, self.x_range[0], self.x_range[1]).map_err(|e| CliError::Invalid(e.to_string())))
            .collect()
    }

    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.cfl,
            t_end: self.t_end,
            output_times: self.output_times.clone(),
            ..SolverConfig::default()
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("scenario parse error: {e}")))?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Time window the damped integrator must cover.
    pub fn horizon(&self) -> (f64, f64) {
        let v = &self.verification;
        let h = v.fd_steps.iter().copied().chain([v.fd_h]).fold(0.0, f64::max);
        let mut times: Vec<f64> = v.residual_times.clone();
        times.extend(&v.mass_times);
        times.extend(v.trajectory.times());
        if let Some(fv) = &v.fv {
            times.push(fv.t_end);
        }
        let lo = times.iter().copied().fold(0.0, f64::min);
        let hi = times.iter().copied().fold(0.0, f64::max);
        (lo - 2.0 * h - 0.05, hi + 2.0 * h + 0.05)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            entropy_method: self.entropy.method,
            entropy_nodes: self.entropy.nodes,
            ode_step: self.entropy.ode_step,
            damping: self.damping.clone(),
            horizon: self.horizon(),
            trajectory_step: self.verification.trajectory_step,
        }
    }

    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        match (cli, &self.output_dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => p.clone(),
            (None, None) => PathBuf::from("out").join(&self.name),
        }
    }
}
