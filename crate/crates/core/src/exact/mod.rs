//! Exact line solutions.
//!
//! Every field depends on space only through the phase
//! `z = Σᵢ Cᵢ (xᵢ − aᵢ(t))`. The density is `f(z)` for the Euler family and
//! `(ΣCᵢ²/α(N))·f″(z)` for the Euler-Poisson family, the velocity is the
//! uniform `ȧ(t)`, and the entropy is `S = ln g(z)` where `g` solves the
//! momentum constraint `d/dz[g·P̃(ρ)] = −ρ(ξ + δf′)`.

mod entropy;
mod spec;
mod trajectory;

use thiserror::Error;

use crate::eos::EosError;
use crate::numerics::{self, NumericsError};
use crate::profiles::{ProfileError, SignRequirement};

pub use entropy::{
    solve_entropy, solve_entropy_first_integral, solve_entropy_ode, EntropyMethod, EntropyProfile, PositivityDomain,
    DEFAULT_ENTROPY_NODES, DEFAULT_ODE_STEP,
};
pub use spec::{Coupling, DensityModel, EntropyAnchor, LineSolutionSpec, TimeFunction};
pub use trajectory::{
    solve_trajectory, solve_trajectory_damped, DampingTerm, Kinematics, Trajectory, TrajectoryMethod,
    DEFAULT_TRAJECTORY_STEP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("invalid solution spec: {0}")]
    InvalidSpec(String),
    #[error("profile fails the {requirement:?} requirement at z = {z}")]
    SignViolation { z: f64, requirement: SignRequirement },
    #[error("negative density {value} at z = {z}")]
    NegativeDensity { z: f64, value: f64 },
    #[error("first-integral method unavailable: vacuum (P̃(ρ) = 0) at z = {z}")]
    Vacuum { z: f64 },
    #[error("entropy ODE coefficient is singular: density {rho} at z = {z}")]
    SingularCoefficient { z: f64, rho: f64 },
    #[error("phase z = {z} lies outside the valid domain [{lo}, {hi}]")]
    OutOfDomain { z: f64, lo: f64, hi: f64 },
    #[error("time t = {t} lies outside the integrated window [{lo}, {hi}]")]
    OutOfTimeWindow { t: f64, lo: f64, hi: f64 },
    #[error("the potential is only defined for the Euler-Poisson couplings (delta = ±1)")]
    PotentialUndefined,
    #[error("operation needs dimension 1, got {0}")]
    UnsupportedDimension(usize),
    #[error("damping exponent p = {exponent} < 1 is singular at zero velocity (t = {t})")]
    SingularDamping { exponent: f64, t: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ExactError>;

/// Evaluated fields at one space-time point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: f64,
    pub velocity: Vec<f64>,
    pub entropy: f64,
    /// Present only for the Euler-Poisson couplings.
    pub potential: Option<f64>,
    pub pressure: f64,
}

/// Potential data along the phase: `Φ = f(z) + Σdᵢ(t)xᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialJet {
    /// f′(z)
    pub slope: f64,
    /// f″(z)
    pub curvature: f64,
    /// dᵢ(t)
    pub gauge: Vec<f64>,
}

/// Fields and their first derivatives in phase form, enough to evaluate
/// every residual by the chain rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    pub z: f64,
    /// ∂z/∂t
    pub dz_dt: f64,
    pub rho: f64,
    pub drho_dz: f64,
    pub entropy: f64,
    pub dentropy_dz: f64,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub potential: Option<PotentialJet>,
}

/// z = Σᵢ Cᵢ (xᵢ − aᵢ).
pub fn phase_at(coefficients: &[f64], position: &[f64], x: &[f64]) -> f64 {
    coefficients
        .iter()
        .zip(position)
        .zip(x)
        .map(|((c, a), x)| c * (x - a))
        .sum()
}

pub fn phase(spec: &LineSolutionSpec, trajectory: &Trajectory, t: f64, x: &[f64]) -> Result<f64> {
    spec.check_point(x)?;
    Ok(phase_at(&spec.coefficients, &trajectory.position(t)?, x))
}

pub fn density_of_z(spec: &LineSolutionSpec, z: f64) -> Result<f64> {
    DensityModel::new(spec)?.density(z)
}

/// `f(z) + Σdᵢ(t)xᵢ`.
pub fn build_potential(spec: &LineSolutionSpec, trajectory: &Trajectory, t: f64, x: &[f64]) -> Result<f64> {
    if spec.delta == Coupling::Euler {
        return Err(ExactError::PotentialUndefined);
    }
    let z = phase(spec, trajectory, t, x)?;
    let linear: f64 = (0..spec.dimension).map(|i| spec.gauge(i, t) * x[i]).sum();
    Ok(spec.profile.eval(z, 0)? + linear)
}

/// Total density over the moving image of `z_domain`.
///
/// The window `x ∈ a(t) + z_domain/C₁` is integrated in `x`, so constancy in
/// `t` checks the translation structure rather than assuming it.
pub fn mass_1d(spec: &LineSolutionSpec, trajectory: &Trajectory, t: f64) -> Result<f64> {
    if spec.dimension != 1 {
        return Err(ExactError::UnsupportedDimension(spec.dimension));
    }
    let model = DensityModel::new(spec)?;
    let c = spec.coefficients[0];
    let a = trajectory.position(t)?[0];
    let [z_lo, z_hi] = spec.z_domain;
    let (x0, x1) = {
        let (p, q) = (a + z_lo / c, a + z_hi / c);
        if p < q {
            (p, q)
        } else {
            (q, p)
        }
    };
    let failure = std::cell::Cell::new(None);
    let integrand = |x: f64| {
        let z = (c * (x - a)).clamp(z_lo, z_hi);
        match model.density(z) {
            Ok(r) => r,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let result = numerics::adaptive_simpson(integrand, x0, x1, 1e-13)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(result.value)
}

/// How the entropy profile and trajectory are produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub entropy_method: EntropyMethod,
    pub entropy_nodes: usize,
    pub ode_step: f64,
    /// Damping terms; non-empty selects the damped trajectory integrator.
    pub damping: Vec<DampingTerm>,
    /// Time window for the damped integrator.
    pub horizon: (f64, f64),
    pub trajectory_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            entropy_method: EntropyMethod::FirstIntegral,
            entropy_nodes: DEFAULT_ENTROPY_NODES,
            ode_step: DEFAULT_ODE_STEP,
            damping: Vec::new(),
            horizon: (-0.1, 2.1),
            trajectory_step: DEFAULT_TRAJECTORY_STEP,
        }
    }
}

/// A spec together with its solved entropy profile and trajectory.
///
/// Immutable once built; safe to evaluate from several threads.
#[derive(Debug, Clone)]
pub struct SolvedSolution {
    spec: LineSolutionSpec,
    model: DensityModel,
    entropy: EntropyProfile,
    trajectory: Trajectory,
    alpha: f64,
}

impl SolvedSolution {
    pub fn new(spec: LineSolutionSpec, entropy: EntropyProfile, trajectory: Trajectory) -> Result<Self> {
        spec.validate()?;
        let model = DensityModel::new(&spec)?;
        let alpha = numerics::alpha(spec.dimension)?;
        Ok(Self {
            spec,
            model,
            entropy,
            trajectory,
            alpha,
        })
    }

    pub fn solve(spec: LineSolutionSpec, options: &SolveOptions) -> Result<Self> {
        spec.validate()?;
        let entropy = solve_entropy(&spec, options.entropy_method, options.entropy_nodes, options.ode_step)?;
        let trajectory = if options.damping.is_empty() {
            solve_trajectory(&spec)?
        } else {
            solve_trajectory_damped(&spec, &options.damping, options.trajectory_step, options.horizon)?
        };
        Self::new(spec, entropy, trajectory)
    }

    pub fn spec(&self) -> &LineSolutionSpec {
        &self.spec
    }

    pub fn entropy(&self) -> &EntropyProfile {
        &self.entropy
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn damping(&self) -> &[DampingTerm] {
        self.trajectory.damping()
    }

    /// Fix the time; all spatial evaluation goes through the returned slice.
    pub fn at(&self, t: f64) -> Result<TimeSlice<'_>> {
        let kinematics = self.trajectory.kinematics(t)?;
        let gauge = (0..self.spec.dimension).map(|i| self.spec.gauge(i, t)).collect();
        let force = (0..self.spec.dimension).map(|i| self.spec.force(i, t)).collect();
        Ok(TimeSlice {
            solution: self,
            t,
            kinematics,
            gauge,
            force,
        })
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> Result<FieldState> {
        self.at(t)?.evaluate(x)
    }

    pub fn mass_1d(&self, t: f64) -> Result<f64> {
        mass_1d(&self.spec, &self.trajectory, t)
    }
}

pub fn evaluate(solution: &SolvedSolution, t: f64, x: &[f64]) -> Result<FieldState> {
    solution.evaluate(t, x)
}

/// A solution frozen at one time.
#[derive(Debug, Clone)]
pub struct TimeSlice<'a> {
    solution: &'a SolvedSolution,
    pub t: f64,
    pub kinematics: Kinematics,
    pub gauge: Vec<f64>,
    pub force: Vec<f64>,
}

impl TimeSlice<'_> {
    pub fn phase(&self, x: &[f64]) -> Result<f64> {
        self.solution.spec.check_point(x)?;
        Ok(phase_at(&self.solution.spec.coefficients, &self.kinematics.position, x))
    }

    /// Point on the line through `a(t)` along `C` whose phase is `z`.
    pub fn point_at_phase(&self, z: f64) -> Vec<f64> {
        let c = &self.solution.spec.coefficients;
        let norm_sq = self.solution.spec.coeff_norm_sq();
        self.kinematics
            .position
            .iter()
            .zip(c)
            .map(|(a, c)| a + z * c / norm_sq)
            .collect()
    }

    fn potential_value(&self, z: f64, x: &[f64]) -> Result<Option<f64>> {
        if self.solution.spec.delta == Coupling::Euler {
            return Ok(None);
        }
        let linear: f64 = self.gauge.iter().zip(x).map(|(d, x)| d * x).sum();
        Ok(Some(self.solution.spec.profile.eval(z, 0)? + linear))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<FieldState> {
        let z = self.phase(x)?;
        let sol = self.solution;
        let (g, _) = sol.entropy.g_and_slope(z)?;
        let rho = sol.model.density(z)?;
        let entropy = g.ln();
        Ok(FieldState {
            rho,
            velocity: self.kinematics.velocity.clone(),
            entropy,
            potential: self.potential_value(z, x)?,
            pressure: sol.spec.law.pressure(rho, entropy)?,
        })
    }

    pub fn jet(&self, x: &[f64]) -> Result<FieldJet> {
        let z = self.phase(x)?;
        let sol = self.solution;
        let spec = &sol.spec;
        let (g, dg) = sol.entropy.g_and_slope(z)?;
        let potential = match spec.delta {
            Coupling::Euler => None,
            _ => Some(PotentialJet {
                slope: spec.profile.eval(z, 1)?,
                curvature: spec.profile.eval(z, 2)?,
                gauge: self.gauge.clone(),
            }),
        };
        let dz_dt = -spec
            .coefficients
            .iter()
            .zip(&self.kinematics.velocity)
            .map(|(c, v)| c * v)
            .sum::<f64>();
        Ok(FieldJet {
            z,
            dz_dt,
            rho: sol.model.density(z)?,
            drho_dz: sol.model.density_slope(z)?,
            entropy: g.ln(),
            dentropy_dz: dg / g,
            velocity: self.kinematics.velocity.clone(),
            acceleration: self.kinematics.acceleration.clone(),
            potential,
        })
    }

    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        let z = self.phase(x)?;
        self.potential_value(z, x)?.ok_or(ExactError::PotentialUndefined)
    }
}
