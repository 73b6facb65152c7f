//! Pointwise PDE residuals of a flow field, and sweeps over sample grids.
//!
//! The equations, in scalar form with the force on the right-hand side:
//!
//! ```text
//! ρ_t + Σₖ uₖ ρ_xₖ + ρ Σₖ ∂ₖuₖ                         = 0
//! ρ(uᵢ_t + Σₖ uₖ ∂ₖuᵢ) + ∂ᵢP + δρ∂ᵢΦ + ρΣₗβₗ|u|^{pₗ−1}uᵢ − ρFᵢ = 0
//! S_t + Σₖ uₖ S_xₖ                                      = 0
//! ΔΦ − α(N)ρ                                            = 0
//! ```

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::eos::PressureLaw;
use crate::exact::{solve_trajectory, DampingTerm, ExactError, FieldState, SolvedSolution, TimeFunction};
use crate::numerics::DiffOrder;

pub const DEFAULT_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("the Poisson residual needs delta = ±1")]
    NotApplicable,
    #[error("axis {axis} out of range for dimension {dim}")]
    BadAxis { axis: usize, dim: usize },
    #[error("finite-difference step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("momentum residual is undefined where the density vanishes")]
    ZeroDensity,
    #[error("{equation} residual at t = {t}, x = {x:?}: {source}")]
    AtPoint {
        t: f64,
        x: Vec<f64>,
        equation: Equation,
        source: Box<ResidualError>,
    },
    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, ResidualError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Chain-rule derivatives of the phase-form fields.
    Analytic,
    /// Second-order central differences with step `h` in t and every xₖ.
    FiniteDifference { h: f64 },
}

impl Mode {
    fn check(self) -> Result<()> {
        match self {
            Mode::FiniteDifference { h } if !(h > 0.0) || !h.is_finite() => Err(ResidualError::BadStep(h)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Analytic => write!(f, "analytic"),
            Mode::FiniteDifference { h } => write!(f, "finite_difference(h={h:e})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Equation {
    Mass,
    /// Zero-based axis.
    Momentum(usize),
    Entropy,
    Poisson,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Equation::Mass => write!(f, "mass"),
            Equation::Momentum(i) => write!(f, "momentum_{}", i + 1),
            Equation::Entropy => write!(f, "entropy"),
            Equation::Poisson => write!(f, "poisson"),
        }
    }
}

/// Fields and Cartesian derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJet {
    pub rho: f64,
    pub rho_t: f64,
    pub grad_rho: Vec<f64>,
    pub velocity: Vec<f64>,
    pub velocity_t: Vec<f64>,
    /// `velocity_grad[i][k] = ∂uᵢ/∂xₖ`.
    pub velocity_grad: Vec<Vec<f64>>,
    pub entropy: f64,
    pub entropy_t: f64,
    pub grad_entropy: Vec<f64>,
    pub grad_pressure: Vec<f64>,
    pub grad_potential: Option<Vec<f64>>,
    pub laplacian_potential: Option<f64>,
}

/// Anything whose residuals can be measured.
pub trait FlowField: Sync {
    fn dimension(&self) -> usize;
    /// δ
    fn coupling(&self) -> f64;
    fn alpha(&self) -> f64;
    fn force(&self, t: f64) -> Vec<f64>;
    fn damping(&self) -> &[DampingTerm];
    fn state(&self, t: f64, x: &[f64]) -> std::result::Result<FieldState, ExactError>;
    fn point_jet(&self, t: f64, x: &[f64]) -> std::result::Result<PointJet, ExactError>;
    /// Point on the line through the solution's centre whose phase is `z`.
    fn point_at_phase(&self, t: f64, z: f64) -> std::result::Result<Vec<f64>, ExactError>;
    /// Largest `|∂z/∂t|` together with `Σ|Cₖ|`, for keeping stencils inside the domain.
    fn phase_speeds(&self, t: f64) -> std::result::Result<(f64, f64), ExactError>;
}

impl FlowField for SolvedSolution {
    fn dimension(&self) -> usize {
        self.spec().dimension
    }

    fn coupling(&self) -> f64 {
        self.spec().delta.value()
    }

    fn alpha(&self) -> f64 {
        SolvedSolution::alpha(self)
    }

    fn force(&self, t: f64) -> Vec<f64> {
        (0..self.dimension()).map(|i| self.spec().force(i, t)).collect()
    }

    fn damping(&self) -> &[DampingTerm] {
        SolvedSolution::damping(self)
    }

    fn state(&self, t: f64, x: &[f64]) -> std::result::Result<FieldState, ExactError> {
        self.evaluate(t, x)
    }

    fn point_jet(&self, t: f64, x: &[f64]) -> std::result::Result<PointJet, ExactError> {
        let slice = self.at(t)?;
        let jet = slice.jet(x)?;
        let spec = self.spec();
        let c = &spec.coefficients;
        let n = c.len();
        let law = &spec.law;
        let g = jet.entropy.exp();
        let dp_dz = if jet.rho > 0.0 {
            g * (jet.dentropy_dz * law.pressure_tilde(jet.rho)? + law.pressure_tilde_slope(jet.rho)? * jet.drho_dz)
        } else {
            g * jet.dentropy_dz * law.pressure_tilde(jet.rho)?
        };
        let (grad_potential, laplacian_potential) = match &jet.potential {
            Some(p) => (
                Some(c.iter().zip(&p.gauge).map(|(c, d)| c * p.slope + d).collect()),
                Some(p.curvature * spec.coeff_norm_sq()),
            ),
            None => (None, None),
        };
        Ok(PointJet {
            rho: jet.rho,
            rho_t: jet.drho_dz * jet.dz_dt,
            grad_rho: c.iter().map(|c| c * jet.drho_dz).collect(),
            velocity: jet.velocity,
            velocity_t: jet.acceleration,
            velocity_grad: vec![vec![0.0; n]; n],
            entropy: jet.entropy,
            entropy_t: jet.dentropy_dz * jet.dz_dt,
            grad_entropy: c.iter().map(|c| c * jet.dentropy_dz).collect(),
            grad_pressure: c.iter().map(|c| c * dp_dz).collect(),
            grad_potential,
            laplacian_potential,
        })
    }

    fn point_at_phase(&self, t: f64, z: f64) -> std::result::Result<Vec<f64>, ExactError> {
        Ok(self.at(t)?.point_at_phase(z))
    }

    fn phase_speeds(&self, t: f64) -> std::result::Result<(f64, f64), ExactError> {
        let c = &self.spec().coefficients;
        let v = self.trajectory().velocity(t)?;
        let dz_dt: f64 = c.iter().zip(&v).map(|(c, v)| c * v).sum();
        Ok((dz_dt.abs(), c.iter().map(|c| c.abs()).sum()))
    }
}

/// A deliberate defect applied on top of a valid field.
#[derive(Debug, Clone, PartialEq)]
pub enum Corruption {
    /// Multiply the entropy factor g = e^S, and with it the pressure.
    ScaleEntropyFactor(f64),
    /// Multiply the density, keeping S and Φ; the pressure follows the law.
    ScaleDensity(f64),
    /// Add a constant vector to the velocity.
    VelocityOffset(Vec<f64>),
}

/// `inner` with one [`Corruption`] applied in both residual modes.
pub struct Corrupted<'a, F> {
    inner: &'a F,
    corruption: Corruption,
    law: PressureLaw,
}

impl<'a> Corrupted<'a, SolvedSolution> {
    pub fn new(inner: &'a SolvedSolution, corruption: Corruption) -> Self {
        Self {
            inner,
            corruption,
            law: inner.spec().law.clone(),
        }
    }
}

impl<F: FlowField> FlowField for Corrupted<'_, F> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn coupling(&self) -> f64 {
        self.inner.coupling()
    }

    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn force(&self, t: f64) -> Vec<f64> {
        self.inner.force(t)
    }

    fn damping(&self) -> &[DampingTerm] {
        self.inner.damping()
    }

    fn state(&self, t: f64, x: &[f64]) -> std::result::Result<FieldState, ExactError> {
        let mut s = self.inner.state(t, x)?;
        match &self.corruption {
            Corruption::ScaleEntropyFactor(k) => {
                s.entropy += k.ln();
                s.pressure *= k;
            }
            Corruption::ScaleDensity(k) => {
                s.rho *= k;
                s.pressure = self.law.pressure(s.rho, s.entropy)?;
            }
            Corruption::VelocityOffset(v) => s.velocity.iter_mut().zip(v).for_each(|(u, v)| *u += v),
        }
        Ok(s)
    }

    fn point_jet(&self, t: f64, x: &[f64]) -> std::result::Result<PointJet, ExactError> {
        let mut j = self.inner.point_jet(t, x)?;
        match &self.corruption {
            Corruption::ScaleEntropyFactor(k) => {
                j.entropy += k.ln();
                j.grad_pressure.iter_mut().for_each(|p| *p *= k);
            }
            Corruption::ScaleDensity(k) => {
                j.rho *= k;
                j.rho_t *= k;
                j.grad_rho.iter_mut().for_each(|r| *r *= k);
                let g = j.entropy.exp();
                let p = self.law.pressure_tilde(j.rho)?;
                let dp = self.law.pressure_tilde_slope(j.rho)?;
                j.grad_pressure = j
                    .grad_entropy
                    .iter()
                    .zip(&j.grad_rho)
                    .map(|(s, r)| g * (s * p + dp * r))
                    .collect();
            }
            Corruption::VelocityOffset(v) => j.velocity.iter_mut().zip(v).for_each(|(u, v)| *u += v),
        }
        Ok(j)
    }

    fn point_at_phase(&self, t: f64, z: f64) -> std::result::Result<Vec<f64>, ExactError> {
        self.inner.point_at_phase(t, z)
    }

    fn phase_speeds(&self, t: f64) -> std::result::Result<(f64, f64), ExactError> {
        self.inner.phase_speeds(t)
    }
}

/// The same solution with its trajectory integrated using `+δdᵢ` instead of
/// `−δdᵢ`; the potential keeps the original gauge.
pub fn flip_gauge_sign(solution: &SolvedSolution) -> std::result::Result<SolvedSolution, ExactError> {
    let spec = solution.spec().clone();
    let mut flipped = spec.clone();
    flipped.gauges = spec.gauges.iter().map(negate).collect();
    let trajectory = solve_trajectory(&flipped)?;
    SolvedSolution::new(spec, solution.entropy().clone(), trajectory)
}

fn negate(f: &TimeFunction) -> TimeFunction {
    match f {
        TimeFunction::Zero => TimeFunction::Zero,
        TimeFunction::Constant { value } => TimeFunction::Constant { value: -value },
        TimeFunction::Sinusoid {
            amplitude,
            omega,
            phase,
        } => TimeFunction::Sinusoid {
            amplitude: -amplitude,
            omega: *omega,
            phase: *phase,
        },
        TimeFunction::Polynomial { coefficients } => TimeFunction::Polynomial {
            coefficients: coefficients.iter().map(|c| -c).collect(),
        },
    }
}

fn shifted(x: &[f64], k: usize, dx: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += dx;
    y
}

fn fd<G>(f: G, at: f64, h: f64) -> Result<f64>
where
    G: Fn(f64) -> std::result::Result<f64, ExactError>,
{
    Ok(crate::numerics::try_central_diff(f, at, h, DiffOrder::First)?)
}

fn check_dim<F: FlowField + ?Sized>(field: &F, x: &[f64]) -> Result<()> {
    if x.len() != field.dimension() {
        return Err(ExactError::InvalidSpec(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            field.dimension()
        ))
        .into());
    }
    Ok(())
}

pub fn residual_mass<F: FlowField + ?Sized>(field: &F, t: f64, x: &[f64], mode: Mode) -> Result<f64> {
    mode.check()?;
    check_dim(field, x)?;
    match mode {
        Mode::Analytic => {
            let j = field.point_jet(t, x)?;
            let advect: f64 = j.velocity.iter().zip(&j.grad_rho).map(|(u, r)| u * r).sum();
            let div: f64 = (0..j.velocity.len()).map(|k| j.velocity_grad[k][k]).sum();
            Ok(j.rho_t + advect + j.rho * div)
        }
        Mode::FiniteDifference { h } => {
            let s = field.state(t, x)?;
            let mut r = fd(|tt| Ok(field.state(tt, x)?.rho), t, h)?;
            for k in 0..x.len() {
                let rho_k = fd(|xk| Ok(field.state(t, &shifted(x, k, xk - x[k]))?.rho), x[k], h)?;
                let du_k = fd(|xk| Ok(field.state(t, &shifted(x, k, xk - x[k]))?.velocity[k]), x[k], h)?;
                r += s.velocity[k] * rho_k + s.rho * du_k;
            }
            Ok(r)
        }
    }
}

fn damping_drag(terms: &[DampingTerm], u: &[f64], i: usize) -> f64 {
    let speed = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if speed == 0.0 {
        return 0.0;
    }
    terms.iter().map(|d| d.beta * speed.powf(d.p - 1.0) * u[i]).sum()
}

/// Momentum residual for axis `i` (zero-based), multiplied through by ρ.
pub fn residual_momentum<F: FlowField + ?Sized>(field: &F, i: usize, t: f64, x: &[f64], mode: Mode) -> Result<f64> {
    mode.check()?;
    check_dim(field, x)?;
    let n = field.dimension();
    if i >= n {
        return Err(ResidualError::BadAxis { axis: i, dim: n });
    }
    let delta = field.coupling();
    let force = field.force(t)[i];
    match mode {
        Mode::Analytic => {
            let j = field.point_jet(t, x)?;
            let convect: f64 = (0..n).map(|k| j.velocity[k] * j.velocity_grad[i][k]).sum();
            let potential = match &j.grad_potential {
                Some(g) if delta != 0.0 => delta * j.rho * g[i],
                _ => 0.0,
            };
            let drag = damping_drag(field.damping(), &j.velocity, i);
            Ok(j.rho * (j.velocity_t[i] + convect + drag) + j.grad_pressure[i] + potential - j.rho * force)
        }
        Mode::FiniteDifference { h } => {
            let s = field.state(t, x)?;
            let du_dt = fd(|tt| Ok(field.state(tt, x)?.velocity[i]), t, h)?;
            let mut convect = 0.0;
            for k in 0..n {
                let du = fd(|xk| Ok(field.state(t, &shifted(x, k, xk - x[k]))?.velocity[i]), x[k], h)?;
                convect += s.velocity[k] * du;
            }
            let along_i = |q: fn(&FieldState) -> f64| {
                move |xi: f64| -> std::result::Result<f64, ExactError> {
                    Ok(q(&field.state(t, &shifted(x, i, xi - x[i]))?))
                }
            };
            let dp = fd(along_i(|s| s.pressure), x[i], h)?;
            let potential = if delta != 0.0 {
                delta * s.rho * fd(along_i(|s| s.potential.unwrap_or(0.0)), x[i], h)?
            } else {
                0.0
            };
            let drag = damping_drag(field.damping(), &s.velocity, i);
            Ok(s.rho * (du_dt + convect + drag) + dp + potential - s.rho * force)
        }
    }
}

/// [`residual_momentum`] divided by ρ.
pub fn residual_momentum_normalized<F: FlowField + ?Sized>(
    field: &F,
    i: usize,
    t: f64,
    x: &[f64],
    mode: Mode,
) -> Result<f64> {
    let rho = field.state(t, x)?.rho;
    if !(rho > 0.0) {
        return Err(ResidualError::ZeroDensity);
    }
    Ok(residual_momentum(field, i, t, x, mode)? / rho)
}

pub fn residual_entropy<F: FlowField + ?Sized>(field: &F, t: f64, x: &[f64], mode: Mode) -> Result<f64> {
    mode.check()?;
    check_dim(field, x)?;
    match mode {
        Mode::Analytic => {
            let j = field.point_jet(t, x)?;
            let advect: f64 = j.velocity.iter().zip(&j.grad_entropy).map(|(u, s)| u * s).sum();
            Ok(j.entropy_t + advect)
        }
        Mode::FiniteDifference { h } => {
            let s = field.state(t, x)?;
            let mut r = fd(|tt| Ok(field.state(tt, x)?.entropy), t, h)?;
            for k in 0..x.len() {
                r += s.velocity[k] * fd(|xk| Ok(field.state(t, &shifted(x, k, xk - x[k]))?.entropy), x[k], h)?;
            }
            Ok(r)
        }
    }
}

pub fn residual_poisson<F: FlowField + ?Sized>(field: &F, t: f64, x: &[f64], mode: Mode) -> Result<f64> {
    mode.check()?;
    check_dim(field, x)?;
    if field.coupling() == 0.0 {
        return Err(ResidualError::NotApplicable);
    }
    match mode {
        Mode::Analytic => {
            let j = field.point_jet(t, x)?;
            let lap = j.laplacian_potential.ok_or(ExactError::PotentialUndefined)?;
            Ok(lap - field.alpha() * j.rho)
        }
        Mode::FiniteDifference { h } => {
            let s = field.state(t, x)?;
            let mut lap = 0.0;
            for k in 0..x.len() {
                let phi = |xk: f64| -> std::result::Result<f64, ExactError> {
                    field
                        .state(t, &shifted(x, k, xk - x[k]))?
                        .potential
                        .ok_or(ExactError::PotentialUndefined)
                };
                lap += crate::numerics::try_central_diff(phi, x[k], h, DiffOrder::Second)?;
            }
            Ok(lap - field.alpha() * s.rho)
        }
    }
}

/// Equations that apply to a field, in report order.
pub fn equations<F: FlowField + ?Sized>(field: &F) -> Vec<Equation> {
    let mut eqs = vec![Equation::Mass];
    eqs.extend((0..field.dimension()).map(Equation::Momentum));
    eqs.push(Equation::Entropy);
    if field.coupling() != 0.0 {
        eqs.push(Equation::Poisson);
    }
    eqs
}

pub fn residual<F: FlowField + ?Sized>(field: &F, equation: Equation, t: f64, x: &[f64], mode: Mode) -> Result<f64> {
    match equation {
        Equation::Mass => residual_mass(field, t, x, mode),
        Equation::Momentum(i) => residual_momentum(field, i, t, x, mode),
        Equation::Entropy => residual_entropy(field, t, x, mode),
        Equation::Poisson => residual_poisson(field, t, x, mode),
    }
}

/// Sample times and phases; each phase is mapped to a point on the line
/// through the solution's centre at every sampled time.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub times: Vec<f64>,
    pub phases: Vec<f64>,
}

impl SweepGrid {
    pub fn new(times: Vec<f64>, phases: Vec<f64>) -> Self {
        Self { times, phases }
    }

    /// `n` evenly spaced phases in the positivity domain, pulled in far
    /// enough that stencils of step `h_margin` stay inside it at every time.
    pub fn interior(solution: &SolvedSolution, times: Vec<f64>, n: usize, h_margin: f64) -> Result<Self> {
        let dom = solution.entropy().positivity();
        let mut reach: f64 = 0.0;
        for &t in &times {
            for tt in [t - h_margin, t, t + h_margin] {
                let (dz_dt, c_sum) = solution.phase_speeds(tt)?;
                reach = reach.max(dz_dt).max(c_sum);
            }
        }
        let margin = 2.5 * h_margin * reach + 1e-9 * dom.width();
        let (lo, hi) = (dom.lo + margin, dom.hi - margin);
        if !(lo < hi) {
            return Err(ExactError::OutOfDomain {
                z: lo,
                lo: dom.lo,
                hi: dom.hi,
            }
            .into());
        }
        let phases = match n {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
        };
        Ok(Self { times, phases })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationNorms {
    pub equation: Equation,
    pub max_abs: f64,
    /// Root mean square over the sample grid.
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstOffender {
    pub t: f64,
    pub x: Vec<f64>,
    pub equation: Equation,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub mode: Mode,
    pub n_times: usize,
    pub n_points: usize,
    pub phase_range: Option<(f64, f64)>,
    pub norms: Vec<EquationNorms>,
    pub worst: Option<WorstOffender>,
}

impl ResidualReport {
    pub fn max_norm(&self, equation: Equation) -> Option<f64> {
        self.norms.iter().find(|n| n.equation == equation).map(|n| n.max_abs)
    }

    /// Largest max-norm over all momentum components; 0 if none were sampled.
    pub fn max_momentum(&self) -> f64 {
        self.norms
            .iter()
            .filter(|n| matches!(n.equation, Equation::Momentum(_)))
            .map(|n| n.max_abs)
            .fold(0.0, f64::max)
    }

    /// Flat `equation,norm,value` table.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| ResidualError::Csv(e.to_string());
        w.write_record(["equation", "norm", "value"]).map_err(err)?;
        for n in &self.norms {
            let eq = n.equation.to_string();
            w.write_record([eq.as_str(), "max", &format!("{:.16e}", n.max_abs)])
                .map_err(err)?;
            w.write_record([eq.as_str(), "l2", &format!("{:.16e}", n.l2)])
                .map_err(err)?;
        }
        w.flush().map_err(|e| ResidualError::Csv(e.to_string()))?;
        Ok(())
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {}", self.mode)?;
        write!(f, "grid: {} times x {} points", self.n_times, self.n_points)?;
        if let Some((lo, hi)) = self.phase_range {
            write!(f, ", z in [{lo:.6}, {hi:.6}]")?;
        }
        writeln!(f)?;
        for n in &self.norms {
            writeln!(
                f,
                "{:<12} max {:.3e}  l2 {:.3e}",
                n.equation.to_string(),
                n.max_abs,
                n.l2
            )?;
        }
        if let Some(w) = &self.worst {
            writeln!(
                f,
                "worst: {} = {:.3e} at t = {}, x = {:?}",
                w.equation, w.value, w.t, w.x
            )?;
        }
        Ok(())
    }
}

/// Every applicable residual at every grid point.
///
/// Points are evaluated in parallel and reduced in grid order, so the
/// report does not depend on the thread count.
pub fn residual_sweep<F: FlowField + ?Sized>(field: &F, grid: &SweepGrid, mode: Mode) -> Result<ResidualReport> {
    mode.check()?;
    let eqs = equations(field);
    let mut points = Vec::with_capacity(grid.times.len() * grid.phases.len());
    for &t in &grid.times {
        for &z in &grid.phases {
            points.push((t, field.point_at_phase(t, z)?));
        }
    }
    let values: Vec<Vec<f64>> = points
        .par_iter()
        .map(|(t, x)| {
            eqs.iter()
                .map(|&eq| {
                    residual(field, eq, *t, x, mode).map_err(|e| ResidualError::AtPoint {
                        t: *t,
                        x: x.clone(),
                        equation: eq,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut norms: Vec<EquationNorms> = eqs
        .iter()
        .map(|&equation| EquationNorms {
            equation,
            max_abs: 0.0,
            l2: 0.0,
        })
        .collect();
    let mut worst: Option<WorstOffender> = None;
    for ((t, x), row) in points.iter().zip(&values) {
        for (norm, &v) in norms.iter_mut().zip(row) {
            norm.l2 += v * v;
            if v.abs() > norm.max_abs {
                norm.max_abs = v.abs();
            }
            if worst.as_ref().is_none_or(|w| v.abs() > w.value.abs()) {
                worst = Some(WorstOffender {
                    t: *t,
                    x: x.clone(),
                    equation: norm.equation,
                    value: v,
                });
            }
        }
    }
    if !points.is_empty() {
        for n in &mut norms {
            n.l2 = (n.l2 / points.len() as f64).sqrt();
        }
    }
    let phase_range = match (grid.phases.first(), grid.phases.last()) {
        (Some(&a), Some(&b)) => Some((a, b)),
        _ => None,
    };
    Ok(ResidualReport {
        mode,
        n_times: grid.times.len(),
        n_points: grid.phases.len(),
        phase_range,
        norms,
        worst,
    })
}
