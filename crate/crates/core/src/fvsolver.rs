//! First-order finite-volume solver on a 1-D section of a line solution.
//!
//! The section is the lab-frame line `x(s) = a(0) + s·n` with `n = C/|C|`.
//! Every line solution is constant on hyperplanes normal to `C`, so along
//! the section the system reduces to the 1-D equations in `s` with the
//! normal velocity `u = n·ȧ`, the force `n·F`, the potential slope
//! `Φ_s = |C|f′(z) + n·d` and `Φ_ss = α(N)ρ`.
//!
//! The evolved variables are `(ρ, ρu, S)`. Mass and momentum use the
//! Rusanov flux, S is advected by first-order upwinding, and the momentum
//! source `ρ(F − δΦ_s)` is Strang-split around the hyperbolic update.

use rayon::prelude::*;
use thiserror::Error;

use crate::eos::{EosError, PressureLaw};
use crate::exact::{ExactError, SolvedSolution};

pub const MIN_CELLS: usize = 4;
pub const DEFAULT_CFL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FvError {
    #[error("grid needs at least {MIN_CELLS} cells and x_lo < x_hi, got {n_cells} cells on [{x_lo}, {x_hi}]")]
    InvalidGrid { n_cells: usize, x_lo: f64, x_hi: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("negative density {value} in cell {cell} at t = {t}")]
    NegativeDensity { cell: usize, t: f64, value: f64 },
    #[error("non-finite state in cell {cell} at t = {t}")]
    NonFinite { cell: usize, t: f64 },
    #[error("time step underflow: dt = {dt} at t = {t}")]
    DtUnderflow { t: f64, dt: f64 },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Eos(#[from] EosError),
}

pub type Result<T> = std::result::Result<T, FvError>;

/// Uniform cells on `[x_lo, x_hi]` in the section coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n_cells: usize,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, x_lo: f64, x_hi: f64) -> Result<Self> {
        if n_cells < MIN_CELLS || !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(FvError::InvalidGrid { n_cells, x_lo, x_hi });
        }
        Ok(Self { n_cells, x_lo, x_hi })
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n_cells as f64
    }

    /// Centre of cell `i`; `i = -1` and `i = n_cells` are the ghost cells.
    pub fn center(&self, i: isize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FVState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub momentum: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl FVState {
    pub fn velocity(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.momentum).map(|(r, m)| m / r).collect()
    }

    pub fn mass(&self, grid: &Grid1D) -> f64 {
        self.rho.iter().sum::<f64>() * grid.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    ExactDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Splitting {
    #[default]
    Strang,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    pub splitting: Splitting,
    /// Times in `(0, t_end)` at which errors are also recorded.
    pub output_times: Vec<f64>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            t_end: 0.2,
            boundary: Boundary::ExactDirichlet,
            splitting: Splitting::Strang,
            output_times: Vec::new(),
            max_steps: 1_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) || !self.cfl.is_finite() {
            return Err(FvError::InvalidConfig(format!(
                "cfl must be positive, got {}",
                self.cfl
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(FvError::InvalidConfig(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.output_times.iter().any(|t| !(*t > 0.0 && *t <= self.t_end)) {
            return Err(FvError::InvalidConfig("output times must lie in (0, t_end]".into()));
        }
        Ok(())
    }
}

/// The exact solution restricted to the section line.
#[derive(Debug, Clone)]
pub struct Section<'a> {
    solution: &'a SolvedSolution,
    origin: Vec<f64>,
    normal: Vec<f64>,
    c_norm: f64,
}

/// Exact `(ρ, u, S)` at one section point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionState {
    pub rho: f64,
    pub velocity: f64,
    pub entropy: f64,
}

impl<'a> Section<'a> {
    pub fn new(solution: &'a SolvedSolution) -> Result<Self> {
        if !solution.damping().is_empty() {
            return Err(FvError::InvalidConfig(
                "damped solutions are not supported by the section solver".into(),
            ));
        }
        let spec = solution.spec();
        let c_norm = spec.coeff_norm_sq().sqrt();
        Ok(Self {
            solution,
            origin: solution.trajectory().position(0.0)?,
            normal: spec.coefficients.iter().map(|c| c / c_norm).collect(),
            c_norm,
        })
    }

    pub fn solution(&self) -> &SolvedSolution {
        self.solution
    }

    pub fn point(&self, s: f64) -> Vec<f64> {
        self.origin.iter().zip(&self.normal).map(|(o, n)| o + s * n).collect()
    }

    fn dot_normal(&self, v: &[f64]) -> f64 {
        self.normal.iter().zip(v).map(|(n, v)| n * v).sum()
    }

    /// Exact states at the section points `s`, all at time `t`.
    pub fn states(&self, t: f64, s: &[f64]) -> Result<Vec<SectionState>> {
        let slice = self.solution.at(t)?;
        let velocity = self.dot_normal(&slice.kinematics.velocity);
        s.iter()
            .map(|&s| {
                let f = slice.evaluate(&self.point(s))?;
                Ok(SectionState {
                    rho: f.rho,
                    velocity,
                    entropy: f.entropy,
                })
            })
            .collect()
    }

    pub fn force(&self, t: f64) -> f64 {
        let spec = self.solution.spec();
        (0..spec.dimension).map(|i| self.normal[i] * spec.force(i, t)).sum()
    }

    /// Exact `Φ_s = |C|f′(z) + n·d(t)` at section point `s`.
    pub fn potential_slope(&self, t: f64, s: f64) -> Result<f64> {
        let spec = self.solution.spec();
        let slice = self.solution.at(t)?;
        let z = slice.phase(&self.point(s))?;
        let gauge = self.dot_normal(&slice.gauge);
        Ok(self.c_norm * spec.profile.eval(z, 1).map_err(ExactError::from)? + gauge)
    }
}

pub fn init_from_exact(section: &Section<'_>, grid: &Grid1D) -> Result<FVState> {
    let centers: Vec<f64> = (0..grid.n_cells as isize).map(|i| grid.center(i)).collect();
    let states = section.states(0.0, &centers)?;
    Ok(FVState {
        t: 0.0,
        rho: states.iter().map(|s| s.rho).collect(),
        momentum: states.iter().map(|s| s.rho * s.velocity).collect(),
        entropy: states.iter().map(|s| s.entropy).collect(),
    })
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    /// Rusanov mass flux through the left and right boundary faces.
    pub mass_flux_lo: f64,
    pub mass_flux_hi: f64,
}

fn sound_speed(law: &PressureLaw, rho: f64, entropy: f64) -> Result<f64> {
    Ok(law.sound_speed(rho, entropy)?)
}

fn check_cells(state: &FVState) -> Result<()> {
    for (i, ((r, m), s)) in state.rho.iter().zip(&state.momentum).zip(&state.entropy).enumerate() {
        if !r.is_finite() || !m.is_finite() || !s.is_finite() {
            return Err(FvError::NonFinite { cell: i, t: state.t });
        }
        if *r <= 0.0 {
            return Err(FvError::NegativeDensity {
                cell: i,
                t: state.t,
                value: *r,
            });
        }
    }
    Ok(())
}

/// Largest stable step for the current state.
pub fn stable_dt(state: &FVState, law: &PressureLaw, grid: &Grid1D, cfl: f64) -> Result<f64> {
    let mut speed: f64 = 0.0;
    for i in 0..state.rho.len() {
        let u = state.momentum[i] / state.rho[i];
        speed = speed.max(u.abs() + sound_speed(law, state.rho[i], state.entropy[i])?);
    }
    Ok(if speed > 0.0 {
        cfl * grid.dx() / speed
    } else {
        f64::INFINITY
    })
}

fn source_half(
    state: &mut FVState,
    section: &Section<'_>,
    grid: &Grid1D,
    ghost_lo: f64,
    t: f64,
    dt: f64,
) -> Result<()> {
    let solution = section.solution();
    let delta = solution.spec().delta.value();
    let force = section.force(t);
    let n = grid.n_cells;
    if delta == 0.0 {
        for i in 0..n {
            state.momentum[i] += dt * state.rho[i] * force;
        }
        return Ok(());
    }
    let dx = grid.dx();
    let alpha = solution.alpha();
    let mut phi_s = section.potential_slope(t, grid.x_lo)?;
    // cumulative trapezoid from the left face through the cell centres
    let face = 0.5 * (ghost_lo + state.rho[0]);
    phi_s += alpha * 0.25 * dx * (face + state.rho[0]);
    let mut prev_rho = state.rho[0];
    for i in 0..n {
        if i > 0 {
            phi_s += alpha * 0.5 * dx * (prev_rho + state.rho[i]);
            prev_rho = state.rho[i];
        }
        state.momentum[i] += dt * state.rho[i] * (force - delta * phi_s);
    }
    Ok(())
}

fn ghost_cells(section: &Section<'_>, grid: &Grid1D, t: f64) -> Result<[(f64, f64, f64); 2]> {
    let s = section.states(t, &[grid.center(-1), grid.center(grid.n_cells as isize)])?;
    Ok([
        (s[0].rho, s[0].rho * s[0].velocity, s[0].entropy),
        (s[1].rho, s[1].rho * s[1].velocity, s[1].entropy),
    ])
}

fn hyperbolic(
    state: &mut FVState,
    law: &PressureLaw,
    grid: &Grid1D,
    ghosts: [(f64, f64, f64); 2],
    dt: f64,
) -> Result<(f64, f64)> {
    let n = grid.n_cells;
    let mut rho = Vec::with_capacity(n + 2);
    let mut mom = Vec::with_capacity(n + 2);
    let mut ent = Vec::with_capacity(n + 2);
    rho.push(ghosts[0].0);
    mom.push(ghosts[0].1);
    ent.push(ghosts[0].2);
    rho.extend_from_slice(&state.rho);
    mom.extend_from_slice(&state.momentum);
    ent.extend_from_slice(&state.entropy);
    rho.push(ghosts[1].0);
    mom.push(ghosts[1].1);
    ent.push(ghosts[1].2);

    let mut pressure = Vec::with_capacity(n + 2);
    let mut speed = Vec::with_capacity(n + 2);
    for j in 0..n + 2 {
        pressure.push(law.pressure(rho[j], ent[j])?);
        speed.push((mom[j] / rho[j]).abs() + sound_speed(law, rho[j], ent[j])?);
    }
    // face j sits between extended cells j and j + 1
    let mut f_mass = Vec::with_capacity(n + 1);
    let mut f_mom = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let (l, r) = (j, j + 1);
        let lambda = speed[l].max(speed[r]);
        f_mass.push(0.5 * (mom[l] + mom[r]) - 0.5 * lambda * (rho[r] - rho[l]));
        let flux_l = mom[l] * mom[l] / rho[l] + pressure[l];
        let flux_r = mom[r] * mom[r] / rho[r] + pressure[r];
        f_mom.push(0.5 * (flux_l + flux_r) - 0.5 * lambda * (mom[r] - mom[l]));
    }
    let k = dt / grid.dx();
    for i in 0..n {
        let j = i + 1;
        let u = mom[j] / rho[j];
        let upwind = if u > 0.0 {
            u * (ent[j] - ent[j - 1])
        } else {
            u * (ent[j + 1] - ent[j])
        };
        state.rho[i] = rho[j] - k * (f_mass[i + 1] - f_mass[i]);
        state.momentum[i] = mom[j] - k * (f_mom[i + 1] - f_mom[i]);
        state.entropy[i] = ent[j] - k * upwind;
    }
    Ok((f_mass[0], f_mass[n]))
}

/// One Strang-split step of size `dt` (clipped by the caller to CFL).
pub fn step_with_dt(state: &mut FVState, section: &Section<'_>, grid: &Grid1D, dt: f64) -> Result<StepInfo> {
    let law = section.solution().spec().law.clone();
    let t = state.t;
    let ghosts_now = ghost_cells(section, grid, t)?;
    source_half(state, section, grid, ghosts_now[0].0, t, 0.5 * dt)?;
    let (mass_flux_lo, mass_flux_hi) = hyperbolic(state, &law, grid, ghosts_now, dt)?;
    state.t = t + dt;
    check_cells(state)?;
    let ghosts_next = ghost_cells(section, grid, state.t)?;
    source_half(state, section, grid, ghosts_next[0].0, state.t, 0.5 * dt)?;
    check_cells(state)?;
    Ok(StepInfo {
        dt,
        mass_flux_lo,
        mass_flux_hi,
    })
}

/// One CFL-limited step, not past `t_stop`.
pub fn step(
    state: &mut FVState,
    section: &Section<'_>,
    grid: &Grid1D,
    config: &SolverConfig,
    t_stop: f64,
) -> Result<StepInfo> {
    let law = &section.solution().spec().law;
    let mut dt = stable_dt(state, law, grid, config.cfl)?;
    if state.t + dt > t_stop {
        dt = t_stop - state.t;
    }
    if !(dt > 1e-14 * (1.0 + t_stop.abs())) {
        return Err(FvError::DtUnderflow { t: state.t, dt });
    }
    step_with_dt(state, section, grid, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Errors {
    pub t: f64,
    pub rho: f64,
    pub u: f64,
    pub entropy: f64,
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 18.0),
    (0.0, 8.0 / 18.0),
    (0.774_596_669_241_483_4, 5.0 / 18.0),
];

/// `Σᵢ |qᵢ − q̄ᵢ|·dx` per field, where `q̄ᵢ` is the 3-point Gauss average of
/// the exact field over cell `i`.
pub fn compare_l1(state: &FVState, section: &Section<'_>, grid: &Grid1D) -> Result<L1Errors> {
    let dx = grid.dx();
    let mut points = Vec::with_capacity(3 * grid.n_cells);
    for i in 0..grid.n_cells as isize {
        let c = grid.center(i);
        points.extend(GAUSS3.iter().map(|(x, _)| c + 0.5 * dx * x));
    }
    let exact = section.states(state.t, &points)?;
    let mut e = L1Errors {
        t: state.t,
        rho: 0.0,
        u: 0.0,
        entropy: 0.0,
    };
    for i in 0..grid.n_cells {
        let cell = &exact[3 * i..3 * i + 3];
        let avg = |q: fn(&SectionState) -> f64| cell.iter().zip(&GAUSS3).map(|(s, (_, w))| w * q(s)).sum::<f64>();
        e.rho += (state.rho[i] - avg(|s| s.rho)).abs();
        e.u += (state.momentum[i] / state.rho[i] - avg(|s| s.velocity)).abs();
        e.entropy += (state.entropy[i] - avg(|s| s.entropy)).abs();
    }
    e.rho *= dx;
    e.u *= dx;
    e.entropy *= dx;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub state: FVState,
    pub errors: Vec<L1Errors>,
    pub steps: usize,
}

pub fn run(solution: &SolvedSolution, grid: &Grid1D, config: &SolverConfig) -> Result<RunResult> {
    config.validate()?;
    let section = Section::new(solution)?;
    let mut state = init_from_exact(&section, grid)?;
    check_cells(&state)?;
    let mut errors = vec![compare_l1(&state, &section, grid)?];
    let mut stops: Vec<f64> = config.output_times.clone();
    stops.push(config.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let mut steps = 0;
    for stop in stops {
        if stop <= state.t {
            continue;
        }
        while state.t < stop {
            if steps >= config.max_steps {
                return Err(FvError::InvalidConfig(format!(
                    "max_steps = {} reached at t = {}",
                    config.max_steps, state.t
                )));
            }
            step(&mut state, &section, grid, config, stop)?;
            steps += 1;
        }
        state.t = stop;
        errors.push(compare_l1(&state, &section, grid)?);
    }
    Ok(RunResult { state, errors, steps })
}

/// Independent runs on several grids, evaluated in parallel, results in input order.
pub fn refinement_study(solution: &SolvedSolution, grids: &[Grid1D], config: &SolverConfig) -> Result<Vec<RunResult>> {
    grids.par_iter().map(|g| run(solution, g, config)).collect()
}

/// Error series as CSV with columns `t,l1_rho,l1_u,l1_S`.
pub fn errors_csv(errors: &[L1Errors]) -> String {
    let mut out = String::from("t,l1_rho,l1_u,l1_S\n");
    for e in errors {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            e.t, e.rho, e.u, e.entropy
        ));
    }
    out
}
