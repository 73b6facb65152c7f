//! The translation a(t) of the line solution.
//!
//! Undamped, the trajectory obeys `äᵢ = hᵢ(t) + Cᵢξ` with `hᵢ = Fᵢ − δdᵢ`
//! and has the closed form
//! `aᵢ(t) = a0ᵢ + a1ᵢt + Cᵢξt²/2 + ∫₀ᵗ (t − s) hᵢ(s) ds`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use super::spec::{LineSolutionSpec, TimeFunction};
use super::{ExactError, Result};
use crate::numerics::{self, adaptive_simpson, hermite3, hermite5, Jet2};

pub const DEFAULT_TRAJECTORY_STEP: f64 = 1e-3;

const QUADRATURE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMethod {
    ClosedFormQuadrature,
    OdeRk4,
}

/// One term `β|ȧ|^{p−1}ȧ` of the damping, with `|ȧ|` the Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingTerm {
    pub beta: f64,
    pub p: f64,
}

impl DampingTerm {
    fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() || !(self.p >= 0.0) || !self.p.is_finite() {
            return Err(ExactError::InvalidSpec(format!(
                "damping term needs beta >= 0 and p >= 0, got beta = {}, p = {}",
                self.beta, self.p
            )));
        }
        Ok(())
    }

    fn is_active(&self) -> bool {
        self.beta != 0.0
    }
}

/// Position, velocity and acceleration at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Drive {
    coefficients: Vec<f64>,
    xi: f64,
    delta: f64,
    forces: Vec<TimeFunction>,
    gauges: Vec<TimeFunction>,
    a0: Vec<f64>,
    a1: Vec<f64>,
}

impl Drive {
    fn new(spec: &LineSolutionSpec) -> Self {
        Self {
            coefficients: spec.coefficients.clone(),
            xi: spec.xi,
            delta: spec.delta.value(),
            forces: spec.forces.clone(),
            gauges: spec.gauges.clone(),
            a0: spec.a0.clone(),
            a1: spec.a1.clone(),
        }
    }

    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn is_quiet(&self, i: usize) -> bool {
        let zero = |v: &Vec<TimeFunction>| v.get(i).is_none_or(|f| f.is_identically_zero());
        zero(&self.forces) && (self.delta == 0.0 || zero(&self.gauges))
    }

    /// `hᵢ(t) = Fᵢ(t) − δdᵢ(t)`.
    fn h(&self, i: usize, t: f64) -> f64 {
        let f = self.forces.get(i).map_or(0.0, |f| f.eval(t));
        let d = self.gauges.get(i).map_or(0.0, |d| d.eval(t));
        f - self.delta * d
    }

    fn drift(&self, i: usize) -> f64 {
        self.coefficients[i] * self.xi
    }
}

fn finite_quadrature<F: Fn(f64) -> f64>(f: F, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(adaptive_simpson(f, 0.0, t, QUADRATURE_TOL)?.value)
}

#[derive(Debug, Clone, PartialEq)]
struct DampedTable {
    t_lo: f64,
    dt: f64,
    /// Per node: position, velocity, acceleration.
    nodes: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    method: TrajectoryMethod,
    drive: Drive,
    damping: Vec<DampingTerm>,
    table: Option<DampedTable>,
}

/// Undamped trajectory by quadrature; valid for every t.
pub fn solve_trajectory(spec: &LineSolutionSpec) -> Result<Trajectory> {
    spec.validate()?;
    Ok(Trajectory {
        method: TrajectoryMethod::ClosedFormQuadrature,
        drive: Drive::new(spec),
        damping: Vec::new(),
        table: None,
    })
}

fn damping_accel(damping: &[DampingTerm], velocity: &[f64], out: &mut [f64]) -> std::result::Result<(), f64> {
    let speed = velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.iter_mut().for_each(|o| *o = 0.0);
    for term in damping.iter().filter(|d| d.is_active()) {
        if speed == 0.0 {
            if term.p < 1.0 {
                return Err(term.p);
            }
            continue;
        }
        let scale = term.beta * speed.powf(term.p - 1.0);
        for (o, v) in out.iter_mut().zip(velocity) {
            *o += scale * v;
        }
    }
    Ok(())
}

/// Damped trajectory `äᵢ + Σβ|ȧ|^{p−1}ȧᵢ = hᵢ + Cᵢξ` by RK4 with steps of at
/// most `step`, on `horizon = (t_lo, t_hi)` containing 0.
pub fn solve_trajectory_damped(
    spec: &LineSolutionSpec,
    damping: &[DampingTerm],
    step: f64,
    horizon: (f64, f64),
) -> Result<Trajectory> {
    spec.validate()?;
    for d in damping {
        d.validate()?;
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(numerics::NumericsError::BadStep(step).into());
    }
    let (t_lo, t_hi) = horizon;
    if !(t_lo <= 0.0 && t_hi >= 0.0 && t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(ExactError::InvalidSpec(format!(
            "damping horizon [{t_lo}, {t_hi}] must be bounded and contain t = 0"
        )));
    }
    let drive = Drive::new(spec);
    let n = drive.dim();
    let mut scratch = vec![0.0; n];
    if let Err(p) = damping_accel(damping, &drive.a1, &mut scratch) {
        return Err(ExactError::SingularDamping { exponent: p, t: 0.0 });
    }

    // uniform grid through 0, shared by the forward and backward sweeps
    let dt = step;
    let count = |span: f64| (span / dt - 1e-9).ceil().max(0.0) as usize;
    let n_back = count(-t_lo);
    let n_fwd = count(t_hi).max(1);
    let t_lo = -(n_back as f64) * dt;

    let failure = Cell::new(None);
    let accel = |t: f64, v: &[f64], out: &mut [f64]| {
        let mut damp = vec![0.0; n];
        if let Err(p) = damping_accel(damping, v, &mut damp) {
            failure.set(Some(ExactError::SingularDamping { exponent: p, t }));
        }
        for i in 0..n {
            out[i] = drive.h(i, t) + drive.drift(i) - damp[i];
        }
    };
    let field = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[..n].copy_from_slice(&y[n..]);
        accel(t, &y[n..], &mut dy[n..]);
    };
    let mut y0 = drive.a0.clone();
    y0.extend_from_slice(&drive.a1);
    let mut rk = numerics::Rk4::new(field, 2 * n);

    let node = |t: f64, y: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; n];
        accel(t, &y[n..], &mut a);
        (y[..n].to_vec(), y[n..].to_vec(), a)
    };
    let mut nodes = Vec::with_capacity(n_back + n_fwd + 1);
    let mut y = y0.clone();
    let mut backward = vec![node(0.0, &y)];
    for s in 0..n_back {
        let t = -(s as f64) * dt;
        rk.step(t, &mut y, -dt);
        check_state(&y, t - dt, &failure)?;
        backward.push(node(t - dt, &y));
    }
    nodes.extend(backward.into_iter().rev());
    let mut y = y0;
    for s in 0..n_fwd {
        let t = s as f64 * dt;
        rk.step(t, &mut y, dt);
        check_state(&y, t + dt, &failure)?;
        nodes.push(node(t + dt, &y));
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(Trajectory {
        method: TrajectoryMethod::OdeRk4,
        drive,
        damping: damping.to_vec(),
        table: Some(DampedTable { t_lo, dt, nodes }),
    })
}

fn check_state(y: &[f64], t: f64, failure: &Cell<Option<ExactError>>) -> Result<()> {
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(numerics::NumericsError::NonFiniteState {
            t,
            last_t: t,
            last_state: y.to_vec(),
        }
        .into());
    }
    Ok(())
}

impl Trajectory {
    pub fn method(&self) -> TrajectoryMethod {
        self.method
    }

    pub fn damping(&self) -> &[DampingTerm] {
        &self.damping
    }

    pub fn dimension(&self) -> usize {
        self.drive.dim()
    }

    /// Integrated time window; unbounded for the closed form.
    pub fn window(&self) -> (f64, f64) {
        match &self.table {
            Some(t) => (t.t_lo, t.t_lo + (t.nodes.len() - 1) as f64 * t.dt),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.kinematics(t)?.position)
    }

    pub fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.kinematics(t)?.velocity)
    }

    pub fn acceleration(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.kinematics(t)?.acceleration)
    }

    pub fn kinematics(&self, t: f64) -> Result<Kinematics> {
        match &self.table {
            None => self.closed_form(t),
            Some(table) => self.interpolate(table, t),
        }
    }

    fn closed_form(&self, t: f64) -> Result<Kinematics> {
        if !t.is_finite() {
            return Err(ExactError::OutOfTimeWindow {
                t,
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            });
        }
        let d = &self.drive;
        let n = d.dim();
        let mut k = Kinematics {
            position: Vec::with_capacity(n),
            velocity: Vec::with_capacity(n),
            acceleration: Vec::with_capacity(n),
        };
        for i in 0..n {
            let c = d.drift(i);
            let (mut a, mut v) = (d.a0[i] + d.a1[i] * t + 0.5 * c * t * t, d.a1[i] + c * t);
            if !d.is_quiet(i) {
                a += finite_quadrature(|s| (t - s) * d.h(i, s), t)?;
                v += finite_quadrature(|s| d.h(i, s), t)?;
            }
            k.position.push(a);
            k.velocity.push(v);
            k.acceleration.push(c + d.h(i, t));
        }
        Ok(k)
    }

    fn interpolate(&self, table: &DampedTable, t: f64) -> Result<Kinematics> {
        let (lo, hi) = self.window();
        if !(t >= lo && t <= hi) {
            return Err(ExactError::OutOfTimeWindow { t, lo, hi });
        }
        let last = table.nodes.len() - 1;
        let j = (((t - lo) / table.dt).floor().max(0.0) as usize).min(last - 1);
        let s = t - (lo + j as f64 * table.dt);
        let (a0, v0, acc0) = &table.nodes[j];
        let (a1, v1, acc1) = &table.nodes[j + 1];
        let n = self.drive.dim();
        let mut position = Vec::with_capacity(n);
        let mut velocity = Vec::with_capacity(n);
        for i in 0..n {
            let (v, _) = hermite3(v0[i], acc0[i], v1[i], acc1[i], table.dt, s);
            let left = Jet2 {
                value: a0[i],
                d1: v0[i],
                d2: acc0[i],
            };
            let right = Jet2 {
                value: a1[i],
                d1: v1[i],
                d2: acc1[i],
            };
            position.push(hermite5(left, right, table.dt, s).0);
            velocity.push(v);
        }
        let mut damp = vec![0.0; n];
        if let Err(p) = damping_accel(&self.damping, &velocity, &mut damp) {
            return Err(ExactError::SingularDamping { exponent: p, t });
        }
        let acceleration = (0..n)
            .map(|i| self.drive.h(i, t) + self.drive.drift(i) - damp[i])
            .collect();
        Ok(Kinematics {
            position,
            velocity,
            acceleration,
        })
    }
}
