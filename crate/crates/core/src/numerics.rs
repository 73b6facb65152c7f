//! Shared numerical kernels.
//!
//! Half-integer Gamma values for the Poisson constant, adaptive Simpson
//! quadrature, a fixed-step classical Runge-Kutta integrator, central
//! difference stencils and Hermite interpolation on uniform node sets.

use std::f64::consts::PI;

use thiserror::Error;

/// Subdivision depth at which adaptive Simpson gives up.
pub const MAX_SIMPSON_DEPTH: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("gamma function is only provided for positive half-integers, got {0}")]
    GammaDomain(f64),
    #[error("space dimension must be at least 1")]
    ZeroDimension,
    #[error("quadrature tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("integrand is not finite at z = {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("adaptive quadrature did not converge within {MAX_SIMPSON_DEPTH} levels (best estimate {best}, error estimate {error_estimate})")]
    QuadratureNonConvergence { best: f64, error_estimate: f64 },
    #[error("integration step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("non-finite state at t = {t}; last finite state {last_state:?} at t = {last_t}")]
    NonFiniteState { t: f64, last_t: f64, last_state: Vec<f64> },
}

/// Γ(x) for x a positive multiple of 1/2, by the exact recurrence
/// Γ(x+1) = xΓ(x) from Γ(1) = 1 or Γ(1/2) = √π.
pub fn gamma_half(x: f64) -> Result<f64, NumericsError> {
    let twice = 2.0 * x;
    if !(x > 0.0) || !x.is_finite() || (twice - twice.round()).abs() > 1e-12 * twice.max(1.0) {
        return Err(NumericsError::GammaDomain(x));
    }
    let k = twice.round() as u64;
    let (mut value, mut arg) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = k as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    Ok(value)
}

/// The constant α(N) of the Poisson equation ΔΦ = α(N)ρ.
///
/// α(1) = 2, α(2) = 2π and α(N) = N(N−2)·π^{N/2}/Γ(N/2+1) for N ≥ 3.
pub fn alpha(dim: usize) -> Result<f64, NumericsError> {
    match dim {
        0 => Err(NumericsError::ZeroDimension),
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        n => {
            let nf = n as f64;
            Ok(nf * (nf - 2.0) * PI.powf(nf / 2.0) / gamma_half(nf / 2.0 + 1.0)?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct SimpsonState<'f, F> {
    f: &'f F,
    evaluations: usize,
    error: f64,
    converged: bool,
    bad_point: Option<f64>,
}

impl<F: Fn(f64) -> f64> SimpsonState<'_, F> {
    fn eval(&mut self, z: f64) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(z);
        if !v.is_finite() && self.bad_point.is_none() {
            self.bad_point = Some(z);
        }
        v
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        if self.bad_point.is_some() {
            return f64::NAN;
        }
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let halves = left + right;
        let diff = halves - whole;
        let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        let interval_exhausted = m <= a || m >= b || lm <= a || rm >= b;
        if diff.abs() <= 15.0 * tol || diff.abs() <= roundoff || interval_exhausted {
            self.error += diff.abs() / 15.0;
            return halves + diff / 15.0;
        }
        if depth >= MAX_SIMPSON_DEPTH {
            self.converged = false;
            self.error += diff.abs() / 15.0;
            return halves + diff / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `a > b` integrates with the sign flipped. Levels stop refining once the
/// Richardson difference drops to the roundoff floor of the panel.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(NumericsError::BadTolerance(tol));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut state = SimpsonState {
        f: &f,
        evaluations: 0,
        error: 0.0,
        converged: true,
        bad_point: None,
    };
    let fa = state.eval(lo);
    let fb = state.eval(hi);
    let fm = state.eval(0.5 * (lo + hi));
    if let Some(at) = state.bad_point {
        return Err(NumericsError::NonFiniteIntegrand { at });
    }
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    let value = state.refine(lo, hi, fa, fm, fb, whole, tol, 0);
    if let Some(at) = state.bad_point {
        return Err(NumericsError::NonFiniteIntegrand { at });
    }
    if !state.converged {
        return Err(NumericsError::QuadratureNonConvergence {
            best: sign * value,
            error_estimate: state.error,
        });
    }
    Ok(QuadratureResult {
        value: sign * value,
        error_estimate: state.error,
        evaluations: state.evaluations,
    })
}

/// Samples produced by [`rk4_solve`]: one time and one state per accepted step,
/// both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct OdePath {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl OdePath {
    pub fn last(&self) -> (f64, &[f64]) {
        let n = self.t.len() - 1;
        (self.t[n], &self.y[n])
    }
}

/// Classical fourth-order Runge-Kutta stepper for `y' = f(t, y)`.
///
/// The vector field writes its result into the output slice.
pub struct Rk4<F> {
    field: F,
    k: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl<F> Rk4<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(field: F, dim: usize) -> Self {
        Self {
            field,
            k: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
            scratch: vec![0.0; dim],
        }
    }

    /// Advance `y` in place from `t` to `t + dt`.
    pub fn step(&mut self, t: f64, y: &mut [f64], dt: f64) {
        let n = y.len();
        let [k1, k2, k3, k4] = &mut self.k;
        (self.field)(t, y, k1);
        for i in 0..n {
            self.scratch[i] = y[i] + 0.5 * dt * k1[i];
        }
        (self.field)(t + 0.5 * dt, &self.scratch, k2);
        for i in 0..n {
            self.scratch[i] = y[i] + 0.5 * dt * k2[i];
        }
        (self.field)(t + 0.5 * dt, &self.scratch, k3);
        for i in 0..n {
            self.scratch[i] = y[i] + dt * k3[i];
        }
        (self.field)(t + dt, &self.scratch, k4);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Advance from `t0` to `t1` in `n` equal steps.
    pub fn advance(&mut self, t0: f64, t1: f64, n: usize, y: &mut [f64]) {
        let dt = (t1 - t0) / n as f64;
        for s in 0..n {
            self.step(t0 + s as f64 * dt, y, dt);
        }
    }
}

/// Number of equal steps no longer than `step` covering `span`.
pub fn steps_for(span: f64, step: f64) -> usize {
    let n = (span.abs() / step).ceil();
    // a span that is an exact multiple of the step must not pick up an extra step from roundoff
    let n = if n > 1.0 && ((n - 1.0) * step - span.abs()).abs() <= 1e-9 * step {
        n - 1.0
    } else {
        n
    };
    (n as usize).max(1)
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` with steps of at most `step`.
///
/// The step is shrunk uniformly so the final sample lands on `t1`; `t1 < t0`
/// integrates backwards.
pub fn rk4_solve<F>(field: F, y0: &[f64], t0: f64, t1: f64, step: f64) -> Result<OdePath, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(NumericsError::BadStep(step));
    }
    let mut path = OdePath {
        t: vec![t0],
        y: vec![y0.to_vec()],
    };
    if t0 == t1 {
        return Ok(path);
    }
    let n = steps_for(t1 - t0, step);
    let dt = (t1 - t0) / n as f64;
    let mut rk = Rk4::new(field, y0.len());
    let mut y = y0.to_vec();
    for s in 0..n {
        let t = t0 + s as f64 * dt;
        rk.step(t, &mut y, dt);
        let t_next = if s + 1 == n { t1 } else { t0 + (s + 1) as f64 * dt };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteState {
                t: t_next,
                last_t: t,
                last_state: path.y.last().cloned().unwrap_or_default(),
            });
        }
        path.t.push(t_next);
        path.y.push(y.clone());
    }
    Ok(path)
}

/// Which derivative a central stencil approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    First,
    Second,
}

/// `(f(x+h) − f(x−h)) / 2h`.
#[inline]
pub fn first_difference(minus: f64, plus: f64, h: f64) -> f64 {
    (plus - minus) / (2.0 * h)
}

/// `(f(x+h) − 2f(x) + f(x−h)) / h²`.
#[inline]
pub fn second_difference(minus: f64, center: f64, plus: f64, h: f64) -> f64 {
    (plus - 2.0 * center + minus) / (h * h)
}

/// Central difference approximation of f′(x) or f″(x), both O(h²).
pub fn central_diff<F>(f: F, x: f64, h: f64, order: DiffOrder) -> f64
where
    F: Fn(f64) -> f64,
{
    match order {
        DiffOrder::First => first_difference(f(x - h), f(x + h), h),
        DiffOrder::Second => second_difference(f(x - h), f(x), f(x + h), h),
    }
}

/// Fallible variant of [`central_diff`] for functions that can reject a point.
pub fn try_central_diff<F, E>(f: F, x: f64, h: f64, order: DiffOrder) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    Ok(match order {
        DiffOrder::First => first_difference(f(x - h)?, f(x + h)?, h),
        DiffOrder::Second => second_difference(f(x - h)?, f(x)?, f(x + h)?, h),
    })
}

/// Value and first derivative of the cubic Hermite interpolant on `[0, h]`
/// through `(y0, d0)` and `(y1, d1)`, at local coordinate `s ∈ [0, h]`.
pub fn hermite3(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> (f64, f64) {
    let u = s / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    let value = y0 + h01 * (y1 - y0) + h10 * h * d0 + h11 * h * d1;
    let dh10 = 3.0 * u2 - 4.0 * u + 1.0;
    let dh01 = -6.0 * u2 + 6.0 * u;
    let dh11 = 3.0 * u2 - 2.0 * u;
    let slope = dh01 * (y1 - y0) / h + dh10 * d0 + dh11 * d1;
    (value, slope)
}

/// Node data for quintic Hermite interpolation: value, first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Value and first derivative of the quintic Hermite interpolant on `[0, h]`
/// matching value, slope and curvature at both ends.
pub fn hermite5(left: Jet2, right: Jet2, h: f64, s: f64) -> (f64, f64) {
    let t = s / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let (p0, v0, a0) = (left.value, left.d1 * h, left.d2 * h * h);
    let (p1, v1, a1) = (right.value, right.d1 * h, right.d2 * h * h);
    let b1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let b2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let b3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let b4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let b5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let value = p0 + b5 * (p1 - p0) + b1 * v0 + b2 * a0 + b3 * a1 + b4 * v1;
    let db1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let db2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let db3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let db4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let db5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let slope = (db5 * (p1 - p0) + db1 * v0 + db2 * a0 + db3 * a1 + db4 * v1) / h;
    (value, slope)
}
