//! Entropy profile g(z) from the momentum constraint.
//!
//! Both solvers produce the product `Q(z) = g(z)·P̃(ρ(z))` on a uniform node
//! grid. `Q′ = −ρ(ξ + δf′)` and `Q″` are known in closed form at every node,
//! so the stored nodes carry exact slopes and curvatures and the profile is
//! interpolated by quintic Hermite segments.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use super::spec::{DensityModel, LineSolutionSpec};
use super::{ExactError, Result};
use crate::numerics::{self, hermite5, Jet2, Rk4};

pub const DEFAULT_ENTROPY_NODES: usize = 4097;
pub const DEFAULT_ODE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    /// Quadrature of the exact first integral.
    FirstIntegral,
    /// RK4 on the constraint ODE for g.
    OdeRk4,
}

/// Sub-interval around the anchor where g > 0. An end is open when g
/// crosses zero there and closed when it is the end of `z_domain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityDomain {
    pub lo: f64,
    pub hi: f64,
    pub lo_crossing: bool,
    pub hi_crossing: bool,
}

impl PositivityDomain {
    pub fn contains(&self, z: f64) -> bool {
        let above = if self.lo_crossing { z > self.lo } else { z >= self.lo };
        let below = if self.hi_crossing { z < self.hi } else { z <= self.hi };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct EntropyProfile {
    method: EntropyMethod,
    model: DensityModel,
    z_min: f64,
    z_max: f64,
    spacing: f64,
    n_nodes: usize,
    /// Index of `nodes[0]` on the full grid.
    first: usize,
    nodes: Vec<Jet2>,
    positivity: PositivityDomain,
    anchor: (f64, f64),
}

struct Grid {
    z_min: f64,
    z_max: f64,
    spacing: f64,
    n: usize,
}

impl Grid {
    fn new(spec: &LineSolutionSpec, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ExactError::InvalidSpec(format!(
                "entropy grid needs at least 2 nodes, got {n}"
            )));
        }
        let [z_min, z_max] = spec.z_domain;
        Ok(Self {
            z_min,
            z_max,
            spacing: (z_max - z_min) / (n - 1) as f64,
            n,
        })
    }

    fn z(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.z_max
        } else {
            self.z_min + k as f64 * self.spacing
        }
    }

    /// Largest node index whose coordinate does not exceed `z`.
    fn floor_index(&self, z: f64) -> usize {
        let mut j = (((z - self.z_min) / self.spacing).floor().max(0.0) as usize).min(self.n - 1);
        while j > 0 && self.z(j) > z {
            j -= 1;
        }
        while j + 1 < self.n && self.z(j + 1) <= z {
            j += 1;
        }
        j
    }
}

fn node_jet(model: &DensityModel, z: f64, q: f64) -> Result<Jet2> {
    Ok(Jet2 {
        value: q,
        d1: -model.forcing(z)?,
        d2: -model.forcing_slope(z)?,
    })
}

fn positive_pressure(model: &DensityModel, z: f64) -> Result<f64> {
    let rho = model.density(z)?;
    let p = model.law().pressure_tilde(rho)?;
    if p > 0.0 {
        Ok(p)
    } else {
        Err(ExactError::Vacuum { z })
    }
}

/// `∫_a^b ρ(ξ + δf′) dz`.
fn forcing_integral(model: &DensityModel, a: f64, b: f64, tol: f64) -> Result<f64> {
    let failure = Cell::new(None);
    let integrand = |z: f64| match model.forcing(z) {
        Ok(w) => w,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let r = numerics::adaptive_simpson(integrand, a, b, tol)?;
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

/// Solve for g with the chosen method on `nodes` grid points.
pub fn solve_entropy(
    spec: &LineSolutionSpec,
    method: EntropyMethod,
    nodes: usize,
    ode_step: f64,
) -> Result<EntropyProfile> {
    match method {
        EntropyMethod::FirstIntegral => first_integral_with(spec, nodes),
        EntropyMethod::OdeRk4 => ode_with(spec, nodes, ode_step),
    }
}

/// `g(z) = [g0·P̃(ρ(z0)) − ∫_{z0}^{z} ρ(ξ + δf′)] / P̃(ρ(z))` on the default grid.
pub fn solve_entropy_first_integral(spec: &LineSolutionSpec) -> Result<EntropyProfile> {
    first_integral_with(spec, DEFAULT_ENTROPY_NODES)
}

/// RK4 on `g′ = −[ρ(ξ + δf′) + g·P̃′(ρ)ρ′] / P̃(ρ)` outward from the anchor.
pub fn solve_entropy_ode(spec: &LineSolutionSpec, step: f64) -> Result<EntropyProfile> {
    ode_with(spec, DEFAULT_ENTROPY_NODES, step)
}

fn first_integral_with(spec: &LineSolutionSpec, n: usize) -> Result<EntropyProfile> {
    spec.validate()?;
    let model = DensityModel::new(spec)?;
    let grid = Grid::new(spec, n)?;
    let z0 = spec.z0();
    let g0 = spec.entropy_anchor.g0;
    for k in 0..n {
        positive_pressure(&model, grid.z(k))?;
    }
    let q0 = g0 * positive_pressure(&model, z0)?;
    let tol = 1e-15 * (1.0 + q0.abs());

    let j = grid.floor_index(z0);
    let mut integral = vec![0.0; n];
    integral[j] = forcing_integral(&model, z0, grid.z(j), tol)?;
    for k in (0..j).rev() {
        integral[k] = integral[k + 1] + forcing_integral(&model, grid.z(k + 1), grid.z(k), tol)?;
    }
    if j + 1 < n {
        integral[j + 1] = forcing_integral(&model, z0, grid.z(j + 1), tol)?;
        for k in j + 2..n {
            integral[k] = integral[k - 1] + forcing_integral(&model, grid.z(k - 1), grid.z(k), tol)?;
        }
    }
    let nodes = (0..n)
        .map(|k| node_jet(&model, grid.z(k), q0 - integral[k]))
        .collect::<Result<Vec<_>>>()?;
    EntropyProfile::assemble(EntropyMethod::FirstIntegral, model, &grid, 0, nodes, (z0, g0))
}

fn ode_with(spec: &LineSolutionSpec, n: usize, step: f64) -> Result<EntropyProfile> {
    spec.validate()?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(numerics::NumericsError::BadStep(step).into());
    }
    let model = DensityModel::new(spec)?;
    let grid = Grid::new(spec, n)?;
    let z0 = spec.z0();
    let g0 = spec.entropy_anchor.g0;
    for k in 0..n {
        let z = grid.z(k);
        let rho = model.density(z)?;
        if !(rho > 0.0) {
            return Err(ExactError::SingularCoefficient { z, rho });
        }
    }

    let failure: Cell<Option<ExactError>> = Cell::new(None);
    let law = model.law().clone();
    let field = |z: f64, g: &[f64], dg: &mut [f64]| {
        let eval = || -> Result<f64> {
            let rho = model.density(z)?;
            if !(rho > 0.0) {
                return Err(ExactError::SingularCoefficient { z, rho });
            }
            let p = law.pressure_tilde(rho)?;
            let dp = law.pressure_tilde_slope(rho)?;
            Ok(-(model.forcing(z)? + g[0] * dp * model.density_slope(z)?) / p)
        };
        dg[0] = match eval() {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        };
    };
    let mut rk = Rk4::new(field, 1);
    let segment = |from: f64, to: f64, g: f64, rk: &mut Rk4<_>| -> Result<f64> {
        let mut y = [g];
        if from != to {
            rk.advance(from, to, numerics::steps_for(to - from, step), &mut y);
        }
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(y[0])
    };

    let j = grid.floor_index(z0);
    let mut values: Vec<Option<f64>> = vec![None; n];
    // leftwards from the anchor, stopping after the first non-positive node
    let mut g = segment(z0, grid.z(j), g0, &mut rk)?;
    values[j] = Some(g);
    let mut k = j;
    while g > 0.0 && k > 0 {
        g = segment(grid.z(k), grid.z(k - 1), g, &mut rk)?;
        k -= 1;
        values[k] = Some(g);
    }
    let first = k;
    if j + 1 < n {
        let mut g = segment(z0, grid.z(j + 1), g0, &mut rk)?;
        values[j + 1] = Some(g);
        let mut k = j + 1;
        while g > 0.0 && k + 1 < n {
            g = segment(grid.z(k), grid.z(k + 1), g, &mut rk)?;
            k += 1;
            values[k] = Some(g);
        }
    }
    let nodes = values
        .iter()
        .enumerate()
        .skip(first)
        .map_while(|(k, v)| v.map(|g| (k, g)))
        .map(|(k, g)| {
            let z = grid.z(k);
            let p = law.pressure_tilde(model.density(z)?)?;
            node_jet(&model, z, g * p)
        })
        .collect::<Result<Vec<_>>>()?;
    EntropyProfile::assemble(EntropyMethod::OdeRk4, model, &grid, first, nodes, (z0, g0))
}

impl EntropyProfile {
    fn assemble(
        method: EntropyMethod,
        model: DensityModel,
        grid: &Grid,
        first: usize,
        nodes: Vec<Jet2>,
        anchor: (f64, f64),
    ) -> Result<Self> {
        let placeholder = PositivityDomain {
            lo: grid.z(first),
            hi: grid.z(first + nodes.len() - 1),
            lo_crossing: false,
            hi_crossing: false,
        };
        let mut profile = Self {
            method,
            model,
            z_min: grid.z_min,
            z_max: grid.z_max,
            spacing: grid.spacing,
            n_nodes: grid.n,
            first,
            nodes,
            positivity: placeholder,
            anchor,
        };
        profile.positivity = profile.find_positivity(grid)?;
        Ok(profile)
    }

    fn last(&self) -> usize {
        self.first + self.nodes.len() - 1
    }

    fn node_z(&self, k: usize) -> f64 {
        if k + 1 == self.n_nodes {
            self.z_max
        } else {
            self.z_min + k as f64 * self.spacing
        }
    }

    fn q_at_node(&self, k: usize) -> f64 {
        self.nodes[k - self.first].value
    }

    fn find_positivity(&self, grid: &Grid) -> Result<PositivityDomain> {
        let z0 = self.anchor.0;
        let j = grid.floor_index(z0);
        let mut domain = PositivityDomain {
            lo: self.node_z(self.first),
            hi: self.node_z(self.last()),
            lo_crossing: false,
            hi_crossing: false,
        };
        for k in j + 1..=self.last() {
            if self.q_at_node(k) <= 0.0 {
                let a = self.node_z(k - 1).max(z0);
                domain.hi = self.bisect(a, self.node_z(k))?;
                domain.hi_crossing = true;
                break;
            }
        }
        for k in (self.first..=j).rev() {
            let zk = self.node_z(k);
            if zk < z0 && self.q_at_node(k) <= 0.0 {
                let b = if k < j { self.node_z(k + 1) } else { z0 };
                domain.lo = self.bisect(zk, b)?;
                domain.lo_crossing = true;
                break;
            }
        }
        Ok(domain)
    }

    /// Root of the interpolated Q on `[a, b]` with Q(a) and Q(b) of opposite sign.
    fn bisect(&self, mut a: f64, mut b: f64) -> Result<f64> {
        let mut qa = self.interpolate(a)?.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let qm = self.interpolate(m)?.0;
            if (qm > 0.0) == (qa > 0.0) {
                a = m;
                qa = qm;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Interpolated `(Q, Q′)` for z inside the computed node range.
    fn interpolate(&self, z: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.node_z(self.first), self.node_z(self.last()));
        if !(z >= lo && z <= hi) {
            return Err(ExactError::OutOfDomain { z, lo, hi });
        }
        if self.nodes.len() == 1 {
            let n = self.nodes[0];
            return Ok((n.value, n.d1));
        }
        let k = (((z - self.z_min) / self.spacing).floor().max(0.0) as usize).clamp(self.first, self.last() - 1);
        let zk = self.node_z(k);
        let h = self.node_z(k + 1) - zk;
        Ok(hermite5(
            self.nodes[k - self.first],
            self.nodes[k + 1 - self.first],
            h,
            z - zk,
        ))
    }

    pub fn method(&self) -> EntropyMethod {
        self.method
    }

    pub fn positivity(&self) -> PositivityDomain {
        self.positivity
    }

    /// `(z0, g0)`.
    pub fn anchor(&self) -> (f64, f64) {
        self.anchor
    }

    pub fn z_domain(&self) -> (f64, f64) {
        (self.z_min, self.z_max)
    }

    /// `(Q, Q′)` with `Q = g·P̃(ρ)`, the pressure as a function of phase.
    pub fn pressure_product(&self, z: f64) -> Result<(f64, f64)> {
        self.check_domain(z)?;
        self.interpolate(z)
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        if self.positivity.contains(z) {
            Ok(())
        } else {
            Err(ExactError::OutOfDomain {
                z,
                lo: self.positivity.lo,
                hi: self.positivity.hi,
            })
        }
    }

    pub fn g(&self, z: f64) -> Result<f64> {
        Ok(self.g_and_slope(z)?.0)
    }

    /// `(g, g′)` at z inside the positivity domain.
    pub fn g_and_slope(&self, z: f64) -> Result<(f64, f64)> {
        let (q, dq) = self.pressure_product(z)?;
        let rho = self.model.density(z)?;
        let law = self.model.law();
        let p = law.pressure_tilde(rho)?;
        if !(p > 0.0) {
            return Err(ExactError::Vacuum { z });
        }
        let g = q / p;
        let dg = (dq - g * law.pressure_tilde_slope(rho)? * self.model.density_slope(z)?) / p;
        Ok((g, dg))
    }

    /// Node coordinates and g values inside the positivity domain.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        (self.first..=self.last())
            .map(|k| self.node_z(k))
            .filter(|&z| self.positivity.contains(z))
            .filter_map(|z| self.g(z).ok().map(|g| (z, g)))
            .collect()
    }

    /// Full-grid node coordinates `z_k`, whether or not they were computed.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|k| self.node_z(k)).collect()
    }
}
