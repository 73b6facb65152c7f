use serde::{Deserialize, Serialize};

use super::{ExactError, Result};
use crate::eos::PressureLaw;
use crate::numerics;
use crate::profiles::{Profile, SignRequirement};

/// The coupling constant δ of the potential force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Coupling {
    /// δ = −1
    Repulsive,
    /// δ = 0
    Euler,
    /// δ = +1
    Attractive,
}

impl Coupling {
    pub fn value(self) -> f64 {
        match self {
            Coupling::Repulsive => -1.0,
            Coupling::Euler => 0.0,
            Coupling::Attractive => 1.0,
        }
    }
}

impl TryFrom<i8> for Coupling {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Coupling::Repulsive),
            0 => Ok(Coupling::Euler),
            1 => Ok(Coupling::Attractive),
            other => Err(format!("delta must be -1, 0 or 1, got {other}")),
        }
    }
}

impl From<Coupling> for i8 {
    fn from(c: Coupling) -> i8 {
        c.value() as i8
    }
}

/// Serializable time functions for forces and gauges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `A·cos(ωt + φ)`
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// `Σₖ cₖ tᵏ`
    Polynomial {
        coefficients: Vec<f64>,
    },
}

impl TimeFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Zero => 0.0,
            TimeFunction::Constant { value } => *value,
            TimeFunction::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).cos(),
            TimeFunction::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            TimeFunction::Zero => true,
            TimeFunction::Constant { value } => *value == 0.0,
            TimeFunction::Sinusoid { amplitude, .. } => *amplitude == 0.0,
            TimeFunction::Polynomial { coefficients } => coefficients.iter().all(|&c| c == 0.0),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            TimeFunction::Zero => true,
            TimeFunction::Constant { value } => value.is_finite(),
            TimeFunction::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude.is_finite() && omega.is_finite() && phase.is_finite(),
            TimeFunction::Polynomial { coefficients } => coefficients.iter().all(|c| c.is_finite()),
        }
    }
}

/// Integration constant of the entropy profile: `g(z0) = g0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyAnchor {
    /// Defaults to the midpoint of `z_domain`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    pub g0: f64,
}

/// Everything that defines one line-solution family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSolutionSpec {
    pub dimension: usize,
    /// The line direction C; ΣCᵢ² > 0.
    pub coefficients: Vec<f64>,
    pub xi: f64,
    pub delta: Coupling,
    pub law: PressureLaw,
    /// Density f for delta = 0, potential shape for delta = ±1.
    pub profile: Profile,
    pub entropy_anchor: EntropyAnchor,
    /// Empty means all zero.
    #[serde(default)]
    pub forces: Vec<TimeFunction>,
    #[serde(default)]
    pub gauges: Vec<TimeFunction>,
    pub a0: Vec<f64>,
    pub a1: Vec<f64>,
    pub z_domain: [f64; 2],
}

impl LineSolutionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExactError::InvalidSpec(msg));
        let n = self.dimension;
        if n == 0 {
            return bad("dimension must be at least 1".into());
        }
        for (name, len) in [
            ("coefficients", self.coefficients.len()),
            ("a0", self.a0.len()),
            ("a1", self.a1.len()),
        ] {
            if len != n {
                return bad(format!("{name} has length {len}, expected {n}"));
            }
        }
        for (name, len) in [("forces", self.forces.len()), ("gauges", self.gauges.len())] {
            if len != 0 && len != n {
                return bad(format!("{name} has length {len}, expected 0 or {n}"));
            }
        }
        if self
            .coefficients
            .iter()
            .chain(&self.a0)
            .chain(&self.a1)
            .chain(std::iter::once(&self.xi))
            .any(|v| !v.is_finite())
        {
            return bad("coefficients, xi, a0 and a1 must be finite".into());
        }
        if !(self.coeff_norm_sq() > 0.0) {
            return bad("the line direction needs sum of C_i^2 > 0".into());
        }
        if !(self.entropy_anchor.g0 > 0.0) || !self.entropy_anchor.g0.is_finite() {
            return bad(format!(
                "g0 = {} violates the requirement g(z)>0 for the entropy profile",
                self.entropy_anchor.g0
            ));
        }
        let [lo, hi] = self.z_domain;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return bad(format!("z_domain [{lo}, {hi}] must be a bounded non-empty interval"));
        }
        let z0 = self.z0();
        if !(z0 >= lo && z0 <= hi) {
            return bad(format!("anchor z0 = {z0} lies outside z_domain [{lo}, {hi}]"));
        }
        if self.forces.iter().chain(&self.gauges).any(|f| !f.is_finite()) {
            return bad("time function parameters must be finite".into());
        }
        if self.delta == Coupling::Euler && self.gauges.iter().any(|d| !d.is_identically_zero()) {
            return bad("gauge functions must vanish identically when delta = 0".into());
        }
        self.profile.validate()?;
        if self.delta != Coupling::Euler && self.profile.max_order() < 3 {
            return bad("the Euler-Poisson momentum constraint needs the third derivative of the potential shape, which tabulated profiles do not provide".into());
        }
        Ok(())
    }

    pub fn z0(&self) -> f64 {
        self.entropy_anchor
            .z0
            .unwrap_or_else(|| 0.5 * (self.z_domain[0] + self.z_domain[1]))
    }

    pub fn coeff_norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    pub fn force(&self, i: usize, t: f64) -> f64 {
        self.forces.get(i).map_or(0.0, |f| f.eval(t))
    }

    pub fn gauge(&self, i: usize, t: f64) -> f64 {
        self.gauges.get(i).map_or(0.0, |d| d.eval(t))
    }

    /// Sign condition the profile must satisfy on `z_domain`.
    pub fn sign_requirement(&self) -> SignRequirement {
        match self.delta {
            Coupling::Euler if self.law.is_isothermal() => SignRequirement::PosF,
            Coupling::Euler => SignRequirement::NonnegF,
            _ => SignRequirement::NonnegD2,
        }
    }

    /// Run the profile sign check over `z_domain`.
    pub fn check_profile_sign(&self) -> Result<()> {
        let requirement = self.sign_requirement();
        let [lo, hi] = self.z_domain;
        let report = self.profile.check_sign(lo, hi, requirement);
        match report.first_violation {
            Some(z) => Err(ExactError::SignViolation { z, requirement }),
            None => Ok(()),
        }
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(ExactError::InvalidSpec(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }
}

/// Density and momentum-constraint forcing as functions of the phase.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    delta: f64,
    xi: f64,
    /// ΣCᵢ²/α(N); unused for delta = 0.
    kappa: f64,
    profile: Profile,
    law: PressureLaw,
}

impl DensityModel {
    pub fn new(spec: &LineSolutionSpec) -> Result<Self> {
        let kappa = spec.coeff_norm_sq() / numerics::alpha(spec.dimension)?;
        Ok(Self {
            delta: spec.delta.value(),
            xi: spec.xi,
            kappa,
            profile: spec.profile.clone(),
            law: spec.law.clone(),
        })
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn raw_density(&self, z: f64) -> Result<f64> {
        Ok(if self.delta == 0.0 {
            self.profile.eval(z, 0)?
        } else {
            self.kappa * self.profile.eval(z, 2)?
        })
    }

    pub fn density(&self, z: f64) -> Result<f64> {
        let rho = self.raw_density(z)?;
        if rho < 0.0 {
            return Err(ExactError::NegativeDensity { z, value: rho });
        }
        Ok(rho)
    }

    pub fn density_slope(&self, z: f64) -> Result<f64> {
        Ok(if self.delta == 0.0 {
            self.profile.eval(z, 1)?
        } else {
            self.kappa * self.profile.eval(z, 3)?
        })
    }

    /// `w(z) = ρ(ξ + δf′)`, so that `d/dz[g·P̃(ρ)] = −w`.
    pub fn forcing(&self, z: f64) -> Result<f64> {
        let rho = self.density(z)?;
        let shift = if self.delta == 0.0 {
            0.0
        } else {
            self.delta * self.profile.eval(z, 1)?
        };
        Ok(rho * (self.xi + shift))
    }

    pub fn forcing_slope(&self, z: f64) -> Result<f64> {
        let rho = self.density(z)?;
        let drho = self.density_slope(z)?;
        if self.delta == 0.0 {
            Ok(drho * self.xi)
        } else {
            let f1 = self.profile.eval(z, 1)?;
            let f2 = self.profile.eval(z, 2)?;
            Ok(drho * (self.xi + self.delta * f1) + rho * self.delta * f2)
        }
    }
}
