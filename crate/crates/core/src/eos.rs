//! Multiple γ-law equation of state, `P(ρ, S) = e^S Σⱼ λⱼ ρ^{γⱼ}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EosError {
    #[error("pressure law needs at least one exponent")]
    Empty,
    #[error("exponents must satisfy gamma >= 1, got {0}")]
    GammaBelowOne(f64),
    #[error("exponents must be strictly increasing ({prev} followed by {next})")]
    NotIncreasing { prev: f64, next: f64 },
    #[error("{gammas} exponents but {weights} weights")]
    LengthMismatch { gammas: usize, weights: usize },
    #[error("weights must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("density must be nonnegative, got {0}")]
    NegativeDensity(f64),
    #[error("sound speed needs a strictly positive density, got {0}")]
    NonPositiveDensity(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawLaw {
    gammas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

/// Exponents γ₁ < … < γ_m (each ≥ 1) with positive weights λⱼ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw", into = "RawLaw")]
pub struct PressureLaw {
    gammas: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawLaw> for PressureLaw {
    type Error = EosError;

    fn try_from(raw: RawLaw) -> Result<Self, EosError> {
        match raw.weights {
            Some(w) => PressureLaw::weighted(raw.gammas, w),
            None => PressureLaw::new(raw.gammas),
        }
    }
}

impl From<PressureLaw> for RawLaw {
    fn from(law: PressureLaw) -> Self {
        RawLaw {
            gammas: law.gammas,
            weights: Some(law.weights),
        }
    }
}

#[inline]
fn power(rho: f64, gamma: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else if gamma == 1.0 {
        rho
    } else {
        (gamma * rho.ln()).exp()
    }
}

impl PressureLaw {
    /// Unit weights.
    pub fn new(gammas: Vec<f64>) -> Result<Self, EosError> {
        let weights = vec![1.0; gammas.len()];
        Self::weighted(gammas, weights)
    }

    pub fn weighted(gammas: Vec<f64>, weights: Vec<f64>) -> Result<Self, EosError> {
        if gammas.is_empty() {
            return Err(EosError::Empty);
        }
        if gammas.len() != weights.len() {
            return Err(EosError::LengthMismatch {
                gammas: gammas.len(),
                weights: weights.len(),
            });
        }
        for &g in &gammas {
            if !(g >= 1.0) || !g.is_finite() {
                return Err(EosError::GammaBelowOne(g));
            }
        }
        for pair in gammas.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(EosError::NotIncreasing {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        for &w in &weights {
            if !(w > 0.0) || !w.is_finite() {
                return Err(EosError::BadWeight(w));
            }
        }
        Ok(Self { gammas, weights })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when the lightest component is isothermal (γ₁ = 1).
    pub fn is_isothermal(&self) -> bool {
        self.gammas[0] == 1.0
    }

    /// The entropy-free factor `P̃(ρ) = Σⱼ λⱼ ρ^{γⱼ}`.
    pub fn pressure_tilde(&self, rho: f64) -> Result<f64, EosError> {
        if !(rho >= 0.0) {
            return Err(EosError::NegativeDensity(rho));
        }
        Ok(self
            .gammas
            .iter()
            .zip(&self.weights)
            .map(|(&g, &w)| w * power(rho, g))
            .sum())
    }

    /// `P̃′(ρ) = Σⱼ λⱼ γⱼ ρ^{γⱼ−1}` for ρ > 0.
    pub fn pressure_tilde_slope(&self, rho: f64) -> Result<f64, EosError> {
        if !(rho > 0.0) {
            return Err(EosError::NonPositiveDensity(rho));
        }
        Ok(self
            .gammas
            .iter()
            .zip(&self.weights)
            .map(|(&g, &w)| w * g * power(rho, g - 1.0))
            .sum())
    }

    pub fn pressure(&self, rho: f64, entropy: f64) -> Result<f64, EosError> {
        Ok(entropy.exp() * self.pressure_tilde(rho)?)
    }

    /// ∂P/∂ρ at fixed entropy; the squared sound speed.
    pub fn dpressure_drho(&self, rho: f64, entropy: f64) -> Result<f64, EosError> {
        Ok(entropy.exp() * self.pressure_tilde_slope(rho)?)
    }

    pub fn sound_speed(&self, rho: f64, entropy: f64) -> Result<f64, EosError> {
        Ok(self.dpressure_drho(rho, entropy)?.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{central_diff, DiffOrder};
    use proptest::prelude::*;

    fn mixed() -> PressureLaw {
        PressureLaw::new(vec![1.4, 2.0]).unwrap()
    }

    #[test]
    fn pressure_tilde_examples() {
        assert_eq!(mixed().pressure_tilde(0.0).unwrap(), 0.0);
        assert_eq!(mixed().pressure_tilde(1.0).unwrap(), 2.0);
        let single = PressureLaw::new(vec![2.0]).unwrap();
        assert!((single.pressure_tilde(2.0).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(mixed().pressure_tilde(-0.1), Err(EosError::NegativeDensity(-0.1)));
    }

    #[test]
    fn pressure_examples() {
        let single = PressureLaw::new(vec![2.0]).unwrap();
        assert_eq!(single.pressure(1.0, 0.0).unwrap(), 1.0);
        assert!((single.pressure(1.0, 3f64.ln()).unwrap() - 3.0).abs() < 1e-15);
        let iso = PressureLaw::new(vec![1.0]).unwrap();
        assert_eq!(iso.pressure(5.0, 0.0).unwrap(), 5.0);
        assert_eq!(iso.pressure(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn dpressure_examples() {
        let single = PressureLaw::new(vec![2.0]).unwrap();
        assert_eq!(single.dpressure_drho(1.0, 0.0).unwrap(), 2.0);
        let iso = PressureLaw::new(vec![1.0]).unwrap();
        assert_eq!(iso.dpressure_drho(7.0, 0.0).unwrap(), 1.0);
        assert!((mixed().dpressure_drho(1.0, 0.0).unwrap() - 3.4).abs() < 1e-15);
        assert_eq!(mixed().dpressure_drho(0.0, 0.0), Err(EosError::NonPositiveDensity(0.0)));
    }

    #[test]
    fn construction_rejects_bad_laws() {
        assert_eq!(PressureLaw::new(vec![]), Err(EosError::Empty));
        assert_eq!(PressureLaw::new(vec![0.9]), Err(EosError::GammaBelowOne(0.9)));
        assert!(matches!(
            PressureLaw::new(vec![2.0, 1.5]),
            Err(EosError::NotIncreasing { .. })
        ));
        assert!(matches!(
            PressureLaw::new(vec![1.5, 1.5]),
            Err(EosError::NotIncreasing { .. })
        ));
        assert_eq!(
            PressureLaw::weighted(vec![1.5], vec![0.0]),
            Err(EosError::BadWeight(0.0))
        );
        assert!(matches!(
            PressureLaw::weighted(vec![1.5, 2.0], vec![1.0]),
            Err(EosError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn serde_defaults_weights_to_one() {
        let law: PressureLaw = serde_json::from_str(r#"{"gammas":[1.0,1.5]}"#).unwrap();
        assert_eq!(law.weights(), &[1.0, 1.0]);
        assert!(law.is_isothermal());
        assert!(serde_json::from_str::<PressureLaw>(r#"{"gammas":[1.5,1.0]}"#).is_err());
    }

    fn arb_law() -> impl Strategy<Value = PressureLaw> {
        (1.0f64..2.0, prop::collection::vec((0.05f64..1.0, 0.1f64..3.0), 0..3)).prop_map(|(g1, rest)| {
            let mut gammas = vec![g1];
            let mut weights = vec![1.0];
            for (step, w) in rest {
                gammas.push(gammas.last().unwrap() + step);
                weights.push(w);
            }
            PressureLaw::weighted(gammas, weights).unwrap()
        })
    }

    proptest! {
        #[test]
        fn pressure_tilde_strictly_increasing(law in arb_law(), a in 1e-3f64..10.0, b in 1e-3f64..10.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(law.pressure_tilde(lo).unwrap() < law.pressure_tilde(hi).unwrap());
        }

        #[test]
        fn entropy_factor_is_exact(law in arb_law(), rho in 0.0f64..10.0, s in -5.0f64..5.0) {
            prop_assert_eq!(law.pressure(rho, s).unwrap(), s.exp() * law.pressure(rho, 0.0).unwrap());
        }

        #[test]
        fn slope_matches_finite_difference(law in arb_law(), rho in 0.1f64..5.0, s in -2.0f64..2.0) {
            let h = 1e-4;
            let fd = central_diff(|r| law.pressure(r, s).unwrap(), rho, h, DiffOrder::First);
            let exact = law.dpressure_drho(rho, s).unwrap();
            // O(h²) with a generous constant for the curvature of ρ^γ on [0.1, 5]
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()));
        }
    }
}
