//! Smooth scalar profiles of the phase variable with exact derivatives.
//!
//! A profile plays the density role for the pure Euler family and the
//! potential-shape role for the Euler-Poisson family, where the density is
//! proportional to its second derivative and the momentum constraint needs
//! the third.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of samples used by [`Profile::check_sign`].
pub const SIGN_CHECK_SAMPLES: usize = 4097;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("derivative order {0} is not available for this profile")]
    UnsupportedOrder(u8),
    #[error("z = {z} lies outside the tabulated range [{lo}, {hi}]")]
    Extrapolation { z: f64, lo: f64, hi: f64 },
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("tabulated profile needs at least 3 knots, got {0}")]
    TooFewKnots(usize),
    #[error("tabulated knots must be strictly increasing (index {0})")]
    KnotsNotIncreasing(usize),
    #[error("could not read tabulated profile: {0}")]
    Io(String),
}

/// Natural cubic spline through `(z, values)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedData", into = "TabulatedData")]
pub struct CubicSpline {
    z: Vec<f64>,
    values: Vec<f64>,
    curvature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedData {
    pub z: Vec<f64>,
    pub values: Vec<f64>,
}

impl TryFrom<TabulatedData> for CubicSpline {
    type Error = ProfileError;

    fn try_from(data: TabulatedData) -> Result<Self, ProfileError> {
        CubicSpline::new(data.z, data.values)
    }
}

impl From<CubicSpline> for TabulatedData {
    fn from(spline: CubicSpline) -> Self {
        TabulatedData {
            z: spline.z,
            values: spline.values,
        }
    }
}

impl CubicSpline {
    pub fn new(z: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        let n = z.len();
        if n != values.len() {
            return Err(ProfileError::InvalidParameter(format!(
                "{} knots but {} values",
                n,
                values.len()
            )));
        }
        if n < 3 {
            return Err(ProfileError::TooFewKnots(n));
        }
        if let Some(i) = z.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(ProfileError::KnotsNotIncreasing(i + 1));
        }
        if z.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(ProfileError::InvalidParameter("non-finite knot data".into()));
        }
        // tridiagonal system for interior second derivatives, natural ends
        let mut curvature = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = z[i] - z[i - 1];
            let h1 = z[i + 1] - z[i];
            let lower = h0 / 6.0;
            let mut d = (h0 + h1) / 3.0;
            let mut r = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
            if i > 1 {
                let m = lower / diag[i - 1];
                d -= m * upper[i - 1];
                r -= m * rhs[i - 1];
            }
            diag[i] = d;
            rhs[i] = r;
            upper[i] = h1 / 6.0;
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { curvature[i + 1] } else { 0.0 };
            curvature[i] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Self { z, values, curvature })
    }

    /// Load `(z, value)` rows from a two-column CSV; a non-numeric first row is
    /// treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self, ProfileError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| ProfileError::Io(e.to_string()))?;
        let mut z = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| ProfileError::Io(e.to_string()))?;
            if record.len() != 2 {
                return Err(ProfileError::Io(format!(
                    "row {} has {} columns, expected 2",
                    row + 1,
                    record.len()
                )));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    z.push(a);
                    values.push(b);
                }
                _ if row == 0 => continue,
                _ => return Err(ProfileError::Io(format!("row {} is not numeric", row + 1))),
            }
        }
        Self::new(z, values)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.z[0], *self.z.last().unwrap())
    }

    fn eval(&self, x: f64, order: u8) -> Result<f64, ProfileError> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(ProfileError::Extrapolation { z: x, lo, hi });
        }
        let k = match self.z.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(self.z.len() - 2),
        };
        let h = self.z[k + 1] - self.z[k];
        let a = (self.z[k + 1] - x) / h;
        let b = (x - self.z[k]) / h;
        let (m0, m1) = (self.curvature[k], self.curvature[k + 1]);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        Ok(match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0,
            2 => a * m0 + b * m1,
            o => return Err(ProfileError::UnsupportedOrder(o)),
        })
    }
}

/// A scalar function of the phase `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `A·exp(−((z−μ)/σ)²)`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `Σₖ cₖ zᵏ`, lowest order first.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `A·sech²((z−μ)/w)`.
    SechSquared {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `A·exp(−1/(1−((z−μ)/r)²))` inside `|z−μ| < r`, zero outside.
    CompactBump {
        amplitude: f64,
        center: f64,
        radius: f64,
    },
    Tabulated(CubicSpline),
}

/// Sign conditions a profile must meet on its verification domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignRequirement {
    /// f ≥ 0
    NonnegF,
    /// f > 0
    PosF,
    /// f″ ≥ 0
    NonnegD2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    pub requirement: SignRequirement,
    pub passed: bool,
    /// Leftmost sampled point violating the requirement.
    pub first_violation: Option<f64>,
    /// Smallest value of the checked quantity seen.
    pub min_value: f64,
    pub min_at: f64,
}

fn horner(coefficients: &[f64], z: f64, order: u8) -> f64 {
    let k = order as usize;
    if coefficients.len() <= k {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, &c) in coefficients.iter().enumerate().skip(k).rev() {
        let falling: f64 = (0..k).map(|j| (i - j) as f64).product();
        acc = acc * z + c * falling;
    }
    acc
}

impl Profile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ProfileError::InvalidParameter(format!("{name} must be finite")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ProfileError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match self {
            Profile::Constant { value } => finite("value", *value),
            Profile::Gaussian {
                amplitude,
                center,
                width,
            }
            | Profile::SechSquared {
                amplitude,
                center,
                width,
            } => {
                finite("amplitude", *amplitude)?;
                finite("center", *center)?;
                positive("width", *width)
            }
            Profile::CompactBump {
                amplitude,
                center,
                radius,
            } => {
                finite("amplitude", *amplitude)?;
                finite("center", *center)?;
                positive("radius", *radius)
            }
            Profile::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(ProfileError::InvalidParameter("polynomial needs a coefficient".into()));
                }
                coefficients.iter().try_for_each(|&c| finite("coefficient", c))
            }
            Profile::Tabulated(_) => Ok(()),
        }
    }

    /// Highest derivative order this profile evaluates.
    pub fn max_order(&self) -> u8 {
        match self {
            Profile::Tabulated(_) => 2,
            _ => 3,
        }
    }

    /// The `order`-th derivative at `z`, `order ∈ 0..=3`.
    pub fn eval(&self, z: f64, order: u8) -> Result<f64, ProfileError> {
        if order > 3 {
            return Err(ProfileError::UnsupportedOrder(order));
        }
        Ok(match self {
            Profile::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let u = (z - center) / width;
                let e = amplitude * (-u * u).exp();
                // d^n/du^n e^{-u²} = (-1)^n H_n(u) e^{-u²}
                let poly = match order {
                    0 => 1.0,
                    1 => -2.0 * u,
                    2 => 4.0 * u * u - 2.0,
                    _ => -8.0 * u * u * u + 12.0 * u,
                };
                e * poly / width.powi(order as i32)
            }
            Profile::Polynomial { coefficients } => horner(coefficients, z, order),
            Profile::SechSquared {
                amplitude,
                center,
                width,
            } => {
                let u = (z - center) / width;
                let s2 = {
                    let s = 1.0 / u.cosh();
                    s * s
                };
                let t = u.tanh();
                let poly = match order {
                    0 => s2,
                    1 => -2.0 * s2 * t,
                    2 => 4.0 * s2 * t * t - 2.0 * s2 * s2,
                    _ => -8.0 * s2 * t * t * t + 16.0 * s2 * s2 * t,
                };
                amplitude * poly / width.powi(order as i32)
            }
            Profile::CompactBump {
                amplitude,
                center,
                radius,
            } => {
                let v = (z - center) / radius;
                let q = 1.0 - v * v;
                if q <= 0.0 {
                    return Ok(0.0);
                }
                let phi = -1.0 / q;
                if phi < -700.0 {
                    return Ok(0.0);
                }
                let e = amplitude * phi.exp();
                let q2 = q * q;
                let p1 = -2.0 * v / q2;
                let p2 = -2.0 / q2 - 8.0 * v * v / (q2 * q);
                let p3 = -24.0 * v / (q2 * q) - 48.0 * v * v * v / (q2 * q2);
                let poly = match order {
                    0 => 1.0,
                    1 => p1,
                    2 => p1 * p1 + p2,
                    _ => p1 * p1 * p1 + 3.0 * p1 * p2 + p3,
                };
                e * poly / radius.powi(order as i32)
            }
            Profile::Tabulated(spline) => spline.eval(z, order)?,
        })
    }

    /// Points where the family attains an extremum of value or derivatives.
    fn landmarks(&self) -> Vec<f64> {
        match self {
            Profile::Gaussian { center, width, .. } | Profile::SechSquared { center, width, .. } => {
                vec![*center, center - width, center + width]
            }
            Profile::CompactBump { center, radius, .. } => vec![*center, center - radius, center + radius],
            _ => Vec::new(),
        }
    }

    /// Sample `requirement` on a dense grid over `[lo, hi]`, refine every
    /// sampled local minimum and report the leftmost violation.
    pub fn check_sign(&self, lo: f64, hi: f64, requirement: SignRequirement) -> SignReport {
        self.check_sign_with(lo, hi, requirement, SIGN_CHECK_SAMPLES)
    }

    pub fn check_sign_with(&self, lo: f64, hi: f64, requirement: SignRequirement, samples: usize) -> SignReport {
        let order = match requirement {
            SignRequirement::NonnegF | SignRequirement::PosF => 0,
            SignRequirement::NonnegD2 => 2,
        };
        let quantity = |z: f64| self.eval(z, order).unwrap_or(f64::NAN);
        let ok = |v: f64| match requirement {
            SignRequirement::PosF => v > 0.0,
            _ => v >= 0.0,
        };
        let samples = samples.max(2);
        let step = (hi - lo) / (samples - 1) as f64;
        let grid: Vec<f64> = (0..samples)
            .map(|i| if i + 1 == samples { hi } else { lo + i as f64 * step })
            .collect();
        let values: Vec<f64> = grid.iter().map(|&z| quantity(z)).collect();

        let mut candidates: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();
        for i in 1..samples - 1 {
            if values[i] <= values[i - 1] && values[i] <= values[i + 1] {
                let z = golden_minimum(&quantity, grid[i - 1], grid[i + 1]);
                candidates.push((z, quantity(z)));
            }
        }
        for z in self.landmarks() {
            if z >= lo && z <= hi {
                candidates.push((z, quantity(z)));
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

        let first_violation = candidates.iter().find(|(_, v)| !ok(*v)).map(|(z, _)| *z);
        let (min_at, min_value) =
            candidates.iter().copied().fold(
                (lo, f64::INFINITY),
                |best, c| if c.1 < best.1 || c.1.is_nan() { c } else { best },
            );
        SignReport {
            requirement,
            passed: first_violation.is_none(),
            first_violation,
            min_value,
            min_at,
        }
    }
}

fn golden_minimum(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    for _ in 0..60 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{central_diff, DiffOrder};
    use proptest::prelude::*;

    fn gaussian() -> Profile {
        Profile::Gaussian {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }

    fn half_square() -> Profile {
        Profile::Polynomial {
            coefficients: vec![0.0, 0.0, 0.5],
        }
    }

    #[test]
    fn eval_examples() {
        let c = Profile::Constant { value: 5.0 };
        assert_eq!(c.eval(2.0, 0).unwrap(), 5.0);
        assert_eq!(c.eval(2.0, 1).unwrap(), 0.0);
        assert_eq!(half_square().eval(3.0, 2).unwrap(), 1.0);
        assert_eq!(gaussian().eval(0.0, 1).unwrap(), 0.0);
        assert_eq!(gaussian().eval(0.0, 4), Err(ProfileError::UnsupportedOrder(4)));
    }

    #[test]
    fn polynomial_derivatives() {
        let p = Profile::Polynomial {
            coefficients: vec![1.0, -2.0, 0.5, 3.0],
        };
        let z = 1.5f64;
        assert!((p.eval(z, 0).unwrap() - (1.0 - 2.0 * z + 0.5 * z * z + 3.0 * z.powi(3))).abs() < 1e-13);
        assert!((p.eval(z, 1).unwrap() - (-2.0 + z + 9.0 * z * z)).abs() < 1e-13);
        assert!((p.eval(z, 2).unwrap() - (1.0 + 18.0 * z)).abs() < 1e-13);
        assert_eq!(p.eval(z, 3).unwrap(), 18.0);
    }

    #[test]
    fn check_sign_examples() {
        assert!(gaussian().check_sign(-5.0, 5.0, SignRequirement::NonnegF).passed);
        assert!(half_square().check_sign(-5.0, 5.0, SignRequirement::NonnegD2).passed);
        let line = Profile::Polynomial {
            coefficients: vec![0.0, 1.0],
        };
        let report = line.check_sign(-1.0, 1.0, SignRequirement::PosF);
        assert!(!report.passed);
        assert!(report.first_violation.unwrap() <= 0.0);
    }

    #[test]
    fn check_sign_refines_between_samples() {
        // (z − 0.1234)² − 1e-8 is negative only within 1e-4 of 0.1234, far narrower than the grid
        let c = 0.1234f64;
        let p = Profile::Polynomial {
            coefficients: vec![c * c - 1e-8, -2.0 * c, 1.0],
        };
        let report = p.check_sign_with(-1.0, 1.0, SignRequirement::NonnegF, 257);
        assert!(!report.passed, "{report:?}");
        assert!((report.first_violation.unwrap() - c).abs() < 1e-4);
        assert!(report.min_value < 0.0);
    }

    #[test]
    fn compact_bump_vanishes_outside_support() {
        let bump = Profile::CompactBump {
            amplitude: 2.0,
            center: 1.0,
            radius: 0.5,
        };
        for z in [-3.0, 0.5, 1.5, 1.50001, 7.0] {
            for k in 0..=3 {
                assert_eq!(bump.eval(z, k).unwrap(), 0.0);
            }
        }
        assert!((bump.eval(1.0, 0).unwrap() - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert!(bump.check_sign(-1.0, 3.0, SignRequirement::NonnegF).passed);
        assert!(!bump.check_sign(-1.0, 3.0, SignRequirement::PosF).passed);
    }

    #[test]
    fn spline_reproduces_quadratic_interior() {
        let z: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let values: Vec<f64> = z.iter().map(|z| z * z).collect();
        let p = Profile::Tabulated(CubicSpline::new(z, values).unwrap());
        assert!((p.eval(0.05, 0).unwrap() - 0.0025).abs() < 1e-4);
        assert!((p.eval(0.3, 1).unwrap() - 0.6).abs() < 1e-3);
        assert!((p.eval(0.0, 2).unwrap() - 2.0).abs() < 1e-2);
        assert_eq!(p.eval(0.0, 3), Err(ProfileError::UnsupportedOrder(3)));
        assert!(matches!(p.eval(2.5, 0), Err(ProfileError::Extrapolation { .. })));
        // knots are reproduced exactly
        assert_eq!(p.eval(-2.0, 0).unwrap(), 4.0);
    }

    #[test]
    fn spline_rejects_bad_knots() {
        assert_eq!(
            CubicSpline::new(vec![0.0, 1.0], vec![0.0, 1.0]),
            Err(ProfileError::TooFewKnots(2))
        );
        assert_eq!(
            CubicSpline::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]),
            Err(ProfileError::KnotsNotIncreasing(2))
        );
    }

    #[test]
    fn spline_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.csv");
        std::fs::write(&path, "z,value\n0,1\n1,2\n2,5\n3,10\n").unwrap();
        let spline = CubicSpline::from_csv(&path).unwrap();
        assert_eq!(spline.range(), (0.0, 3.0));
        assert_eq!(spline.eval(2.0, 0).unwrap(), 5.0);
        std::fs::write(&path, "0,1\n1,x\n").unwrap();
        assert!(matches!(CubicSpline::from_csv(&path), Err(ProfileError::Io(_))));
    }

    #[test]
    fn serde_round_trip_keeps_family() {
        let p = Profile::SechSquared {
            amplitude: 0.7,
            center: -0.2,
            width: 1.3,
        };
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"family\":\"sech_squared\""));
        assert_eq!(serde_json::from_str::<Profile>(&text).unwrap(), p);
    }

    fn analytic_families() -> Vec<Profile> {
        vec![
            Profile::Gaussian {
                amplitude: 1.3,
                center: 0.2,
                width: 0.8,
            },
            Profile::Polynomial {
                coefficients: vec![0.3, -1.0, 0.5, 0.1, 0.05],
            },
            Profile::SechSquared {
                amplitude: 0.9,
                center: -0.3,
                width: 1.2,
            },
            Profile::CompactBump {
                amplitude: 1.5,
                center: 0.1,
                radius: 2.5,
            },
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn derivatives_consistent_with_differences(z in -2.0f64..2.0) {
            let h = 1e-4;
            for p in analytic_families() {
                for k in 1..=3u8 {
                    let fd = central_diff(|s| p.eval(s, k - 1).unwrap(), z, h, DiffOrder::First);
                    let exact = p.eval(z, k).unwrap();
                    prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()),
                        "{p:?} order {k} at {z}: fd {fd} exact {exact}");
                }
            }
        }
    }
}
