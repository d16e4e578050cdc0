//! Peakon kernels on the line and the circle, periodization, and pointwise
//! evaluation of peakon superpositions.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * the circle has fixed period 2π; `periodize` maps onto [0, 2π);
//! * circle *positions are stored unwrapped* (plain real numbers);
//!   periodization happens only inside kernel evaluation, so gaps
//!   `q₂ − q₁` stay meaningful and positions grow monotonically;
//! * the kernel slope at a peak uses the `sgn(0) = 0` convention, which is
//!   what makes the multipeakon ODE self-consistent when evaluating `u_x`
//!   at a peak position;
//! * the circle *superposition* uses the un-normalized base
//!   `cosh([x − q_j]_p − π)`; the normalized kernel
//!   `E(x) = cosh([x]_p − π)/cosh π` appears in the transformed ODE system
//!   and in `kernel_value`.

use serde::{Deserialize, Serialize};

use crate::{ensure_finite, Result};

/// 2π, the fixed circle period.
pub const TWO_PI: f64 = std::f64::consts::TAU;
/// π.
pub const PI: f64 = std::f64::consts::PI;

/// Spatial domain of the problem: the real line or the circle of period 2π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Line,
    Circle,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainKind::Line => write!(f, "line"),
            DomainKind::Circle => write!(f, "circle"),
        }
    }
}

/// cosh(π), the normalization constant of the circle kernel.
pub fn cosh_pi() -> f64 {
    PI.cosh()
}

/// sinh(π).
pub fn sinh_pi() -> f64 {
    PI.sinh()
}

/// Wraps x into [0, 2π). Infallible core of [`periodize`].
pub(crate) fn wrap(x: f64) -> f64 {
    let y = x - TWO_PI * (x / TWO_PI).floor();
    // Floating rounding can land exactly on 2π; fold it back.
    if y >= TWO_PI {
        0.0
    } else {
        y
    }
}

/// `[x]_p = x − 2π⌊x/2π⌋ ∈ [0, 2π)`.
pub fn periodize(x: f64) -> Result<f64> {
    ensure_finite(x, "periodize argument")?;
    Ok(wrap(x))
}

/// Normalized kernel: `e^{−|x|}` on the line, `cosh([x]_p − π)/cosh π` on
/// the circle. Always in (0, 1], peaking at 1 for x ≡ 0.
pub fn kernel_value(x: f64, domain: DomainKind) -> Result<f64> {
    ensure_finite(x, "kernel argument")?;
    Ok(match domain {
        DomainKind::Line => (-x.abs()).exp(),
        DomainKind::Circle => (wrap(x) - PI).cosh() / cosh_pi(),
    })
}

/// Derivative of [`kernel_value`] with the `sgn(0) = 0` convention at the
/// peak (x ≡ 0): `−sgn(x)e^{−|x|}` on the line,
/// `sinh([x]_p − π)/cosh π` on the circle (0 exactly at the peak).
pub fn kernel_slope(x: f64, domain: DomainKind) -> f64 {
    match domain {
        DomainKind::Line => {
            if x == 0.0 {
                0.0
            } else {
                -x.signum() * (-x.abs()).exp()
            }
        }
        DomainKind::Circle => {
            let y = wrap(x);
            if y == 0.0 {
                0.0
            } else {
                (y - PI).sinh() / cosh_pi()
            }
        }
    }
}

/// Un-normalized superposition base: `e^{−|x|}` (line) or
/// `cosh([x]_p − π)` (circle).
pub fn superposition_base(x: f64, domain: DomainKind) -> f64 {
    match domain {
        DomainKind::Line => (-x.abs()).exp(),
        DomainKind::Circle => (wrap(x) - PI).cosh(),
    }
}

/// Slope of [`superposition_base`], with `sgn(0) = 0` at the peak.
pub fn superposition_base_slope(x: f64, domain: DomainKind) -> f64 {
    match domain {
        DomainKind::Line => {
            if x == 0.0 {
                0.0
            } else {
                -x.signum() * (-x.abs()).exp()
            }
        }
        DomainKind::Circle => {
            let y = wrap(x);
            if y == 0.0 {
                0.0
            } else {
                (y - PI).sinh()
            }
        }
    }
}

/// Normalized circle kernel `E(x) = cosh([x]_p − π)/cosh π`.
pub fn circle_e(x: f64) -> f64 {
    (wrap(x) - PI).cosh() / cosh_pi()
}

/// `E'(x) = sinh([x]_p − π)/cosh π` (smooth away from the peak; callers in
/// the transformed system only evaluate it on gaps q ∈ (0, 2π)).
pub fn circle_e_prime(x: f64) -> f64 {
    (wrap(x) - PI).sinh() / cosh_pi()
}

/// `1 − E(x)` without cancellation, for x ∈ [0, 2π]:
/// `cosh π − cosh(x − π) = 2 sinh(x/2) sinh(π − x/2)`.
pub fn one_minus_circle_e(x: f64) -> f64 {
    2.0 * (0.5 * x).sinh() * (PI - 0.5 * x).sinh() / cosh_pi()
}

/// `1 − E(x)²` without cancellation: `(1 − E)(1 + E)`.
pub fn one_minus_circle_e_sq(x: f64) -> f64 {
    one_minus_circle_e(x) * (1.0 + circle_e(x))
}

/// A solitary (anti)peakon traveling wave: amplitude·base(x − x₀ − c·t).
///
/// On the line the base is `e^{−|·|}` and the peakon ODE forces
/// `c = amplitude²`; on the circle the base is the un-normalized
/// `cosh([·]_p − π)` and the periodic one-peakon ODE forces
/// `c = cosh²π · amplitude²`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolitaryPeakon {
    /// Signed peak amplitude (negative = antipeakon).
    pub amplitude: f64,
    /// Translation speed c > 0.
    pub speed: f64,
    /// Peak position at t = 0.
    pub offset: f64,
    pub domain: DomainKind,
}

impl SolitaryPeakon {
    /// Builds the traveling wave with the speed dictated by the one-peakon
    /// ODE of the given domain.
    pub fn new(amplitude: f64, offset: f64, domain: DomainKind) -> Self {
        let speed = match domain {
            DomainKind::Line => amplitude * amplitude,
            DomainKind::Circle => cosh_pi().powi(2) * amplitude * amplitude,
        };
        SolitaryPeakon { amplitude, speed, offset, domain }
    }

    /// Peak position at time t.
    pub fn peak_position(&self, t: f64) -> f64 {
        self.offset + self.speed * t
    }

    /// Pointwise value at (x, t).
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.amplitude * superposition_base(x - self.peak_position(t), self.domain)
    }

    /// Residual of the one-peakon ODE speed relation: 0 exactly when the
    /// speed matches the amplitude as the domain's ODE requires.
    pub fn solitary_residual(&self) -> f64 {
        let forced = match self.domain {
            DomainKind::Line => self.amplitude * self.amplitude,
            DomainKind::Circle => cosh_pi().powi(2) * self.amplitude * self.amplitude,
        };
        (self.speed - forced).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodize_identity_and_wrap() {
        assert_eq!(periodize(0.0).unwrap(), 0.0);
        assert_eq!(periodize(TWO_PI).unwrap(), 0.0);
        assert!((periodize(-PI).unwrap() - PI).abs() < 1e-15);
        assert!(periodize(f64::NAN).is_err());
    }

    #[test]
    fn kernel_peak_values() {
        assert_eq!(kernel_value(0.0, DomainKind::Line).unwrap(), 1.0);
        assert!((kernel_value(0.0, DomainKind::Circle).unwrap() - 1.0).abs() < 1e-15);
        // Antipodal minimum 1/cosh π ≈ 0.0863; also check against a grid
        // search for the minimum location.
        let v = kernel_value(PI, DomainKind::Circle).unwrap();
        assert!((v - 1.0 / cosh_pi()).abs() < 1e-15);
        let grid_min = (0..=1000)
            .map(|i| kernel_value(TWO_PI * i as f64 / 1000.0, DomainKind::Circle).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((grid_min - v).abs() < 1e-6);
    }

    #[test]
    fn kernel_slope_conventions() {
        assert_eq!(kernel_slope(0.0, DomainKind::Line), 0.0);
        assert!((kernel_slope(1.0, DomainKind::Line) + (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(kernel_slope(PI, DomainKind::Circle), 0.0);
        assert_eq!(kernel_slope(0.0, DomainKind::Circle), 0.0);
        assert_eq!(kernel_slope(TWO_PI, DomainKind::Circle), 0.0);
    }

    #[test]
    fn slope_matches_central_difference() {
        let h = 1e-5;
        for domain in [DomainKind::Line, DomainKind::Circle] {
            for &x in &[0.3, 1.0, 2.5, 4.0, 5.9] {
                let fd = (kernel_value(x + h, domain).unwrap()
                    - kernel_value(x - h, domain).unwrap())
                    / (2.0 * h);
                let exact = kernel_slope(x, domain);
                assert!(
                    (fd - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                    "domain {domain:?}, x {x}: fd {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn kernel_evenness() {
        for &x in &[0.1, 0.7, 2.0, 3.0] {
            let l = kernel_value(x, DomainKind::Line).unwrap();
            let lm = kernel_value(-x, DomainKind::Line).unwrap();
            assert_eq!(l, lm);
            let c = kernel_value(x, DomainKind::Circle).unwrap();
            let cm = kernel_value(TWO_PI - x, DomainKind::Circle).unwrap();
            assert!((c - cm).abs() < 1e-14);
        }
    }

    #[test]
    fn one_minus_e_identities() {
        for &x in &[1e-12, 1e-6, 0.01, 0.4, 1.0, 3.0] {
            let naive = 1.0 - circle_e(x);
            let stable = one_minus_circle_e(x);
            assert!((naive - stable).abs() <= 1e-12 * stable.max(1e-300) + 1e-15);
            let naive2 = 1.0 - circle_e(x) * circle_e(x);
            let stable2 = one_minus_circle_e_sq(x);
            assert!((naive2 - stable2).abs() <= 1e-12 * stable2.max(1e-300) + 1e-15);
        }
        // At tiny x the stable form keeps full relative precision:
        // 1 − E(x) ≈ x·tanh(π).
        let x = 1e-13;
        assert!((one_minus_circle_e(x) / (x * PI.tanh()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn solitary_peakon_motion() {
        let p = SolitaryPeakon::new(-2.0, 1.0, DomainKind::Line);
        assert_eq!(p.speed, 4.0);
        assert_eq!(p.solitary_residual(), 0.0);
        assert!((p.eval(1.0 + 4.0 * 0.5, 0.5) + 2.0).abs() < 1e-15);
        let c = SolitaryPeakon::new(1.0, 0.0, DomainKind::Circle);
        assert_eq!(c.speed, cosh_pi().powi(2));
        // Antipodal value of the un-normalized base is cosh(0) = 1.
        assert!((c.eval(PI, 0.0) - 1.0).abs() < 1e-12);
    }
}
