//! The transformed two-peakon variables (q, p, w, z), their exact
//! closed-form solutions as functions of the gap q, the autonomous gap ODE
//! `q' = −f(q)`, the dominating power-law ODEs, and collision-time
//! quadratures.
//!
//! For the antipeakon–peakon data (momenta −(b+δ) and b at ∓a) the gap
//! q = q₂ − q₁ decreases monotonically, so q itself can serve as the
//! independent variable. With the kernel ratio k(q) = e^{−q} (line) or
//! k(q) = E(q) = cosh([q]_p − π)/cosh π (circle):
//!
//! ```text
//! z(q) = −z₁ / (1 − k²)^{1/2},          z₁ = b(b+δ)(1 − k(q₀)²)^{1/2},
//! p(q) = (p₀² + 2z₁[A(q) − A(q₀)])^{1/2},   A = (1+k)/(1−k²)^{1/2},
//! w(q) = −(w₀² + 2z₁[B(q₀) − B(q)])^{1/2},  B = (1−k²)^{1/2}/(1+k),
//! ```
//!
//! and the gap obeys `q' = p·w·(1−k²)` (times cosh²π on the circle), i.e.
//! `q' = −f(q)` with `f > 0`. The collision time is `T = ∫₀^{q₀} dq/f(q)`,
//! finite because `f ≈ const·q^{3/4}` near zero. The identity
//! `z = (w² − p²)/4` transfers exactly through the closed forms.
//!
//! Naming note: the dominating-ODE rate constant is called κ here; the
//! symbol that would otherwise be natural collides with the position q₁.

use serde::{Deserialize, Serialize};

use crate::dynamics::InitialProfile;
use crate::integrate::{EventKind, Trajectory};
use crate::kernel::{self, circle_e, circle_e_prime, one_minus_circle_e, one_minus_circle_e_sq,
    DomainKind};
use crate::quad::adaptive;
use crate::{Error, Result};

/// Derived variables of the 2-peakon system at one gap value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransformedState {
    /// Position gap q = q₂ − q₁ > 0.
    pub q: f64,
    /// Momentum gap p = p₂ − p₁.
    pub p: f64,
    /// Momentum sum w = p₂ + p₁.
    pub w: f64,
    /// Momentum product z = p₁p₂.
    pub z: f64,
}

impl TransformedState {
    /// Relative residual of the algebraic identity z = (w² − p²)/4.
    pub fn identity_residual(&self) -> f64 {
        let rhs = 0.25 * (self.w * self.w - self.p * self.p);
        (self.z - rhs).abs() / self.z.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Parameters of the closed-form solution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClosedFormParams {
    /// Initial gap q₀ = 2a.
    pub q0: f64,
    /// Initial momentum gap p₀ = 2b + δ.
    pub p0: f64,
    /// Initial momentum sum w₀ = −δ.
    pub w0: f64,
    /// The positive constant z₁ = b(b+δ)(1 − k(q₀)²)^{1/2}.
    pub z1: f64,
    /// Peakon momentum b (kept for the dominating rate constant).
    pub b: f64,
    /// Asymmetry δ.
    pub delta: f64,
    pub domain: DomainKind,
}

/// 1 − k(q)² without cancellation for small q.
fn one_minus_k_sq(q: f64, domain: DomainKind) -> f64 {
    match domain {
        DomainKind::Line => -(-2.0 * q).exp_m1(),
        DomainKind::Circle => one_minus_circle_e_sq(q),
    }
}

/// The kernel ratio k(q).
fn kernel_ratio(q: f64, domain: DomainKind) -> f64 {
    match domain {
        DomainKind::Line => (-q).exp(),
        DomainKind::Circle => circle_e(q),
    }
}

/// 1 − k(q) without cancellation.
fn one_minus_k(q: f64, domain: DomainKind) -> f64 {
    match domain {
        DomainKind::Line => -(-q).exp_m1(),
        DomainKind::Circle => one_minus_circle_e(q),
    }
}

/// Bracket term of the p formula: A(q) = (1 + k)/(1 − k²)^{1/2}.
fn a_factor(q: f64, domain: DomainKind) -> f64 {
    (1.0 + kernel_ratio(q, domain)) / one_minus_k_sq(q, domain).sqrt()
}

/// Bracket term of the w formula: B(q) = (1 − k²)^{1/2}/(1 + k).
fn b_factor(q: f64, domain: DomainKind) -> f64 {
    one_minus_k_sq(q, domain).sqrt() / (1.0 + kernel_ratio(q, domain))
}

impl ClosedFormParams {
    pub fn from_profile(profile: &InitialProfile, domain: DomainKind) -> Result<Self> {
        let profile = InitialProfile::new(profile.a, profile.b, profile.delta)?;
        let q0 = profile.q0();
        let z1 = profile.b * (profile.b + profile.delta) * one_minus_k_sq(q0, domain).sqrt();
        Ok(ClosedFormParams {
            q0,
            p0: profile.p0(),
            w0: profile.w0(),
            z1,
            b: profile.b,
            delta: profile.delta,
            domain,
        })
    }

    /// Speed prefactor of the gap ODE: 1 on the line, cosh²π on the circle.
    fn prefactor(&self) -> f64 {
        match self.domain {
            DomainKind::Line => 1.0,
            DomainKind::Circle => kernel::cosh_pi().powi(2),
        }
    }

    /// Rate constant κ of the dominating ODE `q' = −κ(1 − e^{−2q})^{3/4}`:
    /// δ·√(2b(b+δ))·q₀^{1/4} on the line, δ·√(b(b+δ))·q₀^{1/4} on the
    /// circle (the extra √2·cosh²π/3 ≥ 1 factor is dropped, which keeps the
    /// domination valid while sharing one code path).
    pub fn kappa(&self) -> f64 {
        let bb = self.b * (self.b + self.delta);
        let base = match self.domain {
            DomainKind::Line => (2.0 * bb).sqrt(),
            DomainKind::Circle => bb.sqrt(),
        };
        self.delta * base * self.q0.powf(0.25)
    }

    /// The collision-time bound scale 1/(δ√(2b(b+δ))).
    pub fn lifespan_bound_scale(&self) -> f64 {
        1.0 / (self.delta * (2.0 * self.b * (self.b + self.delta)).sqrt())
    }
}

/// Exact (q, p, w, z) at gap q per the closed forms. Requires 0 < q ≤ q₀.
pub fn transformed_closed_form(q: f64, params: &ClosedFormParams) -> Result<TransformedState> {
    if !(q > 0.0) {
        return Err(Error::Singularity(format!(
            "closed forms are singular at q = {q} (need q > 0)"
        )));
    }
    if q > params.q0 * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "closed forms hold on (0, q0]; got q = {q} > q0 = {}",
            params.q0
        )));
    }
    let q = q.min(params.q0);
    let d = params.domain;
    let m2 = one_minus_k_sq(q, d);
    let z = -params.z1 / m2.sqrt();
    let p = (params.p0 * params.p0
        + 2.0 * params.z1 * (a_factor(q, d) - a_factor(params.q0, d)))
        .sqrt();
    let w = -(params.w0 * params.w0
        + 2.0 * params.z1 * (b_factor(params.q0, d) - b_factor(q, d)))
        .sqrt();
    Ok(TransformedState { q, p, w, z })
}

/// Right-hand side of the transformed 4-variable system, given the current
/// state. Line:
/// `q' = pw(1−e^{−2q})`, `p' = zw·e^{−q}(1+e^{−q})`,
/// `w' = zp·e^{−q}(1−e^{−q})`, `z' = −zwp·e^{−2q}`;
/// circle: the analogous system in E(q), E'(q) with the cosh²π prefactor.
pub fn transformed_rhs(y: &TransformedState, domain: DomainKind) -> [f64; 4] {
    let (q, p, w, z) = (y.q, y.p, y.w, y.z);
    match domain {
        DomainKind::Line => {
            let k = (-q).exp();
            [
                p * w * one_minus_k_sq(q, domain),
                z * w * k * (1.0 + k),
                z * p * k * (1.0 - k),
                -z * w * p * k * k,
            ]
        }
        DomainKind::Circle => {
            let c = kernel::cosh_pi().powi(2);
            let e = circle_e(q);
            let ep = circle_e_prime(q);
            [
                c * p * w * one_minus_k_sq(q, domain),
                -c * w * z * (1.0 + e) * ep,
                -c * z * p * (1.0 - e) * ep,
                c * z * w * p * e * ep,
            ]
        }
    }
}

/// The autonomous gap ODE right-hand side: `q' = −f(q)` with
/// `f(q) = −prefactor·w(q)·p(q)·(1 − k(q)²) > 0`. Returns −f(q) < 0.
pub fn autonomous_gap_rhs(q: f64, params: &ClosedFormParams) -> Result<f64> {
    let st = transformed_closed_form(q, params)?;
    Ok(params.prefactor() * st.p * st.w * one_minus_k_sq(st.q, params.domain))
}

/// The dominating gap ODE right-hand side: `q' = −κ(1 − e^{−2q})^{3/4}`.
pub fn dominating_gap_rhs(q: f64, params: &ClosedFormParams) -> f64 {
    -params.kappa() * (-(-2.0 * q).exp_m1()).powf(0.75)
}

/// Which speed function to integrate against in [`collision_time`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionMode {
    /// The true autonomous speed f(q).
    ExactF,
    /// The dominating power-law speed g(q) = κ(1 − e^{−2q})^{3/4}.
    DominatingG,
}

/// `∫₀^{q_upper} dq/speed(q)` with the q = v⁴ substitution that removes the
/// q^{−3/4} endpoint singularity; composite adaptive Gauss on v with target
/// relative tolerance 1e−10.
pub fn partial_collision_time(
    params: &ClosedFormParams,
    q_upper: f64,
    mode: CollisionMode,
) -> Result<f64> {
    if !(q_upper > 0.0 && q_upper <= params.q0 * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "need 0 < q_upper <= q0, got q_upper = {q_upper}, q0 = {}",
            params.q0
        )));
    }
    let v_hi = q_upper.min(params.q0).powf(0.25);
    let mut integrand = |v: f64| {
        let q = (v * v * v * v).min(params.q0);
        let speed = match mode {
            CollisionMode::ExactF => -autonomous_gap_rhs(q, params)
                .expect("closed form valid inside (0, q0]"),
            CollisionMode::DominatingG => -dominating_gap_rhs(q, params),
        };
        4.0 * v * v * v / speed
    };
    adaptive(&mut integrand, 0.0, v_hi, 1e-10, f64::MIN_POSITIVE)
}

/// The collision time `T = ∫₀^{q₀} dq/f(q)` (or with the dominating g).
pub fn collision_time(params: &ClosedFormParams, mode: CollisionMode) -> Result<f64> {
    partial_collision_time(params, params.q0, mode)
}

/// Hitting time of q = 0 for the power-law family `q' = −κ(1 − e^{−2q})^r`,
/// r < 1, together with the asymptotic value `q₀^{1−r}/((1−r)κ)`.
///
/// Sandwich from `q ≤ 1 − e^{−2q} ≤ 2q` on [0, 1/2]:
/// `2^{−r}·T_asymptotic ≤ T_quadrature ≤ T_asymptotic` for r ≥ 0 (callers
/// assert this orientation; equality at r = 0).
pub fn power_law_zero_time(r: f64, q0: f64, kappa: f64) -> Result<(f64, f64)> {
    if r >= 1.0 {
        return Err(Error::NoZero(r));
    }
    if !(q0 > 0.0 && q0 < 0.5) {
        return Err(Error::Domain(format!("need q0 in (0, 1/2), got {q0}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("need kappa > 0, got {kappa}")));
    }
    let t_quad = power_law_partial_time(r, q0, kappa)?;
    let t_asym = q0.powf(1.0 - r) / ((1.0 - r) * kappa);
    Ok((t_quad, t_asym))
}

/// `(1/κ)∫₀^{q_upper} (1 − e^{−2q})^{−r} dq` for r < 1. Substituting
/// u = 1 − e^{−2q} turns the singular head into
/// `(1/2κ)∫₀^{u₀} u^{−r}/(1 − u) du = (1/2κ) Σ_{k≥0} u₀^{k+1−r}/(k+1−r)`,
/// a geometric-rate series uniform in r (a singularity-removing power
/// substitution degenerates as r → 1: its exponent ⌈1/(1−r)⌉ underflows
/// the integrand). Any remainder past u = 1/2 is smooth and bounded and
/// goes to ordinary quadrature.
pub fn power_law_partial_time(r: f64, q_upper: f64, kappa: f64) -> Result<f64> {
    if r >= 1.0 {
        return Err(Error::NoZero(r));
    }
    crate::ensure_finite(q_upper, "q_upper")?;
    if q_upper < 0.0 {
        return Err(Error::Domain(format!("need q_upper >= 0, got {q_upper}")));
    }
    let q_head = q_upper.min(0.5 * std::f64::consts::LN_2);
    let u0 = -(-2.0 * q_head).exp_m1();
    let mut sum = 0.0;
    let mut upow = u0.powf(1.0 - r);
    for k in 0..20_000u32 {
        let term = upow / (f64::from(k) + 1.0 - r);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        upow *= u0;
    }
    let mut t = 0.5 * sum;
    if q_upper > q_head {
        let mut f = |q: f64| (-(-2.0 * q).exp_m1()).powf(-r);
        t += adaptive(&mut f, q_head, q_upper, 1e-12, f64::MIN_POSITIVE)?;
    }
    Ok(t / kappa)
}

/// Analytic solution of the r = 1 member: `q(t) = ½·ln(1 + (e^{2q₀} − 1)e^{−2κt})`
/// — positive for all t, so no finite-time zero exists for r ≥ 1.
pub fn power_law_r1_analytic(t: f64, q0: f64, kappa: f64) -> f64 {
    0.5 * (((2.0 * q0).exp_m1()) * (-2.0 * kappa * t).exp()).ln_1p()
}

/// Terminal momentum sum `w_T = −(δ² + 2b(b+δ)(1 − k(q₀)))^{1/2}` — the
/// limit of w(q) as q ↓ 0 (note q₀ = 2a, so 1 − e^{−q₀} = 1 − e^{−2a} on
/// the line and the circle analogue uses 1 − E(2a)).
pub fn terminal_w(params: &ClosedFormParams) -> f64 {
    let bb = params.b * (params.b + params.delta);
    -(params.delta * params.delta
        + 2.0 * bb * one_minus_k(params.q0, params.domain))
        .sqrt()
}

/// Terminal values at collision.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TerminalValues {
    /// w_T < 0 by the closed formula.
    pub w_t: f64,
    /// q_T, the common position limit; available only from an integrated
    /// trajectory with a collision event (operationally q₁ at the event).
    pub q_t: Option<f64>,
}

/// w_T from the closed formula; q_T from the trajectory if one is supplied.
pub fn terminal_values(
    params: &ClosedFormParams,
    trajectory: Option<&Trajectory>,
) -> Result<TerminalValues> {
    let w_t = terminal_w(params);
    let q_t = match trajectory {
        None => None,
        Some(traj) => {
            if !traj.events.iter().any(|(kind, _)| *kind == EventKind::Collision) {
                return Err(Error::MissingData(
                    "q_T requested from a trajectory without a collision event".into(),
                ));
            }
            Some(traj.terminal.positions[0])
        }
    };
    Ok(TerminalValues { w_t, q_t })
}
