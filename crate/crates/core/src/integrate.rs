//! Adaptive embedded Runge–Kutta integration (Dormand–Prince 5(4) with
//! FSAL and fourth-order dense output), with event detection used to stop
//! at the collision threshold `gap ≤ q_min`.
//!
//! The core loop is dimension-generic over `&[f64]`; thin wrappers expose
//! the n-peakon system, the transformed 4-variable system, and the scalar
//! gap ODEs. Event times are localized by bisection on the dense output of
//! the accepted step containing the sign change.

use serde::{Deserialize, Serialize};

use crate::closed_form::{self, ClosedFormParams, CollisionMode, TransformedState};
use crate::dynamics::{rhs_n_peakon, PeakonState};
use crate::{Error, Result};

/// Tolerances and limits of the adaptive integrator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Relative tolerance per step (default 1e−10).
    pub rel_tol: f64,
    /// Absolute tolerance per step (default 1e−12).
    pub abs_tol: f64,
    /// Gap threshold of the collision event (default 1e−6).
    pub q_min: f64,
    /// Maximum number of accepted + rejected steps (default 10⁷).
    pub max_steps: u64,
    /// If set, sample the dense output on a uniform time grid of this
    /// spacing; if `None`, record every accepted step.
    pub dense_sample_dt: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            q_min: 1e-6,
            max_steps: 10_000_000,
            dense_sample_dt: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol <= self.rel_tol && self.rel_tol < 1.0) {
            return Err(Error::Config(format!(
                "need 0 < abs_tol <= rel_tol < 1, got abs_tol = {}, rel_tol = {}",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(self.q_min > 0.0) {
            return Err(Error::Config(format!("need q_min > 0, got {}", self.q_min)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        if let Some(dt) = self.dense_sample_dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("need dense_sample_dt > 0, got {dt}")));
            }
        }
        Ok(())
    }
}

/// Why an integration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// The monitored gap reached `q_min`.
    Collision,
    /// `max_steps` was exhausted.
    StepLimit,
    /// The state became non-finite, astronomically large, or the step size
    /// underflowed.
    Blowup,
}

/// A trajectory of the n-peakon system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Sampled states, starting with the initial one.
    pub samples: Vec<PeakonState>,
    /// Events encountered, as (kind, time) pairs.
    pub events: Vec<(EventKind, f64)>,
    /// State at the final time (event time if an event fired).
    pub terminal: PeakonState,
}

/// A trajectory of the transformed 4-variable system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformedTrajectory {
    pub samples: Vec<(f64, TransformedState)>,
    pub events: Vec<(EventKind, f64)>,
    pub terminal: (f64, TransformedState),
}

/// A trajectory of a scalar gap ODE, with the total time to the zero when
/// the event fired (event time plus the quadrature tail over [0, q_min]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarGapSolution {
    pub samples: Vec<(f64, f64)>,
    pub events: Vec<(EventKind, f64)>,
    pub terminal: (f64, f64),
    pub zero_time: Option<f64>,
}

/// Which scalar gap ODE to integrate.
#[derive(Debug, Clone, Copy)]
pub enum GapRhs<'a> {
    /// `q' = −f(q)` from the closed forms.
    AutonomousF(&'a ClosedFormParams),
    /// `q' = −κ(1 − e^{−2q})^{3/4}`.
    DominatingG(&'a ClosedFormParams),
    /// `q' = −κ(1 − e^{−2q})^r`.
    PowerLaw { r: f64, kappa: f64 },
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error coefficients (5th-order minus embedded 4th-order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const BLOWUP_MAGNITUDE: f64 = 1e14;

/// Dense interpolant over one accepted step [t, t + h].
struct DenseStep {
    t: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
    }
}

/// Raw output of the core integrator.
struct CoreSolution {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    events: Vec<(EventKind, f64)>,
    t_final: f64,
    y_final: Vec<f64>,
}

/// Initial step size by the classic two-probe heuristic.
fn initial_step(
    rhs: &mut dyn FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let n = y0.len();
    let sc: Vec<f64> = y0
        .iter()
        .map(|&y| cfg.abs_tol + cfg.rel_tol * y.abs())
        .collect();
    let rms = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(&x, &s)| (x / s) * (x / s)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    if t_end.is_finite() {
        h0 = h0.min((t_end - t0).abs());
    }
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(&y, &f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    rhs(t0 + h0, &y1, &mut f1)?;
    let df: Vec<f64> = f1.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = rms(&df) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok(h1.min(100.0 * h0))
}

/// Core adaptive loop. `event` is a continuous function of (t, y) that is
/// positive initially; integration stops when it first reaches zero, at a
/// time localized on the dense output. `t_end` may be infinite if an event
/// is supplied.
fn integrate_core(
    rhs: &mut dyn FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    mut event: Option<&mut dyn FnMut(f64, &[f64]) -> f64>,
    cfg: &IntegratorConfig,
) -> Result<CoreSolution> {
    cfg.validate()?;
    if !t_end.is_finite() && event.is_none() {
        return Err(Error::Config(
            "an infinite final time requires an event to stop on".into(),
        ));
    }
    if t_end < t0 {
        return Err(Error::Config(format!("t_end = {t_end} precedes t0 = {t0}")));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut times = vec![t0];
    let mut states = vec![y.clone()];
    let mut events = Vec::new();

    // Sampling bookkeeping for the uniform dense grid.
    let mut next_sample = cfg.dense_sample_dt.map(|dt| t0 + dt);

    let mut k1 = vec![0.0; n];
    rhs(t, &y, &mut k1)?;

    if let Some(ev) = event.as_deref_mut() {
        if ev(t, &y) <= 0.0 {
            events.push((EventKind::Collision, t));
            return Ok(CoreSolution { times, states, events, t_final: t, y_final: y });
        }
    }
    if t_end == t0 {
        return Ok(CoreSolution { times, states, events, t_final: t, y_final: y });
    }

    let mut h = initial_step(rhs, t0, &y, &k1, t_end, cfg)?;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut steps: u64 = 0;

    loop {
        if steps >= cfg.max_steps {
            events.push((EventKind::StepLimit, t));
            return Ok(CoreSolution { times, states, events, t_final: t, y_final: y });
        }
        steps += 1;
        if h < 1e-14 * t.abs().max(1.0) {
            events.push((EventKind::Blowup, t));
            return Ok(CoreSolution { times, states, events, t_final: t, y_final: y });
        }
        let mut last = false;
        if t_end.is_finite() && t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &ytmp, &mut k2)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &ytmp, &mut k3)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &ytmp, &mut k4)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &ytmp, &mut k5)?;
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &ytmp, &mut k6)?;
        for i in 0..n {
            y1[i] = y[i]
                + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs(t + h, &y1, &mut k7)?;

        let mut err_sq = 0.0;
        for i in 0..n {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                    + E7 * k7[i]);
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }

        // Accepted.
        let dense = {
            let mut rcont = [
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            DenseStep { t, h, rcont }
        };
        let t1 = t + h;

        // Event localization inside the accepted step.
        let mut event_theta: Option<f64> = None;
        if let Some(ev) = event.as_deref_mut() {
            if ev(t1, &y1) <= 0.0 {
                let mut lo = 0.0;
                let mut hi = 1.0;
                let mut probe = vec![0.0; n];
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    dense.eval(mid, &mut probe);
                    let g = ev(dense.t + mid * dense.h, &probe);
                    if g.abs() <= 1e-12 {
                        hi = mid;
                        break;
                    }
                    if g > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < f64::EPSILON {
                        break;
                    }
                }
                event_theta = Some(hi);
            }
        }
        let step_stop_t = event_theta.map(|th| t + th * h).unwrap_or(t1);

        // Dense-grid samples inside the step.
        if let Some(dt) = cfg.dense_sample_dt {
            let mut probe = vec![0.0; n];
            while let Some(ts) = next_sample {
                if ts > step_stop_t || ts > t1 {
                    break;
                }
                dense.eval((ts - t) / h, &mut probe);
                times.push(ts);
                states.push(probe.clone());
                next_sample = Some(ts + dt);
            }
        }

        if let Some(theta) = event_theta {
            let mut y_ev = vec![0.0; n];
            dense.eval(theta, &mut y_ev);
            let t_ev = t + theta * h;
            times.push(t_ev);
            states.push(y_ev.clone());
            events.push((EventKind::Collision, t_ev));
            return Ok(CoreSolution { times, states, events, t_final: t_ev, y_final: y_ev });
        }

        t = t1;
        std::mem::swap(&mut y, &mut y1);
        std::mem::swap(&mut k1, &mut k7);

        if cfg.dense_sample_dt.is_none() {
            times.push(t);
            states.push(y.clone());
        }

        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_MAGNITUDE) {
            events.push((EventKind::Blowup, t));
            return Ok(CoreSolution { times, states, events, t_final: t, y_final: y });
        }

        if last {
            if cfg.dense_sample_dt.is_some() {
                times.push(t);
                states.push(y.clone());
            }
            return Ok(CoreSolution { times, states, events, t_final: t, y_final: y });
        }

        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
}

/// Minimal pairwise gap between sorted positions (the collision monitor).
fn min_gap(positions: &[f64]) -> f64 {
    if positions.len() < 2 {
        return f64::INFINITY;
    }
    let mut sorted = positions.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn peakon_solution_to_trajectory(state0: &PeakonState, sol: CoreSolution) -> Trajectory {
    let n = state0.n();
    let to_state = |t: f64, y: &[f64]| PeakonState {
        t,
        positions: y[..n].to_vec(),
        momenta: y[n..].to_vec(),
        domain: state0.domain,
    };
    let samples: Vec<PeakonState> = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| to_state(t, y))
        .collect();
    let terminal = to_state(sol.t_final, &sol.y_final);
    Trajectory { samples, events: sol.events, terminal }
}

fn integrate_peakons(
    state0: &PeakonState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    state0.validate()?;
    let n = state0.n();
    let mut work = state0.clone();
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        work.t = t;
        work.positions.copy_from_slice(&y[..n]);
        work.momenta.copy_from_slice(&y[n..]);
        let (dq, dp) = rhs_n_peakon(&work)?;
        dy[..n].copy_from_slice(&dq);
        dy[n..].copy_from_slice(&dp);
        Ok(())
    };
    let q_min = cfg.q_min;
    let mut event = move |_t: f64, y: &[f64]| min_gap(&y[..n]) - q_min;
    let y0: Vec<f64> = state0
        .positions
        .iter()
        .chain(&state0.momenta)
        .copied()
        .collect();
    let sol = integrate_core(
        &mut rhs,
        state0.t,
        &y0,
        t_end,
        if n >= 2 { Some(&mut event) } else { None },
        cfg,
    )?;
    Ok(peakon_solution_to_trajectory(state0, sol))
}

/// Integrates the n-peakon system until the minimal gap reaches `q_min`.
pub fn integrate_to_collision(state0: &PeakonState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if state0.n() < 2 {
        return Err(Error::Config(
            "collision integration needs at least two peakons".into(),
        ));
    }
    integrate_peakons(state0, f64::INFINITY, cfg)
}

/// Integrates the n-peakon system to a fixed final time (stopping early if
/// the collision event fires).
pub fn integrate_fixed_time(
    state0: &PeakonState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    crate::ensure_finite(t_end, "final time")?;
    integrate_peakons(state0, t_end, cfg)
}

/// Integrates the transformed 4-variable system from the closed-form
/// initial data until q reaches `q_min`.
pub fn integrate_transformed(
    params: &ClosedFormParams,
    cfg: &IntegratorConfig,
) -> Result<TransformedTrajectory> {
    if cfg.q_min >= params.q0 {
        return Err(Error::Config(format!(
            "q_min = {} must be below the initial gap q0 = {}",
            cfg.q_min, params.q0
        )));
    }
    let domain = params.domain;
    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let st = TransformedState { q: y[0], p: y[1], w: y[2], z: y[3] };
        dy.copy_from_slice(&closed_form::transformed_rhs(&st, domain));
        Ok(())
    };
    let q_min = cfg.q_min;
    let mut event = move |_t: f64, y: &[f64]| y[0] - q_min;
    let st0 = closed_form::transformed_closed_form(params.q0, params)?;
    let y0 = [st0.q, st0.p, st0.w, st0.z];
    let sol = integrate_core(&mut rhs, 0.0, &y0, f64::INFINITY, Some(&mut event), cfg)?;
    let to_state =
        |y: &[f64]| TransformedState { q: y[0], p: y[1], w: y[2], z: y[3] };
    Ok(TransformedTrajectory {
        samples: sol
            .times
            .iter()
            .zip(&sol.states)
            .map(|(&t, y)| (t, to_state(y)))
            .collect(),
        events: sol.events,
        terminal: (sol.t_final, to_state(&sol.y_final)),
    })
}

/// Integrates a scalar gap ODE from q(0) = q0.
///
/// With `t_end = None` the run stops at the event q = `q_min` and the total
/// time to the zero is reported as the event time plus the quadrature tail
/// `∫₀^{q_min} dq/speed`; a zero-seeking run of the power law with r ≥ 1
/// fails with [`Error::NoZero`]. With `t_end = Some(te)` the run goes to te
/// (still stopping early at q = q_min if crossed).
pub fn integrate_scalar_gap(
    q0: f64,
    rhs_kind: GapRhs<'_>,
    cfg: &IntegratorConfig,
    t_end: Option<f64>,
) -> Result<ScalarGapSolution> {
    if !(q0 > 0.0) {
        return Err(Error::Config(format!("need q0 > 0, got {q0}")));
    }
    if t_end.is_none() {
        if let GapRhs::PowerLaw { r, .. } = rhs_kind {
            if r >= 1.0 {
                return Err(Error::NoZero(r));
            }
        }
        if cfg.q_min >= q0 {
            return Err(Error::Config(format!(
                "q_min = {} must be below the initial gap q0 = {}",
                cfg.q_min, q0
            )));
        }
    }
    // The speed functions are only meaningful for q > 0; trial stages that
    // overshoot past zero see a resting equilibrium instead of NaNs.
    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let q = y[0];
        dy[0] = if q <= 0.0 {
            0.0
        } else {
            match rhs_kind {
                GapRhs::AutonomousF(p) => closed_form::autonomous_gap_rhs(q.min(p.q0), p)?,
                GapRhs::DominatingG(p) => closed_form::dominating_gap_rhs(q, p),
                GapRhs::PowerLaw { r, kappa } => {
                    -kappa * (-(-2.0 * q).exp_m1()).powf(r)
                }
            }
        };
        Ok(())
    };
    let q_min = cfg.q_min;
    let mut event = move |_t: f64, y: &[f64]| y[0] - q_min;
    let sol = integrate_core(
        &mut rhs,
        0.0,
        &[q0],
        t_end.unwrap_or(f64::INFINITY),
        Some(&mut event),
        cfg,
    )?;
    let zero_time = match sol
        .events
        .iter()
        .find(|(kind, _)| *kind == EventKind::Collision)
    {
        None => None,
        Some(&(_, t_ev)) => {
            let tail = match rhs_kind {
                GapRhs::AutonomousF(p) => {
                    closed_form::partial_collision_time(p, q_min, CollisionMode::ExactF)?
                }
                GapRhs::DominatingG(p) => {
                    closed_form::partial_collision_time(p, q_min, CollisionMode::DominatingG)?
                }
                GapRhs::PowerLaw { r, kappa } => {
                    closed_form::power_law_partial_time(r, q_min, kappa)?
                }
            };
            Some(t_ev + tail)
        }
    };
    Ok(ScalarGapSolution {
        samples: sol
            .times
            .iter()
            .zip(&sol.states)
            .map(|(&t, y)| (t, y[0]))
            .collect(),
        events: sol.events,
        terminal: (sol.t_final, sol.y_final[0]),
        zero_time,
    })
}
