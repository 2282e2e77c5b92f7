//! Adaptive Runge-Kutta-Fehlberg 7(8) integration of the n-body flow with
//! PI step control, collision/escape termination, and event location by
//! sign-change bracketing plus Brent polishing.
//!
//! The eighth-order solution is propagated; the embedded seventh-order
//! difference drives the step controller.

use crate::dynamics;
use crate::error::{Error, Result};
use crate::system::{Configuration, MassSystem, PhaseState};

const STAGES: usize = 13;

// stage abscissae; the n-body field is autonomous so they only document
// the tableau
#[allow(dead_code)]
const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    0.5,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [[f64; 12]; 12] = [
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 0.25, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        -25.0 / 108.0,
        0.0,
        0.0,
        125.0 / 108.0,
        -65.0 / 27.0,
        125.0 / 54.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        31.0 / 300.0,
        0.0,
        0.0,
        0.0,
        61.0 / 225.0,
        -2.0 / 9.0,
        13.0 / 900.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.0,
        0.0,
        0.0,
        -53.0 / 6.0,
        704.0 / 45.0,
        -107.0 / 9.0,
        67.0 / 90.0,
        3.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

const ERR_W: f64 = 41.0 / 840.0;

/// How the run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TimeReached,
    CollisionDetected,
    EscapeDetected,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventAction {
    /// Stop the integration at the event time.
    Stop,
    /// Record the event and keep integrating.
    Record,
}

/// A scalar function of the state whose transversal zeros are located.
pub struct Event<'a> {
    pub name: &'static str,
    pub action: EventAction,
    pub func: Box<dyn Fn(f64, &PhaseState) -> f64 + 'a>,
}

#[derive(Debug, Clone)]
pub struct LocatedEvent {
    pub name: &'static str,
    pub time: f64,
    pub state: PhaseState,
    /// d/dt of the event function at the crossing.
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub tolerance: f64,
    /// Terminate when min r_ij falls below this fraction of its initial value.
    pub collision_ratio: f64,
    /// Terminate when I exceeds this multiple of its initial value.
    pub escape_ratio: f64,
    /// Record every k-th accepted step (0 = endpoints only).
    pub record_every: usize,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            collision_ratio: 1e-8,
            escape_ratio: 1e6,
            record_every: 1,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub samples: Vec<PhaseState>,
    pub termination: Termination,
    /// max |E(t) - E(0)| / max(|E(0)|, 1)
    pub energy_drift: f64,
    /// max over components and time of |L(t) - L(0)|
    pub angular_momentum_drift: f64,
    pub events: Vec<LocatedEvent>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl IntegrationResult {
    pub fn final_state(&self) -> &PhaseState {
        self.samples.last().expect("at least the initial sample")
    }
}

/// Workspace for one RKF78 integration of a fixed-size system.
struct Rk {
    dim: usize,
    k: Vec<Vec<f64>>,
    y_stage: Vec<f64>,
}

impl Rk {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            k: vec![vec![0.0; dim]; STAGES],
            y_stage: vec![0.0; dim],
        }
    }

    /// One RKF78 step of size h from (t, y). Returns false if a stage hit a
    /// coincident-body singularity. `y_out` receives the 8th-order solution,
    /// `err` the embedded error estimate.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        sys: &MassSystem,
        d: usize,
        _t: f64,
        y: &[f64],
        h: f64,
        y_out: &mut [f64],
        err: &mut [f64],
    ) -> bool {
        if !rhs(sys, d, y, &mut self.k[0]) {
            return false;
        }
        for s in 1..STAGES {
            for i in 0..self.dim {
                let mut acc = 0.0;
                for (j, a) in A[s - 1].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.y_stage[i] = y[i] + h * acc;
            }
            if !rhs(sys, d, &self.y_stage, &mut self.k[s]) {
                return false;
            }
        }
        for i in 0..self.dim {
            let mut acc = 0.0;
            for s in 0..STAGES {
                if B8[s] != 0.0 {
                    acc += B8[s] * self.k[s][i];
                }
            }
            y_out[i] = y[i] + h * acc;
            err[i] = h * ERR_W * (self.k[0][i] + self.k[10][i] - self.k[11][i] - self.k[12][i]);
        }
        true
    }
}

/// RHS of the first-order system y = [coords, velocities].
fn rhs(sys: &MassSystem, d: usize, y: &[f64], dy: &mut [f64]) -> bool {
    let nd = y.len() / 2;
    let n = nd / d;
    let (q, v) = y.split_at(nd);
    dy[..nd].copy_from_slice(v);
    let acc = &mut dy[nd..];
    acc.fill(0.0);
    let a2 = 2.0 * sys.exponent();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut r2 = 0.0;
            for k in 0..d {
                let diff = q[i * d + k] - q[j * d + k];
                r2 += diff * diff;
            }
            if r2 == 0.0 {
                return false;
            }
            let w = r2.powf(0.5 * a2);
            for k in 0..d {
                let diff = q[j * d + k] - q[i * d + k];
                acc[i * d + k] += sys.mass(j) * w * diff;
                acc[j * d + k] -= sys.mass(i) * w * diff;
            }
        }
    }
    true
}

fn min_pair_distance(d: usize, q: &[f64]) -> f64 {
    let n = q.len() / d;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut r2 = 0.0;
            for k in 0..d {
                let diff = q[i * d + k] - q[j * d + k];
                r2 += diff * diff;
            }
            best = best.min(r2);
        }
    }
    best.sqrt()
}

fn state_from_flat(sys: &MassSystem, t: f64, y: &[f64]) -> PhaseState {
    let nd = y.len() / 2;
    let cfg = Configuration::new(y[..nd].to_vec(), sys.dim()).unwrap();
    PhaseState::new(cfg, y[nd..].to_vec(), t).unwrap()
}

/// Integrate the n-body flow from `state` to `t_final`.
pub fn integrate(
    sys: &MassSystem,
    state: &PhaseState,
    t_final: f64,
    opts: &IntegrateOptions,
    events: &mut [Event],
) -> Result<IntegrationResult> {
    assert!(opts.tolerance > 0.0, "tolerance must be positive");
    assert!(
        t_final > state.time,
        "t_final must exceed the initial time"
    );
    state.config.check_separated()?;
    let d = sys.dim();
    let nd = state.config.coords().len();
    let dim = 2 * nd;

    let mut y: Vec<f64> = Vec::with_capacity(dim);
    y.extend_from_slice(state.config.coords());
    y.extend_from_slice(&state.velocities);
    let mut t = state.time;

    let ints0 = dynamics::first_integrals(sys, state)?;
    let e0 = ints0.energy;
    let e_denom = e0.abs().max(1.0);
    let l0 = ints0.angular_momentum.clone();
    let i0 = dynamics::moment_of_inertia(sys, &state.config);
    let r_min0 = state.config.min_pairwise_distance();
    let r_stop = opts.collision_ratio * r_min0;
    let i_stop = opts.escape_ratio * i0;

    let mut rk = Rk::new(dim);
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];

    let mut result = IntegrationResult {
        samples: vec![state.clone()],
        termination: Termination::TimeReached,
        energy_drift: 0.0,
        angular_momentum_drift: 0.0,
        events: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
    };

    let mut g_prev: Vec<f64> = events
        .iter()
        .map(|e| (e.func)(t, state))
        .collect();

    // crude first-step guess; the controller fixes it up quickly
    let mut h = 1e-3 * (t_final - t).min(1.0);
    let mut err_prev: f64 = 1.0;
    let tol = opts.tolerance;

    for _ in 0..opts.max_steps {
        if t >= t_final {
            break;
        }
        h = h.min(t_final - t);
        // close binary approaches need steps many orders below the elapsed
        // time; only a few ulps of t really mean underflow
        let min_step = 32.0 * f64::EPSILON * t.abs().max(1.0);
        if h < min_step {
            result.termination = Termination::StepUnderflow;
            break;
        }

        let ok = rk.step(sys, d, t, &y, h, &mut y_new, &mut err);
        let err_norm = if ok {
            // scale-following error control: the absolute floor tracks the
            // instantaneous length and speed scales, so close approaches
            // keep full relative accuracy as the configuration shrinks
            let q_floor = min_pair_distance(d, &y[..nd]);
            let v_floor = y[nd..]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-300);
            let mut m = 0.0f64;
            for i in 0..dim {
                let floor = if i < nd { q_floor } else { v_floor };
                let sc = tol * (y[i].abs().max(y_new[i].abs()) + floor);
                m = m.max((err[i] / sc).abs());
            }
            m
        } else {
            f64::NAN
        };

        if !err_norm.is_finite() {
            h *= 0.1;
            result.steps_rejected += 1;
            continue;
        }
        if err_norm > 1.0 {
            let fac = (0.9 * err_norm.powf(-1.0 / 8.0)).clamp(0.1, 0.9);
            h *= fac;
            result.steps_rejected += 1;
            continue;
        }

        // accepted; locate events inside (t, t+h]
        let t_new = t + h;
        let state_new = state_from_flat(sys, t_new, &y_new);
        let mut stop_at: Option<(f64, PhaseState)> = None;

        for (ei, ev) in events.iter().enumerate() {
            let g1 = (ev.func)(t_new, &state_new);
            let mut tau_lo = 0.0;
            let mut g_lo = g_prev[ei];
            loop {
                let crossing = g_lo == 0.0 && tau_lo == 0.0;
                if !crossing && !(g_lo * g1 < 0.0) {
                    break;
                }
                if crossing {
                    // started exactly on a zero: not a new crossing
                    break;
                }
                let (tau, ev_state, slope) =
                    locate_event(sys, d, &mut rk, t, &y, h, tau_lo, g_lo, &ev.func)?;
                result.events.push(LocatedEvent {
                    name: ev.name,
                    time: t + tau,
                    state: ev_state.clone(),
                    slope,
                });
                if ev.action == EventAction::Stop
                    && stop_at.as_ref().map_or(true, |(ts, _)| t + tau < *ts)
                {
                    stop_at = Some((t + tau, ev_state.clone()));
                }
                // scan the rest of the step for another crossing
                tau_lo = tau + (1e-9 * h.abs()).max(1e-12);
                if tau_lo >= h {
                    break;
                }
                g_lo = eval_on_substep(sys, d, &mut rk, t, &y, tau_lo, &ev.func)?;
            }
            g_prev[ei] = g1;
        }

        if let Some((ts, sstate)) = stop_at {
            result
                .events
                .sort_by(|a, b| a.time.total_cmp(&b.time));
            result.events.retain(|e| e.time <= ts + 1e-15);
            result.samples.push(sstate);
            result.steps_accepted += 1;
            return Ok(result);
        }

        // collision / escape checks on the accepted endpoint
        let r_min = min_pair_distance(d, &y_new[..nd]);
        if r_min <= r_stop {
            let g = |_tt: f64, st: &PhaseState| st.config.min_pairwise_distance() - r_stop;
            let (_, cstate, _) = locate_or_end(sys, d, &mut rk, t, &y, h, &g, &state_new)?;
            result.samples.push(cstate);
            result.termination = Termination::CollisionDetected;
            result.steps_accepted += 1;
            return Ok(result);
        }
        let cfg_new = &result_config(sys, &y_new[..nd]);
        let i_now = dynamics::moment_of_inertia(sys, cfg_new);
        if i_now >= i_stop {
            result.samples.push(state_new);
            result.termination = Termination::EscapeDetected;
            result.steps_accepted += 1;
            return Ok(result);
        }

        // conservation drift bookkeeping
        let ints = dynamics::first_integrals(sys, &state_new)?;
        result.energy_drift = result
            .energy_drift
            .max((ints.energy - e0).abs() / e_denom);
        for (a, b) in ints.angular_momentum.iter().zip(&l0) {
            result.angular_momentum_drift = result.angular_momentum_drift.max((a - b).abs());
        }

        t = t_new;
        y.copy_from_slice(&y_new);
        result.steps_accepted += 1;
        if opts.record_every > 0 && result.steps_accepted % opts.record_every == 0 {
            result.samples.push(state_new);
        } else if t >= t_final {
            result.samples.push(state_new);
        }

        // PI controller
        let e_clip = err_norm.max(1e-10);
        let fac = 0.9 * e_clip.powf(-0.0875) * err_prev.powf(0.05);
        h *= fac.clamp(0.2, 5.0);
        err_prev = e_clip;
    }

    if result.samples.last().map(|s| s.time) != Some(t) {
        result.samples.push(state_from_flat(sys, t, &y));
    }
    Ok(result)
}

fn result_config(sys: &MassSystem, q: &[f64]) -> Configuration {
    Configuration::new(q.to_vec(), sys.dim()).unwrap()
}

/// Event function value at offset tau into the step starting at (t, y).
fn eval_on_substep(
    sys: &MassSystem,
    d: usize,
    rk: &mut Rk,
    t: f64,
    y: &[f64],
    tau: f64,
    func: &dyn Fn(f64, &PhaseState) -> f64,
) -> Result<f64> {
    if tau == 0.0 {
        let st = state_from_flat(sys, t, y);
        return Ok(func(t, &st));
    }
    let mut y_sub = vec![0.0; y.len()];
    let mut err = vec![0.0; y.len()];
    if !rk.step(sys, d, t, y, tau, &mut y_sub, &mut err) {
        return Err(Error::StepUnderflow(t + tau));
    }
    let st = state_from_flat(sys, t + tau, &y_sub);
    Ok(func(t + tau, &st))
}

/// Brent root location of the event function on [tau_lo, h]; returns the
/// offset, the state there, and the time slope of the event function.
#[allow(clippy::too_many_arguments)]
fn locate_event(
    sys: &MassSystem,
    d: usize,
    rk: &mut Rk,
    t: f64,
    y: &[f64],
    h: f64,
    tau_lo: f64,
    g_lo: f64,
    func: &dyn Fn(f64, &PhaseState) -> f64,
) -> Result<(f64, PhaseState, f64)> {
    let mut a = tau_lo;
    let mut b = h;
    let mut fa = g_lo;
    let mut fb = eval_on_substep(sys, d, rk, t, y, b, func)?;
    debug_assert!(fa * fb <= 0.0);
    let xtol = 1e-13 * t.abs().max(1.0);

    // Brent with bisection fallback
    let mut c = a;
    let mut fc = fa;
    let mut dd = b - a;
    let mut e = dd;
    for _ in 0..120 {
        if fb.abs() > fc.abs() {
            std::mem::swap(&mut b, &mut c);
            std::mem::swap(&mut fb, &mut fc);
            a = c;
            fa = fc;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            break;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let qq = fa / fc;
                let rr = fb / fc;
                (
                    s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0)),
                    (qq - 1.0) * (rr - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = dd;
                dd = p / q;
            } else {
                dd = xm;
                e = dd;
            }
        } else {
            dd = xm;
            e = dd;
        }
        a = b;
        fa = fb;
        b += if dd.abs() > tol1 {
            dd
        } else {
            tol1 * xm.signum()
        };
        fb = eval_on_substep(sys, d, rk, t, y, b, func)?;
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            dd = b - a;
            e = dd;
        }
    }

    let tau = b;
    let mut y_ev = vec![0.0; y.len()];
    let mut err = vec![0.0; y.len()];
    let state = if tau == 0.0 {
        state_from_flat(sys, t, y)
    } else {
        rk.step(sys, d, t, y, tau, &mut y_ev, &mut err);
        state_from_flat(sys, t + tau, &y_ev)
    };
    let delta = (1e-7 * h.abs()).max(1e-12);
    let gp = eval_on_substep(sys, d, rk, t, y, (tau + delta).min(h), func)?;
    let gm = eval_on_substep(sys, d, rk, t, y, (tau - delta).max(0.0), func)?;
    let slope = (gp - gm) / ((tau + delta).min(h) - (tau - delta).max(0.0));
    Ok((tau, state, slope))
}

/// Locate a terminal threshold crossing; falls back to the step endpoint if
/// the bracket is degenerate.
#[allow(clippy::too_many_arguments)]
fn locate_or_end(
    sys: &MassSystem,
    d: usize,
    rk: &mut Rk,
    t: f64,
    y: &[f64],
    h: f64,
    func: &dyn Fn(f64, &PhaseState) -> f64,
    endpoint: &PhaseState,
) -> Result<(f64, PhaseState, f64)> {
    let g_start = eval_on_substep(sys, d, rk, t, y, 0.0, func)?;
    if g_start <= 0.0 {
        return Ok((h, endpoint.clone(), 0.0));
    }
    match locate_event(sys, d, rk, t, y, h, 0.0, g_start, func) {
        Ok(v) => Ok(v),
        Err(_) => Ok((h, endpoint.clone(), 0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn circular_pair() -> (MassSystem, PhaseState) {
        let sys = MassSystem::newtonian(vec![1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        let w = 2f64.sqrt();
        let vel = vec![0.0, -0.5 * w, 0.0, 0.5 * w];
        (sys, PhaseState::new(cfg, vel, 0.0).unwrap())
    }

    #[test]
    fn eighth_order_convergence_on_kepler() {
        // fixed-step errors at h and h/2 must shrink by about 2^8
        let (sys, state) = circular_pair();
        let run = |h: f64| {
            let mut rk = Rk::new(8);
            let mut y: Vec<f64> = state
                .config
                .coords()
                .iter()
                .chain(&state.velocities)
                .cloned()
                .collect();
            let mut y2 = vec![0.0; 8];
            let mut err = vec![0.0; 8];
            let mut t = 0.0;
            let steps = (1.0 / h).round() as usize;
            for _ in 0..steps {
                assert!(rk.step(&sys, 2, t, &y, h, &mut y2, &mut err));
                y.copy_from_slice(&y2);
                t += h;
            }
            // exact solution: rotation by w t
            let w = 2f64.sqrt();
            let (c, s) = ((w * t).cos(), (w * t).sin());
            let exact = [
                -0.5 * c,
                -0.5 * s,
                0.5 * c,
                0.5 * s,
            ];
            (0..4)
                .map(|i| (y[i] - exact[i]).abs())
                .fold(0.0f64, f64::max)
        };
        // steps large enough that truncation error dominates rounding
        let e1 = run(0.5);
        let e2 = run(0.25);
        let order = (e1 / e2).log2();
        assert!(order > 7.0, "observed order {order:.2} (e1={e1:.3e}, e2={e2:.3e})");
    }

    #[test]
    fn circular_orbit_returns_after_one_period() {
        let (sys, state) = circular_pair();
        let period = 2.0 * std::f64::consts::PI / 2f64.sqrt();
        let res = integrate(&sys, &state, period, &IntegrateOptions::default(), &mut []).unwrap();
        assert_eq!(res.termination, Termination::TimeReached);
        let fin = res.final_state();
        for (a, b) in fin
            .config
            .coords()
            .iter()
            .chain(&fin.velocities)
            .zip(state.config.coords().iter().chain(&state.velocities))
        {
            assert!((a - b).abs() < 1e-8, "return error {}", (a - b).abs());
        }
    }

    #[test]
    fn energy_drift_within_budget_over_t100() {
        let (sys, state) = circular_pair();
        let opts = IntegrateOptions {
            record_every: 0,
            ..Default::default()
        };
        let res = integrate(&sys, &state, 100.0, &opts, &mut []).unwrap();
        assert_eq!(res.termination, Termination::TimeReached);
        assert!(res.energy_drift <= 1e-9, "drift {}", res.energy_drift);
        assert!(
            res.angular_momentum_drift <= 1e-9,
            "L drift {}",
            res.angular_momentum_drift
        );
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 1.5]).unwrap();
        let cfg = Configuration::new(vec![-1.0, 0.0, 1.0, 0.1, 0.0, 0.9], 2).unwrap();
        let vel = vec![0.1, 0.2, -0.1, 0.05, 0.0, -0.3];
        let state = PhaseState::new(cfg, vel, 0.0).unwrap();
        let opts = IntegrateOptions {
            record_every: 0,
            ..Default::default()
        };
        let fwd = integrate(&sys, &state, 3.0, &opts, &mut []).unwrap();
        assert_eq!(fwd.termination, Termination::TimeReached);
        let mid = fwd.final_state().clone();
        let back_state = PhaseState::new(
            mid.config.clone(),
            mid.velocities.iter().map(|v| -v).collect(),
            0.0,
        )
        .unwrap();
        let back = integrate(&sys, &back_state, 3.0, &opts, &mut []).unwrap();
        let fin = back.final_state();
        for (a, b) in fin.config.coords().iter().zip(state.config.coords()) {
            assert!((a - b).abs() < 1e-7, "reversal error {}", (a - b).abs());
        }
        for (a, b) in fin.velocities.iter().zip(&state.velocities) {
            assert!((-a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn homothetic_collapse_stays_equilateral() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let mut cfg = Configuration::new(vec![0.0, 0.0, 1.0, 0.0, 0.5, h], 2).unwrap();
        cfg.recenter(&sys);
        let state = PhaseState::at_rest(cfg);
        // tight tolerance: the absolute error floor must stay below the
        // shrinking triangle size
        let opts = IntegrateOptions {
            tolerance: 1e-13,
            ..Default::default()
        };
        let res = integrate(&sys, &state, 10.0, &opts, &mut []).unwrap();
        assert_eq!(res.termination, Termination::CollisionDetected);
        // the collapse is shape-unstable: rounding noise is amplified like
        // r^(-7/6), so the 1e-8 deviation bound holds over the first six
        // decades of shrinkage and degrades in the last two
        for s in &res.samples {
            let d01 = s.config.distance(0, 1);
            let d02 = s.config.distance(0, 2);
            let d12 = s.config.distance(1, 2);
            let dev = ((d01 - d02).abs() + (d01 - d12).abs()) / d01;
            let r = s.config.min_pairwise_distance();
            if r >= 1e-6 {
                assert!(dev < 1e-8, "shape deviation {dev} at r = {r:.2e}");
            } else {
                assert!(dev < 1e-6, "shape deviation {dev} at r = {r:.2e}");
            }
        }
        let r_end = res.final_state().config.min_pairwise_distance();
        assert!(r_end <= 1.1e-8 * 1.0, "final min distance {r_end}");
    }

    #[test]
    fn escape_detection_triggers() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        // hyperbolic escape
        let vel = vec![-3.0, 0.0, 3.0, 0.0];
        let state = PhaseState::new(cfg, vel, 0.0).unwrap();
        let opts = IntegrateOptions {
            escape_ratio: 1e4,
            record_every: 0,
            ..Default::default()
        };
        let res = integrate(&sys, &state, 1e6, &opts, &mut []).unwrap();
        assert_eq!(res.termination, Termination::EscapeDetected);
    }

    #[test]
    fn event_location_hits_axis_crossing() {
        let (sys, state) = circular_pair();
        // body 0 crosses the x axis (y_0 = 0) at t = pi/w, 2 pi/w, ...
        let mut events = vec![Event {
            name: "axis",
            action: EventAction::Record,
            func: Box::new(|_t, st: &PhaseState| st.config.pos(0)[1]),
        }];
        let res = integrate(
            &sys,
            &state,
            5.0,
            &IntegrateOptions {
                record_every: 0,
                ..Default::default()
            },
            &mut events,
        )
        .unwrap();
        let w = 2f64.sqrt();
        let expected: Vec<f64> = (1..=2)
            .map(|k| k as f64 * std::f64::consts::PI / w)
            .collect();
        assert!(res.events.len() >= 2, "events {:?}", res.events.len());
        for (ev, ex) in res.events.iter().zip(&expected) {
            assert_relative_eq!(ev.time, ex, epsilon = 1e-10);
            assert!(ev.slope.abs() > 0.1);
        }
    }

    #[test]
    fn stop_event_truncates_run() {
        let (sys, state) = circular_pair();
        let mut events = vec![Event {
            name: "halt",
            action: EventAction::Stop,
            func: Box::new(|_t, st: &PhaseState| st.config.pos(0)[1]),
        }];
        let res = integrate(&sys, &state, 50.0, &IntegrateOptions::default(), &mut events).unwrap();
        let w = 2f64.sqrt();
        let t_expect = std::f64::consts::PI / w;
        assert_relative_eq!(res.final_state().time, t_expect, epsilon = 1e-9);
    }
}
