//! Syzygy sequences of the planar zero-angular-momentum three-body problem:
//! transversal zeros of the signed triangle area, flavored by which body
//! sits between the other two.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::integrator::{integrate, Event, EventAction, IntegrateOptions, Termination};
use crate::rng::{par_map_tasks, task_rng};
use crate::system::{Configuration, MassSystem, PhaseState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyzygyTermination {
    Horizon,
    Collision,
    Escape,
    DegenerateCollinear,
}

#[derive(Debug, Clone)]
pub struct SyzygyEvent {
    pub time: f64,
    /// 1, 2 or 3: the body between the other two.
    pub flavor: u8,
    pub signed_area_slope: f64,
    /// Barycentric coordinate of the middle body along the outer segment.
    pub barycentric: f64,
    /// False when the event fell inside a close-approach window.
    pub trusted: bool,
}

#[derive(Debug, Clone)]
pub struct SyzygySequence {
    pub events: Vec<SyzygyEvent>,
    pub termination: SyzygyTermination,
    /// Crossings dropped for failing transversality or the betweenness gate.
    pub rejected: usize,
}

impl SyzygySequence {
    pub fn word(&self) -> Vec<u8> {
        self.events.iter().map(|e| e.flavor).collect()
    }

    pub fn has_adjacent_repeat(&self) -> bool {
        self.events.windows(2).any(|w| w[0].flavor == w[1].flavor)
    }
}

#[derive(Debug, Clone)]
pub struct SyzygyOptions {
    pub integrate: IntegrateOptions,
    /// |slope| below which a crossing does not count as transversal.
    pub slope_tol: f64,
    /// Barycentric margin for the strict betweenness test.
    pub between_margin: f64,
    /// Events inside min r_ij < this fraction of the initial minimum are
    /// flagged untrusted.
    pub close_approach_ratio: f64,
    /// |signed area| / I below this over the opening window means the orbit
    /// is collinear for good.
    pub collinear_tol: f64,
}

impl Default for SyzygyOptions {
    fn default() -> Self {
        Self {
            integrate: IntegrateOptions {
                record_every: 1,
                ..Default::default()
            },
            slope_tol: 1e-9,
            between_margin: 1e-8,
            close_approach_ratio: 1e-4,
            collinear_tol: 1e-12,
        }
    }
}

/// Signed area (twice the oriented triangle area) of the three bodies.
pub fn signed_area(cfg: &Configuration) -> f64 {
    let (a, b, c) = (cfg.pos(0), cfg.pos(1), cfg.pos(2));
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Which body lies strictly between the other two, with its barycentric
/// coordinate; None if the betweenness gate fails.
fn middle_body(cfg: &Configuration, margin: f64) -> Option<(u8, f64)> {
    for mid in 0..3usize {
        let (i, j) = match mid {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (qi, qj, qm) = (cfg.pos(i), cfg.pos(j), cfg.pos(mid));
        let dx = qj[0] - qi[0];
        let dy = qj[1] - qi[1];
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return None;
        }
        let t = ((qm[0] - qi[0]) * dx + (qm[1] - qi[1]) * dy) / len2;
        if t > margin && t < 1.0 - margin {
            return Some((mid as u8 + 1, t));
        }
    }
    None
}

/// Extract the syzygy sequence of a planar zero-angular-momentum three-body
/// state up to `t_final`.
pub fn extract_syzygies(
    sys: &MassSystem,
    state: &PhaseState,
    t_final: f64,
    opts: &SyzygyOptions,
) -> Result<SyzygySequence> {
    if sys.n() != 3 || sys.dim() != 2 {
        return Err(Error::InvalidInstance(
            "syzygy extraction is defined for the planar three-body problem".into(),
        ));
    }
    let ints = crate::dynamics::first_integrals(sys, state)?;
    let l = ints.angular_momentum[0].abs();
    if l > 1e-10 {
        return Err(Error::NonzeroAngularMomentum(l));
    }

    let mut events = vec![Event {
        name: "signed-area",
        action: EventAction::Record,
        func: Box::new(|_t, st: &PhaseState| signed_area(&st.config)),
    }];
    let res = integrate(sys, state, t_final, &opts.integrate, &mut events)?;

    // persistent collinearity: the area never leaves zero on the opening
    // window (relative to the moment of inertia, which is scale free)
    let window_end = state.time + (t_final - state.time).min(1.0);
    let mut max_rel_area = 0.0f64;
    for s in &res.samples {
        if s.time > window_end {
            break;
        }
        let i_mom = crate::dynamics::moment_of_inertia(sys, &s.config);
        max_rel_area = max_rel_area.max(signed_area(&s.config).abs() / i_mom.max(1e-300));
    }
    if max_rel_area < opts.collinear_tol {
        return Ok(SyzygySequence {
            events: Vec::new(),
            termination: SyzygyTermination::DegenerateCollinear,
            rejected: 0,
        });
    }

    let r_min0 = state.config.min_pairwise_distance();
    let mut out = Vec::new();
    let mut rejected = 0usize;
    for ev in &res.events {
        if ev.slope.abs() <= opts.slope_tol {
            rejected += 1;
            continue;
        }
        match middle_body(&ev.state.config, opts.between_margin) {
            Some((flavor, t)) => {
                let trusted = ev.state.config.min_pairwise_distance()
                    >= opts.close_approach_ratio * r_min0;
                out.push(SyzygyEvent {
                    time: ev.time,
                    flavor,
                    signed_area_slope: ev.slope,
                    barycentric: t,
                    trusted,
                });
            }
            None => rejected += 1,
        }
    }

    let termination = match res.termination {
        Termination::TimeReached => SyzygyTermination::Horizon,
        Termination::CollisionDetected => SyzygyTermination::Collision,
        Termination::EscapeDetected => SyzygyTermination::Escape,
        Termination::StepUnderflow => SyzygyTermination::Collision,
    };

    Ok(SyzygySequence {
        events: out,
        termination,
        rejected,
    })
}

/// Zero-angular-momentum sample at a prescribed negative energy: positions
/// in the unit ball, Gaussian velocities sheared to kill the angular
/// momentum and rescaled onto the energy level.
pub fn sample_zero_l_state(
    sys: &MassSystem,
    rng: &mut impl Rng,
    energy: f64,
) -> Result<PhaseState> {
    assert!(energy < 0.0, "census samples want negative energy");
    let n = sys.n();
    for _ in 0..400 {
        let mut coords = Vec::with_capacity(2 * n);
        for _ in 0..n {
            // uniform in the unit disc
            let r: f64 = rng.random_range(0.0f64..1.0).sqrt();
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            coords.push(r * t.cos());
            coords.push(r * t.sin());
        }
        let mut cfg = Configuration::new(coords, 2)?;
        if cfg.min_pairwise_distance() < 0.1 {
            continue;
        }
        cfg.recenter(sys);

        let mut vel: Vec<f64> = (0..2 * n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        // remove the net momentum
        let m_tot = sys.total_mass();
        for k in 0..2 {
            let p: f64 = (0..n).map(|i| sys.mass(i) * vel[i * 2 + k]).sum();
            for i in 0..n {
                vel[i * 2 + k] -= p / m_tot;
            }
        }
        // shear away the angular momentum: v -= omega J q
        let mut l = 0.0;
        let mut i_mom = 0.0;
        for i in 0..n {
            let q = cfg.pos(i);
            l += sys.mass(i) * (q[0] * vel[i * 2 + 1] - q[1] * vel[i * 2]);
            i_mom += sys.mass(i) * (q[0] * q[0] + q[1] * q[1]);
        }
        let omega = l / i_mom;
        for i in 0..n {
            let q = cfg.pos(i);
            vel[i * 2] -= omega * (-q[1]);
            vel[i * 2 + 1] -= omega * q[0];
        }
        // rescale onto the energy level: T = E + U must be positive
        let u = crate::dynamics::potential(sys, &cfg)?;
        let t_target = energy + u;
        if t_target <= 0.0 {
            continue;
        }
        let state = PhaseState::new(cfg.clone(), vel.clone(), 0.0)?;
        let t_now = crate::dynamics::kinetic_energy(sys, &state);
        if t_now < 1e-12 {
            continue;
        }
        let s = (t_target / t_now).sqrt();
        let vel: Vec<f64> = vel.iter().map(|v| s * v).collect();
        return PhaseState::new(cfg, vel, 0.0);
    }
    Err(Error::InvalidInstance(
        "could not draw a negative-energy zero-angular-momentum sample".into(),
    ))
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub sample_index: usize,
    pub termination: SyzygyTermination,
    pub word: Vec<u8>,
    pub times: Vec<f64>,
    pub adjacent_repeats: usize,
    pub first_event_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SequenceCensus {
    pub runs: Vec<RunRecord>,
    pub total_events: usize,
    pub adjacent_repeats: usize,
    pub collisions: usize,
    pub escapes: usize,
    /// Largest observed time before the first syzygy over non-collision runs.
    pub max_first_event_time: f64,
}

/// Random-sample census of syzygy sequences at the given exponent.
pub fn sequence_census(
    masses: &[f64],
    exponent: f64,
    n_samples: usize,
    seed: u64,
    t_final: f64,
    energy: f64,
) -> Result<SequenceCensus> {
    let sys = MassSystem::new(masses.to_vec(), exponent, 2)?;
    let opts = SyzygyOptions::default();
    let runs: Vec<Option<RunRecord>> = par_map_tasks(n_samples, |task| {
        let mut rng = task_rng(seed, task as u64);
        let state = sample_zero_l_state(&sys, &mut rng, energy).ok()?;
        let seq = extract_syzygies(&sys, &state, t_final, &opts).ok()?;
        let word = seq.word();
        let repeats = word.windows(2).filter(|w| w[0] == w[1]).count();
        Some(RunRecord {
            sample_index: task,
            termination: seq.termination,
            times: seq.events.iter().map(|e| e.time).collect(),
            first_event_time: seq.events.first().map(|e| e.time),
            adjacent_repeats: repeats,
            word,
        })
    });
    let runs: Vec<RunRecord> = runs.into_iter().flatten().collect();
    let total_events = runs.iter().map(|r| r.word.len()).sum();
    let adjacent_repeats = runs.iter().map(|r| r.adjacent_repeats).sum();
    let collisions = runs
        .iter()
        .filter(|r| r.termination == SyzygyTermination::Collision)
        .count();
    let escapes = runs
        .iter()
        .filter(|r| r.termination == SyzygyTermination::Escape)
        .count();
    let max_first_event_time = runs
        .iter()
        .filter(|r| r.termination != SyzygyTermination::Collision)
        .filter_map(|r| r.first_event_time)
        .fold(0.0f64, f64::max);
    Ok(SequenceCensus {
        runs,
        total_events,
        adjacent_repeats,
        collisions,
        escapes,
        max_first_event_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    #[test]
    fn lagrange_collapse_has_no_syzygy() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let cfg = oracles::lagrange_equilateral_config(&sys);
        let state = PhaseState::at_rest(cfg);
        let seq = extract_syzygies(&sys, &state, 50.0, &SyzygyOptions::default()).unwrap();
        assert_eq!(seq.termination, SyzygyTermination::Collision);
        assert!(seq.events.is_empty(), "events: {:?}", seq.events.len());
    }

    #[test]
    fn euler_rest_data_is_degenerate_collinear() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let cfg = oracles::euler_collinear_config(&sys, [0, 1, 2]);
        let state = PhaseState::at_rest(cfg);
        let seq = extract_syzygies(&sys, &state, 5.0, &SyzygyOptions::default()).unwrap();
        assert_eq!(seq.termination, SyzygyTermination::DegenerateCollinear);
        assert!(seq.events.is_empty());
    }

    #[test]
    fn isosceles_data_yield_only_flavor_three() {
        // bodies 1, 2 mirror-symmetric about the y axis, body 3 on the axis
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 0.8]).unwrap();
        let m3 = 0.8;
        let vy = 0.15;
        let cfg =
            Configuration::new(vec![-1.0, 0.0, 1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let vel = vec![0.2, vy, -0.2, vy, 0.0, -2.0 * vy / m3];
        let state = PhaseState::new(cfg, vel, 0.0).unwrap();
        let ints = crate::dynamics::first_integrals(&sys, &state).unwrap();
        assert!(ints.angular_momentum[0].abs() < 1e-14);
        assert!(ints.energy < 0.0, "energy {}", ints.energy);

        let seq = extract_syzygies(&sys, &state, 30.0, &SyzygyOptions::default()).unwrap();
        assert!(
            seq.events.iter().filter(|e| e.trusted).count() >= 1,
            "no trusted events"
        );
        for e in &seq.events {
            assert_eq!(e.flavor, 3, "event at t = {} has flavor {}", e.time, e.flavor);
            assert!(e.barycentric > 1e-8 && e.barycentric < 1.0 - 1e-8);
        }
    }

    #[test]
    fn isosceles_symmetry_is_preserved_by_the_flow() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 0.8]).unwrap();
        let cfg = Configuration::new(vec![-1.0, 0.0, 1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let vel = vec![0.2, 0.15, -0.2, 0.15, 0.0, -2.0 * 0.15 / 0.8];
        let state = PhaseState::new(cfg, vel, 0.0).unwrap();
        let res = integrate(
            &sys,
            &state,
            10.0,
            &IntegrateOptions::default(),
            &mut [],
        )
        .unwrap();
        for s in &res.samples {
            let q = &s.config;
            if q.min_pairwise_distance() < 1e-3 {
                break;
            }
            // mirror: x_1 = -x_2, y_1 = y_2, x_3 = 0
            let defect = (q.pos(0)[0] + q.pos(1)[0]).abs()
                + (q.pos(0)[1] - q.pos(1)[1]).abs()
                + q.pos(2)[0].abs();
            assert!(defect < 1e-7, "symmetry defect {defect} at t = {}", s.time);
        }
    }

    #[test]
    fn relabeling_permutes_flavors() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let mut rng = crate::rng::task_rng(101, 0);
        let state = sample_zero_l_state(&sys, &mut rng, -0.5).unwrap();
        let opts = SyzygyOptions::default();
        let seq = extract_syzygies(&sys, &state, 8.0, &opts).unwrap();

        // swap bodies 0 and 2 (and masses): flavors 1 and 3 swap
        let sys_p = MassSystem::newtonian(vec![3.0, 2.0, 1.0]).unwrap();
        let perm = [2usize, 1, 0];
        let mut coords = vec![0.0; 6];
        let mut vel = vec![0.0; 6];
        for i in 0..3 {
            coords[i * 2..i * 2 + 2].copy_from_slice(state.config.pos(perm[i]));
            vel[i * 2..i * 2 + 2].copy_from_slice(state.vel(perm[i]));
        }
        let state_p = PhaseState::new(Configuration::new(coords, 2).unwrap(), vel, 0.0).unwrap();
        let seq_p = extract_syzygies(&sys_p, &state_p, 8.0, &opts).unwrap();

        assert_eq!(seq.events.len(), seq_p.events.len());
        for (a, b) in seq.events.iter().zip(&seq_p.events) {
            let mapped = match a.flavor {
                1 => 3,
                3 => 1,
                f => f,
            };
            assert_eq!(mapped, b.flavor);
            assert!((a.time - b.time).abs() < 1e-9);
        }
    }

    #[test]
    fn time_reversal_reverses_the_word() {
        let sys = MassSystem::newtonian(vec![1.0, 1.5, 0.7]).unwrap();
        let mut rng = crate::rng::task_rng(103, 1);
        let state = sample_zero_l_state(&sys, &mut rng, -0.4).unwrap();
        let opts = SyzygyOptions::default();
        let horizon = 6.0;
        let fwd = extract_syzygies(&sys, &state, horizon, &opts).unwrap();
        if fwd.termination != SyzygyTermination::Horizon || fwd.events.is_empty() {
            return; // collision-free span required for this property
        }
        let end = integrate(&sys, &state, horizon, &IntegrateOptions::default(), &mut [])
            .unwrap()
            .final_state()
            .clone();
        let rev_state = PhaseState::new(
            end.config.clone(),
            end.velocities.iter().map(|v| -v).collect(),
            0.0,
        )
        .unwrap();
        let bwd = extract_syzygies(&sys, &rev_state, horizon, &opts).unwrap();
        let mut expect = fwd.word();
        expect.reverse();
        assert_eq!(bwd.word(), expect);
    }

    #[test]
    fn empty_sample_census() {
        let census = sequence_census(&[1.0, 1.0, 1.0], -1.5, 0, 1, 5.0, -0.5).unwrap();
        assert!(census.runs.is_empty());
        assert_eq!(census.total_events, 0);
    }

    #[test]
    fn inverse_square_census_never_stutters_smoke() {
        let census = sequence_census(&[1.0, 1.0, 1.0], -2.0, 12, 7, 40.0, -0.5).unwrap();
        assert!(!census.runs.is_empty());
        assert_eq!(
            census.adjacent_repeats, 0,
            "words: {:?}",
            census.runs.iter().map(|r| r.word.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn nonzero_angular_momentum_is_rejected() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-1.0, 0.0, 1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let vel = vec![0.0, 1.0, 0.0, -1.0, 0.5, 0.0];
        let state = PhaseState::new(cfg, vel, 0.0).unwrap();
        assert!(matches!(
            extract_syzygies(&sys, &state, 1.0, &SyzygyOptions::default()),
            Err(Error::NonzeroAngularMomentum(_))
        ));
    }
}
