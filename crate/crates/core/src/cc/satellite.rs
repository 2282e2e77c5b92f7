//! Limits of (1+N)-body central configurations as the satellite mass
//! vanishes: solve the full problem on a ladder of mass ratios, follow each
//! class by continuation, extrapolate the satellite angles to the limit and
//! reject coalescing families.

use rand::Rng;

use super::census::{build_census, CensusOptions};
use super::solve::{gauss_newton_refine, newton_polish, SolveOptions};
use super::{gauge_fix, normalize, CentralConfig};
use crate::error::{Error, Result};
use crate::rng::{par_map_tasks, task_rng};
use crate::system::{Configuration, MassSystem};

/// Mass-ratio ladder used for the continuation.
pub const EPSILON_LADDER: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

/// Angular gap below which a limit family counts as coalescent.
const COALESCENCE_GAP: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SatelliteLimitConfig {
    pub n_satellites: usize,
    /// Limiting satellite angles, ascending, first entry 0 (rotation gauge).
    pub angles: Vec<f64>,
    /// Extrapolated cyclic gaps between consecutive satellites.
    pub gaps: Vec<f64>,
    pub epsilon_trace: Vec<(f64, CentralConfig)>,
    pub regular_polygon: bool,
    pub symmetric: bool,
    pub min_gap: f64,
}

fn satellite_system(n_sat: usize, eps: f64) -> MassSystem {
    let mut masses = vec![1.0];
    masses.extend(std::iter::repeat(eps).take(n_sat));
    MassSystem::newtonian(masses).unwrap()
}

/// Satellite angles seen from the heavy body, sorted ascending in [0, 2pi).
fn satellite_angles(cc: &CentralConfig) -> (Vec<f64>, Vec<f64>) {
    let cfg = &cc.config;
    let big = cfg.pos(0);
    let n_sat = cfg.n() - 1;
    let mut ang = Vec::with_capacity(n_sat);
    let mut rad = Vec::with_capacity(n_sat);
    for i in 1..=n_sat {
        let dx = cfg.pos(i)[0] - big[0];
        let dy = cfg.pos(i)[1] - big[1];
        ang.push(dy.atan2(dx).rem_euclid(std::f64::consts::TAU));
        rad.push((dx * dx + dy * dy).sqrt());
    }
    ang.sort_by(f64::total_cmp);
    (ang, rad)
}

/// Cyclic gaps of sorted angles (N entries summing to 2 pi).
fn gaps_of(angles: &[f64]) -> Vec<f64> {
    let n = angles.len();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let next = angles[(i + 1) % n] + if i + 1 == n { std::f64::consts::TAU } else { 0.0 };
        g.push(next - angles[i]);
    }
    g
}

/// Align `cur` onto `reference` over cyclic rotations and reversal; returns
/// the aligned copy and the L-inf mismatch.
fn align_gap_cycle(reference: &[f64], cur: &[f64]) -> (Vec<f64>, f64) {
    let n = cur.len();
    let mut best = (cur.to_vec(), f64::INFINITY);
    let mut variants: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    for r in 0..n {
        let rot: Vec<f64> = (0..n).map(|i| cur[(i + r) % n]).collect();
        let mut rev = rot.clone();
        rev.reverse();
        variants.push(rot);
        variants.push(rev);
    }
    for v in variants {
        let m = v
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if m < best.1 {
            best = (v, m);
        }
    }
    best
}

/// Polynomial extrapolation to eps = 0 through the (eps, value) points
/// (Neville's scheme).
fn richardson(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let mut p: Vec<f64> = points.iter().map(|&(_, v)| v).collect();
    for level in 1..n {
        for i in 0..n - level {
            let (x0, x1) = (points[i].0, points[i + level].0);
            p[i] = (x1 * p[i] - x0 * p[i + 1]) / (x1 - x0);
        }
    }
    p[0]
}

fn coorbital_start(n_sat: usize, rng: &mut impl Rng) -> Configuration {
    let mut coords = vec![rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01)];
    for _ in 0..n_sat {
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r: f64 = rng.random_range(0.93..1.07);
        coords.push(r * t.cos());
        coords.push(r * t.sin());
    }
    Configuration::new(coords, 2).unwrap()
}

fn regular_polygon_start(n_sat: usize) -> Configuration {
    let mut coords = vec![0.0, 0.0];
    for k in 0..n_sat {
        let t = k as f64 * std::f64::consts::TAU / n_sat as f64;
        coords.push(t.cos());
        coords.push(t.sin());
    }
    Configuration::new(coords, 2).unwrap()
}

/// Non-coalescent limits of (1+N)-body central configurations as the
/// satellite mass goes to zero.
pub fn satellite_limit(
    n_sat: usize,
    seed: u64,
    n_starts: usize,
) -> Result<Vec<SatelliteLimitConfig>> {
    assert!((2..=9).contains(&n_sat), "satellite count must be 2..=9");
    let eps0 = EPSILON_LADDER[0];
    let sys0 = satellite_system(n_sat, eps0);

    // census at the coarsest mass ratio, seeded on the circle
    let opts = CensusOptions {
        n_starts,
        seed,
        collinear_seeds: true,
        ..Default::default()
    };
    let candidates: Vec<Option<CentralConfig>> = par_map_tasks(n_starts + 1, |task| {
        let start = if task == n_starts {
            regular_polygon_start(n_sat)
        } else {
            let mut rng = task_rng(seed, task as u64);
            coorbital_start(n_sat, &mut rng)
        };
        let mut start = start;
        gauge_fix(&sys0, &mut start);
        let solved = gauss_newton_refine(&sys0, &start, &opts.solve)?;
        normalize(&sys0, &solved).ok()
    });
    let census = build_census(&sys0, &opts, candidates);

    let mut out = Vec::new();
    for (branch, entry) in census.entries.iter().enumerate() {
        // follow the class down the ladder
        let mut trace: Vec<(f64, CentralConfig)> = vec![(eps0, entry.cc.clone())];
        let mut lost: Option<(f64, f64)> = None;
        for (li, &eps) in EPSILON_LADDER.iter().enumerate().skip(1) {
            let sys = satellite_system(n_sat, eps);
            let prev = &trace.last().unwrap().1;
            let polished = newton_polish(&sys, &prev.config, &SolveOptions::default())
                .or_else(|| gauss_newton_refine(&sys, &prev.config, &SolveOptions::default()));
            match polished.and_then(|q| normalize(&sys, &q).ok()) {
                Some(cc) => trace.push((eps, cc)),
                None => {
                    lost = Some((EPSILON_LADDER[li - 1], eps));
                    break;
                }
            }
        }

        // angles/gaps per level, aligned along the chain
        let mut gap_rows: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut radius_spread: f64 = 0.0;
        for (eps, cc) in &trace {
            let (ang, rad) = satellite_angles(cc);
            let mean_r: f64 = rad.iter().sum::<f64>() / rad.len() as f64;
            let spread = rad
                .iter()
                .map(|r| (r - mean_r).abs())
                .fold(0.0f64, f64::max)
                / mean_r;
            radius_spread = spread; // keep the finest level's value
            let gaps = gaps_of(&ang);
            let aligned = match gap_rows.last() {
                Some((_, prev)) => align_gap_cycle(prev, &gaps).0,
                None => gaps,
            };
            gap_rows.push((*eps, aligned));
        }

        let finest_min_gap = gap_rows
            .last()
            .map(|(_, g)| g.iter().cloned().fold(f64::INFINITY, f64::min))
            .unwrap_or(0.0);
        let coalescent = finest_min_gap < COALESCENCE_GAP || radius_spread > 0.2;

        if let Some((from, to)) = lost {
            if coalescent {
                continue; // expected loss of a coalescing family
            }
            return Err(Error::ContinuationLost { branch, from, to });
        }
        if coalescent {
            continue;
        }

        // Richardson extrapolation of each gap component to eps -> 0
        let n_levels = gap_rows.len();
        let use_from = n_levels.saturating_sub(3);
        let mut gaps0 = Vec::with_capacity(n_sat);
        for k in 0..n_sat {
            let pts: Vec<(f64, f64)> = gap_rows[use_from..]
                .iter()
                .map(|(e, g)| (*e, g[k]))
                .collect();
            gaps0.push(richardson(&pts));
        }
        // renormalize the cycle sum to exactly 2 pi
        let total: f64 = gaps0.iter().sum();
        let fix = std::f64::consts::TAU / total;
        gaps0.iter_mut().for_each(|g| *g *= fix);

        let min_gap = gaps0.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_gap < COALESCENCE_GAP {
            continue;
        }

        let mut angles = vec![0.0];
        for k in 0..n_sat - 1 {
            angles.push(angles[k] + gaps0[k]);
        }

        let mean_gap = std::f64::consts::TAU / n_sat as f64;
        let regular = gaps0.iter().all(|g| (g - mean_gap).abs() < 1e-5);
        let symmetric = {
            // reflection symmetry <=> the reversed gap cycle is a rotation
            // of the original
            let n = gaps0.len();
            let mut rev = gaps0.clone();
            rev.reverse();
            (0..n).any(|r| {
                (0..n).all(|i| (gaps0[(i + r) % n] - rev[i]).abs() < 1e-6)
            })
        };

        out.push(SatelliteLimitConfig {
            n_satellites: n_sat,
            angles,
            gaps: gaps0,
            epsilon_trace: trace,
            regular_polygon: regular,
            symmetric,
            min_gap,
        });
    }

    // deterministic order: by gap cycle lexicographically
    out.sort_by(|a, b| {
        a.gaps
            .iter()
            .map(|g| (g * 1e12) as i64)
            .collect::<Vec<_>>()
            .cmp(&b.gaps.iter().map(|g| (g * 1e12) as i64).collect::<Vec<_>>())
    });
    out.dedup_by(|a, b| {
        align_gap_cycle(&b.gaps, &a.gaps).1 < 1e-6
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use approx::assert_relative_eq;

    #[test]
    fn richardson_extrapolates_polynomials_exactly() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&e| (e, 2.0 + 3.0 * e + 5.0 * e * e))
            .collect();
        assert_relative_eq!(richardson(&pts), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_satellites_recover_the_known_limits() {
        let limits = satellite_limit(2, 71, 150).unwrap();
        assert_eq!(limits.len(), 2, "expected two non-coalescent limits");
        // oracle: dense scan of the limiting tangential-balance equation
        let oracle = oracles::coorbital_two_satellite_gaps(-1.5, 40000);
        let mut got: Vec<f64> = limits.iter().map(|l| l.gaps[0].min(l.gaps[1])).collect();
        got.sort_by(f64::total_cmp);
        for (g, o) in got.iter().zip(&oracle) {
            assert_relative_eq!(g, o, epsilon = 1e-5);
        }
        for l in &limits {
            assert!(l.symmetric);
        }
    }

    #[test]
    fn regular_polygon_is_always_a_limit() {
        for n in [3usize, 5] {
            let limits = satellite_limit(n, 73, 200).unwrap();
            assert!(
                limits.iter().any(|l| l.regular_polygon),
                "no regular {n}-gon among the limits"
            );
        }
    }
}
