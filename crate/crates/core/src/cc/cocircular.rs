//! Co-circular central configurations with the center of mass at the
//! circle's center: bodies are parametrized by angles on the unit circle,
//! the full central-configuration residual plus the center-of-mass
//! constraint is driven to zero in angle space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::census::{build_census, Census, CensusOptions};
use super::solve::residual_jacobian;
use super::{cc_residual, normalize};
use crate::rng::{par_map_tasks, task_rng};
use crate::system::{Configuration, MassSystem};

fn circle_config(theta: &[f64]) -> Configuration {
    let mut coords = Vec::with_capacity(theta.len() * 2);
    for &t in theta {
        coords.push(t.cos());
        coords.push(t.sin());
    }
    Configuration::new(coords, 2).unwrap()
}

/// Residual [F(q(theta)); sum_i m_i q_i] and its Jacobian in the free
/// angles theta_1..theta_{n-1} (theta_0 = 0 fixes rotation).
fn angle_system(sys: &MassSystem, theta: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let n = theta.len();
    let cfg = circle_config(theta);
    let (f, jf) = residual_jacobian(sys, &cfg)?;
    let rows = 2 * n + 2;
    let cols = n - 1;
    let mut g = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, cols);
    for r in 0..2 * n {
        g[r] = f[r];
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        cx += sys.mass(i) * theta[i].cos();
        cy += sys.mass(i) * theta[i].sin();
    }
    g[2 * n] = cx;
    g[2 * n + 1] = cy;

    for i in 1..n {
        let (s, c) = theta[i].sin_cos();
        let col = i - 1;
        // dq_i/dtheta_i = (-sin, cos)
        for r in 0..2 * n {
            jac[(r, col)] = -jf[(r, 2 * i)] * s + jf[(r, 2 * i + 1)] * c;
        }
        jac[(2 * n, col)] = -sys.mass(i) * s;
        jac[(2 * n + 1, col)] = sys.mass(i) * c;
    }
    Some((g, jac))
}

fn lm_angles(sys: &MassSystem, theta0: &[f64]) -> Option<Vec<f64>> {
    let n = theta0.len();
    let mut theta = theta0.to_vec();
    let (mut g, mut jac) = angle_system(sys, &theta)?;
    let mut gnorm = g.norm();
    let mut mu = 1e-3;
    for _ in 0..250 {
        if gnorm < 1e-12 {
            break;
        }
        let jtj = jac.transpose() * &jac;
        let jtg = jac.transpose() * &g;
        let dmax = (0..n - 1)
            .map(|k| jtj[(k, k)])
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for k in 0..n - 1 {
                a[(k, k)] += mu * dmax;
            }
            let Some(ch) = a.cholesky() else {
                mu *= 4.0;
                continue;
            };
            let delta = -(ch.solve(&jtg));
            let mut trial = theta.clone();
            for i in 1..n {
                trial[i] += delta[i - 1];
            }
            // reject angle collisions
            let mut sorted: Vec<f64> = trial
                .iter()
                .map(|t| t.rem_euclid(std::f64::consts::TAU))
                .collect();
            sorted.sort_by(f64::total_cmp);
            let min_gap = sorted
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(std::f64::consts::TAU + sorted[0] - sorted[n - 1], f64::min);
            if min_gap < 1e-4 {
                mu *= 4.0;
                continue;
            }
            if let Some((tg, tj)) = angle_system(sys, &trial) {
                let tnorm = tg.norm();
                if tnorm < gnorm {
                    theta = trial;
                    g = tg;
                    jac = tj;
                    gnorm = tnorm;
                    mu = (mu / 3.0).max(1e-14);
                    accepted = true;
                    break;
                }
            }
            mu *= 4.0;
            if mu > 1e12 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    (gnorm < 1e-10).then_some(theta)
}

/// Search for co-circular central configurations whose center of mass sits
/// at the circle's center. Returns the deduplicated census (possibly empty).
pub fn cocircular_search(
    masses: &[f64],
    exponent: f64,
    n_starts: usize,
    seed: u64,
) -> crate::error::Result<Census> {
    let sys = MassSystem::new(masses.to_vec(), exponent, 2)?;
    let n = sys.n();
    let opts = CensusOptions {
        n_starts,
        seed,
        ..Default::default()
    };
    let candidates = par_map_tasks(n_starts, |task| {
        let mut rng = task_rng(seed, task as u64);
        let mut theta = vec![0.0; n];
        for t in theta.iter_mut().skip(1) {
            *t = rng.random_range(0.0..std::f64::consts::TAU);
        }
        let solved = lm_angles(&sys, &theta)?;
        let cfg = circle_config(&solved);
        // gate: genuine central configuration with centered mass
        let res = cc_residual(&sys, &cfg).ok()?;
        if res.norm > 1e-10 {
            return None;
        }
        let com = cfg.center_of_mass(&sys);
        if (com[0].powi(2) + com[1].powi(2)).sqrt() > 1e-10 {
            return None;
        }
        normalize(&sys, &cfg).ok()
    });
    Ok(build_census(&sys, &opts, candidates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shape_distance;

    fn regular_ngon(n: usize) -> Configuration {
        let mut coords = Vec::new();
        for k in 0..n {
            let t = k as f64 * std::f64::consts::TAU / n as f64;
            coords.push(t.cos());
            coords.push(t.sin());
        }
        let mut cfg = Configuration::new(coords, 2).unwrap();
        // same gauge as census output
        let sys = MassSystem::newtonian(vec![1.0; n]).unwrap();
        super::super::gauge_fix(&sys, &mut cfg);
        cfg
    }

    #[test]
    fn four_equal_masses_find_only_the_square() {
        let census = cocircular_search(&[1.0; 4], -1.5, 300, 41).unwrap();
        assert_eq!(census.len(), 1);
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let d = shape_distance(
            &sys,
            &census.entries[0].cc.config,
            &regular_ngon(4),
            true,
            1e-4,
        );
        assert!(d < 1e-8);
        assert!(census.entries[0].classification.com_at_circumcenter);
    }

    #[test]
    fn four_unequal_masses_find_nothing() {
        let census = cocircular_search(&[1.0, 2.0, 3.0, 4.0], -1.5, 400, 43).unwrap();
        assert!(census.is_empty(), "found {} classes", census.len());
    }

    #[test]
    fn five_equal_masses_find_the_pentagon() {
        for a in [-1.5, -1.2] {
            let census = cocircular_search(&[1.0; 5], a, 300, 45).unwrap();
            let sys = MassSystem::new(vec![1.0; 5], a, 2).unwrap();
            let pentagon = regular_ngon(5);
            let hit = census
                .entries
                .iter()
                .any(|e| shape_distance(&sys, &e.cc.config, &pentagon, true, 1e-4) < 1e-8);
            assert!(hit, "pentagon missing for a = {a}");
        }
    }
}
