//! Solvers driving the central-configuration residual to zero: an undamped
//! Gauss-Newton polisher for near-central inputs and a Levenberg-Marquardt
//! refiner robust enough for random multistart seeds.

use nalgebra::{DMatrix, DVector};

use super::{cc_residual, gauge_fix};
use crate::dynamics;
use crate::system::{Configuration, MassSystem};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Convergence target for the residual Euclidean norm.
    pub tol: f64,
    /// Abort when any two bodies get closer than this (I = 1 gauge).
    pub min_separation: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 120,
            tol: 1e-13,
            min_separation: 1e-6,
        }
    }
}

/// Residual vector and its analytic Jacobian.
///
/// `F_i = lambda(q) (q_i - q_G) + accel_i(q)` with
/// `lambda = -2(a+1) U / I`, so
/// `dF = (q - q_G) grad(lambda)^T + lambda (Id - m_k/M) + d accel`.
pub fn residual_jacobian(
    sys: &MassSystem,
    cfg: &Configuration,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let (n, d) = (cfg.n(), cfg.dim());
    let nd = n * d;
    let res = cc_residual(sys, cfg).ok()?;
    let f = DVector::from_column_slice(&res.residual);

    let u = dynamics::potential(sys, cfg).ok()?;
    let i_mom = dynamics::moment_of_inertia(sys, cfg);
    let grad_u = dynamics::potential_gradient(sys, cfg).ok()?;
    let com = cfg.center_of_mass(sys);
    let m_tot = sys.total_mass();
    let c = -2.0 * (sys.exponent() + 1.0);

    // grad lambda = c (I grad U - U grad I) / I^2, grad_i I = 2 m_i (q_i - q_G)
    let mut grad_lambda = vec![0.0; nd];
    for b in 0..n {
        for k in 0..d {
            let gi = 2.0 * sys.mass(b) * (cfg.coords()[b * d + k] - com[k]);
            grad_lambda[b * d + k] = c * (i_mom * grad_u[b * d + k] - u * gi) / (i_mom * i_mom);
        }
    }

    let mut jac = dynamics::acceleration_jacobian(sys, cfg).ok()?;
    for bi in 0..n {
        for ka in 0..d {
            let row = bi * d + ka;
            let qrel = cfg.coords()[row] - com[ka];
            for col in 0..nd {
                jac[(row, col)] += qrel * grad_lambda[col];
            }
            for bj in 0..n {
                let v = res.lambda
                    * (((bi == bj) as usize as f64) - sys.mass(bj) / m_tot);
                jac[(row, bj * d + ka)] += v;
            }
        }
    }
    Some((f, jac))
}

/// Orthonormal basis of the complement of the symmetry directions at q
/// (translations, scaling, infinitesimal rotations). Newton steps are taken
/// in this subspace, transverse to the gauge orbits.
fn gauge_complement(cfg: &Configuration) -> DMatrix<f64> {
    let (n, d) = (cfg.n(), cfg.dim());
    let nd = n * d;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        let mut t = vec![0.0; nd];
        for i in 0..n {
            t[i * d + k] = 1.0;
        }
        dirs.push(t);
    }
    dirs.push(cfg.coords().to_vec());
    if d == 2 {
        let mut r = vec![0.0; nd];
        for i in 0..n {
            r[i * 2] = -cfg.coords()[i * 2 + 1];
            r[i * 2 + 1] = cfg.coords()[i * 2];
        }
        dirs.push(r);
    } else {
        for axis in 0..3 {
            let mut r = vec![0.0; nd];
            for i in 0..n {
                let q = cfg.pos(i);
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                r[i * 3 + a] = -q[b];
                r[i * 3 + b] = q[a];
            }
            dirs.push(r);
        }
    }

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut gauge: Vec<Vec<f64>> = Vec::new();
    for mut v in dirs {
        for g in &gauge {
            let c = dot(&v, g);
            v.iter_mut().zip(g).for_each(|(x, gk)| *x -= c * gk);
        }
        let nrm = dot(&v, &v).sqrt();
        if nrm > 1e-10 {
            v.iter_mut().for_each(|x| *x /= nrm);
            gauge.push(v);
        }
    }
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for k in 0..nd {
        let mut v = vec![0.0; nd];
        v[k] = 1.0;
        for g in gauge.iter().chain(kept.iter()) {
            let c = dot(&v, g);
            v.iter_mut().zip(g).for_each(|(x, gk)| *x -= c * gk);
        }
        let nrm = dot(&v, &v).sqrt();
        if nrm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nrm);
            kept.push(v);
        }
    }
    let mut z = DMatrix::zeros(nd, kept.len());
    for (c, v) in kept.iter().enumerate() {
        for r in 0..nd {
            z[(r, c)] = v[r];
        }
    }
    z
}

/// Gauge-deflated Gauss-Newton step: least-squares minimisation of
/// `|J Z c + F|` over the transverse coordinates c, lifted back as Z c.
fn gn_step(cfg: &Configuration, f: &DVector<f64>, jac: &DMatrix<f64>) -> Option<DVector<f64>> {
    let z = gauge_complement(cfg);
    if z.ncols() == 0 {
        return None;
    }
    let jz = jac * &z;
    let svd = jz.svd(true, true);
    let smax = svd.singular_values.max();
    if !smax.is_finite() || smax == 0.0 {
        return None;
    }
    let c = svd.solve(f, 1e-12 * smax).ok()?;
    Some(-(&z * c))
}

/// Undamped Newton polishing of a near-central configuration (the gauge is
/// re-fixed after every step). Returns the refined configuration when the
/// residual norm drops below `opts.tol`.
pub fn newton_polish(sys: &MassSystem, cfg: &Configuration, opts: &SolveOptions) -> Option<Configuration> {
    let mut q = cfg.clone();
    gauge_fix(sys, &mut q);
    for _ in 0..opts.max_iters {
        if q.min_pairwise_distance() < opts.min_separation {
            return None;
        }
        let (f, jac) = residual_jacobian(sys, &q)?;
        if f.norm() < opts.tol {
            return Some(q);
        }
        let delta = gn_step(&q, &f, &jac)?;
        if !delta.iter().all(|x| x.is_finite()) {
            return None;
        }
        for (c, dx) in q.coords_mut().iter_mut().zip(delta.iter()) {
            *c += dx;
        }
        gauge_fix(sys, &mut q);
    }
    let final_norm = cc_residual(sys, &q).ok()?.norm;
    (final_norm < opts.tol).then_some(q)
}

/// Damped Gauss-Newton from an arbitrary start: gauge-deflated step with a
/// backtracking line search on the residual norm; when the line search
/// stalls, a projected-gradient fallback step is tried before giving up.
/// Returns None when the iteration bottoms out at a nonzero residual (that
/// start's basin holds no central configuration).
pub fn gauss_newton_refine(
    sys: &MassSystem,
    cfg: &Configuration,
    opts: &SolveOptions,
) -> Option<Configuration> {
    let mut q = cfg.clone();
    gauge_fix(sys, &mut q);

    let try_direction = |q: &Configuration, fnorm: f64, dir: &DVector<f64>| -> Option<Configuration> {
        let mut t = 1.0;
        for _ in 0..30 {
            let mut trial = q.clone();
            for (c, dx) in trial.coords_mut().iter_mut().zip(dir.iter()) {
                *c += t * dx;
            }
            if let Ok(r) = cc_residual(sys, &trial) {
                if r.norm < fnorm * (1.0 - 1e-4 * t) {
                    return Some(trial);
                }
            }
            t *= 0.5;
        }
        None
    };

    for _ in 0..opts.max_iters {
        if q.min_pairwise_distance() < opts.min_separation {
            return None;
        }
        let (f, jac) = residual_jacobian(sys, &q)?;
        let fnorm = f.norm();
        if fnorm < 1e-9 {
            // quadratic endgame
            return newton_polish(sys, &q, &SolveOptions { max_iters: 30, ..opts.clone() });
        }
        let step = gn_step(&q, &f, &jac)?;
        match try_direction(&q, fnorm, &step) {
            Some(accepted) => {
                q = accepted;
                gauge_fix(sys, &mut q);
            }
            None => {
                // steepest descent on |F|^2 as a fallback
                let g = jac.transpose() * &f;
                let gn = g.norm();
                if gn < 1e-14 {
                    return None; // stationary but not central
                }
                let dir = -g * (fnorm / (gn * gn));
                match try_direction(&q, fnorm, &dir) {
                    Some(accepted) => {
                        q = accepted;
                        gauge_fix(sys, &mut q);
                    }
                    None => return None,
                }
            }
        }
    }
    let final_norm = cc_residual(sys, &q).ok()?.norm;
    if final_norm < 1e-9 {
        newton_polish(sys, &q, &SolveOptions { max_iters: 30, ..opts.clone() })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use rand::Rng;

    #[test]
    fn jacobian_matches_finite_differences() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 0.5]).unwrap();
        let mut rng = crate::rng::task_rng(17, 0);
        let coords: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = Configuration::new(coords.clone(), 2).unwrap();
        let (_, jac) = residual_jacobian(&sys, &cfg).unwrap();
        let fd = oracles::fd_jacobian(
            |x| {
                let c = Configuration::new(x.to_vec(), 2).unwrap();
                cc_residual(&sys, &c).unwrap().residual
            },
            &coords,
            1e-6,
        );
        for r in 0..6 {
            for c in 0..6 {
                let denom = fd[(r, c)].abs().max(1.0);
                assert!(
                    (jac[(r, c)] - fd[(r, c)]).abs() / denom < 1e-5,
                    "({r},{c}): {} vs {}",
                    jac[(r, c)],
                    fd[(r, c)]
                );
            }
        }
    }

    #[test]
    fn polish_recovers_perturbed_equilateral() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let mut cfg = oracles::lagrange_equilateral_config(&sys);
        let mut rng = crate::rng::task_rng(19, 0);
        for c in cfg.coords_mut() {
            *c += rng.random_range(-1e-4..1e-4);
        }
        let polished = newton_polish(&sys, &cfg, &SolveOptions::default()).unwrap();
        let r = cc_residual(&sys, &polished).unwrap();
        assert!(r.norm < 1e-13);
    }

    #[test]
    fn gauss_newton_finds_cc_from_random_start() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let mut rng = crate::rng::task_rng(23, 0);
        let mut found = 0;
        for _ in 0..20 {
            let coords: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cfg = Configuration::new(coords, 2).unwrap();
            if cfg.min_pairwise_distance() < 0.05 {
                continue;
            }
            if let Some(q) = gauss_newton_refine(&sys, &cfg, &SolveOptions::default()) {
                let r = cc_residual(&sys, &q).unwrap();
                assert!(r.norm < 1e-12, "converged but residual {:.3e}", r.norm);
                found += 1;
            }
        }
        assert!(found >= 10, "only {found} of 20 random starts converged");
    }
}
