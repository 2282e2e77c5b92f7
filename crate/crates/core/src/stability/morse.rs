//! Morse data of the force function restricted to the shape sphere
//! (I = 1, center of mass fixed), with the rotation directions projected
//! out. Eigenvalues are taken in the mass inner product; index and nullity
//! do not depend on that choice.

use nalgebra::{DMatrix, DVector};

use crate::cc::CentralConfig;
use crate::dynamics;
use crate::error::Result;
use crate::system::{Configuration, MassSystem};

#[derive(Debug, Clone)]
pub struct MorseReport {
    /// Spectrum of the reduced Hessian, ascending.
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub positive: usize,
    pub is_nondeg_min: bool,
    pub reduced_dim: usize,
}

fn mass_dot(sys: &MassSystem, d: usize, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / d;
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..d {
            s += sys.mass(i) * a[i * d + k] * b[i * d + k];
        }
    }
    s
}

/// Gauge directions at q: translations, scaling, infinitesimal rotations.
fn gauge_directions(cfg: &Configuration) -> Vec<Vec<f64>> {
    let (n, d) = (cfg.n(), cfg.dim());
    let nd = n * d;
    let mut dirs = Vec::new();
    for k in 0..d {
        let mut t = vec![0.0; nd];
        for i in 0..n {
            t[i * d + k] = 1.0;
        }
        dirs.push(t);
    }
    dirs.push(cfg.coords().to_vec()); // scaling
    if d == 2 {
        let mut r = vec![0.0; nd];
        for i in 0..n {
            r[i * 2] = -cfg.coords()[i * 2 + 1];
            r[i * 2 + 1] = cfg.coords()[i * 2];
        }
        dirs.push(r);
    } else {
        // generators about the three axes; degenerate ones drop out in the
        // orthonormalization
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
    dirs
}

/// Mass-orthonormal basis of the orthogonal complement of the gauge
/// directions; deterministic (seeded from coordinate vectors in order).
fn tangent_basis(sys: &MassSystem, cfg: &Configuration) -> (DMatrix<f64>, usize) {
    let (n, d) = (cfg.n(), cfg.dim());
    let nd = n * d;
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut gauge: Vec<Vec<f64>> = Vec::new();
    for dir in gauge_directions(cfg) {
        let mut v = dir;
        for g in &gauge {
            let c = mass_dot(sys, d, &v, g);
            v.iter_mut().zip(g).for_each(|(x, gk)| *x -= c * gk);
        }
        let nrm = mass_dot(sys, d, &v, &v).sqrt();
        if nrm > 1e-10 {
            v.iter_mut().for_each(|x| *x /= nrm);
            gauge.push(v);
        }
    }
    for k in 0..nd {
        let mut v = vec![0.0; nd];
        v[k] = 1.0;
        for g in gauge.iter().chain(kept.iter()) {
            let c = mass_dot(sys, d, &v, g);
            v.iter_mut().zip(g).for_each(|(x, gk)| *x -= c * gk);
        }
        let nrm = mass_dot(sys, d, &v, &v).sqrt();
        if nrm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nrm);
            kept.push(v);
        }
    }
    let m = kept.len();
    let mut t = DMatrix::zeros(nd, m);
    for (c, v) in kept.iter().enumerate() {
        for r in 0..nd {
            t[(r, c)] = v[r];
        }
    }
    (t, m)
}

/// Morse report of the central configuration as a critical point of U on
/// the shape sphere.
pub fn morse_report(cc: &CentralConfig) -> Result<MorseReport> {
    let sys = &cc.system;
    let cfg = &cc.config;
    let lambda = cc.multiplier;

    // Hessian of W = U + (lambda/2) I, restricted to the tangent space
    let mut h = dynamics::potential_hessian(sys, cfg)?;
    let hi = dynamics::moment_hessian(sys, cfg.n(), cfg.dim());
    h += hi * (lambda / 2.0);

    let (t, m) = tangent_basis(sys, cfg);
    // two bodies: everything is gauge, the reduced space is a point
    if m == 0 {
        return Ok(MorseReport {
            eigenvalues: Vec::new(),
            index: 0,
            nullity: 0,
            positive: 0,
            is_nondeg_min: true,
            reduced_dim: 0,
        });
    }
    let b = t.transpose() * &h * &t;
    // symmetrize against rounding
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(f64::total_cmp);

    let scale = eigenvalues
        .iter()
        .map(|e| e.abs())
        .fold(1.0f64, f64::max);
    let tol = 1e-8 * scale;
    let index = eigenvalues.iter().filter(|e| **e < -tol).count();
    let nullity = eigenvalues.iter().filter(|e| e.abs() <= tol).count();
    let positive = m - index - nullity;

    Ok(MorseReport {
        eigenvalues,
        index,
        nullity,
        positive,
        is_nondeg_min: index == 0 && nullity == 0,
        reduced_dim: m,
    })
}

/// Finite-difference route to the same reduced Hessian, for cross-checks:
/// differentiates the projected gradient of W along the tangent basis.
pub fn morse_hessian_fd(cc: &CentralConfig, step: f64) -> Result<DMatrix<f64>> {
    let sys = &cc.system;
    let cfg = &cc.config;
    let lambda = cc.multiplier;
    let (t, m) = tangent_basis(sys, cfg);
    let nd = cfg.coords().len();

    let grad_w = |coords: &[f64]| -> Vec<f64> {
        let c = Configuration::new(coords.to_vec(), cfg.dim()).unwrap();
        let gu = dynamics::potential_gradient(sys, &c).unwrap();
        let com = c.center_of_mass(sys);
        let d = cfg.dim();
        let mut g = gu;
        for i in 0..c.n() {
            for k in 0..d {
                g[i * d + k] += lambda * sys.mass(i) * (c.coords()[i * d + k] - com[k]);
            }
        }
        g
    };

    let mut out = DMatrix::zeros(m, m);
    for col in 0..m {
        let dir: Vec<f64> = (0..nd).map(|r| t[(r, col)]).collect();
        let mut plus = cfg.coords().to_vec();
        let mut minus = cfg.coords().to_vec();
        for r in 0..nd {
            plus[r] += step * dir[r];
            minus[r] -= step * dir[r];
        }
        let gp = grad_w(&plus);
        let gm = grad_w(&minus);
        let fd: Vec<f64> = gp
            .iter()
            .zip(&gm)
            .map(|(p, mns)| (p - mns) / (2.0 * step))
            .collect();
        // project onto the basis (plain dot: grad W already carries masses)
        for row in 0..m {
            let mut s = 0.0;
            for r in 0..nd {
                s += t[(r, row)] * fd[r];
            }
            out[(row, col)] = s;
        }
    }
    Ok(out)
}

/// Projected gradient of U on {I = 1, com = 0} in the mass metric; its norm
/// agrees with the central-configuration residual norm (per unit mass).
pub fn projected_gradient(sys: &MassSystem, cfg: &Configuration) -> Result<DVector<f64>> {
    let d = cfg.dim();
    let acc = dynamics::accelerations(sys, cfg)?;
    let u = dynamics::potential(sys, cfg)?;
    let i = dynamics::moment_of_inertia(sys, cfg);
    let com = cfg.center_of_mass(sys);
    // ascent direction per unit mass minus its I-sphere component
    let coef = 2.0 * (sys.exponent() + 1.0) * u / i;
    let mut g = DVector::zeros(acc.len());
    for b in 0..cfg.n() {
        for k in 0..d {
            g[b * d + k] = acc[b * d + k] - coef * (cfg.coords()[b * d + k] - com[k]);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::{cc_residual, normalize};
    use crate::oracles;
    use crate::system::MassSystem;

    #[test]
    fn two_body_is_a_nondegenerate_minimum() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0]).unwrap();
        let cfg = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        let cc = normalize(&sys, &cfg).unwrap();
        let report = morse_report(&cc).unwrap();
        assert_eq!(report.reduced_dim, 0);
        assert!(report.is_nondeg_min);
        assert_eq!(report.index, 0);
    }

    #[test]
    fn equilateral_is_a_minimum_and_collinear_is_not() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let eq = normalize(&sys, &oracles::lagrange_equilateral_config(&sys)).unwrap();
        let req = morse_report(&eq).unwrap();
        assert_eq!(req.reduced_dim, 2);
        assert!(req.is_nondeg_min, "eigenvalues {:?}", req.eigenvalues);

        let line = normalize(&sys, &oracles::euler_collinear_config(&sys, [0, 1, 2])).unwrap();
        let rline = morse_report(&line).unwrap();
        assert!(rline.index > 0, "eigenvalues {:?}", rline.eigenvalues);
    }

    #[test]
    fn reduced_hessian_matches_finite_differences() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cc = normalize(&sys, &oracles::lagrange_equilateral_config(&sys)).unwrap();
        let mut h = dynamics::potential_hessian(&sys, &cc.config).unwrap();
        h += dynamics::moment_hessian(&sys, 3, 2) * (cc.multiplier / 2.0);
        let (tb, m) = tangent_basis(&sys, &cc.config);
        let analytic = tb.transpose() * &h * &tb;
        let fd = morse_hessian_fd(&cc, 1e-6).unwrap();
        for r in 0..m {
            for c in 0..m {
                let denom = analytic[(r, c)].abs().max(1.0);
                assert!(
                    (analytic[(r, c)] - fd[(r, c)]).abs() / denom < 1e-5,
                    "({r},{c}): {} vs {}",
                    analytic[(r, c)],
                    fd[(r, c)]
                );
            }
        }
    }

    #[test]
    fn projected_gradient_vanishes_exactly_at_ccs() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cc = normalize(&sys, &oracles::lagrange_equilateral_config(&sys)).unwrap();
        let g = projected_gradient(&sys, &cc.config).unwrap();
        let r = cc_residual(&sys, &cc.config).unwrap();
        assert!(g.norm() < 1e-12);
        // the two characterizations coincide componentwise
        for (a, b) in g.iter().zip(&r.residual) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
