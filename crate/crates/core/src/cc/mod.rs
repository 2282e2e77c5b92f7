//! Central configurations: the defining residual, normalization to a
//! canonical gauge, multistart censuses, and the specialized constrained
//! searches.
//!
//! A configuration is central when `lambda (q_i - q_G) + accel_i = 0` for
//! every body, with the multiplier fixed by contraction:
//! `lambda = -2(a+1) U / I` (equal to `U / I` in the Newtonian case).

pub mod axis;
pub mod census;
pub mod classify;
pub mod cocircular;
pub mod convex;
pub mod satellite;
pub mod solve;

pub use census::{find_cc_multistart, five_body_symmetry_audit, Census, CensusOptions, ClassEntry};
pub use classify::{classify, Classification, CyclicOrder, Geometry};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::system::{Configuration, MassSystem};

/// Residual of the central-configuration equation at a configuration.
#[derive(Debug, Clone)]
pub struct CcResidual {
    /// Multiplier estimate from the contraction formula.
    pub lambda: f64,
    /// Flat per-body residual vector.
    pub residual: Vec<f64>,
    /// Euclidean norm of the whole residual.
    pub norm: f64,
    /// Largest per-body residual norm.
    pub max_per_body: f64,
}

/// Multiplier estimate and residual of the central-configuration equation.
pub fn cc_residual(sys: &MassSystem, cfg: &Configuration) -> Result<CcResidual> {
    let (n, d) = (cfg.n(), cfg.dim());
    let u = dynamics::potential(sys, cfg)?;
    let i = dynamics::moment_of_inertia(sys, cfg);
    let lambda = -2.0 * (sys.exponent() + 1.0) * u / i;
    let acc = dynamics::accelerations(sys, cfg)?;
    let com = cfg.center_of_mass(sys);
    let mut residual = vec![0.0; n * d];
    let mut norm2 = 0.0;
    let mut max_body = 0.0f64;
    for b in 0..n {
        let mut body2 = 0.0;
        for k in 0..d {
            let r = lambda * (cfg.coords()[b * d + k] - com[k]) + acc[b * d + k];
            residual[b * d + k] = r;
            body2 += r * r;
        }
        norm2 += body2;
        max_body = max_body.max(body2.sqrt());
    }
    Ok(CcResidual {
        lambda,
        residual,
        norm: norm2.sqrt(),
        max_per_body: max_body,
    })
}

/// A polished central configuration in the canonical gauge: center of mass
/// at the origin, I = 1, deterministic rotation/reflection frame.
#[derive(Debug, Clone)]
pub struct CentralConfig {
    pub system: MassSystem,
    pub config: Configuration,
    pub multiplier: f64,
    pub residual_norm: f64,
}

/// Gauge-body order: heaviest first, ties by index.
fn gauge_order(sys: &MassSystem) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sys.n()).collect();
    idx.sort_by(|&a, &b| {
        sys.mass(b)
            .partial_cmp(&sys.mass(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    idx
}

/// Deterministic rotation/reflection frame for a centered configuration:
/// the first gauge body off the origin goes on the positive first axis, the
/// next one off that axis into the upper half-plane (d = 2) or the y > 0,
/// z = 0 half-plane and then z > 0 (d = 3). With `fix_reflection` off the
/// orientation of the input survives, so mirror classes stay distinct.
pub fn canonical_frame(
    sys: &MassSystem,
    cfg: &Configuration,
    fix_reflection: bool,
) -> Configuration {
    let d = cfg.dim();
    let order = gauge_order(sys);
    let mut out = cfg.clone();
    let tol = 1e-8;

    if d == 2 {
        if let Some(&g1) = order.iter().find(|&&i| norm(cfg.pos(i)) > tol) {
            let p = out.pos(g1);
            let theta = p[1].atan2(p[0]);
            rotate2(&mut out, -theta);
        }
        if fix_reflection {
            if let Some(&g2) = order.iter().find(|&&i| out.pos(i)[1].abs() > tol) {
                if out.pos(g2)[1] < 0.0 {
                    for i in 0..out.n() {
                        out.coords_mut()[i * 2 + 1] = -out.coords()[i * 2 + 1];
                    }
                }
            }
        }
    } else {
        if let Some(&g1) = order.iter().find(|&&i| norm(cfg.pos(i)) > tol) {
            let p = out.pos(g1).to_vec();
            rotate_onto_x(&mut out, &p);
        }
        if let Some(&g2) = order
            .iter()
            .find(|&&i| (out.pos(i)[1].powi(2) + out.pos(i)[2].powi(2)).sqrt() > tol)
        {
            let p = out.pos(g2);
            let phi = p[2].atan2(p[1]);
            rotate_about_x(&mut out, -phi);
        }
        if fix_reflection {
            if let Some(&g3) = order.iter().find(|&&i| out.pos(i)[2].abs() > tol) {
                if out.pos(g3)[2] < 0.0 {
                    for i in 0..out.n() {
                        out.coords_mut()[i * 3 + 2] = -out.coords()[i * 3 + 2];
                    }
                }
            }
        }
    }
    out
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rotate2(cfg: &mut Configuration, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    for i in 0..cfg.n() {
        let x = cfg.coords()[i * 2];
        let y = cfg.coords()[i * 2 + 1];
        cfg.coords_mut()[i * 2] = c * x - s * y;
        cfg.coords_mut()[i * 2 + 1] = s * x + c * y;
    }
}

fn rotate_about_x(cfg: &mut Configuration, phi: f64) {
    let (c, s) = (phi.cos(), phi.sin());
    for i in 0..cfg.n() {
        let y = cfg.coords()[i * 3 + 1];
        let z = cfg.coords()[i * 3 + 2];
        cfg.coords_mut()[i * 3 + 1] = c * y - s * z;
        cfg.coords_mut()[i * 3 + 2] = s * y + c * z;
    }
}

/// Rotate so that direction `p` lands on the positive x axis.
fn rotate_onto_x(cfg: &mut Configuration, p: &[f64]) {
    let r = norm(p);
    if r == 0.0 {
        return;
    }
    let u = nalgebra::Vector3::new(p[0] / r, p[1] / r, p[2] / r);
    let e1 = nalgebra::Vector3::x();
    let rot = nalgebra::Rotation3::rotation_between(&u, &e1)
        .unwrap_or_else(nalgebra::Rotation3::identity);
    for i in 0..cfg.n() {
        let q = nalgebra::Vector3::new(
            cfg.coords()[i * 3],
            cfg.coords()[i * 3 + 1],
            cfg.coords()[i * 3 + 2],
        );
        let q = rot * q;
        cfg.coords_mut()[i * 3] = q[0];
        cfg.coords_mut()[i * 3 + 1] = q[1];
        cfg.coords_mut()[i * 3 + 2] = q[2];
    }
}

/// Translate to the center of mass, rescale to I = 1.
pub fn gauge_fix(sys: &MassSystem, cfg: &mut Configuration) {
    cfg.recenter(sys);
    let i = dynamics::moment_of_inertia(sys, cfg);
    cfg.scale(1.0 / i.sqrt());
}

/// Normalize a near-central configuration: Newton-polish to residual
/// below `1e-12`, fix the gauge, and return the canonical record.
pub fn normalize(sys: &MassSystem, cfg: &Configuration) -> Result<CentralConfig> {
    normalize_oriented(sys, cfg, true)
}

/// Like [`normalize`], but optionally leaving the reflection gauge open so
/// censuses that do not quotient by reflections can keep mirror classes
/// apart.
pub fn normalize_oriented(
    sys: &MassSystem,
    cfg: &Configuration,
    fix_reflection: bool,
) -> Result<CentralConfig> {
    let mut work = cfg.clone();
    gauge_fix(sys, &mut work);
    let opts = solve::SolveOptions {
        max_iters: 50,
        tol: 1e-12,
        ..Default::default()
    };
    let polished = solve::newton_polish(sys, &work, &opts).ok_or_else(|| {
        Error::NotCentral(format!(
            "polishing failed to reach 1e-12 within {} iterations",
            opts.max_iters
        ))
    })?;
    // polishing must not wander: inputs are required to already sit near a
    // central configuration, anything else is a search problem
    let moved = crate::geometry::align_distance(
        &crate::geometry::weighted_matrix(sys, &work),
        &crate::geometry::weighted_matrix(sys, &polished),
        true,
    );
    if moved > 0.05 {
        return Err(Error::NotCentral(format!(
            "input is not near a central configuration (polish moved it by {moved:.3})"
        )));
    }
    let mut canon = canonical_frame(sys, &polished, fix_reflection);
    gauge_fix(sys, &mut canon);
    let res = cc_residual(sys, &canon)?;
    if res.norm > 1e-11 {
        return Err(Error::NotCentral(format!(
            "residual {:.3e} after canonical framing",
            res.norm
        )));
    }
    Ok(CentralConfig {
        system: sys.clone(),
        config: canon,
        multiplier: res.lambda,
        residual_norm: res.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn residual_equilateral_unit_masses() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let cfg = Configuration::new(vec![0.0, 0.0, 1.0, 0.0, 0.5, h], 2).unwrap();
        let r = cc_residual(&sys, &cfg).unwrap();
        assert_relative_eq!(r.lambda, 3.0, epsilon = 1e-14);
        assert!(r.norm < 1e-14, "norm {:.3e}", r.norm);
    }

    #[test]
    fn residual_collinear_equal_masses() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let r = cc_residual(&sys, &cfg).unwrap();
        assert_relative_eq!(r.lambda, 1.25, epsilon = 1e-15);
        assert!(r.norm < 1e-14);
    }

    #[test]
    fn residual_square_unit_masses() {
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let cfg = Configuration::new(
            vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5],
            2,
        )
        .unwrap();
        let r = cc_residual(&sys, &cfg).unwrap();
        assert_relative_eq!(r.lambda, (4.0 + 2f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert!(r.norm < 1e-14);
    }

    #[test]
    fn normalize_is_gauge_invariant() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let base = oracles::lagrange_equilateral_config(&sys);
        let canon0 = normalize(&sys, &base).unwrap();

        let mut rng = crate::rng::task_rng(3, 0);
        for _ in 0..5 {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s: f64 = rng.random_range(0.3..3.0);
            let (c, sn) = (theta.cos(), theta.sin());
            let rot: Vec<f64> = (0..3)
                .flat_map(|i| {
                    let p = base.pos(i);
                    vec![s * (c * p[0] - sn * p[1]), s * (sn * p[0] + c * p[1])]
                })
                .collect();
            let moved = Configuration::new(rot, 2).unwrap();
            let canon = normalize(&sys, &moved).unwrap();
            assert_relative_eq!(canon.multiplier, canon0.multiplier, max_relative = 1e-12);
            for (a, b) in canon.config.coords().iter().zip(canon0.config.coords()) {
                assert!((a - b).abs() < 1e-10, "gauge mismatch {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn multiplier_scaling_law() {
        // lambda(s q) = s^{2a} lambda(q)
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let base = oracles::lagrange_equilateral_config(&sys);
        let l0 = cc_residual(&sys, &base).unwrap().lambda;
        for s in [0.1, 10.0] {
            let mut scaled = base.clone();
            scaled.scale(s);
            let l = cc_residual(&sys, &scaled).unwrap().lambda;
            assert_relative_eq!(l, s.powf(2.0 * -1.5) * l0, max_relative = 1e-12);
        }
    }

    #[test]
    fn random_configuration_is_not_central() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let cfg = Configuration::new(
            vec![0.31, -0.42, 1.1, 0.77, -0.9, 0.13, 0.05, -1.3],
            2,
        )
        .unwrap();
        assert!(matches!(normalize(&sys, &cfg), Err(Error::NotCentral(_))));
    }
}
