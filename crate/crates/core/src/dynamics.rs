//! The n-body vector field `q_i'' = sum_{j != i} m_j r_ij^{2a} (q_j - q_i)`,
//! the size and force functionals, first integrals, and analytic derivatives
//! of the interaction.
//!
//! With `a < -1` the potential
//! `U = -1/(2(a+1)) sum_{i<j} m_i m_j r_ij^{2(a+1)}`
//! is positive and the accelerations are `+grad U` per unit mass; the energy
//! convention is `E = T - U`.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::system::{Configuration, MassSystem, PhaseState};

/// Accelerations of all bodies, flat layout matching the configuration.
pub fn accelerations(sys: &MassSystem, cfg: &Configuration) -> Result<Vec<f64>> {
    cfg.check_separated()?;
    let (n, d) = (cfg.n(), cfg.dim());
    let a2 = 2.0 * sys.exponent();
    let mut acc = vec![0.0; n * d];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = cfg.distance(i, j);
            let w = r.powf(a2);
            for k in 0..d {
                let diff = cfg.coords()[j * d + k] - cfg.coords()[i * d + k];
                acc[i * d + k] += sys.mass(j) * w * diff;
                acc[j * d + k] -= sys.mass(i) * w * diff;
            }
        }
    }
    Ok(acc)
}

/// Moment of inertia `I = (1/M) sum_{i<j} m_i m_j r_ij^2`.
pub fn moment_of_inertia(sys: &MassSystem, cfg: &Configuration) -> f64 {
    let n = cfg.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = cfg.distance(i, j);
            s += sys.mass(i) * sys.mass(j) * r * r;
        }
    }
    s / sys.total_mass()
}

/// Same quantity through the Lagrange identity, `sum m_i |q_i - q_G|^2`.
/// Kept as an independent route for consistency checks.
pub fn moment_of_inertia_about_com(sys: &MassSystem, cfg: &Configuration) -> f64 {
    let d = cfg.dim();
    let com = cfg.center_of_mass(sys);
    let mut s = 0.0;
    for i in 0..cfg.n() {
        let mut r2 = 0.0;
        for k in 0..d {
            let dx = cfg.coords()[i * d + k] - com[k];
            r2 += dx * dx;
        }
        s += sys.mass(i) * r2;
    }
    s
}

/// Force function `U = -1/(2(a+1)) sum_{i<j} m_i m_j r_ij^{2(a+1)}`.
pub fn potential(sys: &MassSystem, cfg: &Configuration) -> Result<f64> {
    cfg.check_separated()?;
    let n = cfg.n();
    let a = sys.exponent();
    let p = 2.0 * (a + 1.0);
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += sys.mass(i) * sys.mass(j) * cfg.distance(i, j).powf(p);
        }
    }
    Ok(-s / (2.0 * (a + 1.0)))
}

/// Gradient of U with respect to all coordinates (`grad_i U = m_i accel_i`).
pub fn potential_gradient(sys: &MassSystem, cfg: &Configuration) -> Result<Vec<f64>> {
    let d = cfg.dim();
    let mut g = accelerations(sys, cfg)?;
    for i in 0..cfg.n() {
        for k in 0..d {
            g[i * d + k] *= sys.mass(i);
        }
    }
    Ok(g)
}

pub fn kinetic_energy(sys: &MassSystem, state: &PhaseState) -> f64 {
    let d = state.dim();
    let mut t = 0.0;
    for i in 0..state.n() {
        let v2: f64 = state.vel(i).iter().map(|v| v * v).sum();
        t += 0.5 * sys.mass(i) * v2;
        debug_assert_eq!(state.vel(i).len(), d);
    }
    t
}

/// The classical first integrals of the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrals {
    pub energy: f64,
    /// Scalar (length 1) for d = 2, full 3-vector for d = 3.
    pub angular_momentum: Vec<f64>,
    pub linear_momentum: Vec<f64>,
    pub center_of_mass: Vec<f64>,
}

pub fn first_integrals(sys: &MassSystem, state: &PhaseState) -> Result<Integrals> {
    let d = state.dim();
    let n = state.n();
    let u = potential(sys, &state.config)?;
    let energy = kinetic_energy(sys, state) - u;

    let mut lin = vec![0.0; d];
    for i in 0..n {
        for k in 0..d {
            lin[k] += sys.mass(i) * state.vel(i)[k];
        }
    }

    let angular_momentum = if d == 2 {
        let mut l = 0.0;
        for i in 0..n {
            let q = state.config.pos(i);
            let v = state.vel(i);
            l += sys.mass(i) * (q[0] * v[1] - q[1] * v[0]);
        }
        vec![l]
    } else {
        let mut l = vec![0.0; 3];
        for i in 0..n {
            let q = state.config.pos(i);
            let v = state.vel(i);
            l[0] += sys.mass(i) * (q[1] * v[2] - q[2] * v[1]);
            l[1] += sys.mass(i) * (q[2] * v[0] - q[0] * v[2]);
            l[2] += sys.mass(i) * (q[0] * v[1] - q[1] * v[0]);
        }
        l
    };

    Ok(Integrals {
        energy,
        angular_momentum,
        linear_momentum: lin,
        center_of_mass: state.config.center_of_mass(sys),
    })
}

/// Jacobian of the acceleration map, `d accel_i / d q_j`, as an (nd x nd) matrix.
///
/// Off-diagonal block (i,j): `m_j G_ij` with
/// `G_ij = r^{2a} Id + 2a r^{2a-2} (q_i - q_j)(q_i - q_j)^T`
/// and diagonal block (i,i): `-sum_{j != i} m_j G_ij`.
pub fn acceleration_jacobian(sys: &MassSystem, cfg: &Configuration) -> Result<DMatrix<f64>> {
    cfg.check_separated()?;
    let (n, d) = (cfg.n(), cfg.dim());
    let a = sys.exponent();
    let mut jac = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = cfg.distance(i, j);
            let w = r.powf(2.0 * a);
            let w2 = 2.0 * a * r.powf(2.0 * a - 2.0);
            for p in 0..d {
                for q in 0..d {
                    let dp = cfg.coords()[i * d + p] - cfg.coords()[j * d + p];
                    let dq = cfg.coords()[i * d + q] - cfg.coords()[j * d + q];
                    let mut g = w2 * dp * dq;
                    if p == q {
                        g += w;
                    }
                    jac[(i * d + p, j * d + q)] += sys.mass(j) * g;
                    jac[(i * d + p, i * d + q)] -= sys.mass(j) * g;
                }
            }
        }
    }
    Ok(jac)
}

/// Hessian of U: block (i,j) equals `m_i * d accel_i / d q_j`; symmetric.
pub fn potential_hessian(sys: &MassSystem, cfg: &Configuration) -> Result<DMatrix<f64>> {
    let d = cfg.dim();
    let mut h = acceleration_jacobian(sys, cfg)?;
    for i in 0..cfg.n() {
        let m = sys.mass(i);
        for p in 0..d {
            let row = i * d + p;
            for c in 0..h.ncols() {
                h[(row, c)] *= m;
            }
        }
    }
    Ok(h)
}

/// Hessian of I: block (i,j) = `2 m_i (delta_ij - m_j / M) Id`.
pub fn moment_hessian(sys: &MassSystem, n: usize, d: usize) -> DMatrix<f64> {
    let m_tot = sys.total_mass();
    let mut h = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            let v = 2.0 * sys.mass(i) * (((i == j) as usize as f64) - sys.mass(j) / m_tot);
            for k in 0..d {
                h[(i * d + k, j * d + k)] = v;
            }
        }
    }
    h
}
