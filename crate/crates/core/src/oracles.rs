//! Independent cross-check routes: closed-form or brute-force computations
//! that never share code with the solvers they validate. Used by the built-in
//! `verify` suite and by the test batteries.

use nalgebra::DMatrix;

use crate::system::{Configuration, MassSystem};

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        xp[k] = x[k] + h;
        let fp = f(&xp);
        xp[k] = x[k] - h;
        let fm = f(&xp);
        xp[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central finite-difference Jacobian of a vector function.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        xp[k] = x[k] + h;
        let fp = f(&xp);
        xp[k] = x[k] - h;
        let fm = f(&xp);
        xp[k] = x[k];
        for r in 0..m {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Coefficients (descending powers x^5..x^0) of Euler's quintic for the
/// collinear three-body central configuration with bodies ordered
/// (left, middle, right) on a line and x = r_mid,right / r_left,mid.
pub fn euler_quintic_coefficients(m_left: f64, m_mid: f64, m_right: f64) -> [f64; 6] {
    [
        m_left + m_mid,
        3.0 * m_left + 2.0 * m_mid,
        3.0 * m_left + m_mid,
        -(m_mid + 3.0 * m_right),
        -(2.0 * m_mid + 3.0 * m_right),
        -(m_mid + m_right),
    ]
}

fn eval_poly(c: &[f64; 6], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Unique positive root of Euler's quintic (one sign change in the
/// coefficient sequence for positive masses), by bisection.
pub fn euler_quintic_root(m_left: f64, m_mid: f64, m_right: f64) -> f64 {
    let c = euler_quintic_coefficients(m_left, m_mid, m_right);
    let (mut lo, mut hi) = (1e-9, 1e9);
    assert!(eval_poly(&c, lo) < 0.0 && eval_poly(&c, hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval_poly(&c, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-16 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Collinear three-body central configuration for the ordering
/// `order = [left, mid, right]` (body indices), centered and scaled to I = 1.
/// Valid for the Newtonian exponent a = -3/2 only.
pub fn euler_collinear_config(sys: &MassSystem, order: [usize; 3]) -> Configuration {
    let x = euler_quintic_root(
        sys.mass(order[0]),
        sys.mass(order[1]),
        sys.mass(order[2]),
    );
    let mut coords = vec![0.0; 6];
    coords[order[0] * 2] = 0.0;
    coords[order[1] * 2] = 1.0;
    coords[order[2] * 2] = 1.0 + x;
    let mut cfg = Configuration::new(coords, 2).unwrap();
    cfg.recenter(sys);
    let i = crate::dynamics::moment_of_inertia(sys, &cfg);
    cfg.scale(1.0 / i.sqrt());
    cfg
}

/// Equilateral triangle (side 1) on arbitrary masses, centered and scaled
/// to I = 1; a central configuration for every mass choice and exponent.
pub fn lagrange_equilateral_config(sys: &MassSystem) -> Configuration {
    let h = 3f64.sqrt() / 2.0;
    let mut cfg = Configuration::new(vec![0.0, 0.0, 1.0, 0.0, 0.5, h], 2).unwrap();
    cfg.recenter(sys);
    let i = crate::dynamics::moment_of_inertia(sys, &cfg);
    cfg.scale(1.0 / i.sqrt());
    cfg
}

/// Tangential balance residual of the coorbital limit problem: satellites of
/// vanishing mass at angles `theta` on the unit circle around a unit central
/// mass. Entry i is `sum_{j != i} sin(theta_j - theta_i) (1 - d_ij^{2a})`
/// with `d_ij = 2 |sin((theta_i - theta_j)/2)|`.
pub fn coorbital_limit_residual(theta: &[f64], exponent: f64) -> Vec<f64> {
    let n = theta.len();
    let mut res = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dt = theta[j] - theta[i];
            let d = 2.0 * (0.5 * dt).sin().abs();
            res[i] += dt.sin() * (1.0 - d.powf(2.0 * exponent));
        }
    }
    res
}

/// Distinct satellite gap sets solving the two-satellite coorbital limit,
/// found by a dense scan of the gap in (0, pi]. Returns sorted gaps.
pub fn coorbital_two_satellite_gaps(exponent: f64, grid: usize) -> Vec<f64> {
    let f = |phi: f64| {
        let d = 2.0 * (0.5 * phi).sin();
        phi.sin() * (1.0 - d.powf(2.0 * exponent))
    };
    let mut roots = Vec::new();
    let hmax = std::f64::consts::PI;
    let step = hmax / grid as f64;
    let mut prev = f(step * 0.5);
    for k in 1..grid {
        let phi = step * (0.5 + k as f64);
        let cur = f(phi.min(hmax));
        if prev == 0.0 || prev * cur < 0.0 {
            // bisect
            let (mut lo, mut hi) = (phi - step, phi.min(hmax));
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    // the endpoint phi = pi is always a root (sin pi = 0)
    if roots.iter().all(|r| (r - hmax).abs() > 1e-6) {
        roots.push(hmax);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Brute-force convexity test for four planar points: every point must lie
/// strictly outside the triangle of the other three.
pub fn quadrilateral_is_convex_bruteforce(points: &[[f64; 2]; 4]) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    for i in 0..4 {
        let others: Vec<[f64; 2]> = (0..4).filter(|&j| j != i).map(|j| points[j]).collect();
        let s0 = orient(others[0], others[1], points[i]);
        let s1 = orient(others[1], others[2], points[i]);
        let s2 = orient(others[2], others[0], points[i]);
        let inside = (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) || (s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0);
        if inside {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc;
    use approx::assert_relative_eq;

    #[test]
    fn equal_mass_collinear_root_is_one() {
        // symmetric ordering: middle body centered
        let x = euler_quintic_root(1.0, 1.0, 1.0);
        assert_relative_eq!(x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quintic_root_produces_central_configuration() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        for order in [[0, 1, 2], [1, 0, 2], [0, 2, 1]] {
            let cfg = euler_collinear_config(&sys, order);
            let r = cc::cc_residual(&sys, &cfg).unwrap();
            assert!(
                r.norm < 1e-12,
                "ordering {order:?} residual {:.3e}",
                r.norm
            );
        }
    }

    #[test]
    fn equilateral_is_central_for_any_masses() {
        let sys = MassSystem::newtonian(vec![0.3, 1.7, 4.1]).unwrap();
        let cfg = lagrange_equilateral_config(&sys);
        let r = cc::cc_residual(&sys, &cfg).unwrap();
        assert!(r.norm < 1e-13);
    }

    #[test]
    fn two_satellite_limit_gaps() {
        // Newtonian: gaps pi/3 (equilateral with the central mass) and pi
        let gaps = coorbital_two_satellite_gaps(-1.5, 20000);
        assert_eq!(gaps.len(), 2);
        assert_relative_eq!(gaps[0], std::f64::consts::FRAC_PI_3, epsilon = 1e-6);
        assert_relative_eq!(gaps[1], std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn fd_gradient_on_quadratic() {
        let g = fd_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, 5.0], 1e-6);
        assert_relative_eq!(g[0], 4.0, epsilon = 1e-8);
        assert_relative_eq!(g[1], 3.0, epsilon = 1e-8);
    }

    #[test]
    fn bruteforce_convexity_on_known_shapes() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(quadrilateral_is_convex_bruteforce(&square));
        let dart = [[0.0, 0.0], [1.0, 0.0], [0.2, 0.2], [0.0, 1.0]];
        assert!(!quadrilateral_is_convex_bruteforce(&dart));
    }
}
