//! Linear stability of relative equilibria: the rotating-frame linearization
//! with its trivial modes identified and removed, plus Morse data of the
//! force function on the shape sphere and vertical-variation diagnostics.

pub mod morse;
pub mod vertical;

pub use morse::{morse_report, MorseReport};
pub use vertical::{vertical_report, CorankDiag, VerticalReport};

use nalgebra::{Complex, DMatrix, DVector};

use crate::cc::CentralConfig;
use crate::dynamics;
use crate::error::{Error, Result};

/// A planar central configuration rotating rigidly at the rate fixed by its
/// multiplier (`omega^2 = lambda`).
#[derive(Debug, Clone)]
pub struct RelativeEquilibrium {
    pub cc: CentralConfig,
    pub omega: f64,
}

impl RelativeEquilibrium {
    pub fn from_cc(cc: &CentralConfig) -> Result<Self> {
        if cc.config.dim() != 2 {
            return Err(Error::NotPlanar);
        }
        if cc.multiplier <= 0.0 {
            return Err(Error::NotCentral(format!(
                "multiplier {} is not positive",
                cc.multiplier
            )));
        }
        Ok(Self {
            omega: cc.multiplier.sqrt(),
            cc: cc.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub omega: f64,
    /// All eigenvalues of the center-of-mass-reduced linearization (4n - 4).
    pub eigenvalues: Vec<Complex<f64>>,
    /// The identified trivial modes: the rotation zero pair and the
    /// homothety (Kepler) pair.
    pub trivial: Vec<Complex<f64>>,
    /// Eigenvalues that decide stability.
    pub nontrivial: Vec<Complex<f64>>,
    pub max_real_part: f64,
    pub linearly_stable: bool,
    /// Set when trivial-mode identification or the semisimplicity test was
    /// not clear-cut; never silently classified.
    pub flags: Vec<String>,
}

/// Orthonormal basis of the hyperplane `{x in R^n : sum m_i x_i = 0}` as the
/// trailing n-1 columns of the Householder reflector sending m onto e_0.
fn com_complement_basis(masses: &[f64]) -> DMatrix<f64> {
    let n = masses.len();
    let mut u = DVector::from_column_slice(masses);
    u /= u.norm();
    let mut w = u.clone();
    w[0] -= 1.0;
    let wn = w.norm();
    if wn < 1e-14 {
        // masses already along e_0: complement is e_1..e_{n-1}
        let mut b = DMatrix::zeros(n, n - 1);
        for k in 1..n {
            b[(k, k - 1)] = 1.0;
        }
        return b;
    }
    w /= wn;
    let mut b = DMatrix::zeros(n, n - 1);
    for col in 1..n {
        for row in 0..n {
            let h = ((row == col) as usize as f64) - 2.0 * w[row] * w[col];
            b[(row, col - 1)] = h;
        }
    }
    b
}

/// Rotating-frame linearization of the relative equilibrium, restricted to
/// the invariant subspace with the center of mass fixed, as a real matrix of
/// size (4n - 4).
pub fn reduced_linearization(re: &RelativeEquilibrium) -> Result<DMatrix<f64>> {
    let sys = &re.cc.system;
    let cfg = &re.cc.config;
    let n = cfg.n();
    let omega = re.omega;
    let a_jac = dynamics::acceleration_jacobian(sys, cfg)?;
    let nd = 2 * n;

    // B = dA + omega^2 Id, C = -2 omega Jhat
    let mut b = a_jac;
    for k in 0..nd {
        b[(k, k)] += omega * omega;
    }

    let basis = com_complement_basis(sys.masses());
    let m = n - 1;
    // interleaved embedding: E[(2i + axis, 2c + axis)] = basis[(i, c)]
    let mut e = DMatrix::zeros(nd, 2 * m);
    for i in 0..n {
        for c in 0..m {
            e[(2 * i, 2 * c)] = basis[(i, c)];
            e[(2 * i + 1, 2 * c + 1)] = basis[(i, c)];
        }
    }

    let br = e.transpose() * &b * &e;
    // Jhat commutes with the interleaved embedding, so reduce it directly
    let mut jr = DMatrix::zeros(2 * m, 2 * m);
    for c in 0..m {
        jr[(2 * c, 2 * c + 1)] = -1.0;
        jr[(2 * c + 1, 2 * c)] = 1.0;
    }

    let dim = 4 * m;
    let mut l = DMatrix::zeros(dim, dim);
    for r in 0..2 * m {
        l[(r, 2 * m + r)] = 1.0;
        for c in 0..2 * m {
            l[(2 * m + r, c)] = br[(r, c)];
            l[(2 * m + r, 2 * m + c)] = -2.0 * omega * jr[(r, c)];
        }
    }
    Ok(l)
}

/// Stability threshold on the real part of nontrivial eigenvalues.
const RE_TOL: f64 = 1e-8;
/// Rank tolerance of the semisimplicity test.
const RANK_TOL: f64 = 1e-7;

/// Linearize the relative equilibrium, strip the trivial modes, and judge
/// linear stability.
pub fn linearize_re(re: &RelativeEquilibrium) -> Result<SpectrumReport> {
    let l = reduced_linearization(re)?;
    let eig = l.clone().complex_eigenvalues();
    let mut eigenvalues: Vec<Complex<f64>> = eig.iter().cloned().collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let omega = re.omega;
    let mut flags = Vec::new();
    let mut remaining = eigenvalues.clone();
    let mut trivial = Vec::new();

    // rotation: algebraic double zero
    for _ in 0..2 {
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| x.norm().total_cmp(&y.norm()))
            .expect("spectrum nonempty");
        let v = remaining.remove(idx);
        if v.norm() > 1e-6 * omega.max(1.0) {
            flags.push(format!(
                "rotation zero mode off by {:.3e}",
                v.norm()
            ));
        }
        trivial.push(v);
    }

    // homothety pair: mu^2 = -(2a + 4) omega^2
    let a = re.cc.system.exponent();
    let kappa2 = -(2.0 * a + 4.0) * omega * omega;
    let targets: [Complex<f64>; 2] = if kappa2 <= 0.0 {
        let k = (-kappa2).sqrt();
        [Complex::new(0.0, k), Complex::new(0.0, -k)]
    } else {
        let k = kappa2.sqrt();
        [Complex::new(k, 0.0), Complex::new(-k, 0.0)]
    };
    for t in targets {
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| ((*x) - t).norm().total_cmp(&(**y - t).norm()))
            .expect("spectrum nonempty");
        let v = remaining.remove(idx);
        if (v - t).norm() > 1e-6 * omega.max(1.0) {
            flags.push(format!(
                "homothety mode {:.6e}{:+.6e}i off target by {:.3e}",
                v.re,
                v.im,
                (v - t).norm()
            ));
        }
        trivial.push(v);
    }

    let max_real_part = remaining.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let spectral = eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);

    let mut stable = max_real_part < RE_TOL && flags.is_empty();
    if stable {
        // semisimplicity of clustered imaginary eigenvalues
        let mut sorted: Vec<Complex<f64>> = remaining.clone();
        sorted.sort_by(|a, b| a.im.total_cmp(&b.im));
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && (sorted[j] - sorted[i]).norm() < RANK_TOL * spectral {
                j += 1;
            }
            let mult = j - i;
            if mult >= 2 {
                let mu = sorted[i];
                let dim = l.nrows();
                let mut shifted = DMatrix::<Complex<f64>>::zeros(dim, dim);
                for r in 0..dim {
                    for c in 0..dim {
                        shifted[(r, c)] = Complex::new(l[(r, c)], 0.0);
                    }
                    shifted[(r, r)] -= mu;
                }
                let sv = shifted.singular_values();
                let smax = sv.max();
                let null = sv.iter().filter(|s| **s < RANK_TOL * smax).count();
                if null < mult {
                    stable = false;
                    flags.push(format!(
                        "eigenvalue {:.6e}{:+.6e}i has algebraic multiplicity {mult} but nullity {null}",
                        mu.re, mu.im
                    ));
                }
            }
            i = j;
        }
    }

    Ok(SpectrumReport {
        omega,
        eigenvalues,
        trivial,
        nontrivial: remaining,
        max_real_part,
        linearly_stable: stable,
        flags,
    })
}

/// The classical three-body linear-stability inequality:
/// `27 (m1 m2 + m1 m3 + m2 m3) < M^2`.
pub fn lagrange_mass_inequality(masses: &[f64]) -> bool {
    assert_eq!(masses.len(), 3);
    let (m1, m2, m3) = (masses[0], masses[1], masses[2]);
    let m = m1 + m2 + m3;
    27.0 * (m1 * m2 + m1 * m3 + m2 * m3) < m * m
}

/// Evaluate det(zI - L) / prod(z - mu_i) at random probe points; returns the
/// largest relative mismatch (a consistency check on the eigenvalue solve).
pub fn charpoly_consistency(l: &DMatrix<f64>, eigenvalues: &[Complex<f64>], probes: u64) -> f64 {
    use rand::Rng;
    let dim = l.nrows();
    let radius = 2.0 * eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut rng = crate::rng::task_rng(0xC0FFEE, probes);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex::new(radius * theta.cos(), radius * theta.sin());
        let mut shifted = DMatrix::<Complex<f64>>::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                shifted[(r, c)] = Complex::new(-l[(r, c)], 0.0);
            }
            shifted[(r, r)] += z;
        }
        let det = shifted.lu().determinant();
        let prod = eigenvalues
            .iter()
            .fold(Complex::new(1.0, 0.0), |acc, mu| acc * (z - mu));
        let denom = det.norm().max(prod.norm()).max(1e-300);
        worst = worst.max((det - prod).norm() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::normalize;
    use crate::oracles;
    use crate::system::MassSystem;

    fn lagrange_re(masses: Vec<f64>) -> RelativeEquilibrium {
        let sys = MassSystem::newtonian(masses).unwrap();
        let cfg = oracles::lagrange_equilateral_config(&sys);
        let cc = normalize(&sys, &cfg).unwrap();
        RelativeEquilibrium::from_cc(&cc).unwrap()
    }

    #[test]
    fn dominant_mass_equilateral_is_linearly_stable() {
        let re = lagrange_re(vec![100.0, 1.0, 0.01]);
        let report = linearize_re(&re).unwrap();
        assert!(report.linearly_stable, "flags: {:?}", report.flags);
        assert!(report.max_real_part < 1e-8);
        assert!(re.cc.system.dominant_mass_ratio() > 10.0);
    }

    #[test]
    fn equal_mass_equilateral_is_unstable() {
        let re = lagrange_re(vec![1.0, 1.0, 1.0]);
        let report = linearize_re(&re).unwrap();
        assert!(!report.linearly_stable);
        assert!(report.max_real_part > 0.1);
    }

    #[test]
    fn equal_mass_square_is_unstable() {
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let cfg = crate::system::Configuration::new(
            vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5],
            2,
        )
        .unwrap();
        let cc = normalize(&sys, &cfg).unwrap();
        let re = RelativeEquilibrium::from_cc(&cc).unwrap();
        let report = linearize_re(&re).unwrap();
        assert!(!report.linearly_stable);
        assert!(report.max_real_part > 0.1);
    }

    #[test]
    fn two_body_re_is_stable_with_empty_nontrivial_part() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0]).unwrap();
        let cfg =
            crate::system::Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        let cc = normalize(&sys, &cfg).unwrap();
        let re = RelativeEquilibrium::from_cc(&cc).unwrap();
        let report = linearize_re(&re).unwrap();
        assert!(report.nontrivial.is_empty());
        assert!(report.linearly_stable, "flags {:?}", report.flags);
    }

    #[test]
    fn spectrum_has_hamiltonian_symmetry() {
        let re = lagrange_re(vec![1.0, 2.0, 3.0]);
        let report = linearize_re(&re).unwrap();
        for mu in &report.eigenvalues {
            for image in [-mu, mu.conj()] {
                let closest = report
                    .eigenvalues
                    .iter()
                    .map(|z| (z - image).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(closest < 1e-8, "missing partner of {mu}");
            }
        }
    }

    #[test]
    fn stability_agrees_with_mass_inequality_on_random_masses() {
        let mut rng = crate::rng::task_rng(55, 0);
        use rand::Rng;
        for _ in 0..25 {
            let masses = vec![
                rng.random_range(0.01..50.0),
                rng.random_range(0.01..5.0),
                rng.random_range(0.01..5.0),
            ];
            let predicted = lagrange_mass_inequality(&masses);
            // skip samples too close to the boundary for a clean verdict
            let m: f64 = masses.iter().sum();
            let beta = 27.0 * (masses[0] * masses[1] + masses[0] * masses[2] + masses[1] * masses[2])
                / (m * m);
            if (beta - 1.0).abs() < 1e-3 {
                continue;
            }
            let re = lagrange_re(masses.clone());
            let report = linearize_re(&re).unwrap();
            assert_eq!(
                report.linearly_stable, predicted,
                "masses {masses:?} beta {beta}"
            );
        }
    }

    #[test]
    fn charpoly_cross_check_on_lagrange() {
        let re = lagrange_re(vec![5.0, 1.0, 0.5]);
        let l = reduced_linearization(&re).unwrap();
        let report = linearize_re(&re).unwrap();
        let worst = charpoly_consistency(&l, &report.eigenvalues, 10);
        assert!(worst < 1e-6, "char-poly mismatch {worst:.3e}");
    }
}
