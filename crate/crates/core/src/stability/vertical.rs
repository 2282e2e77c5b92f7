//! Vertical-variation diagnostics of a planar central configuration: the
//! scalar operator `(A z)_i = sum_{j != i} m_j r_ij^{2a} (z_i - z_j)` acting
//! on per-body vertical displacements, the multiplicity of the multiplier in
//! its spectrum, and the rank data of the mutual-distance tensor
//! `alpha = dg` with `g = 2U + lambda I`.

use nalgebra::DMatrix;

use crate::cc::CentralConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CorankDiag {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Kernel dimension on R^n (the all-ones vector is always inside).
    pub kernel_dim: usize,
}

#[derive(Debug, Clone)]
pub struct VerticalReport {
    /// Spectrum of the vertical operator, ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda_multiplicity: usize,
    pub vertical_degenerate: bool,
    /// max |(A 1)_i|: the constant vector must be annihilated.
    pub constant_mode_residual: f64,
    /// max residual of A x = lambda x over the two planar coordinate vectors.
    pub coordinate_mode_residual: f64,
    pub corank: CorankDiag,
}

/// Vertical operator as an n x n matrix (not symmetric; symmetric in the
/// mass inner product).
pub fn vertical_operator(cc: &CentralConfig) -> DMatrix<f64> {
    let sys = &cc.system;
    let cfg = &cc.config;
    let n = cfg.n();
    let a2 = 2.0 * sys.exponent();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = cfg.distance(i, j).powf(a2);
            m[(i, j)] = -sys.mass(j) * w;
            diag += sys.mass(j) * w;
        }
        m[(i, i)] = diag;
    }
    m
}

/// Mutual-distance tensor of `g = 2U + lambda I`: the weighted Laplacian of
/// `c_ij = m_i m_j (lambda / M - r_ij^{2a})`. At a central configuration it
/// annihilates the all-ones vector and every coordinate vector.
pub fn corank_tensor(cc: &CentralConfig) -> DMatrix<f64> {
    let sys = &cc.system;
    let cfg = &cc.config;
    let n = cfg.n();
    let a2 = 2.0 * sys.exponent();
    let lam_over_m = cc.multiplier / sys.total_mass();
    let mut alpha = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = sys.mass(i) * sys.mass(j) * (lam_over_m - cfg.distance(i, j).powf(a2));
            alpha[(i, j)] = -c;
            diag += c;
        }
        alpha[(i, i)] = diag;
    }
    alpha
}

pub fn vertical_report(cc: &CentralConfig) -> Result<VerticalReport> {
    if cc.config.dim() != 2 {
        return Err(Error::NotPlanar);
    }
    let sys = &cc.system;
    let cfg = &cc.config;
    let n = cfg.n();
    let a = vertical_operator(cc);

    // symmetrize with D = diag(sqrt m): D A D^{-1}
    let mut sym = a.clone();
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] *= (sys.mass(i) / sys.mass(j)).sqrt();
        }
    }
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(f64::total_cmp);

    let lambda = cc.multiplier;
    let tol = 1e-9 * lambda.abs().max(1.0);
    let lambda_multiplicity = eigenvalues.iter().filter(|e| (*e - lambda).abs() <= tol).count();

    let ones = nalgebra::DVector::from_element(n, 1.0);
    let constant_mode_residual = (&a * &ones).abs().max();

    let mut coord_resid = 0.0f64;
    for k in 0..2 {
        let x = nalgebra::DVector::from_iterator(n, (0..n).map(|i| cfg.pos(i)[k]));
        let r = &a * &x - &x * lambda;
        coord_resid = coord_resid.max(r.abs().max());
    }

    let alpha = corank_tensor(cc);
    let sv = alpha.svd(false, false);
    let singular_values: Vec<f64> = sv.singular_values.iter().cloned().collect();
    let smax = singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank_tol = 1e-9 * smax.max(lambda.abs()).max(1.0);
    let rank = singular_values.iter().filter(|s| **s > rank_tol).count();

    Ok(VerticalReport {
        lambda_multiplicity,
        vertical_degenerate: lambda_multiplicity > 2,
        constant_mode_residual,
        coordinate_mode_residual: coord_resid,
        eigenvalues,
        corank: CorankDiag {
            rank,
            kernel_dim: n - rank,
            singular_values,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::normalize;
    use crate::oracles;
    use crate::system::{Configuration, MassSystem};
    use approx::assert_relative_eq;

    #[test]
    fn equilateral_any_masses_has_multiplicity_two() {
        for masses in [vec![1.0, 1.0, 1.0], vec![2.0, 0.5, 1.3]] {
            let sys = MassSystem::newtonian(masses).unwrap();
            let cc = normalize(&sys, &oracles::lagrange_equilateral_config(&sys)).unwrap();
            let rep = vertical_report(&cc).unwrap();
            assert_eq!(rep.lambda_multiplicity, 2);
            assert!(!rep.vertical_degenerate);
            assert!(rep.constant_mode_residual < 1e-12);
            assert!(rep.coordinate_mode_residual < 1e-9);
            // 3x3 spectrum is exactly {0, lambda, lambda}
            assert_relative_eq!(rep.eigenvalues[0], 0.0, epsilon = 1e-12);
            assert_relative_eq!(rep.eigenvalues[1], cc.multiplier, epsilon = 1e-9);
            assert_relative_eq!(rep.eigenvalues[2], cc.multiplier, epsilon = 1e-9);
            // the equilateral tensor alpha vanishes identically
            assert_eq!(rep.corank.rank, 0);
        }
    }

    #[test]
    fn square_is_not_vertically_degenerate() {
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let cfg =
            Configuration::new(vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5], 2).unwrap();
        let cc = normalize(&sys, &cfg).unwrap();
        let rep = vertical_report(&cc).unwrap();
        assert_eq!(rep.lambda_multiplicity, 2);
        assert!(!rep.vertical_degenerate);
        assert!(rep.constant_mode_residual < 1e-12);
        // square spectrum: {0, lambda, lambda, extra} with the extra mode
        // strictly above lambda
        assert!(rep.eigenvalues[3] > cc.multiplier + 0.1);
    }

    #[test]
    fn adding_constants_does_not_change_the_verdict() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cc = normalize(&sys, &oracles::lagrange_equilateral_config(&sys)).unwrap();
        let a = vertical_operator(&cc);
        let n = 3;
        let z = nalgebra::DVector::from_column_slice(&[0.3, -0.7, 0.4]);
        let shifted = &z + nalgebra::DVector::from_element(n, 5.0);
        let az = &a * &z;
        let az_shifted = &a * &shifted;
        for i in 0..n {
            assert_relative_eq!(az[i], az_shifted[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn five_body_tensor_rank_obeys_the_kernel_bounds() {
        // the tensor annihilates the all-ones vector and every coordinate
        // vector, so rank <= 2 for genuinely planar entries and <= 3 for
        // collinear ones (n = 5)
        let sys = MassSystem::newtonian(vec![1.0; 5]).unwrap();
        let census = crate::cc::find_cc_multistart(
            &sys,
            &crate::cc::CensusOptions {
                n_starts: 150,
                seed: 77,
                ..Default::default()
            },
        );
        assert!(!census.is_empty());
        for e in &census.entries {
            let rep = vertical_report(&e.cc).unwrap();
            let bound = match e.classification.geometry {
                crate::cc::Geometry::Collinear => 3,
                _ => 2,
            };
            assert!(
                rep.corank.rank <= bound,
                "rank {} exceeds bound {bound} at lambda {}",
                rep.corank.rank,
                e.cc.multiplier
            );
        }
    }
}
