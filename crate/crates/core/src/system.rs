//! Problem instances: masses with an interaction exponent, configurations
//! of point positions, and full phase states.

use crate::error::{Error, Result};

/// Masses, interaction exponent and ambient dimension of one problem instance.
///
/// The interaction force on body i is `sum_j m_j r_ij^{2a} (q_j - q_i)`;
/// `a = -3/2` is the Newtonian case. Units absorb the gravitational constant
/// into the masses (G = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MassSystem {
    masses: Vec<f64>,
    exponent: f64,
    dim: usize,
}

impl MassSystem {
    pub fn new(masses: Vec<f64>, exponent: f64, dim: usize) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 bodies, got {}",
                masses.len()
            )));
        }
        if let Some((i, &m)) = masses
            .iter()
            .enumerate()
            .find(|(_, &m)| !(m > 0.0) || !m.is_finite())
        {
            return Err(Error::InvalidInstance(format!(
                "mass {i} must be a positive finite number, got {m}"
            )));
        }
        if exponent == -1.0 || !exponent.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "exponent must be finite and different from -1, got {exponent}"
            )));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInstance(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        Ok(Self {
            masses,
            exponent,
            dim,
        })
    }

    /// Newtonian system (`a = -3/2`) in the plane.
    pub fn newtonian(masses: Vec<f64>) -> Result<Self> {
        Self::new(masses, -1.5, 2)
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Same masses and exponent in a different ambient dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.masses.clone(), self.exponent, dim)
    }

    /// Same masses in the same dimension with a different exponent.
    pub fn with_exponent(&self, exponent: f64) -> Result<Self> {
        Self::new(self.masses.clone(), exponent, self.dim)
    }

    /// Largest mass divided by the total mass of the remaining bodies.
    pub fn dominant_mass_ratio(&self) -> f64 {
        let max = self.masses.iter().cloned().fold(f64::MIN, f64::max);
        max / (self.total_mass() - max)
    }
}

/// Positions of n bodies in R^d, stored flat as `[q_0x, q_0y, (q_0z,) q_1x, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    coords: Vec<f64>,
    dim: usize,
}

impl Configuration {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInstance(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidInstance(format!(
                "coordinate count {} is not a positive multiple of dim {dim}",
                coords.len()
            )));
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>], dim: usize) -> Result<Self> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInstance(format!(
                    "position {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, dim)
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn pos(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Euclidean distance between bodies i and j.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.pos(i), self.pos(j));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let n = self.n();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                min = min.min(self.distance(i, j));
            }
        }
        min
    }

    /// Fails with the offending pair if any two bodies coincide.
    pub fn check_separated(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.distance(i, j) == 0.0 {
                    return Err(Error::CoincidentBodies { i, j });
                }
            }
        }
        Ok(())
    }

    pub fn center_of_mass(&self, sys: &MassSystem) -> Vec<f64> {
        let d = self.dim;
        let mut com = vec![0.0; d];
        for i in 0..self.n() {
            for k in 0..d {
                com[k] += sys.mass(i) * self.coords[i * d + k];
            }
        }
        let m = sys.total_mass();
        com.iter_mut().for_each(|c| *c /= m);
        com
    }

    pub fn translate(&mut self, shift: &[f64]) {
        let d = self.dim;
        for i in 0..self.n() {
            for k in 0..d {
                self.coords[i * d + k] += shift[k];
            }
        }
    }

    pub fn recenter(&mut self, sys: &MassSystem) {
        let com = self.center_of_mass(sys);
        let neg: Vec<f64> = com.iter().map(|c| -c).collect();
        self.translate(&neg);
    }

    pub fn scale(&mut self, s: f64) {
        self.coords.iter_mut().for_each(|c| *c *= s);
    }

    /// True when the configuration spans at most a plane (always true for d = 2).
    pub fn is_planar(&self, tol: f64) -> bool {
        if self.dim == 2 {
            return true;
        }
        let n = self.n();
        let mut mean = [0.0; 3];
        for i in 0..n {
            for k in 0..3 {
                mean[k] += self.coords[i * 3 + k] / n as f64;
            }
        }
        let mut m = nalgebra::DMatrix::<f64>::zeros(3, n);
        for i in 0..n {
            for k in 0..3 {
                m[(k, i)] = self.coords[i * 3 + k] - mean[k];
            }
        }
        let sv = m.singular_values();
        let scale = sv[0].max(1e-300);
        sv[2] / scale < tol
    }
}

/// Positions, velocities and a time stamp: the full state of the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub config: Configuration,
    pub velocities: Vec<f64>,
    pub time: f64,
}

impl PhaseState {
    pub fn new(config: Configuration, velocities: Vec<f64>, time: f64) -> Result<Self> {
        if velocities.len() != config.coords().len() {
            return Err(Error::InvalidInstance(format!(
                "velocity count {} does not match coordinate count {}",
                velocities.len(),
                config.coords().len()
            )));
        }
        Ok(Self {
            config,
            velocities,
            time,
        })
    }

    pub fn at_rest(config: Configuration) -> Self {
        let z = vec![0.0; config.coords().len()];
        Self {
            velocities: z,
            config,
            time: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.config.n()
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn vel(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.velocities[i * d..(i + 1) * d]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_system_rejects_bad_input() {
        assert!(MassSystem::new(vec![1.0], -1.5, 2).is_err());
        assert!(MassSystem::new(vec![1.0, 0.0], -1.5, 2).is_err());
        assert!(MassSystem::new(vec![1.0, -2.0], -1.5, 2).is_err());
        assert!(MassSystem::new(vec![1.0, 1.0], -1.0, 2).is_err());
        assert!(MassSystem::new(vec![1.0, 1.0], -1.5, 4).is_err());
        assert!(MassSystem::new(vec![1.0, 1.0], -1.5, 3).is_ok());
    }

    #[test]
    fn dominant_mass_ratio_examples() {
        let s = MassSystem::newtonian(vec![100.0, 1.0, 0.01]).unwrap();
        assert!((s.dominant_mass_ratio() - 100.0 / 1.01).abs() < 1e-12);
        let s = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        assert!((s.dominant_mass_ratio() - 0.5).abs() < 1e-15);
        let s = MassSystem::newtonian(vec![10.0, 1.0]).unwrap();
        assert!((s.dominant_mass_ratio() - 10.0).abs() < 1e-15);
    }

    #[test]
    fn configuration_accessors() {
        let c = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(c.pos(1), &[0.5, 0.0]);
        assert!((c.distance(0, 1) - 1.0).abs() < 1e-15);
        c.check_separated().unwrap();

        let bad = Configuration::new(vec![0.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert!(matches!(
            bad.check_separated(),
            Err(Error::CoincidentBodies { i: 0, j: 1 })
        ));
    }

    #[test]
    fn recenter_moves_com_to_origin() {
        let sys = MassSystem::newtonian(vec![1.0, 3.0]).unwrap();
        let mut c = Configuration::new(vec![1.0, 2.0, 5.0, -2.0], 2).unwrap();
        c.recenter(&sys);
        let com = c.center_of_mass(&sys);
        assert!(com.iter().all(|x| x.abs() < 1e-15));
    }
}
