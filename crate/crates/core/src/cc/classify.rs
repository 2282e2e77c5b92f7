//! Geometric classification of central configurations: collinearity,
//! convexity and cyclic order, detected symmetry group, co-circularity.

use serde::{Deserialize, Serialize};

use crate::geometry;
use crate::system::{Configuration, MassSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Collinear,
    PlanarConvex,
    PlanarNonconvex,
    Spatial,
}

/// Canonical cyclic order of a convex planar 4-body configuration: the hull
/// cycle rotated to start at body 0, direction fixed so the second entry is
/// smaller than the last. Three values are possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CyclicOrder(pub [usize; 4]);

impl CyclicOrder {
    /// All three cyclic orders of four bodies.
    pub fn all() -> [CyclicOrder; 3] {
        [
            CyclicOrder([0, 1, 2, 3]),
            CyclicOrder([0, 1, 3, 2]),
            CyclicOrder([0, 2, 1, 3]),
        ]
    }

    pub fn canonicalize(cycle: [usize; 4]) -> CyclicOrder {
        let start = cycle.iter().position(|&i| i == 0).expect("body 0 in cycle");
        let rot: [usize; 4] = std::array::from_fn(|k| cycle[(start + k) % 4]);
        if rot[1] < rot[3] {
            CyclicOrder(rot)
        } else {
            CyclicOrder([rot[0], rot[3], rot[2], rot[1]])
        }
    }
}

impl std::fmt::Display for CyclicOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // 1-based for human-facing output
        write!(
            f,
            "{}-{}-{}-{}",
            self.0[0] + 1,
            self.0[1] + 1,
            self.0[2] + 1,
            self.0[3] + 1
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub geometry: Geometry,
    /// Defined exactly for planar-convex 4-body configurations.
    pub cyclic_order: Option<CyclicOrder>,
    /// Order of the detected symmetry group (identity included).
    pub symmetry_order: usize,
    /// Number of reflection elements in the group.
    pub reflection_axes: usize,
    pub cocircular: bool,
    pub com_at_circumcenter: bool,
}

const COLLINEAR_TOL: f64 = 1e-8;
const CIRCLE_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-9;

/// Classify a centered configuration.
pub fn classify(sys: &MassSystem, cfg: &Configuration) -> Classification {
    let n = cfg.n();
    let collinear = geometry::is_collinear(cfg, COLLINEAR_TOL);
    let planar = cfg.dim() == 2 || cfg.is_planar(COLLINEAR_TOL);

    let geometry = if collinear {
        Geometry::Collinear
    } else if !planar {
        Geometry::Spatial
    } else if cfg.dim() == 2 && geometry::is_strictly_convex(cfg, 1e-10) {
        Geometry::PlanarConvex
    } else {
        Geometry::PlanarNonconvex
    };

    let cyclic_order = if geometry == Geometry::PlanarConvex && n == 4 {
        let hull = geometry::convex_hull_indices(cfg, 1e-10);
        let cycle: [usize; 4] = [hull[0], hull[1], hull[2], hull[3]];
        Some(CyclicOrder::canonicalize(cycle))
    } else {
        None
    };

    let elements = geometry::detect_symmetries(sys, cfg, SYMMETRY_TOL);
    let reflection_axes = geometry::reflection_axis_count(&elements);

    let (cocircular, com_at_circumcenter) = if cfg.dim() == 2 && n >= 3 && !collinear {
        match geometry::fit_circle(cfg) {
            Some((center, radius, dev)) => {
                let on_circle = dev / radius < CIRCLE_TOL;
                let com_centered =
                    (center[0].powi(2) + center[1].powi(2)).sqrt() / radius < CIRCLE_TOL;
                (on_circle, on_circle && com_centered)
            }
            None => (false, false),
        }
    } else {
        (false, false)
    };

    Classification {
        geometry,
        cyclic_order,
        symmetry_order: elements.len(),
        reflection_axes,
        cocircular,
        com_at_circumcenter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_classification() {
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let cfg =
            Configuration::new(vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5], 2).unwrap();
        let c = classify(&sys, &cfg);
        assert_eq!(c.geometry, Geometry::PlanarConvex);
        assert_eq!(c.cyclic_order, Some(CyclicOrder([0, 1, 2, 3])));
        assert_eq!(c.symmetry_order, 8);
        assert_eq!(c.reflection_axes, 4);
        assert!(c.cocircular);
        assert!(c.com_at_circumcenter);
    }

    #[test]
    fn collinear_classification() {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let c = classify(&sys, &cfg);
        assert_eq!(c.geometry, Geometry::Collinear);
        assert!(c.cyclic_order.is_none());
        assert!(!c.cocircular);
        assert!(c.reflection_axes >= 1);
    }

    #[test]
    fn centered_triangle_is_nonconvex() {
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let mut cfg = Configuration::new(
            vec![0.0, 0.0, 1.0, 0.0, 0.5, h, 0.5, h / 3.0],
            2,
        )
        .unwrap();
        cfg.recenter(&sys);
        let c = classify(&sys, &cfg);
        assert_eq!(c.geometry, Geometry::PlanarNonconvex);
        assert!(!c.cocircular);
    }

    #[test]
    fn cyclic_order_canonicalization() {
        assert_eq!(
            CyclicOrder::canonicalize([2, 1, 0, 3]),
            CyclicOrder([0, 1, 2, 3])
        );
        assert_eq!(
            CyclicOrder::canonicalize([0, 3, 2, 1]),
            CyclicOrder([0, 1, 2, 3])
        );
        assert_eq!(
            CyclicOrder::canonicalize([3, 0, 1, 2]),
            CyclicOrder([0, 1, 2, 3])
        );
        assert_eq!(
            CyclicOrder::canonicalize([0, 2, 1, 3]),
            CyclicOrder([0, 2, 1, 3])
        );
        assert_eq!(
            CyclicOrder::canonicalize([0, 3, 1, 2]),
            CyclicOrder([0, 2, 1, 3])
        );
    }
}
