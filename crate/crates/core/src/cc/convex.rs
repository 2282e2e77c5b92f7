//! Convex four-body central configurations per cyclic order.

use std::collections::BTreeMap;

use rand::Rng;

use super::census::{build_census, Census, CensusOptions};
use super::classify::{CyclicOrder, Geometry};
use super::solve::gauss_newton_refine;
use super::{gauge_fix, normalize};
use crate::rng::{par_map_tasks, task_rng};
use crate::system::{Configuration, MassSystem};

/// Convex start of a prescribed cyclic order: the four bodies are placed
/// around a jittered ellipse following the target cycle.
fn convex_start(order: &CyclicOrder, rng: &mut impl Rng) -> Configuration {
    let base: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let ecc: f64 = rng.random_range(0.6..1.0);
    let mut coords = vec![0.0; 8];
    for (slot, &body) in order.0.iter().enumerate() {
        let jitter: f64 = rng.random_range(-0.4..0.4);
        let theta = base + slot as f64 * std::f64::consts::FRAC_PI_2 + jitter;
        let r: f64 = rng.random_range(0.7..1.3);
        coords[body * 2] = r * theta.cos();
        coords[body * 2 + 1] = r * ecc * theta.sin();
    }
    Configuration::new(coords, 2).unwrap()
}

/// For each of the three cyclic orders, the distinct convex central
/// configurations found by a seeded constrained multistart.
pub fn convex_cc_per_cyclic_order(
    masses: &[f64],
    seed: u64,
    starts_per_order: usize,
) -> crate::error::Result<BTreeMap<CyclicOrder, Census>> {
    assert_eq!(masses.len(), 4, "cyclic-order search is a 4-body question");
    let sys = MassSystem::newtonian(masses.to_vec())?;
    let mut out = BTreeMap::new();
    for (oi, order) in CyclicOrder::all().into_iter().enumerate() {
        let opts = CensusOptions {
            n_starts: starts_per_order,
            seed,
            collinear_seeds: false,
            ..Default::default()
        };
        let candidates = par_map_tasks(starts_per_order, |task| {
            let mut rng = task_rng(seed, (oi * starts_per_order + task) as u64);
            let mut start = convex_start(&order, &mut rng);
            gauge_fix(&sys, &mut start);
            let solved = gauss_newton_refine(&sys, &start, &opts.solve)?;
            let cc = normalize(&sys, &solved).ok()?;
            let class = super::classify::classify(&sys, &cc.config);
            (class.geometry == Geometry::PlanarConvex && class.cyclic_order == Some(order))
                .then_some(cc)
        });
        let census = build_census(&sys, &opts, candidates);
        out.insert(order, census);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shape_distance;

    #[test]
    fn equal_masses_give_the_square_for_every_order() {
        let map = convex_cc_per_cyclic_order(&[1.0; 4], 21, 80).unwrap();
        assert_eq!(map.len(), 3);
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let mut square =
            Configuration::new(vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5], 2).unwrap();
        super::super::gauge_fix(&sys, &mut square);
        for (order, census) in &map {
            assert_eq!(census.len(), 1, "order {order}");
            let d = shape_distance(
                &sys,
                &census.entries[0].cc.config,
                &square,
                true,
                1e-4,
            );
            assert!(d < 1e-8, "order {order}: distance to square {d}");
        }
    }

    #[test]
    fn equal_diagonal_masses_give_one_symmetric_class_per_order() {
        // bodies 0,1 carry mass 1 and bodies 2,3 mass 2
        let map = convex_cc_per_cyclic_order(&[1.0, 1.0, 2.0, 2.0], 33, 120).unwrap();
        for (order, census) in &map {
            assert_eq!(census.len(), 1, "order {order} found {}", census.len());
        }
        // order 0-2-1-3 puts the equal pairs on the diagonals: kite symmetry
        let kite_order = CyclicOrder([0, 2, 1, 3]);
        let kite = &map[&kite_order].entries[0];
        assert!(
            kite.classification.reflection_axes >= 1,
            "diagonal-equal order should be reflection-symmetric"
        );
    }
}
