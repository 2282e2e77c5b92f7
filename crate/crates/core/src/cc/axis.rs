//! Four equal masses with exactly one reflection axis, tracked over an
//! interval of interaction exponents.

use super::census::{find_cc_multistart, CensusOptions, ClassEntry};
use super::solve::{newton_polish, SolveOptions};
use super::{cc_residual, normalize};
use crate::error::Result;
use crate::system::MassSystem;

#[derive(Debug)]
pub struct AxisFamilyPoint {
    pub exponent: f64,
    /// Classes with exactly one reflection axis and no other symmetry.
    pub one_axis: Vec<ClassEntry>,
    /// Size of the full census at this exponent.
    pub census_len: usize,
}

#[derive(Debug)]
pub struct AxisFamilyReport {
    pub points: Vec<AxisFamilyPoint>,
    /// Human-readable notes where the one-axis count changed between
    /// consecutive exponent samples.
    pub bifurcations: Vec<String>,
}

/// Census the one-axis-only central configurations of four equal masses on
/// `n_samples` exponents spanning `[a_lo, a_hi]`, carrying each class to the
/// next exponent by polishing (continuation).
pub fn symmetric_axis_family(
    a_lo: f64,
    a_hi: f64,
    n_samples: usize,
    seed: u64,
    starts: usize,
) -> Result<AxisFamilyReport> {
    assert!(n_samples >= 2 && a_lo < a_hi);
    let mut points: Vec<AxisFamilyPoint> = Vec::with_capacity(n_samples);
    let mut bifurcations = Vec::new();
    let mut carried: Vec<super::CentralConfig> = Vec::new();

    for k in 0..n_samples {
        let a = a_lo + (a_hi - a_lo) * k as f64 / (n_samples - 1) as f64;
        let sys = MassSystem::new(vec![1.0; 4], a, 2)?;
        let mut census = find_cc_multistart(
            &sys,
            &CensusOptions {
                n_starts: starts,
                seed: seed.wrapping_add(k as u64),
                ..Default::default()
            },
        );

        // continuation: polish the previous exponent's classes at this one
        for prev in &carried {
            if let Some(q) = newton_polish(&sys, &prev.config, &SolveOptions::default()) {
                if let Ok(cc) = normalize(&sys, &q) {
                    let already = census.entries.iter().any(|e| {
                        crate::geometry::shape_distance(&sys, &e.cc.config, &cc.config, true, 1e-4)
                            < 1e-6
                    });
                    if !already && cc_residual(&sys, &cc.config).map(|r| r.max_per_body < 1e-10).unwrap_or(false) {
                        census.entries.push(ClassEntry {
                            classification: super::classify::classify(&sys, &cc.config),
                            cc,
                            basin_count: 0,
                        });
                    }
                }
            }
        }

        let one_axis: Vec<ClassEntry> = census
            .entries
            .iter()
            .filter(|e| {
                e.classification.reflection_axes == 1 && e.classification.symmetry_order == 2
            })
            .cloned()
            .collect();
        carried = one_axis.iter().map(|e| e.cc.clone()).collect();

        if let Some(last) = points.last() {
            if last.one_axis.len() != one_axis.len() {
                bifurcations.push(format!(
                    "one-axis class count changed from {} at a = {:.6} to {} at a = {:.6}",
                    last.one_axis.len(),
                    last.exponent,
                    one_axis.len(),
                    a
                ));
            }
        }
        points.push(AxisFamilyPoint {
            exponent: a,
            one_axis,
            census_len: census.entries.len(),
        });
    }

    Ok(AxisFamilyReport {
        points,
        bifurcations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::classify::Geometry;

    #[test]
    fn one_axis_family_over_newtonian_interval() {
        let report = symmetric_axis_family(-1.7, -1.3, 5, 61, 220).unwrap();
        assert_eq!(report.points.len(), 5);
        for p in &report.points {
            // the one-axis census must never contain the square or the
            // centered equilateral (both have richer symmetry groups)
            for e in &p.one_axis {
                assert_eq!(e.classification.symmetry_order, 2);
                assert_eq!(e.classification.reflection_axes, 1);
                assert_ne!(e.classification.geometry, Geometry::Collinear);
            }
            assert!(
                !p.one_axis.is_empty(),
                "expected a one-axis class at a = {}",
                p.exponent
            );
        }
        assert!(
            report.bifurcations.is_empty(),
            "unexpected bifurcations: {:?}",
            report.bifurcations
        );
    }
}
