//! Deterministic multistart census of central configurations.
//!
//! Starts are seeded per task index from one run seed, solved in parallel,
//! then normalized, sorted by a canonical key and deduplicated under the
//! configured equivalence (rotation and rescaling always; reflection and
//! relabeling of equal masses by default). The result does not depend on
//! the number of worker threads.

use rand::Rng;
use rand_distr::StandardNormal;

use super::classify::{classify, Classification};
use super::solve::{gauss_newton_refine, SolveOptions};
use super::{cc_residual, gauge_fix, normalize_oriented, CentralConfig};
use crate::geometry::shape_distance;
use crate::rng::{par_map_tasks, task_rng};
use crate::system::{Configuration, MassSystem};

#[derive(Debug, Clone)]
pub struct CensusOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Quotient by reflections when comparing classes (on by default; turn
    /// off to match counts in sources that distinguish orientation).
    pub reflections: bool,
    /// Aligned-shape distance below which two solutions are the same class.
    pub dedup_tol: f64,
    /// Also seed collinear starts on every ordering of the bodies.
    pub collinear_seeds: bool,
    pub solve: SolveOptions,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            n_starts: 500,
            seed: 0,
            reflections: true,
            dedup_tol: 1e-6,
            collinear_seeds: true,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassEntry {
    pub cc: CentralConfig,
    pub classification: Classification,
    pub basin_count: usize,
}

#[derive(Debug, Clone)]
pub struct Census {
    pub entries: Vec<ClassEntry>,
    pub masses: Vec<f64>,
    pub exponent: f64,
    pub seed: u64,
    pub n_starts: usize,
    pub converged: usize,
}

impl Census {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Orderings of 0..n up to reversal (first element smaller than last).
fn line_orderings(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut out);
    out.retain(|p| p[0] < p[n - 1]);
    out
}

fn permute(perm: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == perm.len() {
        out.push(perm.clone());
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, out);
        perm.swap(k, i);
    }
}

fn random_start(sys: &MassSystem, rng: &mut impl Rng) -> Configuration {
    let nd = sys.n() * sys.dim();
    let coords: Vec<f64> = (0..nd).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut cfg = Configuration::new(coords, sys.dim()).unwrap();
    gauge_fix(sys, &mut cfg);
    cfg
}

fn collinear_start(sys: &MassSystem, ordering: &[usize], rng: &mut impl Rng) -> Configuration {
    let (n, d) = (sys.n(), sys.dim());
    let mut x = 0.0;
    let mut coords = vec![0.0; n * d];
    for &body in ordering {
        coords[body * d] = x;
        x += rng.random_range(0.5..1.5);
    }
    let mut cfg = Configuration::new(coords, d).unwrap();
    gauge_fix(sys, &mut cfg);
    cfg
}

/// Deterministic sort key for candidate solutions.
fn candidate_key(cc: &CentralConfig) -> (f64, Vec<u64>) {
    (
        cc.multiplier,
        cc.config.coords().iter().map(|c| c.to_bits()).collect(),
    )
}

/// Multistart census of central configurations.
pub fn find_cc_multistart(sys: &MassSystem, opts: &CensusOptions) -> Census {
    let orderings = if opts.collinear_seeds {
        line_orderings(sys.n())
    } else {
        Vec::new()
    };
    let extra_per_ordering = 2usize;
    let n_extra = orderings.len() * extra_per_ordering;
    let total = opts.n_starts + n_extra;

    let candidates: Vec<Option<CentralConfig>> = par_map_tasks(total, |task| {
        let mut rng = task_rng(opts.seed, task as u64);
        let start = if task < opts.n_starts {
            random_start(sys, &mut rng)
        } else {
            let slot = task - opts.n_starts;
            collinear_start(sys, &orderings[slot / extra_per_ordering], &mut rng)
        };
        let solved = gauss_newton_refine(sys, &start, &opts.solve)?;
        normalize_oriented(sys, &solved, opts.reflections).ok()
    });

    build_census(sys, opts, candidates)
}

/// Dedup, classify and package converged candidates.
pub fn build_census(
    sys: &MassSystem,
    opts: &CensusOptions,
    candidates: Vec<Option<CentralConfig>>,
) -> Census {
    let n_starts = candidates.len();
    let mut hits: Vec<CentralConfig> = candidates.into_iter().flatten().collect();
    let converged = hits.len();
    hits.sort_by(|a, b| {
        let (la, ka) = candidate_key(a);
        let (lb, kb) = candidate_key(b);
        la.total_cmp(&lb).then(ka.cmp(&kb))
    });

    // incremental dedup against representatives, in sorted order
    let mut classes: Vec<(CentralConfig, usize)> = Vec::new();
    for cand in hits {
        let mut matched: Vec<usize> = Vec::new();
        for (ci, (rep, _)) in classes.iter().enumerate() {
            if (cand.multiplier - rep.multiplier).abs()
                > 1e-2 * rep.multiplier.abs().max(1.0)
            {
                continue;
            }
            let d = shape_distance(sys, &rep.config, &cand.config, opts.reflections, 1e-4);
            if d < opts.dedup_tol {
                matched.push(ci);
            }
        }
        match matched.as_slice() {
            [] => classes.push((cand, 1)),
            [one] => {
                let slot = &mut classes[*one];
                slot.1 += 1;
                if cand.residual_norm < slot.0.residual_norm {
                    slot.0 = cand;
                }
            }
            many => {
                // candidate bridges several tentative classes: merge them
                let first = many[0];
                for &ci in many[1..].iter().rev() {
                    let (rep, count) = classes.remove(ci);
                    classes[first].1 += count;
                    if rep.residual_norm < classes[first].0.residual_norm {
                        classes[first].0 = rep;
                    }
                }
                classes[first].1 += 1;
            }
        }
    }

    let mut entries: Vec<ClassEntry> = classes
        .into_iter()
        .filter(|(cc, _)| {
            // final residual gate per entry
            cc_residual(sys, &cc.config)
                .map(|r| r.max_per_body < 1e-10)
                .unwrap_or(false)
        })
        .map(|(cc, basin_count)| ClassEntry {
            classification: classify(sys, &cc.config),
            cc,
            basin_count,
        })
        .collect();
    entries.sort_by(|a, b| {
        let (la, ka) = candidate_key(&a.cc);
        let (lb, kb) = candidate_key(&b.cc);
        la.total_cmp(&lb).then(ka.cmp(&kb))
    });

    Census {
        entries,
        masses: sys.masses().to_vec(),
        exponent: sys.exponent(),
        seed: opts.seed,
        n_starts,
        converged,
    }
}

/// Full census of the five equal-mass problem with a symmetry audit:
/// classes whose detected symmetry group is trivial are singled out.
pub struct SymmetryAudit {
    pub census: Census,
    /// Indices into `census.entries` with trivial symmetry group.
    pub asymmetric: Vec<usize>,
}

pub fn five_body_symmetry_audit(seed: u64, n_starts: usize) -> SymmetryAudit {
    let sys = MassSystem::newtonian(vec![1.0; 5]).unwrap();
    let census = find_cc_multistart(
        &sys,
        &CensusOptions {
            n_starts,
            seed,
            ..Default::default()
        },
    );
    let asymmetric = census
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.classification.symmetry_order <= 1)
        .map(|(i, _)| i)
        .collect();
    SymmetryAudit { census, asymmetric }
}
