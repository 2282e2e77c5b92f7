//! Shared geometric machinery: optimal rigid alignment, hull and circle
//! predicates, and detection of mass-preserving symmetries of a configuration.

use nalgebra::DMatrix;

use crate::system::{Configuration, MassSystem};

/// Mass-weighted position matrix W (d x n) with columns `sqrt(m_i) q_i`,
/// so that `||W||_F^2 = I` when the center of mass is at the origin.
pub fn weighted_matrix(sys: &MassSystem, cfg: &Configuration) -> DMatrix<f64> {
    let (n, d) = (cfg.n(), cfg.dim());
    let mut w = DMatrix::zeros(d, n);
    for i in 0..n {
        let s = sys.mass(i).sqrt();
        for k in 0..d {
            w[(k, i)] = s * cfg.coords()[i * d + k];
        }
    }
    w
}

/// Best rotation R (optionally improper) minimising `||A - R B||_F` over
/// d x n matrices, and the attained distance.
pub fn align_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, allow_reflection: bool) -> f64 {
    let h = a * b.transpose();
    let svd = h.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let d = a.nrows();
    let mut s = DMatrix::identity(d, d);
    let det = (u * vt).determinant();
    if det < 0.0 && !allow_reflection {
        s[(d - 1, d - 1)] = -1.0;
    }
    // rotation maximising tr(R^T A B^T); with reflection allowed the sign fix
    // is dropped and the best orthogonal map is used
    let r = if allow_reflection && det < 0.0 {
        u * vt
    } else {
        u * s * vt
    };
    (a - r * b).norm()
}

fn max_pair_distance(cfg: &Configuration) -> f64 {
    let n = cfg.n();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max(cfg.distance(i, j));
        }
    }
    best.max(1e-300)
}

/// Minimal aligned distance between two configurations of the same system,
/// over rotations, optionally reflections, and relabelings of equal masses.
/// `rel_tol` is the relative slack allowed when pre-matching distance
/// profiles (scaled by the configuration size internally).
///
/// Candidate relabelings are enumerated by a distance-matrix backtracking
/// matcher, so only permutations compatible with the mutual-distance profile
/// are ever tried.
pub fn shape_distance(
    sys: &MassSystem,
    a: &Configuration,
    b: &Configuration,
    allow_reflection: bool,
    rel_tol: f64,
) -> f64 {
    let wa = weighted_matrix(sys, a);
    let n = a.n();
    let perms = compatible_permutations(sys, a, b, rel_tol * max_pair_distance(a));
    let mut best = f64::INFINITY;
    for p in perms {
        // permuted copy of b: body p[i] of b plays the role of body i
        let mut coords = vec![0.0; n * b.dim()];
        for i in 0..n {
            coords[i * b.dim()..(i + 1) * b.dim()].copy_from_slice(b.pos(p[i]));
        }
        let bp = Configuration::new(coords, b.dim()).unwrap();
        let wb = weighted_matrix(sys, &bp);
        let d = align_distance(&wa, &wb, allow_reflection);
        if d < best {
            best = d;
        }
    }
    if best.is_infinite() {
        // no distance-compatible relabeling: fall back to identity labels
        let wb = weighted_matrix(sys, b);
        best = align_distance(&wa, &wb, allow_reflection);
    }
    best
}

/// Permutations p with m_{p(i)} = m_i and matching mutual distances within
/// `tol`, found by backtracking. `p[i]` is the body of `b` matched to body
/// `i` of `a`.
pub fn compatible_permutations(
    sys: &MassSystem,
    a: &Configuration,
    b: &Configuration,
    tol: f64,
) -> Vec<Vec<usize>> {
    let n = a.n();
    let mut da = vec![vec![0.0; n]; n];
    let mut db = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            da[i][j] = a.distance(i, j);
            db[i][j] = b.distance(i, j);
        }
    }
    let mut out = Vec::new();
    let mut assign: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    backtrack(sys, &da, &db, tol, &mut assign, &mut used, &mut out, 20_000);
    out
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    sys: &MassSystem,
    da: &[Vec<f64>],
    db: &[Vec<f64>],
    tol: f64,
    assign: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) {
    let n = da.len();
    if out.len() >= cap {
        return;
    }
    let i = assign.len();
    if i == n {
        out.push(assign.clone());
        return;
    }
    for cand in 0..n {
        if used[cand] {
            continue;
        }
        let mass_rel = sys.mass(i).max(sys.mass(cand)).max(1.0);
        if (sys.mass(cand) - sys.mass(i)).abs() > 1e-9 * mass_rel {
            continue;
        }
        let ok = (0..i).all(|k| (db[assign[k]][cand] - da[k][i]).abs() <= tol);
        if ok {
            used[cand] = true;
            assign.push(cand);
            backtrack(sys, da, db, tol, assign, used, out, cap);
            assign.pop();
            used[cand] = false;
        }
    }
}

/// A detected isometry fixing the weighted configuration: applying `matrix`
/// sends body i onto body `perm[i]` (which carries the same mass).
#[derive(Debug, Clone)]
pub struct SymmetryElement {
    pub perm: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub is_reflection: bool,
}

/// All mass-preserving isometries of the configuration about its center of
/// mass, identity included. The configuration must be centered; `tol` is
/// relative to the configuration size.
pub fn detect_symmetries(sys: &MassSystem, cfg: &Configuration, tol: f64) -> Vec<SymmetryElement> {
    let n = cfg.n();
    let d = cfg.dim();
    let perms = compatible_permutations(sys, cfg, cfg, tol * 50.0 * max_pair_distance(cfg));
    let mut out = Vec::new();
    for p in perms {
        // solve for the orthogonal maps sending q_i -> q_{p(i)}; degenerate
        // (collinear) configurations admit one per orientation class
        let mut target = vec![0.0; n * d];
        for i in 0..n {
            target[i * d..(i + 1) * d].copy_from_slice(cfg.pos(p[i]));
        }
        let tc = Configuration::new(target, d).unwrap();
        let wt = weighted_matrix(sys, &tc);
        let wc = weighted_matrix(sys, cfg);
        let h = &wt * wc.transpose();
        let svd = h.svd(true, true);
        let u = svd.u.as_ref().unwrap();
        let vt = svd.v_t.as_ref().unwrap();
        let base_det = (u * vt).determinant();
        for target_det in [1.0, -1.0] {
            let mut s = DMatrix::identity(d, d);
            if base_det * target_det < 0.0 {
                s[(d - 1, d - 1)] = -1.0;
            }
            let r = u * s * vt;
            let resid = (&wt - &r * &wc).norm() / wc.norm().max(1e-300);
            if resid < tol {
                out.push(SymmetryElement {
                    perm: p.clone(),
                    matrix: r,
                    is_reflection: target_det < 0.0,
                });
            }
        }
    }
    out
}

/// Number of reflection elements in the symmetry group (axes for d = 2).
pub fn reflection_axis_count(elements: &[SymmetryElement]) -> usize {
    elements.iter().filter(|e| e.is_reflection).count()
}

/// Strictly convex position test: every body is an extreme point of the
/// convex hull. Planar configurations only.
pub fn is_strictly_convex(cfg: &Configuration, tol: f64) -> bool {
    assert_eq!(cfg.dim(), 2);
    let n = cfg.n();
    if n < 3 {
        return false;
    }
    let hull = convex_hull_indices(cfg, tol);
    hull.len() == n
}

/// Indices of the hull vertices in counterclockwise order (Andrew's monotone
/// chain); points within `tol` of a hull edge are not counted as vertices.
pub fn convex_hull_indices(cfg: &Configuration, tol: f64) -> Vec<usize> {
    let n = cfg.n();
    let scale = (0..n)
        .map(|i| cfg.pos(i))
        .flat_map(|p| p.iter().map(|x| x.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let cross = |o: &[f64], a: &[f64], b: &[f64]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        cfg.pos(i)
            .partial_cmp(cfg.pos(j))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eps = tol * scale * scale;
    let chain = |points: &[usize]| {
        let mut hull: Vec<usize> = Vec::with_capacity(points.len());
        for &i in points {
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                if cross(cfg.pos(o), cfg.pos(a), cfg.pos(i)) <= eps {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        hull
    };
    let mut lower = chain(&idx);
    let rev: Vec<usize> = idx.iter().rev().cloned().collect();
    let mut upper = chain(&rev);
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

/// True when all bodies lie on one line within `tol` (relative to size).
pub fn is_collinear(cfg: &Configuration, tol: f64) -> bool {
    let (n, d) = (cfg.n(), cfg.dim());
    if n <= 2 {
        return true;
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for k in 0..d {
            mean[k] += cfg.coords()[i * d + k] / n as f64;
        }
    }
    let mut m = DMatrix::zeros(d, n);
    for i in 0..n {
        for k in 0..d {
            m[(k, i)] = cfg.coords()[i * d + k] - mean[k];
        }
    }
    let sv = m.singular_values();
    sv[1] < tol * sv[0].max(1e-300)
}

/// Least-squares circle through planar points: returns (center, radius, rms
/// radial deviation).
pub fn fit_circle(cfg: &Configuration) -> Option<([f64; 2], f64, f64)> {
    assert_eq!(cfg.dim(), 2);
    let n = cfg.n();
    if n < 3 || is_collinear(cfg, 1e-9) {
        return None;
    }
    // |q|^2 = 2 c . q + (R^2 - |c|^2): linear in (c_x, c_y, k)
    let mut a = DMatrix::zeros(n, 3);
    let mut rhs = nalgebra::DVector::zeros(n);
    for i in 0..n {
        let p = cfg.pos(i);
        a[(i, 0)] = 2.0 * p[0];
        a[(i, 1)] = 2.0 * p[1];
        a[(i, 2)] = 1.0;
        rhs[i] = p[0] * p[0] + p[1] * p[1];
    }
    let sol = a.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let c = [sol[0], sol[1]];
    let r2 = sol[2] + c[0] * c[0] + c[1] * c[1];
    if r2 <= 0.0 {
        return None;
    }
    let r = r2.sqrt();
    let mut dev = 0.0;
    for i in 0..n {
        let p = cfg.pos(i);
        let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r;
        dev += d * d;
    }
    Some((c, r, (dev / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::quadrilateral_is_convex_bruteforce;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn align_detects_rotated_copies() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cfg = Configuration::new(vec![0.3, 0.1, -0.8, 0.5, 0.2, -0.9], 2).unwrap();
        let th: f64 = 1.234;
        let (c, s) = (th.cos(), th.sin());
        let rot: Vec<f64> = (0..3)
            .flat_map(|i| {
                let p = cfg.pos(i);
                vec![c * p[0] - s * p[1], s * p[0] + c * p[1]]
            })
            .collect();
        let rcfg = Configuration::new(rot, 2).unwrap();
        let d = shape_distance(&sys, &cfg, &rcfg, false, 1e-6);
        assert!(d < 1e-12, "distance {d}");
    }

    #[test]
    fn reflection_only_matches_when_allowed() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cfg = Configuration::new(vec![0.3, 0.1, -0.8, 0.5, 0.2, -0.9], 2).unwrap();
        let refl: Vec<f64> = (0..3)
            .flat_map(|i| {
                let p = cfg.pos(i);
                vec![p[0], -p[1]]
            })
            .collect();
        let rcfg = Configuration::new(refl, 2).unwrap();
        let with = shape_distance(&sys, &cfg, &rcfg, true, 1e-6);
        let without = shape_distance(&sys, &cfg, &rcfg, false, 1e-6);
        assert!(with < 1e-12);
        assert!(without > 1e-2);
    }

    #[test]
    fn square_symmetry_group_has_order_eight() {
        let sys = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let cfg =
            Configuration::new(vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5], 2).unwrap();
        let elems = detect_symmetries(&sys, &cfg, 1e-9);
        assert_eq!(elems.len(), 8);
        assert_eq!(reflection_axis_count(&elems), 4);
    }

    #[test]
    fn symmetry_reproduces_configuration() {
        let sys = MassSystem::newtonian(vec![1.0; 3]).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let mut cfg = Configuration::new(vec![0.0, 0.0, 1.0, 0.0, 0.5, h], 2).unwrap();
        cfg.recenter(&sys);
        let elems = detect_symmetries(&sys, &cfg, 1e-9);
        assert_eq!(elems.len(), 6); // D_3
        for e in &elems {
            for i in 0..3 {
                let p = cfg.pos(i);
                let img = &e.matrix * nalgebra::DVector::from_column_slice(p);
                let target = cfg.pos(e.perm[i]);
                for k in 0..2 {
                    assert_relative_eq!(img[k], target[k], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn convexity_agrees_with_bruteforce_oracle() {
        let mut rng = crate::rng::task_rng(31, 0);
        let mut checked = 0;
        for _ in 0..1000 {
            let pts: [[f64; 2]; 4] = std::array::from_fn(|_| {
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            });
            let flat: Vec<f64> = pts.iter().flatten().cloned().collect();
            let cfg = Configuration::new(flat, 2).unwrap();
            // skip near-degenerate samples where the predicates legitimately differ
            if cfg.min_pairwise_distance() < 1e-3 {
                continue;
            }
            let ours = is_strictly_convex(&cfg, 1e-12);
            let oracle = quadrilateral_is_convex_bruteforce(&pts);
            assert_eq!(ours, oracle, "points {pts:?}");
            checked += 1;
        }
        assert!(checked > 900);
    }

    #[test]
    fn collinear_and_circle_predicates() {
        let line = Configuration::new(vec![-1.0, -1.0, 0.0, 0.0, 2.0, 2.0], 2).unwrap();
        assert!(is_collinear(&line, 1e-10));

        let sq = Configuration::new(vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0], 2).unwrap();
        assert!(!is_collinear(&sq, 1e-10));
        let (c, r, dev) = fit_circle(&sq).unwrap();
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        assert!(dev < 1e-12);
    }
}
