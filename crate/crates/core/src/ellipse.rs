//! Stationary points of the squared distance between two confocal ellipses
//! in R^3, on the torus of the two eccentric anomalies: dense grid scan,
//! Newton polish, Morse classification, and a grid-doubling completeness
//! certificate. Degenerate pairs (coinciding conics, concentric coplanar
//! circles) are rejected up front.

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{par_map_tasks, task_rng};

const TAU: f64 = std::f64::consts::TAU;

/// A Keplerian ellipse with the attracting focus at the origin.
#[derive(Debug, Clone)]
pub struct KeplerEllipse {
    pub semimajor: f64,
    pub eccentricity: f64,
    pub orientation: Rotation3<f64>,
}

/// Orbital elements on disk / CLI: angles in radians.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EllipseElements {
    pub a: f64,
    pub e: f64,
    pub inclination: f64,
    pub node: f64,
    pub periapsis: f64,
}

impl KeplerEllipse {
    pub fn new(semimajor: f64, eccentricity: f64, orientation: Rotation3<f64>) -> Result<Self> {
        if !(semimajor > 0.0) || !semimajor.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "semimajor axis must be positive, got {semimajor}"
            )));
        }
        if !(0.0..1.0).contains(&eccentricity) {
            return Err(Error::InvalidInstance(format!(
                "eccentricity must lie in [0, 1), got {eccentricity}"
            )));
        }
        Ok(Self {
            semimajor,
            eccentricity,
            orientation,
        })
    }

    pub fn from_elements(el: &EllipseElements) -> Result<Self> {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), el.node)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), el.inclination)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), el.periapsis);
        Self::new(el.a, el.e, r)
    }

    pub fn semiminor(&self) -> f64 {
        self.semimajor * (1.0 - self.eccentricity * self.eccentricity).sqrt()
    }

    /// Point at eccentric anomaly E.
    pub fn point(&self, e_anom: f64) -> Vector3<f64> {
        let (s, c) = e_anom.sin_cos();
        self.orientation
            * Vector3::new(
                self.semimajor * (c - self.eccentricity),
                self.semiminor() * s,
                0.0,
            )
    }

    pub fn point_d1(&self, e_anom: f64) -> Vector3<f64> {
        let (s, c) = e_anom.sin_cos();
        self.orientation * Vector3::new(-self.semimajor * s, self.semiminor() * c, 0.0)
    }

    pub fn point_d2(&self, e_anom: f64) -> Vector3<f64> {
        let (s, c) = e_anom.sin_cos();
        self.orientation * Vector3::new(-self.semimajor * c, -self.semiminor() * s, 0.0)
    }

    pub fn plane_normal(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }

    /// Direction from the focus to the perihelion.
    pub fn apsidal_axis(&self) -> Vector3<f64> {
        self.orientation * Vector3::x()
    }

    /// Geometric center (the focus sits at the origin).
    pub fn center(&self) -> Vector3<f64> {
        -self.semimajor * self.eccentricity * self.apsidal_axis()
    }
}

#[derive(Debug, Clone)]
pub struct ConfocalPair {
    pub first: KeplerEllipse,
    pub second: KeplerEllipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneracyClass {
    Ok,
    Coinciding,
    ConcentricCoplanarCircles,
}

/// Exact-ish degeneracy test with tolerance `tol` on normals, eccentricities
/// and element equality.
pub fn classify_degenerate_with_tol(
    e1: &KeplerEllipse,
    e2: &KeplerEllipse,
    tol: f64,
) -> DegeneracyClass {
    let scale = e1.semimajor.max(e2.semimajor);
    let n1 = e1.plane_normal();
    let n2 = e2.plane_normal();
    let coplanar = n1.cross(&n2).norm() < tol;

    let both_circles = e1.eccentricity < tol && e2.eccentricity < tol;
    if both_circles && coplanar {
        return if (e1.semimajor - e2.semimajor).abs() < tol * scale {
            DegeneracyClass::Coinciding
        } else {
            DegeneracyClass::ConcentricCoplanarCircles
        };
    }

    // general coincidence: same plane, same shape, same center, same apsidal line
    let same_shape = (e1.semimajor - e2.semimajor).abs() < tol * scale
        && (e1.eccentricity - e2.eccentricity).abs() < tol;
    if coplanar && same_shape {
        let centers_match = (e1.center() - e2.center()).norm() < tol * scale;
        let apsidal_aligned =
            both_circles || e1.apsidal_axis().dot(&e2.apsidal_axis()).abs() > 1.0 - tol;
        if centers_match && apsidal_aligned {
            return DegeneracyClass::Coinciding;
        }
    }
    DegeneracyClass::Ok
}

pub fn classify_degenerate(pair: &ConfocalPair) -> DegeneracyClass {
    classify_degenerate_with_tol(&pair.first, &pair.second, 1e-10)
}

impl ConfocalPair {
    /// Validated pair: rejects configurations within `1e-8` of a degenerate
    /// class, where stationary-point counts blow up.
    pub fn new(first: KeplerEllipse, second: KeplerEllipse) -> Result<Self> {
        match classify_degenerate_with_tol(&first, &second, 1e-8) {
            DegeneracyClass::Ok => Ok(Self { first, second }),
            DegeneracyClass::Coinciding => Err(Error::DegeneratePair(
                "the two ellipses coincide as point sets".into(),
            )),
            DegeneracyClass::ConcentricCoplanarCircles => Err(Error::DegeneratePair(
                "two concentric coplanar circles have a continuum of stationary points".into(),
            )),
        }
    }

    pub fn swapped(&self) -> ConfocalPair {
        ConfocalPair {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    /// d^2 at the pair of eccentric anomalies.
    pub fn squared_distance(&self, e1: f64, e2: f64) -> f64 {
        (self.first.point(e1) - self.second.point(e2)).norm_squared()
    }

    /// Gradient of d^2 on the torus.
    pub fn gradient(&self, e1: f64, e2: f64) -> [f64; 2] {
        let diff = self.first.point(e1) - self.second.point(e2);
        [
            2.0 * diff.dot(&self.first.point_d1(e1)),
            -2.0 * diff.dot(&self.second.point_d1(e2)),
        ]
    }

    /// Hessian of d^2 on the torus.
    pub fn hessian(&self, e1: f64, e2: f64) -> [[f64; 2]; 2] {
        let p1 = self.first.point(e1);
        let p2 = self.second.point(e2);
        let d1 = self.first.point_d1(e1);
        let d2 = self.second.point_d1(e2);
        let diff = p1 - p2;
        let h11 = 2.0 * (d1.dot(&d1) + diff.dot(&self.first.point_d2(e1)));
        let h22 = 2.0 * (d2.dot(&d2) - diff.dot(&self.second.point_d2(e2)));
        let h12 = -2.0 * d1.dot(&d2);
        [[h11, h12], [h12, h22]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalPoint {
    pub e1: f64,
    pub e2: f64,
    pub d2: f64,
    pub kind: CriticalKind,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct CriticalPointSet {
    pub points: Vec<CriticalPoint>,
    pub n_min: usize,
    pub n_max: usize,
    pub n_saddle: usize,
    pub n_degenerate: usize,
    /// True when doubling the scan grid reproduces the same set.
    pub complete: bool,
    /// Saddle count equals minima plus maxima and the total is at least 4
    /// (only claimed when no degenerate points were found).
    pub euler_ok: bool,
}

impl CriticalPointSet {
    pub fn total(&self) -> usize {
        self.points.len()
    }
}

fn wrap_tau(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

fn torus_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = (a.0 - b.0).rem_euclid(TAU);
    let dy = (a.1 - b.1).rem_euclid(TAU);
    let dx = dx.min(TAU - dx);
    let dy = dy.min(TAU - dy);
    (dx * dx + dy * dy).sqrt()
}

/// Newton polish of grad d^2 = 0 from a seed; None if it wanders or stalls.
fn polish(pair: &ConfocalPair, seed: (f64, f64), cell: f64, gtol: f64) -> Option<(f64, f64)> {
    let (mut x, mut y) = seed;
    let max_move = 3.0 * cell;
    for _ in 0..80 {
        let g = pair.gradient(x, y);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn < gtol {
            return Some((wrap_tau(x), wrap_tau(y)));
        }
        let h = pair.hessian(x, y);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let mut dx = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let mut dy = -(-h[1][0] * g[0] + h[0][0] * g[1]) / det;
        let step = (dx * dx + dy * dy).sqrt();
        if step > max_move {
            let s = max_move / step;
            dx *= s;
            dy *= s;
        }
        x += dx;
        y += dy;
        if torus_distance((x, y), seed) > 6.0 * cell {
            return None;
        }
    }
    None
}

fn scan_roots(pair: &ConfocalPair, grid_n: usize) -> Vec<(f64, f64)> {
    let h = TAU / grid_n as f64;
    let mut p1 = Vec::with_capacity(grid_n + 1);
    let mut d1 = Vec::with_capacity(grid_n + 1);
    let mut p2 = Vec::with_capacity(grid_n + 1);
    let mut d2 = Vec::with_capacity(grid_n + 1);
    for k in 0..=grid_n {
        let t = k as f64 * h;
        p1.push(pair.first.point(t));
        d1.push(pair.first.point_d1(t));
        p2.push(pair.second.point(t));
        d2.push(pair.second.point_d1(t));
    }

    let mut g1 = vec![0.0f64; (grid_n + 1) * (grid_n + 1)];
    let mut g2 = vec![0.0f64; (grid_n + 1) * (grid_n + 1)];
    for i in 0..=grid_n {
        for j in 0..=grid_n {
            let diff = p1[i] - p2[j];
            g1[i * (grid_n + 1) + j] = 2.0 * diff.dot(&d1[i]);
            g2[i * (grid_n + 1) + j] = -2.0 * diff.dot(&d2[j]);
        }
    }

    let scale = (pair.first.semimajor + pair.second.semimajor).powi(2);
    let gtol = 1e-13 * scale.max(1.0);
    let mut roots: Vec<(f64, f64)> = Vec::new();
    let idx = |i: usize, j: usize| i * (grid_n + 1) + j;
    for i in 0..grid_n {
        for j in 0..grid_n {
            let c1 = [
                g1[idx(i, j)],
                g1[idx(i + 1, j)],
                g1[idx(i, j + 1)],
                g1[idx(i + 1, j + 1)],
            ];
            let c2 = [
                g2[idx(i, j)],
                g2[idx(i + 1, j)],
                g2[idx(i, j + 1)],
                g2[idx(i + 1, j + 1)],
            ];
            let sign_change = |c: &[f64; 4]| {
                let mn = c.iter().cloned().fold(f64::INFINITY, f64::min);
                let mx = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                mn <= 0.0 && mx >= 0.0
            };
            if !(sign_change(&c1) && sign_change(&c2)) {
                continue;
            }
            let seed = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if let Some(root) = polish(pair, seed, h, gtol) {
                if !roots.iter().any(|r| torus_distance(*r, root) < 1e-6) {
                    roots.push(root);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    roots
}

fn classify_root(pair: &ConfocalPair, root: (f64, f64)) -> CriticalPoint {
    let h = pair.hessian(root.0, root.1);
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    // eigenvalues of the symmetric 2x2
    let disc = ((h[0][0] - h[1][1]) * 0.5).hypot(h[0][1]);
    let l1 = tr * 0.5 - disc;
    let l2 = tr * 0.5 + disc;
    let smax = l1.abs().max(l2.abs());
    let smin = l1.abs().min(l2.abs());
    let kind = if smax == 0.0 || smin / smax < 1e-10 {
        CriticalKind::Degenerate
    } else if det > 0.0 && tr > 0.0 {
        CriticalKind::Minimum
    } else if det > 0.0 {
        CriticalKind::Maximum
    } else {
        CriticalKind::Saddle
    };
    let g = pair.gradient(root.0, root.1);
    CriticalPoint {
        e1: root.0,
        e2: root.1,
        d2: pair.squared_distance(root.0, root.1),
        kind,
        grad_norm: (g[0] * g[0] + g[1] * g[1]).sqrt(),
    }
}

/// All stationary points of d^2 on the anomaly torus.
pub fn find_critical_points(pair: &ConfocalPair, grid_n: usize) -> Result<CriticalPointSet> {
    assert!(grid_n >= 128, "grid must be at least 128 per axis");
    match classify_degenerate_with_tol(&pair.first, &pair.second, 1e-8) {
        DegeneracyClass::Ok => {}
        other => {
            return Err(Error::DegeneratePair(format!("{other:?}")));
        }
    }

    let roots = scan_roots(pair, grid_n);
    let doubled = scan_roots(pair, grid_n * 2);
    let complete = roots.len() == doubled.len()
        && roots
            .iter()
            .all(|r| doubled.iter().any(|d| torus_distance(*r, *d) < 1e-6));
    // the doubled scan is authoritative when it found more
    let final_roots = if doubled.len() > roots.len() {
        doubled
    } else {
        roots
    };

    let points: Vec<CriticalPoint> = final_roots
        .iter()
        .map(|r| classify_root(pair, *r))
        .collect();
    let n_min = points
        .iter()
        .filter(|p| p.kind == CriticalKind::Minimum)
        .count();
    let n_max = points
        .iter()
        .filter(|p| p.kind == CriticalKind::Maximum)
        .count();
    let n_saddle = points
        .iter()
        .filter(|p| p.kind == CriticalKind::Saddle)
        .count();
    let n_degenerate = points.len() - n_min - n_max - n_saddle;
    let euler_ok = n_degenerate == 0 && n_saddle == n_min + n_max && points.len() >= 4;

    Ok(CriticalPointSet {
        points,
        n_min,
        n_max,
        n_saddle,
        n_degenerate,
        complete,
        euler_ok,
    })
}

/// Uniform random rotation from four Gaussian samples.
fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    use rand_distr::StandardNormal;
    let q = nalgebra::Quaternion::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// The seeded random-pair distribution of the stationary-point census:
/// log-uniform semimajor axes in [0.5, 5], eccentricities uniform in
/// [0.05, 0.95], orientations uniform over rotations.
pub fn random_pair(rng: &mut impl Rng) -> ConfocalPair {
    loop {
        let a1 = (rng.random_range(0.5f64.ln()..5f64.ln())).exp();
        let a2 = (rng.random_range(0.5f64.ln()..5f64.ln())).exp();
        let e1 = rng.random_range(0.05..0.95);
        let e2 = rng.random_range(0.05..0.95);
        let r1 = random_rotation(rng);
        let r2 = random_rotation(rng);
        let first = KeplerEllipse::new(a1, e1, r1).unwrap();
        let second = KeplerEllipse::new(a2, e2, r2).unwrap();
        if let Ok(pair) = ConfocalPair::new(first, second) {
            return pair;
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairCensusRecord {
    pub pair_index: usize,
    pub total: usize,
    pub complete: bool,
    pub euler_ok: bool,
    pub elements: (EllipseElements, EllipseElements),
}

#[derive(Debug, Clone)]
pub struct PairCensus {
    pub histogram: std::collections::BTreeMap<usize, usize>,
    pub max_total: usize,
    pub max_record: Option<PairCensusRecord>,
    /// Pairs whose non-degenerate set failed the torus Morse relations.
    pub violations: Vec<PairCensusRecord>,
    pub n_pairs: usize,
}

/// Recover (node, inclination, periapsis) from the orientation: the Z-X-Z
/// decomposition `R = Rz(node) Rx(inc) Rz(peri)`.
pub fn elements_of(e: &KeplerEllipse) -> EllipseElements {
    let r = &e.orientation;
    let n = r * Vector3::z();
    let sin_i = n.x.hypot(n.y);
    let inclination = sin_i.atan2(n.z);
    let node = if sin_i > 1e-12 {
        n.x.atan2(-n.y)
    } else {
        0.0
    };
    let r1 = Rotation3::from_axis_angle(&Vector3::z_axis(), node)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), inclination);
    let r2 = r1.inverse() * r;
    let periapsis = r2.matrix()[(1, 0)].atan2(r2.matrix()[(0, 0)]);
    EllipseElements {
        a: e.semimajor,
        e: e.eccentricity,
        inclination,
        node,
        periapsis,
    }
}

/// Stationary-point census over seeded random pairs.
pub fn census_random_pairs(n_pairs: usize, seed: u64, grid_n: usize) -> PairCensus {
    let records: Vec<PairCensusRecord> = par_map_tasks(n_pairs, |task| {
        let mut rng = task_rng(seed, task as u64);
        let pair = random_pair(&mut rng);
        let set = find_critical_points(&pair, grid_n).expect("random pairs are non-degenerate");
        PairCensusRecord {
            pair_index: task,
            total: set.total(),
            complete: set.complete,
            euler_ok: set.euler_ok || set.n_degenerate > 0,
            elements: (elements_of(&pair.first), elements_of(&pair.second)),
        }
    });

    let mut histogram = std::collections::BTreeMap::new();
    let mut max_total = 0;
    let mut max_record = None;
    let mut violations = Vec::new();
    for r in &records {
        *histogram.entry(r.total).or_insert(0) += 1;
        if r.total > max_total {
            max_total = r.total;
            max_record = Some(r.clone());
        }
        if !r.euler_ok {
            violations.push(r.clone());
        }
    }
    PairCensus {
        histogram,
        max_total,
        max_record,
        violations,
        n_pairs,
    }
}

/// Seeded search for a pair attaining the given stationary-point count.
/// Samples near-coplanar high-eccentricity geometries where the large
/// counts live. `circle_second` pins the second ellipse to a circle.
pub fn search_for_count(
    target: usize,
    circle_second: bool,
    seed: u64,
    max_tries: usize,
    grid_n: usize,
) -> Option<(ConfocalPair, CriticalPointSet)> {
    let batch = 64usize;
    let mut tried = 0usize;
    let mut round = 0u64;
    while tried < max_tries {
        let this_batch = batch.min(max_tries - tried);
        let hits: Vec<Option<(ConfocalPair, CriticalPointSet)>> =
            par_map_tasks(this_batch, |k| {
                let mut rng = task_rng(seed, round * batch as u64 + k as u64);
                let a1 = 1.0;
                let a2: f64 = rng.random_range(0.6..1.6);
                let e1: f64 = rng.random_range(0.5..0.95);
                let e2: f64 = if circle_second {
                    0.0
                } else {
                    rng.random_range(0.5..0.95)
                };
                let inc: f64 = rng.random_range(0.02..0.5);
                let node: f64 = rng.random_range(0.0..TAU);
                let peri: f64 = rng.random_range(0.0..TAU);
                let first = KeplerEllipse::new(a1, e1, Rotation3::identity()).unwrap();
                let second = KeplerEllipse::from_elements(&EllipseElements {
                    a: a2,
                    e: e2,
                    inclination: inc,
                    node,
                    periapsis: peri,
                })
                .unwrap();
                let pair = ConfocalPair::new(first, second).ok()?;
                let set = find_critical_points(&pair, grid_n).ok()?;
                (set.total() == target && set.complete && set.n_degenerate == 0)
                    .then_some((pair, set))
            });
        for h in hits.into_iter().flatten() {
            return Some(h);
        }
        tried += this_batch;
        round += 1;
    }
    None
}
