//! Built-in invariant suite behind the `verify` subcommand: fast spot checks
//! of every module against closed-form values, independent oracles and
//! symmetry properties. Each check runs isolated; a panic counts as failure.

use std::panic::{catch_unwind, AssertUnwindSafe};

use crate::system::{Configuration, MassSystem, PhaseState};
use crate::{cc, dynamics, ellipse, geometry, integrator, oracles, stability, syzygy};

#[derive(Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn run(name: &'static str, f: impl FnOnce() -> std::result::Result<String, String>) -> Check {
    let outcome = catch_unwind(AssertUnwindSafe(f));
    match outcome {
        Ok(Ok(detail)) => Check {
            name,
            passed: true,
            detail,
        },
        Ok(Err(detail)) => Check {
            name,
            passed: false,
            detail,
        },
        Err(p) => Check {
            name,
            passed: false,
            detail: format!(
                "panicked: {}",
                p.downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "<non-string payload>".into())
            ),
        },
    }
}

fn ensure(cond: bool, msg: &str) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

/// Run the whole battery. `quick` trims the heavier searches.
pub fn run_all(quick: bool) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(run("acceleration-unit-pair", || {
        let sys = MassSystem::newtonian(vec![1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        let a = dynamics::accelerations(&sys, &cfg).unwrap();
        ensure(
            (a[0] - 1.0).abs() < 1e-15 && (a[2] + 1.0).abs() < 1e-15,
            &format!("a = {a:?}"),
        )?;
        Ok("a_1 = (1,0), a_2 = (-1,0)".into())
    }));

    checks.push(run("moment-and-potential-frozen-values", || {
        let sys2 = MassSystem::newtonian(vec![1.0, 1.0]).unwrap();
        let pair = Configuration::new(vec![0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let sys3 = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let line = Configuration::new(vec![-1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2).unwrap();
        ensure(
            (dynamics::moment_of_inertia(&sys2, &pair) - 0.5).abs() < 1e-15,
            "I(pair) != 0.5",
        )?;
        ensure(
            (dynamics::moment_of_inertia(&sys3, &line) - 2.0).abs() < 1e-14,
            "I(line) != 2",
        )?;
        ensure(
            (dynamics::potential(&sys2, &pair).unwrap() - 1.0).abs() < 1e-15,
            "U(pair) != 1",
        )?;
        ensure(
            (dynamics::potential(&sys3, &line).unwrap() - 2.5).abs() < 1e-14,
            "U(line) != 2.5",
        )?;
        Ok("I = 0.5/2, U = 1/2.5".into())
    }));

    checks.push(run("homogeneity-triple", || {
        let sys = MassSystem::new(vec![1.0, 2.0, 3.0], -1.2, 2).unwrap();
        let cfg = Configuration::new(vec![0.1, 0.2, 1.3, -0.4, -0.7, 0.9], 2).unwrap();
        let s = 2.7;
        let mut sc = cfg.clone();
        sc.scale(s);
        let a = sys.exponent();
        let u_ratio = dynamics::potential(&sys, &sc).unwrap() / dynamics::potential(&sys, &cfg).unwrap();
        let i_ratio = dynamics::moment_of_inertia(&sys, &sc) / dynamics::moment_of_inertia(&sys, &cfg);
        let acc0 = dynamics::accelerations(&sys, &cfg).unwrap();
        let acc1 = dynamics::accelerations(&sys, &sc).unwrap();
        ensure((u_ratio - s.powf(2.0 * (a + 1.0))).abs() < 1e-12, "U scaling")?;
        ensure((i_ratio - s * s).abs() < 1e-12, "I scaling")?;
        let f = s.powf(2.0 * a + 1.0);
        ensure(
            acc0.iter().zip(&acc1).all(|(x, y)| (x * f - y).abs() < 1e-12),
            "acceleration scaling",
        )?;
        Ok(format!("checked at s = {s}"))
    }));

    checks.push(run("newton-third-law-random", || {
        let mut worst = 0.0f64;
        for (t, &a) in [-1.5, -2.0, -1.2].iter().enumerate() {
            let mut rng = crate::rng::task_rng(1000 + t as u64, 0);
            use rand::Rng;
            for _ in 0..50 {
                let n = rng.random_range(2..6);
                let sys = MassSystem::new(
                    (0..n).map(|_| rng.random_range(0.1..3.0)).collect(),
                    a,
                    2,
                )
                .unwrap();
                let cfg = Configuration::new(
                    (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    2,
                )
                .unwrap();
                if cfg.min_pairwise_distance() < 1e-3 {
                    continue;
                }
                let acc = dynamics::accelerations(&sys, &cfg).unwrap();
                // cancellation is relative to the force magnitudes
                let scale: f64 = (0..n)
                    .map(|i| {
                        sys.mass(i) * (acc[i * 2].abs() + acc[i * 2 + 1].abs())
                    })
                    .sum::<f64>()
                    .max(1.0);
                for k in 0..2 {
                    let tot: f64 = (0..n).map(|i| sys.mass(i) * acc[i * 2 + k]).sum();
                    worst = worst.max(tot.abs() / scale);
                }
            }
        }
        ensure(worst < 1e-13, &format!("worst relative residual {worst:.3e}"))?;
        Ok(format!("max relative |sum m a| = {worst:.3e}"))
    }));

    checks.push(run("lagrange-identity", || {
        let mut rng = crate::rng::task_rng(1100, 0);
        use rand::Rng;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.random_range(2..7);
            let sys = MassSystem::new(
                (0..n).map(|_| rng.random_range(0.1..3.0)).collect(),
                -1.5,
                2,
            )
            .unwrap();
            let cfg = Configuration::new(
                (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                2,
            )
            .unwrap();
            let a = dynamics::moment_of_inertia(&sys, &cfg);
            let b = dynamics::moment_of_inertia_about_com(&sys, &cfg);
            worst = worst.max((a - b).abs() / a.abs().max(1e-30));
        }
        ensure(worst < 1e-12, &format!("relative error {worst:.3e}"))?;
        Ok(format!("max relative error {worst:.3e}"))
    }));

    checks.push(run("potential-gradient-fd", || {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 0.7]).unwrap();
        let coords = vec![0.3, -0.2, 1.1, 0.5, -0.8, 0.4];
        let cfg = Configuration::new(coords.clone(), 2).unwrap();
        let g = dynamics::potential_gradient(&sys, &cfg).unwrap();
        let fd = oracles::fd_gradient(
            |x| {
                dynamics::potential(&sys, &Configuration::new(x.to_vec(), 2).unwrap()).unwrap()
            },
            &coords,
            1e-6,
        );
        let worst = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0f64, f64::max);
        ensure(worst < 1e-6, &format!("mismatch {worst:.3e}"))?;
        Ok(format!("max relative mismatch {worst:.3e}"))
    }));

    checks.push(run("integrator-circular-orbit", || {
        let sys = MassSystem::newtonian(vec![1.0, 1.0]).unwrap();
        let cfg = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        let w = 2f64.sqrt();
        let state =
            PhaseState::new(cfg, vec![0.0, -0.5 * w, 0.0, 0.5 * w], 0.0).unwrap();
        let period = std::f64::consts::TAU / w;
        let opts = integrator::IntegrateOptions {
            record_every: 0,
            ..Default::default()
        };
        let res = integrator::integrate(&sys, &state, period, &opts, &mut []).unwrap();
        let fin = res.final_state();
        let err = fin
            .config
            .coords()
            .iter()
            .zip(state.config.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(err < 1e-8, &format!("period return error {err:.3e}"))?;

        let res100 = integrator::integrate(&sys, &state, 100.0, &opts, &mut []).unwrap();
        ensure(
            res100.energy_drift <= 1e-9,
            &format!("energy drift {:.3e}", res100.energy_drift),
        )?;
        Ok(format!(
            "return {err:.2e}, drift {:.2e}",
            res100.energy_drift
        ))
    }));

    checks.push(run("integrator-time-reversal", || {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 1.5]).unwrap();
        let cfg = Configuration::new(vec![-1.0, 0.0, 1.0, 0.1, 0.0, 0.9], 2).unwrap();
        let state =
            PhaseState::new(cfg, vec![0.1, 0.2, -0.1, 0.05, 0.0, -0.3], 0.0).unwrap();
        let opts = integrator::IntegrateOptions {
            record_every: 0,
            ..Default::default()
        };
        let fwd = integrator::integrate(&sys, &state, 3.0, &opts, &mut []).unwrap();
        let mid = fwd.final_state().clone();
        let back = PhaseState::new(
            mid.config.clone(),
            mid.velocities.iter().map(|v| -v).collect(),
            0.0,
        )
        .unwrap();
        let res = integrator::integrate(&sys, &back, 3.0, &opts, &mut []).unwrap();
        let err = res
            .final_state()
            .config
            .coords()
            .iter()
            .zip(state.config.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(err < 1e-7, &format!("reversal error {err:.3e}"))?;
        Ok(format!("reversal error {err:.2e}"))
    }));

    checks.push(run("cc-residual-frozen-values", || {
        let sys3 = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let tri = Configuration::new(vec![0.0, 0.0, 1.0, 0.0, 0.5, h], 2).unwrap();
        let r = cc::cc_residual(&sys3, &tri).unwrap();
        ensure(
            (r.lambda - 3.0).abs() < 1e-14 && r.norm < 1e-14,
            &format!("equilateral lambda {} norm {:.3e}", r.lambda, r.norm),
        )?;
        let line = Configuration::new(vec![-1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let r = cc::cc_residual(&sys3, &line).unwrap();
        ensure(
            (r.lambda - 1.25).abs() < 1e-14 && r.norm < 1e-14,
            "collinear lambda != 5/4",
        )?;
        let sys4 = MassSystem::newtonian(vec![1.0; 4]).unwrap();
        let sq = Configuration::new(vec![0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5], 2).unwrap();
        let r = cc::cc_residual(&sys4, &sq).unwrap();
        ensure(
            (r.lambda - (4.0 + 2f64.sqrt()) / 2.0).abs() < 1e-14 && r.norm < 1e-14,
            "square lambda != (4+sqrt2)/2",
        )?;
        Ok("lambda = 3, 5/4, (4+sqrt2)/2".into())
    }));

    checks.push(run("euler-quintic-oracle", || {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        for order in [[0usize, 1, 2], [1, 0, 2], [0, 2, 1]] {
            let cfg = oracles::euler_collinear_config(&sys, order);
            let r = cc::cc_residual(&sys, &cfg).unwrap();
            ensure(
                r.norm < 1e-12,
                &format!("ordering {order:?} residual {:.3e}", r.norm),
            )?;
        }
        Ok("all three orderings solve the residual".into())
    }));

    checks.push(run("normalize-gauge-invariance", || {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let base = oracles::lagrange_equilateral_config(&sys);
        let c0 = cc::normalize(&sys, &base).unwrap();
        let mut moved = base.clone();
        moved.scale(3.7);
        let th: f64 = 1.1;
        let (c, s) = (th.cos(), th.sin());
        let rot: Vec<f64> = (0..3)
            .flat_map(|i| {
                let p = moved.pos(i);
                vec![c * p[0] - s * p[1], s * p[0] + c * p[1]]
            })
            .collect();
        let c1 = cc::normalize(&sys, &Configuration::new(rot, 2).unwrap()).unwrap();
        let worst = c0
            .config
            .coords()
            .iter()
            .zip(c1.config.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(worst < 1e-10, &format!("canonical mismatch {worst:.3e}"))?;
        Ok(format!("canonical frames agree to {worst:.2e}"))
    }));

    checks.push(run("projected-gradient-equivalence", || {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cfg = oracles::lagrange_equilateral_config(&sys);
        let g = stability::morse::projected_gradient(&sys, &cfg).unwrap();
        let r = cc::cc_residual(&sys, &cfg).unwrap();
        let worst = g
            .iter()
            .zip(&r.residual)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(worst < 1e-13, &format!("mismatch {worst:.3e}"))?;
        Ok("projected gradient == residual".into())
    }));

    checks.push(run("stability-known-verdicts", || {
        let stable_sys = MassSystem::newtonian(vec![100.0, 1.0, 0.01]).unwrap();
        let cc_s =
            cc::normalize(&stable_sys, &oracles::lagrange_equilateral_config(&stable_sys)).unwrap();
        let re = stability::RelativeEquilibrium::from_cc(&cc_s).unwrap();
        let rep = stability::linearize_re(&re).unwrap();
        ensure(rep.linearly_stable, &format!("flags {:?}", rep.flags))?;

        let eq_sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let cc_u = cc::normalize(&eq_sys, &oracles::lagrange_equilateral_config(&eq_sys)).unwrap();
        let re_u = stability::RelativeEquilibrium::from_cc(&cc_u).unwrap();
        let rep_u = stability::linearize_re(&re_u).unwrap();
        ensure(!rep_u.linearly_stable, "equal-mass triangle must be unstable")?;
        Ok("dominant-mass stable, equal-mass unstable".into())
    }));

    checks.push(run("vertical-operator-invariants", || {
        let sys = MassSystem::newtonian(vec![2.0, 0.5, 1.3]).unwrap();
        let cc_v = cc::normalize(&sys, &oracles::lagrange_equilateral_config(&sys)).unwrap();
        let rep = stability::vertical_report(&cc_v).unwrap();
        ensure(rep.lambda_multiplicity == 2, "multiplicity != 2")?;
        ensure(
            rep.constant_mode_residual < 1e-12,
            &format!("constants residual {:.3e}", rep.constant_mode_residual),
        )?;
        ensure(rep.corank.rank == 0, "equilateral tensor should vanish")?;
        Ok("multiplicity 2, constants annihilated, rank 0".into())
    }));

    checks.push(run("morse-frozen-verdicts", || {
        let sys2 = MassSystem::newtonian(vec![1.0, 2.0]).unwrap();
        let pair = Configuration::new(vec![-0.5, 0.0, 0.5, 0.0], 2).unwrap();
        let cc2 = cc::normalize(&sys2, &pair).unwrap();
        ensure(
            stability::morse_report(&cc2).unwrap().is_nondeg_min,
            "two-body must be a nondegenerate minimum",
        )?;
        let sys3 = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let line = cc::normalize(&sys3, &oracles::euler_collinear_config(&sys3, [0, 1, 2])).unwrap();
        ensure(
            stability::morse_report(&line).unwrap().index > 0,
            "collinear must have positive index",
        )?;
        Ok("two-body minimum, collinear saddle".into())
    }));

    checks.push(run("syzygy-special-orbits", || {
        let sys = MassSystem::newtonian(vec![1.0, 1.0, 1.0]).unwrap();
        let tri = PhaseState::at_rest(oracles::lagrange_equilateral_config(&sys));
        let seq = syzygy::extract_syzygies(&sys, &tri, 20.0, &Default::default()).unwrap();
        ensure(
            seq.events.is_empty()
                && seq.termination == syzygy::SyzygyTermination::Collision,
            "homothetic collapse should be syzygy-free",
        )?;
        let line = PhaseState::at_rest(oracles::euler_collinear_config(&sys, [0, 1, 2]));
        let seq = syzygy::extract_syzygies(&sys, &line, 5.0, &Default::default()).unwrap();
        ensure(
            seq.termination == syzygy::SyzygyTermination::DegenerateCollinear,
            "collinear rest data should be degenerate",
        )?;
        Ok("collapse clean, collinear degenerate".into())
    }));

    checks.push(run("ellipse-distance-frozen-value", || {
        let pair = ellipse::ConfocalPair::new(
            ellipse::KeplerEllipse::new(1.0, 0.5, nalgebra::Rotation3::identity()).unwrap(),
            ellipse::KeplerEllipse::new(3.0, 0.0, nalgebra::Rotation3::identity()).unwrap(),
        )
        .unwrap();
        ensure(
            (pair.squared_distance(0.0, 0.0) - 6.25).abs() < 1e-14,
            "d^2(0,0) != 6.25",
        )?;
        Ok("d^2(0,0) = 6.25".into())
    }));

    checks.push(run("ellipse-morse-relations", || {
        let pair = ellipse::ConfocalPair::new(
            ellipse::KeplerEllipse::from_elements(&ellipse::EllipseElements {
                a: 1.0,
                e: 0.3,
                inclination: 0.0,
                node: 0.0,
                periapsis: 0.0,
            })
            .unwrap(),
            ellipse::KeplerEllipse::from_elements(&ellipse::EllipseElements {
                a: 2.2,
                e: 0.5,
                inclination: 0.7,
                node: 0.9,
                periapsis: 1.7,
            })
            .unwrap(),
        )
        .unwrap();
        let set = ellipse::find_critical_points(&pair, 128).unwrap();
        ensure(set.euler_ok, "saddles != minima + maxima")?;
        ensure(set.total() <= 12, "more than twelve stationary points")?;
        Ok(format!(
            "{} points: {} min, {} max, {} saddle",
            set.total(),
            set.n_min,
            set.n_max,
            set.n_saddle
        ))
    }));

    checks.push(run("convexity-oracle-agreement", || {
        let mut rng = crate::rng::task_rng(1200, 0);
        use rand::Rng;
        let mut checked = 0;
        for _ in 0..300 {
            let pts: [[f64; 2]; 4] = std::array::from_fn(|_| {
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            });
            let cfg =
                Configuration::new(pts.iter().flatten().cloned().collect(), 2).unwrap();
            if cfg.min_pairwise_distance() < 1e-3 {
                continue;
            }
            let ours = geometry::is_strictly_convex(&cfg, 1e-12);
            let oracle = oracles::quadrilateral_is_convex_bruteforce(&pts);
            ensure(ours == oracle, &format!("disagreement on {pts:?}"))?;
            checked += 1;
        }
        Ok(format!("{checked} quadrilaterals agree"))
    }));

    if !quick {
        checks.push(run("three-body-census-vs-oracles", || {
            let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
            let census = cc::find_cc_multistart(
                &sys,
                &cc::CensusOptions {
                    n_starts: 200,
                    seed: 7,
                    ..Default::default()
                },
            );
            ensure(
                census.len() == 4,
                &format!("expected 4 classes, got {}", census.len()),
            )?;
            Ok("4 classes (1 equilateral + 3 collinear)".into())
        }));

        checks.push(run("two-satellite-limits-vs-oracle", || {
            let limits = cc::satellite::satellite_limit(2, 71, 80).unwrap();
            ensure(limits.len() == 2, &format!("{} limits", limits.len()))?;
            let oracle = oracles::coorbital_two_satellite_gaps(-1.5, 20000);
            let mut gaps: Vec<f64> =
                limits.iter().map(|l| l.gaps[0].min(l.gaps[1])).collect();
            gaps.sort_by(f64::total_cmp);
            for (g, o) in gaps.iter().zip(&oracle) {
                ensure((g - o).abs() < 1e-5, &format!("gap {g} vs oracle {o}"))?;
            }
            Ok("gaps 60 and 180 degrees".into())
        }));
    }

    checks
}

#[cfg(test)]
mod tests {
    #[test]
    fn quick_battery_is_green() {
        let checks = super::run_all(true);
        let failures: Vec<String> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        assert!(failures.is_empty(), "failed checks: {failures:#?}");
    }
}
