//! Single entry point wiring all modules: problem-file ingestion, subcommand
//! dispatch, deterministic seeding, and record-stream output.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use nbodylab::cc;
use nbodylab::ellipse;
use nbodylab::integrator;
use nbodylab::io::{fmt_g17, ProblemInstance, RunManifest};
use nbodylab::stability;
use nbodylab::syzygy;
use nbodylab::system::MassSystem;

#[derive(Parser)]
#[command(
    name = "nbodylab",
    version,
    about = "Numerical laboratory for n-body central configurations, stability spectra, syzygy sequences, and confocal-ellipse distance geometry",
    after_help = "Worker threads default to the number of cores; set NBODYLAB_WORKERS to override."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArg {
    /// Write records here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a problem instance with the adaptive RKF7(8) scheme.
    Integrate {
        /// Problem instance (JSON: masses, exponent_a, dimension, positions, velocities).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Record every k-th accepted step (0 = endpoints only).
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Multistart census of central configurations.
    CcFind(CensusArgs),
    /// Census plus a symmetry/geometry audit summary.
    CcCensus(CensusArgs),
    /// Co-circular central configurations with the center of mass at the
    /// circle's center.
    CcCocircular {
        #[arg(long, value_delimiter = ',', required = true)]
        masses: Vec<f64>,
        #[arg(long, default_value_t = -1.5)]
        exponent: f64,
        #[arg(long, default_value_t = 2000)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Vanishing-mass limits of (1+N)-body central configurations.
    CcSatellite {
        /// Number of satellites (2..=9).
        #[arg(long)]
        satellites: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 400)]
        starts: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Stability, Morse and vertical reports for every entry of a census file.
    Stability {
        /// Census file produced by cc-find / cc-census.
        #[arg(long)]
        census: PathBuf,
        /// Also write an eigenvalue table (re im per row) for the first entry.
        #[arg(long)]
        spectrum_output: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Syzygy sequences of random zero-angular-momentum three-body samples.
    Syzygy {
        #[arg(long, default_value_t = -1.5)]
        exponent: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0, 1.0])]
        masses: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        energy: f64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Stationary points of the squared distance between confocal ellipses.
    EllipseCrit {
        /// Inline elements a1,e1,inc1,node1,peri1,a2,e2,inc2,node2,peri2 (radians).
        #[arg(long, value_delimiter = ',', num_args = 10)]
        elements: Option<Vec<f64>>,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Run a random-pair census of this size instead of a single pair.
        #[arg(long)]
        census: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dump the d^2 torus grid of the (single) pair here.
        #[arg(long)]
        scan_output: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Run the built-in invariant suite and print a pass/fail table.
    Verify {
        /// Include the slower search-based checks.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    masses: Vec<f64>,
    #[arg(long, default_value_t = -1.5)]
    exponent: f64,
    #[arg(long, default_value_t = 500)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    /// Restrict the search: convex:CYCLE (e.g. convex:1-3-2-4), cocircular,
    /// or collinear.
    #[arg(long)]
    constraint: Option<String>,
    /// Count mirror images as distinct classes.
    #[arg(long)]
    no_reflection_quotient: bool,
    #[command(flatten)]
    out: OutputArg,
}

fn main() {
    // one worker pool owned by the CLI; modules only declare task independence
    if let Ok(v) = std::env::var("NBODYLAB_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    eprintln!("# wall time: {:.3} s", started.elapsed().as_secs_f64());
    std::process::exit(code);
}

fn write_out(out: &OutputArg, text: &str) -> Result<(), nbodylab::Error> {
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| nbodylab::Error::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, nbodylab::Error> {
    fs::read_to_string(path).map_err(|e| nbodylab::Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn census_manifest(sub: &str, args: &CensusArgs) -> RunManifest {
    let mut flags = vec![
        format!(
            "--masses {}",
            args.masses
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!("--exponent {}", args.exponent),
        format!("--starts {}", args.starts),
        format!("--seed {}", args.seed),
        format!("--dimension {}", args.dimension),
    ];
    if let Some(c) = &args.constraint {
        flags.push(format!("--constraint {c}"));
    }
    if args.no_reflection_quotient {
        flags.push("--no-reflection-quotient".into());
    }
    let digest_src = flags.join(" ");
    RunManifest::new(sub, flags, Some(args.seed), digest_src.as_bytes())
}

fn run_census(sub: &str, args: &CensusArgs, audit: bool) -> Result<(), nbodylab::Error> {
    let sys = MassSystem::new(args.masses.clone(), args.exponent, args.dimension)?;
    let manifest = census_manifest(sub, args);

    let census = match args.constraint.as_deref() {
        None => cc::find_cc_multistart(
            &sys,
            &cc::CensusOptions {
                n_starts: args.starts,
                seed: args.seed,
                reflections: !args.no_reflection_quotient,
                ..Default::default()
            },
        ),
        Some("cocircular") => {
            cc::cocircular::cocircular_search(&args.masses, args.exponent, args.starts, args.seed)?
        }
        Some("collinear") => {
            let mut census = cc::find_cc_multistart(
                &sys,
                &cc::CensusOptions {
                    n_starts: args.starts,
                    seed: args.seed,
                    reflections: !args.no_reflection_quotient,
                    ..Default::default()
                },
            );
            census
                .entries
                .retain(|e| e.classification.geometry == cc::Geometry::Collinear);
            census
        }
        Some(c) if c.starts_with("convex:") => {
            let cycle = parse_cycle(c.trim_start_matches("convex:"))?;
            let map = cc::convex::convex_cc_per_cyclic_order(&args.masses, args.seed, args.starts)?;
            map.into_iter()
                .find(|(order, _)| *order == cycle)
                .map(|(_, census)| census)
                .ok_or_else(|| nbodylab::Error::InvalidInstance("unknown cyclic order".into()))?
        }
        Some(other) => {
            return Err(nbodylab::Error::InvalidInstance(format!(
                "unknown constraint '{other}' (expected convex:CYCLE, cocircular, collinear)"
            )))
        }
    };

    let mut text = Vec::new();
    nbodylab::io::write_census(&mut text, &manifest, &census).map_err(|e| nbodylab::Error::Io {
        path: "<census stream>".into(),
        source: e,
    })?;
    let mut text = String::from_utf8(text).expect("utf8");

    if audit {
        text.push_str(&format!("# audit: {} classes\n", census.entries.len()));
        for (k, e) in census.entries.iter().enumerate() {
            text.push_str(&format!(
                "# class {k}: lambda {} geometry {:?} symmetry order {} reflection axes {} basin {}\n",
                fmt_g17(e.cc.multiplier),
                e.classification.geometry,
                e.classification.symmetry_order,
                e.classification.reflection_axes,
                e.basin_count,
            ));
        }
        let asym = census
            .entries
            .iter()
            .filter(|e| e.classification.symmetry_order <= 1)
            .count();
        text.push_str(&format!("# classes with trivial symmetry group: {asym}\n"));
    }
    write_out(&args.out, &text)
}

fn parse_cycle(s: &str) -> Result<cc::CyclicOrder, nbodylab::Error> {
    let parts: Vec<usize> = s
        .split('-')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            nbodylab::Error::InvalidInstance(format!("bad cycle '{s}', expected like 1-3-2-4"))
        })?;
    if parts.len() != 4 || parts.iter().any(|&p| p == 0 || p > 4) {
        return Err(nbodylab::Error::InvalidInstance(format!(
            "bad cycle '{s}': need four 1-based body indices"
        )));
    }
    let zero: [usize; 4] = std::array::from_fn(|i| parts[i] - 1);
    Ok(cc::CyclicOrder::canonicalize(zero))
}

fn run(cmd: Command) -> Result<(), nbodylab::Error> {
    match cmd {
        Command::Integrate {
            input,
            t_final,
            tolerance,
            record_every,
            out,
        } => {
            let text = read_file(&input)?;
            let inst = ProblemInstance::from_json(&text)?;
            let (sys, state) = inst.state()?;
            let opts = integrator::IntegrateOptions {
                tolerance,
                record_every,
                ..Default::default()
            };
            let result = integrator::integrate(&sys, &state, t_final, &opts, &mut [])?;
            let manifest = RunManifest::new(
                "integrate",
                vec![
                    format!("--input {}", input.display()),
                    format!("--t-final {t_final}"),
                    format!("--tolerance {tolerance}"),
                    format!("--record-every {record_every}"),
                ],
                None,
                text.as_bytes(),
            );
            let mut buf = Vec::new();
            nbodylab::io::write_trajectory(&mut buf, &manifest, &sys, &result)?;
            let mut s = String::from_utf8(buf).expect("utf8");
            s.push_str(&format!(
                "# termination: {:?}, steps {}, energy drift {}, |dL| {}\n",
                result.termination,
                result.steps_accepted,
                fmt_g17(result.energy_drift),
                fmt_g17(result.angular_momentum_drift),
            ));
            write_out(&out, &s)
        }

        Command::CcFind(args) => run_census("cc-find", &args, false),
        Command::CcCensus(args) => run_census("cc-census", &args, true),

        Command::CcCocircular {
            masses,
            exponent,
            starts,
            seed,
            out,
        } => {
            let census = cc::cocircular::cocircular_search(&masses, exponent, starts, seed)?;
            let manifest = RunManifest::new(
                "cc-cocircular",
                vec![
                    format!(
                        "--masses {}",
                        masses
                            .iter()
                            .map(|m| m.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    ),
                    format!("--exponent {exponent}"),
                    format!("--starts {starts}"),
                    format!("--seed {seed}"),
                ],
                Some(seed),
                b"",
            );
            let mut buf = Vec::new();
            nbodylab::io::write_census(&mut buf, &manifest, &census).map_err(|e| {
                nbodylab::Error::Io {
                    path: "<census stream>".into(),
                    source: e,
                }
            })?;
            write_out(&out, &String::from_utf8(buf).expect("utf8"))
        }

        Command::CcSatellite {
            satellites,
            seed,
            starts,
            out,
        } => {
            let limits = cc::satellite::satellite_limit(satellites, seed, starts)?;
            let manifest = RunManifest::new(
                "cc-satellite",
                vec![
                    format!("--satellites {satellites}"),
                    format!("--seed {seed}"),
                    format!("--starts {starts}"),
                ],
                Some(seed),
                b"",
            );
            let mut s = manifest.header();
            s.push_str(&format!("# non-coalescent limits: {}\n", limits.len()));
            for (k, l) in limits.iter().enumerate() {
                let angles = l
                    .angles
                    .iter()
                    .map(|a| fmt_g17(*a))
                    .collect::<Vec<_>>()
                    .join(",");
                s.push_str(&format!(
                    "{{\"limit\":{k},\"angles\":[{angles}],\"regular_polygon\":{},\"symmetric\":{},\"min_gap\":{}}}\n",
                    l.regular_polygon,
                    l.symmetric,
                    fmt_g17(l.min_gap),
                ));
            }
            write_out(&out, &s)
        }

        Command::Stability {
            census,
            spectrum_output,
            out,
        } => {
            let text = read_file(&census)?;
            let lines = nbodylab::io::read_census_lines(&text)?;
            let manifest = RunManifest::new(
                "stability",
                vec![format!("--census {}", census.display())],
                None,
                text.as_bytes(),
            );
            let mut s = manifest.header();
            let mut first_spectrum: Option<stability::SpectrumReport> = None;
            for (k, line) in lines.iter().enumerate() {
                let (sys, cc) = line.to_central_config()?;
                let re = stability::RelativeEquilibrium::from_cc(&cc)?;
                let spectrum = stability::linearize_re(&re)?;
                let morse = stability::morse_report(&cc)?;
                let vertical = stability::vertical_report(&cc)?;
                let eigs = spectrum
                    .eigenvalues
                    .iter()
                    .map(|z| format!("[{},{}]", fmt_g17(z.re), fmt_g17(z.im)))
                    .collect::<Vec<_>>()
                    .join(",");
                s.push_str(&format!(
                    "{{\"entry\":{k},\"lambda\":{},\"omega\":{},\"linearly_stable\":{},\"max_real_part\":{},\"dominant_mass_ratio\":{},\"morse_index\":{},\"morse_nullity\":{},\"is_nondeg_min\":{},\"vertical_multiplicity\":{},\"vertical_degenerate\":{},\"corank_rank\":{},\"eigenvalues\":[{eigs}]}}\n",
                    fmt_g17(cc.multiplier),
                    fmt_g17(spectrum.omega),
                    spectrum.linearly_stable,
                    fmt_g17(spectrum.max_real_part),
                    fmt_g17(sys.dominant_mass_ratio()),
                    morse.index,
                    morse.nullity,
                    morse.is_nondeg_min,
                    vertical.lambda_multiplicity,
                    vertical.vertical_degenerate,
                    vertical.corank.rank,
                ));
                if first_spectrum.is_none() {
                    first_spectrum = Some(spectrum);
                }
            }
            if let (Some(path), Some(spec)) = (&spectrum_output, &first_spectrum) {
                let mut buf = Vec::new();
                nbodylab::io::write_spectrum(&mut buf, &manifest, spec).map_err(|e| {
                    nbodylab::Error::Io {
                        path: path.display().to_string(),
                        source: e,
                    }
                })?;
                fs::write(path, buf).map_err(|e| nbodylab::Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
            }
            write_out(&out, &s)
        }

        Command::Syzygy {
            exponent,
            masses,
            samples,
            seed,
            horizon,
            energy,
            out,
        } => {
            let census =
                syzygy::sequence_census(&masses, exponent, samples, seed, horizon, energy)?;
            let manifest = RunManifest::new(
                "syzygy",
                vec![
                    format!("--exponent {exponent}"),
                    format!("--samples {samples}"),
                    format!("--seed {seed}"),
                    format!("--horizon {horizon}"),
                    format!("--energy {energy}"),
                ],
                Some(seed),
                b"",
            );
            let mut s = manifest.header();
            for r in &census.runs {
                let word: Vec<String> = r.word.iter().map(|f| f.to_string()).collect();
                let times: Vec<String> = r.times.iter().map(|t| fmt_g17(*t)).collect();
                s.push_str(&format!(
                    "{{\"sample\":{},\"termination\":\"{:?}\",\"word\":\"{}\",\"event_times\":[{}]}}\n",
                    r.sample_index,
                    r.termination,
                    word.join(""),
                    times.join(","),
                ));
            }
            s.push_str(&format!(
                "# runs {} events {} adjacent-repeats {} collisions {} escapes {}\n",
                census.runs.len(),
                census.total_events,
                census.adjacent_repeats,
                census.collisions,
                census.escapes,
            ));
            write_out(&out, &s)
        }

        Command::EllipseCrit {
            elements,
            grid,
            census,
            seed,
            scan_output,
            out,
        } => {
            if let Some(n) = census {
                let summary = ellipse::census_random_pairs(n, seed, grid);
                let manifest = RunManifest::new(
                    "ellipse-crit",
                    vec![
                        format!("--census {n}"),
                        format!("--seed {seed}"),
                        format!("--grid {grid}"),
                    ],
                    Some(seed),
                    b"",
                );
                let mut s = manifest.header();
                s.push_str("# histogram: total-count pair-count\n");
                for (count, pairs) in &summary.histogram {
                    s.push_str(&format!("{count} {pairs}\n"));
                }
                s.push_str(&format!("# max total: {}\n", summary.max_total));
                if let Some(rec) = &summary.max_record {
                    s.push_str(&format!(
                        "# maximal pair elements: {:?} / {:?}\n",
                        rec.elements.0, rec.elements.1
                    ));
                }
                s.push_str(&format!("# violations: {}\n", summary.violations.len()));
                return write_out(&out, &s);
            }

            let el = elements.ok_or_else(|| {
                nbodylab::Error::InvalidInstance(
                    "need --elements a1,e1,inc1,node1,peri1,a2,e2,inc2,node2,peri2 or --census".into(),
                )
            })?;
            let first = ellipse::KeplerEllipse::from_elements(&ellipse::EllipseElements {
                a: el[0],
                e: el[1],
                inclination: el[2],
                node: el[3],
                periapsis: el[4],
            })?;
            let second = ellipse::KeplerEllipse::from_elements(&ellipse::EllipseElements {
                a: el[5],
                e: el[6],
                inclination: el[7],
                node: el[8],
                periapsis: el[9],
            })?;
            let pair = ellipse::ConfocalPair::new(first, second)?;
            let set = ellipse::find_critical_points(&pair, grid)?;
            let manifest = RunManifest::new(
                "ellipse-crit",
                vec![format!(
                    "--elements {}",
                    el.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                )],
                None,
                b"",
            );
            let mut s = manifest.header();
            s.push_str(&format!(
                "# counts: {} minima, {} maxima, {} saddles, {} degenerate; complete {}; morse-consistent {}\n",
                set.n_min, set.n_max, set.n_saddle, set.n_degenerate, set.complete, set.euler_ok
            ));
            for p in &set.points {
                s.push_str(&format!(
                    "{{\"E1\":{},\"E2\":{},\"d2\":{},\"kind\":\"{:?}\"}}\n",
                    fmt_g17(p.e1),
                    fmt_g17(p.e2),
                    fmt_g17(p.d2),
                    p.kind,
                ));
            }
            if let Some(path) = &scan_output {
                let mut buf = Vec::new();
                nbodylab::io::write_torus_scan(&mut buf, &manifest, &pair, grid.min(512))
                    .map_err(|e| nbodylab::Error::Io {
                        path: path.display().to_string(),
                        source: e,
                    })?;
                fs::write(path, buf).map_err(|e| nbodylab::Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
            }
            write_out(&out, &s)
        }

        Command::Verify { full } => {
            let checks = nbodylab::verify::run_all(!full);
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(10);
            let mut failed = 0;
            for c in &checks {
                println!(
                    "{:<width$}  {}  {}",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.detail,
                );
                if !c.passed {
                    failed += 1;
                }
            }
            println!(
                "{} checks, {} passed, {} failed",
                checks.len(),
                checks.len() - failed,
                failed
            );
            if failed > 0 {
                return Err(nbodylab::Error::InvalidInstance(format!(
                    "{failed} verification checks failed"
                )));
            }
            Ok(())
        }
    }
}
