//! Problem-file ingestion, run manifests, and record-stream output.
//!
//! Every numeric field is printed with 17 significant digits so a round-trip
//! parse reproduces the value bit for bit; output files begin with a
//! manifest header in `#` comment lines.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;

use crate::cc::{Census, CentralConfig, Classification};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::integrator::IntegrationResult;
use crate::system::{Configuration, MassSystem, PhaseState};

/// 17 significant digits; parses back to the identical f64.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// One problem instance on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub masses: Vec<f64>,
    #[serde(default = "default_exponent")]
    pub exponent_a: f64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub positions: Vec<Vec<f64>>,
    #[serde(default)]
    pub velocities: Option<Vec<Vec<f64>>>,
}

fn default_exponent() -> f64 {
    -1.5
}

fn default_dimension() -> usize {
    2
}

impl ProblemInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn system(&self) -> Result<MassSystem> {
        MassSystem::new(self.masses.clone(), self.exponent_a, self.dimension)
    }

    pub fn state(&self) -> Result<(MassSystem, PhaseState)> {
        let sys = self.system()?;
        if self.positions.len() != sys.n() {
            return Err(Error::InvalidInstance(format!(
                "{} masses but {} position rows",
                sys.n(),
                self.positions.len()
            )));
        }
        let cfg = Configuration::from_rows(&self.positions, self.dimension)?;
        let vel = match &self.velocities {
            Some(rows) => {
                if rows.len() != sys.n() {
                    return Err(Error::InvalidInstance(format!(
                        "{} masses but {} velocity rows",
                        sys.n(),
                        rows.len()
                    )));
                }
                let mut flat = Vec::with_capacity(sys.n() * self.dimension);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != self.dimension {
                        return Err(Error::InvalidInstance(format!(
                            "velocity {i} has {} components, expected {}",
                            row.len(),
                            self.dimension
                        )));
                    }
                    flat.extend_from_slice(row);
                }
                flat
            }
            None => vec![0.0; sys.n() * self.dimension],
        };
        let st = PhaseState::new(cfg, vel, 0.0)?;
        Ok((sys, st))
    }
}

/// Reproducibility header: everything that determines the output bytes.
/// Wall time is deliberately not part of the header (identical runs must
/// produce identical files); the CLI reports timing on stderr instead.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub input_digest: String,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: Vec<String>, seed: Option<u64>, input: &[u8]) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            args,
            seed,
            input_digest: sha256_hex(input),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# nbodylab {} subcommand={}\n",
            self.version, self.subcommand
        ));
        s.push_str(&format!("# args: {}\n", self.args.join(" ")));
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s.push_str(&format!("# input-digest: sha256:{}\n", self.input_digest));
        s
    }
}

/// One census entry on disk (JSON line with forced 17-digit floats).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusLine {
    pub masses: Vec<f64>,
    pub exponent: f64,
    pub lambda: f64,
    pub positions: Vec<Vec<f64>>,
    pub geometry: crate::cc::Geometry,
    pub cyclic_order: Option<String>,
    pub symmetry_order: usize,
    pub reflection_axes: usize,
    pub cocircular: bool,
    pub com_at_circumcenter: bool,
    pub basin_count: usize,
    pub residual_norm: f64,
}

fn positions_rows(cfg: &Configuration) -> Vec<Vec<f64>> {
    (0..cfg.n()).map(|i| cfg.pos(i).to_vec()).collect()
}

impl CensusLine {
    pub fn from_entry(cc: &CentralConfig, class: &Classification, basin: usize) -> Self {
        CensusLine {
            masses: cc.system.masses().to_vec(),
            exponent: cc.system.exponent(),
            lambda: cc.multiplier,
            positions: positions_rows(&cc.config),
            geometry: class.geometry,
            cyclic_order: class.cyclic_order.map(|c| c.to_string()),
            symmetry_order: class.symmetry_order,
            reflection_axes: class.reflection_axes,
            cocircular: class.cocircular,
            com_at_circumcenter: class.com_at_circumcenter,
            basin_count: basin,
            residual_norm: cc.residual_norm,
        }
    }

    /// JSON with all floats forced to 17 significant digits.
    pub fn to_line(&self) -> String {
        let pos = self
            .positions
            .iter()
            .map(|row| {
                format!(
                    "[{}]",
                    row.iter().map(|x| fmt_g17(*x)).collect::<Vec<_>>().join(",")
                )
            })
            .collect::<Vec<_>>()
            .join(",");
        let masses = self
            .masses
            .iter()
            .map(|x| fmt_g17(*x))
            .collect::<Vec<_>>()
            .join(",");
        let order = match &self.cyclic_order {
            Some(o) => format!("\"{o}\""),
            None => "null".into(),
        };
        format!(
            "{{\"masses\":[{masses}],\"exponent\":{},\"lambda\":{},\"positions\":[{pos}],\"geometry\":{},\"cyclic_order\":{order},\"symmetry_order\":{},\"reflection_axes\":{},\"cocircular\":{},\"com_at_circumcenter\":{},\"basin_count\":{},\"residual_norm\":{}}}",
            fmt_g17(self.exponent),
            fmt_g17(self.lambda),
            serde_json::to_string(&self.geometry).unwrap(),
            self.symmetry_order,
            self.reflection_axes,
            self.cocircular,
            self.com_at_circumcenter,
            self.basin_count,
            fmt_g17(self.residual_norm),
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Parse(format!("census line: {e}")))
    }

    pub fn to_central_config(&self) -> Result<(MassSystem, CentralConfig)> {
        let sys = MassSystem::new(self.masses.clone(), self.exponent, 2)?;
        let cfg = Configuration::from_rows(&self.positions, 2)?;
        let cc = CentralConfig {
            system: sys.clone(),
            config: cfg,
            multiplier: self.lambda,
            residual_norm: self.residual_norm,
        };
        Ok((sys, cc))
    }
}

/// Serialize a census: manifest header then one JSON line per class.
pub fn write_census(w: &mut dyn Write, manifest: &RunManifest, census: &Census) -> std::io::Result<()> {
    w.write_all(manifest.header().as_bytes())?;
    writeln!(
        w,
        "# classes: {} (from {} starts, {} converged)",
        census.entries.len(),
        census.n_starts,
        census.converged
    )?;
    for e in &census.entries {
        let line = CensusLine::from_entry(&e.cc, &e.classification, e.basin_count);
        writeln!(w, "{}", line.to_line())?;
    }
    Ok(())
}

/// Parse the non-comment lines of a census file.
pub fn read_census_lines(text: &str) -> Result<Vec<CensusLine>> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map(CensusLine::parse)
        .collect()
}

/// Trajectory record stream: time, flattened state, energy, angular momentum.
pub fn write_trajectory(
    w: &mut dyn Write,
    manifest: &RunManifest,
    sys: &MassSystem,
    result: &IntegrationResult,
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: "<trajectory stream>".into(),
        source: e,
    };
    w.write_all(manifest.header().as_bytes()).map_err(io_err)?;
    let d = sys.dim();
    let mut cols = vec!["t".to_string()];
    for i in 0..sys.n() {
        for k in 0..d {
            cols.push(format!("q{}{}", i + 1, ["x", "y", "z"][k]));
        }
    }
    for i in 0..sys.n() {
        for k in 0..d {
            cols.push(format!("v{}{}", i + 1, ["x", "y", "z"][k]));
        }
    }
    cols.push("energy".into());
    if d == 2 {
        cols.push("L".into());
    } else {
        cols.extend(["Lx".into(), "Ly".into(), "Lz".into()]);
    }
    writeln!(w, "# columns: {}", cols.join(" ")).map_err(io_err)?;
    for s in &result.samples {
        let ints = dynamics::first_integrals(sys, s)?;
        let mut row = vec![fmt_g17(s.time)];
        row.extend(s.config.coords().iter().map(|x| fmt_g17(*x)));
        row.extend(s.velocities.iter().map(|x| fmt_g17(*x)));
        row.push(fmt_g17(ints.energy));
        row.extend(ints.angular_momentum.iter().map(|x| fmt_g17(*x)));
        writeln!(w, "{}", row.join(" ")).map_err(io_err)?;
    }
    Ok(())
}

/// Torus scan of d^2 for plotting: one row per first anomaly.
pub fn write_torus_scan(
    w: &mut dyn Write,
    manifest: &RunManifest,
    pair: &crate::ellipse::ConfocalPair,
    grid_n: usize,
) -> std::io::Result<()> {
    w.write_all(manifest.header().as_bytes())?;
    writeln!(w, "# d^2 on the {grid_n} x {grid_n} anomaly grid, rows = E1")?;
    let h = std::f64::consts::TAU / grid_n as f64;
    for i in 0..grid_n {
        let row: Vec<String> = (0..grid_n)
            .map(|j| fmt_g17(pair.squared_distance(i as f64 * h, j as f64 * h)))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Spectrum table: real and imaginary part per eigenvalue.
pub fn write_spectrum(
    w: &mut dyn Write,
    manifest: &RunManifest,
    report: &crate::stability::SpectrumReport,
) -> std::io::Result<()> {
    w.write_all(manifest.header().as_bytes())?;
    writeln!(w, "# columns: re im")?;
    for z in &report.eigenvalues {
        writeln!(w, "{} {}", fmt_g17(z.re), fmt_g17(z.im))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips_exactly() {
        let mut rng = crate::rng::task_rng(301, 0);
        use rand::Rng;
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-1e6..1e6) * rng.random_range(1e-12..1e12f64);
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    #[test]
    fn problem_instance_parses_and_validates() {
        let text = r#"{
            "masses": [1.0, 1.0],
            "exponent_a": -1.5,
            "dimension": 2,
            "positions": [[-0.5, 0.0], [0.5, 0.0]],
            "velocities": [[0.0, -0.7071], [0.0, 0.7071]]
        }"#;
        let inst = ProblemInstance::from_json(text).unwrap();
        let (sys, st) = inst.state().unwrap();
        assert_eq!(sys.n(), 2);
        assert_eq!(st.vel(1), &[0.0, 0.7071]);

        let bad = r#"{ "masses": [1.0], "positions": [[0.0, 0.0]] }"#;
        assert!(ProblemInstance::from_json(bad)
            .unwrap()
            .state()
            .is_err());

        let syntax = "{ masses: oops }";
        let err = ProblemInstance::from_json(syntax).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line"), "error should carry a location: {msg}");
    }

    #[test]
    fn census_line_round_trip() {
        let sys = MassSystem::newtonian(vec![1.0, 2.0, 3.0]).unwrap();
        let cfg = crate::oracles::lagrange_equilateral_config(&sys);
        let cc = crate::cc::normalize(&sys, &cfg).unwrap();
        let class = crate::cc::classify(&sys, &cc.config);
        let line = CensusLine::from_entry(&cc, &class, 17);
        let text = line.to_line();
        let back = CensusLine::parse(&text).unwrap();
        assert_eq!(back.basin_count, 17);
        assert_eq!(back.lambda.to_bits(), line.lambda.to_bits());
        let (_, cc2) = back.to_central_config().unwrap();
        assert_eq!(cc2.config.coords(), cc.config.coords());
    }

    #[test]
    fn manifest_header_is_stable() {
        let m = RunManifest::new("cc-find", vec!["--starts".into(), "10".into()], Some(7), b"x");
        let h1 = m.header();
        let h2 = m.header();
        assert_eq!(h1, h2);
        assert!(h1.starts_with("# nbodylab"));
        assert!(h1.contains("seed: 7"));
    }
}
