//! Command-line front end: configuration, dispatch and JSON reports.
//!
//! Settings come from built-in defaults, then an optional `key = value`
//! file, then flags. Every threshold used by a command is part of the
//! configuration and is echoed in the report.

use crate::error::{Result, VwError};
use crate::experiments::{
    convergence_suite, first_failure, identity_suite, lemma_suite, solve_once, solve_suite, spectrum_run, Check,
    IdentityThresholds, PackKind, SolveSetup,
};
use crate::lattice::{write_field, write_matrix, Grid, SnapshotMeta};
use crate::lemmas::LemmaId;
use crate::solver::SolveOptions;
use crate::spectrum::{EPS_RANK, MAX_DENSE_N};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA: &str = "vwlab-report/1";

pub fn report_schema_version() -> &'static str {
    REPORT_SCHEMA
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyLemmas,
    CheckIdentities,
    Solve,
    Spectrum,
    Convergence,
}

impl std::str::FromStr for Command {
    type Err = VwError;
    fn from_str(s: &str) -> Result<Self> {
        <Command as ValueEnum>::from_str(s, true).map_err(|_| VwError::InvalidConfig(format!("unknown command '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lemma_a1: f64,
    pub lemma_a2: f64,
    pub lemma_a3: f64,
    pub lemma_radial: f64,
    pub expansion: f64,
    pub jacobian: f64,
    pub adjoint: f64,
    pub formula: f64,
    pub constant_fields: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub eps_rank: f64,
    pub report_honesty: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let id = IdentityThresholds::default();
        Thresholds {
            lemma_a1: LemmaId::A1.tolerance(),
            lemma_a2: LemmaId::A2.tolerance(),
            lemma_a3: LemmaId::A3.tolerance(),
            lemma_radial: LemmaId::Radial.tolerance(),
            expansion: id.expansion,
            jacobian: id.jacobian,
            adjoint: id.adjoint,
            formula: id.formula,
            constant_fields: id.constant_fields,
            ratio_lo: 3.4,
            ratio_hi: 4.6,
            eps_rank: EPS_RANK,
            report_honesty: 1e-14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub grid: usize,
    pub length: f64,
    pub seed: u64,
    pub band: usize,
    pub eps: f64,
    pub tol: f64,
    pub samples: u64,
    pub trivial: bool,
    pub pack: PackKind,
    pub amplitudes: Vec<f64>,
    pub max_newton: usize,
    pub max_krylov: usize,
    pub reanchor: bool,
    pub max_seeds: Option<usize>,
    pub spectrum: bool,
    pub grids: Vec<usize>,
    pub fd_directions: usize,
    pub thresholds: Thresholds,
    /// Where the report goes; not echoed, so reports do not depend on it.
    #[serde(skip)]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snapshot: Option<String>,
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let opts = SolveOptions::default();
        let (grid, band, samples) = match command {
            Command::VerifyLemmas => (8, 1, 10_000),
            Command::CheckIdentities => (8, 1, 100),
            Command::Solve => (3, 0, 1),
            Command::Spectrum => (3, 0, 1),
            Command::Convergence => (8, 1, 1),
        };
        ExperimentConfig {
            command,
            grid,
            length: std::f64::consts::TAU,
            seed: 1,
            band,
            eps: 0.2,
            tol: opts.tol,
            samples,
            trivial: false,
            pack: PackKind::Random,
            amplitudes: vec![1.0, 0.3],
            max_newton: opts.max_newton,
            max_krylov: opts.max_krylov,
            reanchor: opts.reanchor,
            max_seeds: None,
            spectrum: true,
            grids: vec![8, 16, 32],
            fd_directions: 20,
            thresholds: Thresholds::default(),
            out: None,
            matrix: None,
            snapshot: None,
        }
    }

    /// Apply one `key = value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        let bad = |what: &str| VwError::InvalidConfig(format!("{key}: expected {what}, got '{v}'"));
        let uint = || v.parse::<u64>().map_err(|_| bad("a non-negative integer"));
        let real = || v.parse::<f64>().map_err(|_| bad("a number"));
        let boolean = || match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad("a boolean")),
        };
        let t = &mut self.thresholds;
        match key.as_str() {
            "command" => {
                self.command = v.parse()?;
            }
            "grid" => self.grid = uint()? as usize,
            "length" => self.length = real()?,
            "seed" => self.seed = uint()?,
            "band" => self.band = uint()? as usize,
            "eps" => self.eps = real()?,
            "tol" => self.tol = real()?,
            "samples" => self.samples = uint()?,
            "trivial" => self.trivial = boolean()?,
            "pack" => self.pack = v.parse()?,
            "amplitudes" => {
                self.amplitudes = split_list(v)
                    .map(|s| s.parse::<f64>().map_err(|_| bad("a comma-separated list of numbers")))
                    .collect::<Result<_>>()?
            }
            "max-newton" => self.max_newton = uint()? as usize,
            "max-krylov" => self.max_krylov = uint()? as usize,
            "reanchor" => self.reanchor = boolean()?,
            "max-seeds" => self.max_seeds = Some(uint()? as usize),
            "spectrum" => self.spectrum = boolean()?,
            "grids" => {
                self.grids = split_list(v)
                    .map(|s| s.parse::<usize>().map_err(|_| bad("a comma-separated list of grid sizes")))
                    .collect::<Result<_>>()?
            }
            "fd-directions" => self.fd_directions = uint()? as usize,
            "expansion-tol" => t.expansion = real()?,
            "jacobian-tol" => t.jacobian = real()?,
            "adjoint-tol" => t.adjoint = real()?,
            "formula-tol" => t.formula = real()?,
            "constant-tol" => t.constant_fields = real()?,
            "ratio-lo" => t.ratio_lo = real()?,
            "ratio-hi" => t.ratio_hi = real()?,
            "out" => self.out = Some(v.to_string()),
            "matrix" => self.matrix = Some(v.to_string()),
            "snapshot" => self.snapshot = Some(v.to_string()),
            _ => return Err(VwError::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Check every setting the selected command uses.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(VwError::InvalidConfig(m));
        if !(self.length.is_finite() && self.length > 0.0) {
            return err(format!("length must be positive, got {}", self.length));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return err(format!("eps must be non-negative, got {}", self.eps));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return err(format!("tol must be positive, got {}", self.tol));
        }
        if self.samples == 0 {
            return err("samples must be at least 1".into());
        }
        let t = &self.thresholds;
        let all = [
            t.expansion,
            t.jacobian,
            t.adjoint,
            t.formula,
            t.constant_fields,
            t.ratio_lo,
            t.ratio_hi,
        ];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) || t.ratio_lo >= t.ratio_hi {
            return err("thresholds must be positive and ratio-lo < ratio-hi".into());
        }
        let band_ok = |n: usize| 2 * self.band + 2 <= n;
        match self.command {
            Command::VerifyLemmas => {}
            Command::CheckIdentities => {
                if self.grid < 3 {
                    return err(format!("grid must be at least 3, got {}", self.grid));
                }
                if !band_ok(self.grid) {
                    return err(format!("band {} needs grid >= {}", self.band, 2 * self.band + 2));
                }
            }
            Command::Solve | Command::Spectrum => {
                if self.grid < 3 {
                    return err(format!("grid must be at least 3, got {}", self.grid));
                }
                if !self.trivial && !band_ok(self.grid) {
                    return err(format!("band {} needs grid >= {}", self.band, 2 * self.band + 2));
                }
                if self.command == Command::Spectrum && self.grid > MAX_DENSE_N {
                    return err(format!("spectrum needs grid <= {MAX_DENSE_N}, got {}", self.grid));
                }
                if self.command == Command::Solve {
                    if self.amplitudes.is_empty() || self.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                        return err("amplitudes must be a non-empty list of non-negative numbers".into());
                    }
                    if self.max_newton == 0 || self.max_krylov == 0 {
                        return err("max-newton and max-krylov must be positive".into());
                    }
                    if self.max_seeds == Some(0) {
                        return err("max-seeds must be positive".into());
                    }
                }
            }
            Command::Convergence => {
                if self.grids.len() < 2 {
                    return err("grids needs at least two sizes".into());
                }
                if let Some(&n) = self.grids.iter().find(|&&n| !band_ok(n)) {
                    return err(format!("band {} is too large for grid {n}", self.band));
                }
            }
        }
        Ok(())
    }

    fn solve_setup(&self) -> SolveSetup {
        SolveSetup {
            grid: self.grid,
            length: self.length,
            band: self.band,
            eps: self.eps,
            pack: if self.trivial { PackKind::Trivial } else { self.pack },
            amplitudes: self.amplitudes.clone(),
            options: SolveOptions {
                tol: self.tol,
                max_newton: self.max_newton,
                max_krylov: self.max_krylov,
                reanchor: self.reanchor,
            },
            spectrum: self.spectrum && self.grid <= MAX_DENSE_N,
        }
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parse a `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| VwError::InvalidConfig(format!("line {}: expected 'key = value'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: Command,
    pub config: ExperimentConfig,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failing_check: Option<String>,
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Parse a report, rejecting other schema versions.
pub fn load_report(text: &str) -> Result<Report> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    match v.get("schema").and_then(|s| s.as_str()) {
        Some(REPORT_SCHEMA) => Ok(serde_json::from_value(v)?),
        Some(other) => Err(VwError::Format(format!(
            "report schema '{other}' is not supported (expected '{REPORT_SCHEMA}')"
        ))),
        None => Err(VwError::Format("report has no schema field".into())),
    }
}

fn meta(cfg: &ExperimentConfig, label: &str) -> SnapshotMeta {
    SnapshotMeta {
        seed: Some(cfg.seed),
        band: Some(cfg.band),
        label: Some(label.to_string()),
    }
}

/// Run one validated configuration.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = || Grid::new(cfg.grid, cfg.length);
    let (checks, result) = match cfg.command {
        Command::VerifyLemmas => {
            let r = lemma_suite(cfg.seed, cfg.samples);
            (r.checks.clone(), serde_json::to_value(&r)?)
        }
        Command::CheckIdentities => {
            let t = &cfg.thresholds;
            let thr = IdentityThresholds {
                expansion: t.expansion,
                jacobian: t.jacobian,
                adjoint: t.adjoint,
                formula: t.formula,
                constant_fields: t.constant_fields,
            };
            let r = identity_suite(grid()?, cfg.seed, cfg.band, cfg.eps, cfg.samples as usize, cfg.fd_directions, &thr)?;
            (r.checks.clone(), serde_json::to_value(&r)?)
        }
        Command::Solve => {
            let setup = cfg.solve_setup();
            let target = cfg.samples as usize;
            let r = solve_suite(&setup, cfg.seed, target, cfg.max_seeds.unwrap_or(target))?;
            if let Some(prefix) = &cfg.snapshot {
                let pick = r.runs.iter().find(|x| x.certified()).or(r.runs.last());
                if let Some(run) = pick {
                    let (_, sol, _) = solve_once(&setup, run.pack_seed, run.start_amplitude)?;
                    let m = SnapshotMeta {
                        seed: Some(run.pack_seed),
                        ..meta(cfg, "solution")
                    };
                    for (name, f) in [("a", &sol.a), ("b", &sol.b), ("c", &sol.c)] {
                        write_field(Path::new(&format!("{prefix}.{name}.vwf")), f, &m)?;
                    }
                }
            }
            (r.checks.clone(), serde_json::to_value(&r)?)
        }
        Command::Spectrum => {
            let (r, m) = spectrum_run(grid()?, cfg.seed, cfg.band, cfg.eps, cfg.trivial, false)?;
            if let Some(path) = &cfg.matrix {
                let side = m.nrows();
                let data: Vec<f64> = m.iter().copied().collect();
                write_matrix(Path::new(path), &grid()?, side, &data, &meta(cfg, "combined operator"))?;
            }
            (r.checks.clone(), serde_json::to_value(&r)?)
        }
        Command::Convergence => {
            let t = &cfg.thresholds;
            let r = convergence_suite(&cfg.grids, cfg.seed, cfg.band, (t.ratio_lo, t.ratio_hi))?;
            (r.checks.clone(), serde_json::to_value(&r)?)
        }
    };
    let failing_check = first_failure(&checks).map(|c| c.name.clone());
    Ok(Report {
        schema: REPORT_SCHEMA.to_string(),
        command: cfg.command,
        config: cfg.clone(),
        passed: failing_check.is_none(),
        failing_check,
        checks,
        result,
    })
}

/// Flags shared by every command.
#[derive(Debug, Parser)]
#[command(name = "vwlab", version, about = "Perturbed Vafa-Witten equations on a lattice 4-torus")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trivial: bool,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Cli {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(self.command);
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p)
                .map_err(|e| VwError::InvalidConfig(format!("cannot read {}: {e}", p.display())))?;
            for (k, v) in parse_config_text(&text)? {
                if k.trim() == "command" {
                    continue;
                }
                cfg.set(&k, &v)?;
            }
        }
        let flags: [(&str, Option<String>); 8] = [
            ("grid", self.grid.map(|x| x.to_string())),
            ("length", self.length.map(|x| x.to_string())),
            ("seed", self.seed.map(|x| x.to_string())),
            ("band", self.band.map(|x| x.to_string())),
            ("eps", self.eps.map(|x| x.to_string())),
            ("tol", self.tol.map(|x| x.to_string())),
            ("samples", self.samples.map(|x| x.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.trivial {
            cfg.trivial = true;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| VwError::InvalidConfig(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Worker count from `VWLAB_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("VWLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(VwError::InvalidConfig(format!("VWLAB_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

/// Full CLI behaviour for the given arguments; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match threads_from_env().and_then(|t| {
        if let Some(n) = t {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        cli.to_config()
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("vwlab: {e}");
            return EXIT_INVALID;
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e @ VwError::InvalidConfig(_)) => {
            eprintln!("vwlab: {e}");
            return EXIT_INVALID;
        }
        Err(e) => {
            eprintln!("vwlab: {} failed: {e}", cmd_name(cfg.command));
            return EXIT_CHECK_FAILED;
        }
    };
    let text = match report.to_json() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("vwlab: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    match &cfg.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("vwlab: cannot write {p}: {e}");
                return EXIT_CHECK_FAILED;
            }
        }
        None => print!("{text}"),
    }
    match &report.failing_check {
        None => EXIT_OK,
        Some(name) => {
            let c = report.checks.iter().find(|c| &c.name == name).expect("named check");
            eprintln!("vwlab: check failed: {name} (value {:e}, bounds {:?}..{:?})", c.value, c.lo, c.hi);
            EXIT_CHECK_FAILED
        }
    }
}

fn cmd_name(c: Command) -> String {
    c.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Result<ExperimentConfig> {
        let mut v = vec!["vwlab"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).map_err(|e| VwError::InvalidConfig(e.to_string()))?.to_config()
    }

    #[test]
    fn schema_version() {
        assert_eq!(report_schema_version(), "vwlab-report/1");
    }

    #[test]
    fn config_text_parsing() {
        let kv = parse_config_text("# comment\ngrid = 4\n\nseed=7 # trailing\n").unwrap();
        assert_eq!(kv, vec![("grid".into(), "4".into()), ("seed".into(), "7".into())]);
        assert!(parse_config_text("grid 4").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "grid = 4\nseed = 9\nband = 1\nmax_newton = 5\n").unwrap();
        let c = cli(&["check-identities", "--config", p.to_str().unwrap(), "--seed", "3"]).unwrap();
        assert_eq!((c.grid, c.seed, c.band, c.max_newton), (4, 3, 1, 5));
        let c = cli(&["solve", "--set", "amplitudes=0.5, 2", "--set", "pack=manufactured"]).unwrap();
        assert_eq!(c.amplitudes, vec![0.5, 2.0]);
        assert_eq!(c.pack, PackKind::Manufactured);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(cli(&["check-identities", "--grid", "3", "--band", "1"]).is_err());
        assert!(cli(&["spectrum", "--grid", "5"]).is_err());
        assert!(cli(&["solve", "--tol", "0"]).is_err());
        assert!(cli(&["solve", "--set", "nonsense=1"]).is_err());
        assert!(cli(&["solve", "--set", "grid=abc"]).is_err());
        assert!(cli(&["convergence", "--set", "grids=8"]).is_err());
        assert!(cli(&["verify-lemmas", "--samples", "0"]).is_err());
        assert!(cli(&["solve", "--eps", "-1"]).is_err());
    }

    #[test]
    fn defaults_echo_thresholds() {
        let c = ExperimentConfig::defaults(Command::CheckIdentities);
        let j = serde_json::to_string(&c).unwrap();
        for key in ["\"expansion\":1e-12", "\"jacobian\":1e-10", "\"ratio_lo\":3.4", "\"eps_rank\":1e-8"] {
            assert!(j.contains(key), "{key} in {j}");
        }
    }

    #[test]
    fn loader_checks_schema() {
        let cfg = ExperimentConfig {
            samples: 20,
            ..ExperimentConfig::defaults(Command::VerifyLemmas)
        };
        let r = run(&cfg).unwrap();
        assert!(r.passed);
        let text = r.to_json().unwrap();
        assert_eq!(load_report(&text).unwrap(), r);
        let other = text.replace("vwlab-report/1", "vwlab-report/2");
        assert!(matches!(load_report(&other), Err(VwError::Format(_))));
        assert!(load_report("{}").is_err());
    }

    #[test]
    fn trivial_spectrum_report() {
        let r = run(&cli(&["spectrum", "--grid", "3", "--trivial"]).unwrap()).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.result["spectrum"]["dim_kernel"], 24);
        assert_eq!(r.result["spectrum"]["dim_cokernel"], 24);
        assert_eq!(r.result["spectrum"]["index_discrete"], 0);
    }
}
