//! Seeded experiment runners shared by the CLI, the C interface and the
//! acceptance suite. Every runner returns a serializable report whose
//! `checks` list says which thresholds were applied.

use crate::error::{Result, VwError};
use crate::lattice::{
    gauge_apply, l2_inner, quat_exp, sample_config, sample_config_scaled, sample_gauge_scaled, sample_pack,
    sample_scalar, sample_tangent, Configuration, GaugeField, Grid, PerturbationPack, Triple,
};
use crate::lemmas::{run_lemma, LemmaId, LemmaReport};
use crate::rng::{self, tag};
use crate::solver::{fd_jacobian_check, newton_solve, random_tangent, Branch, SolveOptions, SolveSummary};
use crate::spectrum::{assemble_dense, svd_spectrum, SpectrumReport, MAX_DENSE_N};
use crate::vw::{
    complex_check, constant_solution, d0, d0_star, d0_star_transpose, expansion_check, gauge_equivariance_check,
    vw_perturbed,
};
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One thresholded number in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hi: Option<f64>,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < hi`.
    pub fn below(name: &str, value: f64, hi: f64) -> Check {
        Check {
            name: name.into(),
            value,
            lo: None,
            hi: Some(hi),
            passed: value < hi,
        }
    }

    /// Passes when `lo <= value <= hi`.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Check {
        Check {
            name: name.into(),
            value,
            lo: Some(lo),
            hi: Some(hi),
            passed: (lo..=hi).contains(&value),
        }
    }

    /// Passes when `value == target`.
    pub fn equals(name: &str, value: f64, target: f64) -> Check {
        Check {
            name: name.into(),
            value,
            lo: Some(target),
            hi: Some(target),
            passed: value == target,
        }
    }
}

pub fn first_failure(checks: &[Check]) -> Option<&Check> {
    checks.iter().find(|c| !c.passed)
}

// ---------------------------------------------------------------- lemmas

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuite {
    pub lemmas: Vec<LemmaReport>,
    pub checks: Vec<Check>,
}

pub fn lemma_suite(seed: u64, samples: u64) -> LemmaSuite {
    let lemmas: Vec<LemmaReport> = LemmaId::ALL.iter().map(|&id| run_lemma(id, seed, samples)).collect();
    let mut checks = Vec::new();
    for r in &lemmas {
        let name = format!("{:?}", r.lemma_id);
        checks.push(Check::equals(&format!("{name}.failures"), r.failures as f64, 0.0));
        checks.push(Check::below(
            &format!("{name}.max_err"),
            r.max_det_relative_error,
            r.lemma_id.tolerance().max(f64::MIN_POSITIVE),
        ));
    }
    LemmaSuite { lemmas, checks }
}

// ---------------------------------------------------------------- identities

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityThresholds {
    pub expansion: f64,
    pub jacobian: f64,
    pub adjoint: f64,
    pub formula: f64,
    pub constant_fields: f64,
}

impl Default for IdentityThresholds {
    fn default() -> Self {
        IdentityThresholds {
            expansion: 1e-12,
            jacobian: 1e-10,
            adjoint: 1e-12,
            formula: 1e-12,
            constant_fields: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuite {
    pub samples: usize,
    pub fd_directions: usize,
    pub fd_steps: Vec<f64>,
    /// Largest relative defect of the quadratic expansion.
    pub expansion_max: f64,
    /// The same with `t` the difference of two sampled configurations.
    pub expansion_large_max: f64,
    pub jacobian_max: f64,
    pub adjoint_max: f64,
    pub formula_max: f64,
    /// Complex identity with constant fields.
    pub complex_constant_max: f64,
    /// Equivariance defect for constant gauge transformations.
    pub gauge_constant_max: f64,
    pub checks: Vec<Check>,
}

fn rel(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn random_unit_quaternion(seed: u64, tags: &[u64]) -> [f64; 4] {
    let mut r = rng::stream(seed, tags);
    let v: [f64; 3] = std::array::from_fn(|_| r.gen_range(-3.0..3.0));
    quat_exp(v)
}

/// Exact-identity suite on one grid. Sample `i` draws its pack, configuration
/// and directions from a sub-seed of `seed`.
pub fn identity_suite(
    grid: Grid,
    seed: u64,
    band: usize,
    eps: f64,
    samples: usize,
    fd_directions: usize,
    thr: &IdentityThresholds,
) -> Result<IdentitySuite> {
    let fd_steps = vec![1e-2, 1e-3, 1e-4];
    let (mut expansion_max, mut expansion_large_max, mut adjoint_max, mut formula_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut complex_constant_max, mut gauge_constant_max) = (0.0f64, 0.0f64);
    for i in 0..samples as u64 {
        let s = rng::subseed(seed, &[tag::IDENTITY, i]);
        let pack = sample_pack(&grid, s, band, eps)?;
        let cfg = sample_config(&grid, s, band)?;
        let t = sample_tangent(&grid, s, band)?;
        expansion_max = expansion_max.max(expansion_check(&pack, &cfg, &t)?);
        let other = sample_config(&grid, s ^ 0x5a5a, band)?;
        expansion_large_max = expansion_large_max.max(expansion_check(&pack, &cfg, &other.sub(&cfg)?)?);

        let xi = sample_scalar(&grid, s, band)?;
        let dxi = d0(&cfg, &xi)?;
        let ts = d0_star(&cfg, &t)?;
        let gap = (dxi.l2_inner(&t)? - l2_inner(&xi, &ts)?).abs();
        adjoint_max = adjoint_max.max(rel(gap, dxi.l2_norm() * t.l2_norm() + xi.l2_norm() * ts.l2_norm()));
        let tt = d0_star_transpose(&cfg, &t)?;
        formula_max = formula_max.max(rel(ts.sub(&tt)?.l2_norm(), tt.l2_norm()));

        // constant fields: the pointwise parts must be exact
        let pc = sample_pack(&grid, s, 0, eps)?;
        let cc = sample_config(&grid, s, 0)?;
        let xc = sample_scalar(&grid, s, 0)?;
        let scale = vw_perturbed(&pc, &cc)?.bracket_with(&xc)?.l2_norm().max(1.0);
        complex_constant_max = complex_constant_max.max(complex_check(&pc, &cc, &xc)? / scale);
        let z = GaugeField::constant(grid, random_unit_quaternion(s, &[tag::GAUGE, 1]))?;
        let scale = crate::vw::vw(&cfg)?.l2_norm().max(1.0);
        gauge_constant_max = gauge_constant_max.max(gauge_equivariance_check(None, &cfg, &z)? / scale);
    }
    let mut jacobian_max = 0.0f64;
    if fd_directions > 0 {
        let s = rng::subseed(seed, &[tag::IDENTITY, u64::MAX]);
        let pack = sample_pack(&grid, s, band, eps)?;
        let cfg = sample_config(&grid, s, band)?;
        for &h in &fd_steps {
            jacobian_max = jacobian_max.max(fd_jacobian_check(&pack, &cfg, fd_directions, h, s)?);
        }
    }
    let checks = vec![
        Check::below("expansion", expansion_max, thr.expansion),
        Check::below("expansion_large", expansion_large_max, thr.expansion),
        Check::below("jacobian_fd", jacobian_max, thr.jacobian),
        Check::below("adjointness", adjoint_max, thr.adjoint),
        Check::below("d0_star_formula", formula_max, thr.formula),
        Check::below("complex_constant", complex_constant_max, thr.constant_fields),
        Check::below("gauge_constant", gauge_constant_max, thr.constant_fields),
    ];
    Ok(IdentitySuite {
        samples,
        fd_directions,
        fd_steps,
        expansion_max,
        expansion_large_max,
        jacobian_max,
        adjoint_max,
        formula_max,
        complex_constant_max,
        gauge_constant_max,
        checks,
    })
}

// ---------------------------------------------------------------- refinement

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSuite {
    pub grids: Vec<usize>,
    pub band: usize,
    pub gauge_amplitude: f64,
    pub config_amplitude: f64,
    /// `‖d1 d0 ξ + [ξ, r]‖` at a gauge-rotated manufactured zero, per grid.
    pub complex_errors: Vec<f64>,
    pub complex_ratios: Vec<f64>,
    /// Equivariance defect of the unperturbed map for a smooth gauge field.
    pub gauge_errors: Vec<f64>,
    pub gauge_ratios: Vec<f64>,
    pub gauge_constant: f64,
    pub checks: Vec<Check>,
}

fn ratios(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Refinement study of the two `O(h²)` identities.
pub fn convergence_suite(grids: &[usize], seed: u64, band: usize, ratio_window: (f64, f64)) -> Result<ConvergenceSuite> {
    if grids.len() < 2 {
        return Err(VwError::InvalidConfig("convergence needs at least two grids".into()));
    }
    let (gauge_amplitude, config_amplitude) = (0.05, 0.3);
    let mut complex_errors = Vec::new();
    let mut gauge_errors = Vec::new();
    let mut gauge_constant = 0.0f64;
    for &n in grids {
        let grid = Grid::with_n(n)?;
        let (pack, sol) = constant_solution(grid, seed)?;
        let z = sample_gauge_scaled(&grid, seed, band, gauge_amplitude)?;
        let x = gauge_apply(&z, &sol)?;
        let xi = sample_scalar(&grid, seed, band)?;
        complex_errors.push(complex_check(&pack, &x, &xi)?);

        let cfg = sample_config_scaled(&grid, seed, band, config_amplitude)?;
        let zeta = sample_gauge_scaled(&grid, rng::subseed(seed, &[tag::CONVERGENCE]), band, gauge_amplitude)?;
        gauge_errors.push(gauge_equivariance_check(None, &cfg, &zeta)?);
        let zc = GaugeField::constant(grid, random_unit_quaternion(seed, &[tag::CONVERGENCE, 1]))?;
        let scale = crate::vw::vw(&cfg)?.l2_norm().max(1.0);
        gauge_constant = gauge_constant.max(gauge_equivariance_check(None, &cfg, &zc)? / scale);
    }
    let complex_ratios = ratios(&complex_errors);
    let gauge_ratios = ratios(&gauge_errors);
    let (lo, hi) = ratio_window;
    let mut checks = Vec::new();
    for (i, r) in complex_ratios.iter().enumerate() {
        checks.push(Check::within(&format!("complex_ratio_{}_{}", grids[i], grids[i + 1]), *r, lo, hi));
    }
    for (i, r) in gauge_ratios.iter().enumerate() {
        checks.push(Check::within(&format!("gauge_ratio_{}_{}", grids[i], grids[i + 1]), *r, lo, hi));
    }
    checks.push(Check::below("gauge_constant", gauge_constant, 1e-12));
    Ok(ConvergenceSuite {
        grids: grids.to_vec(),
        band,
        gauge_amplitude,
        config_amplitude,
        complex_errors,
        complex_ratios,
        gauge_errors,
        gauge_ratios,
        gauge_constant,
        checks,
    })
}

// ---------------------------------------------------------------- solve

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PackKind {
    /// Sampled pack, sampled starting configuration.
    Random,
    /// Pack built around a known constant zero; start nearby.
    Manufactured,
    /// Trivial pack, zero start.
    Trivial,
}

impl std::str::FromStr for PackKind {
    type Err = VwError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PackKind::Random),
            "manufactured" => Ok(PackKind::Manufactured),
            "trivial" => Ok(PackKind::Trivial),
            _ => Err(VwError::InvalidConfig(format!("unknown pack kind '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSetup {
    pub grid: usize,
    pub length: f64,
    pub band: usize,
    pub eps: f64,
    pub pack: PackKind,
    /// Start amplitudes tried in order until a run converges on the general branch.
    pub amplitudes: Vec<f64>,
    pub options: SolveOptions,
    /// Assemble the dense operator at certified solutions (needs `grid <= 4`).
    pub spectrum: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRun {
    pub pack_seed: u64,
    pub start_amplitude: f64,
    pub summary: SolveSummary,
    /// Map norm recomputed from the returned configuration.
    pub recomputed_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_max: Option<f64>,
}

impl SolveRun {
    pub fn certified(&self) -> bool {
        self.summary.converged && self.summary.branch == Branch::General
    }
}

/// Pack and start for one run.
pub fn solve_inputs(setup: &SolveSetup, seed: u64, amplitude: f64) -> Result<(PerturbationPack, Configuration)> {
    let grid = Grid::new(setup.grid, setup.length)?;
    match setup.pack {
        PackKind::Trivial => Ok((PerturbationPack::trivial(grid), Triple::zeros(grid))),
        PackKind::Random => {
            let pack = sample_pack(&grid, seed, setup.band, setup.eps)?;
            pack.validate()?;
            Ok((pack, sample_config_scaled(&grid, seed, setup.band, amplitude)?))
        }
        PackKind::Manufactured => {
            let (pack, sol) = constant_solution(grid, seed)?;
            pack.validate()?;
            let mut start = sol;
            start.axpy(0.05 * amplitude, &random_tangent(grid, seed, 0)?)?;
            Ok((pack, start))
        }
    }
}

/// One Newton run, with the solution kept for callers that want it.
pub fn solve_once(setup: &SolveSetup, seed: u64, amplitude: f64) -> Result<(SolveRun, Configuration, PerturbationPack)> {
    let (pack, start) = solve_inputs(setup, seed, amplitude)?;
    let rep = newton_solve(&pack, &start, &setup.options, Some(seed))?;
    let recomputed_residual = vw_perturbed(&pack, &rep.config_out)?.l2_norm();
    let mut run = SolveRun {
        pack_seed: seed,
        start_amplitude: amplitude,
        summary: rep.summary(),
        recomputed_residual,
        sigma_min: None,
        sigma_max: None,
    };
    if setup.spectrum && run.certified() && setup.grid <= MAX_DENSE_N {
        let m = assemble_dense(Some(&pack), &rep.config_out)?;
        let s = svd_spectrum(&m, false)?;
        run.sigma_min = Some(s.sigma_min);
        run.sigma_max = Some(s.sigma_max);
    }
    Ok((run, rep.config_out, pack))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSuite {
    pub setup: SolveSetup,
    pub first_seed: u64,
    pub seeds_tried: usize,
    /// Certified runs wanted before stopping.
    pub target: usize,
    pub runs: Vec<SolveRun>,
    pub converged: usize,
    pub certified: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_min_stats: Option<[f64; 3]>,
    pub checks: Vec<Check>,
}

/// Runs seeds `first_seed, first_seed + 1, …` until `target` certified
/// solutions are found or `max_seeds` seeds are used. All attempts are kept.
pub fn solve_suite(setup: &SolveSetup, first_seed: u64, target: usize, max_seeds: usize) -> Result<SolveSuite> {
    if setup.amplitudes.is_empty() {
        return Err(VwError::InvalidConfig("at least one start amplitude is needed".into()));
    }
    let mut runs = Vec::new();
    let mut certified = 0;
    let mut seeds_tried = 0;
    for k in 0..max_seeds as u64 {
        if certified >= target {
            break;
        }
        seeds_tried += 1;
        let seed = first_seed.wrapping_add(k);
        for &amp in &setup.amplitudes {
            let (run, _, _) = solve_once(setup, seed, amp)?;
            let done = run.certified();
            runs.push(run);
            if done {
                certified += 1;
                break;
            }
        }
    }
    let converged = runs.iter().filter(|r| r.summary.converged).count();
    let mut sig: Vec<f64> = runs.iter().filter_map(|r| r.sigma_min).collect();
    sig.sort_by(f64::total_cmp);
    let sigma_min_stats = (!sig.is_empty()).then(|| [sig[0], sig[sig.len() / 2], sig[sig.len() - 1]]);
    let tol = setup.options.tol;
    let worst_converged = runs
        .iter()
        .filter(|r| r.summary.converged)
        .map(|r| r.summary.final_residual.max(r.summary.gauge_residual))
        .fold(0.0f64, f64::max);
    let honesty = runs
        .iter()
        .map(|r| (r.recomputed_residual - r.summary.final_residual).abs())
        .fold(0.0f64, f64::max);
    let mut checks = vec![
        Check::below("converged_residual", worst_converged, tol),
        Check::below("report_honesty", honesty, 1e-14),
    ];
    if setup.spectrum && setup.grid <= MAX_DENSE_N {
        let missing = runs.iter().filter(|r| r.certified() && r.sigma_min.is_none()).count();
        checks.push(Check::equals("sigma_min_reported", missing as f64, 0.0));
    }
    Ok(SolveSuite {
        setup: setup.clone(),
        first_seed,
        seeds_tried,
        target,
        runs,
        converged,
        certified,
        sigma_min_stats,
        checks,
    })
}

// ---------------------------------------------------------------- spectrum

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub grid: usize,
    pub trivial: bool,
    pub spectrum: SpectrumReport,
    /// Kernel dimension of the continuum operator at the trivial point.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected_kernel: Option<usize>,
    pub checks: Vec<Check>,
}

/// Harmonic forms on the torus: Λ⁰, Λ¹, Λ²⁺ with `b = 1, 4, 3`, times `dim su(2)`.
pub const HARMONIC_KERNEL: usize = 3 * (1 + 4 + 3);

/// Dense spectrum at the trivial point, or at a sampled pack and configuration.
pub fn spectrum_run(
    grid: Grid,
    seed: u64,
    band: usize,
    eps: f64,
    trivial: bool,
    vectors: bool,
) -> Result<(SpectrumRun, Array2<f64>)> {
    let (m, expected_kernel) = if trivial {
        (assemble_dense(None, &Triple::zeros(grid))?, Some(HARMONIC_KERNEL))
    } else {
        let pack = sample_pack(&grid, seed, band, eps)?;
        let cfg = sample_config(&grid, seed, band)?;
        (assemble_dense(Some(&pack), &cfg)?, None)
    };
    let spectrum = svd_spectrum(&m, vectors)?;
    let mut checks = vec![Check::equals("index_discrete", spectrum.index_discrete as f64, 0.0)];
    if let Some(k) = expected_kernel {
        checks.push(Check::equals("dim_kernel", spectrum.dim_kernel as f64, k as f64));
        checks.push(Check::equals("dim_cokernel", spectrum.dim_cokernel as f64, k as f64));
    }
    Ok((
        SpectrumRun {
            grid: grid.n(),
            trivial,
            spectrum,
            expected_kernel,
            checks,
        },
        m,
    ))
}
