//! Newton iteration for zeros of the perturbed map in the Coulomb slice.

use crate::error::{Result, VwError};
use crate::lattice::{Configuration, Field, FormKind, Grid, PerturbationPack, TangentTriple, Triple};
use crate::rng::{self, tag};
use crate::vw::{d0, d0_star, d1, vw_perturbed, Linearization, VwResidual};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `d0*` at `cfg0` applied to `cfg − cfg0`.
pub fn coulomb_residual(cfg0: &Configuration, cfg: &Configuration) -> Result<Field> {
    cfg0.grid().same_as(&cfg.grid())?;
    d0_star(cfg0, &cfg.sub(cfg0)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub max_krylov: usize,
    /// Move the Coulomb anchor to the current iterate after every step.
    pub reanchor: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_newton: 30,
            max_krylov: 2000,
            reanchor: false,
        }
    }
}

/// Relative linear residual above which a Krylov solve counts as stagnated.
pub const KRYLOV_STAGNATION: f64 = 1e-2;
/// Upper bound of the forcing term.
pub const KRYLOV_FORCING: f64 = 1e-3;
/// Shift added to the normal equations once a tiny singular value shows up.
pub const TIKHONOV_SHIFT: f64 = 1e-10;
/// Rayleigh quotients `‖Jp‖²/‖p‖²` below this trigger the shift.
pub const TIKHONOV_TRIGGER: f64 = 1e-18;
/// `max |C| > CERTIFY · ‖cfg‖` labels a solution as the general branch.
pub const CERTIFY: f64 = 1e-6;
const MAX_HALVINGS: usize = 20;

/// Per-step diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub residual: f64,
    pub krylov_iterations: usize,
    /// `‖J δ + R‖ / ‖R‖`, recomputed after the solve.
    pub linear_residual: f64,
    pub step_length: f64,
    pub shifted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// `L²` norm of the perturbed map at `config_out`.
    pub final_residual: f64,
    /// `L²` norm of the Coulomb residual at `config_out`.
    pub gauge_residual: f64,
    pub config_out: Configuration,
    pub pack_seed: Option<u64>,
    pub steps: Vec<NewtonStep>,
    pub max_abs_c: f64,
    pub config_norm: f64,
    pub branch: Branch,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    General,
    ReducedBranch,
}

/// The JSON-facing part of a [`SolveReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub gauge_residual: f64,
    pub pack_seed: Option<u64>,
    pub max_abs_c: f64,
    pub config_norm: f64,
    pub branch: Branch,
    pub reason: String,
    pub steps: Vec<NewtonStep>,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            converged: self.converged,
            iterations: self.iterations,
            final_residual: self.final_residual,
            gauge_residual: self.gauge_residual,
            pack_seed: self.pack_seed,
            max_abs_c: self.max_abs_c,
            config_norm: self.config_norm,
            branch: self.branch,
            reason: self.reason.clone(),
            steps: self.steps.clone(),
        }
    }
}

pub fn branch_of(cfg: &Configuration) -> Branch {
    if cfg.c.max_abs() > CERTIFY * cfg.l2_norm() {
        Branch::General
    } else {
        Branch::ReducedBranch
    }
}

/// Residual of the square system: the map and the gauge condition.
struct System<'a> {
    pack: &'a PerturbationPack,
    anchor: Configuration,
}

impl System<'_> {
    fn residual(&self, x: &Configuration) -> Result<(VwResidual, Field)> {
        Ok((vw_perturbed(self.pack, x)?, coulomb_residual(&self.anchor, x)?))
    }
}

fn norm2(r: &(VwResidual, Field)) -> f64 {
    r.0.l2_norm().hypot(r.1.l2_norm())
}

struct Jacobian<'a> {
    lin: Linearization<'a>,
    anchor: &'a Configuration,
}

impl Jacobian<'_> {
    fn apply(&self, t: &TangentTriple) -> Result<(VwResidual, Field)> {
        Ok((self.lin.apply(t)?, d0_star(self.anchor, t)?))
    }

    fn adjoint(&self, r: &(VwResidual, Field)) -> Result<TangentTriple> {
        self.lin.adjoint(&r.0)?.add(&d0(self.anchor, &r.1)?)
    }
}

fn res_axpy(y: &mut (VwResidual, Field), s: f64, x: &(VwResidual, Field)) -> Result<()> {
    y.0.axpy(s, &x.0)?;
    y.1.axpy(s, &x.1)
}

struct Cgls {
    x: TangentTriple,
    iterations: usize,
    shifted: bool,
}

/// Conjugate gradients on the normal equations of `J x = b`, stopped once
/// `‖b − J x‖ ≤ rtol ‖b‖` or after `max_iter` steps.
fn cgls(j: &Jacobian<'_>, b: &(VwResidual, Field), rtol: f64, max_iter: usize) -> Result<Cgls> {
    let grid = b.0.grid();
    let bnorm = norm2(b);
    let mut x = Triple::zeros(grid);
    if bnorm == 0.0 {
        return Ok(Cgls {
            x,
            iterations: 0,
            shifted: false,
        });
    }
    let mut r = b.clone();
    let mut s = j.adjoint(&r)?;
    let mut p = s.clone();
    let mut gamma = s.l2_inner(&s)?;
    let mut shift = 0.0;
    let mut it = 0;
    let mut rnorm = bnorm;
    while it < max_iter && rnorm > rtol * bnorm && gamma > 0.0 {
        let q = j.apply(&p)?;
        let qq = q.0.l2_inner(&q.0)? + crate::lattice::l2_inner(&q.1, &q.1)?;
        let pp = p.l2_inner(&p)?;
        if shift == 0.0 && qq < TIKHONOV_TRIGGER * pp {
            shift = TIKHONOV_SHIFT;
        }
        let alpha = gamma / (qq + shift * pp);
        x.axpy(alpha, &p)?;
        res_axpy(&mut r, -alpha, &q)?;
        s = j.adjoint(&r)?;
        if shift != 0.0 {
            s.axpy(-shift, &x)?;
        }
        let g2 = s.l2_inner(&s)?;
        let beta = g2 / gamma;
        gamma = g2;
        let mut np = s.clone();
        np.axpy(beta, &p)?;
        p = np;
        rnorm = norm2(&r);
        it += 1;
    }
    Ok(Cgls {
        x,
        iterations: it,
        shifted: shift != 0.0,
    })
}

/// Newton iteration from `cfg0` with the Coulomb slice anchored at `cfg0`.
pub fn newton_solve(
    pack: &PerturbationPack,
    cfg0: &Configuration,
    opts: &SolveOptions,
    pack_seed: Option<u64>,
) -> Result<SolveReport> {
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(VwError::InvalidConfig(format!("tol must be positive, got {}", opts.tol)));
    }
    pack.grid().same_as(&cfg0.grid())?;
    let mut sys = System {
        pack,
        anchor: cfg0.clone(),
    };
    let mut x = cfg0.clone();
    let mut res = sys.residual(&x)?;
    let mut steps = Vec::new();
    let mut reason = String::from("max_newton reached");
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let (vn, gn) = (res.0.l2_norm(), res.1.l2_norm());
        let rn = norm2(&res);
        if !rn.is_finite() {
            reason = "residual is not finite".into();
            break;
        }
        if vn < opts.tol && gn < opts.tol {
            converged = true;
            reason = "residual below tol".into();
            break;
        }
        if iterations >= opts.max_newton {
            break;
        }
        let lin = Linearization::new(Some(pack), &x)?;
        let jac = Jacobian {
            lin,
            anchor: &sys.anchor,
        };
        let rhs = (res.0.scaled(-1.0), res.1.scaled(-1.0));
        let forcing = KRYLOV_FORCING.min(rn);
        let sol = cgls(&jac, &rhs, forcing, opts.max_krylov)?;
        // a posteriori check of the linear solve
        let mut lr = jac.apply(&sol.x)?;
        res_axpy(&mut lr, -1.0, &rhs)?;
        let linear_residual = norm2(&lr) / rn;
        if linear_residual > KRYLOV_STAGNATION {
            steps.push(NewtonStep {
                residual: rn,
                krylov_iterations: sol.iterations,
                linear_residual,
                step_length: 0.0,
                shifted: sol.shifted,
            });
            reason = format!("krylov stagnation: relative residual {linear_residual:.3e}");
            break;
        }
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = x.clone();
            trial.axpy(s, &sol.x)?;
            let tr = sys.residual(&trial)?;
            if norm2(&tr) < rn {
                accepted = Some((trial, tr));
                break;
            }
            s *= 0.5;
        }
        steps.push(NewtonStep {
            residual: rn,
            krylov_iterations: sol.iterations,
            linear_residual,
            step_length: if accepted.is_some() { s } else { 0.0 },
            shifted: sol.shifted,
        });
        iterations += 1;
        match accepted {
            Some((nx, nr)) => {
                x = nx;
                res = nr;
                if opts.reanchor {
                    sys.anchor = x.clone();
                    res = sys.residual(&x)?;
                }
            }
            None => {
                reason = "line search failed to reduce the residual".into();
                break;
            }
        }
    }
    let final_residual = res.0.l2_norm();
    let gauge_residual = res.1.l2_norm();
    Ok(SolveReport {
        converged,
        iterations,
        final_residual,
        gauge_residual,
        pack_seed,
        steps,
        max_abs_c: x.c.max_abs(),
        config_norm: x.l2_norm(),
        branch: branch_of(&x),
        reason,
        config_out: x,
    })
}

/// White-noise tangent triple.
pub fn random_tangent(grid: Grid, seed: u64, index: u64) -> Result<TangentTriple> {
    let mut r = rng::stream(seed, &[tag::SOLVE, 0xd1, index]);
    let mut draw = |kind: FormKind| {
        let data = (0..grid.sites() * kind.comps()).map(|_| r.gen_range(-1.0..1.0)).collect();
        Field::from_data(grid, kind, data)
    };
    Triple::new(draw(FormKind::Form(1))?, draw(FormKind::SelfDual)?, draw(FormKind::Form(0))?)
}

/// Largest relative gap between `d1` and central differences of the map
/// over `trials` random directions.
pub fn fd_jacobian_check(
    pack: &PerturbationPack,
    cfg: &Configuration,
    trials: usize,
    step: f64,
    seed: u64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..trials {
        let t = random_tangent(cfg.grid(), seed, i as u64)?;
        let lin = d1(pack, cfg, &t)?;
        let mut p = cfg.clone();
        p.axpy(step, &t)?;
        let mut m = cfg.clone();
        m.axpy(-step, &t)?;
        let fd = vw_perturbed(pack, &p)?.sub(&vw_perturbed(pack, &m)?)?.scaled(0.5 / step);
        let scale = lin.l2_norm().max(fd.l2_norm()).max(f64::MIN_POSITIVE);
        worst = worst.max(fd.sub(&lin)?.l2_norm() / scale);
    }
    Ok(worst)
}
