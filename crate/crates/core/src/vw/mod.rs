//! The Vafa-Witten map on the lattice torus, its perturbed form, and the
//! deformation complex `d0`, `d1`, `d0*` around a configuration.

mod pointwise;

use crate::error::{Result, VwError};
use crate::lattice::{
    ad_field, curvature_plus, d_cov, d_cov_plus, d_cov_star, gauge_apply, Configuration, Field,
    FormKind, GaugeField, Grid, PerturbationPack, TangentTriple, Triple, ID3, PACK_MIN_SV,
};
use crate::rng::{self, tag};
use nalgebra::{Matrix3, Matrix4, Matrix4x3};
use pointwise::{site_coeffs, SiteCoeffs};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Value of the two equations: a Lie-valued 1-form and a self-dual 2-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VwResidual {
    pub r1: Field,
    pub r2: Field,
}

impl VwResidual {
    pub fn new(r1: Field, r2: Field) -> Result<Self> {
        r1.grid().same_as(&r2.grid())?;
        if r1.kind() != FormKind::Form(1) || r2.kind() != FormKind::SelfDual {
            return Err(VwError::ShapeMismatch(format!(
                "residual kinds {:?}, {:?}",
                r1.kind(),
                r2.kind()
            )));
        }
        Ok(VwResidual { r1, r2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        VwResidual {
            r1: Field::zeros(grid, FormKind::Form(1)),
            r2: Field::zeros(grid, FormKind::SelfDual),
        }
    }

    pub fn grid(&self) -> Grid {
        self.r1.grid()
    }

    pub fn axpy(&mut self, s: f64, x: &VwResidual) -> Result<()> {
        self.r1.axpy(s, &x.r1)?;
        self.r2.axpy(s, &x.r2)
    }

    pub fn sub(&self, x: &VwResidual) -> Result<VwResidual> {
        let mut out = self.clone();
        out.axpy(-1.0, x)?;
        Ok(out)
    }

    pub fn add(&self, x: &VwResidual) -> Result<VwResidual> {
        let mut out = self.clone();
        out.axpy(1.0, x)?;
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> VwResidual {
        VwResidual {
            r1: self.r1.scaled(s),
            r2: self.r2.scaled(s),
        }
    }

    pub fn l2_inner(&self, x: &VwResidual) -> Result<f64> {
        Ok(crate::lattice::l2_inner(&self.r1, &x.r1)? + crate::lattice::l2_inner(&self.r2, &x.r2)?)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same shape").sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.r1.max_abs().max(self.r2.max_abs())
    }

    /// Pointwise `[ξ, r]` on both components.
    pub fn bracket_with(&self, xi: &Field) -> Result<VwResidual> {
        VwResidual::new(self.r1.bracket_with(xi)?, self.r2.bracket_with(xi)?)
    }
}

fn check_pack(pack: &PerturbationPack, grid: &Grid) -> Result<()> {
    pack.grid().same_as(grid)
}

/// Build a residual from per-site pointwise values plus derivative terms.
fn pointwise_residual<F>(grid: Grid, f: F) -> (Field, Field)
where
    F: Fn(usize) -> ([f64; 12], [f64; 9]) + Sync + Send,
{
    let vals: Vec<([f64; 12], [f64; 9])> = (0..grid.sites()).into_par_iter().map(f).collect();
    let r1 = Field::from_fn(grid, FormKind::Form(1), |x, o| o.copy_from_slice(&vals[x].0));
    let r2 = Field::from_fn(grid, FormKind::SelfDual, |x, o| o.copy_from_slice(&vals[x].1));
    (r1, r2)
}

fn map_with(pack: Option<&PerturbationPack>, cfg: &Configuration) -> Result<VwResidual> {
    let grid = cfg.grid();
    if let Some(p) = pack {
        check_pack(p, &grid)?;
    }
    let (mut r1, mut r2) = pointwise_residual(grid, |x| {
        pointwise::algebraic(&site_coeffs(pack, x), cfg.b.at(x), cfg.c.at(x))
    });
    r1.axpy(1.0, &d_cov_star(&cfg.a, &cfg.b)?)?;
    r1.axpy(1.0, &d_cov(&cfg.a, &cfg.c)?)?;
    r2.axpy(1.0, &curvature_plus(&cfg.a)?)?;
    VwResidual::new(r1, r2)
}

/// `(d_A^*B + d_A C, F_A⁺ + ⅛[B⋅B] + ½[B, C])`.
pub fn vw(cfg: &Configuration) -> Result<VwResidual> {
    map_with(None, cfg)
}

/// `vw` at `C = 0`.
pub fn vw_reduced(a: &Field, b: &Field) -> Result<VwResidual> {
    let c = Field::zeros(a.grid(), FormKind::Form(0));
    vw(&Triple::new(a.clone(), b.clone(), c)?)
}

/// The perturbed map
/// `(d_A^*B + d_A C + τ¹((B + [B,C])⋅θ + C⊗θ), F_A⁺ + ⅛[B⋅B] + ½τ²[B,C] + τ³B + C⊗γ)`.
pub fn vw_perturbed(pack: &PerturbationPack, cfg: &Configuration) -> Result<VwResidual> {
    map_with(Some(pack), cfg)
}

/// Infinitesimal gauge action `(d_A ξ, [B, ξ], [C, ξ])`.
pub fn d0(cfg: &Configuration, xi: &Field) -> Result<TangentTriple> {
    Triple::new(
        d_cov(&cfg.a, xi)?,
        cfg.b.bracket_with(xi)?.scaled(-1.0),
        cfg.c.bracket_with(xi)?.scaled(-1.0),
    )
}

/// `d_A^*a + [b·B] + [c, C]`, the inner product `b·B` carrying the
/// `omega` Gram weight 2.
pub fn d0_star(cfg: &Configuration, t: &TangentTriple) -> Result<Field> {
    cfg.grid().same_as(&t.grid())?;
    let mut out = d_cov_star(&cfg.a, &t.a)?;
    let alg = Field::from_fn(cfg.grid(), FormKind::Form(0), |x, o| {
        let (b, bb) = (t.b.at(x), cfg.b.at(x));
        let mut v = crate::fiber::bracket3(t.c.at(x), cfg.c.at(x));
        for k in 0..3 {
            let br = crate::fiber::bracket3(&b[3 * k..3 * k + 3], &bb[3 * k..3 * k + 3]);
            for l in 0..3 {
                v[l] += 2.0 * br[l];
            }
        }
        o.copy_from_slice(&v);
    });
    out.axpy(1.0, &alg)?;
    Ok(out)
}

/// Adjoint of [`d0`] built by transposing its per-site Jacobian in the
/// weighted inner product; independent of the formula in [`d0_star`].
pub fn d0_star_transpose(cfg: &Configuration, t: &TangentTriple) -> Result<Field> {
    cfg.grid().same_as(&t.grid())?;
    let mut out = d_cov_star(&cfg.a, &t.a)?;
    let alg = Field::from_fn(cfg.grid(), FormKind::Form(0), |x, o| {
        let (bb, cc) = (cfg.b.at(x), cfg.c.at(x));
        let (b, c) = (t.b.at(x), t.c.at(x));
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            let col_b: [f64; 9] = pointwise::bracket_each(bb, &e);
            let col_c = crate::fiber::bracket3(cc, &e);
            let mut s = 0.0;
            for i in 0..9 {
                s += FormKind::SelfDual.gram() * col_b[i] * b[i];
            }
            for i in 0..3 {
                s += col_c[i] * c[i];
            }
            o[j] = s;
        }
    });
    out.axpy(1.0, &alg)?;
    Ok(out)
}

/// The linearization `d1` at `cfg`, applied to `t`:
/// `(d_A^*b + d_A c − [B⋅a] − [C,a] + τ¹((b + [b,C] + [B,c])⋅θ + c⊗θ),
///   d_A⁺a + ¼[b⋅B] + ½τ²([b,C] + [B,c]) + τ³b + c⊗γ)`.
pub fn d1(pack: &PerturbationPack, cfg: &Configuration, t: &TangentTriple) -> Result<VwResidual> {
    d1_with(Some(pack), cfg, t)
}

/// `d1` of the unperturbed map.
pub fn d1_unperturbed(cfg: &Configuration, t: &TangentTriple) -> Result<VwResidual> {
    d1_with(None, cfg, t)
}

fn d1_with(pack: Option<&PerturbationPack>, cfg: &Configuration, t: &TangentTriple) -> Result<VwResidual> {
    let grid = cfg.grid();
    grid.same_as(&t.grid())?;
    if let Some(p) = pack {
        check_pack(p, &grid)?;
    }
    let (mut r1, mut r2) = pointwise_residual(grid, |x| {
        pointwise::linear(
            &site_coeffs(pack, x),
            cfg.b.at(x),
            cfg.c.at(x),
            t.a.at(x),
            t.b.at(x),
            t.c.at(x),
        )
    });
    r1.axpy(1.0, &d_cov_star(&cfg.a, &t.b)?)?;
    r1.axpy(1.0, &d_cov(&cfg.a, &t.c)?)?;
    r2.axpy(1.0, &d_cov_plus(&cfg.a, &t.a)?)?;
    VwResidual::new(r1, r2)
}

/// `{t, t} = (−[a⋅b] + [a,c] + τ¹([b,c]⋅θ), ½[a∧a]⁺ + ⅛[b⋅b] + ½τ²[b,c])`.
pub fn quadratic_term(pack: &PerturbationPack, t: &TangentTriple) -> Result<VwResidual> {
    let grid = t.grid();
    check_pack(pack, &grid)?;
    let (r1, r2) = pointwise_residual(grid, |x| {
        pointwise::quadratic(&site_coeffs(Some(pack), x), t.a.at(x), t.b.at(x), t.c.at(x))
    });
    VwResidual::new(r1, r2)
}

/// Relative defect of `vw(x + t) = vw(x) + d1 t + {t, t}`.
pub fn expansion_check(pack: &PerturbationPack, cfg: &Configuration, t: &TangentTriple) -> Result<f64> {
    let moved = vw_perturbed(pack, &cfg.add(t)?)?;
    let base = vw_perturbed(pack, cfg)?;
    let lin = d1(pack, cfg, t)?;
    let quad = quadratic_term(pack, t)?;
    let mut defect = moved.clone();
    defect.axpy(-1.0, &base)?;
    defect.axpy(-1.0, &lin)?;
    defect.axpy(-1.0, &quad)?;
    let scale = [&moved, &base, &lin, &quad]
        .iter()
        .map(|r| r.l2_norm())
        .fold(f64::MIN_POSITIVE, f64::max);
    Ok(defect.l2_norm() / scale)
}

/// `‖d1(d0 ξ) − ([r1, ξ], [r2, ξ])‖` with `(r1, r2)` the perturbed map at `cfg`.
///
/// With `d0 ξ = (d_A ξ, [B, ξ], [C, ξ])` the orbit derivative of the map is
/// `[r, ξ] = −[ξ, r]`.
pub fn complex_check(pack: &PerturbationPack, cfg: &Configuration, xi: &Field) -> Result<f64> {
    let lhs = d1(pack, cfg, &d0(cfg, xi)?)?;
    let rhs = vw_perturbed(pack, cfg)?.bracket_with(xi)?;
    Ok(lhs.add(&rhs)?.l2_norm())
}

/// `‖vw(ζ·cfg) − ad_{ζ⁻¹} vw(cfg)‖`; the unperturbed map when `pack` is `None`.
/// Packs are not transformed: the gauge group acts trivially on them.
pub fn gauge_equivariance_check(
    pack: Option<&PerturbationPack>,
    cfg: &Configuration,
    zeta: &GaugeField,
) -> Result<f64> {
    let moved = map_with(pack, &gauge_apply(zeta, cfg)?)?;
    let base = map_with(pack, cfg)?;
    let rotated = VwResidual::new(ad_field(zeta, &base.r1)?, ad_field(zeta, &base.r2)?)?;
    Ok(moved.sub(&rotated)?.l2_norm())
}

/// Derivative of the perturbed map along a pack direction `dpack`.
pub fn d_vw_pack(pack: &PerturbationPack, cfg: &Configuration, dpack: &PerturbationPack) -> Result<VwResidual> {
    let grid = cfg.grid();
    check_pack(pack, &grid)?;
    check_pack(dpack, &grid)?;
    let (r1, r2) = pointwise_residual(grid, |x| {
        pointwise::pack_derivative(
            &site_coeffs(Some(pack), x),
            &site_coeffs(Some(dpack), x),
            cfg.b.at(x),
            cfg.c.at(x),
        )
    });
    VwResidual::new(r1, r2)
}

/// Rows of the per-site zeroth-order Jacobian: 12 + 9.
const ROWS: usize = 21;
/// Columns: the 24 reals of a tangent triple at one site.
const COLS: usize = 24;
/// Above this many sites the per-site matrices are rebuilt on every use.
const CACHE_SITES: usize = 16 * 16 * 16 * 16;

fn weight_in(j: usize) -> f64 {
    if (12..21).contains(&j) {
        2.0
    } else {
        1.0
    }
}

fn weight_out(i: usize) -> f64 {
    if i >= 12 {
        2.0
    } else {
        1.0
    }
}

/// `d1` at a fixed configuration, with its adjoint in the weighted `L²`
/// inner product. The zeroth-order part is held as a dense 21×24 matrix per
/// site; the connection terms go through the difference operators.
pub struct Linearization<'a> {
    cfg: &'a Configuration,
    pack: Option<&'a PerturbationPack>,
    cache: Option<Vec<[f64; ROWS * COLS]>>,
}

impl<'a> Linearization<'a> {
    pub fn new(pack: Option<&'a PerturbationPack>, cfg: &'a Configuration) -> Result<Self> {
        if let Some(p) = pack {
            check_pack(p, &cfg.grid())?;
        }
        let mut lin = Linearization {
            cfg,
            pack,
            cache: None,
        };
        if cfg.grid().sites() <= CACHE_SITES {
            lin.cache = Some((0..cfg.grid().sites()).into_par_iter().map(|x| lin.build(x)).collect());
        }
        Ok(lin)
    }

    pub fn grid(&self) -> Grid {
        self.cfg.grid()
    }

    fn build(&self, x: usize) -> [f64; ROWS * COLS] {
        let k = site_coeffs(self.pack, x);
        let (bb, cc) = (self.cfg.b.at(x), self.cfg.c.at(x));
        let mut m = [0.0; ROWS * COLS];
        for j in 0..COLS {
            let mut e = [0.0; COLS];
            e[j] = 1.0;
            let (r1, r2) = pointwise::linear(&k, bb, cc, &e[..12], &e[12..21], &e[21..]);
            for i in 0..12 {
                m[i * COLS + j] = r1[i];
            }
            for i in 0..9 {
                m[(12 + i) * COLS + j] = r2[i];
            }
        }
        m
    }

    fn with_matrix<T>(&self, x: usize, f: impl FnOnce(&[f64; ROWS * COLS]) -> T) -> T {
        match &self.cache {
            Some(c) => f(&c[x]),
            None => f(&self.build(x)),
        }
    }

    /// Per-site zeroth-order matrix, row-major.
    pub fn site_matrix(&self, x: usize) -> Vec<f64> {
        self.with_matrix(x, |m| m.to_vec())
    }

    pub fn apply(&self, t: &TangentTriple) -> Result<VwResidual> {
        let grid = self.grid();
        grid.same_as(&t.grid())?;
        let (mut r1, mut r2) = pointwise_residual(grid, |x| {
            let mut v = [0.0; COLS];
            v[..12].copy_from_slice(t.a.at(x));
            v[12..21].copy_from_slice(t.b.at(x));
            v[21..].copy_from_slice(t.c.at(x));
            self.with_matrix(x, |m| {
                let mut o1 = [0.0; 12];
                let mut o2 = [0.0; 9];
                for i in 0..ROWS {
                    let row = &m[i * COLS..(i + 1) * COLS];
                    let s: f64 = row.iter().zip(&v).map(|(p, q)| p * q).sum();
                    if i < 12 {
                        o1[i] = s;
                    } else {
                        o2[i - 12] = s;
                    }
                }
                (o1, o2)
            })
        });
        let a = &self.cfg.a;
        r1.axpy(1.0, &d_cov_star(a, &t.b)?)?;
        r1.axpy(1.0, &d_cov(a, &t.c)?)?;
        r2.axpy(1.0, &d_cov_plus(a, &t.a)?)?;
        VwResidual::new(r1, r2)
    }

    /// Adjoint of [`Linearization::apply`].
    pub fn adjoint(&self, r: &VwResidual) -> Result<TangentTriple> {
        let grid = self.grid();
        grid.same_as(&r.grid())?;
        let vals: Vec<[f64; COLS]> = (0..grid.sites())
            .into_par_iter()
            .map(|x| {
                let mut w = [0.0; ROWS];
                w[..12].copy_from_slice(r.r1.at(x));
                w[12..].copy_from_slice(r.r2.at(x));
                for (i, v) in w.iter_mut().enumerate() {
                    *v *= weight_out(i);
                }
                self.with_matrix(x, |m| {
                    let mut o = [0.0; COLS];
                    for i in 0..ROWS {
                        if w[i] == 0.0 {
                            continue;
                        }
                        let row = &m[i * COLS..(i + 1) * COLS];
                        for j in 0..COLS {
                            o[j] += row[j] * w[i];
                        }
                    }
                    for (j, v) in o.iter_mut().enumerate() {
                        *v /= weight_in(j);
                    }
                    o
                })
            })
            .collect();
        let a = &self.cfg.a;
        let mut ta = d_cov_star(a, &r.r2)?;
        let mut tb = d_cov_plus(a, &r.r1)?;
        let mut tc = d_cov_star(a, &r.r1)?;
        let add = |f: &mut Field, lo: usize, hi: usize| {
            f.data_mut()
                .par_chunks_mut(hi - lo)
                .enumerate()
                .for_each(|(x, o)| {
                    for (p, q) in o.iter_mut().zip(&vals[x][lo..hi]) {
                        *p += q;
                    }
                });
        };
        add(&mut ta, 0, 12);
        add(&mut tb, 12, 21);
        add(&mut tc, 21, 24);
        Triple::new(ta, tb, tc)
    }
}

/// A constant configuration with a constant pack solving the perturbed
/// equations exactly, with `A`, `C` nonzero and `B` of rank 3.
///
/// `B`, `C`, `A`, `τ²`, `γ` and a direction for `θ` are drawn at random; `τ¹`
/// is solved from the first equation and `τ³` from the second. Draws whose
/// `τ¹` or `τ³` would violate the pack bound are rejected.
pub fn constant_solution(grid: Grid, seed: u64) -> Result<(PerturbationPack, Configuration)> {
    let mut rng = rng::stream(seed, &[tag::MANUFACTURED]);
    let probe = Grid::new(3, grid.length())?;
    for _ in 0..1000 {
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (a, b, c) = (draw(12), draw(9), draw(3));
        let theta0: Vec<f64> = draw(4);
        let tau2: Vec<f64> = draw(9).iter().zip(ID3).map(|(e, i)| i + 0.3 * e).collect();
        let gamma = draw(3);

        let bm = Matrix3::from_fn(|j, l| b[3 * j + l]);
        if bm.singular_values().min() < 0.2 {
            continue;
        }
        let cfg = Configuration::constant(probe, &a, &b, &c)?;

        // first equation: w + τ¹ v = 0 with v linear in θ
        let theta: [f64; 4] = theta0[..].try_into().unwrap();
        let k = SiteCoeffs {
            tau1: crate::lattice::ID4,
            tau2: tau2[..].try_into().unwrap(),
            tau3: [0.0; 9],
            theta,
            gamma: gamma[..].try_into().unwrap(),
        };
        let (v, _) = pointwise::algebraic(&k, &b, &c);
        let w = vw(&cfg)?.r1.at(0).to_vec();
        let vm = Matrix4x3::from_fn(|nu, l| v[3 * nu + l]);
        let wm = Matrix4x3::from_fn(|nu, l| w[3 * nu + l]);
        let svd = vm.svd(true, true);
        if svd.singular_values.min() < 1e-3 {
            continue;
        }
        let pinv = match vm.pseudo_inverse(1e-12) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let t0: Matrix4<f64> = -wm * pinv;
        // θ ↦ sθ scales v by s and t0 by 1/s
        let s = t0.norm() / 2.0;
        if !(s.is_finite() && s > 0.0) {
            continue;
        }
        let t0 = t0 / s;
        let theta = theta.map(|x| x * s);
        let proj: Matrix4<f64> = vm * pinv;
        let tau1: Matrix4<f64> = t0 + (Matrix4::identity() - proj);
        if tau1.singular_values().min() < PACK_MIN_SV {
            continue;
        }

        // second equation: rest + τ³ b = 0
        let mut tau1_rows = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                tau1_rows[4 * i + j] = tau1[(i, j)];
            }
        }
        let g3: [f64; 3] = gamma[..].try_into().unwrap();
        let partial =
            PerturbationPack::constant(probe, tau1_rows, k.tau2, [0.0; 9], theta, g3);
        let res = vw_perturbed(&partial, &cfg)?;
        if res.r1.max_abs() > 1e-10 * (1.0 + wm.norm()) {
            continue;
        }
        let rm = Matrix3::from_fn(|kk, l| res.r2.at(0)[3 * kk + l]);
        let inv = match bm.try_inverse() {
            Some(i) => i,
            None => continue,
        };
        let tau3: Matrix3<f64> = -rm * inv;
        let sv = tau3.singular_values();
        if sv.min() < PACK_MIN_SV || sv.max() > 50.0 {
            continue;
        }
        let mut tau3_rows = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                tau3_rows[3 * i + j] = tau3[(i, j)];
            }
        }
        let pack = PerturbationPack::constant(grid, tau1_rows, k.tau2, tau3_rows, theta, g3);
        let cfg = Configuration::constant(grid, &a, &b, &c)?;
        return Ok((pack, cfg));
    }
    Err(VwError::Precondition("no admissible constant solution in 1000 draws".into()))
}
