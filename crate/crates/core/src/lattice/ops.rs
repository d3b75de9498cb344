use super::{ad_inv, quat_conj, quat_mul, Configuration, Field, FormKind, GaugeField, Triple};
use crate::error::{Result, VwError};
use crate::fiber::{blade, blade_index, bracket3, wedge_sign, FORM_DIMS};
use rayon::prelude::*;
use std::borrow::Cow;
use std::sync::LazyLock;

/// One term of the exterior derivative: `e^mu ∧ e^I = sign · e^J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub from: usize,
    pub mu: usize,
    pub to: usize,
    pub sign: f64,
}

static TABLES: LazyLock<[Vec<Stencil>; 4]> = LazyLock::new(|| {
    std::array::from_fn(|p| {
        let mut t = Vec::new();
        for from in 0..FORM_DIMS[p] {
            let m = blade(p, from);
            for mu in 0..4 {
                let bit = 1u8 << mu;
                if m & bit != 0 {
                    continue;
                }
                t.push(Stencil {
                    from,
                    mu,
                    to: blade_index(m | bit),
                    sign: wedge_sign(bit, m),
                });
            }
        }
        t
    })
});

/// Derivative stencil from degree `p` to `p + 1`.
pub fn stencil_table(p: usize) -> &'static [Stencil] {
    &TABLES[p]
}

fn require_connection(a: &Field) -> Result<()> {
    if a.kind() != FormKind::Form(1) {
        return Err(VwError::ShapeMismatch(format!(
            "connection must be a 1-form, got {:?}",
            a.kind()
        )));
    }
    Ok(())
}

fn full(s: &Field) -> Cow<'_, Field> {
    match s.kind() {
        FormKind::SelfDual => Cow::Owned(s.to_full()),
        FormKind::Form(_) => Cow::Borrowed(s),
    }
}

/// `d_A s = ds + [A ∧ s]` with centered differences.
pub fn d_cov(a: &Field, s: &Field) -> Result<Field> {
    require_connection(a)?;
    a.grid().same_as(&s.grid())?;
    let p = s.kind().degree();
    if p > 3 {
        return Err(VwError::DegreeOverflow(p, 1));
    }
    let s = full(s);
    let grid = a.grid();
    let inv2h = 0.5 / grid.h();
    let table = stencil_table(p);
    Ok(Field::from_fn(grid, FormKind::Form(p + 1), |x, out| {
        let av = a.at(x);
        let s0 = s.at(x);
        for st in table {
            let sp = s.at(grid.plus(x, st.mu));
            let sm = s.at(grid.minus(x, st.mu));
            let i = 3 * st.from;
            let br = bracket3(&av[3 * st.mu..3 * st.mu + 3], &s0[i..i + 3]);
            let o = 3 * st.to;
            for l in 0..3 {
                out[o + l] += st.sign * ((sp[i + l] - sm[i + l]) * inv2h + br[l]);
            }
        }
    }))
}

/// Exact transpose of [`d_cov`] with respect to [`l2_inner`].
pub fn d_cov_star(a: &Field, t: &Field) -> Result<Field> {
    require_connection(a)?;
    a.grid().same_as(&t.grid())?;
    let q = t.kind().degree();
    if q == 0 {
        return Err(VwError::ContractionDegree(0, 1));
    }
    let t = full(t);
    let grid = a.grid();
    let inv2h = 0.5 / grid.h();
    let table = stencil_table(q - 1);
    Ok(Field::from_fn(grid, FormKind::Form(q - 1), |x, out| {
        let av = a.at(x);
        let t0 = t.at(x);
        for st in table {
            let tp = t.at(grid.plus(x, st.mu));
            let tm = t.at(grid.minus(x, st.mu));
            let j = 3 * st.to;
            let br = bracket3(&av[3 * st.mu..3 * st.mu + 3], &t0[j..j + 3]);
            let o = 3 * st.from;
            for l in 0..3 {
                out[o + l] += st.sign * ((tm[j + l] - tp[j + l]) * inv2h - br[l]);
            }
        }
    }))
}

/// Self-dual part of `d_A a` for a 1-form `a`.
pub fn d_cov_plus(a: &Field, s: &Field) -> Result<Field> {
    if s.kind() != FormKind::Form(1) {
        return Err(VwError::ShapeMismatch("d_A^+ acts on 1-forms".into()));
    }
    d_cov(a, s)?.selfdual_part()
}

/// `F_A⁺` with `F_A = dA + ½[A ∧ A]`.
pub fn curvature_plus(a: &Field) -> Result<Field> {
    require_connection(a)?;
    let grid = a.grid();
    let inv2h = 0.5 / grid.h();
    Ok(Field::from_fn(grid, FormKind::SelfDual, |x, out| {
        let av = a.at(x);
        let mut f = [[0.0; 3]; 6];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (k, &(mu, nu)) in pairs.iter().enumerate() {
            let (ap, am) = (a.at(grid.plus(x, mu)), a.at(grid.minus(x, mu)));
            let (bp, bm) = (a.at(grid.plus(x, nu)), a.at(grid.minus(x, nu)));
            let br = bracket3(&av[3 * mu..3 * mu + 3], &av[3 * nu..3 * nu + 3]);
            for l in 0..3 {
                f[k][l] = (ap[3 * nu + l] - am[3 * nu + l]) * inv2h
                    - (bp[3 * mu + l] - bm[3 * mu + l]) * inv2h
                    + br[l];
            }
        }
        for l in 0..3 {
            out[l] = 0.5 * (f[0][l] + f[5][l]);
            out[3 + l] = 0.5 * (f[1][l] - f[4][l]);
            out[6 + l] = 0.5 * (f[2][l] + f[3][l]);
        }
    }))
}

/// `ζ·(A, B, C) = (ζ⁻¹Aζ − (dζ⁻¹)ζ, ζ⁻¹Bζ, ζ⁻¹Cζ)`, with centered `d` and
/// the scalar part of `(dζ⁻¹)ζ` discarded.
pub fn gauge_apply(z: &GaugeField, cfg: &Configuration) -> Result<Configuration> {
    let grid = cfg.grid();
    grid.same_as(&z.grid())?;
    let inv2h = 0.5 / grid.h();
    let rotate = |f: &Field| {
        let dim = f.kind().form_dim();
        Field::from_fn(grid, f.kind(), |x, out| {
            let q = z.at(x);
            let v = f.at(x);
            for k in 0..dim {
                out[3 * k..3 * k + 3].copy_from_slice(&ad_inv(q, &v[3 * k..3 * k + 3]));
            }
        })
    };
    let a = Field::from_fn(grid, FormKind::Form(1), |x, out| {
        let q = z.at(x);
        let v = cfg.a.at(x);
        for mu in 0..4 {
            let r = ad_inv(q, &v[3 * mu..3 * mu + 3]);
            let qp = quat_conj(z.at(grid.plus(x, mu)));
            let qm = quat_conj(z.at(grid.minus(x, mu)));
            let dq = [0, 1, 2, 3].map(|i| (qp[i] - qm[i]) * inv2h);
            let g = quat_mul(dq, q);
            for l in 0..3 {
                out[3 * mu + l] = r[l] - g[l + 1];
            }
        }
    });
    Triple::new(a, rotate(&cfg.b), rotate(&cfg.c))
}

/// Pointwise adjoint action of `ζ⁻¹` on every component of a field.
pub fn ad_field(z: &GaugeField, f: &Field) -> Result<Field> {
    f.grid().same_as(&z.grid())?;
    let dim = f.kind().form_dim();
    Ok(Field::from_fn(f.grid(), f.kind(), |x, out| {
        let q = z.at(x);
        let v = f.at(x);
        for k in 0..dim {
            out[3 * k..3 * k + 3].copy_from_slice(&ad_inv(q, &v[3 * k..3 * k + 3]));
        }
    }))
}

/// Fixed-size chunks keep sums independent of the worker count.
const SUM_CHUNK: usize = 1 << 12;

/// Sum of `f(i)` over `0..n` with a reduction order independent of threads.
pub(crate) fn ordered_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let parts: Vec<f64> = (0..n.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * SUM_CHUNK;
            let hi = (lo + SUM_CHUNK).min(n);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// `h⁴ Σ_sites Σ_components u · v` with the fiber Gram weights.
pub fn l2_inner(u: &Field, v: &Field) -> Result<f64> {
    u.same_shape(v)?;
    let (x, y) = (u.data(), v.data());
    let s = ordered_sum(x.len(), |i| x[i] * y[i]);
    Ok(u.grid().cell_volume() * u.kind().gram() * s)
}
