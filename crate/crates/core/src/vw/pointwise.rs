//! Per-site algebra of the equations, on flat coordinate slices.
//!
//! Layouts match [`crate::lattice::Field`]: a Lie-valued form stores
//! `3 k + l` for form coordinate `k` and Lie coordinate `l`; self-dual forms
//! use the `omega` coordinates.

use crate::fiber::{bracket3, contract_dot, from_selfdual_coords, omega, selfdual_coords, wedge, FiberForm};
use crate::lattice::{PerturbationPack, ID3};
use std::sync::LazyLock;

/// `omega_k ⋅ e^mu` as 1-form coefficients, indexed `[k][mu][nu]`.
pub(crate) static DOT_SD_1: LazyLock<[[[f64; 4]; 4]; 3]> = LazyLock::new(|| {
    std::array::from_fn(|k| {
        std::array::from_fn(|mu| {
            let p = contract_dot(&omega(k + 1), &FiberForm::basis(1, mu)).expect("2 . 1");
            std::array::from_fn(|nu| p.coeffs()[nu])
        })
    })
});

/// `omega_i ⋅ omega_j` in `omega` coordinates, indexed `[i][j][k]`.
pub(crate) static DOT_SD_SD: LazyLock<[[[f64; 3]; 3]; 3]> = LazyLock::new(|| {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let p = contract_dot(&omega(i + 1), &omega(j + 1)).expect("2 . 2");
            let c = selfdual_coords(&p).expect("2-form");
            debug_assert!((from_selfdual_coords(c) - p).max_abs() < 1e-15);
            c
        })
    })
});

/// Self-dual part of `e^mu ∧ e^nu` in `omega` coordinates.
pub(crate) static WEDGE_PLUS: LazyLock<[[[f64; 3]; 4]; 4]> = LazyLock::new(|| {
    std::array::from_fn(|mu| {
        std::array::from_fn(|nu| {
            let w = wedge(&FiberForm::basis(1, mu), &FiberForm::basis(1, nu)).expect("1 ^ 1");
            selfdual_coords(&w).expect("2-form")
        })
    })
});

#[inline]
fn lie(v: &[f64], k: usize) -> &[f64] {
    &v[3 * k..3 * k + 3]
}

/// `[x ⋅ a]` for self-dual `x` and a 1-form `a`.
pub(crate) fn bdot_sd_1(x: &[f64], a: &[f64]) -> [f64; 12] {
    let t = &*DOT_SD_1;
    let mut out = [0.0; 12];
    for k in 0..3 {
        for mu in 0..4 {
            let br = bracket3(lie(x, k), lie(a, mu));
            for nu in 0..4 {
                let s = t[k][mu][nu];
                if s != 0.0 {
                    for l in 0..3 {
                        out[3 * nu + l] += s * br[l];
                    }
                }
            }
        }
    }
    out
}

/// `x ⋅ θ` for self-dual Lie-valued `x` and a real 1-form `θ`.
pub(crate) fn dot_sd_real(x: &[f64], theta: &[f64; 4]) -> [f64; 12] {
    let t = &*DOT_SD_1;
    let mut out = [0.0; 12];
    for k in 0..3 {
        for mu in 0..4 {
            for nu in 0..4 {
                let s = t[k][mu][nu] * theta[mu];
                if s != 0.0 {
                    for l in 0..3 {
                        out[3 * nu + l] += s * x[3 * k + l];
                    }
                }
            }
        }
    }
    out
}

/// `[x ⋅ y]` for two self-dual forms.
pub(crate) fn bdot_sd_sd(x: &[f64], y: &[f64]) -> [f64; 9] {
    let t = &*DOT_SD_SD;
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let br = bracket3(lie(x, i), lie(y, j));
            for k in 0..3 {
                let s = t[i][j][k];
                if s != 0.0 {
                    for l in 0..3 {
                        out[3 * k + l] += s * br[l];
                    }
                }
            }
        }
    }
    out
}

/// `[a ∧ b]⁺` for two 1-forms.
pub(crate) fn bwedge_plus(a: &[f64], b: &[f64]) -> [f64; 9] {
    let t = &*WEDGE_PLUS;
    let mut out = [0.0; 9];
    for mu in 0..4 {
        for nu in 0..4 {
            if mu == nu {
                continue;
            }
            let br = bracket3(lie(a, mu), lie(b, nu));
            for k in 0..3 {
                let s = t[mu][nu][k];
                if s != 0.0 {
                    for l in 0..3 {
                        out[3 * k + l] += s * br[l];
                    }
                }
            }
        }
    }
    out
}

/// `[x_k, c]` on every form coordinate of `x`.
pub(crate) fn bracket_each<const N: usize>(x: &[f64], c: &[f64]) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N / 3 {
        out[3 * k..3 * k + 3].copy_from_slice(&bracket3(lie(x, k), c));
    }
    out
}

/// `[c, x_k]` on every form coordinate of `x`.
pub(crate) fn bracket_each_left<const N: usize>(c: &[f64], x: &[f64]) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N / 3 {
        out[3 * k..3 * k + 3].copy_from_slice(&bracket3(c, lie(x, k)));
    }
    out
}

/// `c ⊗ r` for a Lie element `c` and real form coordinates `r`.
pub(crate) fn outer<const N: usize>(c: &[f64], r: &[f64]) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N / 3 {
        for l in 0..3 {
            out[3 * k + l] = c[l] * r[k];
        }
    }
    out
}

/// Matrix `m` (row-major `d × d`) acting on the form index.
pub(crate) fn act<const D: usize, const N: usize>(m: &[f64], v: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..D {
        for j in 0..D {
            let s = m[D * i + j];
            if s != 0.0 {
                for l in 0..3 {
                    out[3 * i + l] += s * v[3 * j + l];
                }
            }
        }
    }
    out
}

#[inline]
pub(crate) fn add<const N: usize>(a: [f64; N], b: [f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub(crate) fn scale<const N: usize>(s: f64, a: [f64; N]) -> [f64; N] {
    a.map(|x| s * x)
}

/// Perturbation parameters at one site.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SiteCoeffs {
    pub tau1: [f64; 16],
    pub tau2: [f64; 9],
    pub tau3: [f64; 9],
    pub theta: [f64; 4],
    pub gamma: [f64; 3],
}

/// Coefficients of the unperturbed map: only `½[B, C]` survives.
pub(crate) const UNPERTURBED: SiteCoeffs = SiteCoeffs {
    tau1: [0.0; 16],
    tau2: ID3,
    tau3: [0.0; 9],
    theta: [0.0; 4],
    gamma: [0.0; 3],
};

pub(crate) fn site_coeffs(pack: Option<&PerturbationPack>, x: usize) -> SiteCoeffs {
    match pack {
        None => UNPERTURBED,
        Some(p) => SiteCoeffs {
            tau1: p.tau1[x],
            tau2: p.tau2[x],
            tau3: p.tau3[x],
            theta: p.theta[x],
            gamma: p.gamma[x],
        },
    }
}

/// Zeroth-order terms of the map at one site (no connection).
pub(crate) fn algebraic(k: &SiteCoeffs, b: &[f64], c: &[f64]) -> ([f64; 12], [f64; 9]) {
    let bc: [f64; 9] = bracket_each(b, c);
    let v = add(dot_sd_real(&add(b.try_into().unwrap(), bc), &k.theta), outer(c, &k.theta));
    let r1 = act::<4, 12>(&k.tau1, &v);
    let r2 = add(
        add(scale(0.125, bdot_sd_sd(b, b)), scale(0.5, act::<3, 9>(&k.tau2, &bc))),
        add(act::<3, 9>(&k.tau3, &b.try_into().unwrap()), outer(c, &k.gamma)),
    );
    (r1, r2)
}

/// Zeroth-order part of the linearization at `(B, C)` applied to `(a, b, c)`.
pub(crate) fn linear(
    k: &SiteCoeffs,
    bb: &[f64],
    cc: &[f64],
    a: &[f64],
    b: &[f64],
    c: &[f64],
) -> ([f64; 12], [f64; 9]) {
    let bc: [f64; 9] = bracket_each(b, cc);
    let bcc: [f64; 9] = bracket_each(bb, c);
    let b9: [f64; 9] = b.try_into().unwrap();
    let v = add(dot_sd_real(&add(add(b9, bc), bcc), &k.theta), outer(c, &k.theta));
    let r1 = add(
        add(scale(-1.0, bdot_sd_1(bb, a)), scale(-1.0, bracket_each_left(cc, a))),
        act::<4, 12>(&k.tau1, &v),
    );
    let r2 = add(
        add(scale(0.25, bdot_sd_sd(b, bb)), scale(0.5, act::<3, 9>(&k.tau2, &add(bc, bcc)))),
        add(act::<3, 9>(&k.tau3, &b9), outer(c, &k.gamma)),
    );
    (r1, r2)
}

/// The quadratic form `{t, t}` at one site.
pub(crate) fn quadratic(k: &SiteCoeffs, a: &[f64], b: &[f64], c: &[f64]) -> ([f64; 12], [f64; 9]) {
    let bc: [f64; 9] = bracket_each(b, c);
    let r1 = add(
        add(scale(-1.0, bdot_sd_1(b, a)), bracket_each(a, c)),
        act::<4, 12>(&k.tau1, &dot_sd_real(&bc, &k.theta)),
    );
    let r2 = add(
        add(scale(0.5, bwedge_plus(a, a)), scale(0.125, bdot_sd_sd(b, b))),
        scale(0.5, act::<3, 9>(&k.tau2, &bc)),
    );
    (r1, r2)
}

/// Derivative of [`algebraic`] along a pack direction `d`.
pub(crate) fn pack_derivative(k: &SiteCoeffs, d: &SiteCoeffs, b: &[f64], c: &[f64]) -> ([f64; 12], [f64; 9]) {
    let bc: [f64; 9] = bracket_each(b, c);
    let bpbc = add(b.try_into().unwrap(), bc);
    let v = add(dot_sd_real(&bpbc, &k.theta), outer(c, &k.theta));
    let dv = add(dot_sd_real(&bpbc, &d.theta), outer(c, &d.theta));
    let r1 = add(act::<4, 12>(&d.tau1, &v), act::<4, 12>(&k.tau1, &dv));
    let r2 = add(
        add(scale(0.5, act::<3, 9>(&d.tau2, &bc)), act::<3, 9>(&d.tau3, &b.try_into().unwrap())),
        outer(c, &d.gamma),
    );
    (r1, r2)
}
