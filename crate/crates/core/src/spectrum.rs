//! Dense assembly and SVD of the combined operator `d1 ⊕ d0*` on small grids.
//!
//! Matrices are written in orthonormal coordinates for the weighted `L²`
//! product: self-dual components carry Gram weight 2, so `b` columns are
//! scaled by `1/√2` and `r2` rows by `√2`. The common `h⁴` factor cancels.
//! Rows and columns are ordered block (Λ¹, Λ²⁺, Λ⁰), then site, then
//! component.

use crate::error::{Result, VwError};
use crate::lattice::{Configuration, Field, FormKind, Grid, PerturbationPack, Triple};
use crate::vw::{d0, d0_star, Linearization};
use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Largest grid for dense work.
pub const MAX_DENSE_N: usize = 4;
/// Relative rank threshold.
pub const EPS_RANK: f64 = 1e-8;

fn check_n(grid: &Grid) -> Result<()> {
    if grid.n() > MAX_DENSE_N {
        return Err(VwError::InvalidConfig(format!(
            "dense assembly needs N <= {MAX_DENSE_N}, got {}",
            grid.n()
        )));
    }
    Ok(())
}

/// Offsets of the `a`, `b`, `c` blocks and the total side.
fn blocks(grid: &Grid) -> [usize; 4] {
    let s = grid.sites();
    [0, 12 * s, 21 * s, 24 * s]
}

/// Orthonormal basis vector `j` as a tangent triple.
fn basis_tangent(grid: Grid, j: usize) -> Triple {
    let [_, ob, oc, _] = blocks(&grid);
    let mut t = Triple::zeros(grid);
    if j < ob {
        t.a.data_mut()[j] = 1.0;
    } else if j < oc {
        t.b.data_mut()[j - ob] = 1.0 / SQRT_2;
    } else {
        t.c.data_mut()[j - oc] = 1.0;
    }
    t
}

/// Orthonormal coordinates of a codomain triple `(r1, r2, s)`.
fn coords(r1: &Field, r2: &Field, s: &Field) -> Vec<f64> {
    let mut v = Vec::with_capacity(r1.data().len() + r2.data().len() + s.data().len());
    v.extend_from_slice(r1.data());
    v.extend(r2.data().iter().map(|x| SQRT_2 * x));
    v.extend_from_slice(s.data());
    v
}

/// Matrix of `t ↦ (d1 t, d0*(cfg) t)`; `pack = None` is the unperturbed map.
pub fn assemble_dense(pack: Option<&PerturbationPack>, cfg: &Configuration) -> Result<Array2<f64>> {
    let grid = cfg.grid();
    check_n(&grid)?;
    let lin = Linearization::new(pack, cfg)?;
    let side = blocks(&grid)[3];
    let cols: Vec<Vec<f64>> = (0..side)
        .into_par_iter()
        .map(|j| {
            let t = basis_tangent(grid, j);
            let r = lin.apply(&t)?;
            Ok(coords(&r.r1, &r.r2, &d0_star(cfg, &t)?))
        })
        .collect::<Result<_>>()?;
    let mut m = Array2::zeros((side, side));
    for (j, col) in cols.iter().enumerate() {
        m.column_mut(j).assign(&Array1::from_vec(col.clone()));
    }
    Ok(m)
}

/// Matrix of `d0(cfg)` from scalar fields to tangent triples, same coordinates.
pub fn assemble_d0(cfg: &Configuration) -> Result<Array2<f64>> {
    let grid = cfg.grid();
    check_n(&grid)?;
    let rows = blocks(&grid)[3];
    let cols = 3 * grid.sites();
    let mut m = Array2::zeros((rows, cols));
    for j in 0..cols {
        let mut xi = Field::zeros(grid, FormKind::Form(0));
        xi.data_mut()[j] = 1.0;
        let t = d0(cfg, &xi)?;
        let v = coords(&t.a, &t.b, &t.c);
        m.column_mut(j).assign(&Array1::from_vec(v));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub dim_kernel: usize,
    pub dim_cokernel: usize,
    pub index_discrete: i64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub eps_rank: f64,
    /// Left singular vectors for the zero singular values, when requested.
    #[serde(skip)]
    pub cokernel: Option<Array2<f64>>,
}

/// Some OpenBLAS builds pick a broken kernel on AVX-512 machines and return
/// wrong singular values without reporting an error. `Σσ² = ‖M‖²_F` catches it.
fn check_frobenius(m: &Array2<f64>, sv: &[f64]) -> Result<()> {
    let f: f64 = m.iter().map(|x| x * x).sum();
    let s: f64 = sv.iter().map(|x| x * x).sum();
    if (f - s).abs() > 1e-8 * f.max(f64::MIN_POSITIVE) || !s.is_finite() {
        return Err(VwError::LinAlg(format!(
            "LAPACK returned inconsistent singular values (sum of squares {s:.6e} vs {f:.6e}); \
             try OPENBLAS_CORETYPE=Haswell"
        )));
    }
    Ok(())
}

/// Full SVD of a square matrix. Left singular vectors are only computed when
/// `vectors` is set.
pub fn svd_spectrum(m: &Array2<f64>, vectors: bool) -> Result<SpectrumReport> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(VwError::ShapeMismatch(format!("matrix is {rows}x{cols}, not square")));
    }
    let job = if vectors { JobSvd::All } else { JobSvd::None };
    let (u, s, _) = m.svddc(job).map_err(|e| VwError::LinAlg(e.to_string()))?;
    let sv = s.to_vec();
    check_frobenius(m, &sv)?;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    let zero = sv.iter().filter(|&&x| x < EPS_RANK * sigma_max).count();
    // square: the kernel and cokernel have the same dimension
    let cokernel = u.map(|u| {
        let first = rows - zero;
        u.select(Axis(1), &(first..rows).collect::<Vec<_>>())
    });
    Ok(SpectrumReport {
        singular_values: sv,
        dim_kernel: zero,
        dim_cokernel: zero,
        index_discrete: 0,
        sigma_min,
        sigma_max,
        eps_rank: EPS_RANK,
        cokernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{d_cov, d_cov_plus, d_cov_star, sample_pack};
    use crate::vw::d1;

    fn flat(t: &Triple) -> Vec<f64> {
        let mut v = t.a.data().to_vec();
        v.extend(t.b.data().iter().map(|x| SQRT_2 * x));
        v.extend_from_slice(t.c.data());
        v
    }

    #[test]
    fn guard_on_grid_size() {
        let g = Grid::with_n(5).unwrap();
        assert!(assemble_dense(None, &Triple::zeros(g)).is_err());
        assert!(assemble_d0(&Triple::zeros(g)).is_err());
    }

    #[test]
    fn columns_are_operator_applications() {
        let g = Grid::with_n(3).unwrap();
        let pack = sample_pack(&g, 2, 0, 0.2).unwrap();
        let cfg = crate::solver::random_tangent(g, 2, 0).unwrap();
        let m = assemble_dense(Some(&pack), &cfg).unwrap();
        let t = crate::solver::random_tangent(g, 2, 1).unwrap();
        let got = m.dot(&Array1::from_vec(flat(&t)));
        let r = d1(&pack, &cfg, &t).unwrap();
        let want = coords(&r.r1, &r.r2, &d0_star(&cfg, &t).unwrap());
        let scale = want.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12 * scale);
        }
        // single basis column
        let j = blocks(&g)[1] + 7;
        let r = d1(&pack, &cfg, &basis_tangent(g, j)).unwrap();
        let col = coords(&r.r1, &r.r2, &d0_star(&cfg, &basis_tangent(g, j)).unwrap());
        for (i, y) in col.iter().enumerate() {
            assert!((m[(i, j)] - y).abs() < 1e-14);
        }
    }

    #[test]
    fn gauge_block_is_transpose_of_d0() {
        let g = Grid::with_n(3).unwrap();
        let cfg = crate::solver::random_tangent(g, 4, 0).unwrap();
        let m = assemble_dense(None, &cfg).unwrap();
        let d = assemble_d0(&cfg).unwrap();
        let oc = blocks(&g)[2];
        let block = m.slice(ndarray::s![oc.., ..]);
        let diff = (&block - &d.t()).mapv(f64::abs).fold(0.0f64, |a, &x| a.max(x));
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn trivial_block_form() {
        let g = Grid::with_n(3).unwrap();
        let z = Triple::zeros(g);
        let m = assemble_dense(None, &z).unwrap();
        let [_, ob, oc, side] = blocks(&g);
        let a0 = &z.a;
        // (0 d* d; d⁺ 0 0; d* 0 0) column by column
        for j in 0..side {
            let t = basis_tangent(g, j);
            let r1 = d_cov_star(a0, &t.b).unwrap().add(&d_cov(a0, &t.c).unwrap()).unwrap();
            let r2 = d_cov_plus(a0, &t.a).unwrap();
            let s = d_cov_star(a0, &t.a).unwrap();
            let want = coords(&r1, &r2, &s);
            for (i, y) in want.iter().enumerate() {
                assert!((m[(i, j)] - y).abs() < 1e-14);
            }
        }
        assert!(m.slice(ndarray::s![..ob, ..ob]).iter().all(|&x| x == 0.0));
        assert!(m.slice(ndarray::s![ob..oc, ob..]).iter().all(|&x| x == 0.0));
        assert!(m.slice(ndarray::s![oc.., ob..]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn trivial_spectrum_has_harmonic_kernel() {
        let g = Grid::with_n(3).unwrap();
        let m = assemble_dense(None, &Triple::zeros(g)).unwrap();
        let rep = svd_spectrum(&m, true).unwrap();
        assert_eq!(rep.dim_kernel, 24);
        assert_eq!(rep.dim_cokernel, 24);
        assert_eq!(rep.index_discrete, 0);
        assert_eq!(rep.singular_values.len(), 24 * 81);
        let u = rep.cokernel.as_ref().unwrap();
        assert_eq!(u.dim(), (24 * 81, 24));
        // the cokernel is annihilated by the transpose
        let r = m.t().dot(u).mapv(f64::abs).fold(0.0f64, |a, &x| a.max(x));
        assert!(r < 1e-10 * rep.sigma_max, "{r}");
        let json = serde_json::to_string(&rep).unwrap();
        assert!(!json.contains("cokernel\":["));
        let back: SpectrumReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.dim_kernel, 24);
        assert!(back.cokernel.is_none());
    }

    #[test]
    fn lapack_agrees_with_nalgebra() {
        let n = 400;
        let m = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 13) % 17) as f64 - 8.0);
        let rep = svd_spectrum(&m, false).unwrap();
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
        let mut t = na.singular_values().as_slice().to_vec();
        t.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in rep.singular_values.iter().zip(&t) {
            assert!((a - b).abs() < 1e-9 * t[0]);
        }
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(svd_spectrum(&Array2::zeros((3, 2)), false).is_err());
    }
}
