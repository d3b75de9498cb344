//! su(2)-valued forms on a periodic lattice 4-torus.

mod ops;
mod sample;
mod snapshot;

pub use ops::{
    ad_field, curvature_plus, d_cov, d_cov_plus, d_cov_star, gauge_apply, l2_inner, stencil_table,
    Stencil,
};
pub use sample::{
    band_modes, sample_config, sample_config_scaled, sample_gauge, sample_gauge_scaled, sample_pack,
    sample_scalar, sample_tangent, trig_field,
};
pub use snapshot::{read_field, read_matrix, write_field, write_matrix, SnapshotMeta, MATRIX_DEGREE};

use crate::error::{Result, VwError};
use crate::fiber::FORM_DIMS;
use serde::{Deserialize, Serialize};

/// Periodic grid with `n` sites per axis and period `length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 3 {
            return Err(VwError::InvalidConfig(format!("grid needs N >= 3, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(VwError::InvalidConfig(format!("period must be positive, got {length}")));
        }
        Ok(Grid { n, length })
    }

    /// Grid with the default period `2π`.
    pub fn with_n(n: usize) -> Result<Self> {
        Self::new(n, std::f64::consts::TAU)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn sites(&self) -> usize {
        self.n.pow(4)
    }

    /// Site index stride of axis `mu`.
    #[inline]
    pub fn stride(&self, mu: usize) -> usize {
        self.n.pow(3 - mu as u32)
    }

    #[inline]
    pub fn coord(&self, site: usize, mu: usize) -> usize {
        (site / self.stride(mu)) % self.n
    }

    pub fn coords(&self, site: usize) -> [usize; 4] {
        [0, 1, 2, 3].map(|mu| self.coord(site, mu))
    }

    pub fn site(&self, x: [usize; 4]) -> usize {
        ((x[0] * self.n + x[1]) * self.n + x[2]) * self.n + x[3]
    }

    #[inline]
    pub fn plus(&self, site: usize, mu: usize) -> usize {
        let s = self.stride(mu);
        if self.coord(site, mu) == self.n - 1 {
            site + s - self.n * s
        } else {
            site + s
        }
    }

    #[inline]
    pub fn minus(&self, site: usize, mu: usize) -> usize {
        let s = self.stride(mu);
        if self.coord(site, mu) == 0 {
            site + self.n * s - s
        } else {
            site - s
        }
    }

    /// Physical position of a site.
    pub fn position(&self, site: usize) -> [f64; 4] {
        self.coords(site).map(|c| c as f64 * self.h())
    }

    /// Volume element `h⁴`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(4)
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(VwError::ShapeMismatch(format!(
                "grids differ: N={} L={} vs N={} L={}",
                self.n, self.length, other.n, other.length
            )));
        }
        Ok(())
    }
}

/// Form bundle of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormKind {
    /// All `p`-forms, in the lexicographic basis.
    Form(usize),
    /// Self-dual 2-forms in the `omega` basis.
    SelfDual,
}

impl FormKind {
    pub fn form_dim(self) -> usize {
        match self {
            FormKind::Form(p) => FORM_DIMS[p],
            FormKind::SelfDual => 3,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            FormKind::Form(p) => p,
            FormKind::SelfDual => 2,
        }
    }

    /// Squared norm of a single basis element.
    pub fn gram(self) -> f64 {
        match self {
            FormKind::Form(_) => 1.0,
            FormKind::SelfDual => 2.0,
        }
    }

    /// Reals per site including the three Lie components.
    pub fn comps(self) -> usize {
        3 * self.form_dim()
    }
}

/// An su(2)-valued form field. Per site the values are stored form-major,
/// Lie-minor: index `3 k + l` for form coordinate `k`, Lie coordinate `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid,
    kind: FormKind,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, kind: FormKind) -> Self {
        Field {
            grid,
            kind,
            data: vec![0.0; grid.sites() * kind.comps()],
        }
    }

    pub fn from_data(grid: Grid, kind: FormKind, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.sites() * kind.comps() {
            return Err(VwError::ShapeMismatch(format!(
                "{} values for {} sites of {:?}",
                data.len(),
                grid.sites(),
                kind
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(VwError::InvalidConfig("field has non-finite entries".into()));
        }
        Ok(Field { grid, kind, data })
    }

    /// Field whose value at each site is `f(site)`.
    pub fn from_fn<F>(grid: Grid, kind: FormKind, f: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        use rayon::prelude::*;
        let mut out = Field::zeros(grid, kind);
        let c = kind.comps();
        out.data
            .par_chunks_mut(c)
            .enumerate()
            .for_each(|(site, v)| f(site, v));
        out
    }

    /// Same constant value at every site.
    pub fn constant(grid: Grid, kind: FormKind, value: &[f64]) -> Result<Self> {
        if value.len() != kind.comps() {
            return Err(VwError::ShapeMismatch(format!(
                "constant of length {} for {:?}",
                value.len(),
                kind
            )));
        }
        Ok(Field::from_fn(grid, kind, |_, v| v.copy_from_slice(value)))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn comps(&self) -> usize {
        self.kind.comps()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, site: usize) -> &[f64] {
        let c = self.comps();
        &self.data[site * c..(site + 1) * c]
    }

    #[inline]
    pub fn at_mut(&mut self, site: usize) -> &mut [f64] {
        let c = self.comps();
        &mut self.data[site * c..(site + 1) * c]
    }

    /// Lie element at form coordinate `k` of `site`.
    #[inline]
    pub fn su2(&self, site: usize, k: usize) -> [f64; 3] {
        let v = self.at(site);
        [v[3 * k], v[3 * k + 1], v[3 * k + 2]]
    }

    pub fn same_shape(&self, other: &Field) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        if self.kind != other.kind {
            return Err(VwError::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.kind, other.kind
            )));
        }
        Ok(())
    }

    /// `self += s · x`.
    pub fn axpy(&mut self, s: f64, x: &Field) -> Result<()> {
        self.same_shape(x)?;
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn add(&self, x: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(1.0, x)?;
        Ok(out)
    }

    pub fn sub(&self, x: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(-1.0, x)?;
        Ok(out)
    }

    pub fn zeros_like(&self) -> Field {
        Field::zeros(self.grid, self.kind)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        l2_inner(self, self).expect("same shape").sqrt()
    }

    /// Self-dual field as a full 2-form field.
    pub fn to_full(&self) -> Field {
        match self.kind {
            FormKind::Form(_) => self.clone(),
            FormKind::SelfDual => Field::from_fn(self.grid, FormKind::Form(2), |site, out| {
                let v = self.at(site);
                for l in 0..3 {
                    let (c1, c2, c3) = (v[l], v[3 + l], v[6 + l]);
                    out[l] = c1;
                    out[3 + l] = c2;
                    out[6 + l] = c3;
                    out[9 + l] = c3;
                    out[12 + l] = -c2;
                    out[15 + l] = c1;
                }
            }),
        }
    }

    /// Self-dual part of a 2-form field, in `omega` coordinates.
    pub fn selfdual_part(&self) -> Result<Field> {
        match self.kind {
            FormKind::SelfDual => Ok(self.clone()),
            FormKind::Form(2) => Ok(Field::from_fn(self.grid, FormKind::SelfDual, |site, out| {
                let v = self.at(site);
                for l in 0..3 {
                    out[l] = 0.5 * (v[l] + v[15 + l]);
                    out[3 + l] = 0.5 * (v[3 + l] - v[12 + l]);
                    out[6 + l] = 0.5 * (v[6 + l] + v[9 + l]);
                }
            })),
            FormKind::Form(p) => Err(VwError::WrongDegree {
                expected: 2,
                got: p,
            }),
        }
    }

    /// Pointwise `[ξ, self]` for a 0-form field `ξ`.
    pub fn bracket_with(&self, xi: &Field) -> Result<Field> {
        self.grid.same_as(&xi.grid)?;
        if xi.kind != FormKind::Form(0) {
            return Err(VwError::ShapeMismatch("bracket partner must be a 0-form".into()));
        }
        let dim = self.kind.form_dim();
        Ok(Field::from_fn(self.grid, self.kind, |site, out| {
            let x = xi.at(site);
            let v = self.at(site);
            for k in 0..dim {
                let b = crate::fiber::bracket3(x, &v[3 * k..3 * k + 3]);
                out[3 * k..3 * k + 3].copy_from_slice(&b);
            }
        }))
    }
}

/// The triple `(a, b, c)` of a 1-form, a self-dual 2-form and a 0-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub a: Field,
    pub b: Field,
    pub c: Field,
}

/// A configuration `(A, B, C)`.
pub type Configuration = Triple;
/// A tangent vector `(a, b, c)` to configuration space.
pub type TangentTriple = Triple;

/// Reals per site in a triple: 12 + 9 + 3.
pub const TRIPLE_COMPS: usize = 24;

impl Triple {
    pub fn new(a: Field, b: Field, c: Field) -> Result<Self> {
        a.grid.same_as(&b.grid)?;
        a.grid.same_as(&c.grid)?;
        let kinds = (a.kind, b.kind, c.kind);
        if kinds != (FormKind::Form(1), FormKind::SelfDual, FormKind::Form(0)) {
            return Err(VwError::ShapeMismatch(format!("triple kinds {kinds:?}")));
        }
        Ok(Triple { a, b, c })
    }

    pub fn zeros(grid: Grid) -> Self {
        Triple {
            a: Field::zeros(grid, FormKind::Form(1)),
            b: Field::zeros(grid, FormKind::SelfDual),
            c: Field::zeros(grid, FormKind::Form(0)),
        }
    }

    /// Constant triple from per-site values.
    pub fn constant(grid: Grid, a: &[f64], b: &[f64], c: &[f64]) -> Result<Self> {
        Triple::new(
            Field::constant(grid, FormKind::Form(1), a)?,
            Field::constant(grid, FormKind::SelfDual, b)?,
            Field::constant(grid, FormKind::Form(0), c)?,
        )
    }

    pub fn grid(&self) -> Grid {
        self.a.grid
    }

    pub fn axpy(&mut self, s: f64, x: &Triple) -> Result<()> {
        self.a.axpy(s, &x.a)?;
        self.b.axpy(s, &x.b)?;
        self.c.axpy(s, &x.c)
    }

    pub fn scaled(&self, s: f64) -> Triple {
        Triple {
            a: self.a.scaled(s),
            b: self.b.scaled(s),
            c: self.c.scaled(s),
        }
    }

    pub fn add(&self, x: &Triple) -> Result<Triple> {
        let mut out = self.clone();
        out.axpy(1.0, x)?;
        Ok(out)
    }

    pub fn sub(&self, x: &Triple) -> Result<Triple> {
        let mut out = self.clone();
        out.axpy(-1.0, x)?;
        Ok(out)
    }

    pub fn l2_inner(&self, x: &Triple) -> Result<f64> {
        Ok(l2_inner(&self.a, &x.a)? + l2_inner(&self.b, &x.b)? + l2_inner(&self.c, &x.c)?)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same shape").sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.max_abs().max(self.b.max_abs()).max(self.c.max_abs())
    }

    /// Pointwise `[ξ, ·]` on every slot.
    pub fn bracket_with(&self, xi: &Field) -> Result<Triple> {
        Ok(Triple {
            a: self.a.bracket_with(xi)?,
            b: self.b.bracket_with(xi)?,
            c: self.c.bracket_with(xi)?,
        })
    }
}

/// Per-site unit quaternions `(w, x, y, z)`; `eta1, eta2, eta3 ↔ i, j, k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    grid: Grid,
    q: Vec<[f64; 4]>,
}

impl GaugeField {
    pub fn new(grid: Grid, q: Vec<[f64; 4]>) -> Result<Self> {
        if q.len() != grid.sites() {
            return Err(VwError::ShapeMismatch("one quaternion per site".into()));
        }
        for x in &q {
            let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(VwError::InvalidConfig(format!("gauge quaternion has norm {n}")));
            }
        }
        Ok(GaugeField { grid, q })
    }

    pub fn identity(grid: Grid) -> Self {
        GaugeField {
            grid,
            q: vec![[1.0, 0.0, 0.0, 0.0]; grid.sites()],
        }
    }

    pub fn constant(grid: Grid, q: [f64; 4]) -> Result<Self> {
        GaugeField::new(grid, vec![q; grid.sites()])
    }

    /// `exp` of an su(2) 0-form, using `eta_k ↔` pure quaternions.
    pub fn exp(phi: &Field) -> Result<Self> {
        if phi.kind != FormKind::Form(0) {
            return Err(VwError::ShapeMismatch("exponent must be a 0-form".into()));
        }
        let q = (0..phi.grid.sites())
            .map(|s| quat_exp(phi.su2(s, 0)))
            .collect();
        GaugeField::new(phi.grid, q)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn at(&self, site: usize) -> [f64; 4] {
        self.q[site]
    }
}

pub fn quat_exp(v: [f64; 3]) -> [f64; 4] {
    let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if t == 0.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let s = t.sin() / t;
    [t.cos(), s * v[0], s * v[1], s * v[2]]
}

#[inline]
pub fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

#[inline]
pub fn quat_conj(a: [f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// `q̄ v q` for a pure quaternion `v`.
#[inline]
pub fn ad_inv(q: [f64; 4], v: &[f64]) -> [f64; 3] {
    let p = quat_mul(quat_mul(quat_conj(q), [0.0, v[0], v[1], v[2]]), q);
    [p[1], p[2], p[3]]
}

/// Perturbation parameters: `τ¹` (4×4 on 1-form coordinates), `τ²`, `τ³`
/// (3×3 on `omega` coordinates), a real 1-form `θ` and a real self-dual
/// form `γ`. Matrices are row-major and act on coordinate columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPack {
    grid: Grid,
    pub tau1: Vec<[f64; 16]>,
    pub tau2: Vec<[f64; 9]>,
    pub tau3: Vec<[f64; 9]>,
    pub theta: Vec<[f64; 4]>,
    pub gamma: Vec<[f64; 3]>,
}

pub const ID4: [f64; 16] = [
    1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
];
pub const ID3: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

/// Smallest singular value accepted for pack matrices.
pub const PACK_MIN_SV: f64 = 0.25;

impl PerturbationPack {
    /// `τ¹ = τ² = I`, `τ³ = 0`, `θ = 0`, `γ = 0`: the unperturbed equations.
    pub fn trivial(grid: Grid) -> Self {
        Self::constant(grid, ID4, ID3, [0.0; 9], [0.0; 4], [0.0; 3])
    }

    pub fn constant(
        grid: Grid,
        tau1: [f64; 16],
        tau2: [f64; 9],
        tau3: [f64; 9],
        theta: [f64; 4],
        gamma: [f64; 3],
    ) -> Self {
        let n = grid.sites();
        PerturbationPack {
            grid,
            tau1: vec![tau1; n],
            tau2: vec![tau2; n],
            tau3: vec![tau3; n],
            theta: vec![theta; n],
            gamma: vec![gamma; n],
        }
    }

    /// All-zero pack, used as a direction in parameter space.
    pub fn zero_direction(grid: Grid) -> Self {
        Self::constant(grid, [0.0; 16], [0.0; 9], [0.0; 9], [0.0; 4], [0.0; 3])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `self += s · d`.
    pub fn axpy(&mut self, s: f64, d: &PerturbationPack) -> Result<()> {
        self.grid.same_as(&d.grid)?;
        fn go<const K: usize>(a: &mut [[f64; K]], b: &[[f64; K]], s: f64) {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..K {
                    x[k] += s * y[k];
                }
            }
        }
        go(&mut self.tau1, &d.tau1, s);
        go(&mut self.tau2, &d.tau2, s);
        go(&mut self.tau3, &d.tau3, s);
        go(&mut self.theta, &d.theta, s);
        go(&mut self.gamma, &d.gamma, s);
        Ok(())
    }

    /// Smallest singular value of `τ¹, τ², τ³` over all sites.
    pub fn min_singular_value(&self) -> f64 {
        use nalgebra::{Matrix3, Matrix4};
        use rayon::prelude::*;
        (0..self.grid.sites())
            .into_par_iter()
            .map(|s| {
                let t1 = Matrix4::from_row_slice(&self.tau1[s]).singular_values().min();
                let t2 = Matrix3::from_row_slice(&self.tau2[s]).singular_values().min();
                let t3 = Matrix3::from_row_slice(&self.tau3[s]).singular_values().min();
                t1.min(t2).min(t3)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Check pointwise invertibility with margin `PACK_MIN_SV`.
    pub fn validate(&self) -> Result<()> {
        let m = self.min_singular_value();
        if m < PACK_MIN_SV {
            return Err(VwError::Precondition(format!(
                "pack matrix smallest singular value {m:.3e} below {PACK_MIN_SV}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
