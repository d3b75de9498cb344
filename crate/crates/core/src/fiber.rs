//! Pointwise exterior algebra of R^4 and su(2).
//!
//! Forms are stored in the lexicographic basis of an oriented orthonormal
//! coframe `e1..e4`. Basis blades are bitmasks with bit `i` standing for
//! `e^{i+1}`. Lie algebra elements are coordinates in `eta1, eta2, eta3`
//! with `[eta1, eta2] = 2 eta3` (cyclic) and the dot product as metric.

use crate::error::{Result, VwError};
use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Number of basis blades per degree.
pub const FORM_DIMS: [usize; 5] = [1, 4, 6, 4, 1];

/// Relative singular value threshold for the rank of a coefficient matrix.
pub const RANK_EPS: f64 = 1e-10;

const BASES: [&[u8]; 5] = [
    &[0b0000],
    &[0b0001, 0b0010, 0b0100, 0b1000],
    &[0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100],
    &[0b0111, 0b1011, 0b1101, 0b1110],
    &[0b1111],
];

/// Blade bitmask at position `idx` of the degree-`degree` basis.
pub fn blade(degree: usize, idx: usize) -> u8 {
    BASES[degree][idx]
}

/// Position of a blade inside its degree's basis.
pub fn blade_index(mask: u8) -> usize {
    let d = mask.count_ones() as usize;
    BASES[d]
        .iter()
        .position(|&m| m == mask)
        .expect("mask is a 4-bit blade")
}

/// Sign of `e^I ∧ e^J` relative to `e^{I ∪ J}`; zero when the blades overlap.
pub fn wedge_sign(i: u8, j: u8) -> f64 {
    if i & j != 0 {
        return 0.0;
    }
    let mut swaps = 0;
    for b in 0..4 {
        if (j >> b) & 1 == 1 {
            swaps += (i >> (b + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `ι_{e_k} e^I` as `(sign, remaining blade)`, or `None` when `k ∉ I`.
pub fn interior_blade(k: usize, mask: u8) -> Option<(f64, u8)> {
    if (mask >> k) & 1 == 0 {
        return None;
    }
    let before = (mask & ((1u8 << k) - 1)).count_ones();
    let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, mask ^ (1u8 << k)))
}

/// A real form of fixed degree at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberForm {
    degree: usize,
    coeffs: [f64; 6],
}

impl FiberForm {
    pub fn zero(degree: usize) -> Result<Self> {
        if degree > 4 {
            return Err(VwError::InvalidDegree(degree));
        }
        Ok(FiberForm {
            degree,
            coeffs: [0.0; 6],
        })
    }

    pub fn new(degree: usize, coeffs: &[f64]) -> Result<Self> {
        let mut f = Self::zero(degree)?;
        if coeffs.len() != FORM_DIMS[degree] {
            return Err(VwError::WrongLength {
                expected: FORM_DIMS[degree],
                got: coeffs.len(),
            });
        }
        f.coeffs[..coeffs.len()].copy_from_slice(coeffs);
        Ok(f)
    }

    /// The basis blade `idx` of `degree`.
    pub fn basis(degree: usize, idx: usize) -> Self {
        let mut f = Self::zero(degree).expect("valid degree");
        f.coeffs[idx] = 1.0;
        f
    }

    /// `e^{i1} ∧ ... ∧ e^{ip}` from 1-based indices in any order.
    pub fn e(indices: &[usize]) -> Self {
        let mut mask = 0u8;
        let mut sign = 1.0;
        for &i in indices {
            assert!((1..=4).contains(&i), "coframe index out of range");
            let bit = 1u8 << (i - 1);
            sign *= wedge_sign(mask, bit);
            mask |= bit;
        }
        let mut f = Self::basis(indices.len(), blade_index(mask));
        f.coeffs[blade_index(mask)] = sign;
        f
    }

    pub fn scalar(x: f64) -> Self {
        Self::new(0, &[x]).expect("degree 0")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        FORM_DIMS[self.degree]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.dim()]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        let d = self.dim();
        &mut self.coeffs[..d]
    }

    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs().iter().zip(other.coeffs()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Push forward along a linear map `g` of the coframe, acting on 1-form
    /// coordinates as `v ↦ g v`.
    pub fn transform(&self, g: &Matrix4<f64>) -> Self {
        let images: Vec<FiberForm> = (0..4)
            .map(|i| FiberForm::new(1, g.column(i).as_slice()).expect("1-form"))
            .collect();
        let mut out = FiberForm::zero(self.degree).expect("valid");
        for (idx, &c) in self.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mask = blade(self.degree, idx);
            let mut acc = FiberForm::scalar(1.0);
            for (i, img) in images.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    acc = wedge(&acc, img).expect("degree fits");
                }
            }
            out += acc * c;
        }
        out
    }
}

impl Add for FiberForm {
    type Output = FiberForm;
    fn add(mut self, rhs: FiberForm) -> FiberForm {
        self += rhs;
        self
    }
}

impl AddAssign for FiberForm {
    fn add_assign(&mut self, rhs: FiberForm) {
        assert_eq!(self.degree, rhs.degree, "degree mismatch in sum");
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
    }
}

impl Sub for FiberForm {
    type Output = FiberForm;
    fn sub(self, rhs: FiberForm) -> FiberForm {
        self + (-rhs)
    }
}

impl Neg for FiberForm {
    type Output = FiberForm;
    fn neg(self) -> FiberForm {
        self * -1.0
    }
}

impl Mul<f64> for FiberForm {
    type Output = FiberForm;
    fn mul(mut self, s: f64) -> FiberForm {
        for a in self.coeffs.iter_mut() {
            *a *= s;
        }
        self
    }
}

/// `omega_i` for `i` in 1..=3: `e12+e34`, `e13+e42`, `e14+e23`.
pub fn omega(i: usize) -> FiberForm {
    match i {
        1 => FiberForm::e(&[1, 2]) + FiberForm::e(&[3, 4]),
        2 => FiberForm::e(&[1, 3]) + FiberForm::e(&[4, 2]),
        3 => FiberForm::e(&[1, 4]) + FiberForm::e(&[2, 3]),
        _ => panic!("omega index must be 1, 2 or 3"),
    }
}

pub fn wedge(a: &FiberForm, b: &FiberForm) -> Result<FiberForm> {
    let (p, q) = (a.degree, b.degree);
    if p + q > 4 {
        return Err(VwError::DegreeOverflow(p, q));
    }
    let mut out = FiberForm::zero(p + q)?;
    for (i, &x) in a.coeffs().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let mi = blade(p, i);
        for (j, &y) in b.coeffs().iter().enumerate() {
            let mj = blade(q, j);
            let s = wedge_sign(mi, mj);
            if s != 0.0 {
                out.coeffs[blade_index(mi | mj)] += s * x * y;
            }
        }
    }
    Ok(out)
}

/// Interior product with the `k`-th frame vector (0-based).
pub fn interior(k: usize, a: &FiberForm) -> Result<FiberForm> {
    if a.degree == 0 {
        return Err(VwError::ContractionDegree(0, 1));
    }
    let mut out = FiberForm::zero(a.degree - 1)?;
    for (i, &x) in a.coeffs().iter().enumerate() {
        if let Some((s, m)) = interior_blade(k, blade(a.degree, i)) {
            out.coeffs[blade_index(m)] += s * x;
        }
    }
    Ok(out)
}

/// `α⋅β = (−1)^{p−1} Σ_i (ι_{e_i} α) ∧ (ι_{e_i} β)`.
pub fn contract_dot(a: &FiberForm, b: &FiberForm) -> Result<FiberForm> {
    let (p, q) = (a.degree, b.degree);
    if p == 0 || q == 0 {
        return Err(VwError::ContractionDegree(p, q));
    }
    if p + q - 2 > 4 {
        return Err(VwError::DegreeOverflow(p - 1, q - 1));
    }
    let mut out = FiberForm::zero(p + q - 2)?;
    for k in 0..4 {
        out += wedge(&interior(k, a)?, &interior(k, b)?)?;
    }
    let sign = if (p - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(out * sign)
}

pub fn hodge_star(a: &FiberForm) -> FiberForm {
    let p = a.degree;
    let mut out = FiberForm::zero(4 - p).expect("valid");
    for (i, &x) in a.coeffs().iter().enumerate() {
        let m = blade(p, i);
        let c = !m & 0b1111;
        out.coeffs[blade_index(c)] += wedge_sign(m, c) * x;
    }
    out
}

fn require_degree(a: &FiberForm, d: usize) -> Result<()> {
    if a.degree != d {
        return Err(VwError::WrongDegree {
            expected: d,
            got: a.degree,
        });
    }
    Ok(())
}

/// `½(1 + *)` on 2-forms.
pub fn selfdual_project(a: &FiberForm) -> Result<FiberForm> {
    require_degree(a, 2)?;
    Ok((*a + hodge_star(a)) * 0.5)
}

/// Coordinates of the self-dual part of `a` in the `omega` basis.
pub fn selfdual_coords(a: &FiberForm) -> Result<[f64; 3]> {
    require_degree(a, 2)?;
    let f = a.coeffs();
    Ok([
        0.5 * (f[0] + f[5]),
        0.5 * (f[1] - f[4]),
        0.5 * (f[2] + f[3]),
    ])
}

/// `Σ c_i omega_i`.
pub fn from_selfdual_coords(c: [f64; 3]) -> FiberForm {
    FiberForm::new(2, &[c[0], c[1], c[2], c[2], -c[1], c[0]]).expect("2-form")
}

pub fn is_selfdual(a: &FiberForm, tol: f64) -> bool {
    if a.degree != 2 {
        return false;
    }
    let p = selfdual_project(a).expect("degree 2");
    (*a - p).max_abs() <= tol * a.max_abs().max(1.0)
}

/// Matrix of a coframe map on the `omega` basis of self-dual forms.
pub fn selfdual_action(g: &Matrix4<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        let c = selfdual_coords(&omega(j + 1).transform(g)).expect("degree 2");
        for i in 0..3 {
            m[(i, j)] = c[i];
        }
    }
    m
}

/// An element of su(2) in the `eta` basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Su2(pub [f64; 3]);

impl Su2 {
    pub fn zero() -> Self {
        Su2([0.0; 3])
    }

    /// `eta_k` for `k` in 1..=3.
    pub fn eta(k: usize) -> Self {
        let mut v = [0.0; 3];
        v[k - 1] = 1.0;
        Su2(v)
    }

    pub fn norm(&self) -> f64 {
        lie_inner(self, self).sqrt()
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Su2([v[0], v[1], v[2]])
    }
}

impl Add for Su2 {
    type Output = Su2;
    fn add(self, r: Su2) -> Su2 {
        Su2([self.0[0] + r.0[0], self.0[1] + r.0[1], self.0[2] + r.0[2]])
    }
}

impl Sub for Su2 {
    type Output = Su2;
    fn sub(self, r: Su2) -> Su2 {
        self + (-r)
    }
}

impl Neg for Su2 {
    type Output = Su2;
    fn neg(self) -> Su2 {
        self * -1.0
    }
}

impl Mul<f64> for Su2 {
    type Output = Su2;
    fn mul(self, s: f64) -> Su2 {
        Su2([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// `[x, y] = 2 x × y` in the `eta` basis.
#[inline]
pub fn bracket3(x: &[f64], y: &[f64]) -> [f64; 3] {
    [
        2.0 * (x[1] * y[2] - x[2] * y[1]),
        2.0 * (x[2] * y[0] - x[0] * y[2]),
        2.0 * (x[0] * y[1] - x[1] * y[0]),
    ]
}

pub fn lie_bracket(x: &Su2, y: &Su2) -> Su2 {
    Su2(bracket3(&x.0, &y.0))
}

pub fn lie_inner(x: &Su2, y: &Su2) -> f64 {
    x.0[0] * y.0[0] + x.0[1] * y.0[1] + x.0[2] * y.0[2]
}

/// An su(2)-valued form: rows are Lie coordinates, columns form coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Su2Form {
    degree: usize,
    coords: [[f64; 6]; 3],
}

impl Su2Form {
    pub fn zero(degree: usize) -> Result<Self> {
        if degree > 4 {
            return Err(VwError::InvalidDegree(degree));
        }
        Ok(Su2Form {
            degree,
            coords: [[0.0; 6]; 3],
        })
    }

    /// `ξ ⊗ α`.
    pub fn tensor(xi: &Su2, a: &FiberForm) -> Self {
        let mut out = Su2Form::zero(a.degree).expect("valid");
        for l in 0..3 {
            for k in 0..a.dim() {
                out.coords[l][k] = xi.0[l] * a.coeffs[k];
            }
        }
        out
    }

    /// Self-dual form `Σ m[l][i] eta_{l+1} ⊗ omega_{i+1}`.
    pub fn from_selfdual_matrix(m: &[[f64; 3]; 3]) -> Self {
        let mut out = Su2Form::zero(2).expect("valid");
        for l in 0..3 {
            out.set_row(l, &from_selfdual_coords(m[l]));
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        FORM_DIMS[self.degree]
    }

    /// Lie row `l` (0-based) as a real form.
    pub fn row(&self, l: usize) -> FiberForm {
        FiberForm::new(self.degree, &self.coords[l][..self.dim()]).expect("consistent")
    }

    pub fn set_row(&mut self, l: usize, f: &FiberForm) {
        assert_eq!(f.degree, self.degree, "degree mismatch in row");
        self.coords[l] = f.coeffs;
    }

    /// Form column `k` as a Lie element.
    pub fn column(&self, k: usize) -> Su2 {
        Su2([self.coords[0][k], self.coords[1][k], self.coords[2][k]])
    }

    pub fn set_column(&mut self, k: usize, x: &Su2) {
        for l in 0..3 {
            self.coords[l][k] = x.0[l];
        }
    }

    pub fn coords(&self) -> &[[f64; 6]; 3] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        (0..3).map(|l| self.row(l).inner(&self.row(l))).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        (0..3).fold(0.0, |m, l| m.max(self.row(l).max_abs()))
    }

    /// Apply a real linear operation to every Lie row.
    pub fn map_rows<F>(&self, f: F) -> Result<Su2Form>
    where
        F: Fn(&FiberForm) -> Result<FiberForm>,
    {
        let rows = [f(&self.row(0))?, f(&self.row(1))?, f(&self.row(2))?];
        let mut out = Su2Form::zero(rows[0].degree)?;
        for (l, r) in rows.iter().enumerate() {
            out.set_row(l, r);
        }
        Ok(out)
    }

    /// Rotate the Lie index by `r` and the coframe by `g`.
    pub fn transform(&self, r: &Matrix3<f64>, g: &Matrix4<f64>) -> Su2Form {
        let moved = self.map_rows(|f| Ok(f.transform(g))).expect("same degree");
        let mut out = Su2Form::zero(self.degree).expect("valid");
        for k in 0..self.dim() {
            let v = r * moved.column(k).to_vector();
            out.set_column(k, &Su2::from_vector(&v));
        }
        out
    }

    /// Coefficient matrix in the `eta ⊗ omega` basis.
    pub fn selfdual_matrix(&self) -> Result<Matrix3<f64>> {
        if self.degree != 2 {
            return Err(VwError::WrongDegree {
                expected: 2,
                got: self.degree,
            });
        }
        let mut m = Matrix3::zeros();
        for l in 0..3 {
            let row = self.row(l);
            if !is_selfdual(&row, 1e-12) {
                return Err(VwError::NotSelfDual);
            }
            let c = selfdual_coords(&row)?;
            for i in 0..3 {
                m[(l, i)] = c[i];
            }
        }
        Ok(m)
    }
}

impl Add for Su2Form {
    type Output = Su2Form;
    fn add(mut self, rhs: Su2Form) -> Su2Form {
        self += rhs;
        self
    }
}

impl AddAssign for Su2Form {
    fn add_assign(&mut self, rhs: Su2Form) {
        assert_eq!(self.degree, rhs.degree, "degree mismatch in sum");
        for l in 0..3 {
            for k in 0..6 {
                self.coords[l][k] += rhs.coords[l][k];
            }
        }
    }
}

impl Sub for Su2Form {
    type Output = Su2Form;
    fn sub(self, rhs: Su2Form) -> Su2Form {
        self + rhs * -1.0
    }
}

impl Neg for Su2Form {
    type Output = Su2Form;
    fn neg(self) -> Su2Form {
        self * -1.0
    }
}

impl Mul<f64> for Su2Form {
    type Output = Su2Form;
    fn mul(mut self, s: f64) -> Su2Form {
        for row in self.coords.iter_mut() {
            for a in row.iter_mut() {
                *a *= s;
            }
        }
        self
    }
}

fn bracket_product<F>(x: &Su2Form, y: &Su2Form, degree: usize, prod: F) -> Result<Su2Form>
where
    F: Fn(&FiberForm, &FiberForm) -> Result<FiberForm>,
{
    let mut out = Su2Form::zero(degree)?;
    for a in 0..3 {
        let ra = x.row(a);
        for b in 0..3 {
            if a == b {
                continue;
            }
            let p = prod(&ra, &y.row(b))?;
            let br = lie_bracket(&Su2::eta(a + 1), &Su2::eta(b + 1));
            out += Su2Form::tensor(&br, &p);
        }
    }
    Ok(out)
}

/// `[x⋅y]`: Lie bracket of coefficients, contraction product of forms.
pub fn bracket_dot(x: &Su2Form, y: &Su2Form) -> Result<Su2Form> {
    let (p, q) = (x.degree, y.degree);
    if p == 0 || q == 0 {
        return Err(VwError::ContractionDegree(p, q));
    }
    if p + q - 2 > 4 {
        return Err(VwError::DegreeOverflow(p - 1, q - 1));
    }
    bracket_product(x, y, p + q - 2, contract_dot)
}

/// `[x∧y]`: Lie bracket of coefficients, wedge of forms.
pub fn bracket_wedge(x: &Su2Form, y: &Su2Form) -> Result<Su2Form> {
    let (p, q) = (x.degree, y.degree);
    if p + q > 4 {
        return Err(VwError::DegreeOverflow(p, q));
    }
    bracket_product(x, y, p + q, wedge)
}

/// Self-dual part of `[a∧a]` for an su(2)-valued 1-form.
pub fn bracket_wedge_plus(a: &Su2Form) -> Result<Su2Form> {
    if a.degree != 1 {
        return Err(VwError::WrongDegree {
            expected: 1,
            got: a.degree,
        });
    }
    bracket_wedge(a, a)?.map_rows(selfdual_project)
}

/// `[x, ξ]` for a form `x` and a Lie element `ξ`.
pub fn bracket_element(x: &Su2Form, xi: &Su2) -> Su2Form {
    let mut out = Su2Form::zero(x.degree).expect("valid");
    for k in 0..x.dim() {
        out.set_column(k, &lie_bracket(&x.column(k), xi));
    }
    out
}

/// Count of singular values above `eps · σ_max`.
pub fn numerical_rank(singular_values: &[f64], eps: f64) -> usize {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > eps * smax).count()
}

/// Rank of a self-dual su(2)-valued 2-form.
pub fn rank(b: &Su2Form) -> Result<usize> {
    let m = b.selfdual_matrix()?;
    let sv = m.singular_values();
    Ok(numerical_rank(sv.as_slice(), RANK_EPS))
}

/// Factorization `coords(B) = Rᵀ · diag · S` with `R, S ∈ SO(3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub r: Matrix3<f64>,
    pub s: Matrix3<f64>,
    pub diag: [f64; 3],
}

impl NormalForm {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.r.transpose() * Matrix3::from_diagonal(&Vector3::from(self.diag)) * self.s
    }
}

fn sorted_svd(m: &Matrix3<f64>) -> (Matrix3<f64>, [f64; 3], Matrix3<f64>) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).expect("finite"));
    let mut uu = Matrix3::zeros();
    let mut vv = Matrix3::zeros();
    let mut d = [0.0; 3];
    for (new, &old) in order.iter().enumerate() {
        uu.set_column(new, &u.column(old));
        vv.set_column(new, &vt.row(old).transpose());
        d[new] = sv[old];
    }
    (uu, d, vv)
}

pub fn normal_form(b: &Su2Form) -> Result<NormalForm> {
    let m = b.selfdual_matrix()?;
    let (mut u, mut d, mut v) = sorted_svd(&m);
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    Ok(NormalForm {
        r: u.transpose(),
        s: v.transpose(),
        diag: d,
    })
}

/// `B = ξ ⊗ ω` with `⟨ξ, ξ⟩ = 1` and the first nonzero coordinate of `ξ`
/// positive. `B = 0` gives `(eta1, 0)`.
pub fn rank1_factor(b: &Su2Form) -> Result<(Su2, FiberForm)> {
    let r = rank(b)?;
    if r > 1 {
        return Err(VwError::RankTooLarge(r));
    }
    if r == 0 {
        return Ok((Su2::eta(1), FiberForm::zero(2)?));
    }
    let m = b.selfdual_matrix()?;
    let (u, d, v) = sorted_svd(&m);
    let mut xi = [u[(0, 0)], u[(1, 0)], u[(2, 0)]];
    let mut w = [d[0] * v[(0, 0)], d[0] * v[(1, 0)], d[0] * v[(2, 0)]];
    let lead = xi.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
    if lead < 0.0 {
        for i in 0..3 {
            xi[i] = -xi[i];
            w[i] = -w[i];
        }
    }
    Ok((Su2(xi), from_selfdual_coords(w)))
}

/// Split a 2-form in the frame `e0 := e1, (e1, e2, e3) := (e2, e3, e4)` as
/// `F = e0 ∧ a + t`, returning `a` in `e1, e2, e3` and `t` in the paired
/// basis `e2∧e3, e3∧e1, e1∧e2`.
pub fn radial_split(f: &FiberForm) -> Result<([f64; 3], [f64; 3])> {
    require_degree(f, 2)?;
    let c = f.coeffs();
    Ok(([c[0], c[1], c[2]], [c[5], -c[4], c[3]]))
}

/// Inverse of [`radial_split`].
pub fn radial_join(a: [f64; 3], t: [f64; 3]) -> FiberForm {
    FiberForm::new(2, &[a[0], a[1], a[2], t[2], -t[1], t[0]]).expect("2-form")
}

/// For self-dual `F`: `F = ½ e0∧(Σ radial_j e^j) + ½ Σ tangential_j ⋆e^j`.
pub fn radial_decompose(f: &FiberForm) -> Result<([f64; 3], [f64; 3])> {
    require_degree(f, 2)?;
    if !is_selfdual(f, 1e-12) {
        return Err(VwError::NotSelfDual);
    }
    let (a, t) = radial_split(f)?;
    Ok((a.map(|x| 2.0 * x), t.map(|x| 2.0 * x)))
}
