//! Randomized checks of the pointwise lemmas behind the transversality
//! argument, each against a brute-force assembly and a closed form.

use crate::error::{Result, VwError};
use crate::fiber::{
    bracket_element, contract_dot, from_selfdual_coords, is_selfdual, lie_bracket, numerical_rank,
    radial_decompose, radial_split, selfdual_coords, selfdual_project, FiberForm, Su2, Su2Form,
    RANK_EPS,
};
use crate::rng::{self, tag};
use nalgebra::{Matrix3, Matrix4, Quaternion, SMatrix, UnitQuaternion, Vector4};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which lemma a report covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    A1,
    A2,
    A3,
    Radial,
}

impl LemmaId {
    pub const ALL: [LemmaId; 4] = [LemmaId::A1, LemmaId::A2, LemmaId::A3, LemmaId::Radial];

    fn tag(self) -> u64 {
        match self {
            LemmaId::A1 => tag::LEMMA_A1,
            LemmaId::A2 => tag::LEMMA_A2,
            LemmaId::A3 => tag::LEMMA_A3,
            LemmaId::Radial => tag::LEMMA_RADIAL,
        }
    }

    /// Largest accepted relative error per sample.
    pub fn tolerance(self) -> f64 {
        match self {
            LemmaId::A1 => 1e-12,
            LemmaId::A2 => 1e-10,
            LemmaId::A3 => 1e-10,
            LemmaId::Radial => 1e-14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    #[serde(rename = "lemma")]
    pub lemma_id: LemmaId,
    pub samples: u64,
    pub failures: u64,
    #[serde(rename = "max_err")]
    pub max_det_relative_error: f64,
    pub seed: u64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.max_det_relative_error < 1e-10
    }
}

/// `|value − closed| / max(1, |closed|)`.
pub fn relative_error(value: f64, closed: f64) -> f64 {
    (value - closed).abs() / closed.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisCheck {
    pub det: f64,
    pub closed_form: f64,
    pub is_basis: bool,
}

/// Determinant of the matrix with columns `α, β, [α, β]`.
pub fn check_basis_lemma(a: &Su2, b: &Su2) -> BasisCheck {
    let c = lie_bracket(a, b);
    let m = Matrix3::from_columns(&[a.to_vector(), b.to_vector(), c.to_vector()]);
    let det = m.determinant();
    let (x, y) = (a.0, b.0);
    let closed_form = 2.0 * (x[1] * y[2] - x[2] * y[1]).powi(2)
        + 2.0 * (x[2] * y[0] - x[0] * y[2]).powi(2)
        + 2.0 * (x[0] * y[1] - x[1] * y[0]).powi(2);
    let pair = SMatrix::<f64, 3, 2>::from_columns(&[a.to_vector(), b.to_vector()]);
    let is_basis = numerical_rank(pair.singular_values().as_slice(), RANK_EPS) == 2;
    BasisCheck {
        det,
        closed_form,
        is_basis,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointCheck {
    pub det: f64,
    pub closed_form: f64,
    pub kernel_dim: usize,
}

/// Matrix of `ζ ↦ ζ⋅ν` on 1-forms, columns indexed by `e^k`.
pub fn dot_matrix(nu: &FiberForm) -> Result<Matrix4<f64>> {
    let mut m = Matrix4::zeros();
    for k in 0..4 {
        let img = contract_dot(&FiberForm::basis(1, k), nu)?;
        for i in 0..4 {
            m[(i, k)] = img.coeffs()[i];
        }
    }
    Ok(m)
}

fn kernel_dim4(m: &Matrix4<f64>) -> usize {
    4 - numerical_rank(m.singular_values().as_slice(), RANK_EPS)
}

/// The 4×4 system of `ζ⋅ν = ζ`, written as `(I − N) ζ = 0`.
pub fn check_fixed_point_lemma(nu: &FiberForm) -> Result<FixedPointCheck> {
    if !is_selfdual(nu, 1e-12) {
        return Err(VwError::NotSelfDual);
    }
    let k = Matrix4::identity() - dot_matrix(nu)?;
    let c = selfdual_coords(nu)?;
    let n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    Ok(FixedPointCheck {
        det: k.determinant(),
        closed_form: (1.0 + n2).powi(2),
        kernel_dim: kernel_dim4(&k),
    })
}

/// The rescaled system `ζ⋅ω = s ζ`, whose determinant is `(s² + |ω|²)²`.
pub fn check_scaled_fixed_point(omega: &FiberForm, s: f64) -> Result<FixedPointCheck> {
    if !is_selfdual(omega, 1e-12) {
        return Err(VwError::NotSelfDual);
    }
    let k = dot_matrix(omega)? - Matrix4::identity() * s;
    let c = selfdual_coords(omega)?;
    let n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    Ok(FixedPointCheck {
        det: k.determinant(),
        closed_form: (s * s + n2).powi(2),
        kernel_dim: kernel_dim4(&k),
    })
}

/// `(B + [B, C])⋅θ + C ⊗ θ` for any self-dual `B`.
pub fn rank3_map(b: &Su2Form, c: &Su2, theta: &FiberForm) -> Result<Su2Form> {
    let bb = *b + bracket_element(b, c);
    let dotted = bb.map_rows(|r| contract_dot(r, theta))?;
    Ok(dotted + Su2Form::tensor(c, theta))
}

/// The same map from the fully expanded coefficient formulas in the
/// normal-form frame. Rows are Lie components, columns `e1..e4`.
pub fn rank3_expanded(bd: [f64; 3], c: &Su2, t: &FiberForm) -> [[f64; 4]; 3] {
    let [b1, b2, b3] = bd;
    let [c1, c2, c3] = c.0;
    let th = t.coeffs();
    let (t1, t2, t3, t4) = (th[0], th[1], th[2], th[3]);
    [
        [
            b1 * t2 + 2.0 * b2 * c3 * t3 - 2.0 * b3 * c2 * t4 + c1 * t1,
            -b1 * t1 - 2.0 * b3 * c2 * t3 - 2.0 * b2 * c3 * t4 + c1 * t2,
            b1 * t4 - 2.0 * b2 * c3 * t1 + 2.0 * b3 * c2 * t2 + c1 * t3,
            -b1 * t3 + 2.0 * b3 * c2 * t1 + 2.0 * b2 * c3 * t2 + c1 * t4,
        ],
        [
            b2 * t3 - 2.0 * b1 * c3 * t2 + 2.0 * b3 * c1 * t4 + c2 * t1,
            -b2 * t4 + 2.0 * b1 * c3 * t1 + 2.0 * b3 * c1 * t3 + c2 * t2,
            -b2 * t1 - 2.0 * b1 * c3 * t4 - 2.0 * b3 * c1 * t2 + c2 * t3,
            b2 * t2 + 2.0 * b1 * c3 * t3 - 2.0 * b3 * c1 * t1 + c2 * t4,
        ],
        [
            b3 * t4 - 2.0 * b2 * c1 * t3 + 2.0 * b1 * c2 * t2 + c3 * t1,
            b3 * t3 + 2.0 * b2 * c1 * t4 - 2.0 * b1 * c2 * t1 + c3 * t2,
            -b3 * t2 + 2.0 * b2 * c1 * t1 + 2.0 * b1 * c2 * t4 + c3 * t3,
            -b3 * t1 - 2.0 * b2 * c1 * t2 - 2.0 * b1 * c2 * t3 + c3 * t4,
        ],
    ]
}

/// Closed forms `D_{ω1}, D_{ω2}, D_{ω3}`.
pub fn rank3_closed_forms(bd: [f64; 3], c: &Su2) -> [f64; 3] {
    let [b1, b2, b3] = bd;
    let [c1, c2, c3] = c.0;
    [
        (b1 * b1 + c1 * c1 + 4.0 * b2 * b2 * c3 * c3 + 4.0 * b3 * b3 * c2 * c2).powi(2),
        (b2 * b2 + c2 * c2 + 4.0 * b3 * b3 * c1 * c1 + 4.0 * b1 * b1 * c3 * c3).powi(2),
        (b3 * b3 + c3 * c3 + 4.0 * b1 * b1 * c2 * c2 + 4.0 * b2 * b2 * c1 * c1).powi(2),
    ]
}

fn su2_form_matrix(m: &Su2Form) -> SMatrix<f64, 3, 4> {
    let mut out = SMatrix::<f64, 3, 4>::zeros();
    for l in 0..3 {
        for k in 0..4 {
            out[(l, k)] = m.coords()[l][k];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rank3Check {
    pub rank: usize,
    /// Smallest norm among the three Lie rows of `M`.
    pub min_row_norm: f64,
    pub dets: [f64; 3],
    pub closed: [f64; 3],
    /// `M` assembled through the fiber algebra.
    pub m: [[f64; 4]; 3],
    /// `M` from the expanded coefficient formulas.
    pub m_expanded: [[f64; 4]; 3],
}

impl Rank3Check {
    pub fn max_det_error(&self) -> f64 {
        (0..3)
            .map(|i| relative_error(self.dets[i], self.closed[i]))
            .fold(0.0, f64::max)
    }

    pub fn route_difference(&self) -> f64 {
        let mut d = 0.0f64;
        for l in 0..3 {
            for k in 0..4 {
                d = d.max((self.m[l][k] - self.m_expanded[l][k]).abs());
            }
        }
        d
    }
}

/// Diagonal entries of a self-dual form in normal position.
fn diagonal_entries(b: &Su2Form) -> Result<[f64; 3]> {
    let m = b.selfdual_matrix()?;
    let scale = m.amax().max(1.0);
    for i in 0..3 {
        for j in 0..3 {
            if i != j && m[(i, j)].abs() > 1e-12 * scale {
                return Err(VwError::Precondition(
                    "B must be diagonal in the eta ⊗ omega frame".into(),
                ));
            }
        }
    }
    Ok([m[(0, 0)], m[(1, 1)], m[(2, 2)]])
}

/// Rank and determinants of `(B + [B, C])⋅θ + C ⊗ θ` with `B` diagonal.
pub fn check_rank3_lemma(b: &Su2Form, c: &Su2, theta: &FiberForm) -> Result<Rank3Check> {
    if theta.degree() != 1 {
        return Err(VwError::WrongDegree {
            expected: 1,
            got: theta.degree(),
        });
    }
    let bd = diagonal_entries(b)?;
    let bc = bracket_element(b, c);
    if bc.max_abs() <= 1e-14 * (b.max_abs() * c.norm()).max(f64::MIN_POSITIVE) {
        return Err(VwError::Precondition("[B, C] vanishes".into()));
    }
    if theta.max_abs() == 0.0 {
        return Err(VwError::Precondition("theta vanishes".into()));
    }
    let m = rank3_map(b, c, theta)?;
    let mm = su2_form_matrix(&m);
    let rank = numerical_rank(mm.singular_values().as_slice(), RANK_EPS);

    // Each Lie row of M is linear in θ; assemble its 4×4 matrix column by column.
    let mut systems = [Matrix4::zeros(); 3];
    for k in 0..4 {
        let col = rank3_map(b, c, &FiberForm::basis(1, k))?;
        for (l, sys) in systems.iter_mut().enumerate() {
            for i in 0..4 {
                sys[(i, k)] = col.coords()[l][i];
            }
        }
    }
    let dets = [
        systems[0].determinant(),
        systems[1].determinant(),
        systems[2].determinant(),
    ];
    let mut m_arr = [[0.0; 4]; 3];
    for l in 0..3 {
        for k in 0..4 {
            m_arr[l][k] = m.coords()[l][k];
        }
    }
    let min_row_norm = (0..3).map(|l| m.row(l).norm()).fold(f64::INFINITY, f64::min);
    Ok(Rank3Check {
        rank,
        min_row_norm,
        dets,
        closed: rank3_closed_forms(bd, c),
        m: m_arr,
        m_expanded: rank3_expanded(bd, c, theta),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialCheck {
    pub residual: f64,
    pub holds: bool,
}

/// Exact split identities used in the radial argument. `f` holds a general
/// 2-form in the lexicographic basis, read in the frame
/// `e0 := e1, (e1, e2, e3) := (e2, e3, e4)`.
pub fn check_radial_identities(
    f: [f64; 6],
    tau3: &Matrix3<f64>,
    b: &Su2Form,
    c: &Su2,
    gamma: [f64; 3],
) -> Result<RadialCheck> {
    let mut res = 0.0f64;
    let mut scale = 1.0f64;
    let mut track = |x: &[f64], y: &[f64]| {
        for (p, q) in x.iter().zip(y) {
            res = res.max((p - q).abs());
            scale = scale.max(p.abs()).max(q.abs());
        }
    };

    // (i) F⁺ = ½ e0 ∧ (a + t) + ½ (a + t) with a the radial and t the slice part of F.
    let ff = FiberForm::new(2, &f)?;
    let (a, t) = radial_split(&ff)?;
    let sum = [a[0] + t[0], a[1] + t[1], a[2] + t[2]];
    let fp = selfdual_project(&ff)?;
    let (r, s) = radial_decompose(&fp)?;
    track(&r, &sum);
    track(&s, &sum);
    let half = selfdual_coords(&ff)?;
    track(&half.map(|x| 2.0 * x), &sum);

    // (ii) τ³B: both halves carry τ³ applied to the slice coefficients of B.
    let bm = b.selfdual_matrix()?;
    for l in 0..3 {
        let (_, slice) = radial_split(&b.row(l))?;
        let want = tau3 * nalgebra::Vector3::from(slice);
        let w = tau3 * bm.row(l).transpose();
        let (ra, rt) = radial_split(&from_selfdual_coords([w[0], w[1], w[2]]))?;
        track(&ra, want.as_slice());
        track(&rt, want.as_slice());
    }

    // (iii) C ⊗ γ: both halves carry C_l γ.
    let cg = Su2Form::tensor(c, &from_selfdual_coords(gamma));
    for l in 0..3 {
        let (ra, rt) = radial_split(&cg.row(l))?;
        let want = gamma.map(|g| c.0[l] * g);
        track(&ra, &want);
        track(&rt, &want);
    }
    let residual = res / scale;
    Ok(RadialCheck {
        residual,
        holds: residual < LemmaId::Radial.tolerance(),
    })
}

/// One admissible input for a lemma check.
#[derive(Clone, Debug, PartialEq)]
pub enum LemmaInput {
    A1 {
        alpha: Su2,
        beta: Su2,
    },
    A2 {
        nu: FiberForm,
    },
    A3 {
        b: Su2Form,
        c: Su2,
        theta: FiberForm,
    },
    Radial {
        f: [f64; 6],
        tau3: Matrix3<f64>,
        b: Su2Form,
        c: Su2,
        gamma: [f64; 3],
    },
}

fn draw<R: Rng, const K: usize>(rng: &mut R) -> [f64; K] {
    std::array::from_fn(|_| rng.gen_range(-2.0..2.0))
}

/// Sample `i` of the stream for `(id, seed)` and the number of rejected draws.
pub fn sample_one(id: LemmaId, seed: u64, i: u64) -> (LemmaInput, u64) {
    let mut rng = rng::stream(seed, &[id.tag(), i]);
    let mut rejected = 0;
    loop {
        let candidate = match id {
            LemmaId::A1 => {
                let (alpha, beta) = (Su2(draw(&mut rng)), Su2(draw(&mut rng)));
                let cross = lie_bracket(&alpha, &beta).norm();
                (cross > 1e-6 * alpha.norm() * beta.norm()).then_some(LemmaInput::A1 { alpha, beta })
            }
            LemmaId::A2 => Some(LemmaInput::A2 {
                nu: from_selfdual_coords(draw(&mut rng)),
            }),
            LemmaId::A3 => {
                let bd: [f64; 3] = draw(&mut rng);
                let b = Su2Form::from_selfdual_matrix(&[
                    [bd[0], 0.0, 0.0],
                    [0.0, bd[1], 0.0],
                    [0.0, 0.0, bd[2]],
                ]);
                let c = Su2(draw(&mut rng));
                let theta = FiberForm::new(1, &draw::<_, 4>(&mut rng)).expect("1-form");
                let ok = bracket_element(&b, &c).norm() > 1e-6 && theta.norm() > 1e-6;
                ok.then_some(LemmaInput::A3 { b, c, theta })
            }
            LemmaId::Radial => {
                let f = draw(&mut rng);
                let t: [f64; 9] = draw(&mut rng);
                let m: [f64; 9] = draw(&mut rng);
                let b = Su2Form::from_selfdual_matrix(&[
                    [m[0], m[1], m[2]],
                    [m[3], m[4], m[5]],
                    [m[6], m[7], m[8]],
                ]);
                Some(LemmaInput::Radial {
                    f,
                    tau3: Matrix3::from_row_slice(&t),
                    b,
                    c: Su2(draw(&mut rng)),
                    gamma: draw(&mut rng),
                })
            }
        };
        match candidate {
            Some(x) => return (x, rejected),
            None => rejected += 1,
        }
    }
}

/// Deterministic admissible inputs; components uniform in [−2, 2].
pub fn sample_inputs(id: LemmaId, seed: u64, count: u64) -> impl Iterator<Item = LemmaInput> {
    (0..count).map(move |i| sample_one(id, seed, i).0)
}

/// Uniformly distributed rotation of su(2) coordinates.
pub fn random_rotation3<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    random_unit_quaternion(rng).to_rotation_matrix().into_inner()
}

fn random_unit_quaternion<R: Rng>(rng: &mut R) -> UnitQuaternion<f64> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>();
        if n > 1e-4 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(Quaternion::new(v[0], v[1], v[2], v[3]));
        }
    }
}

/// Rotation of R^4 as `x ↦ p x q` on quaternions, with `e1..e4 ↔ 1, i, j, k`.
pub fn random_rotation4<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let p = random_unit_quaternion(rng).into_inner();
    let q = random_unit_quaternion(rng).into_inner();
    let mut g = Matrix4::zeros();
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        let x = p * Quaternion::new(e[0], e[1], e[2], e[3]) * q;
        g.set_column(k, &Vector4::new(x.w, x.i, x.j, x.k));
    }
    g
}

/// Outcome of one sampled check: relative error and pass flag.
fn evaluate(id: LemmaId, seed: u64, i: u64, input: &LemmaInput) -> (f64, bool) {
    let tol = id.tolerance();
    match input {
        LemmaInput::A1 { alpha, beta } => {
            let r = check_basis_lemma(alpha, beta);
            let e = relative_error(r.det, r.closed_form);
            (e, r.is_basis && r.det > 0.0 && e < tol)
        }
        LemmaInput::A2 { nu } => match check_fixed_point_lemma(nu) {
            Ok(r) => {
                let e = relative_error(r.det, r.closed_form);
                (e, r.kernel_dim == 0 && e < tol)
            }
            Err(_) => (f64::INFINITY, false),
        },
        LemmaInput::A3 { b, c, theta } => {
            let Ok(r) = check_rank3_lemma(b, c, theta) else {
                return (f64::INFINITY, false);
            };
            let e = r.max_det_error();
            let routes = r.route_difference() / su2_max(&r.m).max(1.0);
            let mut ok = r.rank == 3 && e < tol && routes < 1e-13;
            // A random frame change keeps the rank and moves M equivariantly.
            let mut frng = rng::stream(seed, &[tag::LEMMA_FRAME, i]);
            let rot = random_rotation3(&mut frng);
            let g = random_rotation4(&mut frng);
            let c2 = Su2::from_vector(&(rot * c.to_vector()));
            let moved = rank3_map(&b.transform(&rot, &g), &c2, &theta.transform(&g));
            let want = rank3_map(b, c, theta).map(|m| m.transform(&rot, &g));
            match (moved, want) {
                (Ok(mv), Ok(w)) => {
                    let mm = su2_form_matrix(&mv);
                    let rk = numerical_rank(mm.singular_values().as_slice(), RANK_EPS);
                    ok &= rk == 3 && (mv - w).max_abs() < 1e-12 * w.max_abs().max(1.0);
                }
                _ => ok = false,
            }
            (e, ok)
        }
        LemmaInput::Radial {
            f,
            tau3,
            b,
            c,
            gamma,
        } => match check_radial_identities(*f, tau3, b, c, *gamma) {
            Ok(r) => (r.residual, r.holds),
            Err(_) => (f64::INFINITY, false),
        },
    }
}

fn su2_max(m: &[[f64; 4]; 3]) -> f64 {
    m.iter().flatten().fold(0.0, |a, x| a.max(x.abs()))
}

/// Run `count` seeded checks of `id` in parallel.
pub fn run_lemma(id: LemmaId, seed: u64, count: u64) -> LemmaReport {
    let (max_err, failures) = (0..count)
        .into_par_iter()
        .map(|i| {
            let (input, _) = sample_one(id, seed, i);
            let (e, ok) = evaluate(id, seed, i, &input);
            (e, u64::from(!ok))
        })
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    LemmaReport {
        lemma_id: id,
        samples: count,
        failures,
        max_det_relative_error: max_err,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::omega;
    use proptest::prelude::*;

    fn diag_b(b: [f64; 3]) -> Su2Form {
        Su2Form::from_selfdual_matrix(&[[b[0], 0.0, 0.0], [0.0, b[1], 0.0], [0.0, 0.0, b[2]]])
    }

    #[test]
    fn basis_examples() {
        let r = check_basis_lemma(&Su2::eta(1), &Su2::eta(2));
        assert_eq!((r.det, r.closed_form, r.is_basis), (2.0, 2.0, true));
        let r = check_basis_lemma(&Su2::eta(1), &(Su2::eta(1) * 3.0));
        assert_eq!((r.det, r.is_basis), (0.0, false));
    }

    #[test]
    fn fixed_point_examples() {
        let r = check_fixed_point_lemma(&FiberForm::zero(2).unwrap()).unwrap();
        assert_eq!((r.det, r.closed_form, r.kernel_dim), (1.0, 1.0, 0));
        let r = check_fixed_point_lemma(&omega(1)).unwrap();
        assert_eq!((r.det, r.closed_form), (4.0, 4.0));
        assert_eq!(check_fixed_point_lemma(&FiberForm::e(&[1, 2])), Err(VwError::NotSelfDual));
    }

    /// The assembled system matches the first row of the displayed matrix.
    #[test]
    fn fixed_point_system_layout() {
        let nu = from_selfdual_coords([0.3, -0.7, 1.1]);
        let k = Matrix4::identity() - dot_matrix(&nu).unwrap();
        let want = Matrix4::new(
            1.0, 0.3, -0.7, 1.1, -0.3, 1.0, 1.1, 0.7, 0.7, -1.1, 1.0, 0.3, -1.1, -0.7, -0.3, 1.0,
        );
        assert!((k - want).amax() < 1e-15, "{k}");
    }

    #[test]
    fn rank3_example() {
        let r = check_rank3_lemma(&diag_b([1.0, 0.0, 0.0]), &Su2::eta(2), &FiberForm::e(&[1])).unwrap();
        // M = (η1 + 2η3) ⊗ (−e2) + η2 ⊗ e1: every Lie row is nonzero, but the
        // η1 and η3 rows are parallel, so the matrix rank is 2.
        assert_eq!(r.rank, 2);
        assert!(r.min_row_norm >= 1.0);
        assert_eq!(r.closed, [1.0, 1.0, 16.0]);
        for i in 0..3 {
            assert!((r.dets[i] - r.closed[i]).abs() < 1e-13);
        }
        assert_eq!(r.route_difference(), 0.0);
    }

    #[test]
    fn rank3_preconditions() {
        let b = diag_b([1.0, 0.0, 0.0]);
        assert!(matches!(
            check_rank3_lemma(&b, &Su2::eta(1), &FiberForm::e(&[1])),
            Err(VwError::Precondition(_))
        ));
        assert!(matches!(
            check_rank3_lemma(&b, &Su2::eta(2), &FiberForm::zero(1).unwrap()),
            Err(VwError::Precondition(_))
        ));
        let off = Su2Form::tensor(&Su2::eta(1), &omega(2));
        assert!(matches!(
            check_rank3_lemma(&off, &Su2::eta(2), &FiberForm::e(&[1])),
            Err(VwError::Precondition(_))
        ));
    }

    #[test]
    fn radial_examples() {
        // F01 = F23 = 1 means coefficients 1 on e12 and e34.
        let f = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let (a, t) = radial_split(&FiberForm::new(2, &f).unwrap()).unwrap();
        assert_eq!((a, t), ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]));
        let b = Su2Form::tensor(&Su2::eta(1), &omega(1));
        let r = check_radial_identities(f, &Matrix3::identity(), &b, &Su2::eta(2), [0.0, 1.0, 0.0]).unwrap();
        assert!(r.holds && r.residual == 0.0);
        let (ra, rt) = radial_split(&b.row(0)).unwrap();
        assert_eq!((ra, rt), ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a: Vec<_> = sample_inputs(LemmaId::A2, 1, 3).collect();
        let b: Vec<_> = sample_inputs(LemmaId::A2, 1, 3).collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for x in &a {
            let LemmaInput::A2 { nu } = x else { panic!() };
            assert!(is_selfdual(nu, 0.0));
        }
    }

    #[test]
    fn a3_samples_respect_rejection_rule() {
        for seed in [1, 2, 99] {
            for x in sample_inputs(LemmaId::A3, seed, 500) {
                let LemmaInput::A3 { b, c, theta } = x else { panic!() };
                assert!(bracket_element(&b, &c).norm() > 1e-6);
                assert!(theta.norm() > 1e-6);
            }
        }
    }

    #[test]
    fn a1_rejection_rate_is_small() {
        let rejected: u64 = (0..10_000).map(|i| sample_one(LemmaId::A1, 7, i).1).sum();
        assert!((rejected as f64) < 0.01 * 10_000.0);
    }

    #[test]
    fn reports_pass_on_small_runs() {
        for id in LemmaId::ALL {
            let r = run_lemma(id, 3, 300);
            assert_eq!(r.failures, 0, "{r:?}");
            assert!(r.passed());
        }
    }

    #[test]
    fn report_json_shape() {
        let r = run_lemma(LemmaId::A1, 5, 10);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["lemma", "samples", "failures", "max_err", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["lemma"], "A1");
    }

    proptest! {
        #[test]
        fn scaled_fixed_point_has_trivial_kernel(w in [-2.0..2.0f64, -2.0..2.0, -2.0..2.0], s in 0.01..3.0f64) {
            prop_assume!(w.iter().any(|x| x.abs() > 1e-3));
            let r = check_scaled_fixed_point(&from_selfdual_coords(w), s).unwrap();
            prop_assert_eq!(r.kernel_dim, 0);
            prop_assert!(relative_error(r.det, r.closed_form) < 1e-12);
        }

        #[test]
        fn rank3_routes_agree(b in [-2.0..2.0f64, -2.0..2.0, -2.0..2.0], c in [-2.0..2.0f64, -2.0..2.0, -2.0..2.0], t in [-2.0..2.0f64, -2.0..2.0, -2.0..2.0, -2.0..2.0]) {
            let bf = diag_b(b);
            let m = rank3_map(&bf, &Su2(c), &FiberForm::new(1, &t).unwrap()).unwrap();
            let e = rank3_expanded(b, &Su2(c), &FiberForm::new(1, &t).unwrap());
            for l in 0..3 {
                for k in 0..4 {
                    prop_assert!((m.coords()[l][k] - e[l][k]).abs() < 1e-13);
                }
            }
        }
    }
}
