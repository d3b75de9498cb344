use super::*;
use crate::rng;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::TAU;

fn random_field(grid: Grid, kind: FormKind, seed: u64) -> Field {
    let mut r = rng::stream(seed, &[0xfe, kind.comps() as u64]);
    let data = (0..grid.sites() * kind.comps())
        .map(|_| r.gen_range(-1.0..1.0))
        .collect();
    Field::from_data(grid, kind, data).unwrap()
}

fn rel_gap(x: f64, y: f64, scale: f64) -> f64 {
    (x - y).abs() / scale.max(1e-300)
}

#[test]
fn grid_neighbours_wrap() {
    let g = Grid::with_n(3).unwrap();
    let s = g.site([2, 0, 1, 2]);
    assert_eq!(g.coords(s), [2, 0, 1, 2]);
    assert_eq!(g.coords(g.plus(s, 0)), [0, 0, 1, 2]);
    assert_eq!(g.coords(g.minus(s, 1)), [2, 2, 1, 2]);
    assert_eq!(g.coords(g.plus(s, 3)), [2, 0, 1, 0]);
    assert!(Grid::with_n(2).is_err());
    assert!(Grid::new(4, 0.0).is_err());
}

#[test]
fn stencil_tables_cover_every_term() {
    for p in 0..4 {
        assert_eq!(stencil_table(p).len(), crate::fiber::FORM_DIMS[p] * (4 - p));
    }
    // e^1 ∧ e^23 = +e^123, e^2 ∧ e^13 = -e^123
    let t = stencil_table(2);
    let e23 = crate::fiber::blade_index(0b0110);
    let e13 = crate::fiber::blade_index(0b0101);
    assert!(t.iter().any(|s| s.from == e23 && s.mu == 0 && s.sign == 1.0));
    assert!(t.iter().any(|s| s.from == e13 && s.mu == 1 && s.sign == -1.0));
}

#[test]
fn d_cov_of_constant_is_bracket_only() {
    let g = Grid::with_n(4).unwrap();
    let s = Field::constant(g, FormKind::Form(0), &[1.0, 0.0, 0.0]).unwrap();
    let zero = Field::zeros(g, FormKind::Form(1));
    assert_eq!(d_cov(&zero, &s).unwrap().max_abs(), 0.0);
    // A = η₂⊗e¹
    let mut av = [0.0; 12];
    av[1] = 1.0;
    let a = Field::constant(g, FormKind::Form(1), &av).unwrap();
    let out = d_cov(&a, &s).unwrap();
    for x in 0..g.sites() {
        assert_eq!(out.at(x), &[0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}

#[test]
fn d_cov_star_kills_constants_without_connection() {
    let g = Grid::with_n(4).unwrap();
    let t = Field::constant(g, FormKind::Form(1), &[0.3; 12]).unwrap();
    let zero = Field::zeros(g, FormKind::Form(1));
    assert_eq!(d_cov_star(&zero, &t).unwrap().max_abs(), 0.0);
    assert_eq!(curvature_plus(&zero).unwrap().max_abs(), 0.0);
}

#[test]
fn adjointness_all_degrees() {
    let g = Grid::with_n(3).unwrap();
    let a = random_field(g, FormKind::Form(1), 1);
    let kinds = [
        (FormKind::Form(0), FormKind::Form(1)),
        (FormKind::Form(1), FormKind::Form(2)),
        (FormKind::Form(1), FormKind::SelfDual),
        (FormKind::Form(2), FormKind::Form(3)),
        (FormKind::Form(3), FormKind::Form(4)),
    ];
    for (i, (ks, kt)) in kinds.into_iter().enumerate() {
        let s = random_field(g, ks, 10 + i as u64);
        let t = random_field(g, kt, 20 + i as u64);
        let ds = if kt == FormKind::SelfDual {
            d_cov_plus(&a, &s).unwrap()
        } else {
            d_cov(&a, &s).unwrap()
        };
        let lhs = l2_inner(&ds, &t).unwrap();
        let rhs = l2_inner(&s, &d_cov_star(&a, &t).unwrap()).unwrap();
        let scale = ds.l2_norm() * t.l2_norm() + s.l2_norm() * d_cov_star(&a, &t).unwrap().l2_norm();
        assert!(rel_gap(lhs, rhs, scale) < 1e-12, "{ks:?}->{kt:?}: {lhs} vs {rhs}");
    }
}

#[test]
fn selfdual_embedding_is_isometric() {
    let g = Grid::with_n(3).unwrap();
    let b = random_field(g, FormKind::SelfDual, 3);
    let f = b.to_full();
    let nb = l2_inner(&b, &b).unwrap();
    assert!(rel_gap(nb, l2_inner(&f, &f).unwrap(), nb) < 1e-14);
    assert_eq!(f.selfdual_part().unwrap(), b);
}

#[test]
fn l2_inner_uses_omega_gram_weight() {
    let g = Grid::with_n(3).unwrap();
    // η₁⊗ω₁ + η₂⊗ω₁ + η₃⊗ω₁
    let b = Field::constant(g, FormKind::SelfDual, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        .unwrap();
    let expected = 2.0 * 3.0 * g.length().powi(4);
    assert!(rel_gap(l2_inner(&b, &b).unwrap(), expected, expected) < 1e-13);
    let c = random_field(g, FormKind::SelfDual, 5);
    assert_eq!(l2_inner(&b, &c).unwrap(), l2_inner(&c, &b).unwrap());
    assert!(l2_inner(&b, &random_field(g, FormKind::Form(2), 1)).is_err());
}

/// `η₁ sin(2π x₁ / L)` on axis 0 against its exact derivative.
fn sine_derivative_error(n: usize) -> f64 {
    let g = Grid::with_n(n).unwrap();
    let k = TAU / g.length();
    let s = Field::from_fn(g, FormKind::Form(0), |x, v| v[0] = (k * g.position(x)[0]).sin());
    let ds = d_cov(&Field::zeros(g, FormKind::Form(1)), &s).unwrap();
    (0..g.sites())
        .map(|x| (ds.at(x)[0] - k * (k * g.position(x)[0]).cos()).abs())
        .fold(0.0, f64::max)
}

fn assert_second_order(errs: &[f64]) {
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.6..=4.4).contains(&r), "ratio {r} from {errs:?}");
    }
}

#[test]
fn d_cov_converges_second_order() {
    let errs: Vec<f64> = [8, 16, 32].iter().map(|&n| sine_derivative_error(n)).collect();
    assert_second_order(&errs);
}

/// Band-limited 1-form against the exact `−Σ ∂_μ t_μ`.
fn divergence_error(n: usize) -> f64 {
    let g = Grid::with_n(n).unwrap();
    // t_μ = η_{μ mod 3} sin(x_μ + 2 x_{μ+1})
    let t = Field::from_fn(g, FormKind::Form(1), |x, v| {
        let p = g.position(x);
        for mu in 0..4 {
            v[3 * mu + mu % 3] = (p[mu] + 2.0 * p[(mu + 1) % 4]).sin();
        }
    });
    let div = d_cov_star(&Field::zeros(g, FormKind::Form(1)), &t).unwrap();
    (0..g.sites())
        .map(|x| {
            let p = g.position(x);
            let mut exact = [0.0; 3];
            for mu in 0..4 {
                exact[mu % 3] -= (p[mu] + 2.0 * p[(mu + 1) % 4]).cos();
            }
            (0..3).map(|l| (div.at(x)[l] - exact[l]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn d_cov_star_converges_to_divergence() {
    let errs: Vec<f64> = [8, 16, 32].iter().map(|&n| divergence_error(n)).collect();
    assert_second_order(&errs);
}

/// `A = η₁ sin(2π x₂/L) e¹` has `F = −(2π/L) cos(2π x₂/L) η₁ e¹²`.
fn abelian_curvature_error(n: usize) -> f64 {
    let g = Grid::with_n(n).unwrap();
    let k = TAU / g.length();
    let a = Field::from_fn(g, FormKind::Form(1), |x, v| v[0] = (k * g.position(x)[1]).sin());
    let f = curvature_plus(&a).unwrap();
    (0..g.sites())
        .map(|x| {
            let exact = -0.5 * k * (k * g.position(x)[1]).cos();
            let v = f.at(x);
            (v[0] - exact).abs().max(v[3].abs()).max(v[6].abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn curvature_converges_second_order() {
    let errs: Vec<f64> = [8, 16, 32].iter().map(|&n| abelian_curvature_error(n)).collect();
    assert_second_order(&errs);
}

#[test]
fn curvature_of_constant_connection_is_half_bracket() {
    let g = Grid::with_n(3).unwrap();
    let av: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
    let a = Field::constant(g, FormKind::Form(1), &av).unwrap();
    let f = curvature_plus(&a).unwrap();
    let mut an = crate::fiber::Su2Form::zero(1).unwrap();
    for mu in 0..4 {
        an.set_column(mu, &crate::fiber::Su2([av[3 * mu], av[3 * mu + 1], av[3 * mu + 2]]));
    }
    let half = crate::fiber::bracket_wedge_plus(&an).unwrap() * 0.5;
    let m = half.selfdual_matrix().unwrap();
    for x in [0, 17, 80] {
        for k in 0..3 {
            for l in 0..3 {
                assert!((f.at(x)[3 * k + l] - m[(l, k)]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn covariant_gradient_has_no_selfdual_part_without_connection() {
    // centered differences commute, so d⁺(dc) vanishes exactly
    let g = Grid::with_n(5).unwrap();
    let zero = Field::zeros(g, FormKind::Form(1));
    let c = random_field(g, FormKind::Form(0), 9);
    let dc = d_cov(&zero, &c).unwrap();
    assert!(d_cov_plus(&zero, &dc).unwrap().max_abs() < 1e-12);
}

#[test]
fn identity_gauge_leaves_config_unchanged() {
    let g = Grid::with_n(4).unwrap();
    let cfg = sample_config(&g, 3, 1).unwrap();
    assert_eq!(gauge_apply(&GaugeField::identity(g), &cfg).unwrap(), cfg);
}

#[test]
fn constant_gauge_commutes_with_operators() {
    let g = Grid::with_n(4).unwrap();
    let cfg = sample_config(&g, 4, 1).unwrap();
    let z = GaugeField::constant(g, quat_exp([0.3, -0.7, 1.1])).unwrap();
    let moved = gauge_apply(&z, &cfg).unwrap();
    assert!(moved.a.sub(&ops::ad_field(&z, &cfg.a).unwrap()).unwrap().max_abs() < 1e-14);

    let lhs = curvature_plus(&moved.a).unwrap();
    let rhs = ops::ad_field(&z, &curvature_plus(&cfg.a).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);

    let lhs = d_cov(&moved.a, &moved.c).unwrap();
    let rhs = ops::ad_field(&z, &d_cov(&cfg.a, &cfg.c).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);

    let lhs = d_cov_star(&moved.a, &moved.b).unwrap();
    let rhs = ops::ad_field(&z, &d_cov_star(&cfg.a, &cfg.b).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
}

fn gauge_covariance_error(n: usize) -> f64 {
    let g = Grid::with_n(n).unwrap();
    let cfg = sample_config_scaled(&g, 7, 1, 0.3).unwrap();
    let z = sample_gauge_scaled(&g, 7, 1, 0.05).unwrap();
    let moved = gauge_apply(&z, &cfg).unwrap();
    let lhs = curvature_plus(&moved.a).unwrap();
    let rhs = ops::ad_field(&z, &curvature_plus(&cfg.a).unwrap()).unwrap();
    lhs.sub(&rhs).unwrap().l2_norm()
}

#[test]
fn smooth_gauge_covariance_is_second_order() {
    // the discrete Leibniz error sits at summed frequencies, so N=8 is not
    // yet asymptotic; the L² norm avoids the sup-norm sampling bias
    let errs: Vec<f64> = [8, 16, 32].iter().map(|&n| gauge_covariance_error(n)).collect();
    for w in errs.windows(2) {
        assert!((3.4..=4.6).contains(&(w[0] / w[1])), "{errs:?}");
    }
}

#[test]
fn band_modes_are_half_of_the_l1_ball() {
    assert_eq!(band_modes(0), vec![[0; 4]]);
    assert_eq!(band_modes(1).len(), 5);
    // |k|₁ ≤ 2 has 1 + 8 + 32 points
    assert_eq!(band_modes(2).len(), 1 + 40 / 2);
    for k in band_modes(2) {
        assert!(!band_modes(2).contains(&k.map(|x| -x)) || k == [0; 4]);
    }
}

#[test]
fn samplers_are_deterministic_and_checked() {
    let g = Grid::with_n(4).unwrap();
    assert_eq!(sample_config(&g, 5, 1).unwrap(), sample_config(&g, 5, 1).unwrap());
    assert_ne!(sample_config(&g, 5, 1).unwrap(), sample_config(&g, 6, 1).unwrap());
    assert!(sample_config(&g, 5, 1).unwrap().c.max_abs() > 0.0);
    assert_eq!(sample_gauge(&g, 1, 1).unwrap(), sample_gauge(&g, 1, 1).unwrap());
    assert!(matches!(sample_config(&g, 5, 2), Err(VwError::InvalidConfig(_))));
    assert!(sample_config(&Grid::with_n(3).unwrap(), 5, 0).is_ok());
}

#[test]
fn sampled_pack_is_valid() {
    let g = Grid::with_n(4).unwrap();
    let p = sample_pack(&g, 11, 1, 0.2).unwrap();
    assert!(p.validate().is_ok());
    assert_eq!(p, sample_pack(&g, 11, 1, 0.2).unwrap());
    // large ε is shrunk until the pack is valid
    assert!(sample_pack(&g, 11, 1, 5.0).unwrap().min_singular_value() >= PACK_MIN_SV);
    assert!(sample_pack(&g, 11, 1, -1.0).is_err());
}

#[test]
fn trivial_pack_has_singular_tau3() {
    let g = Grid::with_n(3).unwrap();
    assert!(PerturbationPack::trivial(g).validate().is_err());
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(3, 1.5).unwrap();
    let meta = SnapshotMeta {
        seed: Some(4),
        band: Some(0),
        label: None,
    };
    for kind in [FormKind::Form(0), FormKind::Form(1), FormKind::SelfDual, FormKind::Form(2)] {
        let f = random_field(g, kind, 1);
        let path = dir.path().join(format!("{kind:?}.vwf"));
        write_field(&path, &f, &meta).unwrap();
        let (back, m) = read_field(&path).unwrap();
        assert_eq!(back, f);
        assert_eq!(m, meta);
    }
    let path = dir.path().join("m.vwf");
    let data: Vec<f64> = (0..9).map(|i| i as f64 - 0.5).collect();
    write_matrix(&path, &g, 3, &data, &SnapshotMeta::default()).unwrap();
    let (g2, side, back, _) = read_matrix(&path).unwrap();
    assert_eq!((g2, side, back), (g, 3, data));
    assert!(read_field(&path).is_err());

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"VWF1");
    assert_eq!(bytes.len(), 24 + 9 * 8);
    std::fs::write(&path, b"nope").unwrap();
    assert!(matches!(read_matrix(&path), Err(VwError::Format(_))));
}

#[test]
fn gauge_field_rejects_non_unit() {
    let g = Grid::with_n(3).unwrap();
    assert!(GaugeField::constant(g, [1.0, 0.1, 0.0, 0.0]).is_err());
    let phi = random_field(g, FormKind::Form(0), 2);
    assert!(GaugeField::exp(&phi).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prop_adjointness(seed in any::<u64>(), p in 0usize..4) {
        let g = Grid::with_n(3).unwrap();
        let a = random_field(g, FormKind::Form(1), seed);
        let s = random_field(g, FormKind::Form(p), seed ^ 1);
        let t = random_field(g, FormKind::Form(p + 1), seed ^ 2);
        let ds = d_cov(&a, &s).unwrap();
        let dt = d_cov_star(&a, &t).unwrap();
        let scale = ds.l2_norm() * t.l2_norm() + s.l2_norm() * dt.l2_norm();
        prop_assert!(rel_gap(l2_inner(&ds, &t).unwrap(), l2_inner(&s, &dt).unwrap(), scale) < 1e-12);
    }

    #[test]
    fn prop_cauchy_schwarz(seed in any::<u64>()) {
        let g = Grid::with_n(3).unwrap();
        let u = random_field(g, FormKind::SelfDual, seed);
        let v = random_field(g, FormKind::SelfDual, seed.wrapping_add(1));
        prop_assert!(l2_inner(&u, &v).unwrap().abs() <= u.l2_norm() * v.l2_norm() * (1.0 + 1e-12));
    }
}
