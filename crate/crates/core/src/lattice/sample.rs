use super::{Configuration, Field, FormKind, GaugeField, Grid, PerturbationPack, Triple, ID3, ID4};
use crate::error::{Result, VwError};
use crate::rng::{self, tag};
use rand::Rng;

/// Wave vectors with `|k|₁ ≤ band`: zero plus one representative of each
/// `±k` pair (first nonzero entry positive).
pub fn band_modes(band: usize) -> Vec<[i32; 4]> {
    let b = band as i32;
    let mut out = vec![[0; 4]];
    for k0 in -b..=b {
        for k1 in -b..=b {
            for k2 in -b..=b {
                for k3 in -b..=b {
                    let k = [k0, k1, k2, k3];
                    if k == [0; 4] || k.iter().map(|x| x.abs()).sum::<i32>() > b {
                        continue;
                    }
                    if k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                        out.push(k);
                    }
                }
            }
        }
    }
    out
}

fn check_band(grid: &Grid, band: usize) -> Result<()> {
    if 2 * band + 2 > grid.n() {
        return Err(VwError::InvalidConfig(format!(
            "band {band} exceeds N/2 - 1 for N = {}",
            grid.n()
        )));
    }
    Ok(())
}

/// Real trigonometric polynomial field with `ncomp` components per site and
/// coefficients uniform in `[−amplitude, amplitude]` per mode.
pub fn trig_field<R: Rng>(
    grid: &Grid,
    rng: &mut R,
    band: usize,
    ncomp: usize,
    amplitude: f64,
) -> Result<Vec<f64>> {
    check_band(grid, band)?;
    let modes = band_modes(band);
    let n = grid.n();
    // per component: constant, then (cos, sin) for every nonzero mode
    let coeffs: Vec<Vec<f64>> = (0..ncomp)
        .map(|_| {
            (0..2 * modes.len() - 1)
                .map(|_| amplitude * rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let cos: Vec<f64> = (0..n)
        .map(|m| (std::f64::consts::TAU * m as f64 / n as f64).cos())
        .collect();
    let sin: Vec<f64> = (0..n)
        .map(|m| (std::f64::consts::TAU * m as f64 / n as f64).sin())
        .collect();
    let mut out = vec![0.0; grid.sites() * ncomp];
    for site in 0..grid.sites() {
        let x = grid.coords(site);
        let phases: Vec<usize> = modes
            .iter()
            .map(|k| {
                let d: i64 = (0..4).map(|mu| k[mu] as i64 * x[mu] as i64).sum();
                d.rem_euclid(n as i64) as usize
            })
            .collect();
        for (c, cf) in coeffs.iter().enumerate() {
            let mut v = cf[0];
            for (m, &ph) in phases.iter().enumerate().skip(1) {
                v += cf[2 * m - 1] * cos[ph] + cf[2 * m] * sin[ph];
            }
            out[site * ncomp + c] = v;
        }
    }
    Ok(out)
}

fn trig(grid: &Grid, seed: u64, tags: &[u64], band: usize, kind: FormKind, amp: f64) -> Result<Field> {
    let mut rng = rng::stream(seed, tags);
    Field::from_data(*grid, kind, trig_field(grid, &mut rng, band, kind.comps(), amp)?)
}

/// Band-limited configuration with unit coefficient scale.
pub fn sample_config(grid: &Grid, seed: u64, band: usize) -> Result<Configuration> {
    sample_config_scaled(grid, seed, band, 1.0)
}

pub fn sample_config_scaled(grid: &Grid, seed: u64, band: usize, amplitude: f64) -> Result<Configuration> {
    Triple::new(
        trig(grid, seed, &[tag::CONFIG, 0], band, FormKind::Form(1), amplitude)?,
        trig(grid, seed, &[tag::CONFIG, 1], band, FormKind::SelfDual, amplitude)?,
        trig(grid, seed, &[tag::CONFIG, 2], band, FormKind::Form(0), amplitude)?,
    )
}

/// Band-limited tangent triple, independent of [`sample_config`].
pub fn sample_tangent(grid: &Grid, seed: u64, band: usize) -> Result<Triple> {
    Triple::new(
        trig(grid, seed, &[tag::TANGENT, 0], band, FormKind::Form(1), 1.0)?,
        trig(grid, seed, &[tag::TANGENT, 1], band, FormKind::SelfDual, 1.0)?,
        trig(grid, seed, &[tag::TANGENT, 2], band, FormKind::Form(0), 1.0)?,
    )
}

/// Band-limited su(2) 0-form.
pub fn sample_scalar(grid: &Grid, seed: u64, band: usize) -> Result<Field> {
    trig(grid, seed, &[tag::SCALAR], band, FormKind::Form(0), 1.0)
}

/// `exp` of a band-limited su(2) 0-form.
pub fn sample_gauge(grid: &Grid, seed: u64, band: usize) -> Result<GaugeField> {
    sample_gauge_scaled(grid, seed, band, 1.0)
}

pub fn sample_gauge_scaled(grid: &Grid, seed: u64, band: usize, amplitude: f64) -> Result<GaugeField> {
    GaugeField::exp(&trig(grid, seed, &[tag::GAUGE], band, FormKind::Form(0), amplitude)?)
}

/// Pack with `τ = I + ε·M(x)` for band-limited matrix fields `M`, and
/// band-limited `θ`, `γ`. `ε` is halved until every matrix has smallest
/// singular value at least `PACK_MIN_SV` (at most 20 times).
pub fn sample_pack(grid: &Grid, seed: u64, band: usize, eps: f64) -> Result<PerturbationPack> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(VwError::InvalidConfig(format!("pack eps must be >= 0, got {eps}")));
    }
    let draw = |slot: u64, k: usize| -> Result<Vec<f64>> {
        let mut rng = rng::stream(seed, &[tag::PACK, slot]);
        trig_field(grid, &mut rng, band, k, 1.0)
    };
    let (m1, m2, m3) = (draw(0, 16)?, draw(1, 9)?, draw(2, 9)?);
    let (th, ga) = (draw(3, 4)?, draw(4, 3)?);
    let sites = grid.sites();
    let theta: Vec<[f64; 4]> = (0..sites).map(|s| std::array::from_fn(|i| th[4 * s + i])).collect();
    let gamma: Vec<[f64; 3]> = (0..sites).map(|s| std::array::from_fn(|i| ga[3 * s + i])).collect();
    let mut e = eps;
    for _ in 0..=20 {
        let pack = PerturbationPack {
            grid: *grid,
            tau1: (0..sites).map(|s| std::array::from_fn(|i| ID4[i] + e * m1[16 * s + i])).collect(),
            tau2: (0..sites).map(|s| std::array::from_fn(|i| ID3[i] + e * m2[9 * s + i])).collect(),
            tau3: (0..sites).map(|s| std::array::from_fn(|i| ID3[i] + e * m3[9 * s + i])).collect(),
            theta: theta.clone(),
            gamma: gamma.clone(),
        };
        if pack.validate().is_ok() {
            return Ok(pack);
        }
        e *= 0.5;
    }
    Err(VwError::Precondition("could not make pack matrices invertible".into()))
}
