//! Seeded test fields: random band-limited solenoidal fields, envelopes and
//! bump functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::spectral::{
    forward_vector, inverse_vector, lowpass_spectral, mode_numbers, project_spectral,
};
use crate::grid::{fft3, sup_norm, Grid3, ScalarField, VectorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zeroes every mode with integer length outside `[kmin, kmax]`.
fn bandpass(grid: Grid3, s: &mut [Vec<Complex64>], kmin: f64, kmax: f64) {
    let m = mode_numbers(grid.n());
    let n = grid.n();
    for (a, ma) in m.iter().enumerate() {
        for (b, mb) in m.iter().enumerate() {
            for (c, mc) in m.iter().enumerate() {
                let q = ((ma * ma + mb * mb + mc * mc) as f64).sqrt();
                if q < kmin || q > kmax {
                    let i = (a * n + b) * n + c;
                    for comp in s.iter_mut() {
                        comp[i] = Complex64::default();
                    }
                }
            }
        }
    }
}

fn white_noise(grid: Grid3, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect()
}

/// Divergence-free field with modes of integer length in `[kmin, kmax]`,
/// scaled to unit sup norm.
pub fn random_solenoidal(grid: Grid3, kmin: f64, kmax: f64, seed: u64) -> VectorField {
    let mut rng = rng(seed);
    let noise = VectorField::from_raw(
        grid,
        [
            white_noise(grid, &mut rng),
            white_noise(grid, &mut rng),
            white_noise(grid, &mut rng),
        ],
    );
    let mut s = forward_vector(&noise);
    bandpass(grid, &mut s, kmin.max(1e-9), kmax);
    project_spectral(grid, &mut s);
    let f = inverse_vector(grid, s);
    let sup = sup_norm(&f);
    if sup > 0.0 {
        f.scaled(1.0 / sup)
    } else {
        f
    }
}

/// Random vector field (not projected) with modes of length in `[1, kmax]`,
/// unit sup norm.
pub fn random_band_limited(grid: Grid3, kmax: f64, seed: u64) -> VectorField {
    let mut rng = rng(seed);
    let noise = VectorField::from_raw(
        grid,
        [
            white_noise(grid, &mut rng),
            white_noise(grid, &mut rng),
            white_noise(grid, &mut rng),
        ],
    );
    let mut s = forward_vector(&noise);
    bandpass(grid, &mut s, 0.0, kmax);
    let f = inverse_vector(grid, s);
    f.scaled(1.0 / sup_norm(&f).max(f64::MIN_POSITIVE))
}

/// Random scalar with modes of length in `[1, kmax]`, unit max modulus.
pub fn random_scalar(grid: Grid3, kmax: f64, seed: u64) -> ScalarField {
    let mut rng = rng(seed);
    let plan = fft3(grid.n());
    let mut s = [plan.forward_real(&white_noise(grid, &mut rng))];
    bandpass(grid, &mut s, 1.0, kmax);
    let [spec] = s;
    let data = plan.inverse_real(spec);
    let m = data.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    ScalarField::from_raw(grid, data.into_iter().map(|v| v / m).collect())
}

/// `3t² - 2t³` on `[0, 1]`, clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_slope(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        6.0 * t * (1.0 - t)
    } else {
        0.0
    }
}

/// Shortest periodic displacement `x - c`.
pub fn displacement(grid: Grid3, x: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let l = grid.box_len();
    let mut d = [0.0; 3];
    for a in 0..3 {
        let mut v = (x[a] - c[a]).rem_euclid(l);
        if v >= l / 2.0 {
            v -= l;
        }
        d[a] = v;
    }
    d
}

/// Radial cutoff: 1 within `inner`, smoothstep down to 0 at `outer`.
pub fn cutoff(d: f64, inner: f64, outer: f64) -> f64 {
    1.0 - smoothstep((d - inner) / (outer - inner))
}

/// `∇φ` for `φ` equal to 1 on `B_r(c)`, 0 outside `B_{(1+η)r}(c)`, with a
/// smoothstep ramp in between.
pub fn bump_gradient(grid: Grid3, c: [f64; 3], r: f64, eta: f64) -> VectorField {
    let width = eta * r;
    VectorField::from_fn(grid, |x| {
        let d = displacement(grid, x, c);
        let rad = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if rad <= r || rad >= r + width {
            return [0.0; 3];
        }
        let s = -smoothstep_slope((rad - r) / width) / width / rad;
        [s * d[0], s * d[1], s * d[2]]
    })
}

/// Gaussian `exp(-|x - c|² / (2a²))` with periodic distance.
pub fn gaussian_envelope(grid: Grid3, c: [f64; 3], a: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let d = displacement(grid, x, c);
        (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * a * a)).exp()
    })
}

/// Pointwise product of a field with a scalar.
pub fn modulate(f: &VectorField, g: &ScalarField) -> VectorField {
    let comps = f
        .components()
        .clone()
        .map(|c| c.iter().zip(g.data()).map(|(a, b)| a * b).collect());
    VectorField::from_raw(f.grid(), comps)
}

/// Random band-limited field times a cutoff supported in `B_radius(c)`.
pub fn compact_random(grid: Grid3, c: [f64; 3], radius: f64, kmax: f64, seed: u64) -> VectorField {
    let base = random_band_limited(grid, kmax, seed);
    let env = ScalarField::from_fn(grid, |x| {
        let d = displacement(grid, x, c);
        cutoff((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(), 0.5 * radius, radius)
    });
    modulate(&base, &env)
}

/// Keeps modes of integer length at most `kmax`.
pub fn lowpass(f: &VectorField, kmax: f64) -> VectorField {
    let grid = f.grid();
    let mut s = forward_vector(f);
    lowpass_spectral(grid, &mut s, kmax);
    inverse_vector(grid, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spectral::max_divergence;

    #[test]
    fn solenoidal_is_divergence_free_and_seeded() {
        let g = Grid3::periodic(16).unwrap();
        let a = random_solenoidal(g, 1.0, 4.0, 7);
        assert!(max_divergence(&a) < 1e-10);
        assert!((sup_norm(&a) - 1.0).abs() < 1e-14);
        assert_eq!(a, random_solenoidal(g, 1.0, 4.0, 7));
        assert_ne!(a, random_solenoidal(g, 1.0, 4.0, 8));
    }

    #[test]
    fn bump_gradient_matches_finite_difference() {
        let g = Grid3::periodic(32).unwrap();
        let c = [3.0, 3.0, 3.0];
        let (r, eta) = (0.6, 1.0);
        let grad = bump_gradient(g, c, r, eta);
        let phi = |x: [f64; 3]| {
            let d = displacement(g, x, c);
            cutoff((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(), r, (1.0 + eta) * r)
        };
        let v = [18, 16, 15];
        let x = g.position(v);
        let e = 1e-6;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += e;
            xm[a] -= e;
            let fd = (phi(xp) - phi(xm)) / (2.0 * e);
            assert!((fd - grad.at(v)[a]).abs() < 1e-6);
        }
    }
}
