//! Fourier-space differential operators on the periodic box.
//!
//! Derivatives use the wavenumbers `2π m / L` with `m ∈ [-n/2, n/2)`; the
//! unpaired Nyquist mode is dropped from odd derivatives so real fields stay
//! real.

use num_complex::Complex64;

use super::{fft3, Grid3, ScalarField, VectorField};

/// Integer mode numbers along one axis.
pub fn mode_numbers(n: usize) -> Vec<i64> {
    (0..n as i64)
        .map(|i| if i < n as i64 / 2 { i } else { i - n as i64 })
        .collect()
}

/// Derivative wavenumbers along one axis, Nyquist zeroed.
pub fn wavenumbers(grid: Grid3) -> Vec<f64> {
    let n = grid.n();
    let s = 2.0 * std::f64::consts::PI / grid.box_len();
    mode_numbers(n)
        .into_iter()
        .map(|m| if m == -(n as i64) / 2 { 0.0 } else { m as f64 * s })
        .collect()
}

/// Spectra of the three components of a vector field.
pub fn forward_vector(f: &VectorField) -> [Vec<Complex64>; 3] {
    let plan = fft3(f.grid().n());
    let (a, b) = plan.forward_real_pair(f.component(0), f.component(1));
    [a, b, plan.forward_real(f.component(2))]
}

/// Inverse transform of three Hermitian spectra.
pub fn inverse_vector(grid: Grid3, spec: [Vec<Complex64>; 3]) -> VectorField {
    let plan = fft3(grid.n());
    let [a, b, c] = spec;
    let (a, b) = plan.inverse_real_pair(a, b);
    VectorField::from_raw(grid, [a, b, plan.inverse_real(c)])
}

/// Visits every mode with its wavevector.
fn for_each_mode(grid: Grid3, mut f: impl FnMut(usize, [f64; 3])) {
    let k = wavenumbers(grid);
    let n = grid.n();
    let mut idx = 0;
    for kx in &k[..n] {
        for ky in &k[..n] {
            for kz in &k[..n] {
                f(idx, [*kx, *ky, *kz]);
                idx += 1;
            }
        }
    }
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn cross_ik(k: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    [
        I * (k[1] * v[2] - k[2] * v[1]),
        I * (k[2] * v[0] - k[0] * v[2]),
        I * (k[0] * v[1] - k[1] * v[0]),
    ]
}

pub fn curl_spectral(grid: Grid3, s: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
    let mut out = [
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
    ];
    for_each_mode(grid, |i, k| {
        let c = cross_ik(k, [s[0][i], s[1][i], s[2][i]]);
        for d in 0..3 {
            out[d][i] = c[d];
        }
    });
    out
}

/// Spectral curl `∇ × f`.
pub fn curl(f: &VectorField) -> VectorField {
    let grid = f.grid();
    let s = forward_vector(f);
    inverse_vector(grid, curl_spectral(grid, &s))
}

pub fn divergence(f: &VectorField) -> ScalarField {
    let grid = f.grid();
    let s = forward_vector(f);
    let mut d = vec![Complex64::default(); grid.len()];
    for_each_mode(grid, |i, k| {
        d[i] = I * (k[0] * s[0][i] + k[1] * s[1][i] + k[2] * s[2][i]);
    });
    ScalarField::from_raw(grid, fft3(grid.n()).inverse_real(d))
}

pub fn gradient(g: &ScalarField) -> VectorField {
    let grid = g.grid();
    let s = fft3(grid.n()).forward_real(g.data());
    let mut out = [
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
    ];
    for_each_mode(grid, |i, k| {
        for d in 0..3 {
            out[d][i] = I * k[d] * s[i];
        }
    });
    inverse_vector(grid, out)
}

/// Leray projection of a spectrum onto divergence-free modes, in place.
pub fn project_spectral(grid: Grid3, s: &mut [Vec<Complex64>; 3]) {
    for_each_mode(grid, |i, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let dot = (k[0] * s[0][i] + k[1] * s[1][i] + k[2] * s[2][i]) / k2;
        for d in 0..3 {
            s[d][i] -= dot * k[d];
        }
    });
}

pub fn leray_project(f: &VectorField) -> VectorField {
    let grid = f.grid();
    let mut s = forward_vector(f);
    project_spectral(grid, &mut s);
    inverse_vector(grid, s)
}

/// Periodic Biot–Savart inversion: the zero-mean, divergence-free `u` with
/// `∇ × u = ω` for divergence-free, zero-mean `ω`; `û = i k × ω̂ / |k|²`.
pub fn biot_savart_spectral(grid: Grid3, w: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
    let mut out = [
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
    ];
    for_each_mode(grid, |i, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let c = cross_ik(k, [w[0][i], w[1][i], w[2][i]]);
        for d in 0..3 {
            out[d][i] = c[d] / k2;
        }
    });
    out
}

pub fn biot_savart(omega: &VectorField) -> VectorField {
    let grid = omega.grid();
    let s = forward_vector(omega);
    inverse_vector(grid, biot_savart_spectral(grid, &s))
}

/// Zeroes every mode whose integer mode vector has Euclidean length above
/// `kmax`, in place.
pub fn lowpass_spectral(grid: Grid3, s: &mut [Vec<Complex64>; 3], kmax: f64) {
    let m = mode_numbers(grid.n());
    let n = grid.n();
    let k2max = kmax * kmax;
    for (a, ma) in m.iter().enumerate() {
        for (b, mb) in m.iter().enumerate() {
            for (c, mc) in m.iter().enumerate() {
                let q = (ma * ma + mb * mb + mc * mc) as f64;
                if q > k2max {
                    let i = (a * n + b) * n + c;
                    for comp in s.iter_mut() {
                        comp[i] = Complex64::default();
                    }
                }
            }
        }
    }
}

/// Largest spectral divergence magnitude, evaluated in physical space.
pub fn max_divergence(f: &VectorField) -> f64 {
    divergence(f)
        .data()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sup_norm;

    fn max_abs_diff(a: &VectorField, b: &VectorField) -> f64 {
        (0..3)
            .flat_map(|c| {
                a.component(c)
                    .iter()
                    .zip(b.component(c))
                    .map(|(x, y)| (x - y).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn curl_of_shear() {
        let g = Grid3::periodic(32).unwrap();
        let f = VectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let exact = VectorField::from_fn(g, |x| [0.0, 0.0, -x[1].cos()]);
        assert!(max_abs_diff(&curl(&f), &exact) <= 1e-10);
    }

    #[test]
    fn curl_of_constant_and_gradient_vanish() {
        let g = Grid3::periodic(16).unwrap();
        let c = VectorField::from_fn(g, |_| [1.5, -2.0, 0.25]);
        assert!(sup_norm(&curl(&c)) <= 1e-12);
        let pot = ScalarField::from_fn(g, |x| x[0].sin() * x[1].sin());
        assert!(sup_norm(&curl(&gradient(&pot))) <= 1e-10);
    }

    #[test]
    fn biot_savart_inverts_curl() {
        let g = Grid3::periodic(16).unwrap();
        let u = VectorField::from_fn(g, |x| {
            [
                x[2].sin() + (2.0 * x[1]).cos(),
                x[0].sin() + x[2].cos(),
                x[1].sin() + x[0].cos(),
            ]
        });
        let back = biot_savart(&curl(&u));
        assert!(max_abs_diff(&back, &u) <= 1e-10);
        assert!(max_divergence(&leray_project(&VectorField::from_fn(g, |x| {
            [x[0].sin(), x[1].cos(), (x[0] + x[2]).sin()]
        }))) <= 1e-12);
    }
}
