#![allow(dead_code)]

use morrey_sparse::fields::{compact_random, random_band_limited, rng};
use morrey_sparse::grid::ball_lp_bruteforce;
use morrey_sparse::morrey::{MorreyParams, WeightSpec};
use morrey_sparse::{Grid3, VectorField, Voxel};
use rand::Rng;

/// Weight and grid of the Hölder ensemble.
pub fn holder_setup() -> (Grid3, WeightSpec, MorreyParams) {
    let g = Grid3::periodic(32).unwrap();
    let w = WeightSpec::new(1.0, 0.25, 2.0).unwrap();
    let params = MorreyParams::with_default_scales(g, 2.0, w).unwrap();
    (g, w, params)
}

/// `f` compactly supported in a ball of radius in [0.3, 0.9), `g` band-limited.
pub fn holder_pair(grid: Grid3, seed: u64) -> (VectorField, VectorField) {
    let mut r = rng(seed);
    let l = grid.box_len();
    let c = [r.random::<f64>() * l, r.random::<f64>() * l, r.random::<f64>() * l];
    let rad = 0.3 + 0.6 * r.random::<f64>();
    let kf = 2.0 + 6.0 * r.random::<f64>();
    let kg = 2.0 + 6.0 * r.random::<f64>();
    let f = compact_random(grid, c, rad, kf, seed.wrapping_mul(2) + 1);
    let g = random_band_limited(grid, kg, seed.wrapping_mul(2) + 2);
    (f, g)
}

/// `∫|f||g|`, computed directly.
pub fn product_integral(f: &VectorField, g: &VectorField) -> f64 {
    let (a, b) = (f.magnitude(), g.magnitude());
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>() * f.grid().voxel_volume()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Log-log slope of `(∫ ... dG)^{1/θ'}` for `f = ∇φ_r`, `φ_r` a bump on
/// `B_r`, over `r ∈ {0.1, 0.2, 0.4}`; the power counting gives
/// `3/p' - 1 + (νθ - 1)/θ`.
pub fn predual_slope() -> (f64, f64) {
    use morrey_sparse::fields::bump_gradient;
    use morrey_sparse::preduality::stieltjes_predual_integral;
    let (nu, theta, rho, p) = (3.0, 2.0, 0.05, 2.0);
    let g = Grid3::periodic(128).unwrap();
    let x = [64, 64, 64];
    let c = g.position(x);
    let w = WeightSpec::new(nu, rho, theta).unwrap();
    let ell = w.theta_conj();
    let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4]
        .iter()
        .map(|&r| {
            let f = bump_gradient(g, c, r, 1.0);
            let s = stieltjes_predual_integral(&f, p, &w, x).unwrap().powf(1.0 / ell);
            (f64::ln(r), s.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let pc = p / (p - 1.0);
    (sxy / sxx, 3.0 / pc - 1.0 + (nu * theta - 1.0) / theta)
}

/// Largest `∫|fg| / (C₀(f) ‖g‖_GM)` over the given seeds.
pub fn holder_max(seeds: std::ops::Range<u64>) -> f64 {
    use morrey_sparse::morrey::gm_norm;
    use morrey_sparse::preduality::predual_bound;
    let (g, w, params) = holder_setup();
    seeds
        .map(|s| {
            let (f, h) = holder_pair(g, s);
            product_integral(&f, &h)
                / (predual_bound(&f, 2.0, &w, None).unwrap().value * gm_norm(&h, &params).unwrap().value)
        })
        .fold(0.0, f64::max)
}

/// Weighted local norm from direct ball sums and an independent
/// trapezoid rule in `ln r` for `∫ g^θ dr`.
pub fn lm_oracle(f: &VectorField, params: &MorreyParams, x: Voxel) -> f64 {
    let w = &params.weight;
    let g: Vec<f64> = params
        .scales
        .iter()
        .map(|&r| w.value(r) * ball_lp_bruteforce(f, params.p, x, r).unwrap())
        .collect();
    if w.theta.is_infinite() {
        return g.iter().cloned().fold(0.0, f64::max);
    }
    let s = &params.scales;
    let mut acc = 0.0;
    for i in 0..s.len() - 1 {
        let du = (s[i + 1] / s[i]).ln();
        acc += 0.5 * du * (g[i].powf(w.theta) * s[i] + g[i + 1].powf(w.theta) * s[i + 1]);
    }
    acc.powf(1.0 / w.theta)
}

/// Largest local norm over all centers, from [`lm_oracle`].
pub fn gm_oracle(f: &VectorField, params: &MorreyParams) -> f64 {
    let g = f.grid();
    (0..g.len()).map(|i| lm_oracle(f, params, g.voxel(i))).fold(0.0, f64::max)
}

/// `f_2(y) = 2 f(2y)` on the grid refined by 2, read off the coarse samples.
pub fn dilate(f: &VectorField) -> VectorField {
    let g = f.grid();
    let n = g.n();
    let fine = g.refined(2).unwrap();
    let mut comps = [vec![0.0; fine.len()], vec![0.0; fine.len()], vec![0.0; fine.len()]];
    for i in 0..fine.len() {
        let v = fine.voxel(i);
        let src = g.index([v[0] % n, v[1] % n, v[2] % n]);
        for c in 0..3 {
            comps[c][i] = 2.0 * f.component(c)[src];
        }
    }
    VectorField::new(fine, comps).unwrap()
}
