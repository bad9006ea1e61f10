mod common;

use common::{dilate, lm_oracle, rel};
use morrey_sparse::fields::{random_band_limited, random_solenoidal};
use morrey_sparse::morrey::{
    classical_morrey, clm_norm, gm_norm, lm_norm, log_spaced, morrey_quantity, MorreyParams,
    WeightSpec,
};
use morrey_sparse::{Grid3, VectorField};
use proptest::prelude::*;

#[test]
fn gm_matches_all_center_oracle() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_band_limited(g, 4.0, 21);
    for theta in [2.0, 3.5, f64::INFINITY] {
        let w = WeightSpec::new(0.5, 0.3, theta).unwrap();
        let params = MorreyParams::with_default_scales(g, 2.0, w).unwrap();
        let gm = gm_norm(&f, &params).unwrap();
        let best = (0..g.len())
            .map(|i| lm_oracle(&f, &params, g.voxel(i)))
            .fold(0.0, f64::max);
        assert!(rel(gm.value, best) <= 1e-9, "theta {theta}: {} vs {best}", gm.value);
        assert!(rel(lm_oracle(&f, &params, gm.center), best) <= 1e-9);
    }
}

#[test]
fn constant_field_gm_equals_lm() {
    let g = Grid3::periodic(16).unwrap();
    let f = VectorField::from_fn(g, |_| [0.3, -1.0, 2.0]);
    let w = WeightSpec::new(0.7, 0.4, 2.5).unwrap();
    let params = MorreyParams::with_default_scales(g, 1.5, w).unwrap();
    let gm = gm_norm(&f, &params).unwrap().value;
    for v in [[0, 0, 0], [5, 9, 15]] {
        assert!(rel(gm, lm_norm(&f, &params, v).unwrap()) < 1e-12);
    }
}

#[test]
fn localized_field_witness_is_nearby() {
    let g = Grid3::periodic(16).unwrap();
    let x0 = [4usize, 11, 7];
    let c = g.position(x0);
    let f = VectorField::from_fn(g, |x| {
        let d = g.periodic_distance(x, c);
        [(-(d * d) / 0.1).exp(), 0.0, 0.0]
    });
    let w = WeightSpec::new(0.5, 0.25, f64::INFINITY).unwrap();
    let params = MorreyParams::with_default_scales(g, 2.0, w).unwrap();
    let gm = gm_norm(&f, &params).unwrap();
    let r_max = *params.scales.last().unwrap();
    assert!(g.periodic_distance(g.position(gm.center), c) <= r_max);
}

#[test]
fn raising_rho_never_increases() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_solenoidal(g, 1.0, 5.0, 4);
    let scales = log_spaced(2.0 * g.spacing(), 1.0, 24);
    for theta in [2.0, f64::INFINITY] {
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for rho in [0.0, 0.3, 0.5, 0.7, 0.9] {
            let w = WeightSpec::new(0.6, rho, theta).unwrap();
            let params = MorreyParams::new(2.0, w, scales.clone()).unwrap();
            let cur = (
                lm_norm(&f, &params, [3, 3, 3]).unwrap(),
                gm_norm(&f, &params).unwrap().value,
                clm_norm(&f, &params, [3, 3, 3]).unwrap(),
            );
            assert!(cur.0 <= prev.0 && cur.1 <= prev.1 && cur.2 <= prev.2);
            prev = cur;
        }
    }
}

#[test]
fn classical_monotone_in_range() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_band_limited(g, 4.0, 8);
    let v = |lo: f64, hi: f64| classical_morrey(&f, 2.0, 1.0, lo, hi).unwrap().value;
    assert!(v(0.8, 0.9) <= v(0.8, 1.0));
    assert!(v(0.6, 1.0) <= v(0.4, 1.0));
    assert!(v(0.4, 1.0) <= v(0.2, 1.0));
    assert_eq!(classical_morrey(&VectorField::zeros(g), 2.0, 1.0, 0.5, 1.0).unwrap().value, 0.0);
}

#[test]
fn theta_large_approaches_sup() {
    let g = Grid3::periodic(16).unwrap();
    for seed in 0..5 {
        let f = random_band_limited(g, 4.0, seed);
        let scales = log_spaced(0.8, 1.0, 32);
        let big = MorreyParams::new(2.0, WeightSpec::new(0.5, 0.25, 1e6).unwrap(), scales.clone())
            .unwrap();
        let sup = MorreyParams::new(
            2.0,
            WeightSpec::new(0.5, 0.25, f64::INFINITY).unwrap(),
            scales,
        )
        .unwrap();
        let a = lm_norm(&f, &big, [1, 2, 3]).unwrap();
        let b = lm_norm(&f, &sup, [1, 2, 3]).unwrap();
        assert!(rel(a, b) < 0.01, "{a} vs {b}");
    }
}

#[test]
fn classical_quantity_scaling_covariance() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_band_limited(g, 4.0, 2);
    let f2 = dilate(&f);
    for (x, r) in [([3usize, 5, 30], 0.4), ([17, 0, 9], 0.5), ([31, 31, 2], 0.7)] {
        let fine = morrey_quantity(&f2, 2.0, 1.0, x, r).unwrap();
        let coarse = morrey_quantity(&f, 2.0, 1.0, [x[0] % 16, x[1] % 16, x[2] % 16], 2.0 * r)
            .unwrap();
        assert!(rel(fine, coarse) <= 1e-6);
    }
}

fn params(g: Grid3, theta: f64) -> MorreyParams {
    MorreyParams::with_default_scales(g, 2.0, WeightSpec::new(0.75, 0.3, theta).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn gm_dominates_lm(seed in 0u64..1000, i in 0usize..16, j in 0usize..16, k in 0usize..16) {
        let g = Grid3::periodic(16).unwrap();
        let f = random_band_limited(g, 4.0, seed);
        for theta in [2.0, f64::INFINITY] {
            let p = params(g, theta);
            let gm = gm_norm(&f, &p).unwrap().value;
            prop_assert!(lm_norm(&f, &p, [i, j, k]).unwrap() <= gm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn quasi_norm_axioms(seed in 0u64..1000, c in -4.0f64..4.0) {
        let g = Grid3::periodic(16).unwrap();
        let f = random_band_limited(g, 4.0, seed);
        let h = random_band_limited(g, 3.0, seed + 7);
        for theta in [2.0, f64::INFINITY] {
            let p = params(g, theta);
            let x = [2, 9, 4];
            let a = lm_norm(&f, &p, x).unwrap();
            prop_assert!((lm_norm(&f.scaled(c), &p, x).unwrap() - c.abs() * a).abs() <= 1e-12 * a);
            let b = lm_norm(&h, &p, x).unwrap();
            let s = lm_norm(&f.add(&h).unwrap(), &p, x).unwrap();
            prop_assert!(s <= (a + b) * (1.0 + 1e-9));
            let ga = gm_norm(&f, &p).unwrap().value;
            let gb = gm_norm(&h, &p).unwrap().value;
            prop_assert!(gm_norm(&f.add(&h).unwrap(), &p).unwrap().value <= (ga + gb) * (1.0 + 1e-9));
        }
    }
}
