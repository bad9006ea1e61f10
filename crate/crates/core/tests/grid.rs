mod common;

use common::rel;
use morrey_sparse::fields::{random_band_limited, random_scalar};
use morrey_sparse::grid::spectral::{divergence, gradient};
use morrey_sparse::grid::{
    ball_lp_bruteforce, load_field, save_field, sliding_ball_lp, BallKernel,
};
use morrey_sparse::{curl, Error, Grid3, VectorField, UNIT_BALL_VOLUME};
use proptest::prelude::*;

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("morrey-grid-{}-{name}", std::process::id()))
}

#[test]
fn save_format_and_determinism() {
    let g = Grid3::periodic(8).unwrap();
    let f = VectorField::from_fn(g, |_| [1.0, 2.0, 3.0]);
    let (a, b) = (tmp("a.fld"), tmp("b.fld"));
    save_field(&f, &a).unwrap();
    save_field(&f, &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let header_len = bytes.iter().position(|&c| c == b'\n').unwrap() + 1;
    assert_eq!(bytes.len(), header_len + 3 * 512 * 8);
    let header: serde_json::Value = serde_json::from_slice(&bytes[..header_len - 1]).unwrap();
    assert_eq!(header["order"], "zyx-c");
    assert_eq!(header["dtype"], "f64le");
    assert_eq!(header["ncomp"], 3);
    assert!(save_field(&f, "/nonexistent-dir/x.fld").is_err());
}

#[test]
fn load_rejects_bad_payloads() {
    let g = Grid3::periodic(16).unwrap();
    let f = VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
    let p = tmp("mismatch.fld");
    save_field(&f, &p).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    let header_len = bytes.iter().position(|&c| c == b'\n').unwrap() + 1;
    let text = String::from_utf8(bytes[..header_len].to_vec()).unwrap();
    let mut forged = text.replace("\"n\":16", "\"n\":32").into_bytes();
    forged.extend_from_slice(&bytes[header_len..]);
    std::fs::write(&p, &forged).unwrap();
    assert!(matches!(load_field(&p), Err(Error::SizeMismatch { .. })));

    let mut nan = bytes.clone();
    nan[header_len + 8 * 5..header_len + 8 * 6].copy_from_slice(&f64::NAN.to_le_bytes());
    std::fs::write(&p, &nan).unwrap();
    assert!(matches!(load_field(&p), Err(Error::NonFinite(5))));
}

#[test]
fn constant_field_ball_mass() {
    let g = Grid3::periodic(32).unwrap();
    let f = VectorField::from_fn(g, |_| [1.0, 0.0, 0.0]);
    for r in [0.5, 0.8, 1.0] {
        let k = BallKernel::new(g, r).unwrap();
        let s = sliding_ball_lp(&f, 2.0, r).unwrap();
        let want = (UNIT_BALL_VOLUME * r.powi(3)).sqrt();
        // voxel-count mass is exact; the continuum value is off by the
        // reported voxelization error
        for v in s.data() {
            assert!(rel(*v, k.volume().sqrt()) < 1e-12);
        }
        let err = (k.volume() - UNIT_BALL_VOLUME * r.powi(3)).abs();
        assert!((s.data()[0] - want).abs() <= err.sqrt() + 1e-12);
        assert!((k.volume_error().abs() - err).abs() < 1e-12);
    }
    assert!(sliding_ball_lp(&VectorField::zeros(g), 2.0, 0.5)
        .unwrap()
        .data()
        .iter()
        .all(|v| *v == 0.0));
}

#[test]
fn localized_support_peaks_at_center() {
    let g = Grid3::periodic(32).unwrap();
    let r = 1.0;
    let x0 = [13usize, 9, 20];
    let c = g.position(x0);
    let f = VectorField::from_fn(g, |x| {
        let d = g.periodic_distance(x, c);
        if d <= r / 4.0 {
            [1.0 - d, 0.5, 0.0]
        } else {
            [0.0; 3]
        }
    });
    let s = sliding_ball_lp(&f, 2.0, r).unwrap();
    let best = s.data().iter().cloned().fold(0.0, f64::max);
    assert!(rel(s.at(x0), best) < 1e-12);
    let brute = (0..g.len())
        .map(|i| ball_lp_bruteforce(&f, 2.0, g.voxel(i), r).unwrap())
        .fold(0.0, f64::max);
    assert!(rel(best, brute) < 1e-10);
}

#[test]
fn hundred_random_voxels_match_bruteforce() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_band_limited(g, 5.0, 3);
    let s = sliding_ball_lp(&f, 3.0, 0.9).unwrap();
    let mut state = 12345u64;
    for _ in 0..100 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let idx = (state >> 33) as usize % g.len();
        let v = g.voxel(idx);
        assert!(rel(s.at(v), ball_lp_bruteforce(&f, 3.0, v, 0.9).unwrap()) <= 1e-10);
    }
}

#[test]
fn curl_of_shear_matches_analytic() {
    let g = Grid3::periodic(32).unwrap();
    let w = curl(&VectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]));
    let want = VectorField::from_fn(g, |x| [0.0, 0.0, -x[1].cos()]);
    for c in 0..3 {
        for (a, b) in w.component(c).iter().zip(want.component(c)) {
            assert!((a - b).abs() <= 1e-10);
        }
    }
    let grad = gradient(&morrey_sparse::ScalarField::from_fn(g, |x| x[0].sin() * x[1].sin()));
    assert!(morrey_sparse::sup_norm(&curl(&grad)) <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn round_trip_is_bit_exact(seed in 0u64..1000, n in prop::sample::select(vec![8usize, 16])) {
        let g = Grid3::periodic(n).unwrap();
        let f = random_band_limited(g, 3.0, seed).scaled(1e3);
        let p = tmp(&format!("rt-{seed}-{n}.fld"));
        save_field(&f, &p).unwrap();
        let back = load_field(&p).unwrap();
        std::fs::remove_file(&p).unwrap();
        let same = f.components().iter().zip(back.components()).all(|(a, b)| {
            a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        });
        prop_assert!(same);
    }

    #[test]
    fn sliding_matches_bruteforce(
        seed in 0u64..1000,
        n in prop::sample::select(vec![8usize, 16]),
        p in 1.0f64..4.0,
        rf in 0.05f64..1.0,
    ) {
        let g = Grid3::periodic(n).unwrap();
        let r = g.spacing() * 1.01 + rf * (2.9 - g.spacing());
        let f = random_band_limited(g, 3.0, seed);
        let s = sliding_ball_lp(&f, p, r).unwrap();
        for i in 0..g.len() {
            let b = ball_lp_bruteforce(&f, p, g.voxel(i), r).unwrap();
            prop_assert!(rel(s.data()[i], b) <= 1e-10);
        }
    }

    #[test]
    fn curl_of_gradient_vanishes(seed in 0u64..1000) {
        let g = Grid3::periodic(16).unwrap();
        let phi = random_scalar(g, 5.0, seed);
        prop_assert!(morrey_sparse::sup_norm(&curl(&gradient(&phi))) <= 1e-10);
        let w = curl(&random_band_limited(g, 5.0, seed));
        prop_assert!(divergence(&w).data().iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn sliding_is_translation_equivariant(
        seed in 0u64..1000,
        shift in prop::array::uniform3(-7isize..8),
    ) {
        let g = Grid3::periodic(16).unwrap();
        let f = random_band_limited(g, 4.0, seed);
        let a = sliding_ball_lp(&f.shifted(shift), 2.0, 0.8).unwrap();
        let b = sliding_ball_lp(&f, 2.0, 0.8).unwrap();
        for i in 0..g.len() {
            let v = g.voxel(i);
            let src = g.offset(v, [-shift[0], -shift[1], -shift[2]]);
            prop_assert!(rel(a.at(v), b.at(src)) <= 1e-12);
        }
    }

    #[test]
    fn sliding_is_homogeneous(seed in 0u64..1000, c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        let g = Grid3::periodic(8).unwrap();
        let f = random_band_limited(g, 3.0, seed);
        let a = sliding_ball_lp(&f.scaled(c), 2.5, 1.0).unwrap();
        let b = sliding_ball_lp(&f, 2.5, 1.0).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!(rel(*x, c.abs() * y) <= 1e-12);
        }
    }
}
