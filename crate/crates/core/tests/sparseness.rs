use morrey_sparse::fields::{random_band_limited, random_scalar};
use morrey_sparse::sparseness::{
    admissible_pair, cstar, eps_const, kappa, semi_mixed, sparse_1d, sparse_3d, superlevel_sets,
    z_alpha_member, PairLD, VoxelSet, BUMP_CAL,
};
use morrey_sparse::{Grid3, VectorField};
use proptest::prelude::*;

#[test]
fn semi_mixed_matches_all_center_counts() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_band_limited(g, 3.0, 5);
    let sets = superlevel_sets(&f, 0.3).unwrap();
    for s in sets.iter().filter(|s| !s.is_empty()) {
        for r in [0.5, 1.1, 2.0] {
            let m = semi_mixed(s, r, 0.5).unwrap();
            let brute = (0..g.len())
                .map(|i| sparse_3d(s, g.voxel(i), r).unwrap())
                .fold(0.0, f64::max);
            assert_eq!(m.max_density, brute);
            assert_eq!(sparse_3d(s, m.witness, r).unwrap(), brute);
            assert_eq!(m.ok, brute <= 0.5);
        }
    }
}

#[test]
fn superlevel_volume_nonincreasing_in_lambda() {
    let g = Grid3::periodic(16).unwrap();
    let f = random_band_limited(g, 4.0, 17);
    let mut prev = [f64::INFINITY; 6];
    for i in 1..40 {
        let sets = superlevel_sets(&f, i as f64 / 40.0).unwrap();
        for k in 0..6 {
            assert!(sets[k].volume() <= prev[k]);
            prev[k] = sets[k].volume();
        }
    }
}

#[test]
fn constants_finite_on_admissible_region() {
    for i in 0..50 {
        let lambda = (i as f64 + 0.5) / 50.0;
        let lo = 1.0 / (1.0 + lambda);
        for j in 0..50 {
            let delta = lo + (1.0 - lo) * (j as f64 + 0.5) / 50.0;
            let pair = PairLD::new(lambda, delta).unwrap();
            let k = kappa(&pair).unwrap();
            assert!(k > 2f64.powf(-1.0 / 3.0) && k < 1.0);
            for v in [
                cstar(&pair, BUMP_CAL).unwrap(),
                eps_const(&pair, 2.0, 2.0, 1.0).unwrap(),
                eps_const(&pair, 3.0, f64::INFINITY, 0.5).unwrap(),
            ] {
                assert!(v.is_finite() && v > 0.0, "{lambda} {delta}");
            }
        }
    }
}

#[test]
fn kappa_limit_at_full_mass() {
    let pair = PairLD::new(1.0 - 1e-12, 1.0 - 1e-12).unwrap();
    assert!((kappa(&pair).unwrap() - 0.75f64.cbrt()).abs() < 1e-9);
    assert!((kappa(&pair).unwrap() - 0.908560).abs() < 1e-6);
}

#[test]
fn cstar_increases_with_delta_eps_decreases_with_alpha() {
    let lambda = 0.45;
    let mut prev = 0.0;
    for j in 1..100 {
        let delta = 1.0 / 1.45 + (1.0 - 1.0 / 1.45) * j as f64 / 100.0;
        let c = cstar(&PairLD::new(lambda, delta).unwrap(), BUMP_CAL).unwrap();
        assert!(c > prev);
        prev = c;
    }
    let pair = admissible_pair(0.85).unwrap();
    let mut prev = f64::INFINITY;
    for j in 0..50 {
        let alpha = 0.6 + j as f64 * 0.05;
        let e = eps_const(&pair, 2.0, 2.0, alpha).unwrap();
        assert!(e < prev);
        prev = e;
    }
}

#[test]
fn slab_stack_density() {
    // period 8 voxels, thickness 2
    let g = Grid3::periodic(64).unwrap();
    let s = VoxelSet::new(g, (0..g.len()).map(|i| g.voxel(i)[1] % 8 < 2).collect()).unwrap();
    let m = semi_mixed(&s, 2.5, 0.3).unwrap();
    assert!((m.max_density - 0.25).abs() <= 0.05, "{}", m.max_density);
}

#[test]
fn ball_is_not_semi_mixed() {
    let g = Grid3::periodic(32).unwrap();
    let c = [1.0, 4.0, 2.5];
    let r = 0.8;
    let s = VoxelSet::from_fn(g, |x| g.periodic_distance(x, c) <= r);
    let m = semi_mixed(&s, r, 0.9).unwrap();
    assert!(!m.ok);
    assert!(m.max_density > 0.95);
    assert!(g.periodic_distance(g.position(m.witness), c) <= g.spacing());
}

#[test]
fn sparse_3d_implies_sparse_1d() {
    let g = Grid3::periodic(32).unwrap();
    let delta: f64 = 0.4;
    let mut checked = 0;
    for seed in 0..6 {
        let phi = random_scalar(g, 4.0, seed);
        let thr = 0.3 * phi.max();
        let s = VoxelSet::new(g, phi.data().iter().map(|v| *v > thr).collect()).unwrap();
        for (x, r) in [([3, 3, 3], 0.6), ([16, 8, 20], 0.9), ([30, 1, 12], 1.2)] {
            if sparse_3d(&s, x, r).unwrap() <= delta {
                let (best, _) = sparse_1d(&s, x, r, 256).unwrap();
                assert!(best <= delta.cbrt() + 0.05, "{best}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 5, "only {checked} cases passed the 3D check");
}

fn blob(g: Grid3, c: [f64; 3], amp: f64, radius: f64) -> VectorField {
    VectorField::from_fn(g, |x| {
        let d = g.periodic_distance(x, c);
        let plateau = 0.5 * (1.0 - ((d - radius) / 0.05).tanh());
        [amp * plateau, 0.2 * amp * plateau, 0.0]
    })
}

#[test]
fn z_alpha_blob_example() {
    let g = Grid3::periodic(32).unwrap();
    let pair = admissible_pair(0.75).unwrap();
    let x = [16, 16, 16];
    let c = g.position(x);
    // sup 4 and alpha 1/2: scales (1/c) / 2 for c in (1/2, 2), i.e. (0.25, 1)
    let small = blob(g, c, 4.0, 0.1);
    let rep = z_alpha_member(&small, 0.5, &pair, 2.0).unwrap();
    assert!(rep.ok, "{:?}", rep.witnesses);
    let sets = superlevel_sets(&small, pair.lambda).unwrap();
    let top = *rep.scales.first().unwrap();
    assert!(sparse_3d(&sets[0], x, top).unwrap() <= pair.delta);
    let (one_d, _) = sparse_1d(&sets[0], x, top, 256).unwrap();
    assert!(one_d <= pair.delta.cbrt());

    let big = blob(g, c, 4.0, 1.2);
    let rep = z_alpha_member(&big, 0.5, &pair, 2.0).unwrap();
    assert!(!rep.ok);
    let sets = superlevel_sets(&big, pair.lambda).unwrap();
    for &s in &rep.scales {
        assert!(sparse_3d(&sets[0], x, s).unwrap() > pair.delta);
    }
    let tiny = blob(g, c, 1e-3, 0.5);
    assert!(z_alpha_member(&tiny, 0.5, &pair, 2.0).is_err());
}

/// Shrinks a mask by two onto the refined grid (periodic copies).
fn shrink(s: &VoxelSet) -> VoxelSet {
    let g = s.grid();
    let n = g.n();
    let fine = g.refined(2).unwrap();
    let mask = (0..fine.len())
        .map(|i| {
            let v = fine.voxel(i);
            s.contains([v[0] % n, v[1] % n, v[2] % n])
        })
        .collect();
    VoxelSet::new(fine, mask).unwrap()
}

#[test]
fn transition_scale_covariance() {
    let g = Grid3::periodic(16).unwrap();
    let s = VoxelSet::from_fn(g, |x| g.periodic_distance(x, [2.0, 2.0, 2.0]) <= 0.9);
    let fine = shrink(&s);
    let radii: Vec<f64> = (0..12).map(|i| 0.3 + 0.1 * i as f64).collect();
    let first_ok = |set: &VoxelSet, scale: f64| {
        radii
            .iter()
            .position(|r| semi_mixed(set, scale * r, 0.5).unwrap().ok)
            .unwrap()
    };
    for r in &radii {
        assert_eq!(
            semi_mixed(&fine, *r, 0.5).unwrap().max_density,
            semi_mixed(&s, 2.0 * r, 0.5).unwrap().max_density
        );
    }
    assert_eq!(first_ok(&fine, 1.0), first_ok(&s, 2.0));
}

proptest! {
    #[test]
    fn admissible_pair_invariants(delta in 0.3f64..0.9999) {
        let h = 2.0 / std::f64::consts::PI * ((1.0 - delta * delta) / (1.0 + delta * delta)).asin();
        let lambda = (1.0 - h) / (2.0 - h);
        match admissible_pair(delta) {
            Ok(p) => {
                prop_assert!((p.lambda * p.h + (1.0 - p.h) - 2.0 * p.lambda).abs() <= 1e-12);
                prop_assert!(1.0 / (1.0 + p.lambda) < p.delta);
                prop_assert!(p.lambda > 1.0 / 3.0 && p.lambda < 0.5);
            }
            Err(_) => prop_assert!(1.0 / (1.0 + lambda) >= delta),
        }
    }
}
