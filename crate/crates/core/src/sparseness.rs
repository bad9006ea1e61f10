//! Super-level sets, 1D/3D sparseness, semi-mixedness, `Z_α` membership and
//! the `(λ, δ)` constants of the sparseness lemmas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sup_norm, BallKernel, Grid3, MaskConvolver, VectorField, Voxel, UNIT_BALL_VOLUME};
use crate::morrey::conjugate;

/// Bump-function constant `sqrt(5 / (24π))`: the smoothstep cutoff `φ`
/// equal to 1 on `B_{κr}` and 0 off `B_r` has
/// `‖∇φ‖_{L²} ≤ sqrt(24π/5) (1-κ)^{-1/2} r^{1/2}`.
pub const BUMP_CAL: f64 = 0.257_516_134_682_126_36;

/// Largest scale accepted by the Morrey-type sparseness check. Keeps the
/// enlarged ball `(1+η) r` inside the weight support.
pub const MAX_LEMMA_SCALE: f64 = 0.8;

/// `∛1.5 · MAX_LEMMA_SCALE`, the largest enlarged radius `(1+η) r`.
const MAX_ENLARGED_SCALE: f64 = 0.915_771_394_042_665_5;

/// Boolean voxel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSet {
    grid: Grid3,
    mask: Vec<bool>,
}

impl VoxelSet {
    pub fn new(grid: Grid3, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::param(format!(
                "mask needs {} entries, got {}",
                grid.len(),
                mask.len()
            )));
        }
        Ok(Self { grid, mask })
    }

    pub fn empty(grid: Grid3) -> Self {
        Self {
            grid,
            mask: vec![false; grid.len()],
        }
    }

    pub fn full(grid: Grid3) -> Self {
        Self {
            grid,
            mask: vec![true; grid.len()],
        }
    }

    /// Voxels whose centers satisfy `pred`.
    pub fn from_fn(grid: Grid3, pred: impl Fn([f64; 3]) -> bool) -> Self {
        let mask = (0..grid.len())
            .map(|i| pred(grid.position(grid.voxel(i))))
            .collect();
        Self { grid, mask }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, v: Voxel) -> bool {
        self.mask[self.grid.index(v)]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|b| *b)
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.voxel_volume()
    }
}

/// Label `S_{i}{±}` of the super-level set at position `k` in the order
/// returned by [`superlevel_sets`].
pub fn set_label(k: usize) -> String {
    format!("S_{}{}", k / 2 + 1, if k % 2 == 0 { '+' } else { '-' })
}

/// The six sets `{f_i^± > λ ‖f‖_∞}` in the order `1+, 1-, 2+, 2-, 3+, 3-`.
pub fn superlevel_sets(f: &VectorField, lambda: f64) -> Result<[VoxelSet; 6]> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let sup = sup_norm(f);
    if sup == 0.0 {
        return Err(Error::Degenerate("field vanishes identically".into()));
    }
    let thr = lambda * sup;
    let grid = f.grid();
    Ok(std::array::from_fn(|k| {
        let c = f.component(k / 2);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        VoxelSet {
            grid,
            mask: c.iter().map(|v| sign * v > thr).collect(),
        }
    }))
}

/// `μ(S ∩ B_r(x0)) / μ(B_r(x0))`, voxel-counted.
pub fn sparse_3d(s: &VoxelSet, x0: Voxel, r: f64) -> Result<f64> {
    let grid = s.grid;
    let k = BallKernel::cached(grid, r)?;
    let hits = k
        .offsets()
        .iter()
        .filter(|o| s.mask[grid.index(grid.offset(x0, **o))])
        .count();
    Ok(hits as f64 / k.voxel_count() as f64)
}

/// Worst-case density of a set over all ball centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiMixed {
    pub ok: bool,
    pub max_density: f64,
    pub witness: Voxel,
}

/// Semi-mixedness of several sets at once, sharing transforms between
/// pairs of masks.
pub fn semi_mixed_all(sets: &[&VoxelSet], r: f64, delta: f64) -> Result<Vec<SemiMixed>> {
    if sets.is_empty() {
        return Ok(Vec::new());
    }
    let grid = sets[0].grid;
    if sets.iter().any(|s| s.grid != grid) {
        return Err(Error::param("sets live on different grids"));
    }
    let kernel = BallKernel::cached(grid, r)?;
    let total = kernel.voxel_count() as f64;
    let live: Vec<usize> = (0..sets.len()).filter(|&i| !sets[i].is_empty()).collect();
    let masks: Vec<&[bool]> = live.iter().map(|&i| sets[i].mask.as_slice()).collect();
    let counts = MaskConvolver::new(grid, &masks).counts(r)?;

    let mut out = vec![
        SemiMixed {
            ok: true,
            max_density: 0.0,
            witness: [0, 0, 0],
        };
        sets.len()
    ];
    for (slot, cnt) in live.iter().zip(&counts) {
        let (best, at) = cnt
            .iter()
            .enumerate()
            .fold((0u32, 0usize), |b, (i, &c)| if c > b.0 { (c, i) } else { b });
        let density = best as f64 / total;
        out[*slot] = SemiMixed {
            ok: density <= delta,
            max_density: density,
            witness: grid.voxel(at),
        };
    }
    Ok(out)
}

pub fn semi_mixed(s: &VoxelSet, r: f64, delta: f64) -> Result<SemiMixed> {
    Ok(semi_mixed_all(&[s], r, delta)?[0])
}

/// `count` near-uniform unit vectors (Fibonacci lattice on the sphere).
pub fn fibonacci_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let rad = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [rad * phi.cos(), rad * phi.sin(), z]
        })
        .collect()
}

/// Trilinear interpolation of the mask (as 0/1) at a physical point.
fn mask_at(s: &VoxelSet, x: [f64; 3]) -> f64 {
    let grid = s.grid;
    let h = grid.spacing();
    let n = grid.n() as isize;
    let mut base = [0isize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let u = x[a] / h;
        let fl = u.floor();
        base[a] = fl as isize;
        frac[a] = u - fl;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut wgt = 1.0;
        let mut v = [0usize; 3];
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            wgt *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            v[a] = (base[a] + bit as isize).rem_euclid(n) as usize;
        }
        if wgt > 0.0 && s.mask[grid.index(v)] {
            acc += wgt;
        }
    }
    acc
}

/// Smallest fraction of a diameter `(x0 - r d, x0 + r d)` lying in `S`, over
/// `ndir` sampled directions `d`; returns the fraction and its direction.
pub fn sparse_1d(s: &VoxelSet, x0: Voxel, r: f64, ndir: usize) -> Result<(f64, [f64; 3])> {
    if ndir < 2 {
        return Err(Error::param("need at least two directions"));
    }
    if !(r > 0.0) {
        return Err(Error::param(format!("r must be positive, got {r}")));
    }
    let grid = s.grid;
    let c = grid.position(x0);
    let m = ((4.0 * r / grid.spacing()).ceil() as usize).max(1);
    let dirs = fibonacci_directions(ndir);
    let best = dirs
        .par_iter()
        .map(|d| {
            let hits = (0..m)
                .filter(|k| {
                    let t = -r + (*k as f64 + 0.5) * 2.0 * r / m as f64;
                    mask_at(s, [c[0] + t * d[0], c[1] + t * d[1], c[2] + t * d[2]]) >= 0.5
                })
                .count();
            (hits as f64 / m as f64, *d)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, [0.0; 3]), |b, x| if x.0 < b.0 { x } else { b });
    Ok(best)
}

/// A `(λ, δ)` pair with `δ (1 + λ) > 1`, and `h` from `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLD {
    pub lambda: f64,
    pub delta: f64,
    pub h: f64,
}

fn harmonic_h(delta: f64) -> f64 {
    let d2 = delta * delta;
    std::f64::consts::FRAC_2_PI * ((1.0 - d2) / (1.0 + d2)).asin()
}

impl PairLD {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        let bad = |reason: &str| Error::InadmissiblePair {
            lambda,
            delta,
            reason: reason.into(),
        };
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(bad("lambda must lie in (0, 1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(bad("delta must lie in (0, 1)"));
        }
        if !(1.0 / (1.0 + lambda) < delta) {
            return Err(bad("need 1/(1 + lambda) < delta"));
        }
        Ok(Self {
            lambda,
            delta,
            h: harmonic_h(delta),
        })
    }

    /// `δ (1 + λ)`.
    pub fn mass(&self) -> f64 {
        self.delta * (1.0 + self.lambda)
    }
}

/// The pair with `λh + (1 - h) = 2λ`, `h = (2/π) asin((1-δ²)/(1+δ²))`.
pub fn admissible_pair(delta: f64) -> Result<PairLD> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InadmissiblePair {
            lambda: f64::NAN,
            delta,
            reason: "delta must lie in (0, 1)".into(),
        });
    }
    let h = harmonic_h(delta);
    let lambda = (1.0 - h) / (2.0 - h);
    let mut pair = PairLD::new(lambda, delta)?;
    pair.h = h;
    Ok(pair)
}

fn check_mass(pair: &PairLD) -> Result<f64> {
    let m = pair.mass();
    if !(m > 1.0) || !(pair.lambda > 0.0 && pair.lambda < 1.0) || !(pair.delta < 1.0) {
        return Err(Error::InadmissiblePair {
            lambda: pair.lambda,
            delta: pair.delta,
            reason: "need delta (1 + lambda) > 1".into(),
        });
    }
    Ok(m)
}

/// `κ = ∛((δ(λ+1) + 1) / (2δ(λ+1)))`.
pub fn kappa(pair: &PairLD) -> Result<f64> {
    let m = check_mass(pair)?;
    Ok(((m + 1.0) / (2.0 * m)).cbrt())
}

/// `c*(λ, δ) = cal · ϖ · (1-κ)^{1/2} · (δ(1+λ) - 1)/2`.
pub fn cstar(pair: &PairLD, cal: f64) -> Result<f64> {
    let m = check_mass(pair)?;
    if !(cal > 0.0) {
        return Err(Error::param(format!("calibration constant must be positive, got {cal}")));
    }
    let k = kappa(pair)?;
    Ok(cal * UNIT_BALL_VOLUME * (1.0 - k).sqrt() * (m - 1.0) / 2.0)
}

/// Explicit constant multiplying `ϖ m^{1-1/p'} (1+η)^{(1-αθ)/θ} η` in the
/// Morrey-type sparseness threshold.
pub fn eps_cal(p: f64, theta: f64, alpha: f64) -> Result<f64> {
    check_eps_params(p, theta, alpha)?;
    let inv_pc = 1.0 / conjugate(p);
    let x = if theta.is_infinite() {
        1.0
    } else {
        let e = alpha * theta - 1.0;
        e.powf(-1.0 / theta) * (1.0 - MAX_ENLARGED_SCALE.powf(e)).powf(1.0 / theta)
    };
    Ok(2.0 / 3.0 * UNIT_BALL_VOLUME.powf(-inv_pc) * x)
}

fn check_eps_params(p: f64, theta: f64, alpha: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must lie in [1, inf), got {p}")));
    }
    if !(theta > 1.0) {
        return Err(Error::param(format!("theta must lie in (1, inf], got {theta}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("alpha must be positive, got {alpha}")));
    }
    if theta.is_finite() && !(alpha * theta > 1.0) {
        return Err(Error::param(format!(
            "need alpha * theta > 1, got {}",
            alpha * theta
        )));
    }
    Ok(())
}

/// `ε(λ,δ) = c ϖ m^{1-1/p'} ((δ(1+λ)+1)/2)^{(1-αθ)/(3θ)} (∛((δ(1+λ)+1)/2) - 1)`
/// with `m = (δ(1+λ)-1)/2`, the exponent `-α/3` for `θ = ∞`, and
/// `c = eps_cal(p, θ, α)`.
pub fn eps_const(pair: &PairLD, p: f64, theta: f64, alpha: f64) -> Result<f64> {
    let mass = check_mass(pair)?;
    let c = eps_cal(p, theta, alpha)?;
    let m = (mass - 1.0) / 2.0;
    let b = (mass + 1.0) / 2.0;
    let expo = if theta.is_infinite() {
        -alpha / 3.0
    } else {
        (1.0 - alpha * theta) / (3.0 * theta)
    };
    let inv_pc = 1.0 / conjugate(p);
    Ok(c * UNIT_BALL_VOLUME * m.powf(1.0 - inv_pc) * b.powf(expo) * (b.cbrt() - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseConstants {
    pub kappa: f64,
    pub cstar: f64,
    pub eps: f64,
    pub cal: f64,
}

impl SparseConstants {
    pub fn new(pair: &PairLD, p: f64, theta: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            kappa: kappa(pair)?,
            cstar: cstar(pair, BUMP_CAL)?,
            eps: eps_const(pair, p, theta, alpha)?,
            cal: BUMP_CAL,
        })
    }
}

/// Outcome of a `Z_α` membership test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZAlphaReport {
    pub ok: bool,
    /// Centers with no passing scale, at most ten.
    pub witnesses: Vec<Voxel>,
    pub failing: usize,
    pub scales: Vec<f64>,
}

/// Nodes of the `c` grid inside `(1/c0, c0)`.
pub const Z_ALPHA_NODES: usize = 9;

/// Index of the dominant set at each voxel: the component of largest
/// magnitude (smallest index on ties), its sign (`+` on ties).
fn dominant_set(f: &VectorField, idx: usize) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for c in 0..3 {
        let v = f.component(c)[idx].abs();
        if v > best.1 {
            best = (c, v);
        }
    }
    let neg = f.component(best.0)[idx] < 0.0;
    2 * best.0 + neg as usize
}

/// Checks that every voxel's dominant super-level set is `δ`-sparse around
/// it at some scale `(1/c) ‖f‖_∞^{-α}`, `c` on a log grid in `(1/c0, c0)`.
pub fn z_alpha_member(f: &VectorField, alpha: f64, pair: &PairLD, c0: f64) -> Result<ZAlphaReport> {
    if !(c0 > 1.0) {
        return Err(Error::param(format!("c0 must exceed 1, got {c0}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::param(format!("alpha must be >= 0, got {alpha}")));
    }
    let grid = f.grid();
    let sup = sup_norm(f);
    if sup == 0.0 {
        return Err(Error::Degenerate("field vanishes identically".into()));
    }
    let base = sup.powf(-alpha);
    let k = Z_ALPHA_NODES as f64;
    let scales: Vec<f64> = (0..Z_ALPHA_NODES)
        .map(|i| base / c0.powf((2.0 * i as f64 + 1.0) / k - 1.0))
        .collect();
    let hi = grid.box_len() / 2.0;
    if let Some(s) = scales.iter().find(|s| **s >= hi) {
        return Err(Error::ScaleRange(format!(
            "sparseness scale {s} reaches half the box length {hi}"
        )));
    }

    let sets = superlevel_sets(f, pair.lambda)?;
    let live: Vec<usize> = (0..6).filter(|&i| !sets[i].is_empty()).collect();
    let masks: Vec<&[bool]> = live.iter().map(|&i| sets[i].mask.as_slice()).collect();
    let conv = MaskConvolver::new(grid, &masks);
    let dominant: Vec<usize> = (0..grid.len()).map(|i| dominant_set(f, i)).collect();

    let mut passed = vec![false; grid.len()];
    for &s in &scales {
        let total = BallKernel::cached(grid, s)?.voxel_count() as f64;
        let limit = pair.delta * total;
        let counts = conv.counts(s)?;
        for (i, p) in passed.iter_mut().enumerate() {
            if *p {
                continue;
            }
            *p = match live.iter().position(|&l| l == dominant[i]) {
                None => true,
                Some(slot) => counts[slot][i] as f64 <= limit,
            };
        }
    }
    let failing: Vec<Voxel> = passed
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| grid.voxel(i))
        .collect();
    Ok(ZAlphaReport {
        ok: failing.is_empty(),
        failing: failing.len(),
        witnesses: failing.into_iter().take(10).collect(),
        scales,
    })
}

/// JSON record of one set's semi-mixedness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparsenessReport {
    pub set: String,
    pub r: f64,
    pub delta: f64,
    pub max_density: f64,
    pub witness: Voxel,
    pub ok: bool,
}
