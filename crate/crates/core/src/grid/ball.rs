//! Discrete balls on the periodic grid and the sliding ball integrals built
//! on them.
//!
//! A voxel belongs to `B_r(x)` iff its center lies within distance `r` of
//! `x` (ties included). The fast path convolves with the ball indicator in
//! Fourier space; [`ball_lp_bruteforce`] sums the same voxels directly.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{fft3, Grid3, ScalarField, VectorField, Voxel, UNIT_BALL_VOLUME};
use crate::error::{Error, Result};

/// Relative slack on the inclusion test so that radii computed as
/// `spacing * sqrt(q)` include the shell at squared index distance `q`.
const TIE_SLACK: f64 = 1e-12;

#[inline]
fn max_sq_index(grid: Grid3, r: f64) -> f64 {
    let t = r / grid.spacing();
    t * t * (1.0 + TIE_SLACK)
}

/// Integer offsets of the voxels in a ball of radius `r` around the origin,
/// ordered by squared index distance.
fn ball_offsets(grid: Grid3, r: f64) -> Vec<([isize; 3], u64)> {
    let lim = max_sq_index(grid, r);
    let m = (r / grid.spacing()).floor() as isize + 1;
    let mut out = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                let q = (i * i + j * j + k * k) as u64;
                if (q as f64) <= lim {
                    out.push(([i, j, k], q));
                }
            }
        }
    }
    out.sort_by_key(|&(o, q)| (q, o));
    out
}

/// Indicator of `{‖y‖ ≤ radius}` on the torus, with its Fourier transform
/// computed on first use.
pub struct BallKernel {
    radius: f64,
    grid: Grid3,
    offsets: Vec<[isize; 3]>,
    spectrum: OnceLock<Vec<f64>>,
}

impl std::fmt::Debug for BallKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BallKernel")
            .field("radius", &self.radius)
            .field("n", &self.grid.n())
            .field("voxel_count", &self.offsets.len())
            .finish()
    }
}

impl BallKernel {
    pub fn new(grid: Grid3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < grid.box_len() / 2.0) {
            return Err(Error::RadiusOutOfRange {
                r: radius,
                lo: 0.0,
                hi: grid.box_len() / 2.0,
            });
        }
        let offsets = ball_offsets(grid, radius)
            .into_iter()
            .map(|(o, _)| o)
            .collect();
        Ok(Self {
            radius,
            grid,
            offsets,
            spectrum: OnceLock::new(),
        })
    }

    /// Shared kernel for `(grid, radius)`.
    pub fn cached(grid: Grid3, radius: f64) -> Result<Arc<Self>> {
        type Key = (usize, u64, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<BallKernel>>>> = OnceLock::new();
        // bound on the number of cached spectra (each n^3 doubles)
        const MAX_BYTES: usize = 384 << 20;

        let key = (grid.n(), grid.box_len().to_bits(), radius.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(k) = cache.lock().expect("kernel cache poisoned").get(&key) {
            return Ok(k.clone());
        }
        let kernel = Arc::new(Self::new(grid, radius)?);
        let mut guard = cache.lock().expect("kernel cache poisoned");
        if (guard.len() + 1) * grid.len() * 8 > MAX_BYTES {
            guard.clear();
        }
        Ok(guard.entry(key).or_insert(kernel).clone())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn voxel_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[[isize; 3]] {
        &self.offsets
    }

    /// Boolean mask of the ball centered at the origin voxel.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.grid.len()];
        for o in &self.offsets {
            m[self.grid.index(self.grid.offset([0, 0, 0], *o))] = true;
        }
        m
    }

    /// Voxelized volume `voxel_count · h³`.
    pub fn volume(&self) -> f64 {
        self.offsets.len() as f64 * self.grid.voxel_volume()
    }

    /// Voxelization error `voxel_count · h³ − ϖ r³`.
    pub fn volume_error(&self) -> f64 {
        self.volume() - UNIT_BALL_VOLUME * self.radius.powi(3)
    }

    /// Fourier transform of the indicator. The mask is symmetric under
    /// `y → −y`, so the transform is real.
    pub fn spectrum(&self) -> &[f64] {
        self.spectrum.get_or_init(|| {
            let mask: Vec<f64> = self
                .mask()
                .into_iter()
                .map(|b| if b { 1.0 } else { 0.0 })
                .collect();
            fft3(self.grid.n())
                .forward_real(&mask)
                .into_iter()
                .map(|c| c.re)
                .collect()
        })
    }
}

/// Fourier transform of a scalar integrand, reusable across radii.
pub struct BallConvolver {
    grid: Grid3,
    spectrum: Vec<Complex64>,
}

impl BallConvolver {
    pub fn new(grid: Grid3, integrand: &[f64]) -> Self {
        Self {
            grid,
            spectrum: fft3(grid.n()).forward_real(integrand),
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    /// `x ↦ Σ_{y ∈ B_r(x)} g(y)` (no volume factor), clamped at zero.
    pub fn sums(&self, radius: f64) -> Result<Vec<f64>> {
        let kernel = BallKernel::cached(self.grid, radius)?;
        let k = kernel.spectrum();
        let mut prod: Vec<Complex64> = self
            .spectrum
            .par_iter()
            .zip(k.par_iter())
            .map(|(a, b)| a * b)
            .collect();
        fft3(self.grid.n()).inverse(&mut prod);
        Ok(prod.into_iter().map(|c| c.re.max(0.0)).collect())
    }

    /// [`sums`](Self::sums) at two radii through one inverse transform.
    pub fn sums_pair(&self, r1: f64, r2: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let k1 = BallKernel::cached(self.grid, r1)?;
        let k2 = BallKernel::cached(self.grid, r2)?;
        let (a, b) = (k1.spectrum(), k2.spectrum());
        let mut prod: Vec<Complex64> = self
            .spectrum
            .par_iter()
            .zip(a.par_iter().zip(b.par_iter()))
            .map(|(s, (x, y))| s * Complex64::new(*x, *y))
            .collect();
        fft3(self.grid.n()).inverse(&mut prod);
        Ok(prod.into_iter().map(|c| (c.re.max(0.0), c.im.max(0.0))).unzip())
    }
}

/// Ball voxel counts for several boolean masks, two masks per complex
/// transform.
pub struct MaskConvolver {
    grid: Grid3,
    count: usize,
    packed: Vec<Vec<Complex64>>,
}

impl MaskConvolver {
    pub fn new(grid: Grid3, masks: &[&[bool]]) -> Self {
        let plan = fft3(grid.n());
        let packed = masks
            .chunks(2)
            .map(|pair| {
                let mut buf: Vec<Complex64> = (0..grid.len())
                    .map(|i| {
                        let re = if pair[0][i] { 1.0 } else { 0.0 };
                        let im = match pair.get(1) {
                            Some(m) if m[i] => 1.0,
                            _ => 0.0,
                        };
                        Complex64::new(re, im)
                    })
                    .collect();
                plan.forward(&mut buf);
                buf
            })
            .collect();
        Self {
            grid,
            count: masks.len(),
            packed,
        }
    }

    /// For each mask, the number of its voxels inside `B_r(x)` at every `x`.
    pub fn counts(&self, radius: f64) -> Result<Vec<Vec<u32>>> {
        let kernel = BallKernel::cached(self.grid, radius)?;
        let k = kernel.spectrum();
        let plan = fft3(self.grid.n());
        let mut out = Vec::with_capacity(self.count);
        for (p, spec) in self.packed.iter().enumerate() {
            let mut prod: Vec<Complex64> = spec
                .par_iter()
                .zip(k.par_iter())
                .map(|(a, b)| a * b)
                .collect();
            plan.inverse(&mut prod);
            let round = |v: f64| v.round().max(0.0) as u32;
            out.push(prod.iter().map(|c| round(c.re)).collect());
            if 2 * p + 1 < self.count {
                out.push(prod.iter().map(|c| round(c.im)).collect());
            }
        }
        Ok(out)
    }
}

/// `x ↦ ∫_{B_r(x)} g` as a Riemann sum over ball voxels.
pub fn ball_sums(g: &ScalarField, radius: f64) -> Result<ScalarField> {
    let grid = g.grid();
    let vol = grid.voxel_volume();
    let sums = BallConvolver::new(grid, g.data()).sums(radius)?;
    Ok(ScalarField::from_raw(
        grid,
        sums.into_iter().map(|s| s * vol).collect(),
    ))
}

pub(crate) fn check_sliding_radius(grid: Grid3, r: f64) -> Result<()> {
    let (lo, hi) = (grid.spacing(), grid.box_len() / 2.0);
    if r > lo && r < hi {
        Ok(())
    } else {
        Err(Error::RadiusOutOfRange { r, lo, hi })
    }
}

pub(crate) fn pow_magnitude(f: &VectorField, p: f64) -> Vec<f64> {
    let [a, b, c] = f.components();
    a.par_iter()
        .zip(b.par_iter())
        .zip(c.par_iter())
        .map(|((x, y), z)| {
            let m2 = x * x + y * y + z * z;
            if p == 2.0 {
                m2
            } else {
                m2.sqrt().powf(p)
            }
        })
        .collect()
}

/// `x ↦ (∫_{B_r(x)} |f|^p)^{1/p}` at every voxel center.
pub fn sliding_ball_lp(f: &VectorField, p: f64, r: f64) -> Result<ScalarField> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("exponent p must lie in [1, ∞), got {p}")));
    }
    let grid = f.grid();
    check_sliding_radius(grid, r)?;
    let vol = grid.voxel_volume();
    let sums = BallConvolver::new(grid, &pow_magnitude(f, p)).sums(r)?;
    let inv = 1.0 / p;
    Ok(ScalarField::from_raw(
        grid,
        sums.into_iter().map(|s| (s * vol).powf(inv)).collect(),
    ))
}

/// Direct sum over the voxels of the periodic ball; the oracle for
/// [`sliding_ball_lp`].
pub fn ball_lp_bruteforce(f: &VectorField, p: f64, x: Voxel, r: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("exponent p must lie in [1, ∞), got {p}")));
    }
    let grid = f.grid();
    if !(r > 0.0 && r < grid.box_len() / 2.0) {
        return Err(Error::RadiusOutOfRange {
            r,
            lo: 0.0,
            hi: grid.box_len() / 2.0,
        });
    }
    let lim = max_sq_index(grid, r);
    let m = (r / grid.spacing()).floor() as isize + 1;
    let mut acc = 0.0;
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                if ((i * i + j * j + k * k) as f64) <= lim {
                    let v = f.at(grid.offset(x, [i, j, k]));
                    let m2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                    acc += m2.sqrt().powf(p);
                }
            }
        }
    }
    Ok((acc * grid.voxel_volume()).powf(1.0 / p))
}

/// Radii in `[lo, hi]` at which the voxelized ball changes: `lo` itself plus
/// every `spacing · √q` in `(lo, hi]` with `q` a sum of three squares.
/// Between consecutive breakpoints the ball (and any ball integral) is
/// constant, so sup-type scale functionals are exact on this set.
pub fn breakpoint_radii(grid: Grid3, lo: f64, hi: f64) -> Vec<f64> {
    let h = grid.spacing();
    let mut qs = BTreeSet::new();
    for (_, q) in ball_offsets(grid, hi) {
        qs.insert(q);
    }
    let mut out = vec![lo];
    for q in qs {
        let r = h * (q as f64).sqrt();
        if r > lo && r <= hi {
            out.push(r);
        }
    }
    out
}

/// Offsets grouped by squared index distance, innermost shell first.
pub(crate) fn shells(grid: Grid3, r: f64) -> Vec<(u64, Vec<[isize; 3]>)> {
    let mut out: Vec<(u64, Vec<[isize; 3]>)> = Vec::new();
    for (o, q) in ball_offsets(grid, r) {
        match out.last_mut() {
            Some((lq, v)) if *lq == q => v.push(o),
            _ => out.push((q, vec![o])),
        }
    }
    out
}
