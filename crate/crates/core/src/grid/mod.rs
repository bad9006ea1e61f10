//! Periodic cubic grids and the fields that live on them.
//!
//! Storage is C-order with the z index fastest: the value at voxel
//! `(i, j, k)` sits at `(i * n + j) * n + k`. Voxel centers are at
//! `(i, j, k) * spacing` on the torus `[0, box_len)^3`.

pub(crate) mod ball;
mod fft;
mod io;
pub mod spectral;

pub use ball::{
    ball_lp_bruteforce, ball_sums, breakpoint_radii, sliding_ball_lp, BallConvolver, BallKernel,
    MaskConvolver,
};
pub use fft::{fft3, Fft3};
pub use io::{load_field, load_scalar, read_field_file, save_field, save_scalar, FieldData};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball in three dimensions.
pub const UNIT_BALL_VOLUME: f64 = 4.0 * std::f64::consts::PI / 3.0;

/// Voxel index `[i, j, k]` (x, y, z).
pub type Voxel = [usize; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: usize,
    box_len: f64,
}

impl Grid3 {
    pub fn new(n: usize, box_len: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and >= 8, got {n}"
            )));
        }
        if !(box_len.is_finite() && box_len > 2.0) {
            return Err(Error::InvalidGrid(format!(
                "box_len must be finite and > 2, got {box_len}"
            )));
        }
        Ok(Self { n, box_len })
    }

    /// Grid on the standard `2π` box.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * std::f64::consts::PI)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    #[inline]
    pub fn voxel_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, v: Voxel) -> usize {
        (v[0] * self.n + v[1]) * self.n + v[2]
    }

    #[inline]
    pub fn voxel(&self, idx: usize) -> Voxel {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Physical coordinates of a voxel center.
    #[inline]
    pub fn position(&self, v: Voxel) -> [f64; 3] {
        let h = self.spacing();
        [v[0] as f64 * h, v[1] as f64 * h, v[2] as f64 * h]
    }

    /// Voxel reached from `v` by a signed offset, wrapping periodically.
    #[inline]
    pub fn offset(&self, v: Voxel, d: [isize; 3]) -> Voxel {
        let n = self.n as isize;
        let w = |a: usize, b: isize| (a as isize + b).rem_euclid(n) as usize;
        [w(v[0], d[0]), w(v[1], d[1]), w(v[2], d[2])]
    }

    /// Shortest signed index offset on the torus, in `[-n/2, n/2)`.
    #[inline]
    pub fn wrap_delta(&self, d: isize) -> isize {
        let n = self.n as isize;
        let m = d.rem_euclid(n);
        if m >= n / 2 {
            m - n
        } else {
            m
        }
    }

    /// Periodic distance between two physical points.
    pub fn periodic_distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let l = self.box_len;
        let mut s = 0.0;
        for c in 0..3 {
            let mut d = (a[c] - b[c]).rem_euclid(l);
            if d > l / 2.0 {
                d -= l;
            }
            s += d * d;
        }
        s.sqrt()
    }

    /// Same box with `factor` times as many voxels per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n * factor, self.box_len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid3, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::param(format!(
                "scalar field needs {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every voxel center.
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len())
            .map(|i| f(grid.position(grid.voxel(i))))
            .collect();
        Self { grid, data }
    }

    pub(crate) fn from_raw(grid: Grid3, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, v: Voxel) -> f64 {
        self.data[self.grid.index(v)]
    }

    /// Maximum value and the first voxel attaining it.
    pub fn argmax(&self) -> (f64, Voxel) {
        let (i, v) = self
            .data
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        (v, self.grid.voxel(i))
    }

    pub fn max(&self) -> f64 {
        self.argmax().0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid3,
    comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn new(grid: Grid3, comps: [Vec<f64>; 3]) -> Result<Self> {
        for (c, data) in comps.iter().enumerate() {
            if data.len() != grid.len() {
                return Err(Error::param(format!(
                    "component {c} has {} values, grid needs {}",
                    data.len(),
                    grid.len()
                )));
            }
            if let Some(i) = data.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(c * grid.len() + i));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn from_scalars(fields: [ScalarField; 3]) -> Result<Self> {
        let grid = fields[0].grid();
        if fields.iter().any(|f| f.grid() != grid) {
            return Err(Error::param("components must share a grid"));
        }
        let [a, b, c] = fields;
        Ok(Self {
            grid,
            comps: [a.data, b.data, c.data],
        })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            comps: [
                vec![0.0; grid.len()],
                vec![0.0; grid.len()],
                vec![0.0; grid.len()],
            ],
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = [
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
        ];
        for i in 0..grid.len() {
            let v = f(grid.position(grid.voxel(i)));
            for c in 0..3 {
                comps[c].push(v[c]);
            }
        }
        Self { grid, comps }
    }

    pub(crate) fn from_raw(grid: Grid3, comps: [Vec<f64>; 3]) -> Self {
        Self { grid, comps }
    }

    #[inline]
    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    pub fn scalar(&self, c: usize) -> ScalarField {
        ScalarField::from_raw(self.grid, self.comps[c].clone())
    }

    #[inline]
    pub fn at(&self, v: Voxel) -> [f64; 3] {
        let i = self.grid.index(v);
        [self.comps[0][i], self.comps[1][i], self.comps[2][i]]
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let data = (0..self.grid.len())
            .map(|i| {
                let (a, b, c) = (self.comps[0][i], self.comps[1][i], self.comps[2][i]);
                (a * a + b * b + c * c).sqrt()
            })
            .collect();
        ScalarField::from_raw(self.grid, data)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let comps = self
            .comps
            .clone()
            .map(|c| c.into_iter().map(|v| v * s).collect());
        Self {
            grid: self.grid,
            comps,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::param("fields live on different grids"));
        }
        let mut comps = self.comps.clone();
        for (c, dst) in comps.iter_mut().enumerate() {
            for (d, s) in dst.iter_mut().zip(&other.comps[c]) {
                *d += s;
            }
        }
        Ok(Self {
            grid: self.grid,
            comps,
        })
    }

    /// Cyclic shift by whole voxels: `out(x) = self(x - shift)`.
    pub fn shifted(&self, shift: [isize; 3]) -> Self {
        let g = self.grid;
        let mut comps = [
            vec![0.0; g.len()],
            vec![0.0; g.len()],
            vec![0.0; g.len()],
        ];
        for i in 0..g.len() {
            let dst = g.offset(g.voxel(i), shift);
            let j = g.index(dst);
            for c in 0..3 {
                comps[c][j] = self.comps[c][i];
            }
        }
        Self { grid: g, comps }
    }

    /// `½∫|f|²`.
    pub fn energy(&self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v * v)
            .sum();
        0.5 * s * self.grid.voxel_volume()
    }
}

/// Maximum over voxels of the Euclidean magnitude.
pub fn sup_norm(f: &VectorField) -> f64 {
    let [a, b, c] = f.components();
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| x * x + y * y + z * z)
        .fold(0.0_f64, f64::max)
        .sqrt()
}

/// Spectral curl; see [`spectral::curl`].
pub fn curl(f: &VectorField) -> VectorField {
    spectral::curl(f)
}
