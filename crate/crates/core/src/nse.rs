//! Pseudo-spectral Navier–Stokes solver on the periodic box (viscosity 1)
//! and the restricted-Morrey regularity criteria evaluated on its output.
//!
//! The nonlinear term is taken in rotational form `P(u × ω)` with the 2/3
//! rule; time stepping is integrating-factor RK4, so the heat semigroup is
//! applied exactly.

use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::random_solenoidal;
use crate::grid::spectral::{curl, mode_numbers};
use crate::grid::{fft3, load_field, save_field, sup_norm, Grid3, VectorField, Voxel};
use crate::lemma_verify::NormMode;
use crate::morrey::{conjugate, gm_norm, MorreyParams, WeightSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `(sin y, 0, 0)`, an exact decaying solution.
    Shear,
    /// `(sin x cos y cos z, -cos x sin y cos z, 0)`.
    TaylorGreen,
    /// `(A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`.
    Abc { a: f64, b: f64, c: f64 },
    /// Seeded solenoidal field with modes `1 <= |m| <= kmax`, sup norm
    /// `amplitude`.
    Random { kmax: f64, amplitude: f64 },
    Zero,
}

impl InitialCondition {
    /// Parses `shear`, `taylor-green`, `abc`, `random`, `zero` with default
    /// parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "shear" => Self::Shear,
            "taylor-green" | "tg" => Self::TaylorGreen,
            "abc" => Self::Abc {
                a: 1.0,
                b: 1.0,
                c: 1.0,
            },
            "random" => Self::Random {
                kmax: 4.0,
                amplitude: 1.0,
            },
            "zero" => Self::Zero,
            _ => return Err(Error::param(format!("unknown initial condition {name:?}"))),
        })
    }

    pub fn field(&self, grid: Grid3, seed: u64) -> VectorField {
        match *self {
            Self::Shear => VectorField::from_fn(grid, |x| [x[1].sin(), 0.0, 0.0]),
            Self::TaylorGreen => VectorField::from_fn(grid, |x| {
                [
                    x[0].sin() * x[1].cos() * x[2].cos(),
                    -x[0].cos() * x[1].sin() * x[2].cos(),
                    0.0,
                ]
            }),
            Self::Abc { a, b, c } => VectorField::from_fn(grid, |x| {
                [
                    a * x[2].sin() + c * x[1].cos(),
                    b * x[0].sin() + a * x[2].cos(),
                    c * x[1].sin() + b * x[0].cos(),
                ]
            }),
            Self::Random { kmax, amplitude } => {
                random_solenoidal(grid, 1.0, kmax, seed).scaled(amplitude)
            }
            Self::Zero => VectorField::zeros(grid),
        }
    }
}

fn default_nu() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub ic: InitialCondition,
    pub snapshot_every: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(n: usize, dt: f64, t_end: f64, ic: InitialCondition, snapshot_every: usize) -> Self {
        Self {
            n,
            dt,
            t_end,
            nu: 1.0,
            ic,
            snapshot_every,
            seed: 0,
        }
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::periodic(self.n)
    }

    fn validate(&self) -> Result<Grid3> {
        let grid = self.grid()?;
        if self.nu != 1.0 {
            return Err(Error::Unsupported(format!(
                "viscosity is fixed to 1, got {}",
                self.nu
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::param(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::param("snapshot_every must be at least 1"));
        }
        Ok(grid)
    }
}

/// Diagnostics at one time level. Energy and enstrophy are `½∫|u|²` and
/// `½∫|ω|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub u_sup: f64,
    pub omega_sup: f64,
    pub energy: f64,
    pub enstrophy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: VectorField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<SeriesRow>,
}

/// Wavevectors, `|k|²` and the 2/3-rule mask, one entry per mode.
struct Operators {
    grid: Grid3,
    k: Vec<[f64; 3]>,
    k2: Vec<f64>,
    keep: Vec<bool>,
}

impl Operators {
    fn new(grid: Grid3) -> Self {
        let n = grid.n();
        let m = mode_numbers(n);
        let s = 2.0 * std::f64::consts::PI / grid.box_len();
        let cut = n as i64 / 3;
        let mut k = Vec::with_capacity(grid.len());
        let mut keep = Vec::with_capacity(grid.len());
        for &a in &m {
            for &b in &m {
                for &c in &m {
                    k.push([a as f64 * s, b as f64 * s, c as f64 * s]);
                    keep.push(a.abs() <= cut && b.abs() <= cut && c.abs() <= cut);
                }
            }
        }
        let k2 = k.iter().map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).collect();
        Self { grid, k, k2, keep }
    }

    /// Truncates to the retained modes and projects onto divergence-free
    /// fields, in place.
    fn clean(&self, s: &mut [Vec<Complex64>; 3]) {
        let [a, b, c] = s;
        a.par_iter_mut()
            .zip(b.par_iter_mut())
            .zip(c.par_iter_mut())
            .enumerate()
            .for_each(|(i, ((x, y), z))| {
                if !self.keep[i] || self.k2[i] == 0.0 {
                    if !self.keep[i] {
                        *x = Complex64::default();
                        *y = Complex64::default();
                        *z = Complex64::default();
                    }
                    return;
                }
                let k = self.k[i];
                let dot = (k[0] * *x + k[1] * *y + k[2] * *z) / self.k2[i];
                *x -= dot * k[0];
                *y -= dot * k[1];
                *z -= dot * k[2];
            });
    }

    /// Physical `u` and `ω` from the spectrum of `u`.
    fn physical(&self, s: &[Vec<Complex64>; 3]) -> ([Vec<f64>; 3], [Vec<f64>; 3]) {
        let i = Complex64::new(0.0, 1.0);
        let len = self.grid.len();
        let mut w = [
            vec![Complex64::default(); len],
            vec![Complex64::default(); len],
            vec![Complex64::default(); len],
        ];
        {
            let [w0, w1, w2] = &mut w;
            w0.par_iter_mut()
                .zip(w1.par_iter_mut())
                .zip(w2.par_iter_mut())
                .enumerate()
                .for_each(|(m, ((a, b), c))| {
                    let k = self.k[m];
                    *a = i * (k[1] * s[2][m] - k[2] * s[1][m]);
                    *b = i * (k[2] * s[0][m] - k[0] * s[2][m]);
                    *c = i * (k[0] * s[1][m] - k[1] * s[0][m]);
                });
        }
        let plan = fft3(self.grid.n());
        let [w0, w1, w2] = w;
        let (u0, u1) = plan.inverse_real_pair(s[0].clone(), s[1].clone());
        let (u2, o0) = plan.inverse_real_pair(s[2].clone(), w0);
        let (o1, o2) = plan.inverse_real_pair(w1, w2);
        ([u0, u1, u2], [o0, o1, o2])
    }

    /// `P(u × ω)` dealiased, plus the physical fields it was built from.
    fn nonlinear(&self, s: &[Vec<Complex64>; 3]) -> ([Vec<Complex64>; 3], [Vec<f64>; 3], [Vec<f64>; 3]) {
        let (u, w) = self.physical(s);
        let len = self.grid.len();
        let mut c = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        {
            let [c0, c1, c2] = &mut c;
            c0.par_iter_mut()
                .zip(c1.par_iter_mut())
                .zip(c2.par_iter_mut())
                .enumerate()
                .for_each(|(i, ((a, b), d))| {
                    *a = u[1][i] * w[2][i] - u[2][i] * w[1][i];
                    *b = u[2][i] * w[0][i] - u[0][i] * w[2][i];
                    *d = u[0][i] * w[1][i] - u[1][i] * w[0][i];
                });
        }
        let plan = fft3(self.grid.n());
        let (a, b) = plan.forward_real_pair(&c[0], &c[1]);
        let mut out = [a, b, plan.forward_real(&c[2])];
        self.clean(&mut out);
        (out, u, w)
    }
}

fn diagnostics(grid: Grid3, t: f64, u: &[Vec<f64>; 3], w: &[Vec<f64>; 3]) -> SeriesRow {
    // sequential sum: the result must not depend on the thread count
    let stats = |f: &[Vec<f64>; 3]| {
        let mut out = (0.0f64, 0.0f64);
        for i in 0..grid.len() {
            let m2 = f[0][i] * f[0][i] + f[1][i] * f[1][i] + f[2][i] * f[2][i];
            out = (out.0.max(m2), out.1 + m2);
        }
        out
    };
    let (us, ue) = stats(u);
    let (ws, we) = stats(w);
    let vol = grid.voxel_volume();
    SeriesRow {
        t,
        u_sup: us.sqrt(),
        omega_sup: ws.sqrt(),
        energy: 0.5 * ue * vol,
        enstrophy: 0.5 * we * vol,
    }
}

/// `a + s b` elementwise.
fn axpy(a: &[Vec<Complex64>; 3], s: f64, b: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
    std::array::from_fn(|d| a[d].iter().zip(&b[d]).map(|(x, y)| x + s * y).collect())
}

/// `e ⊙ a` elementwise, `e` real per mode.
fn scale(e: &[f64], a: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
    std::array::from_fn(|d| a[d].iter().zip(e).map(|(x, f)| x * f).collect())
}

/// Integrates from `config.ic` to `config.t_end`.
pub fn simulate(config: &SolverConfig) -> Result<Trajectory> {
    let grid = config.validate()?;
    let ops = Operators::new(grid);
    let dt = config.dt;
    let steps = (config.t_end / dt).round() as usize;

    let u0 = config.ic.field(grid, config.seed);
    let sup0 = sup_norm(&u0);
    let limit = 0.5 * grid.spacing() / sup0.max(1.0);
    if dt > limit {
        return Err(Error::param(format!(
            "dt = {dt} violates the CFL bound {limit}"
        )));
    }
    let plan = fft3(grid.n());
    let (a, b) = plan.forward_real_pair(u0.component(0), u0.component(1));
    let mut s = [a, b, plan.forward_real(u0.component(2))];
    ops.clean(&mut s);

    let e_half: Vec<f64> = ops.k2.iter().map(|k2| (-0.5 * k2 * dt).exp()).collect();
    let e_full: Vec<f64> = e_half.iter().map(|e| e * e).collect();

    let mut snapshots = Vec::new();
    let mut series = Vec::with_capacity(steps + 1);
    let mut last_good = 0.0;
    for step in 0..=steps {
        let t = step as f64 * dt;
        let (n1, u, w) = ops.nonlinear(&s);
        let row = diagnostics(grid, t, &u, &w);
        if !(row.u_sup.is_finite() && row.omega_sup.is_finite()) {
            return Err(Error::Unstable { t, last_good });
        }
        last_good = t;
        series.push(row);
        if step % config.snapshot_every == 0 || step == steps {
            snapshots.push(Snapshot {
                t,
                u: VectorField::from_raw(grid, u),
            });
        }
        if step == steps {
            break;
        }

        let k1 = scale_dt(&n1, dt);
        let s2 = scale(&e_half, &axpy(&s, 0.5, &k1));
        let k2 = scale_dt(&ops.nonlinear(&s2).0, dt);
        let s3 = axpy(&scale(&e_half, &s), 0.5, &k2);
        let k3 = scale_dt(&ops.nonlinear(&s3).0, dt);
        let s4 = axpy(&scale(&e_full, &s), 1.0, &scale(&e_half, &k3));
        let k4 = scale_dt(&ops.nonlinear(&s4).0, dt);
        s = std::array::from_fn(|d| {
            (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    e_full[i] * (s[d][i] + k1[d][i] / 6.0)
                        + e_half[i] * (k2[d][i] + k3[d][i]) / 3.0
                        + k4[d][i] / 6.0
                })
                .collect()
        });
    }
    Ok(Trajectory {
        config: config.clone(),
        snapshots,
        series,
    })
}

fn scale_dt(a: &[Vec<Complex64>; 3], dt: f64) -> [Vec<Complex64>; 3] {
    std::array::from_fn(|d| a[d].iter().map(|x| x * dt).collect())
}

#[derive(Serialize, Deserialize)]
struct TrajectoryIndex {
    config: SolverConfig,
    series: Vec<SeriesRow>,
    snapshots: Vec<SnapshotEntry>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotEntry {
    t: f64,
    file: String,
}

/// File name of the snapshot at time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("u_t{t:.9}.fld")
}

impl Trajectory {
    /// Writes `trajectory.json` and one field file per snapshot into `dir`.
    /// Returns the paths written.
    pub fn save(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut entries = Vec::new();
        for snap in &self.snapshots {
            let name = snapshot_name(snap.t);
            let path = dir.join(&name);
            save_field(&snap.u, &path)?;
            written.push(path);
            entries.push(SnapshotEntry { t: snap.t, file: name });
        }
        let index = TrajectoryIndex {
            config: self.config.clone(),
            series: self.series.clone(),
            snapshots: entries,
        };
        let path = dir.join("trajectory.json");
        std::fs::write(&path, serde_json::to_string_pretty(&index)?)?;
        written.push(path);
        Ok(written)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index: TrajectoryIndex =
            serde_json::from_str(&std::fs::read_to_string(dir.join("trajectory.json"))?)?;
        let snapshots = index
            .snapshots
            .iter()
            .map(|e| {
                Ok(Snapshot {
                    t: e.t,
                    u: load_field(dir.join(&e.file))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: index.config,
            snapshots,
            series: index.series,
        })
    }

    /// Linear interpolation of the series at `t`.
    pub fn norms_at(&self, t: f64) -> Result<SeriesRow> {
        let s = &self.series;
        let (first, last) = match (s.first(), s.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Domain("empty time series".into())),
        };
        let tol = 1e-12 * last.t.abs().max(1.0);
        if t < first.t - tol || t > last.t + tol {
            return Err(Error::Domain(format!(
                "t = {t} outside the trajectory range [{}, {}]",
                first.t, last.t
            )));
        }
        let k = s.partition_point(|r| r.t < t);
        if k == 0 {
            return Ok(*first);
        }
        if k == s.len() {
            return Ok(*last);
        }
        let (a, b) = (s[k - 1], s[k]);
        let w = (t - a.t) / (b.t - a.t);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        Ok(SeriesRow {
            t,
            u_sup: lerp(a.u_sup, b.u_sup),
            omega_sup: lerp(a.omega_sup, b.omega_sup),
            energy: lerp(a.energy, b.energy),
            enstrophy: lerp(a.enstrophy, b.enstrophy),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "u")]
    Velocity,
    #[serde(rename = "omega")]
    Vorticity,
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "velocity" => Ok(Self::Velocity),
            "omega" | "w" | "ω" | "vorticity" => Ok(Self::Vorticity),
            _ => Err(Error::param(format!("unknown field {s:?}, expected u or omega"))),
        }
    }
}

/// Indices `k` with every later value strictly above `values[k]`. The last
/// sample never qualifies.
pub fn escape_indices(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut later_min = f64::INFINITY;
    for k in (0..values.len()).rev() {
        if k + 1 < values.len() && values[k] < later_min {
            out.push(k);
        }
        later_min = later_min.min(values[k]);
    }
    out.reverse();
    out
}

/// Sample times that are escape times of `‖u‖_∞` or `‖ω‖_∞`.
pub fn detect_escape_times(series: &[SeriesRow], which: FieldKind) -> Vec<f64> {
    let values: Vec<f64> = series
        .iter()
        .map(|r| match which {
            FieldKind::Velocity => r.u_sup,
            FieldKind::Vorticity => r.omega_sup,
        })
        .collect();
    escape_indices(&values).into_iter().map(|k| series[k].t).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationScale {
    pub eta: f64,
    pub clipped: bool,
}

/// `η = c · norm^{-β}` clipped to `[2h, 1]`.
pub fn dissipation_scale(norm: f64, beta: f64, c: f64, grid: Grid3) -> Result<DissipationScale> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::param(format!("norm must be positive, got {norm}")));
    }
    clip_scale(c * norm.powf(-beta), grid)
}

fn clip_scale(raw: f64, grid: Grid3) -> Result<DissipationScale> {
    let lo = 2.0 * grid.spacing();
    if lo >= 1.0 {
        return Err(Error::ScaleRange(format!(
            "grid too coarse: 2 * spacing = {lo} >= 1"
        )));
    }
    let eta = raw.clamp(lo, 1.0);
    Ok(DissipationScale {
        eta,
        clipped: eta != raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    Velocity,
    Vorticity,
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "velocity" | "u" => Ok(Self::Velocity),
            "vorticity" | "omega" => Ok(Self::Vorticity),
            _ => Err(Error::param(format!("unknown window mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionSpec {
    pub alpha: f64,
    pub beta: f64,
    pub nu_w: f64,
    pub p: f64,
    #[serde(with = "crate::serde_ext")]
    pub theta: f64,
    pub c: f64,
    pub c0: f64,
    pub eps0: f64,
    pub field_mode: FieldKind,
    pub window_mode: WindowMode,
    /// Curl mode measures `u` against `‖ω‖_∞`; identity mode measures the
    /// field against its own sup norm.
    pub norm_mode: NormMode,
    /// `(β₁, β₂)` for the mixed cutoff `c ‖u‖^{-β₁} ‖ω‖^{-β₂}`.
    pub mixed: Option<[f64; 2]>,
}

impl Default for CriterionSpec {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            nu_w: 0.5,
            p: 2.0,
            theta: f64::INFINITY,
            c: 1.0,
            c0: 2.0,
            eps0: 0.1,
            field_mode: FieldKind::Velocity,
            window_mode: WindowMode::Vorticity,
            norm_mode: NormMode::Curl,
            mixed: None,
        }
    }
}

impl CriterionSpec {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64, name: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg(self.alpha, "alpha")?;
        nonneg(self.beta, "beta")?;
        nonneg(self.nu_w, "nu_w")?;
        nonneg(self.eps0, "eps0")?;
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::param(format!("p must lie in [1, inf), got {}", self.p)));
        }
        if !(self.theta > 1.0) {
            return Err(Error::param(format!("theta must lie in (1, inf], got {}", self.theta)));
        }
        if self.theta.is_finite() && !(self.nu_w * self.theta > 1.0) {
            return Err(Error::param(format!(
                "need nu_w * theta > 1, got {}",
                self.nu_w * self.theta
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("c must be positive, got {}", self.c)));
        }
        if !(self.c0 > 1.0 && self.c0.is_finite()) {
            return Err(Error::param(format!("c0 must exceed 1, got {}", self.c0)));
        }
        if self.norm_mode == NormMode::Curl && self.field_mode == FieldKind::Vorticity {
            return Err(Error::param("curl mode measures the velocity field"));
        }
        if let Some([b1, b2]) = self.mixed {
            nonneg(b1, "beta1")?;
            nonneg(b2, "beta2")?;
        }
        Ok(())
    }

    /// `3 + (p'-3)/p'` (curl mode) or `3 - 3/p'` (identity mode).
    fn k_exponent(&self) -> f64 {
        let pc = conjugate(self.p);
        match (self.norm_mode, pc.is_infinite()) {
            (NormMode::Curl, true) => 4.0,
            (NormMode::Identity, true) => 3.0,
            (NormMode::Curl, false) => 3.0 + (pc - 3.0) / pc,
            (NormMode::Identity, false) => 3.0 - 3.0 / pc,
        }
    }

    /// `ν - 1/θ`, or `ν` for `θ = ∞`.
    fn weight_gain(&self) -> f64 {
        if self.theta.is_infinite() {
            self.nu_w
        } else {
            (self.nu_w * self.theta - 1.0) / self.theta
        }
    }
}

/// `(α∧β)(νθ-1)/θ - αK + 1` (`(α∧β)ν - αK + 1` for `θ = ∞`), with
/// `K = 3 + (p'-3)/p'` in curl mode and `K = 3 - 3/p'` in identity mode.
pub fn criterion_exponent(spec: &CriterionSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.alpha.min(spec.beta) * spec.weight_gain() - spec.alpha * spec.k_exponent() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceParam {
    Alpha,
    Beta,
    Nu,
    P,
}

impl FromStr for BalanceParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Self::Alpha),
            "beta" => Ok(Self::Beta),
            "nu" | "nu_w" => Ok(Self::Nu),
            "p" => Ok(Self::P),
            _ => Err(Error::param(format!("cannot solve for {s:?}"))),
        }
    }
}

/// Value of `param` making [`criterion_exponent`] vanish, all other fields
/// of `spec` held fixed. The value stored for `param` in `spec` is ignored.
pub fn solve_balance(spec: &CriterionSpec, param: BalanceParam) -> Result<f64> {
    let fail = |msg: String| Err(Error::UnsolvableBalance(msg));
    let tol = 1e-12;
    let mut s = spec.clone();
    let out = match param {
        BalanceParam::Nu => {
            let m = s.alpha.min(s.beta);
            if m <= 0.0 {
                return fail("alpha ∧ beta = 0 leaves nu undetermined".into());
            }
            let inv_theta = if s.theta.is_infinite() { 0.0 } else { 1.0 / s.theta };
            let nu = (s.alpha * s.k_exponent() - 1.0) / m + inv_theta;
            if nu < 0.0 {
                return fail(format!("root nu = {nu} is negative"));
            }
            if s.theta.is_finite() && !(nu * s.theta > 1.0) {
                return fail(format!("root nu = {nu} violates nu * theta > 1"));
            }
            s.nu_w = nu;
            nu
        }
        BalanceParam::Alpha => {
            let (g, k, beta) = (s.weight_gain(), s.k_exponent(), s.beta);
            let below = (k - g != 0.0)
                .then(|| 1.0 / (k - g))
                .filter(|a| *a >= 0.0 && *a <= beta + tol);
            let above = Some((beta * g + 1.0) / k).filter(|a| *a > beta);
            match below.or(above) {
                Some(a) => {
                    s.alpha = a;
                    a
                }
                None => return fail("no alpha >= 0 balances the exponent".into()),
            }
        }
        BalanceParam::Beta => {
            let (g, k, alpha) = (s.weight_gain(), s.k_exponent(), s.alpha);
            if (alpha * (g - k) + 1.0).abs() <= tol {
                // any beta >= alpha works; report the smallest
                s.beta = alpha;
                alpha
            } else {
                let b = if g != 0.0 { (alpha * k - 1.0) / g } else { f64::NAN };
                if !(b >= 0.0 && b < alpha) {
                    return fail(format!("beta root {b} is not in [0, alpha)"));
                }
                s.beta = b;
                b
            }
        }
        BalanceParam::P => {
            if s.alpha <= 0.0 {
                return fail("alpha = 0 leaves p undetermined".into());
            }
            let k = (s.alpha.min(s.beta) * s.weight_gain() + 1.0) / s.alpha;
            let top = match s.norm_mode {
                NormMode::Curl => 4.0,
                NormMode::Identity => 3.0,
            };
            // K = top - 3/p'
            let inv_pc = (top - k) / 3.0;
            if !(inv_pc >= 0.0 && inv_pc < 1.0) {
                return fail(format!("required K = {k} is out of reach for p in [1, inf)"));
            }
            let p = 1.0 / (1.0 - inv_pc);
            s.p = p;
            p
        }
    };
    s.validate()
        .map_err(|e| Error::UnsolvableBalance(format!("root {out} is inadmissible: {e}")))?;
    Ok(out)
}

/// Where the global norm of the selected snapshot peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub center: Voxel,
    pub x: [f64; 3],
    pub r: f64,
}

/// Criterion quantities at one snapshot inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionEval {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub eta: f64,
    pub eta_clipped: bool,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub t_escape: f64,
    pub window: [f64; 2],
    pub s_star: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub exponent: f64,
    pub satisfied: bool,
    pub scale_window: [f64; 2],
    pub eta_clipped: bool,
    pub witness: Witness,
    pub evaluations: Vec<CriterionEval>,
    pub spec: CriterionSpec,
}

/// Time window after `t` from the norm at `t`.
pub fn criterion_window(traj: &Trajectory, t: f64, spec: &CriterionSpec) -> Result<[f64; 2]> {
    let row = traj.norms_at(t)?;
    let c0 = spec.c0;
    let (lo, hi) = match spec.window_mode {
        WindowMode::Velocity => {
            let u2 = row.u_sup * row.u_sup;
            (1.0 / (4.0 * c0 * c0 * u2), 1.0 / (c0 * c0 * u2))
        }
        WindowMode::Vorticity => (
            1.0 / (4.0 * c0 * row.omega_sup),
            1.0 / (c0 * row.omega_sup),
        ),
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Degenerate(format!("window norm vanishes at t = {t}")));
    }
    Ok([t + lo, t + hi])
}

/// Minimum number of snapshots required inside a window.
pub const MIN_WINDOW_SNAPSHOTS: usize = 3;

/// Evaluates the restricted-Morrey criterion after `t_escape`: the best
/// snapshot `s` in the window (smallest `lhs / rhs`) is reported.
pub fn evaluate_criterion(
    traj: &Trajectory,
    t_escape: f64,
    spec: &CriterionSpec,
) -> Result<CriterionReport> {
    let exponent = criterion_exponent(spec)?;
    let window = criterion_window(traj, t_escape, spec)?;
    let tol = 1e-9 * window[1].abs().max(1.0);
    let inside: Vec<&Snapshot> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= window[0] - tol && s.t <= window[1] + tol)
        .collect();
    if inside.len() < MIN_WINDOW_SNAPSHOTS {
        return Err(Error::Scheduling(format!(
            "window [{}, {}] holds {} snapshots, need {MIN_WINDOW_SNAPSHOTS}",
            window[0],
            window[1],
            inside.len()
        )));
    }

    let results = inside
        .par_iter()
        .map(|snap| evaluate_snapshot(snap, spec, exponent))
        .collect::<Result<Vec<_>>>()?;
    let key = |e: &CriterionEval| if e.rhs > 0.0 { e.lhs / e.rhs } else { f64::INFINITY };
    let mut best = 0;
    for (i, (e, _)) in results.iter().enumerate() {
        let (b, _) = &results[best];
        if key(e) < key(b) || (key(e) == key(b) && e.lhs < b.lhs) {
            best = i;
        }
    }
    let (chosen, witness) = results[best];
    Ok(CriterionReport {
        t_escape,
        window,
        s_star: chosen.t,
        lhs: chosen.lhs,
        rhs: chosen.rhs,
        exponent,
        satisfied: chosen.satisfied,
        scale_window: [chosen.eta, 1.0],
        eta_clipped: chosen.eta_clipped,
        witness,
        evaluations: results.iter().map(|r| r.0).collect(),
        spec: spec.clone(),
    })
}

fn evaluate_snapshot(
    snap: &Snapshot,
    spec: &CriterionSpec,
    exponent: f64,
) -> Result<(CriterionEval, Witness)> {
    let grid = snap.u.grid();
    let omega = curl(&snap.u);
    let (u_sup, w_sup) = (sup_norm(&snap.u), sup_norm(&omega));
    let field = match spec.field_mode {
        FieldKind::Velocity => &snap.u,
        FieldKind::Vorticity => &omega,
    };
    let norm = match (spec.norm_mode, spec.field_mode) {
        (NormMode::Curl, _) | (NormMode::Identity, FieldKind::Vorticity) => w_sup,
        (NormMode::Identity, FieldKind::Velocity) => u_sup,
    };
    let scale = match spec.mixed {
        Some([b1, b2]) => {
            if !(u_sup > 0.0 && w_sup > 0.0) {
                return Err(Error::Degenerate(format!("vanishing field at t = {}", snap.t)));
            }
            clip_scale(spec.c * u_sup.powf(-b1) * w_sup.powf(-b2), grid)?
        }
        None => dissipation_scale(norm, spec.beta, spec.c, grid)
            .map_err(|_| Error::Degenerate(format!("vanishing norm at t = {}", snap.t)))?,
    };
    let params = if scale.eta >= 1.0 {
        // window collapsed to r = 1: a sup over one scale, or an L^θ
        // integral over a null set
        if spec.theta.is_finite() {
            let rhs = spec.eps0 * norm.powf(exponent);
            return Ok((
                CriterionEval {
                    t: snap.t,
                    lhs: 0.0,
                    rhs,
                    eta: scale.eta,
                    eta_clipped: scale.clipped,
                    satisfied: 0.0 <= rhs,
                },
                Witness {
                    center: [0, 0, 0],
                    x: [0.0; 3],
                    r: 1.0,
                },
            ));
        }
        let weight = WeightSpec::new(spec.nu_w, 0.5, spec.theta)?;
        MorreyParams::new(spec.p, weight, vec![1.0])?
    } else if spec.theta.is_infinite() {
        let weight = WeightSpec::new(spec.nu_w, scale.eta, spec.theta)?;
        MorreyParams::with_breakpoint_scales(grid, spec.p, weight)?
    } else {
        let weight = WeightSpec::new(spec.nu_w, scale.eta, spec.theta)?;
        MorreyParams::with_default_scales(grid, spec.p, weight)?
    };
    let gm = gm_norm(field, &params)?;
    let rhs = spec.eps0 * norm.powf(exponent);
    Ok((
        CriterionEval {
            t: snap.t,
            lhs: gm.value,
            rhs,
            eta: scale.eta,
            eta_clipped: scale.clipped,
            satisfied: gm.value <= rhs,
        },
        Witness {
            center: gm.center,
            x: grid.position(gm.center),
            r: gm.r,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_indices_follow_definition() {
        assert_eq!(escape_indices(&[1.0, 3.0, 2.0, 4.0, 5.0]), vec![0, 2, 3]);
        assert!(escape_indices(&[5.0, 4.0, 3.0]).is_empty());
        assert_eq!(escape_indices(&[1.0, 2.0, 3.0]), vec![0, 1]);
        assert!(escape_indices(&[]).is_empty());
    }

    #[test]
    fn dissipation_scale_clips() {
        let g = Grid3::periodic(32).unwrap();
        let d = dissipation_scale(4.0, 0.5, 1.0, g).unwrap();
        assert_eq!(d, DissipationScale { eta: 0.5, clipped: false });
        assert_eq!(dissipation_scale(1.0, 0.7, 0.5, g).unwrap().eta, 0.5);
        let d = dissipation_scale(1e12, 0.5, 1.0, g).unwrap();
        assert!(d.clipped && d.eta == 2.0 * g.spacing());
        assert!(dissipation_scale(0.0, 0.5, 1.0, g).is_err());
    }

    #[test]
    fn exponent_anchor_and_balance() {
        let spec = CriterionSpec::default();
        assert_eq!(criterion_exponent(&spec).unwrap(), 0.0);
        let zero = CriterionSpec { alpha: 0.0, ..CriterionSpec::default() };
        assert_eq!(criterion_exponent(&zero).unwrap(), 1.0);
        let vel = CriterionSpec { norm_mode: NormMode::Identity, ..CriterionSpec::default() };
        assert!(matches!(
            solve_balance(&vel, BalanceParam::Nu),
            Err(Error::UnsolvableBalance(_))
        ));
        for param in [BalanceParam::Nu, BalanceParam::Alpha, BalanceParam::P] {
            let v = solve_balance(&spec, param).unwrap();
            let mut s = spec.clone();
            match param {
                BalanceParam::Nu => s.nu_w = v,
                BalanceParam::Alpha => s.alpha = v,
                BalanceParam::P => s.p = v,
                BalanceParam::Beta => s.beta = v,
            }
            assert!(criterion_exponent(&s).unwrap().abs() < 1e-12, "{param:?} -> {v}");
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let cfg = SolverConfig::new(8, 0.01, 0.05, InitialCondition::Zero, 1);
        let tr = simulate(&cfg).unwrap();
        assert_eq!(tr.snapshots.len(), 6);
        assert!(tr.snapshots.iter().all(|s| sup_norm(&s.u) == 0.0));
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let cfg = SolverConfig::new(16, 1.0, 1.0, InitialCondition::TaylorGreen, 1);
        assert!(simulate(&cfg).is_err());
    }
}
