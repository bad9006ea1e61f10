//! Local, complementary-local and global Morrey-type quasi-norms with
//! truncated power weights, and the classical scale-restricted Morrey
//! quantity `sup_{x, r} r^{-α} ∫_{B_r(x)} |f|^p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ball::{pow_magnitude, shells};
use crate::grid::{breakpoint_radii, BallConvolver, Grid3, VectorField, Voxel};

/// Default number of log-spaced scale nodes.
pub const DEFAULT_SCALE_NODES: usize = 32;

/// `w(s) = s^{-ν}` on `[ρ, upper]`, zero elsewhere, measured in `L^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub nu: f64,
    pub rho: f64,
    #[serde(with = "crate::serde_ext")]
    pub upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub theta: f64,
}

impl WeightSpec {
    /// Weight truncated to `[rho, 1]`.
    pub fn new(nu: f64, rho: f64, theta: f64) -> Result<Self> {
        let w = Self {
            nu,
            rho,
            upper: 1.0,
            theta,
        };
        w.validate()?;
        Ok(w)
    }

    /// `s^{-ν}` on all of `(0, ∞)`.
    pub fn untruncated(nu: f64, theta: f64) -> Result<Self> {
        let w = Self {
            nu,
            rho: 0.0,
            upper: f64::INFINITY,
            theta,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::param(format!("weight power must be >= 0, got {}", self.nu)));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::param(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !(self.upper > self.rho && (self.upper == 1.0 || self.upper == f64::INFINITY)) {
            return Err(Error::param(format!(
                "upper cutoff must be 1 or infinite, got {}",
                self.upper
            )));
        }
        if !(self.theta > 1.0) {
            return Err(Error::param(format!(
                "theta must lie in (1, inf], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        if s < self.rho || s > self.upper || s <= 0.0 {
            0.0
        } else {
            s.powf(-self.nu)
        }
    }

    /// `νθ = 1`: the tail integrals take the logarithmic form.
    pub fn is_log_edge(&self) -> bool {
        self.theta.is_finite() && (self.nu * self.theta - 1.0).abs() <= 1e-12
    }

    /// Hölder conjugate `θ'` of `θ`.
    pub fn theta_conj(&self) -> f64 {
        conjugate(self.theta)
    }
}

/// Hölder conjugate; `1 ↦ ∞`, `∞ ↦ 1`.
pub fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams {
    pub p: f64,
    pub weight: WeightSpec,
    pub scales: Vec<f64>,
}

impl MorreyParams {
    pub fn new(p: f64, weight: WeightSpec, scales: Vec<f64>) -> Result<Self> {
        let params = Self { p, weight, scales };
        params.validate_basic()?;
        Ok(params)
    }

    /// `DEFAULT_SCALE_NODES` log-spaced nodes on `[max(ρ, 2h), 1]`.
    pub fn with_default_scales(grid: Grid3, p: f64, weight: WeightSpec) -> Result<Self> {
        let scales = log_spaced(scale_floor(grid, weight.rho)?, 1.0, DEFAULT_SCALE_NODES);
        Self::new(p, weight, scales)
    }

    /// Every radius in `[max(ρ, 2h), 1]` at which the voxelized ball grows.
    /// With `θ = ∞` this makes the scale supremum exact.
    pub fn with_breakpoint_scales(grid: Grid3, p: f64, weight: WeightSpec) -> Result<Self> {
        let scales = breakpoint_radii(grid, scale_floor(grid, weight.rho)?, 1.0);
        Self::new(p, weight, scales)
    }

    fn validate_basic(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::param(format!("p must lie in [1, inf), got {}", self.p)));
        }
        self.weight.validate()?;
        if self.scales.is_empty() {
            return Err(Error::param("scale list is empty"));
        }
        if self.weight.theta.is_finite() && self.scales.len() < 2 {
            return Err(Error::param("finite theta needs at least two scale nodes"));
        }
        if self.scales.windows(2).any(|w| !(w[1] > w[0])) || !(self.scales[0] > 0.0) {
            return Err(Error::param("scales must be positive and strictly increasing"));
        }
        Ok(())
    }

    fn validate_for(&self, grid: Grid3) -> Result<()> {
        self.validate_basic()?;
        let hi = grid.box_len() / 2.0;
        let last = *self.scales.last().expect("non-empty");
        if last >= hi {
            return Err(Error::RadiusOutOfRange { r: last, lo: 0.0, hi });
        }
        Ok(())
    }
}

/// Lower end of the default scale range, `max(ρ, 2h)`.
pub fn scale_floor(grid: Grid3, rho: f64) -> Result<f64> {
    let lo = rho.max(2.0 * grid.spacing());
    if lo >= 1.0 {
        return Err(Error::ScaleRange(format!(
            "scale range [{lo}, 1] is empty on a grid with spacing {}",
            grid.spacing()
        )));
    }
    Ok(lo)
}

/// `count` geometrically spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Weights turning samples `g(r_i)^θ` into the log-trapezoid rule for
/// `∫ g(r)^θ dr = ∫ g^θ r d(ln r)`.
fn log_trapezoid_weights(scales: &[f64]) -> Vec<f64> {
    let m = scales.len();
    let mut w = vec![0.0; m];
    for i in 0..m.saturating_sub(1) {
        let du = (scales[i + 1] / scales[i]).ln();
        w[i] += 0.5 * du * scales[i];
        w[i + 1] += 0.5 * du * scales[i + 1];
    }
    w
}

/// Streaming `(Σ c_i v_i^θ)^{1/θ}` (or `max v_i` for `θ = ∞`) that stays
/// finite for very large `θ`.
#[derive(Clone, Copy)]
struct ThetaAcc {
    theta: f64,
    scale: f64,
    sum: f64,
}

impl ThetaAcc {
    fn new(theta: f64) -> Self {
        Self {
            theta,
            scale: 0.0,
            sum: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, v: f64, c: f64) {
        if self.theta.is_infinite() {
            self.scale = self.scale.max(v);
            return;
        }
        if v <= 0.0 || c <= 0.0 {
            return;
        }
        if v > self.scale {
            self.sum = self.sum * pow_theta(self.scale / v, self.theta) + c;
            self.scale = v;
        } else {
            self.sum += c * pow_theta(v / self.scale, self.theta);
        }
    }

    fn value(&self) -> f64 {
        if self.theta.is_infinite() || self.scale == 0.0 {
            self.scale
        } else {
            self.scale * self.sum.powf(1.0 / self.theta)
        }
    }
}

#[inline]
fn pow_theta(x: f64, theta: f64) -> f64 {
    if theta == 2.0 {
        x * x
    } else {
        x.powf(theta)
    }
}

/// Value of a norm together with where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub center: Voxel,
    /// Scale at which the weighted local norm peaks at `center`.
    pub r: f64,
}

/// Reduces weighted local norms `N_i` at the scale nodes to the `L^θ`
/// quasi-norm. Returns the value and the index of the largest term.
fn reduce_scales(params: &MorreyParams, coeff: &[f64], local: &[f64]) -> (f64, usize) {
    let w = &params.weight;
    let mut acc = ThetaAcc::new(w.theta);
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, (&r, &n)) in params.scales.iter().zip(local).enumerate() {
        let v = w.value(r) * n;
        acc.push(v, coeff[i]);
        if v > best.0 {
            best = (v, i);
        }
    }
    (acc.value(), best.1)
}

fn coefficients(params: &MorreyParams) -> Vec<f64> {
    if params.weight.theta.is_infinite() {
        vec![1.0; params.scales.len()]
    } else {
        log_trapezoid_weights(&params.scales)
    }
}

/// `∫_{B_r(x)} |f|^p` (Riemann sum) at increasing radii, by direct
/// accumulation over voxel shells.
pub(crate) fn ball_profile(pow: &[f64], grid: Grid3, center: Voxel, radii: &[f64]) -> Vec<f64> {
    let r_max = *radii.last().expect("non-empty radii");
    let h = grid.spacing();
    let vol = grid.voxel_volume();
    let mut out = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut next = 0;
    for (q, offs) in shells(grid, r_max) {
        while next < radii.len() && (q as f64) > (radii[next] / h).powi(2) * (1.0 + 1e-12) {
            out.push(acc * vol);
            next += 1;
        }
        for o in &offs {
            acc += pow[grid.index(grid.offset(center, *o))];
        }
    }
    while out.len() < radii.len() {
        out.push(acc * vol);
    }
    out
}

/// Local norm `‖w(r) ‖f‖_{L^p(B_r(center))}‖_{L^θ}` on the scale nodes.
pub fn lm_norm(f: &VectorField, params: &MorreyParams, center: Voxel) -> Result<f64> {
    let grid = f.grid();
    params.validate_for(grid)?;
    let pow = pow_magnitude(f, params.p);
    let inv = 1.0 / params.p;
    let local: Vec<f64> = ball_profile(&pow, grid, center, &params.scales)
        .into_iter()
        .map(|m| m.powf(inv))
        .collect();
    Ok(reduce_scales(params, &coefficients(params), &local).0)
}

/// Complementary local norm, with `‖f‖_{L^p(T³ \ B_r(center))}` in place of
/// the ball norm.
pub fn clm_norm(f: &VectorField, params: &MorreyParams, center: Voxel) -> Result<f64> {
    let grid = f.grid();
    params.validate_for(grid)?;
    let pow = pow_magnitude(f, params.p);
    let total: f64 = pow.iter().sum::<f64>() * grid.voxel_volume();
    let inv = 1.0 / params.p;
    let local: Vec<f64> = ball_profile(&pow, grid, center, &params.scales)
        .into_iter()
        .map(|m| (total - m).max(0.0).powf(inv))
        .collect();
    Ok(reduce_scales(params, &coefficients(params), &local).0)
}

/// Global norm: supremum of [`lm_norm`] over all voxel centers, computed
/// with one ball convolution per scale node.
pub fn gm_norm(f: &VectorField, params: &MorreyParams) -> Result<NormValue> {
    let grid = f.grid();
    params.validate_for(grid)?;
    let conv = BallConvolver::new(grid, &pow_magnitude(f, params.p));
    let coeff = coefficients(params);
    let vol = grid.voxel_volume();
    let inv = 1.0 / params.p;
    let w = params.weight;

    let mut acc = vec![ThetaAcc::new(w.theta); grid.len()];
    let mut peak = vec![(f64::NEG_INFINITY, 0u16); grid.len()];
    let root = |x: f64| if inv == 0.5 { x.sqrt() } else { x.powf(inv) };
    let mut fold = |i: usize, sums: &[f64]| {
        let wr = w.value(params.scales[i]);
        acc.par_iter_mut()
            .zip(peak.par_iter_mut())
            .zip(sums.par_iter())
            .for_each(|((a, pk), s)| {
                let v = wr * root(s * vol);
                a.push(v, coeff[i]);
                if v > pk.0 {
                    *pk = (v, i as u16);
                }
            });
    };
    let active: Vec<usize> = (0..params.scales.len())
        .filter(|&i| w.value(params.scales[i]) != 0.0)
        .collect();
    for chunk in active.chunks(2) {
        if let [i, j] = *chunk {
            let (a, b) = conv.sums_pair(params.scales[i], params.scales[j])?;
            fold(i, &a);
            fold(j, &b);
        } else {
            let i = chunk[0];
            fold(i, &conv.sums(params.scales[i])?);
        }
    }

    let (mut best, mut at) = (f64::NEG_INFINITY, 0);
    for (idx, a) in acc.iter().enumerate() {
        let v = a.value();
        if v > best {
            best = v;
            at = idx;
        }
    }
    Ok(NormValue {
        value: best.max(0.0),
        center: grid.voxel(at),
        r: params.scales[peak[at].1 as usize],
    })
}

/// `sup_{x, r ∈ [r_min, r_max]} r^{-α} ∫_{B_r(x)} |f|^p`, exact over the
/// continuum of radii: the ball integral only changes at the radii where a
/// new voxel shell enters, and `r^{-α}` decreases between them.
pub fn classical_morrey(
    f: &VectorField,
    p: f64,
    alpha: f64,
    r_min: f64,
    r_max: f64,
) -> Result<NormValue> {
    let grid = f.grid();
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must lie in [1, inf), got {p}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(r_min > 0.0 && r_min < r_max && r_max <= 1.0) {
        return Err(Error::param(format!(
            "need 0 < r_min < r_max <= 1, got [{r_min}, {r_max}]"
        )));
    }
    let radii = breakpoint_radii(grid, r_min, r_max);
    let factors: Vec<f64> = radii.iter().map(|r| r.powf(-alpha)).collect();
    let pow = pow_magnitude(f, p);

    let best = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let prof = ball_profile(&pow, grid, grid.voxel(idx), &radii);
            let mut b = (f64::NEG_INFINITY, 0);
            for (i, m) in prof.iter().enumerate() {
                let v = factors[i] * m;
                if v > b.0 {
                    b = (v, i);
                }
            }
            (b.0, idx, b.1)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, 0),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(NormValue {
        value: best.0,
        center: grid.voxel(best.1),
        r: radii[best.2],
    })
}

/// `r^{-α} ∫_{B_r(x)} |f|^p` at a single center and radius.
pub fn morrey_quantity(f: &VectorField, p: f64, alpha: f64, center: Voxel, r: f64) -> Result<f64> {
    let grid = f.grid();
    if !(r > 0.0 && r < grid.box_len() / 2.0) {
        return Err(Error::RadiusOutOfRange {
            r,
            lo: 0.0,
            hi: grid.box_len() / 2.0,
        });
    }
    let pow = pow_magnitude(f, p);
    Ok(r.powf(-alpha) * ball_profile(&pow, grid, center, &[r])[0])
}

/// JSON report for a computed norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: String,
    pub norm: f64,
    pub argmax_center: Voxel,
    pub argmax_r: f64,
    pub params: serde_json::Value,
    pub quadrature_nodes: usize,
}
