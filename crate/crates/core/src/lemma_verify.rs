//! Implication checks for the two sparseness lemmas on field ensembles.
//!
//! Each check compares a premise (a local norm bound) against a conclusion
//! (all six super-level sets semi-mixed) and reports the implication.

use std::collections::HashMap;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{displacement, gaussian_envelope, random_solenoidal, rng};
use crate::grid::spectral::{
    biot_savart_spectral, forward_vector, inverse_vector, lowpass_spectral, project_spectral,
};
use crate::grid::{curl, sup_norm, BallConvolver, BallKernel, Grid3, MaskConvolver, VectorField, Voxel};
use crate::morrey::{conjugate, gm_norm, MorreyParams, WeightSpec};
use crate::sparseness::{
    admissible_pair, cstar, eps_const, kappa, superlevel_sets, PairLD, BUMP_CAL, MAX_LEMMA_SCALE,
};

/// Relative guard band on premise comparisons.
pub const GUARD_BAND: f64 = 0.05;

/// Largest `ρ` accepted by [`check_lemma_gm`].
pub const MAX_RHO: f64 = 0.915_771_394_042_665_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    Curl,
    Identity,
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curl" => Ok(Self::Curl),
            "identity" => Ok(Self::Identity),
            _ => Err(Error::param(format!("unknown norm mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for NormMode {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(match self {
            Self::Curl => "curl",
            Self::Identity => "identity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaKind {
    L2,
    Gm,
}

/// Echo of the parameters a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub lemma: LemmaKind,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub p: f64,
    #[serde(with = "crate::serde_ext::opt", default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub mode: Option<NormMode>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Envelope radius of an ensemble field.
    #[serde(default)]
    pub envelope: Option<f64>,
    #[serde(default)]
    pub adversarial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub premise_lhs: f64,
    pub premise_rhs: f64,
    /// `lhs <= (1 - GUARD_BAND) * rhs`.
    pub premise_holds: bool,
    /// Premise holds, but by less than the guard band.
    pub marginal: bool,
    pub conclusion_holds: bool,
    /// Worst density of each super-level set, order `1+, 1-, 2+, 2-, 3+, 3-`.
    pub per_set_densities: [f64; 6],
    /// Ball radius used for the conclusion.
    pub conclusion_scale: f64,
    pub params: VerifyParams,
    pub verdict: bool,
    pub degenerate: bool,
}

impl VerifyReport {
    fn new(lhs: f64, rhs: f64, densities: [f64; 6], scale: f64, params: VerifyParams) -> Self {
        let premise_holds = lhs <= (1.0 - GUARD_BAND) * rhs;
        let conclusion_holds = densities.iter().all(|&d| d <= params.delta);
        Self {
            premise_lhs: lhs,
            premise_rhs: rhs,
            premise_holds,
            marginal: !premise_holds && lhs <= rhs,
            conclusion_holds,
            per_set_densities: densities,
            conclusion_scale: scale,
            verdict: !premise_holds || conclusion_holds,
            params,
            degenerate: false,
        }
    }

    fn degenerate(scale: f64, params: VerifyParams) -> Self {
        Self {
            premise_lhs: 0.0,
            premise_rhs: 0.0,
            premise_holds: true,
            marginal: false,
            conclusion_holds: true,
            per_set_densities: [0.0; 6],
            conclusion_scale: scale,
            params,
            verdict: true,
            degenerate: true,
        }
    }

    /// True when the premise held outside the guard band.
    pub fn non_vacuous(&self) -> bool {
        self.premise_holds && !self.degenerate
    }
}

/// Densities of the six super-level sets of one field at one threshold,
/// with the mask transforms shared across radii.
struct LevelSets {
    conv: Option<MaskConvolver>,
    live: Vec<usize>,
}

impl LevelSets {
    fn new(g: &VectorField, lambda: f64) -> Result<Self> {
        let sets = superlevel_sets(g, lambda)?;
        let live: Vec<usize> = (0..6).filter(|&k| !sets[k].is_empty()).collect();
        let masks: Vec<&[bool]> = live.iter().map(|&k| sets[k].mask()).collect();
        let conv = (!masks.is_empty()).then(|| MaskConvolver::new(g.grid(), &masks));
        Ok(Self { conv, live })
    }

    fn densities(&self, grid: Grid3, r: f64) -> Result<[f64; 6]> {
        let total = BallKernel::cached(grid, r)?.voxel_count() as f64;
        let mut out = [0.0; 6];
        if let Some(conv) = &self.conv {
            for (k, c) in self.live.iter().zip(conv.counts(r)?) {
                out[*k] = c.iter().copied().max().unwrap_or(0) as f64 / total;
            }
        }
        Ok(out)
    }
}

fn check_r(r: f64, hi: f64) -> Result<()> {
    if !(r > 0.0 && r <= hi) {
        return Err(Error::RadiusOutOfRange { r, lo: 0.0, hi });
    }
    Ok(())
}

fn l2_params(pair: &PairLD, r: f64) -> VerifyParams {
    VerifyParams {
        lemma: LemmaKind::L2,
        lambda: pair.lambda,
        delta: pair.delta,
        r,
        p: 2.0,
        theta: None,
        alpha: None,
        rho: None,
        mode: None,
        seed: None,
        envelope: None,
        adversarial: false,
    }
}

/// `max_x ‖f‖_{L²(B_r(x))}` for each radius.
fn max_ball_l2(f: &VectorField, radii: &[f64]) -> Result<Vec<f64>> {
    let grid = f.grid();
    let sq: Vec<f64> = (0..grid.len())
        .map(|i| (0..3).map(|c| f.component(c)[i].powi(2)).sum())
        .collect();
    let conv = BallConvolver::new(grid, &sq);
    radii
        .iter()
        .map(|&r| {
            let s = conv.sums(r)?;
            Ok((s.iter().fold(0.0f64, |a, &b| a.max(b)) * grid.voxel_volume()).sqrt())
        })
        .collect()
}

/// Premise `sup_x ‖f‖_{L²(B_r(x))} ≤ c* r^{5/2} ‖∇×f‖_∞`, conclusion: the
/// six super-level sets of `∇×f` at `λ` are `(κr)`-semi-mixed with ratio `δ`.
pub fn check_lemma_l2(f: &VectorField, pair: &PairLD, r: f64) -> Result<VerifyReport> {
    check_r(r, 1.0)?;
    let scale = kappa(pair)? * r;
    let c = cstar(pair, BUMP_CAL)?;
    let omega = curl(f);
    let params = l2_params(pair, r);
    let w = sup_norm(&omega);
    if w == 0.0 {
        return Ok(VerifyReport::degenerate(scale, params));
    }
    let lhs = max_ball_l2(f, &[r])?[0];
    let rhs = c * r.powf(2.5) * w;
    let dens = LevelSets::new(&omega, pair.lambda)?.densities(f.grid(), scale)?;
    Ok(VerifyReport::new(lhs, rhs, dens, scale, params))
}

/// Weight, Morrey parameters and premise right-hand-side factor
/// `ε (r∨ρ)^e r^K` of the Morrey-type lemma.
struct GmSetup {
    params: MorreyParams,
    factor: f64,
}

fn gm_setup(
    grid: Grid3,
    pair: &PairLD,
    p: f64,
    theta: f64,
    alpha: f64,
    rho: f64,
    r: f64,
    mode: NormMode,
) -> Result<GmSetup> {
    check_r(r, MAX_LEMMA_SCALE)?;
    if !(rho >= 0.0 && rho <= MAX_RHO) {
        return Err(Error::param(format!("rho must lie in [0, {MAX_RHO}], got {rho}")));
    }
    let eps = eps_const(pair, p, theta, alpha)?;
    let weight = WeightSpec::new(alpha, rho, theta)?;
    let params = if theta.is_infinite() {
        MorreyParams::with_breakpoint_scales(grid, p, weight)?
    } else {
        MorreyParams::with_default_scales(grid, p, weight)?
    };
    let e = if theta.is_infinite() {
        -alpha
    } else {
        (1.0 - alpha * theta) / theta
    };
    let inv_pc = 1.0 / conjugate(p);
    let k = match mode {
        NormMode::Curl => 4.0 - 3.0 * inv_pc,
        NormMode::Identity => 3.0 - 3.0 * inv_pc,
    };
    Ok(GmSetup {
        params,
        factor: eps * r.max(rho).powf(e) * r.powf(k),
    })
}

fn gm_params(
    pair: &PairLD,
    p: f64,
    theta: f64,
    alpha: f64,
    rho: f64,
    r: f64,
    mode: NormMode,
) -> VerifyParams {
    VerifyParams {
        lemma: LemmaKind::Gm,
        lambda: pair.lambda,
        delta: pair.delta,
        r,
        p,
        theta: Some(theta),
        alpha: Some(alpha),
        rho: Some(rho),
        mode: Some(mode),
        seed: None,
        envelope: None,
        adversarial: false,
    }
}

/// Premise `GM(f) ≤ ε (r∨ρ)^{(1-αθ)/θ} r^K ‖g‖_∞` with `g = ∇×f`,
/// `K = 4 - 3/p'` (curl mode) or `g = f`, `K = 3 - 3/p'` (identity mode);
/// the `θ = ∞` branch uses `(r∨ρ)^{-α}`. Conclusion: the six super-level
/// sets of `g` are `r`-semi-mixed with ratio `δ`.
#[allow(clippy::too_many_arguments)]
pub fn check_lemma_gm(
    f: &VectorField,
    pair: &PairLD,
    p: f64,
    theta: f64,
    alpha: f64,
    rho: f64,
    r: f64,
    mode: NormMode,
) -> Result<VerifyReport> {
    let grid = f.grid();
    let setup = gm_setup(grid, pair, p, theta, alpha, rho, r, mode)?;
    let params = gm_params(pair, p, theta, alpha, rho, r, mode);
    let g = match mode {
        NormMode::Curl => curl(f),
        NormMode::Identity => f.clone(),
    };
    let gs = sup_norm(&g);
    if gs == 0.0 {
        return Ok(VerifyReport::degenerate(r, params));
    }
    let lhs = gm_norm(f, &setup.params)?.value;
    let dens = LevelSets::new(&g, pair.lambda)?.densities(grid, r)?;
    Ok(VerifyReport::new(lhs, setup.factor * gs, dens, r, params))
}

/// A counterexample field and the voxel on its vortex-tube axis.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub field: VectorField,
    pub center: Voxel,
}

/// Velocity of a straight vortex tube along x through the grid center.
/// The vorticity `(g(y, z) - mean, 0, 0)` has a plateau covering
/// `B_{κr}` around every axis point, so `S^{1,+}` fills those balls.
pub fn counterexample(r: f64, pair: &PairLD, grid: Grid3) -> Result<Counterexample> {
    let h = grid.spacing();
    let kr = kappa(pair)? * r;
    if kr < 4.0 * h {
        return Err(Error::param(format!(
            "kappa * r = {kr} is below four grid spacings ({})",
            4.0 * h
        )));
    }
    let plateau = kr + 2.0 * h;
    if plateau + 4.0 * h >= grid.box_len() / 2.0 {
        return Err(Error::RadiusOutOfRange {
            r,
            lo: 4.0 * h,
            hi: grid.box_len() / 2.0,
        });
    }
    let mid = grid.n() / 2;
    let center = [mid, mid, mid];
    let axis = grid.position(center);
    let omega = VectorField::from_fn(grid, |x| {
        let d = displacement(grid, x, axis);
        let rad = (d[1] * d[1] + d[2] * d[2]).sqrt();
        [0.5 * (1.0 - ((rad - plateau) / h).tanh()), 0.0, 0.0]
    });
    let mut s = forward_vector(&omega);
    s[0][0] = Complex64::default();
    lowpass_spectral(grid, &mut s, grid.n() as f64 / 3.0);
    let field = inverse_vector(grid, biot_savart_spectral(grid, &s));
    Ok(Counterexample { field, center })
}

pub fn counterexample_field(r: f64, pair: &PairLD, grid: Grid3) -> Result<VectorField> {
    Ok(counterexample(r, pair, grid)?.field)
}

/// One Morrey-type lemma configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmCase {
    pub p: f64,
    #[serde(with = "crate::serde_ext")]
    pub theta: f64,
    pub alpha: f64,
    pub rho: f64,
}

fn default_box() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub n: usize,
    #[serde(default = "default_box")]
    pub box_len: f64,
    /// `δ` values, each turned into its admissible pair.
    pub deltas: Vec<f64>,
    /// Explicit `(λ, δ)` pairs.
    pub pairs: Vec<[f64; 2]>,
    pub scales: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    /// Target premise ratio `lhs / rhs` for ensemble fields.
    pub margin: f64,
    pub l2: bool,
    pub gm: Vec<GmCase>,
    pub modes: Vec<NormMode>,
    /// Upper band edge as a fraction of `n`.
    pub band: f64,
    /// Number of envelope radii tried per seed.
    pub envelopes: usize,
    pub adversarial: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n: 64,
            box_len: default_box(),
            deltas: vec![0.7, 0.75, 0.85],
            pairs: Vec::new(),
            scales: vec![0.1, 0.2, 0.4, 0.8],
            seeds: 20,
            base_seed: 0,
            margin: 0.9,
            l2: true,
            gm: Vec::new(),
            modes: vec![NormMode::Curl, NormMode::Identity],
            band: 0.45,
            envelopes: 8,
            adversarial: false,
        }
    }
}

impl SweepSpec {
    pub fn resolved_pairs(&self) -> Result<Vec<PairLD>> {
        let mut out = Vec::new();
        for &d in &self.deltas {
            out.push(admissible_pair(d)?);
        }
        for &[l, d] in &self.pairs {
            out.push(PairLD::new(l, d)?);
        }
        Ok(out)
    }

    fn validate(&self) -> Result<Grid3> {
        let grid = Grid3::new(self.n, self.box_len)?;
        if !(self.margin > 0.0 && self.margin <= 1.0 - GUARD_BAND) {
            return Err(Error::param(format!(
                "margin must lie in (0, {}], got {}",
                1.0 - GUARD_BAND,
                self.margin
            )));
        }
        if !(self.band > 0.0 && self.band <= 0.5) {
            return Err(Error::param(format!("band must lie in (0, 0.5], got {}", self.band)));
        }
        if self.envelopes == 0 {
            return Err(Error::param("need at least one envelope radius"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub total: usize,
    pub non_vacuous: usize,
    pub violations: usize,
    pub marginal: usize,
    pub degenerate: usize,
    pub adversarial: usize,
}

impl SweepSummary {
    pub fn of(reports: &[VerifyReport]) -> Self {
        let count = |p: &dyn Fn(&VerifyReport) -> bool| reports.iter().filter(|r| p(r)).count();
        Self {
            total: reports.len(),
            non_vacuous: count(&|r| r.non_vacuous()),
            violations: count(&|r| !r.verdict),
            marginal: count(&|r| r.marginal),
            degenerate: count(&|r| r.degenerate),
            adversarial: count(&|r| r.params.adversarial),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<VerifyReport>,
    pub summary: SweepSummary,
}

/// One ensemble member: a localized solenoidal field `u` and its
/// Biot–Savart velocity `v` (so `∇ × v = u`).
struct Member {
    envelope: f64,
    u: VectorField,
    v: VectorField,
    u_sup: f64,
}

impl Member {
    fn new(base: &VectorField, center: [f64; 3], a: f64, kmax: f64) -> Self {
        let grid = base.grid();
        let env = gaussian_envelope(grid, center, a);
        let mut s = forward_vector(&crate::fields::modulate(base, &env));
        for c in s.iter_mut() {
            c[0] = Complex64::default();
        }
        project_spectral(grid, &mut s);
        lowpass_spectral(grid, &mut s, kmax);
        let vs = biot_savart_spectral(grid, &s);
        let u = inverse_vector(grid, s);
        let v = inverse_vector(grid, vs);
        let u_sup = sup_norm(&u);
        Self {
            envelope: a,
            u,
            v,
            u_sup,
        }
    }

    /// Field whose norm enters the premise, and field whose level sets
    /// enter the conclusion.
    fn fields(&self, mode: NormMode) -> (&VectorField, &VectorField) {
        match mode {
            NormMode::Curl => (&self.v, &self.u),
            NormMode::Identity => (&self.u, &self.u),
        }
    }
}

#[derive(Clone, Copy)]
enum Combo {
    L2 { pair: usize, r: usize },
    Gm { pair: usize, case: usize, mode: NormMode, r: usize },
}

/// Premise ratios `lhs / rhs` of one member for every combination.
fn member_ratios(
    m: &Member,
    combos: &[Combo],
    alive: &[bool],
    pairs: &[PairLD],
    scales: &[f64],
    gm_setups: &HashMap<(usize, usize, usize, NormMode), GmSetup>,
    l2_lhs: impl Fn(&Member) -> Result<Vec<f64>>,
) -> Result<Vec<Option<(f64, f64)>>> {
    let l2 = if combos
        .iter()
        .zip(alive)
        .any(|(c, &a)| a && matches!(c, Combo::L2 { .. }))
    {
        l2_lhs(m)?
    } else {
        Vec::new()
    };
    let mut gm_cache: HashMap<(usize, NormMode), f64> = HashMap::new();
    let mut out = Vec::with_capacity(combos.len());
    for (c, &a) in combos.iter().zip(alive) {
        if !a {
            out.push(None);
            continue;
        }
        let (lhs, rhs) = match *c {
            Combo::L2 { pair, r } => {
                let rr = scales[r];
                (l2[r], cstar(&pairs[pair], BUMP_CAL)? * rr.powf(2.5) * m.u_sup)
            }
            Combo::Gm { pair, case, mode, r } => {
                let setup = &gm_setups[&(pair, case, r, mode)];
                let lhs = match gm_cache.get(&(case, mode)) {
                    Some(v) => *v,
                    None => {
                        let v = gm_norm(m.fields(mode).0, &setup.params)?.value;
                        gm_cache.insert((case, mode), v);
                        v
                    }
                };
                (lhs, setup.factor * m.u_sup)
            }
        };
        out.push(Some((lhs, rhs)));
    }
    Ok(out)
}

fn sweep_seed(
    spec: &SweepSpec,
    grid: Grid3,
    pairs: &[PairLD],
    combos: &[Combo],
    gm_setups: &HashMap<(usize, usize, usize, NormMode), GmSetup>,
    seed: u64,
) -> Result<Vec<VerifyReport>> {
    let h = grid.spacing();
    let kmax = spec.band * grid.n() as f64;
    let base = random_solenoidal(grid, 0.5 * kmax, kmax, seed);
    let mut r = rng(seed ^ 0x5eed_c0de);
    let center = grid.position([
        r.random_range(0..grid.n()),
        r.random_range(0..grid.n()),
        r.random_range(0..grid.n()),
    ]);
    let (a_lo, a_hi) = (0.5 * h, 1.0f64);
    let radii: Vec<f64> = (0..spec.envelopes)
        .map(|i| {
            if spec.envelopes == 1 {
                a_lo
            } else {
                a_lo * (a_hi / a_lo).powf(i as f64 / (spec.envelopes - 1) as f64)
            }
        })
        .collect();

    let l2_lhs = |m: &Member| max_ball_l2(&m.v, &spec.scales);
    let mut members: Vec<Member> = Vec::new();
    let mut ratios: Vec<Vec<Option<(f64, f64)>>> = Vec::new();
    let mut chosen: Vec<Option<usize>> = vec![None; combos.len()];
    let mut alive = vec![true; combos.len()];
    for &a in &radii {
        let m = Member::new(&base, center, a, kmax);
        let rt = member_ratios(&m, combos, &alive, pairs, &spec.scales, gm_setups, l2_lhs)?;
        let idx = members.len();
        for (c, q) in rt.iter().enumerate() {
            alive[c] = matches!(q, Some((lhs, rhs)) if *lhs <= spec.margin * rhs);
            if alive[c] {
                chosen[c] = Some(idx);
            }
        }
        members.push(m);
        ratios.push(rt);
        if !alive.contains(&true) {
            break;
        }
    }

    let mut level_sets: HashMap<(usize, NormMode, usize), LevelSets> = HashMap::new();
    let mut out = Vec::with_capacity(combos.len());
    for (c, combo) in combos.iter().enumerate() {
        let mi = chosen[c].unwrap_or(0);
        let m = &members[mi];
        let (lhs, rhs) = ratios[mi][c].expect("ratio evaluated for the chosen member");
        let (pair, mode, scale, mut params) = match *combo {
            Combo::L2 { pair, r } => {
                let p = &pairs[pair];
                let rr = spec.scales[r];
                (pair, NormMode::Curl, kappa(p)? * rr, l2_params(p, rr))
            }
            Combo::Gm { pair, case, mode, r } => {
                let g = spec.gm[case];
                let rr = spec.scales[r];
                (pair, mode, rr, gm_params(&pairs[pair], g.p, g.theta, g.alpha, g.rho, rr, mode))
            }
        };
        params.seed = Some(seed);
        params.envelope = Some(m.envelope);
        if m.u_sup == 0.0 {
            out.push(VerifyReport::degenerate(scale, params));
            continue;
        }
        let key = (mi, mode, pair);
        if !level_sets.contains_key(&key) {
            level_sets.insert(key, LevelSets::new(m.fields(mode).1, pairs[pair].lambda)?);
        }
        let dens = level_sets[&key].densities(grid, scale)?;
        out.push(VerifyReport::new(lhs, rhs, dens, scale, params));
    }
    Ok(out)
}

/// Runs every `(pair, scale, case, mode)` combination on `seeds` ensemble
/// fields. Each field is a random band-limited solenoidal field localized
/// by a Gaussian envelope. Envelopes are tried from narrow to wide and a
/// combination drops out at its first envelope with premise ratio above
/// `margin`; the last qualifying envelope is used, or the narrowest one when
/// none qualifies (the report is then vacuous).
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let grid = spec.validate()?;
    let pairs = spec.resolved_pairs()?;
    let mut combos = Vec::new();
    let mut gm_setups = HashMap::new();
    for pair in 0..pairs.len() {
        for r in 0..spec.scales.len() {
            if spec.l2 {
                check_r(spec.scales[r], 1.0)?;
                combos.push(Combo::L2 { pair, r });
            }
            for (case, g) in spec.gm.iter().enumerate() {
                for &mode in &spec.modes {
                    let setup = gm_setup(
                        grid,
                        &pairs[pair],
                        g.p,
                        g.theta,
                        g.alpha,
                        g.rho,
                        spec.scales[r],
                        mode,
                    )?;
                    gm_setups.insert((pair, case, r, mode), setup);
                    combos.push(Combo::Gm { pair, case, mode, r });
                }
            }
        }
    }

    let mut reports = Vec::new();
    if !combos.is_empty() {
        let per_seed: Vec<Result<Vec<VerifyReport>>> = (0..spec.seeds as u64)
            .into_par_iter()
            .map(|i| sweep_seed(spec, grid, &pairs, &combos, &gm_setups, spec.base_seed + i))
            .collect();
        for r in per_seed {
            reports.extend(r?);
        }
    }

    if spec.adversarial {
        for pair in &pairs {
            for &r in &spec.scales {
                let Ok(cx) = counterexample(r, pair, grid) else {
                    continue;
                };
                let mut rep = check_lemma_l2(&cx.field, pair, r)?;
                rep.params.adversarial = true;
                reports.push(rep);
            }
        }
    }
    let summary = SweepSummary::of(&reports);
    Ok(SweepResult { reports, summary })
}
