use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use morrey_sparse::grid::load_field;
use morrey_sparse::lemma_verify::{sweep, NormMode, SweepSpec, VerifyReport};
use morrey_sparse::morrey::{
    classical_morrey, clm_norm, gm_norm, lm_norm, scale_floor, MorreyParams, NormReport,
    WeightSpec,
};
use morrey_sparse::nse::{
    detect_escape_times, dissipation_scale, evaluate_criterion, solve_balance,
    BalanceParam, CriterionReport, CriterionSpec, FieldKind, InitialCondition, SolverConfig,
    Trajectory, WindowMode,
};
use morrey_sparse::sparseness::{
    admissible_pair, semi_mixed_all, set_label, superlevel_sets, z_alpha_member, PairLD,
    SparsenessReport, ZAlphaReport,
};
use morrey_sparse::{Error, Grid3, VectorField, Voxel};
use serde::Serialize;
use serde_json::json;

use crate::manifest::Recorder;
use crate::output::{num, write_csv, write_json};
use crate::{Failure, EXIT_COMPUTATION, EXIT_OK};

/// Accepts `inf`, `infinity` or a number.
fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("{s:?}: {e}")),
    }
}

fn parse_voxel(s: &str) -> Result<Voxel, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected i,j,k, got {s:?}"));
    }
    let mut v = [0usize; 3];
    for (slot, p) in v.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    }
    Ok(v)
}

fn parse_mode(s: &str) -> Result<NormMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_field_kind(s: &str) -> Result<FieldKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_window(s: &str) -> Result<WindowMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_balance(s: &str) -> Result<BalanceParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Input-file errors map to exit 3 whatever their cause.
fn load_input(path: &Path) -> Result<VectorField, Failure> {
    load_field(path).map_err(|e| match e {
        Error::Io(io) => Failure::input(format!("{}: {io}", path.display())),
        other => {
            let mut f = Failure::from(other);
            f.code = crate::EXIT_INPUT;
            f
        }
    })
}

fn check_voxel(grid: Grid3, v: Voxel) -> Result<Voxel, Failure> {
    if v.iter().any(|&i| i >= grid.n()) {
        return Err(Failure::usage(format!("center {v:?} outside a grid of n = {}", grid.n())));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Lm,
    Gm,
    Clm,
    Classical,
    All,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct NormArgs {
    /// Field file (.fld).
    #[arg(long)]
    field: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value = "inf", value_parser = parse_exponent)]
    theta: f64,
    /// Weight exponent of r^-nu.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Lower end of the weight support.
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    #[arg(long, value_enum, default_value_t = NormKind::Gm)]
    kind: NormKind,
    /// Center i,j,k for lm and clm (default 0,0,0).
    #[arg(long, value_parser = parse_voxel)]
    center: Option<Voxel>,
    /// Explicit scale nodes; otherwise log-spaced on [max(rho, 2h), 1].
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Exponent of r^-alpha in the classical quantity.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    r_max: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Scale node where `w(r) ‖f‖` (ball or complement) peaks at `center`.
fn peak_scale(
    f: &VectorField,
    params: &MorreyParams,
    center: Voxel,
    complement: bool,
) -> Result<f64, Failure> {
    let mut best = (f64::NEG_INFINITY, params.scales[0]);
    for &s in &params.scales {
        let w = WeightSpec {
            theta: f64::INFINITY,
            ..params.weight
        };
        let single = MorreyParams::new(params.p, w, vec![s])?;
        let v = if complement {
            clm_norm(f, &single, center)?
        } else {
            lm_norm(f, &single, center)?
        };
        if v > best.0 {
            best = (v, s);
        }
    }
    Ok(best.1)
}

pub fn norm(a: &NormArgs, config: Option<&Path>) -> Result<i32, Failure> {
    let mut rec = Recorder::new("norm", a, config)?;
    let weight = WeightSpec::new(a.nu, a.rho, a.theta)?;
    let f = load_input(&a.field)?;
    rec.input(&a.field)?;
    let grid = f.grid();
    let params = match &a.scales {
        Some(s) => MorreyParams::new(a.p, weight, s.clone())?,
        None => MorreyParams::with_default_scales(grid, a.p, weight)?,
    };
    let center = check_voxel(grid, a.center.unwrap_or([0, 0, 0]))?;
    let echo = json!({
        "p": a.p,
        "theta": if a.theta.is_infinite() { json!("inf") } else { json!(a.theta) },
        "nu": a.nu,
        "rho": a.rho,
        "scales": params.scales,
    });
    let kinds: Vec<NormKind> = match a.kind {
        NormKind::All => vec![NormKind::Lm, NormKind::Gm, NormKind::Clm, NormKind::Classical],
        k => vec![k],
    };

    let mut reports = Vec::new();
    for kind in kinds {
        let nodes = params.scales.len();
        let report = match kind {
            NormKind::Lm | NormKind::Clm => {
                let clm = kind == NormKind::Clm;
                let v = if clm {
                    clm_norm(&f, &params, center)?
                } else {
                    lm_norm(&f, &params, center)?
                };
                NormReport {
                    kind: if clm { "clm" } else { "lm" }.into(),
                    norm: v,
                    argmax_center: center,
                    argmax_r: peak_scale(&f, &params, center, clm)?,
                    params: echo.clone(),
                    quadrature_nodes: nodes,
                }
            }
            NormKind::Gm => {
                let v = gm_norm(&f, &params)?;
                NormReport {
                    kind: "gm".into(),
                    norm: v.value,
                    argmax_center: v.center,
                    argmax_r: v.r,
                    params: echo.clone(),
                    quadrature_nodes: nodes,
                }
            }
            NormKind::Classical => {
                let r_min = match a.r_min {
                    Some(r) => r,
                    None => scale_floor(grid, a.rho)?,
                };
                let v = classical_morrey(&f, a.p, a.alpha, r_min, a.r_max)?;
                NormReport {
                    kind: "classical".into(),
                    norm: v.value,
                    argmax_center: v.center,
                    argmax_r: v.r,
                    params: json!({"p": a.p, "alpha": a.alpha, "r_min": r_min, "r_max": a.r_max}),
                    quadrature_nodes: 0,
                }
            }
            NormKind::All => unreachable!(),
        };
        println!("{} {}", report.kind, num(report.norm));
        reports.push(report);
    }
    let body = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(&reports)?
    };
    rec.output(write_json(&a.out, "norm.json", &body)?);
    rec.finish(&a.out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SparsenessArgs {
    /// Print the admissible lambda for this delta and stop.
    #[arg(long)]
    pair_from_delta: Option<f64>,
    #[arg(long, required_unless_present = "pair_from_delta")]
    field: Option<PathBuf>,
    #[arg(long, required_unless_present = "pair_from_delta")]
    lambda: Option<f64>,
    #[arg(long, required_unless_present = "pair_from_delta")]
    delta: Option<f64>,
    #[arg(long, required_unless_present = "pair_from_delta")]
    r: Option<f64>,
    /// Also test Z_alpha membership with this alpha.
    #[arg(long)]
    z_alpha: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    c0: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Serialize)]
struct SparsenessOutput {
    pair: PairLD,
    sets: Vec<SparsenessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_alpha: Option<ZAlphaReport>,
}

pub fn sparseness(a: &SparsenessArgs, config: Option<&Path>) -> Result<i32, Failure> {
    let mut rec = Recorder::new("sparseness", a, config)?;
    if let Some(d) = a.pair_from_delta {
        let pair = admissible_pair(d)?;
        println!("{}", pair.lambda);
        rec.output(write_json(&a.out, "pair.json", &pair)?);
        rec.finish(&a.out)?;
        return Ok(EXIT_OK);
    }
    let (Some(path), Some(lambda), Some(delta), Some(r)) = (&a.field, a.lambda, a.delta, a.r)
    else {
        return Err(Failure::usage("--field, --lambda, --delta and --r are required"));
    };
    let pair = PairLD::new(lambda, delta)?;
    let f = load_input(path)?;
    rec.input(path)?;
    let sets = superlevel_sets(&f, lambda)?;
    let refs: Vec<_> = sets.iter().collect();
    let mixed = semi_mixed_all(&refs, r, delta)?;
    let reports: Vec<SparsenessReport> = mixed
        .iter()
        .enumerate()
        .map(|(k, m)| SparsenessReport {
            set: set_label(k),
            r,
            delta,
            max_density: m.max_density,
            witness: m.witness,
            ok: m.ok,
        })
        .collect();
    for s in &reports {
        println!("{} {} {}", s.set, num(s.max_density), s.ok);
    }
    let z_alpha = match a.z_alpha {
        Some(alpha) => {
            let z = z_alpha_member(&f, alpha, &pair, a.c0)?;
            println!("z_alpha {}", z.ok);
            Some(z)
        }
        None => None,
    };
    let out = SparsenessOutput {
        pair,
        sets: reports,
        z_alpha,
    };
    rec.output(write_json(&a.out, "sparseness.json", &out)?);
    rec.finish(&a.out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    /// Sweep spec (JSON); defaults apply to missing keys.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Append the constructed counterexample fields.
    #[arg(long)]
    adversarial: bool,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

const VERIFY_HEADER: [&str; 28] = [
    "lemma",
    "lambda",
    "delta",
    "r",
    "p",
    "theta",
    "alpha",
    "rho",
    "mode",
    "seed",
    "envelope",
    "adversarial",
    "premise_lhs",
    "premise_rhs",
    "premise_holds",
    "marginal",
    "conclusion_holds",
    "max_density",
    "conclusion_scale",
    "verdict",
    "degenerate",
    "non_vacuous",
    "d1p",
    "d1m",
    "d2p",
    "d2m",
    "d3p",
    "d3m",
];

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn verify_row(r: &VerifyReport) -> Vec<String> {
    let p = &r.params;
    let max = r.per_set_densities.iter().cloned().fold(0.0, f64::max);
    let mut row = vec![
        serde_json::to_value(p.lemma)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        num(p.lambda),
        num(p.delta),
        num(p.r),
        num(p.p),
        opt(p.theta),
        opt(p.alpha),
        opt(p.rho),
        p.mode.map(|m| m.to_string()).unwrap_or_default(),
        p.seed.map(|s| s.to_string()).unwrap_or_default(),
        opt(p.envelope),
        p.adversarial.to_string(),
        num(r.premise_lhs),
        num(r.premise_rhs),
        r.premise_holds.to_string(),
        r.marginal.to_string(),
        r.conclusion_holds.to_string(),
        num(max),
        num(r.conclusion_scale),
        r.verdict.to_string(),
        r.degenerate.to_string(),
        r.non_vacuous().to_string(),
    ];
    row.extend(r.per_set_densities.iter().map(|d| num(*d)));
    row
}

pub fn verify(a: &VerifyArgs, config: Option<&Path>) -> Result<i32, Failure> {
    let mut rec = Recorder::new("verify", a, config)?;
    let mut spec = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            rec.input(path)?;
            serde_json::from_str::<SweepSpec>(&text)
                .map_err(|e| Failure::usage(format!("malformed sweep spec: {e}")))?
        }
        None => SweepSpec::default(),
    };
    if a.adversarial {
        spec.adversarial = true;
    }
    if let Some(s) = a.seeds {
        spec.seeds = s;
    }
    let result = sweep(&spec)?;
    let s = &result.summary;
    println!(
        "reports {} non_vacuous {} violations {} marginal {} degenerate {} adversarial {}",
        s.total, s.non_vacuous, s.violations, s.marginal, s.degenerate, s.adversarial
    );
    rec.output(write_json(&a.out, "verify.json", &json!({"spec": spec, "result": result}))?);
    rec.output(write_csv(
        &a.out,
        "verify.csv",
        &VERIFY_HEADER,
        result.reports.iter().map(verify_row),
    )?);
    rec.finish(&a.out)?;
    Ok(if s.violations == 0 { EXIT_OK } else { EXIT_COMPUTATION })
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    /// shear, taylor-green, abc, random or zero.
    #[arg(long, default_value = "taylor-green")]
    ic: String,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Steps between snapshots.
    #[arg(long, default_value_t = 10)]
    snapshot_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sup norm of the random initial field.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Band edge of the random initial field.
    #[arg(long)]
    kmax: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub const SERIES_HEADER: [&str; 9] = [
    "t",
    "u_sup",
    "omega_sup",
    "energy",
    "enstrophy",
    "eta",
    "criterion_lhs",
    "criterion_rhs",
    "satisfied",
];

pub fn simulate(a: &SimulateArgs, config: Option<&Path>) -> Result<i32, Failure> {
    let mut rec = Recorder::new("simulate", a, config)?;
    let mut ic = InitialCondition::from_name(&a.ic)?;
    if let InitialCondition::Random { kmax, amplitude } = &mut ic {
        if let Some(k) = a.kmax {
            *kmax = k;
        }
        if let Some(m) = a.amplitude {
            *amplitude = m;
        }
    } else if a.kmax.is_some() || a.amplitude.is_some() {
        return Err(Failure::usage("--kmax and --amplitude apply to --ic random only"));
    }
    let mut cfg = SolverConfig::new(a.n, a.dt, a.t_end, ic, a.snapshot_every);
    cfg.seed = a.seed;
    let grid = cfg.grid()?;
    let traj = morrey_sparse::nse::simulate(&cfg)?;

    // eta with the default cutoff |w|^{-1/2}
    let spec = CriterionSpec::default();
    let mut rows = Vec::with_capacity(traj.series.len());
    for r in &traj.series {
        let eta = if r.omega_sup > 0.0 {
            num(dissipation_scale(r.omega_sup, spec.beta, spec.c, grid)?.eta)
        } else {
            String::new()
        };
        rows.push(vec![
            num(r.t),
            num(r.u_sup),
            num(r.omega_sup),
            num(r.energy),
            num(r.enstrophy),
            eta,
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    rec.output(write_csv(&a.out, "series.csv", &SERIES_HEADER, rows)?);
    for p in traj.save(&a.out)? {
        rec.output(p);
    }
    let last = traj.series.last().expect("series holds the initial row");
    println!(
        "t {} u_sup {} omega_sup {} snapshots {}",
        num(last.t),
        num(last.u_sup),
        num(last.omega_sup),
        traj.snapshots.len()
    );
    rec.finish(&a.out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct CriterionArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    traj: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    nu_w: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value = "inf", value_parser = parse_exponent)]
    theta: f64,
    /// Prefactor of the dissipation scale.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 2.0)]
    c0: f64,
    #[arg(long, default_value_t = 0.1)]
    eps0: f64,
    /// Measured field: u or omega.
    #[arg(long, default_value = "u", value_parser = parse_field_kind)]
    field_mode: FieldKind,
    /// velocity or vorticity.
    #[arg(long, default_value = "vorticity", value_parser = parse_window)]
    window_mode: WindowMode,
    /// curl or identity.
    #[arg(long, default_value = "curl", value_parser = parse_mode)]
    norm_mode: NormMode,
    /// beta1,beta2 of a mixed cutoff.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    mixed: Option<Vec<f64>>,
    /// Evaluation times; replaces escape-time detection.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Norm whose escape times are used.
    #[arg(long, default_value = "omega", value_parser = parse_field_kind)]
    escape: FieldKind,
    #[arg(long, default_value_t = 5)]
    max_times: usize,
    /// Solve the exponent balance for this parameter first.
    #[arg(long, value_parser = parse_balance)]
    solve: Option<BalanceParam>,
    /// Output directory (default: `criterion/` inside the trajectory).
    #[arg(long)]
    out: Option<PathBuf>,
}

const CRITERION_HEADER: [&str; 16] = [
    "t_escape",
    "window_lo",
    "window_hi",
    "s_star",
    "lhs",
    "rhs",
    "exponent",
    "satisfied",
    "eta",
    "eta_clipped",
    "witness_i",
    "witness_j",
    "witness_k",
    "witness_r",
    "evaluations",
    "all_satisfied",
];

fn criterion_row(r: &CriterionReport) -> Vec<String> {
    vec![
        num(r.t_escape),
        num(r.window[0]),
        num(r.window[1]),
        num(r.s_star),
        num(r.lhs),
        num(r.rhs),
        num(r.exponent),
        r.satisfied.to_string(),
        num(r.scale_window[0]),
        r.eta_clipped.to_string(),
        r.witness.center[0].to_string(),
        r.witness.center[1].to_string(),
        r.witness.center[2].to_string(),
        num(r.witness.r),
        r.evaluations.len().to_string(),
        r.evaluations.iter().all(|e| e.satisfied).to_string(),
    ]
}

pub fn criterion(a: &CriterionArgs, config: Option<&Path>) -> Result<i32, Failure> {
    let mut rec = Recorder::new("criterion", a, config)?;
    let mut spec = CriterionSpec {
        alpha: a.alpha,
        beta: a.beta,
        nu_w: a.nu_w,
        p: a.p,
        theta: a.theta,
        c: a.c,
        c0: a.c0,
        eps0: a.eps0,
        field_mode: a.field_mode,
        window_mode: a.window_mode,
        norm_mode: a.norm_mode,
        mixed: a.mixed.as_ref().map(|m| [m[0], m[1]]),
    };
    let mut solved = None;
    if let Some(param) = a.solve {
        let v = solve_balance(&spec, param)?;
        match param {
            BalanceParam::Alpha => spec.alpha = v,
            BalanceParam::Beta => spec.beta = v,
            BalanceParam::Nu => spec.nu_w = v,
            BalanceParam::P => spec.p = v,
        }
        println!("solved {} {}", serde_json::to_value(param)?.as_str().unwrap_or("?"), num(v));
        solved = Some(v);
    }
    spec.validate()?;

    let meta = a.traj.join("trajectory.json");
    if !meta.exists() {
        return Err(Failure::input(format!("{} not found", meta.display())));
    }
    let traj = Trajectory::load(&a.traj).map_err(|e| match e {
        Error::Io(io) => Failure::input(format!("{}: {io}", a.traj.display())),
        Error::Json(j) => Failure::input(format!("{}: {j}", meta.display())),
        other => other.into(),
    })?;
    rec.input(&meta)?;

    let (times, source) = match &a.at {
        Some(t) => (t.clone(), "at"),
        None => {
            let mut t = detect_escape_times(&traj.series, a.escape);
            t.truncate(a.max_times);
            if t.is_empty() {
                // no escape time: start of the run
                (vec![traj.series[0].t], "start")
            } else {
                (t, "escape")
            }
        }
    };
    let mut reports = Vec::new();
    for &t in &times {
        let r = evaluate_criterion(&traj, t, &spec)?;
        println!(
            "t {} s_star {} lhs {} rhs {} satisfied {}",
            num(r.t_escape),
            num(r.s_star),
            num(r.lhs),
            num(r.rhs),
            r.satisfied
        );
        reports.push(r);
    }
    let out = a.out.clone().unwrap_or_else(|| a.traj.join("criterion"));
    rec.output(write_json(
        &out,
        "criterion.json",
        &json!({"times_from": source, "solved": solved, "reports": reports}),
    )?);
    rec.output(write_csv(
        &out,
        "criterion.csv",
        &CRITERION_HEADER,
        reports.iter().map(criterion_row),
    )?);
    rec.finish(&out)?;
    Ok(EXIT_OK)
}
