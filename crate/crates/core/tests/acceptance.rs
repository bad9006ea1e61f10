//! One pass/fail line per acceptance criterion.

mod common;

use std::time::Instant;

use common::{dilate, gm_oracle, holder_max, predual_slope, rel};
use morrey_sparse::fields::{random_band_limited, rng};
use morrey_sparse::grid::spectral::max_divergence;
use morrey_sparse::grid::{ball_lp_bruteforce, sliding_ball_lp};
use morrey_sparse::lemma_verify::{check_lemma_l2, counterexample, sweep, GmCase, NormMode, SweepSpec};
use morrey_sparse::morrey::{classical_morrey, gm_norm, morrey_quantity, MorreyParams, WeightSpec};
use morrey_sparse::nse::{
    criterion_exponent, evaluate_criterion, simulate, CriterionSpec, InitialCondition, SolverConfig,
};
use morrey_sparse::preduality::HOLDER_CONSTANT;
use morrey_sparse::sparseness::{admissible_pair, kappa, semi_mixed, superlevel_sets, PairLD};
use morrey_sparse::{curl, Grid3};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn l2_suite() -> Outcome {
    let spec = SweepSpec {
        n: 64,
        deltas: vec![0.7, 0.75, 0.85],
        scales: vec![0.1, 0.2, 0.4, 0.8],
        seeds: 200,
        ..SweepSpec::default()
    };
    let res = sweep(&spec).unwrap();
    let s = &res.summary;
    outcome(
        s.violations == 0,
        format!(
            "{} reports, {} violations, {} non-vacuous, {} marginal",
            s.total, s.violations, s.non_vacuous, s.marginal
        ),
    )
}

fn gm_suite() -> Outcome {
    let spec = SweepSpec {
        n: 48,
        deltas: vec![0.85],
        pairs: vec![[0.9, 0.98]],
        scales: vec![0.4, 0.8],
        seeds: 100,
        l2: false,
        gm: vec![
            GmCase { p: 2.0, theta: 2.0, alpha: 1.0, rho: 0.3 },
            GmCase { p: 2.0, theta: f64::INFINITY, alpha: 0.5, rho: 0.3 },
        ],
        modes: vec![NormMode::Curl, NormMode::Identity],
        ..SweepSpec::default()
    };
    let res = sweep(&spec).unwrap();
    let s = &res.summary;
    outcome(
        s.violations == 0,
        format!(
            "{} reports, {} violations, {} non-vacuous, {} marginal",
            s.total, s.violations, s.non_vacuous, s.marginal
        ),
    )
}

fn counterexamples() -> Outcome {
    let g = Grid3::periodic(64).unwrap();
    let mut bad = 0;
    let mut count = 0;
    for delta in [0.7, 0.75, 0.8, 0.85] {
        let pair = admissible_pair(delta).unwrap();
        let k = kappa(&pair).unwrap();
        for r in [0.5, 0.6, 0.7, 0.8, 0.9] {
            let ce = counterexample(r, &pair, g).unwrap();
            let sets = superlevel_sets(&curl(&ce.field), pair.lambda).unwrap();
            let mixed = semi_mixed(&sets[0], k * r, pair.delta).unwrap().ok;
            let premise = check_lemma_l2(&ce.field, &pair, r).unwrap().premise_holds;
            count += 1;
            if mixed || premise {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{count} fields, {bad} not counterexamples"))
}

fn oracles() -> Outcome {
    let g = Grid3::periodic(16).unwrap();
    let mut r = rng(77);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let f = random_band_limited(g, 4.0, 100 + case);
        let p = 1.0 + 3.0 * r.random::<f64>();
        let rad = 0.4 + 1.2 * r.random::<f64>();
        let fast = sliding_ball_lp(&f, p, rad).unwrap();
        for i in 0..g.len() {
            let b = ball_lp_bruteforce(&f, p, g.voxel(i), rad).unwrap();
            worst = worst.max(rel(fast.data()[i], b));
        }
    }
    let mut worst_gm: f64 = 0.0;
    for (seed, theta) in [(1, 2.0), (2, 3.0), (3, f64::INFINITY)] {
        let f = random_band_limited(g, 4.0, seed);
        let params =
            MorreyParams::with_default_scales(g, 2.0, WeightSpec::new(0.5, 0.3, theta).unwrap())
                .unwrap();
        let gm = gm_norm(&f, &params).unwrap().value;
        worst_gm = worst_gm.max(rel(gm, gm_oracle(&f, &params)));
    }
    outcome(
        worst <= 1e-10 && worst_gm <= 1e-9,
        format!("ball L^p max rel {worst:.2e}, gm max rel {worst_gm:.2e}"),
    )
}

fn pair_anchor() -> Outcome {
    let p: PairLD = admissible_pair(0.75).unwrap();
    let res = (p.lambda * p.h + (1.0 - p.h) - 2.0 * p.lambda).abs();
    outcome(
        p.lambda > 1.0 / 3.0 && p.lambda < 1.0 && res <= 1e-12,
        format!("lambda {:.7}, h {:.7}, residual {res:.1e}", p.lambda, p.h),
    )
}

fn exponent_anchor() -> Outcome {
    let e = criterion_exponent(&CriterionSpec::default()).unwrap();
    outcome(e.abs() <= 1e-15, format!("exponent {e:e}"))
}

fn solver() -> Outcome {
    let shear = simulate(&SolverConfig::new(32, 1e-3, 1.0, InitialCondition::Shear, 100)).unwrap();
    let last = shear.series.last().unwrap();
    let err = (last.u_sup - (-1f64).exp()).abs() / (-1f64).exp();
    let tg = simulate(&SolverConfig::new(32, 5e-3, 1.0, InitialCondition::TaylorGreen, 20)).unwrap();
    let decreasing = tg.series.windows(2).all(|w| w[1].energy < w[0].energy);
    let mut rnd = SolverConfig::new(
        32,
        5e-3,
        0.25,
        InitialCondition::Random { kmax: 8.0, amplitude: 2.0 },
        10,
    );
    rnd.seed = 5;
    let rnd = simulate(&rnd).unwrap();
    let div = [&shear, &tg, &rnd]
        .iter()
        .flat_map(|t| t.snapshots.iter().map(|s| max_divergence(&s.u)))
        .fold(0.0, f64::max);
    outcome(
        err <= 1e-6 && div <= 1e-10 && decreasing,
        format!("shear rel err {err:.2e} at t=1, max divergence {div:.2e}, TG energy decreasing: {decreasing}"),
    )
}

fn criterion_consistency() -> Outcome {
    let traj =
        simulate(&SolverConfig::new(32, 5e-3, 0.3, InitialCondition::TaylorGreen, 2)).unwrap();
    let rep = evaluate_criterion(&traj, 0.0, &CriterionSpec::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for ev in rep.evaluations.iter().take(10) {
        let snap = traj.snapshots.iter().find(|s| s.t == ev.t).unwrap();
        let q = classical_morrey(&snap.u, 2.0, 1.0, ev.eta, 1.0).unwrap().value;
        worst = worst.max(rel(ev.lhs * ev.lhs, q));
        used += 1;
    }
    outcome(
        used == 10 && worst <= 1e-9,
        format!("{used} snapshots, max rel {worst:.2e}"),
    )
}

fn scaling() -> Outcome {
    let g = Grid3::periodic(16).unwrap();
    let mut r = rng(31);
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let f = random_band_limited(g, 4.0, 500 + seed);
        let f2 = dilate(&f);
        for _ in 0..3 {
            let x = [r.random_range(0..32), r.random_range(0..32), r.random_range(0..32)];
            let rad = 0.2 + 0.6 * r.random::<f64>();
            let fine = morrey_quantity(&f2, 2.0, 1.0, x, rad).unwrap();
            let coarse =
                morrey_quantity(&f, 2.0, 1.0, [x[0] % 16, x[1] % 16, x[2] % 16], 2.0 * rad).unwrap();
            worst = worst.max(rel(fine, coarse));
        }
    }
    outcome(worst <= 1e-6, format!("10 fields, max rel {worst:.2e}"))
}

fn holder() -> Outcome {
    let ratio = holder_max(1000..1050);
    let (slope, expected) = predual_slope();
    outcome(
        ratio <= HOLDER_CONSTANT && (slope - expected).abs() <= 0.1,
        format!(
            "max ratio {ratio:.4} vs constant {HOLDER_CONSTANT:.4}; slope {slope:.3} vs {expected}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("L2 sparseness lemma suite", l2_suite),
        ("Morrey-type sparseness lemma suite", gm_suite),
        ("counterexample validity", counterexamples),
        ("oracle equivalence", oracles),
        ("admissible pair anchor", pair_anchor),
        ("exponent anchor", exponent_anchor),
        ("solver exactness", solver),
        ("criterion consistency", criterion_consistency),
        ("scaling covariance", scaling),
        ("predual Hölder suite", holder),
    ];
    // optional criterion numbers on the command line select a subset
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] {:>2}. {name}: {} ({secs:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!("acceptance: {} of {ran} criteria pass", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
