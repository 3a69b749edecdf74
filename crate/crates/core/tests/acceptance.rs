//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p pentao --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use pentao::metrics::{
    quantile_sorted, ConvergenceRule, RATIO_GW, RATIO_U3R,
};
use pentao::{
    assign_weights, coefficients_from_observables, crossover, derive_seed, diagonal, gen_regular,
    gen_sk, ground_state, grid_graph, init_plus, model_eval, p_scaling, parse_graph6_lines,
    penta_o_run, penta_o_step, tts_classical, tts_quantum, Hamiltonian, Instance, LevelParams,
    PentaOConfig, Scaling, Schedule, SpinConfig, TtsParams, WeightDistribution,
};
use rand::Rng;
use rayon::prelude::*;

const U3R_N8: &str = include_str!("fixtures/u3r_n8.g6");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Case {
    instance: Instance,
    prior: Schedule<f64>,
    gamma: f64,
}

/// Shared instance set for the first two criteria.
fn random_cases(count: usize, seed: u64) -> Vec<Case> {
    let mut r = rng(seed);
    (0..count)
        .map(|k| {
            let n = r.random_range(2..=8);
            let instance = random_instance(&mut r, n, k % 2 == 1);
            let depth = r.random_range(0..=3);
            let prior = random_schedule(&mut r, depth);
            let gamma = r.random_range(1e-3..1.0);
            Case {
                instance,
                prior,
                gamma,
            }
        })
        .collect()
}

fn exact_curve(h: &Hamiltonian, prior: &Schedule<f64>, gamma: f64, thetas: &[f64]) -> Vec<f64> {
    let phased = h.apply_cost(&h.run_qaoa(prior).unwrap(), gamma).unwrap();
    thetas
        .iter()
        .map(|&t| h.expectation(&phased.apply_mixer(t)).unwrap())
        .collect()
}

fn grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 * PI / points as f64).collect()
}

fn trig_form() -> Outcome {
    let thetas = grid(128);
    let worst = random_cases(200, 101)
        .par_iter()
        .map(|c| {
            let h = Hamiltonian::new(c.instance.clone()).unwrap();
            let cfg = PentaOConfig {
                gamma0: c.gamma,
                ..Default::default()
            };
            let model = penta_o_step(&h, &c.prior, &cfg).unwrap().model;
            exact_curve(&h, &c.prior, c.gamma, &thetas)
                .iter()
                .zip(&thetas)
                .map(|(j, &t)| (model_eval(&model, t) - j).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-8,
        format!("max |model - exact| = {worst:.2e} over 200 instances x 128 angles (tol 1e-8)"),
    )
}

fn two_path() -> Outcome {
    let thetas = grid(128);
    let worst = random_cases(200, 101)
        .par_iter()
        .map(|c| {
            let h = Hamiltonian::new(c.instance.clone()).unwrap();
            let cfg = PentaOConfig {
                gamma0: c.gamma,
                ..Default::default()
            };
            let fitted = penta_o_step(&h, &c.prior, &cfg).unwrap().model;
            let direct = coefficients_from_observables(&h, &c.prior, c.gamma).unwrap();
            thetas
                .iter()
                .map(|&t| (model_eval(&fitted, t) - model_eval(&direct, t)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("max |fit - observables| = {worst:.2e} (tol 1e-9)"),
    )
}

fn periodicity() -> Outcome {
    let mut r = rng(103);
    let (mut free_worst, mut field_worst) = (0.0f64, 0.0f64);
    for k in 0..300 {
        let with_fields = k % 2 == 1;
        let n = r.random_range(2..=8);
        let h = Hamiltonian::new(random_instance(&mut r, n, with_fields)).unwrap();
        let depth = r.random_range(0..=3);
        let prior = random_schedule(&mut r, depth);
        let gamma = r.random_range(0.0..1.0);
        let theta = r.random_range(0.0..PI);
        let shift = if with_fields { PI } else { PI / 2.0 };
        let j = exact_curve(&h, &prior, gamma, &[theta, theta + shift]);
        let d = (j[0] - j[1]).abs();
        if with_fields {
            field_worst = field_worst.max(d);
        } else {
            free_worst = free_worst.max(d);
        }
    }
    outcome(
        free_worst <= 1e-10 && field_worst <= 1e-10,
        format!("field-free pi/2 shift {free_worst:.1e}, with fields pi shift {field_worst:.1e} (tol 1e-10)"),
    )
}

fn monotone() -> Outcome {
    let mut r = rng(104);
    let jobs: Vec<(Instance, f64)> = (0..50)
        .map(|k| {
            let n = r.random_range(4..=10);
            (random_instance(&mut r, n, k % 2 == 0), r.random_range(0.05..0.8))
        })
        .collect();
    let worst = jobs
        .par_iter()
        .map(|(inst, gamma)| {
            let h = Hamiltonian::new(inst.clone()).unwrap();
            let cfg = PentaOConfig {
                gamma0: *gamma,
                p_max: 20,
                ..Default::default()
            };
            let (_, report) = penta_o_run(&h, &cfg).unwrap();
            let mut prev = report.j_initial;
            let mut worst = f64::NEG_INFINITY;
            for &j in &report.j_trajectory {
                worst = worst.max(j - prev);
                prev = j;
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    outcome(
        worst <= 1e-12,
        format!("largest J_l - J_(l-1) = {worst:.2e} over 50 instances x 20 levels"),
    )
}

fn grid_demo() -> Outcome {
    let h = Hamiltonian::new(grid_graph(2, 3).unwrap().to_unit_instance("grid2x3")).unwrap();
    let cfg = PentaOConfig {
        gamma0: 0.2,
        p_max: 3,
        ..Default::default()
    };
    let (_, report) = penta_o_run(&h, &cfg).unwrap();
    let mut traj = vec![report.j_initial];
    traj.extend(&report.j_trajectory);
    let decreasing = traj.windows(2).all(|w| w[1] < w[0]);
    let p = report.ground_state_probability;
    outcome(
        decreasing && p >= 0.27,
        format!(
            "J = [{}], ground-state probability at p=3 = {p:.4} (need >= 0.27)",
            traj.iter().map(|j| format!("{j:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn u3r_benchmark() -> Outcome {
    let graphs = parse_graph6_lines(U3R_N8).unwrap();
    let cfg = PentaOConfig {
        gamma0: 0.075,
        p_max: 40,
        ..Default::default()
    };
    let ratios: Vec<Vec<f64>> = graphs
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let h = Hamiltonian::new(g.to_unit_instance(format!("u3r8-{k}"))).unwrap();
            penta_o_run(&h, &cfg).unwrap().1.r_trajectory.unwrap()
        })
        .collect();
    let mean: Vec<f64> = (0..cfg.p_max)
        .map(|l| ratios.iter().map(|r| r[l]).sum::<f64>() / ratios.len() as f64)
        .collect();
    let first = mean.iter().position(|&r| r >= RATIO_U3R);
    outcome(
        graphs.len() == 5 && first.is_some(),
        match first {
            Some(l) => format!(
                "mean ratio over 5 graphs reaches {:.4} >= {RATIO_U3R} at p = {}; {:.4} at p = 40",
                mean[l],
                l + 1,
                mean[cfg.p_max - 1]
            ),
            None => format!("mean ratio peaks at {:.4} < {RATIO_U3R}", mean[cfg.p_max - 1]),
        },
    )
}

fn weighted_benchmark() -> Outcome {
    let cfg = PentaOConfig {
        gamma0: 0.2,
        p_max: 300,
        stop_on_convergence: true,
        ..Default::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, dist, stream) in [
        ("P-d", WeightDistribution::Poisson { lambda: 1.0 }, 1u64),
        ("N-d", WeightDistribution::Normal { mean: 0.0, std_dev: 1.0 }, 2),
    ] {
        let base = derive_seed(7000, stream);
        let rc: Vec<f64> = (0..30u64)
            .into_par_iter()
            .map(|k| {
                let seed = derive_seed(base, k);
                let g = gen_regular(10, 3, seed).unwrap();
                let inst = assign_weights(&g, dist, derive_seed(seed, 1))
                    .and_then(|i| i.normalize())
                    .unwrap();
                let h = Hamiltonian::new(inst).unwrap();
                penta_o_run(&h, &cfg).unwrap().1.convergence.unwrap().value
            })
            .collect();
        let above = rc.iter().filter(|&&r| r > RATIO_GW).count();
        let frac = above as f64 / rc.len() as f64;
        pass &= frac >= 0.70;
        parts.push(format!(
            "{name} {above}/30 = {:.0}% (min r_c {:.4})",
            100.0 * frac,
            rc.iter().copied().fold(f64::INFINITY, f64::min)
        ));
    }
    outcome(
        pass,
        format!("replicas with r_c > {RATIO_GW}: {} (need >= 70%)", parts.join(", ")),
    )
}

fn sk_benchmark() -> Outcome {
    let cfg = PentaOConfig {
        gamma0: 0.05,
        p_max: 600,
        stop_on_convergence: true,
        convergence_rule: Some(ConvergenceRule::RelativeEnergyGap),
        ..Default::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (idx, h0) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let base = derive_seed(8000, idx as u64);
        let runs: Vec<(f64, usize)> = (0..50u64)
            .into_par_iter()
            .map(|k| {
                let h = Hamiltonian::new(gen_sk(10, h0, derive_seed(base, k)).unwrap()).unwrap();
                let report = penta_o_run(&h, &cfg).unwrap().1;
                let conv = report.convergence.unwrap();
                (report.low_energy_trajectory.unwrap()[conv.level - 1], conv.level)
            })
            .collect();
        let mut probs: Vec<f64> = runs.iter().map(|r| r.0).collect();
        probs.sort_by(f64::total_cmp);
        let median = quantile_sorted(&probs, 0.5);
        let share = probs.iter().filter(|&&p| p >= 0.65).count() as f64 / probs.len() as f64;
        let min = probs[0];
        let max_level = runs.iter().map(|r| r.1).max().unwrap();
        pass &= median >= 0.8 && share >= 0.75 && min >= 0.25 && max_level < cfg.p_max;
        parts.push(format!(
            "h0={h0}: median {median:.3}, >=0.65 {:.0}%, min {min:.3}, p_c <= {max_level}",
            100.0 * share
        ));
    }
    outcome(pass, parts.join("; "))
}

fn trial_accounting() -> Outcome {
    let mut r = rng(109);
    let mut ok = true;
    for p in 1..=10 {
        for with_fields in [false, true] {
            let h = Hamiltonian::new(random_instance(&mut r, 5, with_fields)).unwrap();
            let per = if with_fields { 5 } else { 3 };
            for final_shots in [None, Some(100)] {
                let cfg = PentaOConfig {
                    p_max: p,
                    final_shots,
                    ..Default::default()
                };
                let report = penta_o_run(&h, &cfg).unwrap().1;
                ok &= report.trials == per * p + usize::from(final_shots.is_some());
                ok &= report.probes_per_level.iter().all(|&c| c == per);
            }
        }
    }
    outcome(ok, "5p (+1) with fields and 3p (+1) field-free for p = 1..10")
}

fn shot_noise() -> Outcome {
    let h = Hamiltonian::new(gen_sk(8, 0.5, 110).unwrap()).unwrap();
    let cfg = PentaOConfig {
        gamma0: 0.2,
        p_max: 2,
        ..Default::default()
    };
    let (sched, _) = penta_o_run(&h, &cfg).unwrap();
    let psi = h.run_qaoa(&sched).unwrap();
    let exact = h.expectation(&psi).unwrap();
    let estimates: Vec<f64> = (0..200u64)
        .map(|s| h.estimate_energy(&psi.sample(3000, derive_seed(110, s)).unwrap()).unwrap())
        .collect();
    let (mean, se) = mean_and_stderr(&estimates);
    let z = (mean - exact).abs() / se;
    outcome(
        z < 5.0,
        format!("mean {mean:.5} vs exact {exact:.5}: {z:.2} standard errors (need < 5)"),
    )
}

fn tts_model() -> Outcome {
    let tc = tts_classical(300).unwrap();
    let log = TtsParams::new(Scaling::Log);
    let quad = TtsParams::new(Scaling::Quadratic);
    let log_cross = crossover(&log, 2..=2000).unwrap();
    let quad_cross = crossover(&quad, 2..1000).unwrap();
    let quad_cost = quad_cross.map(|n| tts_quantum(p_scaling(n, &quad).unwrap(), n, &quad).unwrap());
    let pass = (1.0..=3.0).contains(&tc)
        && log_cross.is_some_and(|n| (400..=700).contains(&n))
        && quad_cost.is_none_or(|t| t > 1e7);
    outcome(
        pass,
        format!(
            "T_c(300) = {tc:.3} s; log crossover N = {log_cross:?}; quadratic crossover below 1000: {}",
            match (quad_cross, quad_cost) {
                (Some(n), Some(t)) => format!("N = {n} with T_q = {t:.2e} s"),
                _ => "none".into(),
            }
        ),
    )
}

fn oracles() -> Outcome {
    let mut r = rng(112);
    let mut spec_err = 0.0f64;
    let mut ground_ok = true;
    for n in 2..=12 {
        for with_fields in [false, true] {
            let inst = random_instance(&mut r, n, with_fields);
            let brute = brute_spectrum(&inst);
            let spec = diagonal(&inst).unwrap();
            for (k, (&a, &b)) in spec.energies().iter().zip(&brute).enumerate() {
                spec_err = spec_err.max((a - b).abs());
                let s = SpinConfig::from_index(n, k);
                spec_err = spec_err.max((inst.energy(&s).unwrap() - b).abs());
            }
            let e_min = brute.iter().copied().fold(f64::INFINITY, f64::min);
            let (e, states) = ground_state(&inst).unwrap();
            let want: Vec<usize> = (0..brute.len()).filter(|&k| brute[k] <= e_min + 1e-9).collect();
            ground_ok &= (e - e_min).abs() <= 1e-12 && states.iter().map(SpinConfig::index).eq(want);
        }
    }
    let mut amp_err = 0.0f64;
    for n in 1..=4 {
        for with_fields in [false, true] {
            let inst = if n == 1 {
                Instance::new(1, vec![], vec![(0, 0.6)], "").unwrap()
            } else {
                random_instance(&mut r, n, with_fields)
            };
            let levels: Vec<(f64, f64)> =
                (0..3).map(|_| (r.random_range(0.0..1.5), r.random_range(0.0..PI))).collect();
            let h = Hamiltonian::new(inst.clone()).unwrap();
            let sched = Schedule::new(
                levels.iter().map(|&(gamma, theta)| LevelParams { gamma, theta }).collect(),
            );
            let got = h.run_qaoa(&sched).unwrap();
            let want = dense_qaoa(&inst, &levels);
            for (a, b) in got.amplitudes().iter().zip(&want) {
                amp_err = amp_err.max((a - b).norm());
            }
            let mut one = init_plus::<f64>(n).unwrap();
            one.apply_mixer_in_place(levels[0].1);
            let want = dense_x_sum(n).evolve(levels[0].1).apply(&plus_state(n));
            for (a, b) in one.amplitudes().iter().zip(&want) {
                amp_err = amp_err.max((a - b).norm());
            }
        }
    }
    outcome(
        spec_err <= 1e-12 && ground_ok && amp_err <= 1e-12,
        format!(
            "spectrum err {spec_err:.1e} (n <= 12), ground states {}, dense-unitary err {amp_err:.1e} (n <= 4)",
            if ground_ok { "exact" } else { "MISMATCH" }
        ),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 12] = [
        ("trigonometric form", Duration::from_secs(120), trig_form),
        ("two-path equivalence", Duration::from_secs(120), two_path),
        ("periodicity", Duration::from_secs(60), periodicity),
        ("non-increasing energy", Duration::from_secs(300), monotone),
        ("2x3 grid demo", Duration::from_secs(10), grid_demo),
        ("u3r N=8 benchmark", Duration::from_secs(600), u3r_benchmark),
        ("weighted w3r N=10", Duration::from_secs(1800), weighted_benchmark),
        ("SK N=10", Duration::from_secs(1800), sk_benchmark),
        ("trial accounting", Duration::from_secs(1), trial_accounting),
        ("shot-noise estimator", Duration::from_secs(60), shot_noise),
        ("time-to-solution model", Duration::from_secs(1), tts_model),
        ("brute-force and dense oracles", Duration::from_secs(120), oracles),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {}; {:.2} s (budget {} s{})",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
