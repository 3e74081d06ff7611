//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits nonzero on any failure only when `SEMIBANDIT_ACCEPTANCE_STRICT=1`;
//! otherwise failures are reported and the target succeeds.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semibandit::harness::{
    build_policy, mean_std, run, run_seeds, separation_experiment, separation_gap, sweep_and_fit,
    write_outputs, DecisionSpec, ExperimentConfig, GraphSpec, Instance, InstanceConfig,
    PolicyConfig, RewardSpec,
};
use semibandit::policy::{elimination_radius, estimate_rewards, Policy};
use semibandit::polytope::{decompose, kl_project, DecisionPoint, DualPoint, PolytopeSpec, VertexDecomposition};
use semibandit::rounding::{certify_decomposition, certify_sampler, swap_round, SamplerKind};
use semibandit::{Action, FeedbackGraph, FeedbackView, Observability};

const Z_LIMIT: f64 = 4.0;
const COV_TARGET: f64 = 0.25;
const COV_TOL: f64 = 0.01;
const PROJECTION_TOL: f64 = 1e-6;
const DECOMPOSITION_TOL: f64 = 1e-9;
const SLOPE_SQRT: (f64, f64) = (0.35, 0.65);
const UNIFORM_FACTOR: f64 = 3.0;
const SEPARATION_RATIO: f64 = 1.2;
const SURVIVAL_MIN: usize = 95;
const RADIUS_TOL: f64 = 1e-12;
const SLOPE_TWO_THIRDS: (f64, f64) = (0.55, 0.80);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_point(r: &mut ChaCha8Rng, k: usize, s: usize, eps: f64) -> DecisionPoint {
    let w: Vec<f64> = (0..k).map(|_| r.gen_range(-3.0f64..3.0).exp()).collect();
    kl_project(&DualPoint::new(w).unwrap(), &PolytopeSpec::new(k, s, eps).unwrap()).unwrap()
}

fn c1_sampler_certification() -> Outcome {
    let mut r = rng(1);
    let mut worst_mean: f64 = 0.0;
    let mut worst_cov = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..50 {
        let k = r.gen_range(4..=12);
        let s = r.gen_range(1..=5.min(k - 1));
        let x = random_point(&mut r, k, s, 0.0);
        let rep = certify_sampler(&SamplerKind::SwapRounding, &x, s, 100_000, &mut r).unwrap();
        worst_mean = worst_mean.max(rep.worst_mean_z);
        worst_cov = worst_cov.max(rep.max_positive_cov_z);
        if !(rep.invalid_draws == 0 && rep.worst_mean_z <= Z_LIMIT && rep.max_positive_cov_z <= Z_LIMIT) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("50 targets x 1e5 draws: worst |mean z| {worst_mean:.2}, worst covariance z {worst_cov:.2}, {failures} failing targets"),
    )
}

fn c2_mean_only_counterexample() -> Outcome {
    let d = VertexDecomposition {
        terms: vec![
            (0.5, Action::new(4, [0, 1]).unwrap()),
            (0.5, Action::new(4, [2, 3]).unwrap()),
        ],
    };
    let rep = certify_decomposition(&SamplerKind::MeanOnly, &d, &[0.5; 4], 2, 100_000, &mut rng(2)).unwrap();
    let cov = rep.pairs.iter().find(|p| (p.i, p.j) == (0, 1)).unwrap().covariance;
    outcome(
        (cov - COV_TARGET).abs() <= COV_TOL,
        format!("Cov(v1, v2) = {cov:.4} over 1e5 draws"),
    )
}

/// Minimizes `D(x, w)` over `{sum x = s, eps <= x <= 1}` by enumerating
/// which coordinates sit at each bound; free coordinates are proportional
/// to `w` on a face.
fn projection_oracle(w: &[f64], s: usize, eps: f64) -> Vec<f64> {
    let k = w.len();
    let objective = |x: &[f64]| -> f64 {
        x.iter()
            .zip(w)
            .map(|(&xi, &wi)| if xi > 0.0 { xi * (xi / wi).ln() - xi + wi } else { wi })
            .sum()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(k as u32) {
        let mut state = vec![0u8; k];
        let mut c = code;
        for st in state.iter_mut() {
            *st = (c % 3) as u8;
            c /= 3;
        }
        let fixed: f64 = state
            .iter()
            .map(|&st| match st {
                0 => eps,
                1 => 1.0,
                _ => 0.0,
            })
            .sum();
        let free_w: f64 = state.iter().zip(w).filter(|(&st, _)| st == 2).map(|(_, &wi)| wi).sum();
        let x: Vec<f64> = if free_w == 0.0 {
            if (fixed - s as f64).abs() > 1e-12 {
                continue;
            }
            state.iter().map(|&st| if st == 0 { eps } else { 1.0 }).collect()
        } else {
            let scale = (s as f64 - fixed) / free_w;
            state
                .iter()
                .zip(w)
                .map(|(&st, &wi)| match st {
                    0 => eps,
                    1 => 1.0,
                    _ => wi * scale,
                })
                .collect()
        };
        if x.iter().any(|&v| v < eps - 1e-12 || v > 1.0 + 1e-12) {
            continue;
        }
        let f = objective(&x);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x));
        }
    }
    best.unwrap().1
}

fn c3_projection_oracle() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = r.gen_range(2..=4);
        let s = r.gen_range(1..k);
        let eps = if r.gen_bool(0.5) { 0.0 } else { r.gen_range(0.0..s as f64 / k as f64) };
        let w: Vec<f64> = (0..k).map(|_| r.gen_range(-4.0f64..4.0).exp()).collect();
        let x = kl_project(&DualPoint::new(w.clone()).unwrap(), &PolytopeSpec::new(k, s, eps).unwrap()).unwrap();
        let oracle = projection_oracle(&w, s, eps);
        for (a, b) in x.coords().iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= PROJECTION_TOL, format!("100 instances, max coordinate error {worst:.2e}"))
}

fn random_vertex_mixture(r: &mut ChaCha8Rng, k: usize, s: usize) -> Vec<f64> {
    let m = r.gen_range(1..=4);
    let weights: Vec<f64> = (0..m).map(|_| r.gen::<f64>() + 0.01).collect();
    let total: f64 = weights.iter().sum();
    let mut x = vec![0.0; k];
    for w in weights {
        for a in rand::seq::index::sample(r, k, s) {
            x[a] += w / total;
        }
    }
    x
}

fn c4_decomposition() -> Outcome {
    let mut r = rng(4);
    let (mut worst_rec, mut worst_sum, mut too_long) = (0.0f64, 0.0f64, 0);
    for i in 0..1000 {
        let k = r.gen_range(2..=10);
        let s = r.gen_range(1..=k);
        let x = if i % 2 == 0 {
            random_point(&mut r, k, s, 0.0).into_coords()
        } else {
            random_vertex_mixture(&mut r, k, s)
        };
        let d = decompose(&x, s).unwrap();
        for (a, b) in d.mean().iter().zip(&x) {
            worst_rec = worst_rec.max((a - b).abs());
        }
        worst_sum = worst_sum.max((d.total_weight() - 1.0).abs());
        if d.terms.len() > k {
            too_long += 1;
        }
    }
    let example = decompose(&[1.0, 0.8, 0.2], 2).unwrap();
    let weights: Vec<f64> = example.terms.iter().map(|t| t.0).collect();
    let example_ok = example.terms.len() == 2
        && (weights[0] - 0.8).abs() <= DECOMPOSITION_TOL
        && (weights[1] - 0.2).abs() <= DECOMPOSITION_TOL
        && example.terms[0].1.arms() == [0, 1]
        && example.terms[1].1.arms() == [0, 2];
    outcome(
        worst_rec <= DECOMPOSITION_TOL && worst_sum <= DECOMPOSITION_TOL && too_long == 0 && example_ok,
        format!(
            "1000 points: reconstruction {worst_rec:.1e}, weight sum {worst_sum:.1e}, {too_long} over K terms; (1, 0.8, 0.2) -> {weights:?}"
        ),
    )
}

fn random_observable_graph(r: &mut ChaCha8Rng, k: usize) -> FeedbackGraph {
    let mut edges = Vec::new();
    for a in 0..k {
        for b in 0..k {
            if a != b && r.gen_bool(0.3) {
                edges.push((a, b));
            }
        }
        if r.gen_bool(0.7) {
            edges.push((a, a));
        } else {
            // no self-loop: every other arm must reveal `a`
            edges.extend((0..k).filter(|&b| b != a).map(|b| (b, a)));
        }
    }
    FeedbackGraph::new(k, edges).unwrap()
}

fn c5_unbiasedness() -> Outcome {
    let mut r = rng(5);
    let n = 100_000;
    let (mut worst_z, mut failures, mut single) = (0.0f64, 0, 0);
    for i in 0..20 {
        let k = r.gen_range(3..=8);
        let s = if i % 2 == 0 { 1 } else { r.gen_range(2..k) };
        single += usize::from(s == 1);
        let g = random_observable_graph(&mut r, k);
        assert_eq!(g.observability(), Observability::StronglyObservable);
        let spec = PolytopeSpec::new(k, s, 0.05 * s as f64 / k as f64).unwrap();
        let x = random_point(&mut r, k, s, spec.truncation());
        let rewards: Vec<f64> = (0..k).map(|_| r.gen()).collect();
        let d = decompose(x.coords(), s).unwrap();
        let (mut sum, mut sq) = (vec![0.0; k], vec![0.0; k]);
        for _ in 0..n {
            let v = swap_round(&d, &mut r).unwrap();
            let view = FeedbackView::new(&g, &v, &rewards);
            let est = estimate_rewards(&v, &x, &view, &spec).unwrap();
            for (a, e) in est.unshifted().into_iter().enumerate() {
                sum[a] += e;
                sq[a] += e * e;
            }
        }
        for a in 0..k {
            let mean = sum[a] / n as f64;
            let var = (sq[a] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            let z = if se > 0.0 { (mean - rewards[a]).abs() / se } else if (mean - rewards[a]).abs() < 1e-9 { 0.0 } else { f64::INFINITY };
            worst_z = worst_z.max(z);
            if z > Z_LIMIT {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("20 triples ({single} with S = 1), 1e5 draws each: worst |z| {worst_z:.2}, {failures} arms outside {Z_LIMIT} SE"),
    )
}

fn bernoulli_config(id: &str, graph: GraphSpec, means: Vec<f64>, budget: usize, horizon: usize, seeds: usize) -> ExperimentConfig {
    ExperimentConfig {
        instance: InstanceConfig {
            graph,
            decisions: DecisionSpec::Full { budget },
            rewards: RewardSpec::Bernoulli { means },
            horizon,
        },
        policy: PolicyConfig::named(id),
        seeds: (0..seeds as u64).collect(),
        horizons: Vec::new(),
        output: None,
    }
}

fn scaling_means() -> Vec<f64> {
    let mut means = vec![0.1; 20];
    means[0] = 0.9;
    means[1] = 0.9;
    means
}

fn c6_regret_scaling() -> Outcome {
    let horizons = [1 << 10, 1 << 12, 1 << 14];
    let cfg = |id| bernoulli_config(id, GraphSpec::SelfLoops { num_arms: 20 }, scaling_means(), 2, horizons[0], 20);
    let osmd = sweep_and_fit(&cfg("osmdg"), &horizons).unwrap();
    let uniform = sweep_and_fit(&cfg("uniform"), &horizons).unwrap();
    let factors: Vec<f64> = osmd
        .points
        .iter()
        .zip(&uniform.points)
        .map(|(o, u)| u.mean_regret / o.mean_regret)
        .collect();
    let slope_ok = (SLOPE_SQRT.0..=SLOPE_SQRT.1).contains(&osmd.slope);
    let factor_ok = factors.iter().all(|&f| f >= UNIFORM_FACTOR);
    outcome(
        slope_ok && factor_ok,
        format!(
            "slope {:.3} (in range: {slope_ok}); uniform/osmdg regret at T = 2^10, 2^12, 2^14: {:.2}, {:.2}, {:.2} (all >= {UNIFORM_FACTOR}: {factor_ok})",
            osmd.slope, factors[0], factors[1], factors[2]
        ),
    )
}

fn c7_graph_benefit() -> Outcome {
    let mut means = vec![0.3; 20];
    means[..3].copy_from_slice(&[0.8, 0.7, 0.6]);
    let finals = |graph| -> Vec<f64> {
        run(&bernoulli_config("osmdg", graph, means.clone(), 2, 1 << 14, 20))
            .unwrap()
            .iter()
            .map(|t| t.final_regret)
            .collect()
    };
    let complete = finals(GraphSpec::Complete { num_arms: 20 });
    let loops = finals(GraphSpec::SelfLoops { num_arms: 20 });
    let diffs: Vec<f64> = loops.iter().zip(&complete).map(|(l, c)| l - c).collect();
    let (md, sd) = mean_std(&diffs);
    let t = md / (sd / (diffs.len() as f64).sqrt());
    let (mc, ml) = (mean_std(&complete).0, mean_std(&loops).0);
    outcome(
        mc <= ml,
        format!("mean final regret complete {mc:.1} vs self-loops {ml:.1}; paired difference t = {t:.1}"),
    )
}

fn c8_separation() -> Outcome {
    let (n, s, t) = (8, 4, 1 << 14);
    let seeds: Vec<u64> = (0..20).collect();
    match separation_experiment(n, s, t, &seeds, separation_gap(n, t)) {
        Ok(rep) => outcome(
            rep.alignment_held && rep.ratio >= SEPARATION_RATIO,
            format!(
                "alignment held on all rounds; clique-aligned {:.1} / swap {:.1} = ratio {:.3} (gap {:.4}, swap mixes cliques in {:.1}% of rounds)",
                rep.clique_mean,
                rep.swap_mean,
                rep.ratio,
                rep.gap,
                100.0 * rep.swap_mixed_fraction
            ),
        ),
        Err(e) => outcome(false, format!("experiment failed: {e}")),
    }
}

fn c9_elimination() -> Outcome {
    let horizon = 10_000;
    let fail = 0.05;
    let decisions = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
    let instance = Instance::build(&InstanceConfig {
        graph: GraphSpec::SelfLoops { num_arms: 6 },
        decisions: DecisionSpec::Explicit { decisions },
        rewards: RewardSpec::Bernoulli { means: vec![0.6, 0.6, 0.5, 0.5, 0.4, 0.4] },
        horizon,
    })
    .unwrap();
    let optimal = Action::new(6, [0, 1]).unwrap();
    let policy = PolicyConfig {
        failure_prob: Some(fail),
        ..PolicyConfig::named("arm-elimination")
    };
    let seeds: Vec<u64> = (0..100).collect();
    let traces = run_seeds(&instance, &policy, &seeds).unwrap();
    let survived = traces
        .iter()
        .filter(|t| t.diagnostics.active_decisions.as_ref().unwrap().contains(&optimal))
        .count();
    let mut events = 0;
    let mut worst: f64 = 0.0;
    for t in &traces {
        for e in &t.diagnostics.eliminations {
            let direct = 6.0 * 2.0 * ((2.0 * horizon as f64).ln() * (6.0 * horizon as f64 / fail).ln() / e.min_count as f64).sqrt();
            worst = worst.max((e.radius - direct).abs());
            worst = worst.max((elimination_radius(2, horizon, 6, fail, e.min_count) - e.radius).abs());
            events += 1;
        }
    }
    outcome(
        survived >= SURVIVAL_MIN && worst <= RADIUS_TOL && events > 0,
        format!("optimal decision survived {survived}/100 runs; {events} elimination passes, max radius deviation {worst:.1e}"),
    )
}

fn c10_etc() -> Outcome {
    let k = 10;
    // arm 0 reveals every other arm and is itself seen only by arm 1
    let mut edges = vec![[1, 0]];
    edges.extend((1..k).map(|a| [0, a]));
    let mut means = vec![0.5; k];
    means[0] = 0.0;
    means[2] = 0.9;
    means[3] = 0.9;
    let graph = GraphSpec::Edges { num_arms: k, edges };
    let g = graph.build().unwrap();
    let cfg = bernoulli_config("etc", graph, means, 2, 1 << 12, 20);
    let rep = sweep_and_fit(&cfg, &[1 << 12, 1 << 14, 1 << 16]).unwrap();
    let regrets: Vec<String> = rep.points.iter().map(|p| format!("{:.0}", p.mean_regret)).collect();
    outcome(
        g.observability() == Observability::WeaklyObservable
            && (SLOPE_TWO_THIRDS.0..=SLOPE_TWO_THIRDS.1).contains(&rep.slope),
        format!("weakly observable hub instance: slope {:.3}, mean regrets {}", rep.slope, regrets.join(", ")),
    )
}

fn brute_alpha(g: &FeedbackGraph) -> usize {
    let k = g.num_arms();
    (0u32..1 << k)
        .filter(|&m| {
            (0..k).all(|a| {
                m >> a & 1 == 0 || g.out_neighbors(a).iter().all(|&b| b == a || m >> b & 1 == 0)
            })
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap()
}

fn brute_domination(g: &FeedbackGraph) -> usize {
    let k = g.num_arms();
    let full = (1u32 << k) - 1;
    (0u32..1 << k)
        .filter(|&m| {
            let covered = (0..k)
                .filter(|&a| m >> a & 1 == 1)
                .flat_map(|a| g.out_neighbors(a).iter())
                .fold(0u32, |acc, &b| acc | 1 << b);
            covered == full
        })
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap()
}

fn c11_graph_oracles() -> Outcome {
    let mut r = rng(11);
    let (mut alpha_bad, mut dom_bad) = (0, 0);
    for _ in 0..50 {
        let k = r.gen_range(2..=14);
        let p = r.gen_range(0.05..0.6);
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for a in 0..k {
            for b in 0..k {
                if r.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        let mut g = FeedbackGraph::new(k, edges.clone()).unwrap();
        if g.greedy_dominating_set().is_err() {
            edges.extend((0..k).filter(|&a| g.in_neighbors(a).is_empty()).map(|a| (a, a)));
            g = FeedbackGraph::new(k, edges).unwrap();
        }
        if g.independence_number_exact(14).unwrap() != brute_alpha(&g) {
            alpha_bad += 1;
        }
        let greedy = g.greedy_dominating_set().unwrap().len() as f64;
        if greedy > (1.0 + (k as f64).ln()) * brute_domination(&g) as f64 {
            dom_bad += 1;
        }
    }
    outcome(
        alpha_bad == 0 && dom_bad == 0,
        format!("50 graphs K <= 14: {alpha_bad} independence mismatches, {dom_bad} dominating sets above (1 + ln K) x optimum"),
    )
}

fn c12_reproducibility() -> Outcome {
    let cfg = bernoulli_config(
        "osmdg",
        GraphSpec::Cycle { num_arms: 8, self_loops: true },
        vec![0.9, 0.2, 0.7, 0.4, 0.5, 0.1, 0.3, 0.6],
        3,
        2000,
        4,
    );
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let summaries: Vec<_> = dirs
        .iter()
        .map(|d| write_outputs(&cfg, &run(&cfg).unwrap(), d.path()).unwrap())
        .collect();
    let identical = summaries[0].files.iter().all(|f| {
        std::fs::read(dirs[0].path().join(f)).unwrap() == std::fs::read(dirs[1].path().join(f)).unwrap()
    });
    // a policy built and run by hand matches the parallel runner byte for byte
    let instance = Instance::build(&cfg.instance).unwrap();
    let mut p: Box<dyn Policy> = build_policy(&cfg.policy, &instance).unwrap();
    let single = semibandit::harness::run_single(&instance, p.as_mut(), cfg.seeds[2]).unwrap();
    let matches_parallel = single.to_csv().into_bytes()
        == std::fs::read(dirs[0].path().join(&summaries[0].files[2])).unwrap();
    outcome(
        identical && matches_parallel,
        format!("{} traces byte-identical across reruns: {identical}; sequential rerun matches: {matches_parallel}", summaries[0].files.len()),
    )
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let checks: [Check; 12] = [
        ("sampler certification", c1_sampler_certification),
        ("mean-only counterexample", c2_mean_only_counterexample),
        ("projection oracle", c3_projection_oracle),
        ("decomposition exactness", c4_decomposition),
        ("estimator unbiasedness", c5_unbiasedness),
        ("regret scaling", c6_regret_scaling),
        ("graph benefit", c7_graph_benefit),
        ("clique separation", c8_separation),
        ("arm elimination", c9_elimination),
        ("explore-then-commit", c10_etc),
        ("graph oracles", c11_graph_oracles),
        ("reproducibility", c12_reproducibility),
    ];
    let mut passed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        passed += usize::from(o.pass);
        println!(
            "criterion {:>2} {} {name}: {} [{:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", checks.len());
    let strict = std::env::var("SEMIBANDIT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < checks.len() {
        std::process::exit(1);
    }
}
