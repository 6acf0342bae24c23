//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use lctrotter::bounds::{
    random_1design_bound, random_2design_bound, random_bound_no_observable, thm1_bound, thm2_bound,
    worst_case_p2_bound, RandomStyle,
};
use lctrotter::exactsim::{empirical_average_error, ExactHeisenberg};
use lctrotter::experiments::{run_dqpt, ExperimentConfig};
use lctrotter::lightcone::{build_hypergraph, color_hypergraph, edge_sets, even_odd_order, propagate, ColoringStrategy};
use lctrotter::models::{self, LatticeSpec};
use lctrotter::trotter::{chromatic_formula, gate_count, reduced_formula, standard_formula, Granularity, MergePolicy};
use lctrotter::{NormMode, PauliSum, SupportSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// 12-qubit TFI guaranteed times under a 500-exponential budget.
fn dqpt_times() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig { experiment: "dqpt".into(), model: "tfi".into(), n: Some(12), epsilon: Some(0.05), ..Default::default() };
    cfg.set_params("J=0.2,h=1").unwrap();
    let out = match run_dqpt(&cfg) {
        Ok(o) => o,
        Err(e) => return check(false, format!("run failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let (Some(a), Some(b)) = (out.get("thm1"), out.get("worst")) else { return check(false, "missing rows".into()) };
    let (Some(ta), Some(tb), Some(da), Some(db)) = (a.t, b.t, a.step, b.step) else {
        return check(false, "budget admits no grid time".into());
    };
    let cell = cfg.dqpt.t_step;
    let pass = (ta - 1.80).abs() <= 0.03 + 1e-9
        && (tb - 1.15).abs() <= 0.03 + 1e-9
        && (da - 0.12).abs() <= cell + 1e-9
        && (db - 0.08).abs() <= cell + 1e-9
        && secs <= 300.0;
    check(
        pass,
        format!(
            "light-cone t={ta:.2} (r={}, dt={da:.4}, {} exps), worst-case t={tb:.2} (r={}, dt={db:.4}, {} exps), {secs:.1}s",
            a.r.unwrap(),
            a.gate_count.unwrap(),
            b.r.unwrap(),
            b.gate_count.unwrap()
        ),
    )
}

/// Every bound dominates the matching empirical error on a spread of small instances.
fn soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut instances = 0;
    let mut violations = Vec::new();
    let mut tightest: f64 = 0.0;
    for i in 0..36 {
        let n = 4 + i % 5;
        let (name, h, lattice) = match i % 3 {
            0 => ("mfi", models::build_mfi(n, 1.0, 0.5, 1.2).unwrap(), Some(LatticeSpec::chain(n))),
            1 => ("tfi", models::build_tfi(n, rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)).unwrap(), Some(LatticeSpec::chain(n))),
            _ => ("powerlaw", models::build_power_law(n, 1.0, 0.5, rng.random_range(2.5..5.0)).unwrap(), None),
        };
        let r = [1, 2, 3, 4, 6, 8, 12, 16][rng.random_range(0..8)];
        let t = rng.random_range(0.2..2.0);
        let q = rng.random_range(0..n);
        let s = SupportSet::from_qubits([q]);
        let o = models::single_z(n, q);
        let summands = models::zz_average_summands(n);
        let o_sum = PauliSum::sum_of(n, &summands).unwrap();
        let parts = models::group_commuting(&h);
        let g = build_hypergraph(&h);
        let coloring = match &lattice {
            Some(l) => color_hypergraph(&g, &ColoringStrategy::LatticeParity(l)).unwrap(),
            None => color_hypergraph(&g, &ColoringStrategy::Greedy).unwrap(),
        };
        let local = ExactHeisenberg::new(&h, &o, t).unwrap();
        let global = ExactHeisenberg::new(&h, &o_sum, t).unwrap();

        let mut record = |what: &str, emp: f64, bound: f64| {
            tightest = tightest.max(emp / bound);
            if emp > bound {
                violations.push(format!("{name} n={n} r={r} t={t:.3} {what}: {emp:.3e} > {bound:.3e}"));
            }
        };
        let red = reduced_formula(&h, &s, t, r, 2, MergePolicy::Full).unwrap();
        record("thm1", local.error(&o, &red).unwrap(), thm1_bound(&h, &s, 1.0, t, r, NormMode::Dense).unwrap().value);
        let std = standard_formula(&parts, t, r, 2, MergePolicy::Full).unwrap();
        record("worst", local.error(&o, &std).unwrap(), worst_case_p2_bound(&parts, 1.0, t, r, NormMode::Dense).unwrap().value);
        let chrom = chromatic_formula(&h, &coloring, &g, t, r, 2, MergePolicy::Full).unwrap();
        record("thm2", global.error(&o_sum, &chrom).unwrap(), thm2_bound(&h, &summands, &g, &coloring, t, r, NormMode::Dense).unwrap().value);
        let avg = empirical_average_error(&h, &o, &std, t, 200, 1000 + i as u64).unwrap();
        record("rand2", avg.mean, random_2design_bound(&parts, &o, t, r, 2, RandomStyle::TriangleP2).unwrap().value);
        record("rand1", avg.mean, random_1design_bound(&parts, &o, t, r, 50_000_000).unwrap().value);
        instances += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations.is_empty() && instances >= 30 && secs <= 600.0;
    let mut detail = format!("{instances} instances, {} violations, max empirical/bound {tightest:.3}, {secs:.1}s", violations.len());
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    check(pass, detail)
}

/// Support propagation covers the edge sets, tightly for the even-odd interactive configuration.
fn propagation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lower_fail, mut tight_fail, mut cases) = (0, 0, 0);
    while cases < 200 {
        let n = rng.random_range(2..=10);
        let h = random_chain(&mut rng, n);
        if h.is_empty() {
            continue;
        }
        let upsilon = rng.random_range(1..=4);
        let s = random_support(&mut rng, n);
        let dec = edge_sets(&h, &s, None).unwrap();
        let cone = dec.cone(upsilon.min(dec.depth()));

        let groups = rng.random_range(1..=6);
        let mut parts = vec![PauliSum::new(n); groups];
        for (p, c) in h.iter() {
            parts[rng.random_range(0..groups)].add_term(p.clone(), c).unwrap();
        }
        let mut seq = Vec::new();
        for _ in 0..upsilon {
            let mut order: Vec<usize> = (0..groups).collect();
            order.shuffle(&mut rng);
            seq.extend(order.into_iter().map(|k| parts[k].support()));
        }
        if !cone.is_subset(&propagate(&seq, &s)) {
            lower_fail += 1;
        }

        let mut tight = Vec::new();
        for v in 1..=upsilon {
            for k in even_odd_order(dec.depth(), v % 2 == 1) {
                tight.push(dec.subs[k].support());
            }
            tight.push(dec.tail.support());
        }
        if propagate(&tight, &s) != cone {
            tight_fail += 1;
        }
        cases += 1;
    }
    check(lower_fail == 0 && tight_fail == 0, format!("{cases} cases, {lower_fail} containment failures, {tight_fail} equality failures"))
}

fn reduced_vs_virtual() -> Outcome {
    let worst = (0..20).map(|seed| reduced_matches_virtual(100 + seed)).fold(0.0, f64::max);
    check(worst <= 1e-10, format!("20 cases, max deviation {worst:.2e}"))
}

fn order_scaling() -> Outcome {
    let h = models::build_tfi(6, 1.0, 1.0).unwrap();
    let o = models::single_z(6, 0);
    let parts = models::group_commuting(&h);
    let t = 1.0;
    let exact = ExactHeisenberg::new(&h, &o, t).unwrap();
    let rs = [4.0, 8.0, 16.0, 32.0, 64.0];
    let mut slopes = Vec::new();
    for p in [1, 2] {
        let errs: Vec<f64> = rs
            .iter()
            .map(|&r| exact.error(&o, &standard_formula(&parts, t, r as usize, p, MergePolicy::Full).unwrap()).unwrap())
            .collect();
        slopes.push(loglog_slope(&rs, &errs));
    }
    let pass = (slopes[0] + 1.0).abs() <= 0.15 && (slopes[1] + 2.0).abs() <= 0.15;
    check(pass, format!("slope p=1 {:.3}, p=2 {:.3}", slopes[0], slopes[1]))
}

fn size_independence() -> Outcome {
    let sizes = [20usize, 50, 100, 200];
    let mut reduced = Vec::new();
    let mut standard = Vec::new();
    for &n in &sizes {
        let h = models::build_mfi(n, 1.0, 0.5, 1.2).unwrap();
        let c = reduced_formula(&h, &SupportSet::from_qubits([0]), 0.1, 4, 2, MergePolicy::Full).unwrap();
        reduced.push(gate_count(&c, Granularity::Pauli));
        let c = standard_formula(&models::group_commuting(&h), 0.1, 4, 2, MergePolicy::Full).unwrap();
        standard.push(gate_count(&c, Granularity::Pauli));
    }
    let flat = reduced.windows(2).all(|w| w[0] == w[1]);
    let per_site: Vec<f64> = standard
        .windows(2)
        .zip(sizes.windows(2))
        .map(|(c, n)| (c[1] - c[0]) as f64 / (n[1] - n[0]) as f64)
        .collect();
    let linear = per_site.iter().all(|&x| x > 0.0 && (x - per_site[0]).abs() < 1e-12);
    check(flat && linear, format!("reduced {reduced:?}, standard {standard:?} ({:.0} per site)", per_site[0]))
}

fn norm_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let n = 1 + (seed as usize % 6);
        let a = random_sum(seed, n, 2 + (seed as usize % 9));
        let m = dense(&a);
        let d = m.nrows() as f64;
        let two = (trace_power(&m, 2) / d).sqrt();
        let four = (trace_power(&m, 4) / d).max(0.0).powf(0.25);
        worst = worst.max((a.normalized_two_norm() - two).abs());
        worst = worst.max((a.normalized_four_norm(1_000_000).unwrap() - four).abs());
    }
    let mut mag_dev: f64 = 0.0;
    for n in 1..=64 {
        mag_dev = mag_dev.max((models::magnetization(n).normalized_two_norm() - 1.0 / (n as f64).sqrt()).abs());
    }
    check(worst <= 1e-10 && mag_dev <= 2.0 * f64::EPSILON, format!("max Schatten deviation {worst:.2e}, magnetization deviation {mag_dev:.1e}"))
}

fn variance_bound() -> Outcome {
    let n = 6;
    let h = models::build_power_law(n, 1.0, 0.5, 4.0).unwrap();
    let o = models::z_sum(n);
    let parts = models::group_commuting(&h);
    let (t, r, samples) = (n as f64, 10, 500);
    let c = standard_formula(&parts, t, r, 2, MergePolicy::Full).unwrap();
    let rep = random_2design_bound(&parts, &o, t, r, 2, RandomStyle::TriangleP2).unwrap();
    let var_bound = rep.extra("variance_bound").unwrap();
    let base = empirical_average_error(&h, &o, &c, t, samples, 1).unwrap();
    let band = 4.0 * base.std / (samples as f64).sqrt();
    let reruns: Vec<f64> = (2..=5).map(|seed| empirical_average_error(&h, &o, &c, t, samples, seed).unwrap().mean).collect();
    let in_band = reruns.iter().all(|m| (m - base.mean).abs() <= band);
    let pass = base.variance() <= var_bound && in_band;
    check(
        pass,
        format!(
            "sample variance {:.3e} <= bound {var_bound:.3e}; mean {:.4}, reruns {:?} within ±{band:.4}",
            base.variance(),
            base.mean,
            reruns.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn improvement_trend() -> Outcome {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in 4..=10 {
        let h = models::build_power_law(n, 1.0, 0.5, 4.0).unwrap();
        let parts = models::group_commuting(&h);
        let o = models::z_sum(n);
        let t = n as f64;
        let r = 10;
        let ours = random_2design_bound(&parts, &o, t, r, 2, RandomStyle::TriangleP2).unwrap().value;
        let opnorm = o.operator_norm(NormMode::Dense).unwrap();
        let blind = random_bound_no_observable(&parts, opnorm, t, r).unwrap().value;
        xs.push((n as f64).sqrt());
        ys.push(blind / ours);
    }
    // Linear fit of the ratio against √n.
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let increasing = ys.windows(2).all(|w| w[1] > w[0]);
    check(r2 >= 0.95 && increasing && slope > 0.0, format!("ratio {:.3} -> {:.3} over n=4..10, R^2 {r2:.4}", ys[0], ys[ys.len() - 1]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("DQPT guaranteed times", dqpt_times),
        ("bound soundness", soundness),
        ("support propagation", propagation),
        ("reduced equals virtual", reduced_vs_virtual),
        ("order scaling", order_scaling),
        ("size-independent counts", size_independence),
        ("norm identities", norm_identities),
        ("variance bound", variance_bound),
        ("observable-aware trend", improvement_trend),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("criterion {}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
