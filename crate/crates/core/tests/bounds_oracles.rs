mod common;

use common::*;
use lctrotter::bounds::{
    light_cone_parts, random_1design_bound, random_2design_bound, random_bound_no_observable, steps_for_epsilon,
    thm1_bound, thm2_bound, truncation_bound, worst_case_p2_bound, RandomStyle, StepSearch, TruncationVariant,
};
use lctrotter::exactsim::{empirical_average_error, heisenberg_error};
use lctrotter::lightcone::{build_hypergraph, color_hypergraph, ColoringStrategy};
use lctrotter::models::{self, LatticeSpec};
use lctrotter::trotter::{chromatic_formula, reduced_formula, standard_formula, MergePolicy};
use lctrotter::{NormMode, PauliSum, SupportSet};

fn comm(a: &M, b: &M) -> M {
    a * b - b * a
}

/// Dense evaluation of the second-order sum with suffix sums.
fn dense_commutator_sum(parts: &[PauliSum]) -> f64 {
    let ms: Vec<M> = parts.iter().map(dense).collect();
    let mut total = 0.0;
    for i in 0..ms.len() {
        let mut r = M::zeros(ms[i].nrows(), ms[i].ncols());
        for m in &ms[i + 1..] {
            r += m;
        }
        let inner = comm(&r, &ms[i]);
        // Both double commutators of Hermitian matrices are Hermitian.
        total += hermitian_opnorm(&comm(&r, &inner));
        total += 0.5 * hermitian_opnorm(&comm(&ms[i], &inner));
    }
    total
}

#[test]
fn worst_case_matches_dense_oracle() {
    let h = models::build_tfi(3, 1.0, 0.7).unwrap();
    let a = PauliSum::from_words(3, &[(1.0, "ZZI"), (1.0, "IZZ")]).unwrap();
    let b = PauliSum::from_words(3, &[(0.7, "XII"), (0.7, "IXI"), (0.7, "IIX")]).unwrap();
    assert_eq!(models::group_commuting(&h), vec![a.clone(), b.clone()]);
    let w = dense_commutator_sum(&[a.clone(), b.clone()]);
    let rep = worst_case_p2_bound(&[a, b], 1.0, 0.5, 2, NormMode::Dense).unwrap();
    let expect = 0.5f64.powi(3) / (6.0 * 4.0) * w;
    assert!((rep.value - expect).abs() < 1e-12 * expect.max(1.0));
    // Frozen from the dense oracle above.
    assert!((w - 17.847_232_303_649_733).abs() < 1e-9, "{w}");
}

#[test]
fn light_cone_parts_match_hand_partition() {
    // MFI chain of five sites around qubit 0 with r = 1 keeps layers 0..=2.
    let h = models::build_mfi(5, 1.0, 0.5, 1.2).unwrap();
    let parts = light_cone_parts(&h, &SupportSet::from_qubits([0]), 1).unwrap();
    let h0 = PauliSum::from_words(5, &[(0.5, "XIIII"), (1.2, "YIIII")]).unwrap();
    let h1 = PauliSum::from_words(5, &[(1.0, "XXIII")]).unwrap();
    let h2 = PauliSum::from_words(5, &[(0.5, "IXIII"), (1.2, "IYIII"), (1.0, "IXXII")]).unwrap();
    let rest = h.sub(&PauliSum::sum_of(5, [&h0, &h1, &h2]).unwrap()).unwrap();
    assert_eq!(parts, vec![h0.clone(), h1.clone(), h2.clone(), rest.clone()]);
    let w = dense_commutator_sum(&[h0, h1, h2, rest]);
    let rep = thm1_bound(&h, &SupportSet::from_qubits([0]), 1.0, 0.3, 1, NormMode::Dense).unwrap();
    assert!((rep.value - 0.027 / 6.0 * w).abs() < 1e-12);
}

#[test]
fn bounds_scale_as_t_cubed_over_r_squared() {
    let h = models::build_mfi(6, 1.0, 0.5, 1.2).unwrap();
    let parts = models::group_commuting(&h);
    let o = models::single_z(6, 0);
    let b = |t: f64, r: usize| worst_case_p2_bound(&parts, 1.0, t, r, NormMode::Dense).unwrap().value;
    assert!((b(0.4, 3) / b(0.2, 3) - 8.0).abs() < 1e-10);
    assert!((b(0.4, 2) / b(0.4, 4) - 4.0).abs() < 1e-10);
    let r2 = |r| random_2design_bound(&parts, &o, 0.5, r, 2, RandomStyle::TriangleP2).unwrap().value;
    assert!((r2(1) / r2(3) - 9.0).abs() < 1e-10);
}

#[test]
fn one_norm_mode_dominates_dense() {
    let h = models::build_power_law(5, 1.0, 0.5, 3.0).unwrap();
    let parts = models::group_commuting(&h);
    let d = worst_case_p2_bound(&parts, 1.0, 1.0, 1, NormMode::Dense).unwrap().value;
    let o = worst_case_p2_bound(&parts, 1.0, 1.0, 1, NormMode::OneNorm).unwrap().value;
    assert!(o >= d);
}

#[test]
fn observable_aware_bound_beats_observable_blind_by_sqrt_2n() {
    // For O = Σ Z_j: ‖O‖ = n and n₂(O) = √n, so the ratio is √(2n).
    for n in 3..=7 {
        let h = models::build_power_law(n, 1.0, 0.5, 4.0).unwrap();
        let parts = models::group_commuting(&h);
        let o = models::z_sum(n);
        let ours = random_2design_bound(&parts, &o, n as f64, 5, 2, RandomStyle::TriangleP2).unwrap().value;
        let blind = random_bound_no_observable(&parts, n as f64, n as f64, 5).unwrap().value;
        assert!((blind / ours - (2.0 * n as f64).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn step_search_finds_the_smallest_r() {
    let h = models::build_tfi(6, 1.0, 1.0).unwrap();
    let parts = models::group_commuting(&h);
    let f = |r| Ok(worst_case_p2_bound(&parts, 1.0, 2.0, r, NormMode::Dense)?.value);
    let StepSearch::Found(r) = steps_for_epsilon(f, 1e-3, 100_000).unwrap() else { panic!("unreachable") };
    assert!(f(r).unwrap() <= 1e-3);
    assert!(f(r - 1).unwrap() > 1e-3);
    assert_eq!(steps_for_epsilon(f, 1e-30, 1000).unwrap(), StepSearch::Unreachable);
    assert_eq!(steps_for_epsilon(f, 1e9, 1000).unwrap(), StepSearch::Found(1));
}

#[test]
fn truncation_shapes() {
    let lc = truncation_bound(0.3, 2.0, TruncationVariant::LightCone).unwrap();
    assert!((lc.value - 0.6).abs() < 1e-15);
    let v = TruncationVariant::Global { dimension: 1, alpha: 4.0, d0: 2.0, observable_norm_sum: 3.0, constant: 1.0 };
    let g = truncation_bound(0.0, 1.5, v).unwrap();
    assert!((g.value - 1.5f64.powi(2) * 3.0 / 4.0).abs() < 1e-12);
}

/// A handful of small instances; the acceptance suite runs the full sweep.
#[test]
fn bounds_dominate_empirical_errors() {
    let h = models::build_mfi(5, 1.0, 0.5, 1.2).unwrap();
    let s = SupportSet::from_qubits([2]);
    let o = models::single_z(5, 2);
    let parts = models::group_commuting(&h);
    let g = build_hypergraph(&h);
    let col = color_hypergraph(&g, &ColoringStrategy::LatticeParity(&LatticeSpec::chain(5))).unwrap();
    let summands = models::zz_average_summands(5);
    let o_sum = PauliSum::sum_of(5, &summands).unwrap();
    for r in [1, 3, 8] {
        let t = 0.8;
        let red = reduced_formula(&h, &s, t, r, 2, MergePolicy::Full).unwrap();
        let b1 = thm1_bound(&h, &s, 1.0, t, r, NormMode::Dense).unwrap().value;
        assert!(heisenberg_error(&h, &o, &red, t).unwrap() <= b1);
        let std = standard_formula(&parts, t, r, 2, MergePolicy::Full).unwrap();
        let bw = worst_case_p2_bound(&parts, 1.0, t, r, NormMode::Dense).unwrap().value;
        assert!(heisenberg_error(&h, &o, &std, t).unwrap() <= bw);
        let chrom = chromatic_formula(&h, &col, &g, t, r, 2, MergePolicy::Full).unwrap();
        let b2 = thm2_bound(&h, &summands, &g, &col, t, r, NormMode::Dense).unwrap().value;
        assert!(heisenberg_error(&h, &o_sum, &chrom, t).unwrap() <= b2);
        let avg = empirical_average_error(&h, &o, &std, t, 200, 9).unwrap();
        assert!(avg.mean <= random_2design_bound(&parts, &o, t, r, 2, RandomStyle::TriangleP2).unwrap().value);
        assert!(avg.mean <= random_1design_bound(&parts, &o, t, r, 1_000_000).unwrap().value);
    }
}
