//! Dense oracles built directly from 2×2 Pauli matrices, independent of the
//! library's bitmask kernels.

#![allow(dead_code)]

use lctrotter::exactsim::{conjugate_by_gates, materialize};
use lctrotter::models;
use lctrotter::trotter::{reduced_formula, virtual_formula, MergePolicy};
use lctrotter::{PauliString, PauliSum, SupportSet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(ch: char) -> M {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match ch {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad letter {ch}"),
    }
}

/// Kronecker product with the leftmost letter as the most significant factor.
pub fn word(w: &str) -> M {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for ch in w.chars() {
        m = m.kronecker(&single(ch));
    }
    m
}

pub fn dense(s: &PauliSum) -> M {
    let d = 1usize << s.n();
    let mut m = DMatrix::from_element(d, d, c(0.0, 0.0));
    for (p, coeff) in s.iter() {
        m += word(&p.to_string()) * c(coeff, 0.0);
    }
    m
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest |eigenvalue| of a Hermitian matrix.
pub fn hermitian_opnorm(m: &M) -> f64 {
    m.clone().symmetric_eigenvalues().iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn trace_power(m: &M, k: u32) -> f64 {
    let mut p = m.clone();
    for _ in 1..k {
        p = &p * m;
    }
    p.trace().re
}

pub fn expm_i(h: &M, t: f64) -> M {
    // e^{iHt} through the Hermitian eigendecomposition.
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex64::from_polar(1.0, x * t)));
    v * d * v.adjoint()
}

pub fn random_word(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect()
}

pub fn random_sum(seed: u64, n: usize, terms: usize) -> PauliSum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = PauliSum::new(n);
    for _ in 0..terms {
        let w = random_word(&mut rng, n);
        let coeff = rng.random_range(-1.0..1.0);
        s.add_term(w.parse().unwrap(), coeff).unwrap();
    }
    s
}

pub fn word_strategy(n: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
        .prop_map(|v| v.into_iter().collect())
}

pub fn sum_strategy(n: usize, max_terms: usize) -> impl Strategy<Value = PauliSum> {
    proptest::collection::vec((word_strategy(n), -2.0f64..2.0), 0..=max_terms).prop_map(move |terms| {
        let mut s = PauliSum::new(n);
        for (w, c) in terms {
            s.add_term(w.parse().unwrap(), c).unwrap();
        }
        s
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Random chain Hamiltonian: one- and two-site terms on neighbors, each present with probability 3/4.
pub fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> PauliSum {
    let letters = ['X', 'Y', 'Z'];
    let mut h = PauliSum::new(n);
    for q in 0..n {
        if rng.random_bool(0.75) {
            let mut w = vec!['I'; n];
            w[q] = letters[rng.random_range(0..3)];
            let p: PauliString = w.iter().collect::<String>().parse().unwrap();
            h.add_term(p, rng.random_range(0.1..1.0)).unwrap();
        }
        if q + 1 < n && rng.random_bool(0.75) {
            let mut w = vec!['I'; n];
            w[q] = letters[rng.random_range(0..3)];
            w[q + 1] = letters[rng.random_range(0..3)];
            let p: PauliString = w.iter().collect::<String>().parse().unwrap();
            h.add_term(p, rng.random_range(0.1..1.0)).unwrap();
        }
    }
    h
}

pub fn random_support(rng: &mut ChaCha8Rng, n: usize) -> SupportSet {
    let start = rng.random_range(0..n);
    let len = rng.random_range(1..=(n - start).min(3));
    SupportSet::from_qubits(start..start + len)
}

pub fn random_local_observable(rng: &mut ChaCha8Rng, n: usize, s: &SupportSet) -> PauliSum {
    let mut o = PauliSum::new(n);
    for _ in 0..3 {
        let mut w = vec!['I'; n];
        for q in s.iter() {
            w[q] = ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)];
        }
        o.add_term(w.iter().collect::<String>().parse().unwrap(), rng.random_range(-1.0..1.0)).unwrap();
    }
    o
}

/// Reduced and virtual formulas act identically on observables supported in `S`.
pub fn reduced_matches_virtual(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=8);
    let h = match rng.random_range(0..3) {
        0 => models::build_mfi(n, 1.0, 0.5, 1.2).unwrap(),
        1 => models::build_tfi(n, rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)).unwrap(),
        _ => models::build_power_law(n, 1.0, 0.5, 4.0).unwrap(),
    };
    let q = rng.random_range(0..n);
    let s = if q + 1 < n && rng.random_bool(0.5) { SupportSet::from_qubits([q, q + 1]) } else { SupportSet::from_qubits([q]) };
    let r = rng.random_range(1..=4);
    let t = rng.random_range(0.1..1.5);
    let o = materialize(&random_local_observable(&mut rng, n, &s)).unwrap();
    let red = conjugate_by_gates(&reduced_formula(&h, &s, t, r, 2, MergePolicy::Full).unwrap(), &o).unwrap();
    let virt = conjugate_by_gates(&virtual_formula(&h, &s, t, r, 2).unwrap(), &o).unwrap();
    max_abs(&(red.matrix - virt.matrix))
}

