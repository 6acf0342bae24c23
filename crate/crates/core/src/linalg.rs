//! Matrix-free kernels on state vectors: Pauli-sum products, Lanczos extremal
//! eigenvalues, Pauli rotations, local dense gates and Taylor propagation.
//!
//! Basis index convention: qubit 0 is the most significant bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pauli::{PauliString, PauliSum};

pub(crate) type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// One Pauli term prepared for action on basis states:
/// `P|b> = phase · (-1)^{|z & b|} |b ^ x>`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DenseTerm {
    pub x: usize,
    pub z: usize,
    pub coeff: C64,
}

impl DenseTerm {
    pub fn new(p: &PauliString, c: f64) -> Self {
        let (x, z) = p.dense_masks();
        let phase = crate::pauli::Phase::from_power(p.y_count()).to_complex();
        DenseTerm { x, z, coeff: phase * c }
    }
}

pub(crate) fn compile(a: &PauliSum) -> Vec<DenseTerm> {
    a.iter().map(|(p, c)| DenseTerm::new(p, c)).collect()
}

#[inline]
fn parity_sign(v: usize) -> f64 {
    if v.count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `out = A v` for a compiled Pauli sum.
pub(crate) fn matvec(terms: &[DenseTerm], v: &[C64], out: &mut [C64]) {
    out.iter_mut().for_each(|o| *o = ZERO);
    for t in terms {
        for (b, &amp) in v.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            out[b ^ t.x] += t.coeff * amp * parity_sign(t.z & b);
        }
    }
}

/// `<v|A|v>` for a compiled Pauli sum.
pub(crate) fn expectation(terms: &[DenseTerm], v: &[C64]) -> C64 {
    let mut acc = ZERO;
    for t in terms {
        let mut s = ZERO;
        for (b, &amp) in v.iter().enumerate() {
            s += v[b ^ t.x].conj() * amp * parity_sign(t.z & b);
        }
        acc += t.coeff * s;
    }
    acc
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x` (Sturm count).
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = alpha[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (alpha[i].abs() + x.abs() + 1e-300);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest and largest eigenvalue of a symmetric tridiagonal matrix by bisection.
fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let bisect = |k: usize| -> f64 {
        // k-th smallest eigenvalue (0-based).
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(alpha, beta, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    (bisect(0), bisect(m - 1))
}

/// Extremal eigenvalues of a Hermitian operator given by its action, using
/// Lanczos with full reorthogonalisation.
pub(crate) fn lanczos_extremes<F>(dim: usize, mut apply: F) -> (f64, f64)
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let max_iter = dim;
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];
    let mut last = (f64::NAN, f64::NAN);
    let mut scale = 0.0f64;
    loop {
        apply(&v, &mut w);
        let a = dot(&v, &w).re;
        alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= vi * a;
        }
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= pi * b;
            }
        }
        basis.push(v.clone());
        // Full reorthogonalisation, twice for stability.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
        }
        let b = norm(&w);
        scale = scale.max(a.abs()).max(b);
        let m = alpha.len();
        let exhausted = m >= max_iter || b <= 1e-13 * scale.max(1e-300);
        if exhausted || m % 4 == 0 {
            let ext = tridiagonal_extremes(&alpha, &beta);
            let tol = 1e-13 * scale.max(1e-300);
            if exhausted || ((ext.0 - last.0).abs() <= tol && (ext.1 - last.1).abs() <= tol && m >= 12) {
                return ext;
            }
            last = ext;
        }
        beta.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
}

/// Spectral norm of a Hermitian Pauli sum (at most 63 qubits; callers enforce the dense limit).
pub(crate) fn pauli_spectral_norm(a: &PauliSum) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let support = a.support();
    // Act only on the support: the norm is unchanged by tensoring with identity.
    let map: Vec<usize> = support.to_vec();
    let local = restrict(a, &map);
    let n = map.len();
    let dim = 1usize << n;
    let terms = compile(&local);
    if dim <= 64 {
        let m = dense_matrix(&terms, dim);
        let eig = m.symmetric_eigenvalues();
        return eig.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    }
    let (lo, hi) = lanczos_extremes(dim, |v, out| matvec(&terms, v, out));
    lo.abs().max(hi.abs())
}

/// Restricts a sum to the listed qubits (which must contain its support); local qubit `j` is `map[j]`.
pub(crate) fn restrict(a: &PauliSum, map: &[usize]) -> PauliSum {
    let k = map.len();
    let mut out = PauliSum::new(k);
    for (p, c) in a.iter() {
        let mut q = PauliString::identity(k);
        for (j, &g) in map.iter().enumerate() {
            q.set(j, p.op(g));
        }
        out.add_unchecked(q, c);
    }
    out
}

pub(crate) fn dense_matrix(terms: &[DenseTerm], dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for t in terms {
        for b in 0..dim {
            m[(b ^ t.x, b)] += t.coeff * parity_sign(t.z & b);
        }
    }
    m
}

/// `exp(i θ A)` for a Hermitian matrix, via eigendecomposition.
pub(crate) fn hermitian_exp(a: &DMatrix<C64>, theta: f64) -> DMatrix<C64> {
    let eig = a.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let ph = C64::from_polar(1.0, theta * lam);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= ph);
    }
    scaled * v.adjoint()
}

/// `v <- exp(i φ P) v = cos φ v + i sin φ P v` for one Pauli term with unit coefficient
/// (the term's coefficient only contributes its phase `i^{#Y}`).
pub(crate) fn apply_pauli_rotation(v: &mut [C64], x: usize, z: usize, phase: C64, phi: f64) {
    let (c, s) = (phi.cos(), phi.sin());
    let is = C64::new(0.0, s);
    if x == 0 {
        // Diagonal: P|b> = phase·(±1)|b>, with phase real (= ±1) since #Y = 0.
        let plus = C64::new(c, 0.0) + is * phase;
        let minus = C64::new(c, 0.0) - is * phase;
        for (b, amp) in v.iter_mut().enumerate() {
            *amp *= if (z & b).count_ones() & 1 == 0 { plus } else { minus };
        }
        return;
    }
    let hb = 1usize << (usize::BITS - 1 - x.leading_zeros());
    for b in 0..v.len() {
        if b & hb != 0 {
            continue;
        }
        let b2 = b ^ x;
        let (a1, a2) = (v[b], v[b2]);
        // (P v)[b2] = phase·sgn(b)·v[b], (P v)[b] = phase·sgn(b2)·v[b2]
        let p_b = phase * parity_sign(z & b2) * a2;
        let p_b2 = phase * parity_sign(z & b) * a1;
        v[b] = a1 * c + is * p_b;
        v[b2] = a2 * c + is * p_b2;
    }
}

/// Applies a dense unitary acting on `qubits` (local qubit `j` is `qubits[j]`) to `v` on `n` qubits.
pub(crate) fn apply_local(v: &mut [C64], n: usize, qubits: &[usize], u: &DMatrix<C64>) {
    let k = qubits.len();
    let ldim = 1usize << k;
    let bits: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let local_mask: usize = bits.iter().sum();
    let offsets: Vec<usize> = (0..ldim)
        .map(|l| {
            let mut off = 0;
            for (j, &bit) in bits.iter().enumerate() {
                if (l >> (k - 1 - j)) & 1 == 1 {
                    off |= bit;
                }
            }
            off
        })
        .collect();
    let mut buf = vec![ZERO; ldim];
    let mut out = vec![ZERO; ldim];
    for base in 0..v.len() {
        if base & local_mask != 0 {
            continue;
        }
        for (l, &off) in offsets.iter().enumerate() {
            buf[l] = v[base | off];
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = ZERO;
            for (j, &bj) in buf.iter().enumerate() {
                s += u[(i, j)] * bj;
            }
            *o = s;
        }
        for (l, &off) in offsets.iter().enumerate() {
            v[base | off] = out[l];
        }
    }
}

/// `v <- exp(i θ A) v` by truncated Taylor series in sub-steps of size at most 1/‖A‖₁.
pub(crate) fn taylor_propagate(terms: &[DenseTerm], one_norm: f64, theta: f64, v: &mut [C64]) {
    if theta == 0.0 || one_norm == 0.0 {
        return;
    }
    let steps = (one_norm * theta.abs()).ceil().max(1.0) as usize;
    let dt = theta / steps as f64;
    let dim = v.len();
    let mut term = vec![ZERO; dim];
    let mut next = vec![ZERO; dim];
    let i_dt = C64::new(0.0, dt);
    for _ in 0..steps {
        term.copy_from_slice(v);
        let vnorm = norm(v).max(1e-300);
        for k in 1..200 {
            matvec(terms, &term, &mut next);
            let f = i_dt / k as f64;
            let mut tn = 0.0;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * f;
                tn += t.norm_sqr();
            }
            for (vi, t) in v.iter_mut().zip(&term) {
                *vi += t;
            }
            if tn.sqrt() <= 1e-17 * vnorm {
                break;
            }
        }
    }
}
