//! Sparse Pauli-string algebra.
//!
//! A [`PauliString`] stores an n-qubit word as X and Z bitmasks (qubit `q` is
//! bit `q % 64` of word `q / 64`). Words with both bits set are Y, so a string
//! is the phase-free operator `i^{|x & z|} X^x Z^z`. A [`PauliSum`] maps words to
//! real coefficients and therefore always represents a Hermitian operator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::linalg;

/// Coefficients smaller than this in magnitude are dropped after arithmetic.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Default largest qubit count for dense (matrix) evaluation.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

type Words = SmallVec<[u64; 1]>;

fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A power of `i`: one of `+1, +i, -1, -i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Phase {
        Phase((k % 4) as u8)
    }

    /// Exponent `k` in `i^k`.
    pub fn power(self) -> u32 {
        self.0 as u32
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Set of qubit indices an operator acts on.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSet(BTreeSet<usize>);

impl SupportSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_qubits<I: IntoIterator<Item = usize>>(qubits: I) -> Self {
        SupportSet(qubits.into_iter().collect())
    }

    /// All qubits `0..n`.
    pub fn full(n: usize) -> Self {
        Self::from_qubits(0..n)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.contains(&q)
    }

    pub fn insert(&mut self, q: usize) -> bool {
        self.0.insert(q)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersects(&self, other: &SupportSet) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.iter().any(|q| large.0.contains(q))
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union_with(&mut self, other: &SupportSet) {
        self.0.extend(other.0.iter().copied());
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        SupportSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn max(&self) -> Option<usize> {
        self.0.iter().next_back().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SupportSet(iter.into_iter().collect())
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "}}")
    }
}

/// An n-qubit Pauli word without phase.
///
/// Ordering compares the X masks first, so words without X or Y components sort
/// before all others.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    n: usize,
    x: Words,
    z: Words,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = word_count(n);
        PauliString { n, x: smallvec![0; w], z: smallvec![0; w] }
    }

    /// Word with the given single-qubit operators; unlisted qubits are identity.
    pub fn from_ops(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(n);
        for &(q, op) in ops {
            if q >= n {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range for n={n}")));
            }
            p.set(q, op);
        }
        Ok(p)
    }

    /// Single-qubit operator `op` on qubit `q`.
    pub fn single(n: usize, q: usize, op: Pauli) -> Self {
        let mut p = Self::identity(n);
        p.set(q, op);
        p
    }

    /// Builds a word from X and Z masks given as qubit-indexed 64-bit words.
    pub fn from_masks(n: usize, x: &[u64], z: &[u64]) -> Result<Self> {
        let w = word_count(n);
        if x.len() != w || z.len() != w {
            return Err(Error::InvalidArgument(format!("expected {w} mask words for n={n}")));
        }
        let p = PauliString { n, x: x.into(), z: z.into() };
        let rem = n % 64;
        if rem != 0 || n == 0 {
            let mask = if n == 0 { 0 } else { (1u64 << rem) - 1 };
            if (p.x[w - 1] | p.z[w - 1]) & !mask != 0 {
                return Err(Error::InvalidArgument("mask bits above n".into()));
            }
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> &[u64] {
        &self.x
    }

    pub fn z_mask(&self) -> &[u64] {
        &self.z
    }

    pub fn op(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, q: usize, op: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for n={}", self.n);
        let (w, b) = (q / 64, q % 64);
        let (xb, zb) = op.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|&w| w == 0)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(x, z)| (x | z).count_ones() as usize).sum()
    }

    /// Number of Y factors.
    pub fn y_count(&self) -> u32 {
        self.x.iter().zip(&self.z).map(|(x, z)| (x & z).count_ones()).sum()
    }

    pub fn support(&self) -> SupportSet {
        let mut s = SupportSet::new();
        for (w, (x, z)) in self.x.iter().zip(&self.z).enumerate() {
            let mut m = x | z;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                s.insert(w * 64 + b);
                m &= m - 1;
            }
        }
        s
    }

    /// Symplectic commutation test.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut parity = 0u32;
        for i in 0..self.x.len() {
            parity ^= (self.x[i] & other.z[i]).count_ones() ^ (other.x[i] & self.z[i]).count_ones();
        }
        parity & 1 == 0
    }

    /// Product `self · other = phase · word`.
    pub fn multiply(&self, other: &PauliString) -> Result<(PauliString, Phase)> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> (PauliString, Phase) {
        // P = i^{|x z|} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1 x2|} X^x2 Z^z1.
        let mut k: u32 = 0;
        let mut x: Words = SmallVec::with_capacity(self.x.len());
        let mut z: Words = SmallVec::with_capacity(self.x.len());
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], other.x[i], other.z[i]);
            let (xo, zo) = (x1 ^ x2, z1 ^ z2);
            k += (x1 & z1).count_ones() + (x2 & z2).count_ones() + 2 * (z1 & x2).count_ones();
            k += 3 * (xo & zo).count_ones();
            x.push(xo);
            z.push(zo);
        }
        (PauliString { n: self.n, x, z }, Phase::from_power(k))
    }

    /// Moves the word onto a larger register, mapping local qubit `j` to `map[j]`.
    pub fn embed(&self, n: usize, map: &[usize]) -> Result<PauliString> {
        if map.len() != self.n {
            return Err(Error::SizeMismatch(map.len(), self.n));
        }
        let mut out = PauliString::identity(n);
        for (j, &q) in map.iter().enumerate() {
            if q >= n {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range for n={n}")));
            }
            out.set(q, self.op(j));
        }
        Ok(out)
    }

    /// Low 64 bits of the masks as dense basis-index masks, where qubit 0 is the
    /// most significant bit of an `n`-bit index.
    pub(crate) fn dense_masks(&self) -> (usize, usize) {
        let mut xm = 0usize;
        let mut zm = 0usize;
        for q in 0..self.n {
            let bit = 1usize << (self.n - 1 - q);
            let (xb, zb) = self.op(q).bits();
            if xb {
                xm |= bit;
            }
            if zb {
                zm |= bit;
            }
        }
        (xm, zm)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.op(q).to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        let mut p = PauliString::identity(chars.len());
        for (q, c) in chars.iter().enumerate() {
            let op = Pauli::from_char(*c).ok_or_else(|| Error::InvalidWord {
                word: s.to_string(),
                reason: format!("unexpected character {c:?}"),
            })?;
            p.set(q, op);
        }
        Ok(p)
    }
}

/// How operator norms are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Spectral norm of the materialized operator.
    Dense,
    /// The Pauli 1-norm, an upper bound on the spectral norm.
    OneNorm,
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(NormMode::Dense),
            "one-norm" | "one_norm" | "onenorm" => Ok(NormMode::OneNorm),
            _ => Err(Error::InvalidArgument(format!("unknown norm mode {s:?}"))),
        }
    }
}

/// A real linear combination of Pauli words on `n` qubits.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        PauliSum { n, terms: BTreeMap::new() }
    }

    pub fn from_terms<I: IntoIterator<Item = (PauliString, f64)>>(n: usize, terms: I) -> Result<Self> {
        let mut s = PauliSum::new(n);
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    /// Sum from `(coefficient, word)` pairs in text form, e.g. `[(1.0, "XZ")]`.
    pub fn from_words(n: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let mut s = PauliSum::new(n);
        for &(c, w) in terms {
            let p: PauliString = w.parse()?;
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    pub fn single(p: PauliString, coeff: f64) -> Self {
        let mut s = PauliSum::new(p.n());
        s.add_unchecked(p, coeff);
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical word order.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, p: PauliString, coeff: f64) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch(self.n, p.n()));
        }
        self.add_unchecked(p, coeff);
        Ok(())
    }

    pub(crate) fn add_unchecked(&mut self, p: PauliString, coeff: f64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(p) {
            Entry::Vacant(e) => {
                if coeff.abs() >= DROP_TOLERANCE {
                    e.insert(coeff);
                }
            }
            Entry::Occupied(mut e) => {
                let v = *e.get() + coeff;
                if v.abs() < DROP_TOLERANCE {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &PauliSum) -> Result<()> {
        if other.n != self.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        for (p, c) in other.iter() {
            self.add_unchecked(p.clone(), c);
        }
        Ok(())
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> PauliSum {
        let mut out = PauliSum::new(self.n);
        for (p, c) in self.iter() {
            out.add_unchecked(p.clone(), c * factor);
        }
        out
    }

    /// Sum of several operators on the same register. An empty list gives the empty sum on `n` qubits.
    pub fn sum_of<'a, I: IntoIterator<Item = &'a PauliSum>>(n: usize, parts: I) -> Result<PauliSum> {
        let mut out = PauliSum::new(n);
        for part in parts {
            out.add_assign(part)?;
        }
        Ok(out)
    }

    pub fn support(&self) -> SupportSet {
        let mut s = SupportSet::new();
        for p in self.terms.keys() {
            s.union_with(&p.support());
        }
        s
    }

    /// True if every pair of words commutes.
    pub fn terms_commute(&self) -> bool {
        let words: Vec<&PauliString> = self.terms.keys().collect();
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                if !words[i].commutes_with(words[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Hermitian commutator `C` with `[self, other] = i·C`.
    ///
    /// For anticommuting words `P·Q = ±i W`, so `[P, Q] = ±2i W` and `C` stores `±2` on `W`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        let mut acc: HashMap<PauliString, f64> = HashMap::new();
        for (p, a) in self.iter() {
            for (q, b) in other.iter() {
                if p.commutes_with(q) {
                    continue;
                }
                let (w, phase) = p.mul_unchecked(q);
                // phase is +i or -i; -i * 2 * phase is then +2 or -2.
                let sign = if phase == Phase::I { 2.0 } else { -2.0 };
                *acc.entry(w).or_insert(0.0) += sign * a * b;
            }
        }
        let mut out = PauliSum::new(self.n);
        for (w, c) in acc {
            if c.abs() >= DROP_TOLERANCE {
                out.terms.insert(w, c);
            }
        }
        Ok(out)
    }

    /// True if the symbolic commutator vanishes.
    pub fn commutes_with(&self, other: &PauliSum) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        if self.iter().all(|(p, _)| other.iter().all(|(q, _)| p.commutes_with(q))) {
            return Ok(true);
        }
        Ok(self.commutator(other)?.is_empty())
    }

    /// Σ|s_α|.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// ‖A‖₂/√d = sqrt(Σ s_α²), exact by orthogonality of Pauli words.
    pub fn normalized_two_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// ‖A‖₄/d^{1/4} = (Σ_β |c'_β|²)^{1/4} where A·A† = Σ_β c'_β P_β is expanded symbolically.
    ///
    /// Fails if the number of word products `len()²` exceeds `budget`.
    pub fn normalized_four_norm(&self, budget: usize) -> Result<f64> {
        let m = self.len();
        let needed = m.saturating_mul(m);
        if needed > budget {
            return Err(Error::Budget { needed, budget });
        }
        let mut acc: HashMap<PauliString, Complex64> = HashMap::with_capacity(needed.min(1 << 20));
        for (p, a) in self.iter() {
            for (q, b) in self.iter() {
                let (w, phase) = p.mul_unchecked(q);
                *acc.entry(w).or_insert(Complex64::new(0.0, 0.0)) += phase.to_complex() * (a * b);
            }
        }
        // Hash iteration order varies between runs; sum in a fixed order.
        let mut sq: Vec<f64> = acc.values().map(|c| c.norm_sqr()).collect();
        sq.sort_by(f64::total_cmp);
        let s: f64 = sq.iter().sum();
        Ok(s.sqrt().sqrt())
    }

    /// Operator norm, either exact (dense) or the 1-norm upper bound.
    pub fn operator_norm(&self, mode: NormMode) -> Result<f64> {
        self.operator_norm_with_limit(mode, DEFAULT_DENSE_LIMIT)
    }

    /// The dense limit applies to the support size, not the register width.
    pub fn operator_norm_with_limit(&self, mode: NormMode, dense_limit: usize) -> Result<f64> {
        match mode {
            NormMode::OneNorm => Ok(self.one_norm()),
            NormMode::Dense => {
                let k = self.support().len();
                if k > dense_limit {
                    return Err(Error::DenseLimit { n: k, limit: dense_limit });
                }
                Ok(linalg::pauli_spectral_norm(self))
            }
        }
    }

    /// Serializes to the text format: a `# n=<n>` header and one `<coeff> <word>` line per term.
    pub fn to_text(&self) -> String {
        let mut out = format!("# n={}\n", self.n);
        for (p, c) in self.iter() {
            out.push_str(&format!("{c:?} {p}\n"));
        }
        out
    }

    /// Parses the text format. Duplicate words are merged by adding coefficients.
    ///
    /// The qubit count is taken from a `# n=<n>` header when present, otherwise
    /// from the word length. An empty input without header gives `n = 0`.
    pub fn from_text(text: &str) -> Result<PauliSum> {
        let mut header_n: Option<usize> = None;
        let mut rows: Vec<(usize, f64, PauliString)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("n=") {
                    let n = v.trim().parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        reason: format!("bad header {line:?}"),
                    })?;
                    header_n = Some(n);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(c), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse { line: line_no, reason: format!("expected `<coeff> <word>`, got {line:?}") });
            };
            let coeff: f64 = c
                .parse()
                .map_err(|_| Error::Parse { line: line_no, reason: format!("bad coefficient {c:?}") })?;
            if !coeff.is_finite() {
                return Err(Error::Parse { line: line_no, reason: "non-finite coefficient".into() });
            }
            let word: PauliString =
                w.parse().map_err(|e: Error| Error::Parse { line: line_no, reason: e.to_string() })?;
            rows.push((line_no, coeff, word));
        }
        let n = header_n.or_else(|| rows.first().map(|r| r.2.n())).unwrap_or(0);
        let mut out = PauliSum::new(n);
        for (line_no, c, w) in rows {
            if w.n() != n {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("word {w} has length {} but n={n}", w.n()),
                });
            }
            out.add_unchecked(w, c);
        }
        Ok(out)
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliSum(n={}, [", self.n)?;
        for (i, (p, c)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c} {p}")?;
        }
        write!(f, "])")
    }
}
