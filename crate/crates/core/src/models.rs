//! Benchmark Hamiltonians, observables, file ingestion, commuting groups and
//! power-law truncation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, SupportSet};

/// A hypercubic lattice with open (default) or periodic boundaries.
///
/// Sites are numbered with axis 0 varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub extents: Vec<usize>,
    #[serde(default)]
    pub periodic: bool,
}

impl LatticeSpec {
    pub fn chain(n: usize) -> Self {
        LatticeSpec { extents: vec![n], periodic: false }
    }

    pub fn grid(extents: &[usize]) -> Result<Self> {
        if extents.is_empty() || extents.iter().any(|&e| e == 0) {
            return Err(Error::InvalidArgument("lattice needs D >= 1 and positive extents".into()));
        }
        Ok(LatticeSpec { extents: extents.to_vec(), periodic: false })
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        self.extents
            .iter()
            .map(|&e| {
                let c = rest % e;
                rest /= e;
                c
            })
            .collect()
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &c) in coords.iter().enumerate().rev() {
            idx = idx * self.extents[a] + c;
        }
        idx
    }

    /// Euclidean distance between two sites (minimum image when periodic).
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (ci, cj) = (self.coords(i), self.coords(j));
        let mut s = 0.0;
        for a in 0..self.dimension() {
            let mut d = ci[a].abs_diff(cj[a]);
            if self.periodic {
                d = d.min(self.extents[a] - d);
            }
            s += (d * d) as f64;
        }
        s.sqrt()
    }

    /// Largest pairwise distance within a support.
    pub fn diameter(&self, s: &SupportSet) -> f64 {
        let v = s.to_vec();
        let mut best = 0.0f64;
        for (a, &i) in v.iter().enumerate() {
            for &j in &v[a + 1..] {
                best = best.max(self.distance(i, j));
            }
        }
        best
    }

    /// Nearest-neighbour edges `(i, j)` with `i < j`, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.sites() {
            let c = self.coords(i);
            for a in 0..self.dimension() {
                let e = self.extents[a];
                let mut nc = c.clone();
                if c[a] + 1 < e {
                    nc[a] = c[a] + 1;
                } else if self.periodic && e > 2 {
                    nc[a] = 0;
                } else {
                    continue;
                }
                let j = self.site(&nc);
                out.push((i.min(j), i.max(j)));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn check_chain(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("chain needs n >= 2, got {n}")));
    }
    Ok(())
}

fn two_site(n: usize, i: usize, j: usize, a: Pauli, b: Pauli) -> PauliString {
    let mut p = PauliString::identity(n);
    p.set(i, a);
    p.set(j, b);
    p
}

/// Mixed-field Ising chain `J Σ X_j X_{j+1} + h Σ X_j + g Σ Y_j` (open boundaries).
pub fn build_mfi(n: usize, j: f64, h: f64, g: f64) -> Result<PauliSum> {
    check_chain(n)?;
    let mut s = PauliSum::new(n);
    for q in 0..n - 1 {
        s.add_unchecked(two_site(n, q, q + 1, Pauli::X, Pauli::X), j);
    }
    for q in 0..n {
        s.add_unchecked(PauliString::single(n, q, Pauli::X), h);
        s.add_unchecked(PauliString::single(n, q, Pauli::Y), g);
    }
    Ok(s)
}

/// Transverse-field Ising chain `J Σ Z_j Z_{j+1} + h Σ X_j` (open boundaries).
pub fn build_tfi(n: usize, j: f64, h: f64) -> Result<PauliSum> {
    check_chain(n)?;
    let mut s = PauliSum::new(n);
    for q in 0..n - 1 {
        s.add_unchecked(two_site(n, q, q + 1, Pauli::Z, Pauli::Z), j);
    }
    for q in 0..n {
        s.add_unchecked(PauliString::single(n, q, Pauli::X), h);
    }
    Ok(s)
}

/// Power-law chain `Σ_{i<j} J/(j-i)^α (XX + YY + ZZ) + h Σ X_j`.
///
/// Logs a warning when `α <= 2` (below the regime where truncation is controlled).
pub fn build_power_law(n: usize, j: f64, h: f64, alpha: f64) -> Result<PauliSum> {
    check_chain(n)?;
    if alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if alpha <= 2.0 {
        log::warn!("power-law exponent alpha={alpha} is not above 2D=2");
    }
    let mut s = PauliSum::new(n);
    for a in 0..n {
        for b in a + 1..n {
            let c = j / ((b - a) as f64).powf(alpha);
            for op in [Pauli::X, Pauli::Y, Pauli::Z] {
                s.add_unchecked(two_site(n, a, b, op, op), c);
            }
        }
    }
    for q in 0..n {
        s.add_unchecked(PauliString::single(n, q, Pauli::X), h);
    }
    Ok(s)
}

/// Instantiates a two-site template on every nearest-neighbour edge of the lattice.
pub fn build_nn_lattice(spec: &LatticeSpec, per_edge: &PauliSum) -> Result<PauliSum> {
    if spec.extents.is_empty() {
        return Err(Error::InvalidArgument("lattice needs D >= 1".into()));
    }
    if per_edge.n() != 2 || per_edge.support().len() != 2 {
        return Err(Error::InvalidArgument("edge template must act on exactly 2 sites".into()));
    }
    let n = spec.sites();
    let mut s = PauliSum::new(n);
    for (i, j) in spec.edges() {
        for (p, c) in per_edge.iter() {
            s.add_unchecked(p.embed(n, &[i, j])?, c);
        }
    }
    Ok(s)
}

/// Two-dimensional transverse-field Ising model: `J Σ_<ij> Z_i Z_j + h Σ X_j`.
pub fn build_tfi_lattice(spec: &LatticeSpec, j: f64, h: f64) -> Result<PauliSum> {
    let zz = PauliSum::from_words(2, &[(j, "ZZ")])?;
    let mut s = build_nn_lattice(spec, &zz)?;
    let n = spec.sites();
    for q in 0..n {
        s.add_unchecked(PauliString::single(n, q, Pauli::X), h);
    }
    Ok(s)
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    pauli: String,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonHamiltonian {
    n: usize,
    terms: Vec<JsonTerm>,
}

/// Serializes to `{"n": .., "terms": [{"pauli": "..", "coeff": ..}]}`.
pub fn to_json(h: &PauliSum) -> String {
    let doc = JsonHamiltonian {
        n: h.n(),
        terms: h.iter().map(|(p, c)| JsonTerm { pauli: p.to_string(), coeff: c }).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Parses the JSON Hamiltonian form.
pub fn from_json(text: &str) -> Result<PauliSum> {
    let doc: JsonHamiltonian = serde_json::from_str(text)?;
    let mut s = PauliSum::new(doc.n);
    for (idx, t) in doc.terms.iter().enumerate() {
        let p: PauliString = t
            .pauli
            .parse()
            .map_err(|e: Error| Error::Parse { line: idx + 1, reason: format!("term {}: {e}", idx + 1) })?;
        if p.n() != doc.n {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("term {} has length {} but n={}", idx + 1, p.n(), doc.n),
            });
        }
        s.add_unchecked(p, t.coeff);
    }
    Ok(s)
}

/// Loads a Hamiltonian in the text or JSON form (detected by a leading `{`).
pub fn load_pauli_file(path: impl AsRef<Path>) -> Result<PauliSum> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        from_json(&text)
    } else {
        PauliSum::from_text(&text)
    }
}

/// Greedy partition into groups of mutually commuting words.
///
/// Terms are visited in canonical word order; each joins the first group it
/// commutes with entirely, otherwise it opens a new group.
pub fn group_commuting(h: &PauliSum) -> Vec<PauliSum> {
    let mut groups: Vec<(Vec<PauliString>, PauliSum)> = Vec::new();
    for (p, c) in h.iter() {
        match groups.iter_mut().find(|(words, _)| words.iter().all(|q| q.commutes_with(p))) {
            Some((words, sum)) => {
                words.push(p.clone());
                sum.add_unchecked(p.clone(), c);
            }
            None => {
                let mut sum = PauliSum::new(h.n());
                sum.add_unchecked(p.clone(), c);
                groups.push((vec![p.clone()], sum));
            }
        }
    }
    groups.into_iter().map(|(_, s)| s).collect()
}

/// Result of removing long-range terms.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub kept: PauliSum,
    pub removed: PauliSum,
    pub removed_one_norm: f64,
}

/// Region around a support: sites within `radius` of `support`.
#[derive(Clone, Debug)]
pub struct InnerRegion {
    pub support: SupportSet,
    pub radius: f64,
}

/// Removes terms whose support diameter exceeds `d0`.
///
/// Without `inner` every long term is removed. With `inner`, only long terms
/// touching the region `{j : d(j, S) <= radius}` are removed.
pub fn truncate_power_law(
    h: &PauliSum,
    lattice: &LatticeSpec,
    d0: f64,
    inner: Option<&InnerRegion>,
) -> Result<Truncation> {
    if d0 <= 0.0 || d0.is_nan() {
        return Err(Error::InvalidArgument(format!("truncation range must be positive, got {d0}")));
    }
    if lattice.sites() != h.n() {
        return Err(Error::SizeMismatch(lattice.sites(), h.n()));
    }
    let region: Option<SupportSet> = inner.map(|r| {
        (0..h.n())
            .filter(|&j| r.support.iter().any(|i| lattice.distance(i, j) <= r.radius + 1e-12))
            .collect()
    });
    let mut kept = PauliSum::new(h.n());
    let mut removed = PauliSum::new(h.n());
    for (p, c) in h.iter() {
        let s = p.support();
        let long = lattice.diameter(&s) > d0 + 1e-12;
        let touches = region.as_ref().is_none_or(|r| s.intersects(r));
        if long && touches {
            removed.add_unchecked(p.clone(), c);
        } else {
            kept.add_unchecked(p.clone(), c);
        }
    }
    let removed_one_norm = removed.one_norm();
    Ok(Truncation { kept, removed, removed_one_norm })
}

/// `Z` on one qubit.
pub fn single_z(n: usize, q: usize) -> PauliSum {
    PauliSum::single(PauliString::single(n, q, Pauli::Z), 1.0)
}

/// `Σ_j Z_j`.
pub fn z_sum(n: usize) -> PauliSum {
    let mut s = PauliSum::new(n);
    for q in 0..n {
        s.add_unchecked(PauliString::single(n, q, Pauli::Z), 1.0);
    }
    s
}

/// Magnetization `Σ_j Z_j / n`.
pub fn magnetization(n: usize) -> PauliSum {
    z_sum(n).scale(1.0 / n as f64)
}

/// Summands `Z_j Z_{j+1} / (n-1)` of the averaged nearest-neighbour correlator.
pub fn zz_average_summands(n: usize) -> Vec<PauliSum> {
    (0..n.saturating_sub(1))
        .map(|q| PauliSum::single(two_site(n, q, q + 1, Pauli::Z, Pauli::Z), 1.0 / (n - 1) as f64))
        .collect()
}

/// Projector `Π_{j<k} (I + Z_j)/2` onto |0> on the first `k` qubits, as a `2^k`-term sum.
pub fn zero_projector(n: usize, k: usize) -> Result<PauliSum> {
    if k > n || k > 20 {
        return Err(Error::InvalidArgument(format!("projector on {k} of {n} qubits")));
    }
    let mut s = PauliSum::new(n);
    let c = 0.5f64.powi(k as i32);
    for mask in 0..(1usize << k) {
        let mut p = PauliString::identity(n);
        for q in 0..k {
            if (mask >> q) & 1 == 1 {
                p.set(q, Pauli::Z);
            }
        }
        s.add_unchecked(p, c);
    }
    Ok(s)
}
