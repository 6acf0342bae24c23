//! Edge sets, interactive decompositions, support propagation, interaction
//! hypergraphs and their colorings.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::LatticeSpec;
use crate::pauli::{PauliSum, SupportSet};

/// Layers of a Hamiltonian around a base support.
///
/// `subs[0]` holds the terms inside `edges[0] = S`; `subs[k]` holds the terms
/// first reached from `edges[k-1]`, and `edges[k]` the new qubits they touch.
/// Terms not assigned to a layer (early stop, or unreachable from `S`) are in `tail`.
#[derive(Clone, Debug)]
pub struct InteractiveDecomposition {
    pub base: SupportSet,
    pub subs: Vec<PauliSum>,
    pub edges: Vec<SupportSet>,
    pub tail: PauliSum,
}

impl InteractiveDecomposition {
    /// Index of the last layer, Γ₀.
    pub fn depth(&self) -> usize {
        self.subs.len() - 1
    }

    /// Union of `edges[0..=k]`.
    pub fn cone(&self, k: usize) -> SupportSet {
        let mut s = SupportSet::new();
        for e in self.edges.iter().take(k + 1) {
            s.union_with(e);
        }
        s
    }

    /// Sum of all layers and the tail.
    pub fn total(&self) -> PauliSum {
        let mut s = PauliSum::sum_of(self.tail.n(), &self.subs).expect("same register");
        s.add_assign(&self.tail).expect("same register");
        s
    }
}

/// Builds the interactive decomposition of `h` around `s`, stopping after layer `max_k` if given.
pub fn edge_sets(h: &PauliSum, s: &SupportSet, max_k: Option<usize>) -> Result<InteractiveDecomposition> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("base support must be nonempty".into()));
    }
    if let Some(q) = s.max() {
        if q >= h.n() {
            return Err(Error::InvalidArgument(format!("qubit {q} outside the {}-qubit register", h.n())));
        }
    }
    let n = h.n();
    let mut remaining: Vec<(SupportSet, crate::pauli::PauliString, f64)> =
        h.iter().map(|(p, c)| (p.support(), p.clone(), c)).collect();

    let mut h0 = PauliSum::new(n);
    remaining.retain(|(sup, p, c)| {
        if sup.is_subset(s) {
            h0.add_unchecked(p.clone(), *c);
            false
        } else {
            true
        }
    });
    let mut subs = vec![h0];
    let mut edges = vec![s.clone()];
    while !remaining.is_empty() && max_k.is_none_or(|m| subs.len() <= m) {
        let prev = edges.last().unwrap();
        let mut hk = PauliSum::new(n);
        let mut sup_k = SupportSet::new();
        remaining.retain(|(sup, p, c)| {
            if sup.intersects(prev) {
                hk.add_unchecked(p.clone(), *c);
                sup_k.union_with(sup);
                false
            } else {
                true
            }
        });
        if hk.is_empty() {
            break;
        }
        let ek = sup_k.difference(prev);
        subs.push(hk);
        edges.push(ek);
    }
    let mut tail = PauliSum::new(n);
    for (_, p, c) in remaining {
        tail.add_unchecked(p, c);
    }
    Ok(InteractiveDecomposition { base: s.clone(), subs, edges, tail })
}

/// Worst-case support growth: folds `U ⊎ S` over the supports in order.
pub fn propagate(unitary_supports: &[SupportSet], s: &SupportSet) -> SupportSet {
    let mut cur = s.clone();
    for u in unitary_supports {
        if u.intersects(&cur) {
            cur.union_with(u);
        }
    }
    cur
}

/// Even-odd ordering of the indices `0..=last` for a stage of the given parity:
/// odd stages list even indices first, even stages list odd indices first.
pub fn even_odd_order(last: usize, stage_is_odd: bool) -> Vec<usize> {
    let evens = (0..=last).filter(|k| k % 2 == 0);
    let odds = (0..=last).filter(|k| k % 2 == 1);
    if stage_is_odd {
        evens.chain(odds).collect()
    } else {
        odds.chain(evens).collect()
    }
}

/// Hyperedges with their attached sub-Hamiltonians.
#[derive(Clone, Debug)]
pub struct InteractionHypergraph {
    pub n: usize,
    pub hyperedges: Vec<SupportSet>,
    pub subs: Vec<PauliSum>,
    /// True when hyperedges are regrouped regions rather than term supports.
    pub illusory: bool,
}

impl InteractionHypergraph {
    pub fn len(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperedges.is_empty()
    }
}

/// Hyperedges are the maximal term supports, sorted lexicographically. Each term
/// is attached to the lexicographically smallest hyperedge containing its support.
pub fn build_hypergraph(h: &PauliSum) -> InteractionHypergraph {
    let mut supports: Vec<SupportSet> = h.iter().map(|(p, _)| p.support()).collect();
    supports.sort();
    supports.dedup();
    supports.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut maximal: Vec<SupportSet> = Vec::new();
    for s in supports {
        if !maximal.iter().any(|m| s.is_subset(m)) {
            maximal.push(s);
        }
    }
    maximal.sort();
    let mut subs = vec![PauliSum::new(h.n()); maximal.len()];
    for (p, c) in h.iter() {
        let s = p.support();
        let idx = maximal.iter().position(|m| s.is_subset(m)).expect("every support is covered");
        subs[idx].add_unchecked(p.clone(), c);
    }
    InteractionHypergraph { n: h.n(), hyperedges: maximal, subs, illusory: false }
}

/// Color assignment for hyperedges; colors are `1..=chi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub colors: Vec<usize>,
    pub chi: usize,
}

impl Coloring {
    /// Checks that colors are in range and same-color hyperedges are disjoint.
    pub fn validate(&self, g: &InteractionHypergraph) -> Result<()> {
        if self.colors.len() != g.len() {
            return Err(Error::InvalidColoring(format!(
                "{} colors for {} hyperedges",
                self.colors.len(),
                g.len()
            )));
        }
        for (i, &c) in self.colors.iter().enumerate() {
            if c == 0 || c > self.chi {
                return Err(Error::InvalidColoring(format!("hyperedge {i} has color {c} outside 1..={}", self.chi)));
            }
        }
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                if self.colors[i] == self.colors[j] && g.hyperedges[i].intersects(&g.hyperedges[j]) {
                    return Err(Error::InvalidColoring(format!(
                        "hyperedges {} and {} share color {} and overlap",
                        g.hyperedges[i], g.hyperedges[j], self.colors[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Hyperedge indices of color `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.colors.len()).filter(|&i| self.colors[i] == c).collect()
    }
}

/// How to color a hypergraph.
#[derive(Clone, Debug)]
pub enum ColoringStrategy<'a> {
    /// First admissible color, hyperedges visited by (size desc, lexicographic).
    Greedy,
    /// `(axis, parity)` colors for nearest-neighbour pairs on a lattice: exactly `2D` colors.
    LatticeParity(&'a LatticeSpec),
}

pub fn color_hypergraph(g: &InteractionHypergraph, strategy: &ColoringStrategy) -> Result<Coloring> {
    let coloring = match strategy {
        ColoringStrategy::Greedy => greedy_coloring(g),
        ColoringStrategy::LatticeParity(lattice) => parity_coloring(g, lattice)?,
    };
    coloring.validate(g)?;
    Ok(coloring)
}

fn greedy_coloring(g: &InteractionHypergraph) -> Coloring {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| {
        g.hyperedges[b].len().cmp(&g.hyperedges[a].len()).then_with(|| g.hyperedges[a].cmp(&g.hyperedges[b]))
    });
    let mut colors = vec![0usize; g.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let slot = classes
            .iter()
            .position(|members| members.iter().all(|&j| !g.hyperedges[i].intersects(&g.hyperedges[j])));
        match slot {
            Some(c) => {
                classes[c].push(i);
                colors[i] = c + 1;
            }
            None => {
                classes.push(vec![i]);
                colors[i] = classes.len();
            }
        }
    }
    Coloring { colors, chi: classes.len() }
}

fn parity_coloring(g: &InteractionHypergraph, lattice: &LatticeSpec) -> Result<Coloring> {
    if lattice.sites() != g.n {
        return Err(Error::SizeMismatch(lattice.sites(), g.n));
    }
    let d = lattice.dimension();
    let mut colors = Vec::with_capacity(g.len());
    for e in &g.hyperedges {
        let v = e.to_vec();
        if v.len() != 2 {
            return Err(Error::InvalidColoring(format!("hyperedge {e} is not a lattice pair")));
        }
        let (ci, cj) = (lattice.coords(v[0]), lattice.coords(v[1]));
        let diff: Vec<usize> = (0..d).filter(|&a| ci[a] != cj[a]).collect();
        if diff.len() != 1 {
            return Err(Error::InvalidColoring(format!("hyperedge {e} is not axis-aligned")));
        }
        let a = diff[0];
        let (lo, hi) = (ci[a].min(cj[a]), ci[a].max(cj[a]));
        let ext = lattice.extents[a];
        let lower = if hi - lo == 1 {
            lo
        } else if lattice.periodic && lo == 0 && hi == ext - 1 {
            if ext % 2 == 1 {
                return Err(Error::InvalidColoring("periodic axis of odd length has no parity coloring".into()));
            }
            hi
        } else {
            return Err(Error::InvalidColoring(format!("hyperedge {e} is not a nearest-neighbour pair")));
        };
        colors.push(2 * a + lower % 2 + 1);
    }
    Ok(Coloring { colors, chi: 2 * d })
}

/// Regroups a truncated Hamiltonian into hyperedges made of one cube or two
/// neighbouring cubes of side `floor(d0)`, with an offset-class coloring.
pub fn cube_regroup(h: &PauliSum, lattice: &LatticeSpec, d0: f64) -> Result<(InteractionHypergraph, Coloring)> {
    if d0 <= 0.0 || d0.is_nan() {
        return Err(Error::InvalidArgument(format!("cube side must be positive, got {d0}")));
    }
    if lattice.sites() != h.n() {
        return Err(Error::SizeMismatch(lattice.sites(), h.n()));
    }
    let side = (d0.floor() as usize).max(1);
    let d = lattice.dimension();
    let cube_of = |site: usize| -> Vec<usize> { lattice.coords(site).iter().map(|c| c / side).collect() };

    let mut offenders = Vec::new();
    let mut groups: BTreeMap<Vec<Vec<usize>>, PauliSum> = BTreeMap::new();
    for (p, c) in h.iter() {
        let s = p.support();
        if lattice.diameter(&s) > d0 + 1e-12 {
            offenders.push(p.to_string());
            continue;
        }
        let mut cubes: Vec<Vec<usize>> = s.iter().map(cube_of).collect();
        cubes.sort();
        cubes.dedup();
        if cubes.len() > 2 {
            offenders.push(p.to_string());
            continue;
        }
        if cubes.is_empty() {
            cubes.push(vec![0; d]);
        }
        groups.entry(cubes).or_insert_with(|| PauliSum::new(h.n())).add_unchecked(p.clone(), c);
    }
    if !offenders.is_empty() {
        return Err(Error::Untruncated(offenders.join(", ")));
    }

    let cube_sites = |cube: &Vec<usize>| -> SupportSet {
        (0..lattice.sites()).filter(|&i| &cube_of(i) == cube).collect()
    };
    let mut pairs: Vec<(Vec<Vec<usize>>, SupportSet, PauliSum)> = Vec::new();
    let mut singles: Vec<(Vec<usize>, PauliSum)> = Vec::new();
    for (cubes, sum) in groups {
        if cubes.len() == 2 {
            let s = cube_sites(&cubes[0]).union(&cube_sites(&cubes[1]));
            pairs.push((cubes, s, sum));
        } else {
            singles.push((cubes[0].clone(), sum));
        }
    }
    pairs.sort_by(|a, b| a.1.cmp(&b.1));
    let mut lone: Vec<(SupportSet, PauliSum)> = Vec::new();
    for (cube, sum) in singles {
        match pairs.iter_mut().find(|(cubes, _, _)| cubes.contains(&cube)) {
            Some(pair) => pair.2.add_assign(&sum)?,
            None => lone.push((cube_sites(&cube), sum)),
        }
    }

    // Offset class of a pair: normalized difference vector and parity of the
    // lower cube along the first axis where the pair differs.
    let mut class_keys: Vec<(Vec<i64>, usize)> = Vec::new();
    for (cubes, _, _) in &pairs {
        let (a, b) = (&cubes[0], &cubes[1]);
        let mut delta: Vec<i64> = (0..d).map(|k| b[k] as i64 - a[k] as i64).collect();
        let mut base = a.clone();
        if delta.iter().find(|&&x| x != 0).copied().unwrap_or(0) < 0 {
            delta.iter_mut().for_each(|x| *x = -*x);
            base = b.clone();
        }
        let axis = delta.iter().position(|&x| x != 0).expect("distinct cubes");
        class_keys.push((delta, base[axis] % 2));
    }
    let mut distinct: Vec<(Vec<i64>, usize)> = class_keys.clone();
    distinct.sort();
    distinct.dedup();
    let mut hyperedges = Vec::new();
    let mut subs = Vec::new();
    let mut colors = Vec::new();
    for ((_, s, sum), key) in pairs.into_iter().zip(&class_keys) {
        hyperedges.push(s);
        subs.push(sum);
        colors.push(distinct.iter().position(|k| k == key).unwrap() + 1);
    }
    for (s, sum) in lone {
        hyperedges.push(s);
        subs.push(sum);
        colors.push(1);
    }
    let chi = distinct.len().max(1);
    let g = InteractionHypergraph { n: h.n(), hyperedges, subs, illusory: true };
    let coloring = Coloring { colors, chi };
    coloring.validate(&g)?;
    Ok((g, coloring))
}
