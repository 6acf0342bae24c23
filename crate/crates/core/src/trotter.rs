//! Suzuki schedules and product-formula circuits.
//!
//! A [`Circuit`] lists gates `exp(i·θ·G)` in application order, so the circuit
//! unitary is `U = G_last ⋯ G_first` and approximates `e^{iHt}`. Conjugating an
//! observable as `U O U†` applies the first gate innermost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightcone::{edge_sets, even_odd_order, Coloring, InteractionHypergraph};
use crate::pauli::{PauliString, PauliSum, SupportSet};

/// One stage of a Suzuki formula: every slot gets the same coefficient, swept
/// forward or backward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub coeff: f64,
    pub forward: bool,
}

/// Fully expanded stages of the order-`p` symmetric Suzuki formula.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuzukiSchedule {
    pub order: u32,
    pub stages: Vec<Stage>,
}

impl SuzukiSchedule {
    /// Number of stages Υ.
    pub fn upsilon(&self) -> usize {
        self.stages.len()
    }

    /// Coefficient of slot `slot` in stage `stage` (0-based). Slots share their stage's coefficient.
    pub fn coefficient(&self, stage: usize, _slot: usize) -> f64 {
        self.stages[stage].coeff
    }
}

/// `u_p = 1/(4 − 4^{1/(p−1)})`.
pub fn suzuki_u(p: u32) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (p as f64 - 1.0)))
}

pub fn suzuki_schedule(p: u32) -> Result<SuzukiSchedule> {
    match p {
        0 => Err(Error::InvalidArgument("order must be positive".into())),
        1 => Ok(SuzukiSchedule { order: 1, stages: vec![Stage { coeff: 1.0, forward: true }] }),
        _ if p % 2 == 1 => Err(Error::InvalidArgument(format!("odd order {p} > 1 has no symmetric Suzuki formula"))),
        _ => {
            let coeffs = expand(p, 1.0);
            let stages = coeffs
                .into_iter()
                .enumerate()
                .map(|(i, coeff)| Stage { coeff, forward: i % 2 == 0 })
                .collect();
            Ok(SuzukiSchedule { order: p, stages })
        }
    }
}

fn expand(p: u32, scale: f64) -> Vec<f64> {
    if p == 2 {
        return vec![scale / 2.0, scale / 2.0];
    }
    let u = suzuki_u(p);
    let mut out = Vec::new();
    for s in [u, u, 1.0 - 4.0 * u, u, u] {
        out.extend(expand(p - 2, scale * s));
    }
    out
}

/// A gate `exp(i·angle·generator)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub generator: PauliSum,
    pub angle: f64,
}

/// Ordered gate list on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Reversed order with negated angles: the inverse unitary.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            gates: self
                .gates
                .iter()
                .rev()
                .map(|g| Gate { generator: g.generator.clone(), angle: -g.angle })
                .collect(),
        }
    }

    /// Supports of the gates in application order.
    pub fn supports(&self) -> Vec<SupportSet> {
        self.gates.iter().map(|g| g.generator.support()).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = CircuitJson {
            n: self.n,
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    angle: g.angle,
                    generator: g.generator.iter().map(|(p, c)| TermJson { pauli: p.to_string(), coeff: c }).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let doc: CircuitJson = serde_json::from_str(text)?;
        let mut c = Circuit::new(doc.n);
        for g in doc.gates {
            let mut s = PauliSum::new(doc.n);
            for t in g.generator {
                let p: PauliString = t.pauli.parse()?;
                s.add_term(p, t.coeff)?;
            }
            c.gates.push(Gate { generator: s, angle: g.angle });
        }
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    pauli: String,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    angle: f64,
    generator: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    n: usize,
    gates: Vec<GateJson>,
}

/// When gates with identical generators are combined.
///
/// A new gate merges into an earlier gate with the same generator when every
/// gate in between commutes with it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    Off,
    /// Only within one Trotter step.
    WithinStep,
    /// Across the whole circuit.
    #[default]
    Full,
}

/// Counting unit for [`gate_count`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// One per circuit gate.
    Generator,
    /// One per Pauli term of each generator.
    Pauli,
}

pub fn gate_count(c: &Circuit, granularity: Granularity) -> usize {
    match granularity {
        Granularity::Generator => c.gates.len(),
        Granularity::Pauli => c.gates.iter().map(|g| g.generator.len()).sum(),
    }
}

struct Builder {
    circuit: Circuit,
    supports: Vec<SupportSet>,
    policy: MergePolicy,
    window: usize,
}

impl Builder {
    fn new(n: usize, policy: MergePolicy) -> Self {
        Builder { circuit: Circuit::new(n), supports: Vec::new(), policy, window: 0 }
    }

    fn end_step(&mut self) {
        if self.policy == MergePolicy::WithinStep {
            self.window = self.circuit.gates.len();
        }
    }

    fn push(&mut self, generator: &PauliSum, angle: f64) {
        if generator.is_empty() || angle == 0.0 {
            return;
        }
        let support = generator.support();
        if self.policy != MergePolicy::Off {
            let mut i = self.circuit.gates.len();
            while i > self.window {
                i -= 1;
                let g = &self.circuit.gates[i];
                if &g.generator == generator {
                    self.circuit.gates[i].angle += angle;
                    if self.circuit.gates[i].angle == 0.0 {
                        self.circuit.gates.remove(i);
                        self.supports.remove(i);
                    }
                    return;
                }
                let commutes = !self.supports[i].intersects(&support)
                    || g.generator.commutes_with(generator).expect("same register");
                if !commutes {
                    break;
                }
            }
        }
        self.circuit.gates.push(Gate { generator: generator.clone(), angle });
        self.supports.push(support);
    }
}

fn check_steps(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("number of steps must be at least 1".into()));
    }
    Ok(())
}

/// `r` repetitions of the order-`p` Suzuki formula over the ordered parts.
pub fn standard_formula(parts: &[PauliSum], t: f64, r: usize, p: u32, merge: MergePolicy) -> Result<Circuit> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("no Hamiltonian parts".into()));
    }
    check_steps(r)?;
    let n = parts[0].n();
    if let Some(bad) = parts.iter().find(|h| h.n() != n) {
        return Err(Error::SizeMismatch(n, bad.n()));
    }
    let schedule = suzuki_schedule(p)?;
    let tau = t / r as f64;
    let mut b = Builder::new(n, merge);
    for _ in 0..r {
        for stage in &schedule.stages {
            let order: Vec<usize> =
                if stage.forward { (0..parts.len()).collect() } else { (0..parts.len()).rev().collect() };
            for g in order {
                b.push(&parts[g], stage.coeff * tau);
            }
        }
        b.end_step();
    }
    Ok(b.circuit)
}

/// Light-cone reduced formula for an observable supported on `s`.
///
/// In global stage `g = (j−1)Υ + υ` the layers `H_0..H_g` are applied in
/// even-odd order; later layers cannot reach the observable and are skipped.
pub fn reduced_formula(h: &PauliSum, s: &SupportSet, t: f64, r: usize, p: u32, merge: MergePolicy) -> Result<Circuit> {
    check_steps(r)?;
    let schedule = suzuki_schedule(p)?;
    let dec = edge_sets(h, s, None)?;
    let depth = dec.depth();
    let upsilon = schedule.upsilon();
    let tau = t / r as f64;
    let mut b = Builder::new(h.n(), merge);
    for j in 0..r {
        for (v, stage) in schedule.stages.iter().enumerate() {
            let g = j * upsilon + v + 1;
            let cap = g.min(depth);
            for k in even_odd_order(cap, g % 2 == 1) {
                b.push(&dec.subs[k], stage.coeff * tau);
            }
        }
        b.end_step();
    }
    Ok(b.circuit)
}

/// Full formula over the interactive decomposition of `s` with even-odd stage ordering
/// (no light-cone pruning). Unreachable terms are applied last in each stage.
pub fn interactive_formula(h: &PauliSum, s: &SupportSet, t: f64, r: usize, p: u32, merge: MergePolicy) -> Result<Circuit> {
    check_steps(r)?;
    let schedule = suzuki_schedule(p)?;
    let dec = edge_sets(h, s, None)?;
    let mut parts = dec.subs.clone();
    if !dec.tail.is_empty() {
        parts.push(dec.tail.clone());
    }
    let last = parts.len() - 1;
    let upsilon = schedule.upsilon();
    let tau = t / r as f64;
    let mut b = Builder::new(h.n(), merge);
    for j in 0..r {
        for (v, stage) in schedule.stages.iter().enumerate() {
            let g = j * upsilon + v + 1;
            for k in even_odd_order(last, g % 2 == 1) {
                b.push(&parts[k], stage.coeff * tau);
            }
        }
        b.end_step();
    }
    Ok(b.circuit)
}

/// Virtual formula: step `j` uses the layers `H_0..H_{jΥ}` plus the tail of all
/// remaining terms at index `jΥ+1`, each stage in even-odd order. Its observable
/// conjugation coincides with the reduced formula's.
pub fn virtual_formula(h: &PauliSum, s: &SupportSet, t: f64, r: usize, p: u32) -> Result<Circuit> {
    check_steps(r)?;
    let schedule = suzuki_schedule(p)?;
    let upsilon = schedule.upsilon();
    let tau = t / r as f64;
    let mut b = Builder::new(h.n(), MergePolicy::Off);
    for j in 0..r {
        let dec = edge_sets(h, s, Some((j + 1) * upsilon))?;
        let mut parts = dec.subs.clone();
        parts.resize((j + 1) * upsilon + 1, PauliSum::new(h.n()));
        parts.push(dec.tail.clone());
        let last = parts.len() - 1;
        for (v, stage) in schedule.stages.iter().enumerate() {
            let g = j * upsilon + v + 1;
            for k in even_odd_order(last, g % 2 == 1) {
                b.push(&parts[k], stage.coeff * tau);
            }
        }
    }
    Ok(b.circuit)
}

/// Chromatic formula: odd stages sweep colors `1..=χ` with hyperedges ascending,
/// even stages sweep `χ..=1` with hyperedges descending.
pub fn chromatic_formula(
    h: &PauliSum,
    coloring: &Coloring,
    g: &InteractionHypergraph,
    t: f64,
    r: usize,
    p: u32,
    merge: MergePolicy,
) -> Result<Circuit> {
    check_steps(r)?;
    coloring.validate(g)?;
    if g.n != h.n() {
        return Err(Error::SizeMismatch(h.n(), g.n));
    }
    let total = PauliSum::sum_of(h.n(), &g.subs)?;
    if total != *h {
        return Err(Error::InvalidArgument("hypergraph does not decompose the Hamiltonian".into()));
    }
    let schedule = suzuki_schedule(p)?;
    let upsilon = schedule.upsilon();
    let tau = t / r as f64;
    let forward: Vec<usize> = (1..=coloring.chi).flat_map(|c| coloring.members(c)).collect();
    let backward: Vec<usize> = forward.iter().rev().copied().collect();
    let mut b = Builder::new(h.n(), merge);
    for j in 0..r {
        for (v, stage) in schedule.stages.iter().enumerate() {
            let gidx = j * upsilon + v + 1;
            let order = if gidx % 2 == 1 { &forward } else { &backward };
            for &e in order {
                b.push(&g.subs[e], stage.coeff * tau);
            }
        }
        b.end_step();
    }
    Ok(b.circuit)
}
