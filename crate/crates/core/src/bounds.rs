//! Trotter error bounds evaluated from symbolic nested commutators, and the
//! step-count search.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lightcone::{edge_sets, Coloring, InteractionHypergraph};
use crate::pauli::{NormMode, PauliSum, SupportSet};
use crate::trotter::suzuki_schedule;

/// Default cap on word products for 4-norm expansions.
pub const DEFAULT_FOUR_NORM_BUDGET: usize = 50_000_000;

/// Evaluation inputs recorded with every bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub t: f64,
    pub r: usize,
    pub p: u32,
    pub n: usize,
    pub norm_mode: Option<NormMode>,
}

/// One evaluated bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub inputs: BoundInputs,
    /// Sub-terms that add up to `value` (may be empty).
    pub components: Vec<(String, f64)>,
    /// Auxiliary quantities reported alongside, not part of `value`.
    pub extras: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(name: &str, value: f64, inputs: BoundInputs) -> Self {
        BoundReport { name: name.into(), value, inputs, components: Vec::new(), extras: Vec::new(), notes: Vec::new() }
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    Ok(())
}

fn register(parts: &[PauliSum]) -> Result<usize> {
    let n = parts.first().map(|p| p.n()).ok_or_else(|| Error::InvalidArgument("no Hamiltonian parts".into()))?;
    if let Some(bad) = parts.iter().find(|p| p.n() != n) {
        return Err(Error::SizeMismatch(n, bad.n()));
    }
    Ok(n)
}

/// The two nested-commutator families of the second-order bound, for each split point γ₁:
/// `[R, [R, H_γ₁]]` and `[H_γ₁, [H_γ₁, R]]` with `R = Σ_{γ>γ₁} H_γ`.
pub fn second_order_commutators(parts: &[PauliSum]) -> Result<Vec<(PauliSum, PauliSum)>> {
    let n = register(parts)?;
    let mut out = Vec::new();
    let mut rest = PauliSum::new(n);
    let mut suffix = Vec::with_capacity(parts.len());
    for part in parts.iter().rev() {
        suffix.push(rest.clone());
        rest.add_assign(part)?;
    }
    suffix.reverse();
    for (h, r) in parts.iter().zip(&suffix) {
        if r.is_empty() || h.is_empty() {
            continue;
        }
        let inner = r.commutator(h)?;
        if inner.is_empty() {
            continue;
        }
        let first = r.commutator(&inner)?;
        let second = h.commutator(&inner)?;
        out.push((first, second));
    }
    Ok(out)
}

/// `Σ f(C₁) + ½ Σ f(C₂)` over the second-order commutator families.
fn nested_sum<F>(parts: &[PauliSum], mut f: F) -> Result<f64>
where
    F: FnMut(&PauliSum) -> Result<f64>,
{
    let mut total = 0.0;
    for (c1, c2) in second_order_commutators(parts)? {
        total += f(&c1)? + 0.5 * f(&c2)?;
    }
    Ok(total)
}

/// Worst-case second-order bound `(t³‖O‖/6r²)(Σ‖[R,[R,H]]‖ + ½Σ‖[H,[H,R]]‖)`.
pub fn worst_case_p2_bound(parts: &[PauliSum], o_norm: f64, t: f64, r: usize, mode: NormMode) -> Result<BoundReport> {
    check_r(r)?;
    let n = register(parts)?;
    let w = nested_sum(parts, |c| c.operator_norm(mode))?;
    let value = t.powi(3) * o_norm / (6.0 * (r * r) as f64) * w;
    let mut rep = BoundReport::new("worst", value, BoundInputs { t, r, p: 2, n, norm_mode: Some(mode) });
    rep.extras.push(("commutator_sum".into(), w));
    Ok(rep)
}

/// Parts of the light-cone bound: layers `H_0..H_{rΥ}` of the interactive decomposition, then the tail.
pub fn light_cone_parts(h: &PauliSum, s: &SupportSet, r: usize) -> Result<Vec<PauliSum>> {
    let upsilon = suzuki_schedule(2)?.upsilon();
    let dec = edge_sets(h, s, Some(r * upsilon))?;
    let mut parts = dec.subs;
    if !dec.tail.is_empty() {
        parts.push(dec.tail);
    }
    Ok(parts)
}

/// Explicit second-order light-cone bound for one local observable supported on `s`.
pub fn thm1_bound(h: &PauliSum, s: &SupportSet, o_norm: f64, t: f64, r: usize, mode: NormMode) -> Result<BoundReport> {
    check_r(r)?;
    let parts = light_cone_parts(h, s, r)?;
    let mut rep = worst_case_p2_bound(&parts, o_norm, t, r, mode)?;
    rep.name = "thm1".into();
    rep.extras.push(("parts".into(), parts.len() as f64));
    Ok(rep)
}

/// Color-restricted parts for one summand: for each color, the hyperedges of that
/// color meeting the first `r(χ−1)Υ+1` edge sets of `s`; everything else forms the tail.
pub fn chromatic_parts(
    h: &PauliSum,
    s: &SupportSet,
    g: &InteractionHypergraph,
    coloring: &Coloring,
    r: usize,
) -> Result<Vec<PauliSum>> {
    coloring.validate(g)?;
    let upsilon = suzuki_schedule(2)?.upsilon();
    let k = r * (coloring.chi.saturating_sub(1)) * upsilon + 1;
    let dec = edge_sets(h, s, Some(k))?;
    let cone = dec.cone(k);
    let mut parts = vec![PauliSum::new(h.n()); coloring.chi + 1];
    for (i, e) in g.hyperedges.iter().enumerate() {
        let slot = if e.intersects(&cone) { coloring.colors[i] - 1 } else { coloring.chi };
        parts[slot].add_assign(&g.subs[i])?;
    }
    Ok(parts)
}

/// Explicit second-order bound for a sum of local observables under the chromatic formula.
pub fn thm2_bound(
    h: &PauliSum,
    summands: &[PauliSum],
    g: &InteractionHypergraph,
    coloring: &Coloring,
    t: f64,
    r: usize,
    mode: NormMode,
) -> Result<BoundReport> {
    check_r(r)?;
    let mut total = 0.0;
    let mut components = Vec::new();
    for (m, o) in summands.iter().enumerate() {
        if o.n() != h.n() {
            return Err(Error::SizeMismatch(h.n(), o.n()));
        }
        let s = o.support();
        if s.is_empty() {
            components.push((format!("summand_{m}"), 0.0));
            continue;
        }
        let parts = chromatic_parts(h, &s, g, coloring, r)?;
        let o_norm = o.operator_norm(mode)?;
        let v = worst_case_p2_bound(&parts, o_norm, t, r, mode)?.value;
        total += v;
        components.push((format!("summand_{m}"), v));
    }
    let mut rep = BoundReport::new("thm2", total, BoundInputs { t, r, p: 2, n: h.n(), norm_mode: Some(mode) });
    rep.components = components;
    Ok(rep)
}

/// Form of the 2-design average bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomStyle {
    /// Explicit second-order triangle bound.
    TriangleP2,
    /// `T₂`-style sum over all nested commutators of depth `p+1`, with a unit constant.
    NestedT2 { budget: usize },
}

/// Normalized 2-norm sums `Σ n₂(C₁) + ½ Σ n₂(C₂)`.
fn two_norm_sum(parts: &[PauliSum]) -> Result<f64> {
    nested_sum(parts, |c| Ok(c.normalized_two_norm()))
}

/// Average error over a 2-design ensemble. With `d = 2^n` and normalized norms
/// `n₂(A) = ‖A‖₂/√d`, the triangle form is `√2 n₂(O) t³/(12r²)(Σ n₂(C₁) + ½Σ n₂(C₂))`.
/// The variance bound `2r² n₂(O)² n₂(M)² d/(d+1)` is reported as the extra `variance_bound`.
pub fn random_2design_bound(
    parts: &[PauliSum],
    o: &PauliSum,
    t: f64,
    r: usize,
    p: u32,
    style: RandomStyle,
) -> Result<BoundReport> {
    check_r(r)?;
    let n = register(parts)?;
    let o2 = o.normalized_two_norm();
    let inputs = BoundInputs { t, r, p, n, norm_mode: None };
    let d_ratio = 1.0 / (1.0 + 0.5f64.powi(n.min(1000) as i32));
    match style {
        RandomStyle::TriangleP2 => {
            if p != 2 {
                return Err(Error::InvalidArgument("triangle form needs p = 2".into()));
            }
            let k = two_norm_sum(parts)?;
            let value = 2f64.sqrt() * o2 * t.powi(3) / (12.0 * (r * r) as f64) * k;
            let tau = t / r as f64;
            let m2 = tau.powi(3) / 12.0 * k;
            let variance = 2.0 * (r * r) as f64 * o2 * o2 * m2 * m2 * d_ratio;
            let mut rep = BoundReport::new("rand2", value, inputs);
            rep.extras.push(("variance_bound".into(), variance));
            rep.extras.push(("commutator_sum".into(), k));
            Ok(rep)
        }
        RandomStyle::NestedT2 { budget } => {
            let gamma = parts.len();
            let tuples = (gamma as f64).powi(p as i32 + 1);
            if tuples > budget as f64 {
                return Err(Error::Budget { needed: tuples.min(usize::MAX as f64) as usize, budget });
            }
            let t2 = nested_t2(parts, p as usize + 1)?;
            let value = o2 * t2 * t.powf(p as f64 + 1.0) / (r as f64).powi(p as i32);
            let mut rep = BoundReport::new("rand2_t2", value, inputs);
            rep.extras.push(("t2".into(), t2));
            rep.notes.push("asymptotic form evaluated with constant 1".into());
            Ok(rep)
        }
    }
}

/// `Σ_{γ₁..γ_depth} n₂([H_{γ_depth}, … [H_{γ₂}, H_{γ₁}]])`, skipping tuples whose inner commutator vanishes.
pub fn nested_t2(parts: &[PauliSum], depth: usize) -> Result<f64> {
    fn recurse(parts: &[PauliSum], inner: &PauliSum, remaining: usize) -> Result<f64> {
        if remaining == 0 {
            return Ok(inner.normalized_two_norm());
        }
        let mut s = 0.0;
        for h in parts {
            let c = h.commutator(inner)?;
            if !c.is_empty() {
                s += recurse(parts, &c, remaining - 1)?;
            }
        }
        Ok(s)
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let mut total = 0.0;
    for h in parts {
        total += recurse(parts, h, depth - 1)?;
    }
    Ok(total)
}

/// Average bound that ignores the observable's structure:
/// `t³‖O‖/(6r²)(Σ n₂(C₁) + ½Σ n₂(C₂))`.
pub fn random_bound_no_observable(parts: &[PauliSum], o_opnorm: f64, t: f64, r: usize) -> Result<BoundReport> {
    check_r(r)?;
    let n = register(parts)?;
    let k = two_norm_sum(parts)?;
    let value = t.powi(3) * o_opnorm / (6.0 * (r * r) as f64) * k;
    let mut rep = BoundReport::new("rand_noobs", value, BoundInputs { t, r, p: 2, n, norm_mode: None });
    rep.extras.push(("commutator_sum".into(), k));
    Ok(rep)
}

/// 1-design average bound with normalized 4-norms `n₄(A) = ‖A‖₄/d^{1/4}`:
/// `t³ n₄(O)/(6r²)(Σ n₄(C₁) + ½Σ n₄(C₂))`.
pub fn random_1design_bound(parts: &[PauliSum], o: &PauliSum, t: f64, r: usize, budget: usize) -> Result<BoundReport> {
    check_r(r)?;
    let n = register(parts)?;
    let o4 = o.normalized_four_norm(budget)?;
    let k = nested_sum(parts, |c| c.normalized_four_norm(budget))?;
    let value = t.powi(3) * o4 / (6.0 * (r * r) as f64) * k;
    let mut rep = BoundReport::new("rand1", value, BoundInputs { t, r, p: 2, n, norm_mode: None });
    rep.extras.push(("commutator_sum".into(), k));
    Ok(rep)
}

/// Which truncation-error estimate to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TruncationVariant {
    /// `removed_one_norm · t`.
    LightCone,
    /// `C t^{D+1} Σ‖O_m‖ / d0^{α−2D}`.
    Global { dimension: usize, alpha: f64, d0: f64, observable_norm_sum: f64, constant: f64 },
}

pub fn truncation_bound(removed_one_norm: f64, t: f64, variant: TruncationVariant) -> Result<BoundReport> {
    let inputs = BoundInputs { t, r: 0, p: 0, n: 0, norm_mode: None };
    match variant {
        TruncationVariant::LightCone => {
            let mut rep = BoundReport::new("truncation_lc", removed_one_norm * t, inputs);
            rep.extras.push(("removed_one_norm".into(), removed_one_norm));
            Ok(rep)
        }
        TruncationVariant::Global { dimension, alpha, d0, observable_norm_sum, constant } => {
            if d0 <= 0.0 {
                return Err(Error::InvalidArgument("d0 must be positive".into()));
            }
            let d = dimension as f64;
            let value = constant * t.powf(d + 1.0) * observable_norm_sum / d0.powf(alpha - 2.0 * d);
            let mut rep = BoundReport::new("truncation_trc", value, inputs);
            rep.extras.push(("constant".into(), constant));
            rep.extras.push(("removed_one_norm".into(), removed_one_norm));
            rep.notes.push(format!("hidden constant taken as {constant}"));
            Ok(rep)
        }
    }
}

/// Outcome of a step-count search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSearch {
    Found(usize),
    /// `bound(r_max) > ε`.
    Unreachable,
}

impl StepSearch {
    pub fn steps(self) -> Option<usize> {
        match self {
            StepSearch::Found(r) => Some(r),
            StepSearch::Unreachable => None,
        }
    }
}

/// Smallest `r <= r_max` with `bound(r) <= epsilon`, by exponential bracketing then bisection.
///
/// Aborts if the bound increases between bracketing points.
pub fn steps_for_epsilon<F>(mut bound: F, epsilon: f64, r_max: usize) -> Result<StepSearch>
where
    F: FnMut(usize) -> Result<f64>,
{
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if r_max == 0 {
        return Ok(StepSearch::Unreachable);
    }
    let mut prev = (1usize, bound(1)?);
    if prev.1 <= epsilon {
        return Ok(StepSearch::Found(1));
    }
    let mut hi = 1usize;
    loop {
        let next = (hi * 2).min(r_max);
        if next == hi {
            return Ok(StepSearch::Unreachable);
        }
        let v = bound(next)?;
        if v > prev.1 * (1.0 + 1e-12) {
            return Err(Error::NotMonotone { r_small: prev.0, v_small: prev.1, r_large: next, v_large: v });
        }
        if v <= epsilon {
            hi = next;
            break;
        }
        prev = (next, v);
        hi = next;
    }
    let mut lo = prev.0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(StepSearch::Found(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commuting_parts_give_zero() {
        let parts = vec![
            PauliSum::from_words(2, &[(1.0, "ZZ")]).unwrap(),
            PauliSum::from_words(2, &[(0.5, "ZI"), (0.3, "IZ")]).unwrap(),
        ];
        let o = PauliSum::from_words(2, &[(1.0, "XI")]).unwrap();
        assert_eq!(worst_case_p2_bound(&parts, 1.0, 1.0, 3, NormMode::Dense).unwrap().value, 0.0);
        assert_eq!(random_2design_bound(&parts, &o, 1.0, 3, 2, RandomStyle::TriangleP2).unwrap().value, 0.0);
        assert_eq!(random_bound_no_observable(&parts, 1.0, 1.0, 3).unwrap().value, 0.0);
        assert_eq!(random_1design_bound(&parts, &o, 1.0, 3, 1000).unwrap().value, 0.0);
        assert_eq!(
            random_2design_bound(&parts, &o, 1.0, 3, 2, RandomStyle::NestedT2 { budget: 100 }).unwrap().value,
            0.0
        );
    }

    #[test]
    fn r_scaling_is_exact() {
        let h = crate::models::build_tfi(5, 1.0, 0.8).unwrap();
        let parts = crate::models::group_commuting(&h);
        let a = worst_case_p2_bound(&parts, 1.0, 0.5, 3, NormMode::OneNorm).unwrap().value;
        let b = worst_case_p2_bound(&parts, 1.0, 0.5, 6, NormMode::OneNorm).unwrap().value;
        assert!((a / 4.0 - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn search_examples() {
        assert_eq!(steps_for_epsilon(|r| Ok(1.0 / (r * r) as f64), 0.01, 1000).unwrap(), StepSearch::Found(10));
        assert_eq!(steps_for_epsilon(|_| Ok(0.5), 0.6, 1000).unwrap(), StepSearch::Found(1));
        assert_eq!(steps_for_epsilon(|r| Ok(1.0 / r as f64), 1e-6, 1000).unwrap(), StepSearch::Unreachable);
        assert!(steps_for_epsilon(|r| Ok(r as f64), 0.1, 100).is_err());
        assert!(steps_for_epsilon(|_| Ok(1.0), 0.0, 100).is_err());
    }

    #[test]
    fn truncation_values() {
        assert_eq!(truncation_bound(0.0, 2.0, TruncationVariant::LightCone).unwrap().value, 0.0);
        let a = truncation_bound(0.3, 1.0, TruncationVariant::LightCone).unwrap().value;
        let b = truncation_bound(0.3, 2.0, TruncationVariant::LightCone).unwrap().value;
        assert_eq!(b, 2.0 * a);
    }
}
