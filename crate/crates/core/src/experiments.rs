//! Experiment configuration, runners and table output.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{
    random_1design_bound, random_2design_bound, random_bound_no_observable, steps_for_epsilon, thm1_bound,
    thm2_bound, worst_case_p2_bound, BoundReport, RandomStyle, StepSearch, DEFAULT_FOUR_NORM_BUDGET,
};
use crate::error::{Error, Result};
use crate::exactsim::{self, ExactHeisenberg, RateSource};
use crate::lightcone::{
    build_hypergraph, color_hypergraph, cube_regroup, edge_sets, Coloring, ColoringStrategy, InteractionHypergraph,
};
use crate::models::{self, LatticeSpec};
use crate::pauli::{NormMode, PauliSum, SupportSet, DEFAULT_DENSE_LIMIT};
use crate::trotter::{
    chromatic_formula, gate_count, reduced_formula, standard_formula, Circuit, Granularity, MergePolicy,
};

/// Output format for tables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}"))),
        }
    }
}

/// Resolved experiment settings. Every field has a default, so a JSON config
/// file may list only what it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// `mfi`, `tfi`, `powerlaw`, `nn2d` or `file`.
    pub model: String,
    /// Model parameters: `J`, `h`, `g`, `alpha`, and `Lx`/`Ly` for `nn2d`.
    pub params: BTreeMap<String, f64>,
    pub file: Option<String>,
    /// Observable: `z:<q>`, `zsum`, `mag`, `zz-avg`, `proj:<k>` or `file:<path>`.
    pub observable: String,
    /// Summed observable used by the chromatic bound in gate-count sweeps.
    pub global_observable: String,
    pub n: Option<usize>,
    pub n_values: Vec<usize>,
    pub t: Option<f64>,
    /// When set, `t = t_per_n · n` for each sweep point.
    pub t_per_n: Option<f64>,
    pub r: Option<usize>,
    pub epsilon: Option<f64>,
    pub order: u32,
    pub norm_mode: NormMode,
    pub merge: MergePolicy,
    pub granularity: Granularity,
    pub samples: usize,
    pub seed: Option<u64>,
    /// `worst`, `thm1`, `thm2`, `rand2`, `rand1` or `rand-noobs`.
    pub bound: String,
    pub search_r: bool,
    pub r_max: usize,
    /// `standard`, `reduced` or `chromatic`.
    pub method: String,
    /// `edge-sets`, `hypergraph` or `cubes`.
    pub decompose: String,
    pub d0: Option<f64>,
    /// Largest register for which empirical (dense) columns are computed.
    pub empirical_limit: usize,
    pub dqpt: DqptSettings,
    pub output: Option<String>,
    pub format: OutputFormat,
}

/// Settings specific to the rate-function experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqptSettings {
    pub budget: usize,
    pub k: usize,
    pub t_max: f64,
    pub t_step: f64,
    pub thm1_norm_mode: NormMode,
    pub worst_norm_mode: NormMode,
    pub merge: MergePolicy,
}

impl Default for DqptSettings {
    fn default() -> Self {
        DqptSettings {
            budget: 500,
            k: 3,
            t_max: 3.0,
            t_step: 0.01,
            thm1_norm_mode: NormMode::Dense,
            worst_norm_mode: NormMode::OneNorm,
            merge: MergePolicy::WithinStep,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "bound".into(),
            model: "tfi".into(),
            params: BTreeMap::new(),
            file: None,
            observable: "z:0".into(),
            global_observable: "zz-avg".into(),
            n: None,
            n_values: Vec::new(),
            t: None,
            t_per_n: None,
            r: None,
            epsilon: None,
            order: 2,
            norm_mode: NormMode::Dense,
            merge: MergePolicy::Full,
            granularity: Granularity::Pauli,
            samples: 200,
            seed: None,
            bound: "worst".into(),
            search_r: false,
            r_max: 100_000,
            method: "standard".into(),
            decompose: "edge-sets".into(),
            d0: None,
            empirical_limit: 8,
            dqpt: DqptSettings::default(),
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    /// Parses `J=1,h=0.5` into the parameter map (overriding existing keys).
    pub fn set_params(&mut self, spec: &str) -> Result<()> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("parameter {item:?} is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("parameter {k} has non-numeric value {v:?}")))?;
            self.params.insert(k.trim().to_string(), v);
        }
        Ok(())
    }

    fn sizes(&self) -> Result<Vec<usize>> {
        if !self.n_values.is_empty() {
            return Ok(self.n_values.clone());
        }
        if let Some(n) = self.n {
            return Ok(vec![n]);
        }
        if self.model == "nn2d" {
            return Ok(vec![(self.param("Lx", 3.0) * self.param("Ly", 3.0)) as usize]);
        }
        if self.model == "file" {
            return Ok(vec![0]);
        }
        Err(Error::InvalidArgument("no system size given (n or n_values)".into()))
    }

    fn time_for(&self, n: usize) -> Result<f64> {
        match (self.t_per_n, self.t) {
            (Some(s), _) => Ok(s * n as f64),
            (None, Some(t)) => Ok(t),
            (None, None) => Err(Error::InvalidArgument("no evolution time given (t or t_per_n)".into())),
        }
    }

    fn need_r(&self) -> Result<usize> {
        match self.r {
            Some(0) => Err(Error::InvalidArgument("r must be at least 1".into())),
            Some(r) => Ok(r),
            None => Err(Error::InvalidArgument("r is required".into())),
        }
    }

    fn need_epsilon(&self) -> Result<f64> {
        match self.epsilon {
            Some(e) if e > 0.0 => Ok(e),
            Some(e) => Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}"))),
            None => Err(Error::InvalidArgument("epsilon is required".into())),
        }
    }

    fn need_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::InvalidArgument("a seed is required for sampled quantities".into()))
    }

    /// Checks that the fields the selected experiment needs are present and consistent.
    pub fn validate(&self) -> Result<()> {
        let both = self.r.is_some() && self.epsilon.is_some();
        match self.experiment.as_str() {
            "bound" => {
                if self.search_r {
                    self.need_epsilon()?;
                    if self.r.is_some() {
                        return Err(Error::InvalidArgument("give either r or epsilon with search_r, not both".into()));
                    }
                } else {
                    self.need_r()?;
                }
            }
            "gatecount" | "dqpt" => {
                self.need_epsilon()?;
                if both {
                    return Err(Error::InvalidArgument("give epsilon, not r, for step searches".into()));
                }
            }
            "random" => {
                self.need_r()?;
                self.need_seed()?;
                if both {
                    return Err(Error::InvalidArgument("give r, not epsilon, for the random sweep".into()));
                }
            }
            "simulate" => {
                self.need_r()?;
            }
            "decompose" => {}
            other => return Err(Error::InvalidArgument(format!("unknown experiment {other:?}"))),
        }
        if self.order == 0 {
            return Err(Error::InvalidArgument("order must be positive".into()));
        }
        Ok(())
    }
}

/// A Hamiltonian with the lattice it lives on, when known.
pub struct ModelInstance {
    pub h: PauliSum,
    pub lattice: Option<LatticeSpec>,
}

/// Builds the configured model on `n` sites (`n` is ignored for file and `nn2d` models).
pub fn resolve_model(cfg: &ExperimentConfig, n: usize) -> Result<ModelInstance> {
    let j = cfg.param("J", 1.0);
    let h = cfg.param("h", 0.5);
    match cfg.model.as_str() {
        "mfi" => Ok(ModelInstance { h: models::build_mfi(n, j, h, cfg.param("g", 1.2))?, lattice: Some(LatticeSpec::chain(n)) }),
        "tfi" => Ok(ModelInstance { h: models::build_tfi(n, j, h)?, lattice: Some(LatticeSpec::chain(n)) }),
        "powerlaw" => Ok(ModelInstance {
            h: models::build_power_law(n, j, h, cfg.param("alpha", 4.0))?,
            lattice: Some(LatticeSpec::chain(n)),
        }),
        "nn2d" => {
            let lattice = LatticeSpec::grid(&[cfg.param("Lx", 3.0) as usize, cfg.param("Ly", 3.0) as usize])?;
            Ok(ModelInstance { h: models::build_tfi_lattice(&lattice, j, h)?, lattice: Some(lattice) })
        }
        "file" => {
            let path = cfg.file.as_ref().ok_or_else(|| Error::InvalidArgument("model `file` needs a file".into()))?;
            Ok(ModelInstance { h: models::load_pauli_file(path)?, lattice: None })
        }
        other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
    }
}

/// Summands of an observable specification on `n` qubits.
pub fn resolve_observable(spec: &str, n: usize) -> Result<Vec<PauliSum>> {
    let bad = || Error::InvalidArgument(format!("unknown observable {spec:?}"));
    if let Some(q) = spec.strip_prefix("z:") {
        let q: usize = q.parse().map_err(|_| bad())?;
        if q >= n {
            return Err(Error::InvalidArgument(format!("qubit {q} outside the {n}-qubit register")));
        }
        return Ok(vec![models::single_z(n, q)]);
    }
    if let Some(k) = spec.strip_prefix("proj:") {
        let k: usize = k.parse().map_err(|_| bad())?;
        return Ok(vec![models::zero_projector(n, k)?]);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let o = models::load_pauli_file(path)?;
        if o.n() != n {
            return Err(Error::SizeMismatch(n, o.n()));
        }
        return Ok(vec![o]);
    }
    match spec {
        "zsum" => Ok((0..n).map(|q| models::single_z(n, q)).collect()),
        "mag" => Ok((0..n).map(|q| models::single_z(n, q).scale(1.0 / n as f64)).collect()),
        "zz-avg" => Ok(models::zz_average_summands(n)),
        _ => Err(bad()),
    }
}

fn total(n: usize, summands: &[PauliSum]) -> Result<PauliSum> {
    PauliSum::sum_of(n, summands)
}

/// Norm mode that is usable at this size: dense requests above the limit are rejected.
fn opnorm(o: &PauliSum, mode: NormMode) -> Result<f64> {
    o.operator_norm(mode)
}

/// Hypergraph and coloring used for the chromatic formula of a model.
pub fn chromatic_setup(inst: &ModelInstance) -> Result<(InteractionHypergraph, Coloring)> {
    let g = build_hypergraph(&inst.h);
    if let Some(lattice) = &inst.lattice {
        if let Ok(c) = color_hypergraph(&g, &ColoringStrategy::LatticeParity(lattice)) {
            return Ok((g, c));
        }
    }
    let c = color_hypergraph(&g, &ColoringStrategy::Greedy)?;
    Ok((g, c))
}

/// Rows of named columns with a stable order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows as JSON objects with identical keys.
    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = serde_json::Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        m.insert(c.clone(), v.clone());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(&self.to_json_value())? + "\n"),
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("utf-8 output"))
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes a table to `path` in the given format.
pub fn emit(table: &Table, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, table.render(format)?)?;
    Ok(())
}

/// Renders a table with the resolved config attached: JSON output becomes
/// `{"config": .., "rows": [..]}`, CSV output gets a leading `# config: ..` line.
pub fn render_with_config(table: &Table, cfg: &ExperimentConfig) -> Result<String> {
    match cfg.format {
        OutputFormat::Json => {
            let doc = json!({ "config": cfg, "rows": table.to_json_value() });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        OutputFormat::Csv => Ok(format!("# config: {}\n{}", serde_json::to_string(cfg)?, table.render(OutputFormat::Csv)?)),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn steps_value(s: StepSearch) -> Value {
    match s {
        StepSearch::Found(r) => json!(r),
        StepSearch::Unreachable => Value::Null,
    }
}

/// Result of the `bound` experiment.
#[derive(Clone, Debug, Serialize)]
pub struct BoundOutcome {
    pub report: BoundReport,
    /// Step count found when searching for `epsilon`.
    pub steps: Option<StepSearch>,
}

/// Evaluates one configured bound at step count `r`.
fn evaluate_bound(
    cfg: &ExperimentConfig,
    inst: &ModelInstance,
    summands: &[PauliSum],
    chromatic: Option<&(InteractionHypergraph, Coloring)>,
    t: f64,
    r: usize,
) -> Result<BoundReport> {
    let h = &inst.h;
    let n = h.n();
    let o = total(n, summands)?;
    let parts = models::group_commuting(h);
    match cfg.bound.as_str() {
        "worst" => worst_case_p2_bound(&parts, opnorm(&o, cfg.norm_mode)?, t, r, cfg.norm_mode),
        "thm1" => thm1_bound(h, &o.support(), opnorm(&o, cfg.norm_mode)?, t, r, cfg.norm_mode),
        "thm2" => {
            let (g, c) = chromatic.ok_or_else(|| Error::InvalidArgument("missing chromatic setup".into()))?;
            thm2_bound(h, summands, g, c, t, r, cfg.norm_mode)
        }
        "rand2" => random_2design_bound(&parts, &o, t, r, 2, RandomStyle::TriangleP2),
        "rand1" => random_1design_bound(&parts, &o, t, r, DEFAULT_FOUR_NORM_BUDGET),
        "rand-noobs" => random_bound_no_observable(&parts, opnorm(&o, cfg.norm_mode)?, t, r),
        other => Err(Error::InvalidArgument(format!("unknown bound {other:?}"))),
    }
}

pub fn run_bound(cfg: &ExperimentConfig) -> Result<BoundOutcome> {
    let n = cfg.sizes()?[0];
    let inst = resolve_model(cfg, n)?;
    let n = inst.h.n();
    let summands = resolve_observable(&cfg.observable, n)?;
    let t = cfg.time_for(n)?;
    let chromatic = if cfg.bound == "thm2" { Some(chromatic_setup(&inst)?) } else { None };
    if cfg.search_r {
        let eps = cfg.need_epsilon()?;
        let steps = steps_for_epsilon(
            |r| Ok(evaluate_bound(cfg, &inst, &summands, chromatic.as_ref(), t, r)?.value),
            eps,
            cfg.r_max,
        )?;
        let r = steps.steps().unwrap_or(cfg.r_max);
        let report = evaluate_bound(cfg, &inst, &summands, chromatic.as_ref(), t, r)?;
        Ok(BoundOutcome { report, steps: Some(steps) })
    } else {
        let report = evaluate_bound(cfg, &inst, &summands, chromatic.as_ref(), t, cfg.need_r()?)?;
        Ok(BoundOutcome { report, steps: None })
    }
}

impl BoundOutcome {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["bound", "n", "t", "r", "p", "norm_mode", "value", "steps_for_epsilon"]);
        let i = &self.report.inputs;
        t.push(vec![
            json!(self.report.name),
            json!(i.n),
            num(i.t),
            json!(i.r),
            json!(i.p),
            serde_json::to_value(i.norm_mode).unwrap_or(Value::Null),
            num(self.report.value),
            self.steps.map(steps_value).unwrap_or(Value::Null),
        ]);
        t
    }
}

/// Smallest `r` with `err(r) <= eps` for an empirical error that may not be monotone:
/// bracketing on powers of two, then bisection.
fn empirical_steps<F>(mut err: F, eps: f64, r_max: usize) -> Result<StepSearch>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut lo = 0usize;
    let mut hi = 1usize;
    loop {
        if err(hi)? <= eps {
            break;
        }
        if hi >= r_max {
            return Ok(StepSearch::Unreachable);
        }
        lo = hi;
        hi = (hi * 2).min(r_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if err(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(StepSearch::Found(hi))
}

/// Step counts and exponential counts per method over a size sweep.
pub fn run_gatecount(cfg: &ExperimentConfig) -> Result<Table> {
    let eps = cfg.need_epsilon()?;
    let mut table = Table::new(&["n", "method", "bound_r", "exponential_count", "reachable"]);
    for n in cfg.sizes()? {
        let inst = resolve_model(cfg, n)?;
        let h = &inst.h;
        let n = h.n();
        let t = cfg.time_for(n)?;
        let local = total(n, &resolve_observable(&cfg.observable, n)?)?;
        let s = local.support();
        let o_norm = opnorm(&local, cfg.norm_mode)?;
        let global = resolve_observable(&cfg.global_observable, n)?;
        let global_sum = total(n, &global)?;
        let parts = models::group_commuting(h);
        let chrom = chromatic_setup(&inst)?;
        let mut add = |method: &str, steps: StepSearch, circuit: Option<Circuit>| {
            let count = circuit.map(|c| json!(gate_count(&c, cfg.granularity))).unwrap_or(Value::Null);
            table.push(vec![json!(n), json!(method), steps_value(steps), count, json!(steps.steps().is_some())]);
        };

        let worst =
            steps_for_epsilon(|r| Ok(worst_case_p2_bound(&parts, o_norm, t, r, cfg.norm_mode)?.value), eps, cfg.r_max)?;
        let c = worst.steps().map(|r| standard_formula(&parts, t, r, 2, cfg.merge)).transpose()?;
        add("worst", worst, c);

        let thm1 = steps_for_epsilon(|r| Ok(thm1_bound(h, &s, o_norm, t, r, cfg.norm_mode)?.value), eps, cfg.r_max)?;
        let c = thm1.steps().map(|r| reduced_formula(h, &s, t, r, 2, cfg.merge)).transpose()?;
        add("thm1", thm1, c);

        let global_norm = opnorm(&global_sum, cfg.norm_mode)?;
        let worst_global =
            steps_for_epsilon(|r| Ok(worst_case_p2_bound(&parts, global_norm, t, r, cfg.norm_mode)?.value), eps, cfg.r_max)?;
        let c = worst_global.steps().map(|r| standard_formula(&parts, t, r, 2, cfg.merge)).transpose()?;
        add("worst_global", worst_global, c);

        let thm2 =
            steps_for_epsilon(|r| Ok(thm2_bound(h, &global, &chrom.0, &chrom.1, t, r, cfg.norm_mode)?.value), eps, cfg.r_max)?;
        let c = thm2.steps().map(|r| chromatic_formula(h, &chrom.1, &chrom.0, t, r, 2, cfg.merge)).transpose()?;
        add("thm2", thm2, c);

        if n <= cfg.empirical_limit {
            let exact = ExactHeisenberg::new(h, &local, t)?;
            let e1 = empirical_steps(|r| exact.error(&local, &reduced_formula(h, &s, t, r, 2, cfg.merge)?), eps, cfg.r_max)?;
            let c = e1.steps().map(|r| reduced_formula(h, &s, t, r, 2, cfg.merge)).transpose()?;
            add("alg1_empirical", e1, c);
            let exact_g = ExactHeisenberg::new(h, &global_sum, t)?;
            let e2 = empirical_steps(
                |r| exact_g.error(&global_sum, &chromatic_formula(h, &chrom.1, &chrom.0, t, r, 2, cfg.merge)?),
                eps,
                cfg.r_max,
            )?;
            let c = e2.steps().map(|r| chromatic_formula(h, &chrom.1, &chrom.0, t, r, 2, cfg.merge)).transpose()?;
            add("alg2_empirical", e2, c);
        }
    }
    Ok(table)
}

/// Largest scanned time whose required circuit fits the gate budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuaranteedTime {
    pub bound: String,
    /// `None` when no grid time fits the budget.
    pub t: Option<f64>,
    pub r: Option<usize>,
    pub step: Option<f64>,
    pub gate_count: Option<usize>,
}

/// Result of the rate-function experiment.
#[derive(Clone, Debug)]
pub struct DqptOutcome {
    pub guaranteed: Vec<GuaranteedTime>,
    /// Columns: method, t, echo, lambda, singular.
    pub series: Table,
}

impl DqptOutcome {
    pub fn guaranteed_table(&self) -> Table {
        let mut t = Table::new(&["bound", "guaranteed_t", "r", "step", "gate_count"]);
        for g in &self.guaranteed {
            t.push(vec![
                json!(g.bound),
                g.t.map(num).unwrap_or(Value::Null),
                json!(g.r),
                g.step.map(num).unwrap_or(Value::Null),
                json!(g.gate_count),
            ]);
        }
        t
    }

    pub fn get(&self, bound: &str) -> Option<&GuaranteedTime> {
        self.guaranteed.iter().find(|g| g.bound == bound)
    }
}

/// Scans the time grid for the largest time whose step count (from `value_at_unit_time(r)·t³ <= ε`)
/// gives a circuit within the budget.
fn guaranteed_time<B, C>(name: &str, grid: &[f64], eps: f64, r_max: usize, budget: usize, mut bound: B, mut count: C) -> Result<GuaranteedTime>
where
    B: FnMut(usize, f64) -> Result<f64>,
    C: FnMut(usize) -> Result<usize>,
{
    let mut best = GuaranteedTime { bound: name.into(), t: None, r: None, step: None, gate_count: None };
    for &t in grid {
        let steps = steps_for_epsilon(|r| bound(r, t), eps, r_max)?;
        let Some(r) = steps.steps() else { break };
        let c = count(r)?;
        if c <= budget {
            best = GuaranteedTime { bound: name.into(), t: Some(t), r: Some(r), step: Some(t / r as f64), gate_count: Some(c) };
        }
    }
    Ok(best)
}

/// Guaranteed simulation times under a gate budget and the rate-function series.
pub fn run_dqpt(cfg: &ExperimentConfig) -> Result<DqptOutcome> {
    let eps = cfg.need_epsilon()?;
    let d = &cfg.dqpt;
    let n = cfg.sizes()?[0];
    let inst = resolve_model(cfg, n)?;
    let h = &inst.h;
    let n = h.n();
    if d.k == 0 || d.k > n {
        return Err(Error::InvalidArgument(format!("k must be in 1..={n}")));
    }
    if d.t_step <= 0.0 || d.t_max <= 0.0 {
        return Err(Error::InvalidArgument("time grid needs positive step and end".into()));
    }
    let steps = (d.t_max / d.t_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (1..=steps).map(|i| (i as f64 * d.t_step * 1e9).round() / 1e9).collect();
    let s = SupportSet::from_qubits(0..d.k);
    let projector = models::zero_projector(n, d.k)?;

    // Both bounds scale as t³, so cache their value at t = 1 per r.
    let mut thm1_cache: HashMap<usize, f64> = HashMap::new();
    let depth = edge_sets(h, &s, None)?.depth();
    let upsilon = 2;
    let o_norm_thm1 = opnorm(&projector, d.thm1_norm_mode)?;
    let mut thm1_unit = |r: usize| -> Result<f64> {
        let key = (r * upsilon).min(depth + 1);
        if let Some(v) = thm1_cache.get(&key) {
            return Ok(*v * 36.0 / (r * r) as f64);
        }
        let v = thm1_bound(h, &s, o_norm_thm1, 1.0, r, d.thm1_norm_mode)?.value;
        thm1_cache.insert(key, v * (r * r) as f64 / 36.0);
        Ok(v)
    };
    let mut reduced_counts: HashMap<usize, usize> = HashMap::new();
    let thm1 = guaranteed_time(
        "thm1",
        &grid,
        eps,
        cfg.r_max,
        d.budget,
        |r, t| Ok(thm1_unit(r)? * t.powi(3)),
        |r| {
            if let Some(c) = reduced_counts.get(&r) {
                return Ok(*c);
            }
            let c = gate_count(&reduced_formula(h, &s, 1.0, r, 2, d.merge)?, cfg.granularity);
            reduced_counts.insert(r, c);
            Ok(c)
        },
    )?;

    let parts = models::group_commuting(h);
    let o_norm_worst = opnorm(&projector, d.worst_norm_mode)?;
    let worst_unit = worst_case_p2_bound(&parts, o_norm_worst, 1.0, 1, d.worst_norm_mode)?.value;
    let mut standard_counts: HashMap<usize, usize> = HashMap::new();
    let worst = guaranteed_time(
        "worst",
        &grid,
        eps,
        cfg.r_max,
        d.budget,
        |r, t| Ok(worst_unit * t.powi(3) / (r * r) as f64),
        |r| {
            if let Some(c) = standard_counts.get(&r) {
                return Ok(*c);
            }
            let c = gate_count(&standard_formula(&parts, 1.0, r, 2, d.merge)?, cfg.granularity);
            standard_counts.insert(r, c);
            Ok(c)
        },
    )?;

    let mut series = Table::new(&["method", "t", "echo", "lambda", "singular"]);
    let mut push_points = |method: &str, pts: &[exactsim::RatePoint]| {
        for p in pts {
            series.push(vec![json!(method), num(p.t), num(p.echo), num(p.lambda), json!(p.singular)]);
        }
    };
    if n <= DEFAULT_DENSE_LIMIT {
        let exact = exactsim::rate_function(h, d.k, &RateSource::Exact, &grid)?;
        push_points("exact", &exact);
        for (method, g) in [("reduced", &thm1), ("standard", &worst)] {
            let Some(dt) = g.step else { continue };
            let m = (d.t_max / dt + 1e-9).floor() as usize;
            let times: Vec<f64> = (1..=m).map(|i| i as f64 * dt).collect();
            let circuits = times
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    if method == "reduced" {
                        reduced_formula(h, &s, t, i + 1, 2, d.merge)
                    } else {
                        standard_formula(&parts, t, i + 1, 2, d.merge)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let pts = exactsim::rate_function(h, d.k, &RateSource::Circuits(&circuits), &times)?;
            push_points(method, &pts);
        }
    }
    Ok(DqptOutcome { guaranteed: vec![thm1, worst], series })
}

/// Bounds and Haar-averaged errors over a size sweep.
pub fn run_random(cfg: &ExperimentConfig) -> Result<Table> {
    let r = cfg.need_r()?;
    let seed = cfg.need_seed()?;
    let mut table = Table::new(&[
        "x",
        "t",
        "r",
        "worst_bound",
        "noobs_bound",
        "ours_bound",
        "rand1_bound",
        "variance_bound",
        "empirical_mean",
        "empirical_std",
        "empirical",
    ]);
    for n in cfg.sizes()? {
        let inst = resolve_model(cfg, n)?;
        let h = &inst.h;
        let n = h.n();
        let t = cfg.time_for(n)?;
        let o = total(n, &resolve_observable(&cfg.observable, n)?)?;
        let parts = models::group_commuting(h);
        // Molecular-style inputs split the observable into commuting groups and add the per-group bounds.
        let o_groups = if cfg.model == "file" { models::group_commuting(&o) } else { vec![o.clone()] };
        let (mut worst, mut noobs, mut ours, mut rand1, mut var) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for og in &o_groups {
            let norm = opnorm(og, if n <= DEFAULT_DENSE_LIMIT { cfg.norm_mode } else { NormMode::OneNorm })?;
            worst += worst_case_p2_bound(&parts, norm, t, r, cfg.norm_mode)?.value;
            noobs += random_bound_no_observable(&parts, norm, t, r)?.value;
            let rep = random_2design_bound(&parts, og, t, r, 2, RandomStyle::TriangleP2)?;
            ours += rep.value;
            var += rep.extra("variance_bound").unwrap_or(0.0);
            rand1 += random_1design_bound(&parts, og, t, r, DEFAULT_FOUR_NORM_BUDGET)?.value;
        }
        let (mean, std, flag) = if n <= cfg.empirical_limit {
            let c = standard_formula(&parts, t, r, 2, cfg.merge)?;
            let stats = exactsim::empirical_average_error(h, &o, &c, t, cfg.samples, seed)?;
            (num(stats.mean), num(stats.std), true)
        } else {
            (Value::Null, Value::Null, false)
        };
        table.push(vec![
            json!(n),
            num(t),
            json!(r),
            num(worst),
            num(noobs),
            num(ours),
            num(rand1),
            num(var),
            mean,
            std,
            json!(flag),
        ]);
    }
    Ok(table)
}

/// Circuit built for the `simulate` experiment.
pub fn build_circuit(cfg: &ExperimentConfig, inst: &ModelInstance, o: &PauliSum, t: f64, r: usize) -> Result<Circuit> {
    let h = &inst.h;
    match cfg.method.as_str() {
        "standard" => standard_formula(&models::group_commuting(h), t, r, cfg.order, cfg.merge),
        "reduced" => reduced_formula(h, &o.support(), t, r, cfg.order, cfg.merge),
        "chromatic" => {
            let (g, c) = chromatic_setup(inst)?;
            chromatic_formula(h, &c, &g, t, r, cfg.order, cfg.merge)
        }
        other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
    }
}

/// Builds the configured circuit and measures its error against exact evolution.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<(Table, Circuit)> {
    let n = cfg.sizes()?[0];
    let inst = resolve_model(cfg, n)?;
    let n = inst.h.n();
    let t = cfg.time_for(n)?;
    let r = cfg.need_r()?;
    let o = total(n, &resolve_observable(&cfg.observable, n)?)?;
    let c = build_circuit(cfg, &inst, &o, t, r)?;
    let mut table = Table::new(&[
        "method",
        "n",
        "t",
        "r",
        "order",
        "gates",
        "pauli_exponentials",
        "heisenberg_error",
        "haar_mean",
        "haar_std",
    ]);
    let (err, mean, std) = if n <= cfg.empirical_limit.max(DEFAULT_DENSE_LIMIT.min(10)) {
        let exact = ExactHeisenberg::new(&inst.h, &o, t)?;
        let delta = exact.difference(&o, &c)?;
        let err = delta.hermitian_norm();
        match cfg.seed {
            Some(seed) if cfg.samples >= 2 => {
                let stats = exactsim::average_error_of(&delta, cfg.samples, seed)?;
                (num(err), num(stats.mean), num(stats.std))
            }
            _ => (num(err), Value::Null, Value::Null),
        }
    } else {
        (Value::Null, Value::Null, Value::Null)
    };
    table.push(vec![
        json!(cfg.method),
        json!(n),
        num(t),
        json!(r),
        json!(cfg.order),
        json!(gate_count(&c, Granularity::Generator)),
        json!(gate_count(&c, Granularity::Pauli)),
        err,
        mean,
        std,
    ]);
    Ok((table, c))
}

/// Dumps the edge sets, hypergraph or cube regrouping of the configured model as JSON.
pub fn run_decompose(cfg: &ExperimentConfig) -> Result<Value> {
    let n = cfg.sizes()?[0];
    let inst = resolve_model(cfg, n)?;
    let h = &inst.h;
    let terms = |s: &PauliSum| -> Value {
        Value::Array(s.iter().map(|(p, c)| json!({"pauli": p.to_string(), "coeff": c})).collect())
    };
    match cfg.decompose.as_str() {
        "edge-sets" => {
            let o = total(h.n(), &resolve_observable(&cfg.observable, h.n())?)?;
            let dec = edge_sets(h, &o.support(), None)?;
            let layers: Vec<Value> = dec
                .subs
                .iter()
                .zip(&dec.edges)
                .enumerate()
                .map(|(k, (sub, e))| json!({"k": k, "edge_set": e, "terms": terms(sub)}))
                .collect();
            Ok(json!({"base": dec.base, "layers": layers, "tail": terms(&dec.tail)}))
        }
        "hypergraph" => {
            let (g, c) = chromatic_setup(&inst)?;
            let edges: Vec<Value> = g
                .hyperedges
                .iter()
                .zip(&g.subs)
                .zip(&c.colors)
                .map(|((e, s), col)| json!({"support": e, "color": col, "terms": terms(s)}))
                .collect();
            Ok(json!({"chi": c.chi, "hyperedges": edges}))
        }
        "cubes" => {
            let lattice = inst.lattice.clone().ok_or_else(|| Error::InvalidArgument("cube regrouping needs a lattice model".into()))?;
            let d0 = cfg.d0.ok_or_else(|| Error::InvalidArgument("cube regrouping needs d0".into()))?;
            let trunc = models::truncate_power_law(h, &lattice, d0, None)?;
            let (g, c) = cube_regroup(&trunc.kept, &lattice, d0)?;
            let edges: Vec<Value> = g
                .hyperedges
                .iter()
                .zip(&g.subs)
                .zip(&c.colors)
                .map(|((e, s), col)| json!({"support": e, "color": col, "terms": terms(s)}))
                .collect();
            Ok(json!({"chi": c.chi, "removed_one_norm": trunc.removed_one_norm, "hyperedges": edges}))
        }
        other => Err(Error::InvalidArgument(format!("unknown decomposition {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_csv_is_header_only() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.render(OutputFormat::Csv).unwrap(), "a,b\n");
        assert_eq!(t.render(OutputFormat::Json).unwrap().trim(), "[]");
    }

    #[test]
    fn json_round_trip() {
        let mut t = Table::new(&["n", "value", "name"]);
        t.push(vec![json!(3), json!(0.125), json!("x")]);
        let text = t.render(OutputFormat::Json).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t.to_json_value());
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "bound", "n": 4, "t": 0.5, "r": 3}"#).unwrap();
        assert_eq!(cfg.model, "tfi");
        cfg.validate().unwrap();
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let mut c2 = cfg.clone();
        c2.set_params("J=0.2, h=1").unwrap();
        assert_eq!(c2.param("J", 0.0), 0.2);
        assert!(c2.set_params("J").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = ExperimentConfig { experiment: "random".into(), r: Some(4), ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.seed = Some(1);
        cfg.validate().unwrap();
        cfg.epsilon = Some(0.1);
        assert!(cfg.validate().is_err());
        let g = ExperimentConfig { experiment: "gatecount".into(), ..Default::default() };
        assert!(g.validate().is_err());
    }

    #[test]
    fn observables() {
        assert_eq!(resolve_observable("zsum", 4).unwrap().len(), 4);
        assert_eq!(resolve_observable("zz-avg", 4).unwrap().len(), 3);
        assert_eq!(resolve_observable("proj:2", 4).unwrap()[0].len(), 4);
        assert!(resolve_observable("z:9", 4).is_err());
        assert!(resolve_observable("nope", 4).is_err());
    }
}
