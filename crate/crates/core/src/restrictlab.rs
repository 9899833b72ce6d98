//! Random-restriction experiments: exact minimal decision-tree depth, common
//! partial restriction trees for families, Monte-Carlo switching runs against
//! their closed-form bounds, and the three-step fair restriction sampler.

use crate::circuit::{Child, CircuitSpec, Literal, TopGate};
use crate::error::{Error, Result};
use crate::restriction::{sample_rp, sample_subset, Cell, Restriction};
use crate::rng::{trial_rng, Rng};
use crate::stats::binom_coeff;
use crate::truthtable::TruthTable;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

pub const MIN_DT_MAX_VARS: usize = 16;
pub const COMMON_RT_MAX_VARS: usize = 12;
pub const COMMON_RT_MAX_FAMILY: usize = 8;
pub const PIPELINE_MAX_VARS: usize = 16;

fn support_canon(f: &TruthTable) -> TruthTable {
    f.project_to(&f.support())
}

fn dt_depth_memo(f: TruthTable, memo: &mut HashMap<TruthTable, usize>) -> usize {
    if f.n() == 0 {
        return 0;
    }
    if let Some(&d) = memo.get(&f) {
        return d;
    }
    let mut best = usize::MAX;
    for v in 0..f.n() {
        let d0 = dt_depth_memo(support_canon(&f.cofactor(v, false)), memo);
        if 1 + d0 >= best {
            continue;
        }
        let d1 = dt_depth_memo(support_canon(&f.cofactor(v, true)), memo);
        if 1 + d0.max(d1) < best {
            best = 1 + d0.max(d1);
        }
        if best == 1 {
            break;
        }
    }
    memo.insert(f, best);
    best
}

/// Exact minimal decision-tree depth, by memoized search over all branch
/// variables. Constants have depth 0.
pub fn min_dt_depth(f: &TruthTable) -> Result<usize> {
    if f.n() > MIN_DT_MAX_VARS {
        return Err(Error::cap(format!(
            "exact depth search needs n <= {MIN_DT_MAX_VARS}, n={}",
            f.n()
        )));
    }
    let mut memo = HashMap::new();
    Ok(dt_depth_memo(support_canon(f), &mut memo))
}

struct RtSearch {
    l: usize,
    dt_memo: HashMap<TruthTable, usize>,
    memo: HashMap<Vec<TruthTable>, usize>,
}

impl RtSearch {
    fn new(l: usize) -> Self {
        RtSearch { l, dt_memo: HashMap::new(), memo: HashMap::new() }
    }

    /// Members the tree still owes work to: those deeper than l.
    fn active(&mut self, family: &[TruthTable]) -> Vec<TruthTable> {
        let mut out: Vec<TruthTable> = family
            .iter()
            .filter(|f| dt_depth_memo(support_canon(f), &mut self.dt_memo) > self.l)
            .cloned()
            .collect();
        out.sort_by_key(TruthTable::to_hex);
        out.dedup();
        out
    }

    fn depth(&mut self, family: &[TruthTable]) -> usize {
        let active = self.active(family);
        if active.is_empty() {
            return 0;
        }
        if let Some(&d) = self.memo.get(&active) {
            return d;
        }
        let vars: BTreeSet<usize> = active.iter().flat_map(|f| f.support()).collect();
        let mut best = usize::MAX;
        for &v in &vars {
            let zero: Vec<TruthTable> =
                active.iter().map(|f| f.cofactor(v, false)).collect();
            let d0 = self.depth(&zero);
            if 1 + d0 >= best {
                continue;
            }
            let one: Vec<TruthTable> =
                active.iter().map(|f| f.cofactor(v, true)).collect();
            let d1 = self.depth(&one);
            if 1 + d0.max(d1) < best {
                best = 1 + d0.max(d1);
            }
            if best == 1 {
                break;
            }
        }
        self.memo.insert(active, best);
        best
    }
}

/// Exact minimal depth of a common l-partial restriction tree: a tree of
/// branch variables after whose every root-to-leaf path each family member
/// has decision-tree depth at most l.
pub fn common_partial_rt_depth(family: &[TruthTable], l: usize) -> Result<usize> {
    if family.is_empty() {
        return Err(Error::dimension("family must be nonempty"));
    }
    let n = family[0].n();
    if family.iter().any(|f| f.n() != n) {
        return Err(Error::dimension("family members must share an arity"));
    }
    if n > COMMON_RT_MAX_VARS {
        return Err(Error::cap(format!(
            "common tree search needs n <= {COMMON_RT_MAX_VARS}, n={n}"
        )));
    }
    if family.len() > COMMON_RT_MAX_FAMILY {
        return Err(Error::cap(format!(
            "common tree search needs at most {COMMON_RT_MAX_FAMILY} members, got {}",
            family.len()
        )));
    }
    Ok(RtSearch::new(l).depth(family))
}

/// One Monte-Carlo switching run: a family of circuits, the star
/// probability, the depth budget t, the granularity l for the family case,
/// and the trial plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchExperimentConfig {
    pub family: Vec<CircuitSpec>,
    pub p: f64,
    pub t: usize,
    #[serde(default)]
    pub l: usize,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchReport {
    pub empirical_failure: f64,
    /// Closed-form failure bound, clamped into [0,1].
    pub bound: f64,
    /// True when the unclamped bound exceeded 1.
    pub vacuous: bool,
    pub trials: u64,
    pub seed: u64,
    /// Count of trials per observed depth.
    pub depth_histogram: Vec<u64>,
}

fn family_width(family: &[CircuitSpec]) -> Result<usize> {
    let mut w = 0;
    for circuit in family {
        for child in &circuit.children {
            let cw = child.width().ok_or_else(|| {
                Error::spec("switching experiments need literal-list children")
            })?;
            w = w.max(cw);
        }
    }
    Ok(w)
}

fn switch_run(
    tables: &[TruthTable],
    n: usize,
    p: f64,
    trials: u64,
    seed: u64,
    depth_of: impl Fn(&[TruthTable]) -> usize + Sync,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("p must be in [0,1], got {p}")));
    }
    (0..trials)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let mut rng = trial_rng(seed, i);
            let rho = sample_rp(n, p, &mut rng)?;
            let restricted: Vec<TruthTable> = tables
                .iter()
                .map(|t| t.restrict(&rho))
                .collect::<Result<_>>()?;
            Ok(depth_of(&restricted))
        })
        .collect()
}

fn assemble_report(
    depths: Vec<usize>,
    t: usize,
    raw_bound: f64,
    seed: u64,
) -> SwitchReport {
    let trials = depths.len() as u64;
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max_depth + 1];
    let mut failures = 0u64;
    for d in depths {
        histogram[d] += 1;
        if d > t {
            failures += 1;
        }
    }
    SwitchReport {
        empirical_failure: failures as f64 / trials.max(1) as f64,
        bound: raw_bound.min(1.0),
        vacuous: raw_bound > 1.0,
        trials,
        seed,
        depth_histogram: histogram,
    }
}

/// Estimates how often a restriction leaves the (single) circuit deeper than
/// t as a decision tree, against the (5pw)^t bound.
pub fn single_switch_experiment(cfg: &SwitchExperimentConfig) -> Result<SwitchReport> {
    if cfg.family.len() != 1 {
        return Err(Error::spec(format!(
            "single-circuit experiment got {} circuits",
            cfg.family.len()
        )));
    }
    if cfg.trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let circuit = &cfg.family[0];
    if circuit.n > MIN_DT_MAX_VARS {
        return Err(Error::cap(format!(
            "experiment needs n <= {MIN_DT_MAX_VARS}, n={}",
            circuit.n
        )));
    }
    let w = family_width(&cfg.family)?;
    let table = circuit.truth_table()?;
    let depths = switch_run(
        std::slice::from_ref(&table),
        circuit.n,
        cfg.p,
        cfg.trials,
        cfg.seed,
        |restricted| {
            let mut memo = HashMap::new();
            dt_depth_memo(support_canon(&restricted[0]), &mut memo)
        },
    )?;
    let raw = (5.0 * cfg.p * w as f64).powi(cfg.t as i32);
    Ok(assemble_report(depths, cfg.t, raw, cfg.seed))
}

/// Estimates how often a restriction leaves the family without a common
/// l-partial restriction tree of depth t, against the s(24pw)^t bound.
pub fn multi_switch_experiment(cfg: &SwitchExperimentConfig) -> Result<SwitchReport> {
    if cfg.family.is_empty() {
        return Err(Error::spec("family must be nonempty"));
    }
    if cfg.trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let n = cfg.family[0].n;
    if cfg.family.iter().any(|c| c.n != n) {
        return Err(Error::dimension("family members must share an arity"));
    }
    if n > COMMON_RT_MAX_VARS {
        return Err(Error::cap(format!(
            "family experiment needs n <= {COMMON_RT_MAX_VARS}, n={n}"
        )));
    }
    if cfg.family.len() > COMMON_RT_MAX_FAMILY {
        return Err(Error::cap(format!(
            "family experiment needs at most {COMMON_RT_MAX_FAMILY} circuits, got {}",
            cfg.family.len()
        )));
    }
    let w = family_width(&cfg.family)?;
    let tables: Vec<TruthTable> = cfg
        .family
        .iter()
        .map(|c| c.truth_table())
        .collect::<Result<_>>()?;
    let l = cfg.l;
    let depths = switch_run(&tables, n, cfg.p, cfg.trials, cfg.seed, move |restricted| {
        RtSearch::new(l).depth(restricted)
    })?;
    let s = cfg.family.len() as f64;
    let raw = s * (24.0 * cfg.p * w as f64).powi(cfg.t as i32);
    Ok(assemble_report(depths, cfg.t, raw, cfg.seed))
}

/// Monte-Carlo check that few q-random subsets hit any listed block in more
/// than k points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrimConfig {
    pub blocks: Vec<Vec<usize>>,
    pub n: usize,
    pub q: f64,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrimReport {
    pub empirical: f64,
    pub bound: f64,
    pub vacuous: bool,
    pub max_block_width: usize,
    pub trials: u64,
    pub seed: u64,
}

pub fn trim_check(cfg: &TrimConfig) -> Result<TrimReport> {
    if cfg.n == 0 || cfg.n > 4096 {
        return Err(Error::cap(format!("need 1 <= n <= 4096, n={}", cfg.n)));
    }
    if cfg.blocks.len() > 4096 {
        return Err(Error::cap(format!("too many blocks: {}", cfg.blocks.len())));
    }
    if cfg.trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let mut w = 0usize;
    for block in &cfg.blocks {
        if block.len() > 64 {
            return Err(Error::cap(format!("block width {} exceeds 64", block.len())));
        }
        if block.iter().any(|&v| v >= cfg.n) {
            return Err(Error::dimension(format!("block index out of range for n={}", cfg.n)));
        }
        w = w.max(block.len());
    }
    let hits: Vec<bool> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut rng = trial_rng(cfg.seed, i);
            let chosen = sample_subset(cfg.n, cfg.q, &mut rng)?;
            let mut mask = vec![false; cfg.n];
            for v in chosen {
                mask[v] = true;
            }
            Ok(cfg
                .blocks
                .iter()
                .any(|b| b.iter().filter(|&&v| mask[v]).count() > cfg.k))
        })
        .collect::<Result<_>>()?;
    let failures = hits.iter().filter(|&&h| h).count();
    let raw =
        cfg.blocks.len() as f64 * binom_coeff(w as u64, cfg.k as u64) * cfg.q.powi(cfg.k as i32);
    Ok(TrimReport {
        empirical: failures as f64 / cfg.trials as f64,
        bound: raw.min(1.0),
        vacuous: raw > 1.0,
        max_block_width: w,
        trials: cfg.trials,
        seed: cfg.seed,
    })
}

/// The free literals of the bottom conjunctions still wider than k; the
/// walk's whole job is to empty this list.
type AndState = Vec<Vec<Literal>>;

fn canon_state(mut state: AndState) -> AndState {
    for child in &mut state {
        child.sort_by_key(|l| (l.var, l.neg));
    }
    state.sort_by_key(|c| c.iter().map(|l| (l.var, l.neg)).collect::<Vec<_>>());
    state
}

fn state_key(state: &AndState) -> Vec<Vec<(usize, bool)>> {
    state
        .iter()
        .map(|c| c.iter().map(|l| (l.var, l.neg)).collect())
        .collect()
}

/// Conjunction children of a width-k-or-less target class, reduced under
/// rho: satisfied literals dropped, violated children removed, children at
/// width <= k removed as already done.
fn offender_state(circuit: &CircuitSpec, rho: &Restriction, k: usize) -> Result<AndState> {
    if matches!(circuit.top, TopGate::Any { .. }) {
        return Err(Error::spec("the sampler needs a sym or thr top gate"));
    }
    if rho.len() != circuit.n {
        return Err(Error::dimension(format!(
            "restriction length {} does not match n={}",
            rho.len(),
            circuit.n
        )));
    }
    let mut state = Vec::new();
    'children: for child in &circuit.children {
        let lits = match child {
            Child::And(lits) => lits,
            _ => {
                return Err(Error::spec(
                    "the sampler needs conjunction children",
                ))
            }
        };
        let mut by_var: HashMap<usize, bool> = HashMap::new();
        for lit in lits {
            match rho.cell(lit.var) {
                Cell::Star => match by_var.insert(lit.var, lit.neg) {
                    None => {}
                    Some(prev) if prev == lit.neg => {}
                    Some(_) => continue 'children,
                },
                fixed => {
                    let bit = fixed == Cell::One;
                    if bit == lit.neg {
                        continue 'children;
                    }
                }
            }
        }
        if by_var.len() > k {
            state.push(
                by_var
                    .into_iter()
                    .map(|(var, neg)| Literal { var, neg })
                    .collect(),
            );
        }
    }
    Ok(canon_state(state))
}

fn apply_branch(state: &AndState, var: usize, bit: bool, k: usize) -> AndState {
    let mut next = Vec::with_capacity(state.len());
    for child in state {
        match child.iter().position(|l| l.var == var) {
            None => next.push(child.clone()),
            Some(pos) => {
                let lit = &child[pos];
                if bit != lit.neg {
                    if child.len() - 1 > k {
                        let mut shrunk = child.clone();
                        shrunk.remove(pos);
                        next.push(shrunk);
                    }
                } else {
                    // literal violated, conjunction collapses to constant 0
                }
            }
        }
    }
    canon_state(next)
}

fn struct_rt_depth(
    state: &AndState,
    k: usize,
    memo: &mut HashMap<Vec<Vec<(usize, bool)>>, usize>,
) -> usize {
    if state.is_empty() {
        return 0;
    }
    let key = state_key(state);
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let vars: BTreeSet<usize> = state.iter().flatten().map(|l| l.var).collect();
    let mut best = usize::MAX;
    for &v in &vars {
        let d0 = struct_rt_depth(&apply_branch(state, v, false, k), k, memo);
        if 1 + d0 >= best {
            continue;
        }
        let d1 = struct_rt_depth(&apply_branch(state, v, true, k), k, memo);
        if 1 + d0.max(d1) < best {
            best = 1 + d0.max(d1);
        }
        if best == 1 {
            break;
        }
    }
    memo.insert(key, best);
    best
}

/// Lowest-index variable whose branch realizes the minimal tree depth.
fn struct_best_branch(
    state: &AndState,
    k: usize,
    memo: &mut HashMap<Vec<Vec<(usize, bool)>>, usize>,
) -> Option<usize> {
    if state.is_empty() {
        return None;
    }
    let vars: BTreeSet<usize> = state.iter().flatten().map(|l| l.var).collect();
    let mut best = usize::MAX;
    let mut best_var = None;
    for &v in &vars {
        let d0 = struct_rt_depth(&apply_branch(state, v, false, k), k, memo);
        if 1 + d0 >= best {
            continue;
        }
        let d1 = struct_rt_depth(&apply_branch(state, v, true, k), k, memo);
        if 1 + d0.max(d1) < best {
            best = 1 + d0.max(d1);
            best_var = Some(v);
        }
    }
    best_var
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FairSampleDiag {
    /// Minimal common k-partial restriction tree depth at the walk's start.
    pub tree_depth: usize,
    /// Variables fixed by the walk.
    pub steps: usize,
    /// Variables fixed by the final trim draw.
    pub trimmed: usize,
    /// Trim patterns rejected before one was accepted.
    pub retries: u64,
    /// Whether the tree depth stayed within the configured budget.
    pub collapsed_to_width_k: bool,
}

/// Three-step fair sampler: a p-random restriction, then a uniform
/// root-to-leaf walk down the deterministic minimal common k-partial
/// restriction tree of the restricted circuit, then an independent
/// q-random trim whose variables are fixed uniformly. Every fixed
/// coordinate receives a fresh unbiased bit, so completing the sampled
/// restriction uniformly recovers the uniform distribution.
pub fn fair_pipeline_sample(
    circuit: &CircuitSpec,
    k: usize,
    p: f64,
    q: f64,
    t_cap: Option<usize>,
    rng: &mut Rng,
) -> Result<(Restriction, FairSampleDiag)> {
    fair_pipeline_sample_where(circuit, k, p, q, t_cap, rng, |_| true, 1)
}

/// As [`fair_pipeline_sample`], but the trim pattern (the set of variables
/// to be fixed, before any values are drawn) must satisfy `accept`;
/// rejected patterns are redrawn up to `budget` times. Conditioning on the
/// pattern alone keeps the distribution fair.
#[allow(clippy::too_many_arguments)]
pub fn fair_pipeline_sample_where(
    circuit: &CircuitSpec,
    k: usize,
    p: f64,
    q: f64,
    t_cap: Option<usize>,
    rng: &mut Rng,
    accept: impl Fn(&[usize]) -> bool,
    budget: u64,
) -> Result<(Restriction, FairSampleDiag)> {
    use rand::Rng as _;
    if circuit.n > PIPELINE_MAX_VARS {
        return Err(Error::cap(format!(
            "the sampler needs n <= {PIPELINE_MAX_VARS}, n={}",
            circuit.n
        )));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param(format!("q must be in [0,1], got {q}")));
    }
    if budget == 0 {
        return Err(Error::param("retry budget must be positive"));
    }
    circuit.validate()?;

    let mut rho = sample_rp(circuit.n, p, rng)?;
    let mut state = offender_state(circuit, &rho, k)?;
    let mut memo = HashMap::new();
    let tree_depth = struct_rt_depth(&state, k, &mut memo);

    let mut steps = 0;
    while let Some(v) = struct_best_branch(&state, k, &mut memo) {
        let bit = rng.random_bool(0.5);
        rho.set_cell(v, Cell::from_bool(bit));
        state = apply_branch(&state, v, bit, k);
        steps += 1;
    }

    let free = rho.star_positions();
    let mut retries = 0;
    let trim_set = loop {
        let picked: Vec<usize> = free
            .iter()
            .copied()
            .filter(|_| rng.random_bool(q))
            .collect();
        if accept(&picked) {
            break picked;
        }
        retries += 1;
        if retries >= budget {
            return Err(Error::construction(format!(
                "no acceptable trim pattern within {budget} draws"
            )));
        }
    };
    let trimmed = trim_set.len();
    for v in trim_set {
        rho.set_cell(v, Cell::from_bool(rng.random_bool(0.5)));
    }

    let diag = FairSampleDiag {
        tree_depth,
        steps,
        trimmed,
        retries,
        collapsed_to_width_k: t_cap.map_or(true, |t| tree_depth <= t),
    };
    Ok((rho, diag))
}
