//! Circuits with a SYM, THR, or ANY top gate over shallow children:
//! ANDs and ORs of literals, decision trees, and (under ANY) nested
//! SYM/THR circuits.
//!
//! The JSON file format mirrors the struct layout:
//! `{"n": 6, "top": {"kind": "sym", "predicate": [...]}, "children": [...]}`.

use crate::error::{Error, Result};
use crate::restriction::{Cell, Restriction};
use crate::rng::Rng;
use crate::truthtable::{TruthTable, MAX_VARS};
use rand::seq::SliceRandom as _;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// ANY tops are stored as truth tables; 2^20 bits is the ceiling.
pub const ANY_MAX_FANIN: usize = 20;
/// Shape caps for sampled circuits.
pub const SAMPLE_MAX_N: usize = 24;
pub const SAMPLE_MAX_GATES: usize = 1 << 16;
/// THR weights stay within this magnitude.
pub const THR_MAX_WEIGHT: i64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    #[serde(default)]
    pub neg: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Literal {
        Literal { var, neg: false }
    }

    #[inline]
    fn satisfied(&self, x: u64) -> bool {
        ((x >> self.var) & 1 == 1) != self.neg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopGate {
    /// Accept-vector over the count of true children; length fan-in + 1.
    Sym { predicate: Vec<bool> },
    /// 1 iff the weighted sum of child bits reaches the threshold.
    Thr { weights: Vec<i64>, threshold: i64 },
    /// Arbitrary function of the child bits, child i in table bit i.
    Any { table: TruthTable },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionTree {
    Leaf(bool),
    Branch {
        var: usize,
        zero: Box<DecisionTree>,
        one: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Branch { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Branch { zero, one, .. } => 1 + zero.node_count() + one.node_count(),
        }
    }

    fn eval(&self, x: u64) -> bool {
        match self {
            DecisionTree::Leaf(b) => *b,
            DecisionTree::Branch { var, zero, one } => {
                if (x >> var) & 1 == 1 {
                    one.eval(x)
                } else {
                    zero.eval(x)
                }
            }
        }
    }

    fn validate(&self, n: usize, path: &mut Vec<usize>) -> Result<()> {
        match self {
            DecisionTree::Leaf(_) => Ok(()),
            DecisionTree::Branch { var, zero, one } => {
                if *var >= n {
                    return Err(Error::spec(format!("tree var {var} out of range for n={n}")));
                }
                if path.contains(var) {
                    return Err(Error::spec(format!("tree repeats var {var} on a path")));
                }
                path.push(*var);
                zero.validate(n, path)?;
                one.validate(n, path)?;
                path.pop();
                Ok(())
            }
        }
    }

    /// Substitutes fixed variables and renumbers the surviving ones by
    /// their star rank.
    fn restrict(&self, rho: &Restriction, rank: &[usize]) -> DecisionTree {
        match self {
            DecisionTree::Leaf(b) => DecisionTree::Leaf(*b),
            DecisionTree::Branch { var, zero, one } => match rho.cell(*var) {
                Cell::Zero => zero.restrict(rho, rank),
                Cell::One => one.restrict(rho, rank),
                Cell::Star => DecisionTree::Branch {
                    var: rank[*var],
                    zero: Box::new(zero.restrict(rho, rank)),
                    one: Box::new(one.restrict(rho, rank)),
                },
            },
        }
    }

    /// The AND-of-literals terms of the paths ending in a 1-leaf. Any input
    /// satisfies at most one of them since the paths are branch-disjoint.
    pub fn one_path_terms(&self) -> Vec<Vec<Literal>> {
        fn walk(t: &DecisionTree, path: &mut Vec<Literal>, out: &mut Vec<Vec<Literal>>) {
            match t {
                DecisionTree::Leaf(true) => out.push(path.clone()),
                DecisionTree::Leaf(false) => {}
                DecisionTree::Branch { var, zero, one } => {
                    path.push(Literal {
                        var: *var,
                        neg: true,
                    });
                    walk(zero, path, out);
                    path.pop();
                    path.push(Literal {
                        var: *var,
                        neg: false,
                    });
                    walk(one, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Random tree of exactly the given depth on distinct variables.
    pub fn random(n: usize, depth: usize, rng: &mut Rng) -> Result<DecisionTree> {
        if depth > n {
            return Err(Error::param(format!("tree depth {depth} exceeds n={n}")));
        }
        fn build(avail: &mut Vec<usize>, depth: usize, rng: &mut Rng) -> DecisionTree {
            if depth == 0 {
                return DecisionTree::Leaf(rng.random());
            }
            let i = rng.random_range(0..avail.len());
            let var = avail.swap_remove(i);
            let zero = build(avail, depth - 1, rng);
            let one = build(avail, depth - 1, rng);
            avail.push(var);
            DecisionTree::Branch {
                var,
                zero: Box::new(zero),
                one: Box::new(one),
            }
        }
        let mut avail: Vec<usize> = (0..n).collect();
        Ok(build(&mut avail, depth, rng))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Child {
    And(Vec<Literal>),
    Or(Vec<Literal>),
    Tree(DecisionTree),
    Sub(CircuitSpec),
}

impl Child {
    fn eval(&self, x: u64) -> bool {
        match self {
            Child::And(lits) => lits.iter().all(|l| l.satisfied(x)),
            // OR evaluated through its negated-AND normal form
            Child::Or(lits) => !lits.iter().all(|l| !l.satisfied(x)),
            Child::Tree(t) => t.eval(x),
            Child::Sub(c) => c.eval_raw(x),
        }
    }

    /// Literal width for AND/OR children.
    pub fn width(&self) -> Option<usize> {
        match self {
            Child::And(lits) | Child::Or(lits) => Some(lits.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n: usize,
    pub top: TopGate,
    pub children: Vec<Child>,
}

/// Outcome of restricting one child under a SYM/THR top.
enum RestrictedChild {
    Constant(bool),
    Kept(Child),
}

impl CircuitSpec {
    pub fn fanin(&self) -> usize {
        self.children.len()
    }

    /// Structural well-formedness. Everything else in the crate assumes a
    /// validated spec.
    pub fn validate(&self) -> Result<()> {
        self.validate_inner(true)
    }

    fn validate_inner(&self, allow_any: bool) -> Result<()> {
        if self.n > MAX_VARS {
            return Err(Error::cap(format!("circuit arity {} exceeds {MAX_VARS}", self.n)));
        }
        match &self.top {
            TopGate::Sym { predicate } => {
                if predicate.len() != self.fanin() + 1 {
                    return Err(Error::spec(format!(
                        "sym predicate length {} != fan-in {} + 1",
                        predicate.len(),
                        self.fanin()
                    )));
                }
            }
            TopGate::Thr { weights, threshold } => {
                if weights.len() != self.fanin() {
                    return Err(Error::spec(format!(
                        "thr weight count {} != fan-in {}",
                        weights.len(),
                        self.fanin()
                    )));
                }
                for w in weights.iter().chain(std::iter::once(threshold)) {
                    if w.abs() > THR_MAX_WEIGHT {
                        return Err(Error::spec(format!("thr weight {w} out of bounds")));
                    }
                }
            }
            TopGate::Any { table } => {
                if !allow_any {
                    return Err(Error::spec("nested circuit must have sym or thr top"));
                }
                if self.fanin() > ANY_MAX_FANIN {
                    return Err(Error::cap(format!(
                        "any fan-in {} exceeds {ANY_MAX_FANIN}",
                        self.fanin()
                    )));
                }
                if table.n() != self.fanin() {
                    return Err(Error::spec(format!(
                        "any table arity {} != fan-in {}",
                        table.n(),
                        self.fanin()
                    )));
                }
            }
        }
        for child in &self.children {
            match child {
                Child::And(lits) | Child::Or(lits) => {
                    for l in lits {
                        if l.var >= self.n {
                            return Err(Error::spec(format!(
                                "literal var {} out of range for n={}",
                                l.var, self.n
                            )));
                        }
                    }
                }
                Child::Tree(t) => t.validate(self.n, &mut Vec::new())?,
                Child::Sub(c) => {
                    if !matches!(self.top, TopGate::Any { .. }) {
                        return Err(Error::spec(
                            "nested circuits are only allowed under an any top",
                        ));
                    }
                    if c.n != self.n {
                        return Err(Error::spec(format!(
                            "nested circuit arity {} != outer arity {}",
                            c.n, self.n
                        )));
                    }
                    c.validate_inner(false)?;
                }
            }
        }
        Ok(())
    }

    /// Value on input index `x`, variable i in bit i.
    pub fn eval(&self, x: u64) -> Result<bool> {
        if self.n < 64 && x >= 1u64 << self.n {
            return Err(Error::dimension(format!(
                "input index {x} out of range for n={}",
                self.n
            )));
        }
        Ok(self.eval_raw(x))
    }

    /// Evaluation without the range check; assumes a validated spec.
    #[inline]
    pub(crate) fn eval_raw(&self, x: u64) -> bool {
        match &self.top {
            TopGate::Sym { predicate } => {
                let count = self.children.iter().filter(|c| c.eval(x)).count();
                predicate[count]
            }
            TopGate::Thr { weights, threshold } => {
                let mut sum: i128 = 0;
                for (c, w) in self.children.iter().zip(weights) {
                    if c.eval(x) {
                        sum += *w as i128;
                    }
                }
                sum >= *threshold as i128
            }
            TopGate::Any { table } => {
                let mut idx = 0u64;
                for (i, c) in self.children.iter().enumerate() {
                    if c.eval(x) {
                        idx |= 1 << i;
                    }
                }
                table.get(idx)
            }
        }
    }

    pub fn truth_table(&self) -> Result<TruthTable> {
        self.validate()?;
        TruthTable::from_fn(self.n, |x| self.eval_raw(x))
    }

    /// Gate count including literals. Trees count their nodes; nested
    /// circuits count recursively.
    pub fn size(&self) -> usize {
        let mut total = 1;
        for child in &self.children {
            total += match child {
                Child::And(lits) | Child::Or(lits) => 1 + lits.len(),
                Child::Tree(t) => t.node_count(),
                Child::Sub(c) => c.size(),
            };
        }
        total
    }

    /// Layer count: the top plus its deepest child.
    pub fn depth(&self) -> usize {
        let child_depth = self
            .children
            .iter()
            .map(|c| match c {
                Child::And(_) | Child::Or(_) | Child::Tree(_) => 1,
                Child::Sub(sub) => sub.depth(),
            })
            .max()
            .unwrap_or(0);
        1 + child_depth
    }

    /// Maximum AND/OR literal width over all children, nested included.
    pub fn max_width(&self) -> usize {
        self.children
            .iter()
            .map(|c| match c {
                Child::And(lits) | Child::Or(lits) => lits.len(),
                Child::Tree(t) => t.depth(),
                Child::Sub(sub) => sub.max_width(),
            })
            .max()
            .unwrap_or(0)
    }

    fn restrict_child(child: &Child, rho: &Restriction, rank: &[usize]) -> RestrictedChild {
        match child {
            Child::And(lits) => {
                let mut kept = Vec::new();
                for l in lits {
                    match rho.cell(l.var) {
                        Cell::Star => kept.push(Literal {
                            var: rank[l.var],
                            neg: l.neg,
                        }),
                        c => {
                            if c.fixed_value().unwrap() == l.neg {
                                return RestrictedChild::Constant(false);
                            }
                        }
                    }
                }
                if kept.is_empty() {
                    RestrictedChild::Constant(true)
                } else {
                    RestrictedChild::Kept(Child::And(kept))
                }
            }
            Child::Or(lits) => {
                let mut kept = Vec::new();
                for l in lits {
                    match rho.cell(l.var) {
                        Cell::Star => kept.push(Literal {
                            var: rank[l.var],
                            neg: l.neg,
                        }),
                        c => {
                            if c.fixed_value().unwrap() != l.neg {
                                return RestrictedChild::Constant(true);
                            }
                        }
                    }
                }
                if kept.is_empty() {
                    RestrictedChild::Constant(false)
                } else {
                    RestrictedChild::Kept(Child::Or(kept))
                }
            }
            Child::Tree(t) => match t.restrict(rho, rank) {
                DecisionTree::Leaf(b) => RestrictedChild::Constant(b),
                tree => RestrictedChild::Kept(Child::Tree(tree)),
            },
            Child::Sub(_) => unreachable!("sub children are restricted in place"),
        }
    }

    /// Restricts structurally: fixed literals are substituted, children
    /// forced to a constant are folded into the top gate, and the result is
    /// a circuit over the stars of `rho` (renumbered ascending) computing
    /// exactly the restricted function.
    pub fn restrict(&self, rho: &Restriction) -> Result<CircuitSpec> {
        if rho.len() != self.n {
            return Err(Error::dimension(format!(
                "restriction length {} does not match arity {}",
                rho.len(),
                self.n
            )));
        }
        let mut rank = vec![usize::MAX; self.n];
        for (j, pos) in rho.star_positions().into_iter().enumerate() {
            rank[pos] = j;
        }
        let n = rho.star_count();

        if let TopGate::Any { table } = &self.top {
            // fan-in into the table is positional, so every child survives
            let children = self
                .children
                .iter()
                .map(|child| match child {
                    Child::Sub(c) => Ok(Child::Sub(c.restrict(rho)?)),
                    other => Ok(match Self::restrict_child(other, rho, &rank) {
                        RestrictedChild::Kept(c) => c,
                        RestrictedChild::Constant(true) => Child::And(Vec::new()),
                        RestrictedChild::Constant(false) => Child::Or(Vec::new()),
                    }),
                })
                .collect::<Result<Vec<Child>>>()?;
            return Ok(CircuitSpec {
                n,
                top: TopGate::Any {
                    table: table.clone(),
                },
                children,
            });
        }

        let mut kept = Vec::new();
        let mut kept_weights: Vec<i64> = Vec::new();
        let mut forced_true = 0usize;
        let mut forced_weight: i128 = 0;
        for (i, child) in self.children.iter().enumerate() {
            match Self::restrict_child(child, rho, &rank) {
                RestrictedChild::Constant(true) => {
                    forced_true += 1;
                    if let TopGate::Thr { weights, .. } = &self.top {
                        forced_weight += weights[i] as i128;
                    }
                }
                RestrictedChild::Constant(false) => {}
                RestrictedChild::Kept(c) => {
                    kept.push(c);
                    if let TopGate::Thr { weights, .. } = &self.top {
                        kept_weights.push(weights[i]);
                    }
                }
            }
        }
        let top = match &self.top {
            TopGate::Sym { predicate } => TopGate::Sym {
                predicate: (0..=kept.len())
                    .map(|c| predicate[c + forced_true])
                    .collect(),
            },
            TopGate::Thr { threshold, .. } => {
                // beyond the total weight magnitude the gate is constant, so
                // clamping there preserves the function
                let sat = kept_weights
                    .iter()
                    .map(|w| w.unsigned_abs() as i128)
                    .sum::<i128>()
                    + 1;
                let t = (*threshold as i128 - forced_weight).clamp(-sat, sat);
                if t.abs() > THR_MAX_WEIGHT as i128 {
                    return Err(Error::spec(
                        "restricted threshold exceeds the weight bound",
                    ));
                }
                TopGate::Thr {
                    weights: kept_weights,
                    threshold: t as i64,
                }
            }
            TopGate::Any { .. } => unreachable!(),
        };
        Ok(CircuitSpec {
            n,
            top,
            children: kept,
        })
    }

    /// Replaces decision-tree children by the AND terms of their 1-paths
    /// and re-derives the top so the function is unchanged. Path terms of
    /// one tree are pairwise disjoint, so the count of satisfied terms
    /// equals the count of trees evaluating to 1.
    pub fn fold_dt_layer(&self) -> Result<CircuitSpec> {
        if matches!(self.top, TopGate::Any { .. }) {
            return Err(Error::spec("fold requires a sym or thr top"));
        }
        let mut terms: Vec<Child> = Vec::new();
        let mut term_tree: Vec<usize> = Vec::new();
        for (i, child) in self.children.iter().enumerate() {
            let Child::Tree(t) = child else {
                return Err(Error::spec(format!("child {i} is not a decision tree")));
            };
            for term in t.one_path_terms() {
                terms.push(Child::And(term));
                term_tree.push(i);
            }
        }
        let num_trees = self.children.len();
        let top = match &self.top {
            TopGate::Sym { predicate } => TopGate::Sym {
                predicate: (0..=terms.len())
                    .map(|c| predicate[c.min(num_trees)])
                    .collect(),
            },
            TopGate::Thr { weights, threshold } => TopGate::Thr {
                weights: term_tree.iter().map(|&i| weights[i]).collect(),
                threshold: *threshold,
            },
            TopGate::Any { .. } => unreachable!(),
        };
        Ok(CircuitSpec {
            n: self.n,
            top,
            children: terms,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<CircuitSpec> {
        let spec: CircuitSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopKind {
    Sym,
    Thr,
    Any,
}

/// Shape of a random circuit: top kind, child count, AND width, and layer
/// count (2 for a flat top over ANDs, 3 for ANY over nested SYM circuits).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassDescriptor {
    pub top: TopKind,
    pub gates: usize,
    pub width: usize,
    pub layers: usize,
}

fn random_and(n: usize, width: usize, rng: &mut Rng) -> Child {
    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(rng);
    Child::And(
        pool[..width]
            .iter()
            .map(|&var| Literal {
                var,
                neg: rng.random(),
            })
            .collect(),
    )
}

fn random_sym_over_ands(n: usize, gates: usize, width: usize, rng: &mut Rng) -> CircuitSpec {
    CircuitSpec {
        n,
        top: TopGate::Sym {
            predicate: (0..=gates).map(|_| rng.random()).collect(),
        },
        children: (0..gates).map(|_| random_and(n, width, rng)).collect(),
    }
}

/// Random circuit of the given shape; reproducible from the rng state.
pub fn sample_circuit(desc: &ClassDescriptor, n: usize, rng: &mut Rng) -> Result<CircuitSpec> {
    if n > SAMPLE_MAX_N {
        return Err(Error::cap(format!("sample arity {n} exceeds {SAMPLE_MAX_N}")));
    }
    if desc.gates > SAMPLE_MAX_GATES {
        return Err(Error::cap(format!(
            "gate count {} exceeds {SAMPLE_MAX_GATES}",
            desc.gates
        )));
    }
    if desc.width == 0 || desc.width > n {
        return Err(Error::param(format!("width {} must lie in 1..={n}", desc.width)));
    }
    let spec = match (desc.top, desc.layers) {
        (TopKind::Sym, 2) => random_sym_over_ands(n, desc.gates, desc.width, rng),
        (TopKind::Thr, 2) => CircuitSpec {
            n,
            top: TopGate::Thr {
                weights: (0..desc.gates).map(|_| rng.random_range(-8..=8)).collect(),
                threshold: rng.random_range(-8..=8),
            },
            children: (0..desc.gates)
                .map(|_| random_and(n, desc.width, rng))
                .collect(),
        },
        (TopKind::Any, 3) => {
            if desc.gates > ANY_MAX_FANIN {
                return Err(Error::cap(format!(
                    "any fan-in {} exceeds {ANY_MAX_FANIN}",
                    desc.gates
                )));
            }
            let table = TruthTable::random(desc.gates, rng)?;
            CircuitSpec {
                n,
                top: TopGate::Any { table },
                children: (0..desc.gates)
                    .map(|_| Child::Sub(random_sym_over_ands(n, 3, desc.width, rng)))
                    .collect(),
            }
        }
        (top, layers) => {
            return Err(Error::param(format!(
                "unsupported shape: top {top:?} with {layers} layers"
            )));
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Random width-`width` DNF with `terms` terms, as an OR-predicate SYM top
/// over AND children.
pub fn sample_dnf(n: usize, terms: usize, width: usize, rng: &mut Rng) -> Result<CircuitSpec> {
    if width == 0 || width > n {
        return Err(Error::param(format!("width {width} must lie in 1..={n}")));
    }
    let mut predicate = vec![true; terms + 1];
    predicate[0] = false;
    Ok(CircuitSpec {
        n,
        top: TopGate::Sym { predicate },
        children: (0..terms).map(|_| random_and(n, width, rng)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::sample_rp;
    use crate::rng::rng_from_seed;

    fn parity_over(children: Vec<Child>, n: usize) -> CircuitSpec {
        let predicate = (0..=children.len()).map(|c| c % 2 == 1).collect();
        CircuitSpec {
            n,
            top: TopGate::Sym { predicate },
            children,
        }
    }

    #[test]
    fn sym_parity_of_two_literals() {
        let c = parity_over(
            vec![
                Child::And(vec![Literal::pos(0)]),
                Child::And(vec![Literal::pos(1)]),
            ],
            2,
        );
        c.validate().unwrap();
        // x0=1, x1=0 has odd count
        assert!(c.eval(0b01).unwrap());
        assert!(!c.eval(0b11).unwrap());
        assert!(c.eval(4).is_err());
    }

    #[test]
    fn thr_and_as_threshold() {
        let c = CircuitSpec {
            n: 2,
            top: TopGate::Thr {
                weights: vec![1, 1],
                threshold: 2,
            },
            children: vec![
                Child::And(vec![Literal::pos(0)]),
                Child::And(vec![Literal::pos(1)]),
            ],
        };
        c.validate().unwrap();
        for x in 0..4u64 {
            assert_eq!(c.eval(x).unwrap(), x == 3);
        }
    }

    #[test]
    fn eval_matches_definitional_loop() {
        let mut rng = rng_from_seed(20);
        let desc = ClassDescriptor {
            top: TopKind::Sym,
            gates: 6,
            width: 3,
            layers: 2,
        };
        let c = sample_circuit(&desc, 8, &mut rng).unwrap();
        let TopGate::Sym { predicate } = &c.top else {
            panic!()
        };
        for x in 0..256u64 {
            let mut count = 0usize;
            for child in &c.children {
                let Child::And(lits) = child else { panic!() };
                let mut sat = true;
                for l in lits {
                    let bit = (x >> l.var) & 1 == 1;
                    sat &= if l.neg { !bit } else { bit };
                }
                if sat {
                    count += 1;
                }
            }
            assert_eq!(c.eval(x).unwrap(), predicate[count], "x={x}");
        }
    }

    #[test]
    fn or_child_matches_disjunction() {
        let c = CircuitSpec {
            n: 3,
            top: TopGate::Sym {
                predicate: vec![false, true],
            },
            children: vec![Child::Or(vec![
                Literal { var: 0, neg: false },
                Literal { var: 2, neg: true },
            ])],
        };
        c.validate().unwrap();
        for x in 0..8u64 {
            let expect = (x & 1 == 1) || ((x >> 2) & 1 == 0);
            assert_eq!(c.eval(x).unwrap(), expect);
        }
    }

    #[test]
    fn any_top_indexes_table() {
        let mut rng = rng_from_seed(21);
        let table = TruthTable::random(2, &mut rng).unwrap();
        let c = CircuitSpec {
            n: 4,
            top: TopGate::Any {
                table: table.clone(),
            },
            children: vec![
                Child::And(vec![Literal::pos(0)]),
                Child::And(vec![Literal::pos(3)]),
            ],
        };
        c.validate().unwrap();
        for x in 0..16u64 {
            let idx = (x & 1) | (((x >> 3) & 1) << 1);
            assert_eq!(c.eval(x).unwrap(), table.get(idx));
        }
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let bad_pred = CircuitSpec {
            n: 2,
            top: TopGate::Sym {
                predicate: vec![true],
            },
            children: vec![Child::And(vec![Literal::pos(0)])],
        };
        assert!(matches!(bad_pred.validate(), Err(Error::Spec(_))));

        let bad_var = parity_over(vec![Child::And(vec![Literal::pos(5)])], 2);
        assert!(bad_var.validate().is_err());

        let sub_under_sym = parity_over(
            vec![Child::Sub(parity_over(vec![], 2))],
            2,
        );
        assert!(sub_under_sym.validate().is_err());

        let repeat_tree = CircuitSpec {
            n: 2,
            top: TopGate::Sym {
                predicate: vec![false, true],
            },
            children: vec![Child::Tree(DecisionTree::Branch {
                var: 0,
                zero: Box::new(DecisionTree::Leaf(false)),
                one: Box::new(DecisionTree::Branch {
                    var: 0,
                    zero: Box::new(DecisionTree::Leaf(false)),
                    one: Box::new(DecisionTree::Leaf(true)),
                }),
            })],
        };
        assert!(repeat_tree.validate().is_err());
    }

    #[test]
    fn restrict_all_star_is_identity() {
        let mut rng = rng_from_seed(22);
        let desc = ClassDescriptor {
            top: TopKind::Sym,
            gates: 4,
            width: 2,
            layers: 2,
        };
        let c = sample_circuit(&desc, 6, &mut rng).unwrap();
        let r = c.restrict(&Restriction::all_star(6)).unwrap();
        assert_eq!(c, r);
    }

    #[test]
    fn restrict_removes_annihilated_and() {
        let c = parity_over(
            vec![Child::And(vec![Literal::pos(0), Literal::pos(1)])],
            3,
        );
        let rho = Restriction::parse("0**").unwrap();
        let r = c.restrict(&rho).unwrap();
        assert_eq!(r.fanin(), 0);
        assert_eq!(r.n, 2);
    }

    #[test]
    fn restrict_matches_table_restriction() {
        let mut rng = rng_from_seed(23);
        for trial in 0..40 {
            let desc = ClassDescriptor {
                top: if trial % 2 == 0 { TopKind::Sym } else { TopKind::Thr },
                gates: 5,
                width: 4,
                layers: 2,
            };
            let c = sample_circuit(&desc, 10, &mut rng).unwrap();
            let rho = sample_rp(10, 0.4, &mut rng).unwrap();
            let r = c.restrict(&rho).unwrap();
            r.validate().unwrap();
            assert_eq!(
                r.truth_table().unwrap(),
                c.truth_table().unwrap().restrict(&rho).unwrap(),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn restrict_any_keeps_arity() {
        let mut rng = rng_from_seed(24);
        for _ in 0..20 {
            let desc = ClassDescriptor {
                top: TopKind::Any,
                gates: 3,
                width: 2,
                layers: 3,
            };
            let c = sample_circuit(&desc, 8, &mut rng).unwrap();
            let rho = sample_rp(8, 0.5, &mut rng).unwrap();
            let r = c.restrict(&rho).unwrap();
            r.validate().unwrap();
            assert_eq!(r.fanin(), c.fanin());
            assert_eq!(
                r.truth_table().unwrap(),
                c.truth_table().unwrap().restrict(&rho).unwrap()
            );
        }
    }

    #[test]
    fn restrict_trees_and_mixed_children() {
        let mut rng = rng_from_seed(25);
        for _ in 0..20 {
            let c = CircuitSpec {
                n: 8,
                top: TopGate::Sym {
                    predicate: (0..=3).map(|_| rng.random()).collect(),
                },
                children: vec![
                    Child::Tree(DecisionTree::random(8, 3, &mut rng).unwrap()),
                    Child::Or(vec![
                        Literal { var: 1, neg: true },
                        Literal { var: 6, neg: false },
                    ]),
                    Child::And(vec![Literal::pos(2), Literal::pos(4)]),
                ],
            };
            c.validate().unwrap();
            let rho = sample_rp(8, 0.5, &mut rng).unwrap();
            let r = c.restrict(&rho).unwrap();
            r.validate().unwrap();
            assert_eq!(
                r.truth_table().unwrap(),
                c.truth_table().unwrap().restrict(&rho).unwrap()
            );
        }
    }

    #[test]
    fn fold_single_leaf_and_single_branch() {
        let leaf = CircuitSpec {
            n: 2,
            top: TopGate::Sym {
                predicate: vec![false, true],
            },
            children: vec![Child::Tree(DecisionTree::Leaf(true))],
        };
        let folded = leaf.fold_dt_layer().unwrap();
        assert_eq!(folded.children, vec![Child::And(Vec::new())]);

        let branch = CircuitSpec {
            n: 2,
            top: TopGate::Sym {
                predicate: vec![false, true],
            },
            children: vec![Child::Tree(DecisionTree::Branch {
                var: 0,
                zero: Box::new(DecisionTree::Leaf(false)),
                one: Box::new(DecisionTree::Leaf(true)),
            })],
        };
        let folded = branch.fold_dt_layer().unwrap();
        assert_eq!(folded.children, vec![Child::And(vec![Literal::pos(0)])]);
    }

    #[test]
    fn fold_preserves_function_and_size_bound() {
        let mut rng = rng_from_seed(26);
        for trial in 0..20 {
            let trees: Vec<Child> = (0..3)
                .map(|_| Child::Tree(DecisionTree::random(9, 3, &mut rng).unwrap()))
                .collect();
            let top = if trial % 2 == 0 {
                TopGate::Sym {
                    predicate: (0..=3).map(|_| rng.random()).collect(),
                }
            } else {
                TopGate::Thr {
                    weights: (0..3).map(|_| rng.random_range(-4..=4)).collect(),
                    threshold: rng.random_range(-4..=4),
                }
            };
            let c = CircuitSpec {
                n: 9,
                top,
                children: trees,
            };
            c.validate().unwrap();
            let folded = c.fold_dt_layer().unwrap();
            folded.validate().unwrap();
            assert!(folded.max_width() <= 3);
            assert!(folded.size() <= c.size() * c.size());
            assert_eq!(folded.truth_table().unwrap(), c.truth_table().unwrap());
        }
    }

    #[test]
    fn fold_terms_are_disjoint_per_tree() {
        let mut rng = rng_from_seed(27);
        let t = DecisionTree::random(8, 4, &mut rng).unwrap();
        let terms = t.one_path_terms();
        for x in 0..256u64 {
            let sat = terms
                .iter()
                .filter(|term| term.iter().all(|l| l.satisfied(x)))
                .count();
            assert!(sat <= 1, "x={x} satisfied {sat} terms");
            assert_eq!(sat == 1, t.eval(x));
        }
    }

    #[test]
    fn fold_rejects_non_tree_children() {
        let c = CircuitSpec {
            n: 2,
            top: TopGate::Sym {
                predicate: vec![false, true],
            },
            children: vec![Child::And(vec![Literal::pos(0)])],
        };
        assert!(matches!(c.fold_dt_layer(), Err(Error::Spec(_))));
    }

    #[test]
    fn sample_circuit_shapes_and_caps() {
        let mut rng = rng_from_seed(28);
        let lit = sample_circuit(
            &ClassDescriptor {
                top: TopKind::Sym,
                gates: 1,
                width: 1,
                layers: 2,
            },
            4,
            &mut rng,
        )
        .unwrap();
        assert_eq!(lit.fanin(), 1);

        let sym = sample_circuit(
            &ClassDescriptor {
                top: TopKind::Sym,
                gates: 4,
                width: 2,
                layers: 2,
            },
            6,
            &mut rng,
        )
        .unwrap();
        sym.validate().unwrap();
        assert_eq!(sym.max_width(), 2);

        assert!(matches!(
            sample_circuit(
                &ClassDescriptor {
                    top: TopKind::Sym,
                    gates: 2,
                    width: 2,
                    layers: 2
                },
                SAMPLE_MAX_N + 1,
                &mut rng
            ),
            Err(Error::Cap(_))
        ));
    }

    #[test]
    fn sampled_thr_circuits_evaluate_everywhere() {
        let mut rng = rng_from_seed(29);
        for _ in 0..1000 {
            let c = sample_circuit(
                &ClassDescriptor {
                    top: TopKind::Thr,
                    gates: 8,
                    width: 3,
                    layers: 2,
                },
                10,
                &mut rng,
            )
            .unwrap();
            for x in 0..1024u64 {
                let _ = c.eval(x).unwrap();
            }
        }
    }

    #[test]
    fn dnf_sampler_shape() {
        let mut rng = rng_from_seed(30);
        let d = sample_dnf(12, 8, 2, &mut rng).unwrap();
        d.validate().unwrap();
        assert_eq!(d.fanin(), 8);
        assert_eq!(d.max_width(), 2);
        // OR semantics: true iff some term satisfied
        let t = d.truth_table().unwrap();
        for x in 0..(1u64 << 12) {
            let any = d.children.iter().any(|c| {
                let Child::And(lits) = c else { panic!() };
                lits.iter().all(|l| l.satisfied(x))
            });
            assert_eq!(t.get(x), any);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = rng_from_seed(31);
        let c = sample_circuit(
            &ClassDescriptor {
                top: TopKind::Any,
                gates: 2,
                width: 2,
                layers: 3,
            },
            6,
            &mut rng,
        )
        .unwrap();
        let json = c.to_json().unwrap();
        let back = CircuitSpec::from_json(&json).unwrap();
        assert_eq!(c, back);
    }
}
