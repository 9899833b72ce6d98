//! Number-on-forehead simulation for SYM-over-AND circuits: each of the
//! k+1 players sees every input block except its own forehead, gates are
//! assigned to players that see all their variables, and the players
//! broadcast fixed-width satisfied-gate counts.

use crate::circuit::{Child, CircuitSpec, TopGate};
use crate::error::{Error, Result};
use crate::hardfn::GipParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exhaustive correlation scans enumerate all 2^n inputs.
pub const SCAN_MAX_VARS: usize = 20;

/// Partition of the n input positions into foreheads, one block per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NofPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl NofPartition {
    /// Blocks must be nonempty, disjoint, and cover 0..n exactly, where n
    /// is the total index count.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::spec("a partition needs at least one block"));
        }
        let mut blocks: Vec<Vec<usize>> = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::spec("partition blocks must be nonempty"));
            }
            block.sort_unstable();
        }
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        let n = all.len();
        if all.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(Error::spec(
                "partition blocks must cover 0..n without repeats",
            ));
        }
        Ok(NofPartition { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_players(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, player: usize) -> &[usize] {
        &self.blocks[player]
    }

    /// One line per block, indices space-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            let line: Vec<String> = block.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let block: Vec<usize> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| Error::parse(format!("bad index {tok:?}")))
                })
                .collect::<Result<_>>()?;
            blocks.push(block);
        }
        NofPartition::new(blocks)
    }
}

/// Row blocks of the m-by-(k+1) inner product layout: block i holds the
/// variables of conjunction i.
pub fn gip_rows(m: usize, k_plus_1: usize) -> Result<NofPartition> {
    let params = GipParams::new(m, k_plus_1)?;
    let blocks = (0..params.m)
        .map(|i| (i * k_plus_1..(i + 1) * k_plus_1).collect())
        .collect();
    NofPartition::new(blocks)
}

/// Column blocks of the same layout: block j holds position j of every
/// conjunction, the classic forehead assignment under which each
/// conjunction touches every block.
pub fn gip_columns(m: usize, k_plus_1: usize) -> Result<NofPartition> {
    let params = GipParams::new(m, k_plus_1)?;
    let blocks = (0..k_plus_1)
        .map(|j| (0..params.m).map(|i| i * k_plus_1 + j).collect())
        .collect();
    NofPartition::new(blocks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub player: usize,
    /// Broadcast bits, most significant first.
    pub bits: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
    pub total_bits: usize,
    pub output: bool,
}

fn gate_vars(child: &Child) -> Result<Vec<usize>> {
    match child {
        Child::And(lits) => {
            let mut vars: Vec<usize> = lits.iter().map(|l| l.var).collect();
            vars.sort_unstable();
            vars.dedup();
            Ok(vars)
        }
        _ => Err(Error::spec("the protocol needs conjunction children")),
    }
}

/// For each gate, the lowest player whose forehead misses all the gate's
/// variables, so that player can evaluate the gate single-handedly.
pub fn assign_gates(circuit: &CircuitSpec, partition: &NofPartition) -> Result<Vec<usize>> {
    circuit.validate()?;
    if !matches!(circuit.top, TopGate::Sym { .. }) {
        return Err(Error::spec("the protocol needs a sym top gate"));
    }
    if partition.n() != circuit.n {
        return Err(Error::dimension(format!(
            "partition covers {} positions, circuit has {}",
            partition.n(),
            circuit.n
        )));
    }
    let mut assignment = Vec::with_capacity(circuit.fanin());
    for (g, child) in circuit.children.iter().enumerate() {
        let vars = gate_vars(child)?;
        let player = (0..partition.num_players())
            .find(|&p| vars.iter().all(|v| !partition.block(p).contains(v)));
        match player {
            Some(p) => assignment.push(p),
            None => {
                return Err(Error::width(format!(
                    "gate {g} touches every block ({} variables, {} blocks)",
                    vars.len(),
                    partition.num_players()
                )));
            }
        }
    }
    Ok(assignment)
}

/// Bits needed to broadcast a count in 0..=s.
fn count_width(s: usize) -> usize {
    if s == 0 {
        0
    } else {
        (usize::BITS - s.leading_zeros()) as usize
    }
}

fn to_bits(value: usize, width: usize) -> String {
    (0..width)
        .rev()
        .map(|i| if (value >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// One protocol run: every player broadcasts, in fixed width, how many of
/// its assigned gates the input satisfies; the symmetric predicate of the
/// summed count is the output. Total communication is
/// num_players * ceil(log2(s+1)) bits.
pub fn run_hg_protocol(
    circuit: &CircuitSpec,
    partition: &NofPartition,
    x: u64,
) -> Result<Transcript> {
    let assignment = assign_gates(circuit, partition)?;
    if circuit.n < 64 && x >= 1u64 << circuit.n {
        return Err(Error::dimension(format!(
            "input index {x} out of range for n={}",
            circuit.n
        )));
    }
    let predicate = match &circuit.top {
        TopGate::Sym { predicate } => predicate,
        _ => unreachable!("assign_gates enforces a sym top"),
    };
    let width = count_width(circuit.fanin());
    let mut counts = vec![0usize; partition.num_players()];
    for (child, &player) in circuit.children.iter().zip(&assignment) {
        let satisfied = match child {
            Child::And(lits) => lits
                .iter()
                .all(|l| ((x >> l.var) & 1 == 1) != l.neg),
            _ => unreachable!("assign_gates enforces conjunctions"),
        };
        if satisfied {
            counts[player] += 1;
        }
    }
    let messages: Vec<Message> = counts
        .iter()
        .enumerate()
        .map(|(player, &count)| Message { player, bits: to_bits(count, width) })
        .collect();
    let total_bits = messages.iter().map(|m| m.bits.len()).sum();
    let total: usize = counts.iter().sum();
    Ok(Transcript { messages, total_bits, output: predicate[total] })
}

/// Protocol for an ANY top: run the count protocol once per nested
/// circuit and feed the collected outputs to the top table. Communication
/// is the sum of the per-run costs.
pub fn run_any_protocol(
    circuit: &CircuitSpec,
    partition: &NofPartition,
    x: u64,
) -> Result<Transcript> {
    circuit.validate()?;
    let table = match &circuit.top {
        TopGate::Any { table } => table,
        _ => return Err(Error::spec("expected an any top; use the plain protocol")),
    };
    let mut messages = Vec::new();
    let mut idx = 0u64;
    for (i, child) in circuit.children.iter().enumerate() {
        let sub = match child {
            Child::Sub(sub) => sub,
            _ => return Err(Error::spec("an any top needs nested circuits")),
        };
        let transcript = run_hg_protocol(sub, partition, x)?;
        messages.extend(transcript.messages);
        if transcript.output {
            idx |= 1 << i;
        }
    }
    let total_bits = messages.iter().map(|m| m.bits.len()).sum();
    Ok(Transcript { messages, total_bits, output: table.get(idx) })
}

/// Communication budget under which the inner-product correlation bound
/// stays meaningful: (1/10) (m / 4^{k+1} - log2(1/gamma)).
pub fn bns_budget(m: usize, k_plus_1: usize, gamma_comm: f64) -> Result<f64> {
    GipParams::new(m, k_plus_1)?;
    if !(0.0 < gamma_comm && gamma_comm < 1.0) {
        return Err(Error::param(format!(
            "gamma must lie in (0,1), got {gamma_comm}"
        )));
    }
    Ok((m as f64 / 4f64.powi(k_plus_1 as i32) - (1.0 / gamma_comm).log2()) / 10.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub agreement: f64,
    /// Agreement minus one half.
    pub correlation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GipCorrelationReport {
    pub m: usize,
    pub k_plus_1: usize,
    /// The budget is quoted at this advantage.
    pub gamma_comm: f64,
    pub bns_budget: f64,
    pub entries: Vec<CorrelationEntry>,
}

/// Exact agreement of each circuit with the m-by-(k+1) inner product, over
/// all inputs. The report carries the communication budget at advantage
/// 1/2 for reference; nothing here certifies the circuits stay under it.
pub fn gip_correlation_scan(
    m: usize,
    k_plus_1: usize,
    circuits: &[CircuitSpec],
) -> Result<GipCorrelationReport> {
    let params = GipParams::new(m, k_plus_1)?;
    let n = params.input_len();
    if n > SCAN_MAX_VARS {
        return Err(Error::cap(format!(
            "scan needs m(k+1) <= {SCAN_MAX_VARS}, got {n}"
        )));
    }
    let gip_table = params.to_table()?;
    let gamma_comm = 0.5;
    let entries: Vec<CorrelationEntry> = circuits
        .par_iter()
        .map(|c| -> Result<CorrelationEntry> {
            if c.n != n {
                return Err(Error::dimension(format!(
                    "circuit arity {} does not match m(k+1) = {n}",
                    c.n
                )));
            }
            let agreement = c.truth_table()?.agreement(&gip_table)?;
            Ok(CorrelationEntry { agreement, correlation: agreement - 0.5 })
        })
        .collect::<Result<_>>()?;
    Ok(GipCorrelationReport {
        m,
        k_plus_1,
        gamma_comm,
        bns_budget: bns_budget(m, k_plus_1, gamma_comm)?,
        entries,
    })
}
