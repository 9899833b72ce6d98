//! The hard functions used as generator seeds and correlation targets:
//! generalized inner product (GIP) and its parity-composed variant, plus
//! parameter selection and analysis of what survives a restriction.
//!
//! Variable layout for the composed function is row-major:
//! `x[(i*(k+1) + j)*r + t]` is bit t of parity block j in row i.

use crate::error::{Error, Result};
use crate::restriction::{Cell, Restriction};
use crate::truthtable::TruthTable;
use serde::{Deserialize, Serialize};

/// XOR over m rows of the AND of k+1 bits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GipParams {
    pub m: usize,
    pub k_plus_1: usize,
}

impl GipParams {
    pub fn new(m: usize, k_plus_1: usize) -> Result<Self> {
        if m == 0 || k_plus_1 == 0 {
            return Err(Error::param(format!(
                "gip needs m >= 1 and k+1 >= 1, got m={m}, k+1={k_plus_1}"
            )));
        }
        Ok(GipParams { m, k_plus_1 })
    }

    pub fn input_len(&self) -> usize {
        self.m * self.k_plus_1
    }

    pub fn eval_index(&self, x: u64) -> Result<bool> {
        let n = self.input_len();
        if n > 63 {
            return Err(Error::cap(format!("index evaluation needs n <= 63, n={n}")));
        }
        if x >= 1u64 << n {
            return Err(Error::dimension(format!("input index {x} out of range for n={n}")));
        }
        Ok(self.eval_raw(x))
    }

    #[inline]
    pub(crate) fn eval_raw(&self, x: u64) -> bool {
        let mut acc = false;
        for i in 0..self.m {
            let row = (x >> (i * self.k_plus_1)) & ((1u64 << self.k_plus_1) - 1);
            acc ^= row == (1u64 << self.k_plus_1) - 1;
        }
        acc
    }

    pub fn eval_bits(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.input_len() {
            return Err(Error::dimension(format!(
                "expected {} bits, got {}",
                self.input_len(),
                bits.len()
            )));
        }
        let mut acc = false;
        for i in 0..self.m {
            acc ^= (0..self.k_plus_1).all(|j| bits[i * self.k_plus_1 + j]);
        }
        Ok(acc)
    }

    pub fn to_table(&self) -> Result<TruthTable> {
        TruthTable::from_fn(self.input_len(), |x| self.eval_raw(x))
    }
}

/// XOR over m rows of the AND over k+1 blocks of r-bit parities.
/// Serialized in configs as the string `"m k r"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RwParams {
    pub m: usize,
    pub k: usize,
    pub r: usize,
}

impl RwParams {
    pub fn new(m: usize, k: usize, r: usize) -> Result<Self> {
        if m == 0 || r == 0 {
            return Err(Error::param(format!(
                "layout needs m >= 1 and r >= 1, got m={m}, r={r}"
            )));
        }
        Ok(RwParams { m, k, r })
    }

    pub fn n(&self) -> usize {
        self.m * (self.k + 1) * self.r
    }

    pub fn blocks_per_row(&self) -> usize {
        self.k + 1
    }

    pub fn var_index(&self, row: usize, block: usize, t: usize) -> usize {
        (row * (self.k + 1) + block) * self.r + t
    }

    pub fn eval_index(&self, x: u64) -> Result<bool> {
        let n = self.n();
        if n > 63 {
            return Err(Error::cap(format!("index evaluation needs n <= 63, n={n}")));
        }
        if x >= 1u64 << n {
            return Err(Error::dimension(format!("input index {x} out of range for n={n}")));
        }
        Ok(self.eval_raw(x))
    }

    #[inline]
    pub(crate) fn eval_raw(&self, x: u64) -> bool {
        let block_mask = (1u64 << self.r) - 1;
        let mut acc = false;
        for i in 0..self.m {
            let mut and = true;
            for j in 0..self.k + 1 {
                let shift = (i * (self.k + 1) + j) * self.r;
                and &= ((x >> shift) & block_mask).count_ones() % 2 == 1;
            }
            acc ^= and;
        }
        acc
    }

    pub fn eval_bits(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.n() {
            return Err(Error::dimension(format!(
                "expected {} bits, got {}",
                self.n(),
                bits.len()
            )));
        }
        let mut acc = false;
        for i in 0..self.m {
            let mut and = true;
            for j in 0..self.k + 1 {
                let mut parity = false;
                for t in 0..self.r {
                    parity ^= bits[self.var_index(i, j, t)];
                }
                and &= parity;
            }
            acc ^= and;
        }
        Ok(acc)
    }

    pub fn to_table(&self) -> Result<TruthTable> {
        TruthTable::from_fn(self.n(), |x| self.eval_raw(x))
    }

    /// Free-variable count of every parity block under `rho`, row-major.
    pub fn block_free_counts(&self, rho: &Restriction) -> Result<Vec<Vec<usize>>> {
        if rho.len() != self.n() {
            return Err(Error::dimension(format!(
                "restriction length {} does not match n={}",
                rho.len(),
                self.n()
            )));
        }
        Ok((0..self.m)
            .map(|i| {
                (0..self.k + 1)
                    .map(|j| {
                        (0..self.r)
                            .filter(|&t| rho.is_star(self.var_index(i, j, t)))
                            .count()
                    })
                    .collect()
            })
            .collect())
    }
}

impl std::fmt::Display for RwParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {}", self.m, self.k, self.r)
    }
}

impl std::str::FromStr for RwParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([' ', ',']).filter(|p| !p.is_empty()).collect();
        if parts.len() != 3 {
            return Err(Error::parse(format!("expected `m k r`, got {s:?}")));
        }
        let nums: std::result::Result<Vec<usize>, _> =
            parts.iter().map(|p| p.parse()).collect();
        let nums = nums.map_err(|e| Error::parse(format!("bad layout triple {s:?}: {e}")))?;
        RwParams::new(nums[0], nums[1], nums[2])
    }
}

impl Serialize for RwParams {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RwParams {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let s = String::deserialize(de)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Picks a square layout for a given input budget: m = r = floor(sqrt(n/(k+1))).
/// Without an override, k is solved from k = max(1, round(0.0005 log2 m)) by
/// iteration, which lands on k = 1 at any feasible n.
pub fn rw_params_from_n(n: usize, k_override: Option<usize>) -> Result<RwParams> {
    if n < 4 {
        return Err(Error::param(format!("n={n} too small for a layout")));
    }
    let layout_for = |k: usize| -> Result<RwParams> {
        let m = (n / (k + 1)).isqrt();
        if m == 0 {
            return Err(Error::param(format!("n={n} too small for k={k}")));
        }
        RwParams::new(m, k, m)
    };
    if let Some(k) = k_override {
        return layout_for(k);
    }
    let mut k = 1usize;
    for _ in 0..32 {
        let params = layout_for(k)?;
        let next = ((0.0005 * (params.m as f64).log2()).round() as usize).max(1);
        if next == k {
            return Ok(params);
        }
        k = next;
    }
    Err(Error::construction("layout iteration did not stabilize"))
}

/// What a restriction leaves of the composed function. `trim` is a further
/// canonical restriction on the surviving variables: it kills the dead rows,
/// pares every live block down to exactly `copy_r` free variables, and
/// leaves a function identical to the (copy_m, copy_k, copy_r) layout up to
/// the folded constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    pub alive_rows: Vec<usize>,
    pub killed_rows: Vec<usize>,
    pub min_free_per_parity: usize,
    pub copy_m: usize,
    pub copy_k: usize,
    pub copy_r: usize,
    /// XOR of the dead rows' contributions once trimmed.
    pub folded_constant: bool,
    /// Per alive row and block: the parity of the bits `rho` fixed to 1.
    pub block_constants: Vec<Vec<bool>>,
    /// Over the star domain of the analyzed restriction.
    pub trim: Restriction,
    /// Per alive row and block: the star-rank positions the copy keeps.
    pub copy_var_positions: Vec<Vec<Vec<usize>>>,
}

impl StructureReport {
    /// The copy's truth table over the trim survivors, built from the folded
    /// constants alone.
    pub fn normal_form_table(&self) -> Result<TruthTable> {
        let stars = self.trim.star_positions();
        let mut trim_rank = std::collections::HashMap::new();
        for (j, &pos) in stars.iter().enumerate() {
            trim_rank.insert(pos, j);
        }
        TruthTable::from_fn(stars.len(), |y| {
            let mut acc = self.folded_constant;
            for (a, blocks) in self.copy_var_positions.iter().enumerate() {
                let mut and = true;
                for (j, positions) in blocks.iter().enumerate() {
                    let mut parity = self.block_constants[a][j];
                    for pos in positions {
                        if (y >> trim_rank[pos]) & 1 == 1 {
                            parity = !parity;
                        }
                    }
                    and &= parity;
                }
                acc ^= and;
            }
            acc
        })
    }
}

/// Analyzes what `rho` leaves of the composed function: which rows stay
/// alive (every parity block keeps a free variable), the uniform block size
/// `copy_r` a canonical trim pares them to, and the constants the fixed
/// bits fold into the normal form.
pub fn structure_under_restriction(params: &RwParams, rho: &Restriction) -> Result<StructureReport> {
    if rho.len() != params.n() {
        return Err(Error::dimension(format!(
            "restriction length {} does not match n={}",
            rho.len(),
            params.n()
        )));
    }
    let mut rank = vec![usize::MAX; params.n()];
    for (j, pos) in rho.star_positions().into_iter().enumerate() {
        rank[pos] = j;
    }
    let blocks = params.k + 1;
    let mut free_ranks: Vec<Vec<Vec<usize>>> = Vec::with_capacity(params.m);
    let mut fixed_xor: Vec<Vec<bool>> = Vec::with_capacity(params.m);
    for i in 0..params.m {
        let mut row_free = Vec::with_capacity(blocks);
        let mut row_xor = Vec::with_capacity(blocks);
        for j in 0..blocks {
            let mut frees = Vec::new();
            let mut xor = false;
            for t in 0..params.r {
                let v = params.var_index(i, j, t);
                match rho.cell(v) {
                    Cell::Star => frees.push(rank[v]),
                    Cell::One => xor = !xor,
                    Cell::Zero => {}
                }
            }
            row_free.push(frees);
            row_xor.push(xor);
        }
        free_ranks.push(row_free);
        fixed_xor.push(row_xor);
    }

    let alive_rows: Vec<usize> = (0..params.m)
        .filter(|&i| free_ranks[i].iter().all(|f| !f.is_empty()))
        .collect();
    let killed_rows: Vec<usize> = (0..params.m)
        .filter(|i| !alive_rows.contains(i))
        .collect();
    let copy_r = alive_rows
        .iter()
        .flat_map(|&i| free_ranks[i].iter().map(|f| f.len()))
        .min()
        .unwrap_or(0);

    let mut trim = Restriction::all_star(rho.star_count());
    let mut folded_constant = false;
    for &i in &killed_rows {
        // setting all its free variables to 0 makes the row contribute the
        // AND of its blocks' fixed parities
        for frees in &free_ranks[i] {
            for &pos in frees {
                trim.set_cell(pos, Cell::Zero);
            }
        }
        folded_constant ^= fixed_xor[i].iter().all(|&b| b);
    }
    let mut block_constants = Vec::with_capacity(alive_rows.len());
    let mut copy_var_positions = Vec::with_capacity(alive_rows.len());
    for &i in &alive_rows {
        let mut row_constants = Vec::with_capacity(blocks);
        let mut row_positions = Vec::with_capacity(blocks);
        for j in 0..blocks {
            row_constants.push(fixed_xor[i][j]);
            let frees = &free_ranks[i][j];
            for &pos in &frees[copy_r..] {
                trim.set_cell(pos, Cell::Zero);
            }
            row_positions.push(frees[..copy_r].to_vec());
        }
        block_constants.push(row_constants);
        copy_var_positions.push(row_positions);
    }

    Ok(StructureReport {
        copy_m: alive_rows.len(),
        copy_k: params.k,
        copy_r,
        alive_rows,
        killed_rows,
        min_free_per_parity: copy_r,
        folded_constant,
        block_constants,
        trim,
        copy_var_positions,
    })
}

/// Whether the restriction kept enough structure: at least `target_m` rows
/// alive, each parity block with at least one free variable.
pub fn gip_copy_check(report: &StructureReport, target_m: usize) -> bool {
    report.copy_m >= target_m && report.copy_r >= 1
}

/// Union bound over the parity blocks of the lower-tail Chernoff estimate
/// `Pr[Bin(r,p) < pr/2] <= exp(-(1/2)^2 * pr / 3) = exp(-pr/12)`; at
/// p = 1/4 this is `m(k+1) exp(-r/48)`.
pub fn block_retention_bound(params: &RwParams, p: f64) -> f64 {
    (params.m * (params.k + 1)) as f64 * (-p * params.r as f64 / 12.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::sample_rp;
    use crate::rng::rng_from_seed;

    #[test]
    fn gip_basics() {
        let g = GipParams::new(1, 2).unwrap();
        assert!(!g.eval_index(0).unwrap());
        assert!(g.eval_index(0b11).unwrap());
        assert!(g.eval_index(16).is_err());
        assert!(GipParams::new(0, 2).is_err());
    }

    #[test]
    fn gip_matches_definitional_loop() {
        let g = GipParams::new(4, 3).unwrap();
        for x in 0..(1u64 << 12) {
            let mut expect = false;
            for i in 0..4 {
                let mut and = true;
                for j in 0..3 {
                    and &= (x >> (i * 3 + j)) & 1 == 1;
                }
                expect ^= and;
            }
            assert_eq!(g.eval_index(x).unwrap(), expect, "x={x}");
            assert_eq!(g.eval_raw(x), g.to_table().unwrap().get(x));
        }
    }

    #[test]
    fn rw_degenerate_parity() {
        let p = RwParams::new(1, 0, 2).unwrap();
        // bits (1, 0) have odd parity
        assert!(p.eval_bits(&[true, false]).unwrap());
        assert!(!p.eval_index(0).unwrap());
        for r in 1..=16 {
            let p = RwParams::new(1, 0, r).unwrap();
            let parity = TruthTable::parity(r).unwrap();
            assert_eq!(p.to_table().unwrap(), parity, "r={r}");
        }
    }

    #[test]
    fn rw_with_unit_blocks_is_gip() {
        for (m, k) in [(2, 1), (3, 1), (2, 3), (4, 2)] {
            let rw = RwParams::new(m, k, 1).unwrap();
            let gip = GipParams::new(m, k + 1).unwrap();
            assert!(rw.n() <= 16);
            assert_eq!(rw.to_table().unwrap(), gip.to_table().unwrap(), "m={m} k={k}");
        }
    }

    #[test]
    fn rw_matches_triple_loop() {
        let p = RwParams::new(3, 1, 2).unwrap();
        assert_eq!(p.n(), 12);
        for x in 0..(1u64 << 12) {
            let mut expect = false;
            for i in 0..3 {
                let mut and = true;
                for j in 0..2 {
                    let mut parity = false;
                    for t in 0..2 {
                        parity ^= (x >> ((i * 2 + j) * 2 + t)) & 1 == 1;
                    }
                    and &= parity;
                }
                expect ^= and;
            }
            assert_eq!(p.eval_index(x).unwrap(), expect, "x={x}");
        }
    }

    #[test]
    fn layout_string_round_trip() {
        let p: RwParams = "2 1 3".parse().unwrap();
        assert_eq!(p, RwParams::new(2, 1, 3).unwrap());
        assert_eq!(p.to_string(), "2 1 3");
        let q: RwParams = "2,1,3".parse().unwrap();
        assert_eq!(p, q);
        assert!("2 1".parse::<RwParams>().is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"2 1 3\"");
        assert_eq!(serde_json::from_str::<RwParams>(&json).unwrap(), p);
    }

    #[test]
    fn params_from_n_examples() {
        let p = rw_params_from_n(12, Some(1)).unwrap();
        assert_eq!((p.m, p.k, p.r), (2, 1, 2));
        assert!(p.n() <= 12);

        let p = rw_params_from_n(4, Some(1)).unwrap();
        assert_eq!((p.m, p.k, p.r), (1, 1, 1));

        let p = rw_params_from_n(1_000_000, None).unwrap();
        assert_eq!(p.k, 1);
        assert_eq!(p.m, (1_000_000usize / 2).isqrt());
        assert_eq!(p.m, p.r);

        assert!(rw_params_from_n(3, None).is_err());
        assert!(rw_params_from_n(4, Some(7)).is_err());
    }

    #[test]
    fn structure_all_star() {
        let params = RwParams::new(2, 1, 2).unwrap();
        let report =
            structure_under_restriction(&params, &Restriction::all_star(8)).unwrap();
        assert_eq!(report.alive_rows, vec![0, 1]);
        assert_eq!(report.copy_m, 2);
        assert_eq!(report.copy_r, 2);
        assert!(!report.folded_constant);
        assert!(report.block_constants.iter().flatten().all(|&b| !b));
        assert_eq!(report.trim.star_count(), 8);
        assert!(gip_copy_check(&report, 2));
    }

    #[test]
    fn structure_all_fixed() {
        let params = RwParams::new(2, 1, 2).unwrap();
        let mut rng = rng_from_seed(40);
        for _ in 0..20 {
            let rho = sample_rp(8, 0.0, &mut rng).unwrap();
            let report = structure_under_restriction(&params, &rho).unwrap();
            assert_eq!(report.copy_m, 0);
            assert_eq!(report.copy_r, 0);
            assert!(!gip_copy_check(&report, 1));
            // the fully fixed function is the constant the report folded
            let table = params.to_table().unwrap().restrict(&rho).unwrap();
            assert_eq!(table.n(), 0);
            assert_eq!(table.get(0), report.folded_constant);
        }
    }

    #[test]
    fn structure_one_fixed_per_block() {
        let params = RwParams::new(2, 1, 2).unwrap();
        // fix variable t=0 of every block to 0
        let mut rho = Restriction::all_star(8);
        for i in 0..2 {
            for j in 0..2 {
                rho.set_cell(params.var_index(i, j, 0), Cell::Zero);
            }
        }
        let report = structure_under_restriction(&params, &rho).unwrap();
        assert_eq!(report.copy_m, 2);
        assert_eq!(report.copy_r, 1);
        assert!(report.block_constants.iter().flatten().all(|&b| !b));
        let copy = report.normal_form_table().unwrap();
        let direct = params
            .to_table()
            .unwrap()
            .restrict(&rho)
            .unwrap()
            .restrict(&report.trim)
            .unwrap();
        assert_eq!(copy, direct);
    }

    #[test]
    fn structure_soundness_random() {
        let mut rng = rng_from_seed(41);
        for params in [
            RwParams::new(2, 1, 2).unwrap(),
            RwParams::new(3, 1, 2).unwrap(),
            RwParams::new(2, 1, 4).unwrap(),
            RwParams::new(1, 2, 3).unwrap(),
        ] {
            let table = params.to_table().unwrap();
            for _ in 0..30 {
                let rho = sample_rp(params.n(), 0.4, &mut rng).unwrap();
                let report = structure_under_restriction(&params, &rho).unwrap();
                assert_eq!(
                    report.trim.star_count(),
                    report.copy_m * (params.k + 1) * report.copy_r
                );
                let trimmed = table.restrict(&rho).unwrap().restrict(&report.trim).unwrap();
                assert_eq!(trimmed, report.normal_form_table().unwrap());
            }
        }
    }

    #[test]
    fn copy_check_matches_recount() {
        let params = RwParams::new(2, 1, 4).unwrap();
        let mut rng = rng_from_seed(42);
        for _ in 0..1000 {
            let rho = sample_rp(16, 0.5, &mut rng).unwrap();
            let report = structure_under_restriction(&params, &rho).unwrap();
            let counts = params.block_free_counts(&rho).unwrap();
            let alive = counts
                .iter()
                .filter(|row| row.iter().all(|&c| c > 0))
                .count();
            assert_eq!(gip_copy_check(&report, 1), alive >= 1);
            assert_eq!(gip_copy_check(&report, 2), alive >= 2);
            assert_eq!(report.copy_m, alive);
        }
    }

    #[test]
    fn retention_bound_honored_empirically() {
        let params = RwParams::new(2, 1, 64).unwrap();
        let p = 0.25;
        let bound = block_retention_bound(&params, p).min(1.0);
        let trials = 2000u64;
        let mut rng = rng_from_seed(43);
        let mut failures = 0u64;
        let threshold = (p * params.r as f64 / 2.0).floor() as usize;
        for _ in 0..trials {
            let rho = sample_rp(params.n(), p, &mut rng).unwrap();
            let counts = params.block_free_counts(&rho).unwrap();
            if counts.iter().flatten().any(|&c| c < threshold) {
                failures += 1;
            }
        }
        let empirical = failures as f64 / trials as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(
            empirical <= bound + 3.0 * sigma + 1e-9,
            "empirical {empirical} vs bound {bound}"
        );
    }
}
