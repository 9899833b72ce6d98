//! The seed-stretching generator: a hard function applied to the seed bits
//! selected by each block of a design, plus full seed enumeration and the
//! acceptance-probability estimator built on it.

use crate::circuit::CircuitSpec;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::hardfn::{GipParams, RwParams};
use crate::poly::SparseF2Poly;
use crate::truthtable::TruthTable;

pub const ENUMERATION_MAX_SEED: usize = 24;

/// The function stretched by the generator, one value per design block.
#[derive(Debug, Clone)]
pub enum HardFunction {
    Rw(RwParams),
    Gip(GipParams),
    Parity(usize),
    Table(TruthTable),
}

impl HardFunction {
    pub fn arity(&self) -> usize {
        match self {
            HardFunction::Rw(p) => p.n(),
            HardFunction::Gip(p) => p.input_len(),
            HardFunction::Parity(r) => *r,
            HardFunction::Table(t) => t.n(),
        }
    }

    pub fn eval_bits(&self, bits: &[bool]) -> Result<bool> {
        match self {
            HardFunction::Rw(p) => p.eval_bits(bits),
            HardFunction::Gip(p) => p.eval_bits(bits),
            HardFunction::Parity(r) => {
                if bits.len() != *r {
                    return Err(Error::dimension(format!(
                        "expected {r} bits, got {}",
                        bits.len()
                    )));
                }
                Ok(bits.iter().filter(|&&b| b).count() % 2 == 1)
            }
            HardFunction::Table(t) => t.eval_bits(bits),
        }
    }

    /// Parses `rw:m,k,r`, `gip:m,j`, or `parity:r`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("hard function spec {spec:?} has no `:`")))?;
        let nums: std::result::Result<Vec<usize>, _> =
            rest.split(',').map(|w| w.trim().parse()).collect();
        let nums =
            nums.map_err(|e| Error::parse(format!("bad hard function spec {spec:?}: {e}")))?;
        match (kind, nums.as_slice()) {
            ("rw", [m, k, r]) => Ok(HardFunction::Rw(RwParams::new(*m, *k, *r)?)),
            ("gip", [m, j]) => Ok(HardFunction::Gip(GipParams::new(*m, *j)?)),
            ("parity", [r]) if *r >= 1 => Ok(HardFunction::Parity(*r)),
            _ => Err(Error::parse(format!("unrecognized hard function spec {spec:?}"))),
        }
    }
}

/// A function of the generator's output bits whose acceptance probability is
/// being estimated.
pub trait OutputTest: Sync {
    fn arity(&self) -> usize;
    fn check(&self, bits: &[bool]) -> Result<bool>;
}

impl OutputTest for TruthTable {
    fn arity(&self) -> usize {
        self.n()
    }

    fn check(&self, bits: &[bool]) -> Result<bool> {
        self.eval_bits(bits)
    }
}

impl OutputTest for SparseF2Poly {
    fn arity(&self) -> usize {
        self.n()
    }

    fn check(&self, bits: &[bool]) -> Result<bool> {
        self.eval_bits(bits)
    }
}

impl OutputTest for CircuitSpec {
    fn arity(&self) -> usize {
        self.n
    }

    fn check(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.n {
            return Err(Error::dimension(format!(
                "expected {} bits, got {}",
                self.n,
                bits.len()
            )));
        }
        if self.n > 63 {
            return Err(Error::cap(format!(
                "circuit output tests need arity <= 63, got {}",
                self.n
            )));
        }
        let mut x = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                x |= 1 << i;
            }
        }
        self.eval(x)
    }
}

/// Maps a seed of `design.universe()` bits to `output_len` bits: bit i is
/// the hard function on the seed coordinates in block i, in sorted order.
#[derive(Debug, Clone)]
pub struct NwGenerator {
    design: Design,
    hard: HardFunction,
    output_len: usize,
}

impl NwGenerator {
    pub fn new(design: Design, hard: HardFunction, output_len: usize) -> Result<Self> {
        if hard.arity() != design.block_size() {
            return Err(Error::dimension(format!(
                "hard function arity {} does not match block size {}",
                hard.arity(),
                design.block_size()
            )));
        }
        if output_len == 0 || output_len > design.num_blocks() {
            return Err(Error::dimension(format!(
                "output length {output_len} not in 1..={}",
                design.num_blocks()
            )));
        }
        Ok(NwGenerator { design, hard, output_len })
    }

    pub fn seed_len(&self) -> usize {
        self.design.universe()
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn hard(&self) -> &HardFunction {
        &self.hard
    }

    pub fn generate(&self, seed: &[bool]) -> Result<Vec<bool>> {
        if seed.len() != self.seed_len() {
            return Err(Error::dimension(format!(
                "seed has {} bits, expected {}",
                seed.len(),
                self.seed_len()
            )));
        }
        let mut out = Vec::with_capacity(self.output_len);
        let mut scratch = Vec::with_capacity(self.design.block_size());
        for block in &self.design.blocks()[..self.output_len] {
            scratch.clear();
            scratch.extend(block.iter().map(|&ix| seed[ix]));
            out.push(self.hard.eval_bits(&scratch)?);
        }
        Ok(out)
    }

    /// Seed given as an integer, bit i of the seed in bit i.
    pub fn generate_index(&self, seed: u64) -> Result<Vec<bool>> {
        let m = self.seed_len();
        if m > 63 {
            return Err(Error::cap(format!("indexed seeds need m <= 63, m={m}")));
        }
        if seed >= 1u64 << m {
            return Err(Error::dimension(format!("seed {seed} out of range for m={m}")));
        }
        let bits: Vec<bool> = (0..m).map(|i| (seed >> i) & 1 == 1).collect();
        self.generate(&bits)
    }

    /// All 2^m outputs in seed order, streaming.
    pub fn enumerate_outputs(&self) -> Result<impl Iterator<Item = Vec<bool>> + '_> {
        let m = self.seed_len();
        if m > ENUMERATION_MAX_SEED {
            return Err(Error::cap(format!(
                "enumeration needs m <= {ENUMERATION_MAX_SEED}, m={m}"
            )));
        }
        Ok((0u64..1 << m).map(move |z| {
            self.generate_index(z).expect("in-range seed")
        }))
    }

    /// Fraction of seeds whose output the test accepts, over all 2^m seeds.
    /// A test of arity below the output length reads the first bits only.
    pub fn approx_count(&self, target: &dyn OutputTest) -> Result<f64> {
        let m = self.seed_len();
        if m > ENUMERATION_MAX_SEED {
            return Err(Error::cap(format!(
                "exact counting needs m <= {ENUMERATION_MAX_SEED}, m={m}"
            )));
        }
        let arity = target.arity();
        if arity > self.output_len {
            return Err(Error::dimension(format!(
                "target arity {arity} exceeds output length {}",
                self.output_len
            )));
        }
        use rayon::prelude::*;
        let total: u64 = (0u64..1 << m)
            .into_par_iter()
            .map(|z| -> Result<u64> {
                let out = self.generate_index(z)?;
                Ok(u64::from(target.check(&out[..arity])?))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        Ok(total as f64 / (1u64 << m) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_design_for;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn bits_from_str(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn random_design(m: usize, r: usize, s: usize, rng: &mut crate::rng::Rng) -> Design {
        use rand::seq::SliceRandom as _;
        let mut pool: Vec<usize> = (0..m).collect();
        let blocks = (0..s)
            .map(|_| {
                pool.shuffle(rng);
                let mut block = pool[..r].to_vec();
                block.sort_unstable();
                block
            })
            .collect();
        Design::new(m, r, r, blocks).unwrap()
    }

    #[test]
    fn constant_hard_function() {
        let design = build_design_for(4, 3, 1).unwrap();
        let zero = TruthTable::new_constant(3, false).unwrap();
        let g = NwGenerator::new(design, HardFunction::Table(zero), 4).unwrap();
        let mut rng = rng_from_seed(50);
        for _ in 0..10 {
            let seed: Vec<bool> = (0..g.seed_len()).map(|_| rng.random()).collect();
            assert!(g.generate(&seed).unwrap().iter().all(|&b| !b));
        }
    }

    #[test]
    fn two_block_parity_example() {
        let design =
            crate::design::Design::new(4, 2, 0, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let g = NwGenerator::new(design, HardFunction::Parity(2), 2).unwrap();
        let out = g.generate(&bits_from_str("1010")).unwrap();
        assert_eq!(out, vec![true, true]);
    }

    #[test]
    fn per_block_oracle() {
        let params = RwParams::new(1, 1, 2).unwrap();
        let mut rng = rng_from_seed(51);
        let design = random_design(12, 4, 8, &mut rng);
        let g = NwGenerator::new(design.clone(), HardFunction::Rw(params), 8).unwrap();
        for _ in 0..50 {
            let seed: Vec<bool> = (0..g.seed_len()).map(|_| rng.random()).collect();
            let out = g.generate(&seed).unwrap();
            for (i, block) in design.blocks().iter().enumerate() {
                let picked: Vec<bool> = block.iter().map(|&ix| seed[ix]).collect();
                assert_eq!(out[i], params.eval_bits(&picked).unwrap(), "bit {i}");
            }
        }
    }

    #[test]
    fn projection_consistency() {
        let design = build_design_for(6, 3, 1).unwrap();
        let g = NwGenerator::new(design.clone(), HardFunction::Parity(3), 6).unwrap();
        let mut rng = rng_from_seed(52);
        for _ in 0..20 {
            let mut seed: Vec<bool> = (0..g.seed_len()).map(|_| rng.random()).collect();
            let before = g.generate(&seed).unwrap();
            for i in 0..g.output_len() {
                let block = design.block(i);
                for pos in 0..seed.len() {
                    if block.contains(&pos) {
                        continue;
                    }
                    seed[pos] = !seed[pos];
                    assert_eq!(g.generate(&seed).unwrap()[i], before[i]);
                    seed[pos] = !seed[pos];
                }
            }
        }
    }

    #[test]
    fn enumeration_single_parity_block() {
        let design = crate::design::Design::new(2, 2, 0, vec![vec![0, 1]]).unwrap();
        let g = NwGenerator::new(design, HardFunction::Parity(2), 1).unwrap();
        let outs: Vec<Vec<bool>> = g.enumerate_outputs().unwrap().collect();
        assert_eq!(
            outs,
            vec![vec![false], vec![true], vec![true], vec![false]]
        );
    }

    #[test]
    fn enumeration_counts_and_constant() {
        let design = build_design_for(4, 2, 1).unwrap();
        assert!(design.universe() <= 10);
        let one = TruthTable::new_constant(2, true).unwrap();
        let g = NwGenerator::new(design, HardFunction::Table(one), 3).unwrap();
        let outs: Vec<Vec<bool>> = g.enumerate_outputs().unwrap().collect();
        assert_eq!(outs.len(), 1 << g.seed_len());
        assert!(outs.iter().all(|o| o == &vec![true; 3]));
    }

    #[test]
    fn approx_count_trivial_targets() {
        let design = build_design_for(6, 3, 2).unwrap();
        let table = TruthTable::random(3, &mut rng_from_seed(53)).unwrap();
        let density = table.weight() as f64 / 8.0;
        let g = NwGenerator::new(design, HardFunction::Table(table), 6).unwrap();

        let always = TruthTable::new_constant(2, true).unwrap();
        assert_eq!(g.approx_count(&always).unwrap(), 1.0);

        // a single-bit projection averages the hard function itself when the
        // block's seed coordinates are uniform
        let bit0 = TruthTable::literal(1, 0, false).unwrap();
        assert!((g.approx_count(&bit0).unwrap() - density).abs() < 1e-12);
    }

    #[test]
    fn approx_count_vs_exhaustive_truth() {
        let poly = SparseF2Poly::random(8, 4, 3, &mut rng_from_seed(54)).unwrap();
        let exact = {
            let mut count = 0u64;
            for x in 0..(1u64 << 8) {
                if poly.eval(x).unwrap() {
                    count += 1;
                }
            }
            count as f64 / 256.0
        };
        let params = RwParams::new(1, 1, 2).unwrap();
        let design = random_design(16, 4, 8, &mut rng_from_seed(55));
        let g = NwGenerator::new(design, HardFunction::Rw(params), 8).unwrap();
        let estimate = g.approx_count(&poly).unwrap();
        assert!((0.0..=1.0).contains(&estimate));
        // the gap to the true density is what the experiment records; no
        // bound is promised at this scale
        assert!((estimate - exact).abs() <= 1.0);
    }

    #[test]
    fn disjoint_parity_blocks_are_unbiased() {
        let d = crate::design::build_design_polynomial(3, 1).unwrap();
        let g = NwGenerator::new(d, HardFunction::Parity(3), 3).unwrap();
        for var in 0..3 {
            for neg in [false, true] {
                let lit = TruthTable::literal(var + 1, var, neg).unwrap();
                assert_eq!(g.approx_count(&lit).unwrap(), 0.5, "var {var} neg {neg}");
            }
        }
    }

    #[test]
    fn caps_and_dimension_errors() {
        let design = crate::design::Design::new(2, 2, 0, vec![vec![0, 1]]).unwrap();
        let g = NwGenerator::new(design.clone(), HardFunction::Parity(2), 1).unwrap();
        assert!(g.generate(&[true]).is_err());
        assert!(g.generate_index(4).is_err());

        assert!(NwGenerator::new(design.clone(), HardFunction::Parity(3), 1).is_err());
        assert!(NwGenerator::new(design.clone(), HardFunction::Parity(2), 2).is_err());
        assert!(NwGenerator::new(design, HardFunction::Parity(2), 0).is_err());

        let wide = crate::design::build_design_for(2, 30, 1).unwrap();
        assert!(wide.universe() > ENUMERATION_MAX_SEED);
        let g = NwGenerator::new(wide, HardFunction::Parity(30), 2).unwrap();
        assert!(matches!(g.enumerate_outputs().err(), Some(Error::Cap(_))));
        let t = TruthTable::new_constant(1, true).unwrap();
        assert!(matches!(g.approx_count(&t).err(), Some(Error::Cap(_))));
    }

    #[test]
    fn hard_function_parsing() {
        assert!(matches!(
            HardFunction::parse("rw:2,1,3").unwrap(),
            HardFunction::Rw(p) if (p.m, p.k, p.r) == (2, 1, 3)
        ));
        assert!(matches!(
            HardFunction::parse("gip:4,3").unwrap(),
            HardFunction::Gip(p) if (p.m, p.k_plus_1) == (4, 3)
        ));
        assert!(matches!(
            HardFunction::parse("parity:5").unwrap(),
            HardFunction::Parity(5)
        ));
        assert!(HardFunction::parse("parity:0").is_err());
        assert!(HardFunction::parse("rw:2,1").is_err());
        assert!(HardFunction::parse("nope").is_err());
    }
}
