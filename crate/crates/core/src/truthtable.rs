//! Packed truth tables for Boolean functions on up to [`MAX_VARS`] variables.
//!
//! Bit `x` of the table is the value of the function on the input whose
//! binary encoding is `x`, with variable `i` living in bit `i` of the index
//! (variable 0 is the least significant bit).

use crate::error::{Error, Result};
use crate::restriction::Restriction;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Hard cap on table arity; 2^28 bits is 32 MiB.
pub const MAX_VARS: usize = 28;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

fn words_for(n: usize) -> usize {
    if n >= 6 {
        1 << (n - 6)
    } else {
        1
    }
}

impl TruthTable {
    fn check_arity(n: usize) -> Result<()> {
        if n > MAX_VARS {
            return Err(Error::cap(format!("table arity {n} exceeds {MAX_VARS}")));
        }
        Ok(())
    }

    pub fn new_constant(n: usize, value: bool) -> Result<Self> {
        Self::check_arity(n)?;
        let fill = if value { u64::MAX } else { 0 };
        let mut t = TruthTable {
            n,
            words: vec![fill; words_for(n)],
        };
        t.mask_tail();
        Ok(t)
    }

    /// Builds the table by evaluating `f` on every input index.
    pub fn from_fn(n: usize, mut f: impl FnMut(u64) -> bool) -> Result<Self> {
        Self::check_arity(n)?;
        let mut t = TruthTable {
            n,
            words: vec![0; words_for(n)],
        };
        for x in 0..t.len() {
            if f(x) {
                t.set(x, true);
            }
        }
        Ok(t)
    }

    pub fn from_bits(n: usize, bits: &[bool]) -> Result<Self> {
        Self::check_arity(n)?;
        if bits.len() != 1usize << n {
            return Err(Error::dimension(format!(
                "expected {} table bits, got {}",
                1usize << n,
                bits.len()
            )));
        }
        Self::from_fn(n, |x| bits[x as usize])
    }

    /// Parity of all `n` inputs.
    pub fn parity(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| x.count_ones() % 2 == 1)
    }

    /// The literal `x_var` (or its negation).
    pub fn literal(n: usize, var: usize, negated: bool) -> Result<Self> {
        if var >= n {
            return Err(Error::dimension(format!("literal var {var} out of range for n={n}")));
        }
        Self::from_fn(n, |x| ((x >> var) & 1 == 1) != negated)
    }

    pub fn random(n: usize, rng: &mut crate::rng::Rng) -> Result<Self> {
        use rand::Rng as _;
        Self::check_arity(n)?;
        let mut t = TruthTable {
            n,
            words: (0..words_for(n)).map(|_| rng.random()).collect(),
        };
        t.mask_tail();
        Ok(t)
    }

    fn mask_tail(&mut self) {
        if self.n < 6 {
            self.words[0] &= (1u64 << (1 << self.n)) - 1;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of table entries, `2^n`.
    pub fn len(&self) -> u64 {
        1u64 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, x: u64) -> bool {
        debug_assert!(x < self.len());
        (self.words[(x >> 6) as usize] >> (x & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u64, value: bool) {
        debug_assert!(x < self.len());
        let w = &mut self.words[(x >> 6) as usize];
        if value {
            *w |= 1u64 << (x & 63);
        } else {
            *w &= !(1u64 << (x & 63));
        }
    }

    /// Value on input index `x`, with a range check.
    pub fn eval(&self, x: u64) -> Result<bool> {
        if x >= self.len() {
            return Err(Error::dimension(format!(
                "input index {x} out of range for n={}",
                self.n
            )));
        }
        Ok(self.get(x))
    }

    /// Value on an explicit assignment, one bool per variable.
    pub fn eval_bits(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.n {
            return Err(Error::dimension(format!(
                "expected {} input bits, got {}",
                self.n,
                bits.len()
            )));
        }
        let mut x = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                x |= 1 << i;
            }
        }
        Ok(self.get(x))
    }

    /// Number of inputs mapped to 1.
    pub fn weight(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_constant(&self) -> Option<bool> {
        let w = self.weight();
        if w == 0 {
            Some(false)
        } else if w == self.len() {
            Some(true)
        } else {
            None
        }
    }

    /// True when the value of the function depends on `var`.
    pub fn depends_on(&self, var: usize) -> bool {
        debug_assert!(var < self.n);
        let bit = 1u64 << var;
        for x in 0..self.len() {
            if x & bit == 0 && self.get(x) != self.get(x | bit) {
                return true;
            }
        }
        false
    }

    /// Variables the function actually depends on, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.depends_on(v)).collect()
    }

    /// Restricts the function: fixed positions take their value, and the
    /// result is a table over the star positions, renumbered in increasing
    /// order of original index.
    pub fn restrict(&self, rho: &Restriction) -> Result<TruthTable> {
        if rho.len() != self.n {
            return Err(Error::dimension(format!(
                "restriction length {} does not match arity {}",
                rho.len(),
                self.n
            )));
        }
        let stars = rho.star_positions();
        let base = rho.fixed_bits_index();
        let mut out = TruthTable {
            n: stars.len(),
            words: vec![0; words_for(stars.len())],
        };
        for y in 0..out.len() {
            let mut x = base;
            for (j, &pos) in stars.iter().enumerate() {
                if (y >> j) & 1 == 1 {
                    x |= 1 << pos;
                }
            }
            if self.get(x) {
                out.set(y, true);
            }
        }
        Ok(out)
    }

    /// Cofactor on `var = value`, a table over the remaining `n-1` variables.
    pub fn cofactor(&self, var: usize, value: bool) -> TruthTable {
        debug_assert!(var < self.n);
        let mut out = TruthTable {
            n: self.n - 1,
            words: vec![0; words_for(self.n - 1)],
        };
        let low_mask = (1u64 << var) - 1;
        for y in 0..out.len() {
            let mut x = (y & low_mask) | ((y & !low_mask) << 1);
            if value {
                x |= 1 << var;
            }
            if self.get(x) {
                out.set(y, true);
            }
        }
        out
    }

    /// Keeps only the listed variables (which must cover the support),
    /// renumbered in the given ascending order.
    pub fn project_to(&self, vars: &[usize]) -> TruthTable {
        let mut out = TruthTable {
            n: vars.len(),
            words: vec![0; words_for(vars.len())],
        };
        for y in 0..out.len() {
            let mut x = 0u64;
            for (j, &v) in vars.iter().enumerate() {
                if (y >> j) & 1 == 1 {
                    x |= 1 << v;
                }
            }
            if self.get(x) {
                out.set(y, true);
            }
        }
        out
    }

    /// Fraction of inputs where the two tables agree.
    pub fn agreement(&self, other: &TruthTable) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::dimension(format!(
                "cannot compare arity {} with arity {}",
                self.n, other.n
            )));
        }
        let mut differ = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            differ += (a ^ b).count_ones() as u64;
        }
        Ok(1.0 - differ as f64 / self.len() as f64)
    }

    /// Hex encoding of the table bits: entry 0 is the least significant bit
    /// of the first byte, bytes in ascending entry order.
    pub fn to_hex(&self) -> String {
        let nbytes = (self.len() as usize).div_ceil(8);
        let mut s = String::with_capacity(nbytes * 2);
        for i in 0..nbytes {
            let byte = (self.words[i / 8] >> (8 * (i % 8))) as u8;
            s.push_str(&format!("{byte:02x}"));
        }
        s
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        Self::check_arity(n)?;
        let nbytes = (1usize << n).div_ceil(8);
        if hex.len() != nbytes * 2 {
            return Err(Error::parse(format!(
                "expected {} hex digits for n={n}, got {}",
                nbytes * 2,
                hex.len()
            )));
        }
        let mut t = TruthTable {
            n,
            words: vec![0; words_for(n)],
        };
        for i in 0..nbytes {
            let byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                .map_err(|e| Error::parse(format!("bad hex byte: {e}")))?;
            t.words[i / 8] |= (byte as u64) << (8 * (i % 8));
        }
        t.mask_tail();
        if n < 3 && t.words[0] >> (1 << n) != 0 {
            return Err(Error::parse("hex encodes bits beyond table length"));
        }
        Ok(t)
    }
}

impl std::fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.n <= 6 {
            write!(f, "TruthTable(n={}, {})", self.n, self.to_hex())
        } else {
            write!(f, "TruthTable(n={}, weight={})", self.n, self.weight())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    n: usize,
    hex: String,
}

impl Serialize for TruthTable {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            n: self.n,
            hex: self.to_hex(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for TruthTable {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = TableRepr::deserialize(de)?;
        TruthTable::from_hex(repr.n, &repr.hex).map_err(D::Error::custom)
    }
}
