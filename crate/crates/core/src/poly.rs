//! Sparse multilinear polynomials over F2: an XOR of monomials plus a
//! constant. Size is measured by monomial count.
//!
//! Text format: a header line `# n constant`, then one line per monomial of
//! space-separated variable indices.

use crate::circuit::{Child, CircuitSpec, Literal, TopGate};
use crate::error::{Error, Result};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    vars: Vec<usize>,
}

impl Monomial {
    /// Builds a monomial from variable indices; sorted and deduplicated.
    pub fn new(mut vars: Vec<usize>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Monomial { vars }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    fn satisfied(&self, x: u64) -> bool {
        self.vars.iter().all(|&v| (x >> v) & 1 == 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseF2Poly {
    n: usize,
    monomials: Vec<Monomial>,
    constant: bool,
}

impl SparseF2Poly {
    /// Normalizing constructor: duplicate monomials cancel in pairs and
    /// empty monomials fold into the constant.
    pub fn new(n: usize, monomials: Vec<Monomial>, constant: bool) -> Result<Self> {
        let mut constant = constant;
        let mut kept: Vec<Monomial> = Vec::new();
        for m in monomials {
            if let Some(&v) = m.vars.iter().max() {
                if v >= n {
                    return Err(Error::dimension(format!(
                        "monomial variable {v} out of range for n={n}"
                    )));
                }
            }
            if m.is_empty() {
                constant = !constant;
            } else if let Some(i) = kept.iter().position(|k| *k == m) {
                kept.swap_remove(i);
            } else {
                kept.push(m);
            }
        }
        Ok(SparseF2Poly {
            n,
            monomials: kept,
            constant,
        })
    }

    pub fn zero(n: usize) -> Self {
        SparseF2Poly {
            n,
            monomials: Vec::new(),
            constant: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn constant(&self) -> bool {
        self.constant
    }

    pub fn sparsity(&self) -> usize {
        self.monomials.len()
    }

    /// Value on the input with binary encoding `x` (variable i in bit i).
    pub fn eval(&self, x: u64) -> Result<bool> {
        if self.n < 64 && x >= 1u64 << self.n {
            return Err(Error::dimension(format!(
                "input index {x} out of range for n={}",
                self.n
            )));
        }
        Ok(self.eval_raw(x))
    }

    #[inline]
    pub(crate) fn eval_raw(&self, x: u64) -> bool {
        let mut acc = self.constant;
        for m in &self.monomials {
            acc ^= m.satisfied(x);
        }
        acc
    }

    /// Value on an explicit bit vector; works at any arity.
    pub fn eval_bits(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.n {
            return Err(Error::dimension(format!(
                "expected {} bits, got {}",
                self.n,
                bits.len()
            )));
        }
        let mut acc = self.constant;
        for m in &self.monomials {
            acc ^= m.vars().iter().all(|&v| bits[v]);
        }
        Ok(acc)
    }

    /// Random polynomial with `sparsity` distinct monomials of width in
    /// `1..=max_width`.
    pub fn random(n: usize, sparsity: usize, max_width: usize, rng: &mut Rng) -> Result<Self> {
        use rand::seq::SliceRandom as _;
        use rand::Rng as _;
        if max_width == 0 || max_width > n {
            return Err(Error::param(format!(
                "max_width {max_width} must lie in 1..={n}"
            )));
        }
        let mut monomials: Vec<Monomial> = Vec::with_capacity(sparsity);
        let mut budget = 10_000usize;
        while monomials.len() < sparsity {
            if budget == 0 {
                return Err(Error::construction(
                    "could not draw enough distinct monomials",
                ));
            }
            budget -= 1;
            let width = rng.random_range(1..=max_width);
            let mut pool: Vec<usize> = (0..n).collect();
            pool.shuffle(rng);
            let m = Monomial::new(pool[..width].to_vec());
            if !monomials.contains(&m) {
                monomials.push(m);
            }
        }
        SparseF2Poly::new(n, monomials, rng.random())
    }

    /// The same function as a circuit: parity-predicate top over one AND
    /// child per monomial.
    pub fn to_circuit(&self) -> CircuitSpec {
        let children: Vec<Child> = self
            .monomials
            .iter()
            .map(|m| {
                Child::And(
                    m.vars
                        .iter()
                        .map(|&v| Literal { var: v, neg: false })
                        .collect(),
                )
            })
            .collect();
        let predicate = (0..=children.len())
            .map(|c| (c % 2 == 1) != self.constant)
            .collect();
        CircuitSpec {
            n: self.n,
            top: TopGate::Sym { predicate },
            children,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {} {}\n", self.n, if self.constant { 1 } else { 0 });
        for m in &self.monomials {
            let line: Vec<String> = m.vars.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty polynomial file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "#" {
            return Err(Error::parse(format!(
                "expected header `# n constant`, got {header:?}"
            )));
        }
        let n: usize = parts[1]
            .parse()
            .map_err(|e| Error::parse(format!("bad n in header: {e}")))?;
        let constant = match parts[2] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(format!("bad constant bit {other:?}"))),
        };
        let mut monomials = Vec::new();
        for line in lines {
            let vars: std::result::Result<Vec<usize>, _> =
                line.split_whitespace().map(str::parse).collect();
            let vars = vars.map_err(|e| Error::parse(format!("bad monomial line: {e}")))?;
            monomials.push(Monomial::new(vars));
        }
        SparseF2Poly::new(n, monomials, constant)
    }
}
