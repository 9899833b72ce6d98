//! Restrictions: partial assignments in {0, 1, *}^n, with composition and
//! the block samplers used throughout the experiments.
//!
//! Text form is one character per position, `0`/`1`/`*`, position 0 first,
//! e.g. `01**1*0`.

use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Zero,
    One,
    Star,
}

impl Cell {
    pub fn from_bool(b: bool) -> Cell {
        if b {
            Cell::One
        } else {
            Cell::Zero
        }
    }

    pub fn fixed_value(self) -> Option<bool> {
        match self {
            Cell::Zero => Some(false),
            Cell::One => Some(true),
            Cell::Star => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Restriction {
    cells: Vec<Cell>,
}

impl Restriction {
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        Restriction { cells }
    }

    pub fn all_star(n: usize) -> Self {
        Restriction {
            cells: vec![Cell::Star; n],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> Cell {
        self.cells[i]
    }

    pub fn set_cell(&mut self, i: usize, c: Cell) {
        self.cells[i] = c;
    }

    pub fn is_star(&self, i: usize) -> bool {
        self.cells[i] == Cell::Star
    }

    pub fn star_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == Cell::Star).count()
    }

    pub fn fixed_count(&self) -> usize {
        self.len() - self.star_count()
    }

    /// Star positions in increasing order. This ordering is what gives the
    /// restricted function its variable numbering.
    pub fn star_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_star(i)).collect()
    }

    /// Index whose bits carry the fixed values (zeros at star positions).
    pub fn fixed_bits_index(&self) -> u64 {
        let mut x = 0u64;
        for (i, c) in self.cells.iter().enumerate() {
            if *c == Cell::One {
                x |= 1 << i;
            }
        }
        x
    }

    /// Composition: fixed positions of `self` win, the rest follow `other`.
    /// Both restrictions live on the same `n` positions.
    pub fn compose(&self, other: &Restriction) -> Result<Restriction> {
        if self.len() != other.len() {
            return Err(Error::dimension(format!(
                "cannot compose lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| if *a == Cell::Star { *b } else { *a })
            .collect();
        Ok(Restriction { cells })
    }

    /// Embeds a refinement given on this restriction's star positions back
    /// into the full index space and composes. `sub` assigns (or keeps) the
    /// i-th star; everything already fixed stays fixed.
    pub fn refine(&self, sub: &Restriction) -> Result<Restriction> {
        let stars = self.star_positions();
        if sub.len() != stars.len() {
            return Err(Error::dimension(format!(
                "refinement length {} does not match {} stars",
                sub.len(),
                stars.len()
            )));
        }
        let mut out = self.clone();
        for (j, &pos) in stars.iter().enumerate() {
            out.cells[pos] = sub.cells[j];
        }
        Ok(out)
    }

    /// Uniformly random completion of the stars; returns the input index.
    pub fn complete_uniform(&self, rng: &mut Rng) -> u64 {
        let mut x = self.fixed_bits_index();
        for (i, c) in self.cells.iter().enumerate() {
            if *c == Cell::Star && rng.random::<bool>() {
                x |= 1 << i;
            }
        }
        x
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::parse("empty restriction string"));
        }
        let cells: Result<Vec<Cell>> = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(Cell::Zero),
                '1' => Ok(Cell::One),
                '*' => Ok(Cell::Star),
                other => Err(Error::parse(format!("bad restriction char {other:?}"))),
            })
            .collect();
        Ok(Self::from_cells(cells?))
    }

    /// Parses one restriction per non-empty line.
    pub fn parse_lines(text: &str) -> Result<Vec<Restriction>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(Self::parse)
            .collect()
    }
}

impl std::fmt::Display for Restriction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.cells {
            f.write_str(match c {
                Cell::Zero => "0",
                Cell::One => "1",
                Cell::Star => "*",
            })?;
        }
        Ok(())
    }
}

impl Serialize for Restriction {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Restriction {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let s = String::deserialize(de)?;
        Restriction::parse(&s).map_err(D::Error::custom)
    }
}

/// Validated sampling parameters for the block samplers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RestrictionParams {
    pub p: f64,
    pub q: f64,
}

impl RestrictionParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::param(format!("{name}={v} must lie in [0,1]")));
            }
        }
        Ok(RestrictionParams { p, q })
    }
}

/// Draws from the classic block distribution: each position is a star with
/// probability `p`, otherwise a uniform bit.
pub fn sample_rp(n: usize, p: f64, rng: &mut Rng) -> Result<Restriction> {
    RestrictionParams::new(p, 0.0)?;
    if n == 0 {
        return Err(Error::dimension("restriction must be non-empty"));
    }
    let cells = (0..n)
        .map(|_| {
            if rng.random_bool(p) {
                Cell::Star
            } else {
                Cell::from_bool(rng.random())
            }
        })
        .collect();
    Ok(Restriction { cells })
}

/// Random subset of `0..universe`: each index joins independently with
/// probability `q`. Returned sorted.
pub fn sample_subset(universe: usize, q: f64, rng: &mut Rng) -> Result<Vec<usize>> {
    RestrictionParams::new(0.0, q)?;
    Ok((0..universe).filter(|_| rng.random_bool(q)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::truthtable::TruthTable;
    use proptest::prelude::*;

    #[test]
    fn parse_display_round_trip() {
        let rho = Restriction::parse("01**1*0").unwrap();
        assert_eq!(rho.to_string(), "01**1*0");
        assert_eq!(rho.len(), 7);
        assert_eq!(rho.star_count(), 3);
        assert_eq!(rho.star_positions(), vec![2, 3, 5]);
        assert_eq!(rho.fixed_bits_index(), 0b0010010);
        assert!(Restriction::parse("01x").is_err());
        assert!(Restriction::parse("").is_err());
    }

    #[test]
    fn parse_lines_skips_blanks() {
        let rs = Restriction::parse_lines("01*\n\n  **1  \n").unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[1].to_string(), "**1");
    }

    #[test]
    fn compose_fixed_wins() {
        let a = Restriction::parse("0**").unwrap();
        let b = Restriction::parse("11*").unwrap();
        assert_eq!(a.compose(&b).unwrap().to_string(), "01*");
        let c = Restriction::parse("1*").unwrap();
        assert!(a.compose(&c).is_err());
    }

    #[test]
    fn compose_contravariant_on_tables() {
        // restricting by a composition equals restricting twice
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let f = TruthTable::random(8, &mut rng).unwrap();
            let rho = sample_rp(8, 0.5, &mut rng).unwrap();
            let stars = rho.star_count();
            if stars == 0 {
                continue;
            }
            let inner = sample_rp(stars, 0.5, &mut rng).unwrap();
            let combined = rho.refine(&inner).unwrap();
            assert_eq!(
                f.restrict(&combined).unwrap(),
                f.restrict(&rho).unwrap().restrict(&inner).unwrap()
            );
        }
    }

    #[test]
    fn complete_uniform_respects_fixed() {
        let mut rng = rng_from_seed(6);
        let rho = Restriction::parse("1*0*").unwrap();
        for _ in 0..50 {
            let x = rho.complete_uniform(&mut rng);
            assert_eq!(x & 1, 1);
            assert_eq!((x >> 2) & 1, 0);
            assert!(x < 16);
        }
    }

    #[test]
    fn sample_rp_boundaries() {
        let mut rng = rng_from_seed(7);
        let all = sample_rp(64, 1.0, &mut rng).unwrap();
        assert_eq!(all.star_count(), 64);
        let none = sample_rp(64, 0.0, &mut rng).unwrap();
        assert_eq!(none.star_count(), 0);
        assert!(sample_rp(8, 1.5, &mut rng).is_err());
        assert!(sample_rp(8, -0.1, &mut rng).is_err());
        assert!(sample_rp(0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn sample_rp_star_fraction_concentrates() {
        let mut rng = rng_from_seed(8);
        let n = 1000;
        let trials = 2000;
        let p = 0.3f64;
        let mut stars = 0u64;
        for _ in 0..trials {
            stars += sample_rp(n, p, &mut rng).unwrap().star_count() as u64;
        }
        let total = (n * trials) as f64;
        let mean = stars as f64 / total;
        let sigma = (p * (1.0 - p) / total).sqrt();
        assert!(
            (mean - p).abs() < 3.0 * sigma + 1e-9,
            "mean {mean} too far from {p}"
        );
    }

    #[test]
    fn sample_subset_boundaries_and_rate() {
        let mut rng = rng_from_seed(9);
        assert_eq!(sample_subset(10, 0.0, &mut rng).unwrap(), Vec::<usize>::new());
        assert_eq!(sample_subset(5, 1.0, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(sample_subset(5, 2.0, &mut rng).is_err());
        let mut hits = 0u64;
        let trials = 2000;
        let universe = 500;
        let q = 0.2f64;
        for _ in 0..trials {
            let s = sample_subset(universe, q, &mut rng).unwrap();
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            hits += s.len() as u64;
        }
        let total = (universe as u64 * trials) as f64;
        let mean = hits as f64 / total;
        let sigma = (q * (1.0 - q) / total).sqrt();
        assert!((mean - q).abs() < 3.0 * sigma + 1e-9);
    }

    #[test]
    fn completion_of_rp_draw_is_uniform_exact() {
        // small-n fairness: averaging completion probabilities over every
        // (restriction, completion) pair must give the uniform distribution
        let n = 3usize;
        let p = 0.25f64;
        let mut mass = vec![0f64; 1 << n];
        // enumerate restrictions as base-3 strings
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let mut cells = Vec::new();
            let mut prob = 1.0;
            for _ in 0..n {
                match c % 3 {
                    0 => {
                        cells.push(Cell::Star);
                        prob *= p;
                    }
                    1 => {
                        cells.push(Cell::Zero);
                        prob *= (1.0 - p) / 2.0;
                    }
                    _ => {
                        cells.push(Cell::One);
                        prob *= (1.0 - p) / 2.0;
                    }
                }
                c /= 3;
            }
            let rho = Restriction::from_cells(cells);
            let stars = rho.star_positions();
            let comp = prob / (1u64 << stars.len()) as f64;
            for y in 0..(1u64 << stars.len()) {
                let mut x = rho.fixed_bits_index();
                for (j, &pos) in stars.iter().enumerate() {
                    if (y >> j) & 1 == 1 {
                        x |= 1 << pos;
                    }
                }
                mass[x as usize] += comp;
            }
        }
        for (x, m) in mass.iter().enumerate() {
            assert!((m - 1.0 / 8.0).abs() < 1e-12, "x={x} mass={m}");
        }
    }

    proptest! {
        #[test]
        fn compose_conserves_fixed(seed in 0u64..1000) {
            let mut rng = rng_from_seed(seed);
            let a = sample_rp(16, 0.5, &mut rng).unwrap();
            let b = sample_rp(16, 0.5, &mut rng).unwrap();
            let c = a.compose(&b).unwrap();
            // every position fixed by a keeps its value; a's stars follow b
            for i in 0..16 {
                match a.cell(i) {
                    Cell::Star => prop_assert_eq!(c.cell(i), b.cell(i)),
                    other => prop_assert_eq!(c.cell(i), other),
                }
            }
            prop_assert!(c.star_count() <= a.star_count());
            prop_assert!(c.star_count() <= b.star_count());
        }

        #[test]
        fn star_positions_sorted_and_consistent(seed in 0u64..1000) {
            let mut rng = rng_from_seed(seed);
            let rho = sample_rp(24, 0.4, &mut rng).unwrap();
            let pos = rho.star_positions();
            prop_assert!(pos.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(pos.len(), rho.star_count());
            prop_assert_eq!(rho.star_count() + rho.fixed_count(), 24);
        }
    }
}
