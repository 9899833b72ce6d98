//! Combinatorial designs: families of same-size blocks with bounded pairwise
//! overlap, the polynomial construction over prime fields, and the parameter
//! calculator for the generator profiles.

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const UNIVERSE_CAP: usize = 1 << 24;
pub const POLY_DESIGN_MAX_BLOCKS: usize = 1 << 20;

/// s sorted r-subsets of {0, .., m-1}, intended to overlap pairwise in at
/// most l points. Shape is enforced on construction; the overlap bound is
/// checked by [`verify_design`] so that defective families can still be
/// represented and reported on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    m: usize,
    r: usize,
    l: usize,
    blocks: Vec<Vec<usize>>,
}

impl Design {
    pub fn new(m: usize, r: usize, l: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        for (i, block) in blocks.iter().enumerate() {
            if block.len() != r {
                return Err(Error::dimension(format!(
                    "block {i} has {} elements, expected {r}",
                    block.len()
                )));
            }
            if !block.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::spec(format!("block {i} is not sorted and distinct")));
            }
            if let Some(&last) = block.last() {
                if last >= m {
                    return Err(Error::dimension(format!(
                        "block {i} contains {last}, universe is {m}"
                    )));
                }
            }
        }
        Ok(Design { m, r, l, blocks })
    }

    pub fn universe(&self) -> usize {
        self.m
    }

    pub fn block_size(&self) -> usize {
        self.r
    }

    pub fn overlap_bound(&self) -> usize {
        self.l
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    /// Header line `m r l s`, then one line of sorted indices per block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {} {}", self.m, self.r, self.l, self.blocks.len());
        for block in &self.blocks {
            let line: Vec<String> = block.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty design file"))?;
        let nums: std::result::Result<Vec<usize>, _> =
            header.split_whitespace().map(|w| w.parse()).collect();
        let nums = nums.map_err(|e| Error::parse(format!("bad design header: {e}")))?;
        if nums.len() != 4 {
            return Err(Error::parse(format!("design header needs `m r l s`, got {header:?}")));
        }
        let (m, r, l, s) = (nums[0], nums[1], nums[2], nums[3]);
        let mut blocks = Vec::with_capacity(s);
        for line in lines {
            let block: std::result::Result<Vec<usize>, _> =
                line.split_whitespace().map(|w| w.parse()).collect();
            blocks.push(block.map_err(|e| Error::parse(format!("bad design block: {e}")))?);
        }
        if blocks.len() != s {
            return Err(Error::parse(format!(
                "design header promises {s} blocks, file has {}",
                blocks.len()
            )));
        }
        Design::new(m, r, l, blocks)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn next_prime(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// All polynomials of degree < `degree_d` over the prime field F_r, each
/// contributing the graph block {a*r + p(a) : a in F_r}. Blocks come out
/// sorted; two distinct polynomials agree on at most degree_d - 1 points,
/// which bounds every pairwise intersection.
pub fn build_design_polynomial(r_field: usize, degree_d: usize) -> Result<Design> {
    if !is_prime(r_field as u64) {
        return Err(Error::param(format!("{r_field} is not prime")));
    }
    if degree_d == 0 {
        return Err(Error::param("degree must be at least 1"));
    }
    let s = r_field
        .checked_pow(degree_d as u32)
        .filter(|&s| s <= POLY_DESIGN_MAX_BLOCKS)
        .ok_or_else(|| {
            Error::cap(format!("r^d exceeds the block cap {POLY_DESIGN_MAX_BLOCKS}"))
        })?;
    let mut blocks = Vec::with_capacity(s);
    let mut coeffs = vec![0usize; degree_d];
    loop {
        let block: Vec<usize> = (0..r_field)
            .map(|a| {
                let mut val = 0usize;
                for &c in coeffs.iter().rev() {
                    val = (val * a + c) % r_field;
                }
                a * r_field + val
            })
            .collect();
        blocks.push(block);
        let mut carry = 0;
        while carry < degree_d {
            coeffs[carry] += 1;
            if coeffs[carry] < r_field {
                break;
            }
            coeffs[carry] = 0;
            carry += 1;
        }
        if carry == degree_d {
            break;
        }
    }
    Design::new(r_field * r_field, r_field, degree_d.saturating_sub(1), blocks)
}

/// Builds some design with `s` blocks of size `r` overlapping in at most `l`
/// points. Tries the polynomial construction first: the least prime r' >= r
/// and least degree d with r'^d >= s, d - 1 <= l, and d <= r (the last keeps
/// truncated blocks distinct), bumping to larger primes when the degree
/// constraints fail. Each block keeps its first r points; the universe stays
/// r'^2. Falls back to bounded-retry greedy sampling. Deterministic.
pub fn build_design_for(s: usize, r: usize, l: usize) -> Result<Design> {
    if s == 0 || r == 0 || l == 0 {
        return Err(Error::param(format!(
            "need s >= 1, r >= 1, l >= 1, got s={s}, r={r}, l={l}"
        )));
    }
    if s == 1 {
        return Design::new(r, r, l, vec![(0..r).collect()]);
    }
    let mut prime = next_prime(r as u64) as usize;
    while prime * prime <= UNIVERSE_CAP {
        let mut d = 1usize;
        let mut count = prime;
        while count < s && d <= r {
            d += 1;
            count = count.saturating_mul(prime);
        }
        if count >= s && d.saturating_sub(1) <= l && d <= r {
            let full = build_design_polynomial(prime, d)?;
            let blocks: Vec<Vec<usize>> = full.blocks()[..s]
                .iter()
                .map(|b| b[..r].to_vec())
                .collect();
            return Design::new(prime * prime, r, l, blocks);
        }
        prime = next_prime(prime as u64 + 1) as usize;
    }
    greedy_design(s, r, l)
}

fn greedy_design(s: usize, r: usize, l: usize) -> Result<Design> {
    let mut rng = rng_from_seed(0x6473_676e);
    let mut universe = (r * r / l).max(r + 1).min(UNIVERSE_CAP);
    for _ in 0..8 {
        let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(s);
        let mut pool: Vec<usize> = (0..universe).collect();
        'attempts: for _ in 0..s * 100 {
            pool.shuffle(&mut rng);
            let mut cand: Vec<usize> = pool[..r].to_vec();
            cand.sort_unstable();
            for block in &blocks {
                if sorted_intersection(block, &cand) > l {
                    continue 'attempts;
                }
            }
            blocks.push(cand);
            if blocks.len() == s {
                return Design::new(universe, r, l, blocks);
            }
        }
        if universe >= UNIVERSE_CAP {
            break;
        }
        universe = (universe * 2).min(UNIVERSE_CAP);
    }
    Err(Error::construction(format!(
        "no (m, {r}, {l}, {s}) design found within the retry budget"
    )))
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub ok: bool,
    pub max_overlap: usize,
    /// Observed universe relative to the r^2/l yardstick.
    pub m_over_r2_by_l: f64,
}

/// Exhaustive pairwise intersection check.
pub fn verify_design(design: &Design) -> DesignReport {
    use rayon::prelude::*;
    let blocks = design.blocks();
    let max_overlap = (0..blocks.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..blocks.len())
                .map(|j| sorted_intersection(&blocks[i], &blocks[j]))
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    let r = design.block_size();
    let yardstick = if design.overlap_bound() > 0 {
        (r * r) as f64 / design.overlap_bound() as f64
    } else {
        f64::NAN
    };
    DesignReport {
        ok: max_overlap <= design.overlap_bound(),
        max_overlap,
        m_over_r2_by_l: design.universe() as f64 / yardstick,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NwProfile {
    Viola,
    Ls11Sym,
    Ls11Thr,
    Main,
    ManyGates,
}

impl std::str::FromStr for NwProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "viola" => Ok(NwProfile::Viola),
            "ls11_sym" => Ok(NwProfile::Ls11Sym),
            "ls11_thr" => Ok(NwProfile::Ls11Thr),
            "main" => Ok(NwProfile::Main),
            "many_gates" => Ok(NwProfile::ManyGates),
            other => Err(Error::parse(format!("unknown profile {other:?}"))),
        }
    }
}

impl std::fmt::Display for NwProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            NwProfile::Viola => "viola",
            NwProfile::Ls11Sym => "ls11_sym",
            NwProfile::Ls11Thr => "ls11_thr",
            NwProfile::Main => "main",
            NwProfile::ManyGates => "many_gates",
        };
        f.write_str(name)
    }
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigUint, D::Error> {
        use serde::de::Error as _;
        let s = String::deserialize(de)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Generator parameters for one profile. The block size and seed length are
/// exact integers and explode quickly; this is a calculator, not a
/// feasibility claim. `desk_capped` marks values produced by
/// [`NwParams::with_desk_cap`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NwParams {
    pub profile: NwProfile,
    pub s: u64,
    pub eps: f64,
    pub tau: f64,
    pub c_d: f64,
    pub l: usize,
    #[serde(with = "biguint_string")]
    pub r: BigUint,
    #[serde(with = "biguint_string")]
    pub m: BigUint,
    #[serde(with = "biguint_string")]
    pub hardness_size: BigUint,
    pub hardness_eps: f64,
    pub desk_capped: bool,
}

/// Block size per profile. The power-of-two exponent is rounded up to an
/// integer; additive terms are rounded to nearest; log log is clamped to 1
/// from below. Returned seed length is m = ceil(r^2 / l), constant 1.
pub fn nw_params(profile: NwProfile, s: u64, eps: f64, tau: f64, c_d: f64) -> Result<NwParams> {
    if s < 2 {
        return Err(Error::param(format!("need s >= 2, got {s}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("need 0 < eps < 1, got {eps}")));
    }
    if tau <= 0.0 || c_d <= 0.0 {
        return Err(Error::param(format!(
            "need tau > 0 and c_d > 0, got tau={tau}, c_d={c_d}"
        )));
    }
    let log_s = (s as f64).log2();
    let l = log_s.ceil() as usize;
    let log_s_over_eps = log_s - eps.log2();
    let (exponent, additive_exp) = match profile {
        NwProfile::Viola => (10.0 * (log_s_over_eps / c_d).sqrt(), None),
        NwProfile::Ls11Sym => {
            (10.0 / c_d * log_s / log_s.log2().max(1.0), Some(1.0))
        }
        NwProfile::Ls11Thr => {
            (10.0 / c_d * log_s / log_s.log2().max(1.0), Some(2.0))
        }
        NwProfile::Main | NwProfile::ManyGates => {
            (10.0 * (2.0 / tau * log_s).sqrt(), Some(2.005))
        }
    };
    let exp_int = (exponent - 1e-9).ceil().max(0.0) as u64;
    if exp_int > 1 << 20 {
        return Err(Error::cap(format!("power-of-two exponent {exp_int} out of range")));
    }
    let mut r = BigUint::from(1u32) << exp_int;
    if let Some(x) = additive_exp {
        r += BigUint::from(log_s_over_eps.powf(x).round() as u128);
    }
    let m = (&r * &r + BigUint::from(l - 1)) / BigUint::from(l);
    Ok(NwParams {
        profile,
        s,
        eps,
        tau,
        c_d,
        l,
        hardness_size: (BigUint::from(s)) << l,
        hardness_eps: eps / s as f64,
        r,
        m,
        desk_capped: false,
    })
}

impl NwParams {
    /// Caps the block size at a usable value, keeping l and the hardness
    /// requirement; the seed length is recomputed from the capped r.
    pub fn with_desk_cap(&self, r_cap: u64) -> NwParams {
        let cap = BigUint::from(r_cap.max(1));
        let r = self.r.clone().min(cap);
        let m = (&r * &r + BigUint::from(self.l - 1)) / BigUint::from(self.l);
        NwParams { r, m, desk_capped: true, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use std::collections::HashSet;

    fn overlap_oracle(a: &[usize], b: &[usize]) -> usize {
        let sa: HashSet<usize> = a.iter().copied().collect();
        b.iter().filter(|v| sa.contains(v)).count()
    }

    #[test]
    fn primes() {
        let known = [2u64, 3, 5, 7, 11, 13, 17, 19, 23];
        for n in 0..25 {
            assert_eq!(is_prime(n), known.contains(&n), "n={n}");
        }
        assert_eq!(next_prime(8), 11);
        assert_eq!(next_prime(13), 13);
    }

    #[test]
    fn constant_polynomials_partition_the_grid() {
        let d = build_design_polynomial(2, 1).unwrap();
        assert_eq!(d.universe(), 4);
        assert_eq!(d.blocks(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(verify_design(&d).max_overlap, 0);
    }

    #[test]
    fn degree_two_over_f3() {
        let d = build_design_polynomial(3, 2).unwrap();
        assert_eq!(d.num_blocks(), 9);
        assert_eq!(d.block_size(), 3);
        for i in 0..9 {
            for j in i + 1..9 {
                assert!(overlap_oracle(d.block(i), d.block(j)) <= 1, "blocks {i},{j}");
            }
        }
        let report = verify_design(&d);
        assert!(report.ok);
        assert_eq!(report.max_overlap, 1);
    }

    #[test]
    fn degree_three_over_f5() {
        let d = build_design_polynomial(5, 3).unwrap();
        assert_eq!(d.num_blocks(), 125);
        let report = verify_design(&d);
        assert!(report.ok);
        assert!(report.max_overlap <= 2);
    }

    #[test]
    fn polynomial_intersections_exhaustive_small() {
        for r in [2usize, 3, 5, 7] {
            for d in 1..=3usize {
                let design = build_design_polynomial(r, d).unwrap();
                if d <= r {
                    // beyond degree r distinct polynomials can coincide as
                    // functions, e.g. x^2 = x over F_2; the overlap bound
                    // still holds because blocks only have r <= d - 1 points
                    let distinct: HashSet<&Vec<usize>> = design.blocks().iter().collect();
                    assert_eq!(distinct.len(), design.num_blocks(), "r={r} d={d}");
                }
                for i in 0..design.num_blocks() {
                    for j in i + 1..design.num_blocks() {
                        assert!(
                            overlap_oracle(design.block(i), design.block(j)) <= d - 1,
                            "r={r} d={d} blocks {i},{j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn polynomial_rejects_bad_params() {
        assert!(build_design_polynomial(4, 2).is_err());
        assert!(build_design_polynomial(3, 0).is_err());
        assert!(matches!(
            build_design_polynomial(251, 3),
            Err(crate::error::Error::Cap(_))
        ));
    }

    #[test]
    fn design_for_single_block() {
        let d = build_design_for(1, 5, 3).unwrap();
        assert_eq!(d.num_blocks(), 1);
        assert_eq!(d.block_size(), 5);
        assert!(verify_design(&d).ok);
    }

    #[test]
    fn design_for_hits_polynomial_case() {
        let d = build_design_for(9, 3, 1).unwrap();
        let poly = build_design_polynomial(3, 2).unwrap();
        assert_eq!(d.blocks(), poly.blocks());
        assert!(verify_design(&d).ok);
    }

    #[test]
    fn design_for_medium() {
        let d = build_design_for(50, 7, 3).unwrap();
        assert_eq!(d.num_blocks(), 50);
        assert_eq!(d.block_size(), 7);
        let report = verify_design(&d);
        assert!(report.ok);
        assert!(d.universe() as f64 <= 8.0 * 49.0 / 3.0);
    }

    #[test]
    fn verify_flags_duplicates() {
        let block = vec![0usize, 1, 2];
        let d = Design::new(5, 3, 1, vec![block.clone(), block]).unwrap();
        let report = verify_design(&d);
        assert!(!report.ok);
        assert_eq!(report.max_overlap, 3);

        let ok = Design::new(6, 3, 0, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert!(verify_design(&ok).ok);
    }

    #[test]
    fn design_shape_validation() {
        assert!(Design::new(4, 2, 1, vec![vec![0, 0]]).is_err());
        assert!(Design::new(4, 2, 1, vec![vec![1, 0]]).is_err());
        assert!(Design::new(4, 2, 1, vec![vec![2, 4]]).is_err());
        assert!(Design::new(4, 3, 1, vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let d = build_design_for(12, 4, 2).unwrap();
        let text = d.to_text();
        let back = Design::from_text(&text).unwrap();
        assert_eq!(d, back);
        assert_eq!(back.to_text(), text);
        assert!(Design::from_text("").is_err());
        assert!(Design::from_text("3 2 1\n0 1").is_err());
        assert!(Design::from_text("4 2 1 2\n0 1").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn design_for_always_verifies(s in 1usize..40, r in 1usize..10, l in 1usize..5) {
            let d = build_design_for(s, r, l).unwrap();
            prop_assert_eq!(d.num_blocks(), s);
            prop_assert_eq!(d.block_size(), r);
            let report = verify_design(&d);
            prop_assert!(report.ok, "max_overlap {} > {}", report.max_overlap, l);
        }
    }

    #[test]
    fn params_main_profile() {
        let p = nw_params(NwProfile::Main, 1 << 16, 2f64.powi(-10), 2.0, 1.0).unwrap();
        assert_eq!(p.l, 16);
        let expect_r = (BigUint::from(1u32) << 40u32)
            + BigUint::from(26f64.powf(2.005).round() as u64);
        assert_eq!(p.r, expect_r);
        let expect_m = (&expect_r * &expect_r + BigUint::from(15u32)) / BigUint::from(16u32);
        assert_eq!(p.m, expect_m);
        assert_eq!(p.hardness_size, BigUint::from(1u128 << 32));
        assert!((p.hardness_eps - 2f64.powi(-26)).abs() < 1e-18);
        assert!(!p.desk_capped);
    }

    #[test]
    fn params_viola_profile() {
        let p = nw_params(NwProfile::Viola, 1 << 9, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(p.l, 9);
        // exponent 10 * sqrt(10) = 31.62.. rounds up to 32, no additive term
        assert_eq!(p.r, BigUint::from(1u64) << 32);
    }

    #[test]
    fn params_small_s() {
        for profile in [
            NwProfile::Viola,
            NwProfile::Ls11Sym,
            NwProfile::Ls11Thr,
            NwProfile::Main,
            NwProfile::ManyGates,
        ] {
            let p = nw_params(profile, 2, 0.25, 1.0, 1.0).unwrap();
            assert_eq!(p.l, 1, "{profile}");
            assert!(p.m >= p.r.clone(), "{profile}");
        }
    }

    #[test]
    fn params_ls11_additive_terms() {
        let sym = nw_params(NwProfile::Ls11Sym, 1 << 8, 0.25, 1.0, 1.0).unwrap();
        let thr = nw_params(NwProfile::Ls11Thr, 1 << 8, 0.25, 1.0, 1.0).unwrap();
        // same leading power of two, additive term 10 vs 10^2
        assert_eq!(thr.r.clone() - sym.r.clone(), BigUint::from(90u32));
    }

    #[test]
    fn params_validation() {
        assert!(nw_params(NwProfile::Main, 1, 0.5, 1.0, 1.0).is_err());
        assert!(nw_params(NwProfile::Main, 4, 0.0, 1.0, 1.0).is_err());
        assert!(nw_params(NwProfile::Main, 4, 1.0, 1.0, 1.0).is_err());
        assert!(nw_params(NwProfile::Main, 4, 0.5, 0.0, 1.0).is_err());
        assert!(nw_params(NwProfile::Viola, 4, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn desk_cap_shrinks() {
        let p = nw_params(NwProfile::Main, 1 << 16, 2f64.powi(-10), 2.0, 1.0).unwrap();
        let capped = p.with_desk_cap(64);
        assert!(capped.desk_capped);
        assert_eq!(capped.r, BigUint::from(64u32));
        assert_eq!(capped.l, p.l);
        assert_eq!(capped.m, BigUint::from(256u32));
        assert_eq!(capped.hardness_size, p.hardness_size);
    }

    #[test]
    fn params_serde_round_trip() {
        let p = nw_params(NwProfile::Viola, 512, 0.5, 1.0, 1.0).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"4294967296\""));
        let back: NwParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back.r, p.r);
        assert_eq!(back.m, p.m);
        assert_eq!(back.profile, p.profile);
    }

    #[test]
    fn profile_names_round_trip() {
        for name in ["viola", "ls11_sym", "ls11_thr", "main", "many_gates"] {
            let p: NwProfile = name.parse().unwrap();
            assert_eq!(p.to_string(), name);
        }
        assert!("bogus".parse::<NwProfile>().is_err());
    }
}
