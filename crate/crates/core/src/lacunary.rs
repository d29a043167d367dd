//! Integer spectra and their lacunarity parameter.
//!
//! The parameter of a window is the largest number of ordered pairs `(i, j)`
//! realising one nonzero difference `terms[i] - terms[j]`. On a finite window
//! it is a lower bound for the parameter of any infinite sequence containing
//! that window.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// A finite, strictly increasing window of an integer spectrum.
#[derive(Debug, Clone, Default)]
pub struct LacunarySequence {
    terms: Vec<i64>,
    r_param: OnceLock<u64>,
}

impl LacunarySequence {
    pub fn new(terms: Vec<i64>) -> Result<Self> {
        if let Some(index) = terms.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotIncreasing { index: index + 1 });
        }
        Ok(Self {
            terms,
            r_param: OnceLock::new(),
        })
    }

    /// Sorts and deduplicates arbitrary integers into a window.
    pub fn from_unsorted(mut terms: Vec<i64>) -> Self {
        terms.sort_unstable();
        terms.dedup();
        Self {
            terms,
            r_param: OnceLock::new(),
        }
    }

    pub fn terms(&self) -> &[i64] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Windowed lacunarity parameter R, cached after the first call.
    pub fn r_param(&self) -> u64 {
        *self.r_param.get_or_init(|| max_difference_multiplicity(&self.terms))
    }

    pub fn is_sidon(&self) -> bool {
        self.len() <= 1 || self.r_param() == 1
    }

    /// Contiguous sub-window `terms[range]`.
    pub fn window(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            terms: self.terms[range].to_vec(),
            r_param: OnceLock::new(),
        }
    }

    /// Adds `shift` to every term.
    pub fn translate(&self, shift: i64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|&n| n.checked_add(shift))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::Overflow { generated: 0 })?;
        Self::new(terms)
    }
}

impl PartialEq for LacunarySequence {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for LacunarySequence {}

impl fmt::Display for LacunarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for LacunarySequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LacunarySequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<i64>::deserialize(d)?;
        Self::new(terms).map_err(serde::de::Error::custom)
    }
}

impl FromStr for LacunarySequence {
    type Err = Error;

    /// Parses an inline comma-separated list such as `1,2,4,8`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches(['[', '{']).trim_end_matches([']', '}']);
        if s.trim().is_empty() {
            return Self::new(Vec::new());
        }
        let terms = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| invalid("sequence", format!("`{}`: {e}", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }
}

fn max_difference_multiplicity(terms: &[i64]) -> u64 {
    if terms.len() < 2 {
        return 0;
    }
    // Ordered pairs with difference r and -r are equinumerous, so counting
    // positive differences is enough.
    let mut counts: HashMap<i128, u64> = HashMap::with_capacity(terms.len() * terms.len() / 2);
    let mut best = 0;
    for (i, &hi) in terms.iter().enumerate() {
        for &lo in &terms[..i] {
            let c = counts.entry(hi as i128 - lo as i128).or_insert(0);
            *c += 1;
            best = best.max(*c);
        }
    }
    best
}

/// Lacunarity parameter of an arbitrary slice; rejects non-increasing input.
pub fn lacunarity_parameter(terms: &[i64]) -> Result<u64> {
    Ok(LacunarySequence::new(terms.to_vec())?.r_param())
}

/// A ratio `num/den` of positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(invalid("q", "zero denominator"));
        }
        Ok(Self { num, den })
    }

    pub fn integer(n: u64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| invalid("q", format!("`{s}`: {e}")));
        match s.split_once('/') {
            Some((n, d)) => Ratio::new(parse(n)?, parse(d)?),
            None => Ok(Ratio::integer(parse(s)?)),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(Ratio::integer(n)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Sequence with `n_{i+1}` the smallest integer that is `>= q * n_i` and `> n_i`.
pub fn hadamard_sequence(n0: u64, q: Ratio, count: usize) -> Result<LacunarySequence> {
    if n0 == 0 {
        return Err(invalid("n0", "must be at least 1"));
    }
    if q.num <= q.den {
        return Err(invalid("q", format!("{q} is not greater than 1")));
    }
    if count == 0 {
        return Err(invalid("count", "must be positive"));
    }
    let mut terms = Vec::with_capacity(count);
    let mut n = n0 as u128;
    for generated in 0..count {
        if n > i64::MAX as u128 {
            return Err(Error::Overflow { generated });
        }
        terms.push(n as i64);
        let scaled = n.checked_mul(q.num as u128).ok_or(Error::Overflow {
            generated: generated + 1,
        })?;
        let ceil = scaled.div_ceil(q.den as u128);
        n = ceil.max(n + 1);
    }
    LacunarySequence::new(terms)
}

/// The greedy (Mian–Chowla) Sidon sequence 1, 2, 4, 8, 13, 21, 31, ...
pub fn mian_chowla(count: usize) -> LacunarySequence {
    let mut terms: Vec<i64> = Vec::with_capacity(count);
    let mut diffs: HashSet<i64> = HashSet::new();
    let mut candidate = 1i64;
    while terms.len() < count {
        let fresh: Vec<i64> = terms.iter().map(|&t| candidate - t).collect();
        let distinct = fresh.iter().collect::<HashSet<_>>().len() == fresh.len();
        if distinct && fresh.iter().all(|d| !diffs.contains(d)) {
            diffs.extend(fresh);
            terms.push(candidate);
        }
        candidate += 1;
    }
    LacunarySequence {
        terms,
        r_param: OnceLock::new(),
    }
}

/// Draws a random window of `size` integers in `[0, range]` with windowed
/// parameter exactly `r`.
///
/// The window is seeded with an arithmetic progression of `r + 1` terms (which
/// realises `r`), then filled greedily with uniform draws that keep every
/// difference multiplicity at most `r`.
pub fn random_with_parameter<G: Rng + ?Sized>(
    rng: &mut G,
    size: usize,
    r: u64,
    range: i64,
) -> Result<LacunarySequence> {
    if size <= 1 {
        if r != 0 {
            return Err(Error::Infeasible(format!("R = {r} needs at least 2 terms")));
        }
        return Ok(LacunarySequence::from_unsorted(
            (0..size).map(|_| rng.gen_range(0..=range)).collect(),
        ));
    }
    if r == 0 || r as usize > size - 1 {
        return Err(Error::Infeasible(format!(
            "R = {r} is not attainable with {size} terms"
        )));
    }
    if range < (size as i64) * 2 {
        return Err(Error::Infeasible(format!("range {range} too small for {size} terms")));
    }
    const ATTEMPTS: usize = 64;
    for _ in 0..ATTEMPTS {
        let step = rng.gen_range(1..=(range / (4 * r as i64)).max(1));
        let start = rng.gen_range(0..=(range - step * r as i64));
        let mut terms: Vec<i64> = (0..=r as i64).map(|j| start + j * step).collect();
        let mut counts: HashMap<i64, u64> = HashMap::new();
        for (i, &a) in terms.iter().enumerate() {
            for &b in &terms[..i] {
                *counts.entry((a - b).abs()).or_insert(0) += 1;
            }
        }
        let mut misses = 0;
        while terms.len() < size && misses < 20 * size + 1000 {
            let c = rng.gen_range(0..=range);
            if terms.contains(&c) {
                misses += 1;
                continue;
            }
            let mut fresh: HashMap<i64, u64> = HashMap::new();
            for &t in &terms {
                *fresh.entry((c - t).abs()).or_insert(0) += 1;
            }
            if fresh.iter().all(|(d, k)| counts.get(d).copied().unwrap_or(0) + k <= r) {
                for (d, k) in fresh {
                    *counts.entry(d).or_insert(0) += k;
                }
                terms.push(c);
            } else {
                misses += 1;
            }
        }
        if terms.len() == size {
            let seq = LacunarySequence::from_unsorted(terms);
            debug_assert_eq!(seq.r_param(), r);
            return Ok(seq);
        }
    }
    Err(Error::Infeasible(format!(
        "could not place {size} terms with R = {r} in [0, {range}]"
    )))
}

/// Random Sidon window of `size` terms in `[0, range]`.
pub fn random_sidon<G: Rng + ?Sized>(rng: &mut G, size: usize, range: i64) -> Result<LacunarySequence> {
    if size <= 1 {
        random_with_parameter(rng, size, 0, range)
    } else {
        random_with_parameter(rng, size, 1, range)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(t: &[i64]) -> LacunarySequence {
        LacunarySequence::new(t.to_vec()).unwrap()
    }

    #[test]
    fn parameter_examples() {
        assert_eq!(seq(&[1, 2, 4, 8, 16]).r_param(), 1);
        assert_eq!(seq(&[0, 1, 2, 3]).r_param(), 3);
        assert_eq!(seq(&[5]).r_param(), 0);
        assert_eq!(seq(&[]).r_param(), 0);
    }

    #[test]
    fn rejects_non_increasing() {
        assert_eq!(lacunarity_parameter(&[1, 3, 3]), Err(Error::NotIncreasing { index: 2 }));
        assert!(LacunarySequence::new(vec![4, 2]).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let two = hadamard_sequence(1, Ratio::integer(2), 5).unwrap();
        assert_eq!(two.terms(), &[1, 2, 4, 8, 16]);
        let three = hadamard_sequence(1, Ratio::integer(3), 4).unwrap();
        assert_eq!(three.terms(), &[1, 3, 9, 27]);
        let half = hadamard_sequence(2, "3/2".parse().unwrap(), 4).unwrap();
        assert_eq!(half.terms(), &[2, 3, 5, 8]);
    }

    #[test]
    fn hadamard_strictly_grows_for_ratio_close_to_one() {
        let s = hadamard_sequence(1, "11/10".parse().unwrap(), 6).unwrap();
        assert_eq!(s.terms(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn hadamard_reports_overflow() {
        let err = hadamard_sequence(1, Ratio::integer(2), 70).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
        assert!(hadamard_sequence(1, Ratio::integer(1), 3).is_err());
        assert!(hadamard_sequence(0, Ratio::integer(2), 3).is_err());
    }

    #[test]
    fn sidon_examples() {
        assert!(seq(&[1, 2, 4, 8]).is_sidon());
        assert!(!seq(&[0, 1, 2, 3]).is_sidon());
        assert!(seq(&[]).is_sidon());
    }

    #[test]
    fn mian_chowla_prefix() {
        assert_eq!(mian_chowla(8).terms(), &[1, 2, 4, 8, 13, 21, 31, 45]);
        assert!(mian_chowla(20).is_sidon());
    }

    #[test]
    fn parses_inline_lists() {
        let s: LacunarySequence = "1, 2,4,8".parse().unwrap();
        assert_eq!(s.terms(), &[1, 2, 4, 8]);
        assert!("1,x".parse::<LacunarySequence>().is_err());
        let r: Ratio = "3/2".parse().unwrap();
        assert_eq!(r, Ratio { num: 3, den: 2 });
    }

    #[test]
    fn generator_hits_requested_parameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for r in 1..=4 {
            let s = random_with_parameter(&mut rng, 12, r, 10_000).unwrap();
            assert_eq!(s.len(), 12);
            assert_eq!(s.r_param(), r);
        }
        assert!(random_with_parameter(&mut rng, 3, 5, 100).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = seq(&[-3, 0, 7]);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, "[-3,0,7]");
        let back: LacunarySequence = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<LacunarySequence>("[2,1]").is_err());
    }
}
