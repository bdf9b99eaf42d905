//! Finite binary strings, cylinder relations and simple sets.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{dyadic, Rational};

/// A finite word over {0, 1}. Also names the cylinder of its infinite
/// extensions and, read as a binary fraction, a dyadic parameter interval.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BinaryString {
    bits: Vec<bool>,
}

/// How two strings sit relative to each other in the prefix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equal,
    /// The first string is a proper prefix of the second.
    Prefix,
    /// The first string properly extends the second.
    Extension,
    Incomparable,
}

impl BinaryString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        Self {
            bits: bits.into_iter().collect(),
        }
    }

    /// `bit` repeated `n` times.
    pub fn repeat(bit: bool, n: usize) -> Self {
        Self { bits: vec![bit; n] }
    }

    /// The string of length `len` spelling `value` in binary, most significant
    /// bit first.
    pub fn from_value(value: u64, len: usize) -> Self {
        Self::from_bits((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Numeric value of the bits, most significant first. Requires `len <= 64`.
    pub fn value(&self) -> u64 {
        debug_assert!(self.len() <= 64);
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Position in the length-lexicographic enumeration Λ, 0, 1, 00, 01, ...
    pub fn index(&self) -> u64 {
        assert!(self.len() < 64, "index needs length < 64");
        (1u64 << self.len()) - 1 + self.value()
    }

    pub fn from_index(index: u64) -> Self {
        let len = (64 - (index + 1).leading_zeros() - 1) as usize;
        Self::from_value(index + 1 - (1u64 << len), len)
    }

    pub fn child(&self, bit: bool) -> Self {
        let mut bits = self.bits.clone();
        bits.push(bit);
        Self { bits }
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn concat(&self, other: &BinaryString) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.is_empty() {
            None
        } else {
            Some(self.prefix(self.len() - 1))
        }
    }

    /// The first `k` bits (the whole string when `k >= len`).
    pub fn prefix(&self, k: usize) -> Self {
        Self {
            bits: self.bits[..k.min(self.len())].to_vec(),
        }
    }

    /// True when `self ⊆ other`, equality included.
    pub fn is_prefix_of(&self, other: &BinaryString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// Binary fraction `0.bits` as an exact rational.
    pub fn as_fraction(&self) -> Rational {
        let mut acc = Rational::default();
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                acc += dyadic(i + 1);
            }
        }
        acc
    }

    /// All strings of length `n` in lexicographic order.
    pub fn level(n: usize) -> impl Iterator<Item = BinaryString> {
        assert!(n < 64);
        (0..(1u64 << n)).map(move |v| BinaryString::from_value(v, n))
    }

    /// All strings of length at most `depth`, length-lexicographically.
    pub fn up_to(depth: usize) -> impl Iterator<Item = BinaryString> {
        (0..=depth).flat_map(BinaryString::level)
    }
}

/// Position of `x` relative to `y` in the prefix order.
pub fn cylinder_relation(x: &BinaryString, y: &BinaryString) -> Relation {
    if x == y {
        Relation::Equal
    } else if x.is_prefix_of(y) {
        Relation::Prefix
    } else if y.is_prefix_of(x) {
        Relation::Extension
    } else {
        Relation::Incomparable
    }
}

/// Length-lexicographic order: shorter first, then by bits.
pub fn shortlex(a: &BinaryString, b: &BinaryString) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.bits.cmp(&b.bits))
}

impl PartialOrd for BinaryString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Plain lexicographic order (a prefix sorts before its extensions).
impl Ord for BinaryString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits.cmp(&other.bits)
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BinaryString {
    type Err = String;

    /// Accepts 0/1 text; `-`, `Λ` or the empty string denote Λ.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "-" || s == "Λ" {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit {other:?} in {s:?}")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(|bits| Self { bits })
    }
}

impl Serialize for BinaryString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BinaryString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite union of cylinders given by pairwise incomparable generators.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BinaryString>", into = "Vec<BinaryString>")]
pub struct SimpleSet {
    generators: Vec<BinaryString>,
}

impl SimpleSet {
    /// Checks pairwise incomparability; generators are stored sorted.
    pub fn new(mut generators: Vec<BinaryString>) -> Result<Self> {
        generators.sort();
        generators.dedup();
        // After sorting, a prefix pair is always adjacent to some comparable pair.
        for w in generators.windows(2) {
            if w[0].is_prefix_of(&w[1]) {
                return Err(Error::ComparableGenerators(w[0].clone(), w[1].clone()));
            }
        }
        Ok(Self { generators })
    }

    /// Builds the union of arbitrary cylinders, dropping generators covered
    /// by a shorter one.
    pub fn covering(mut cylinders: Vec<BinaryString>) -> Self {
        cylinders.sort();
        cylinders.dedup();
        let mut generators: Vec<BinaryString> = Vec::new();
        for c in cylinders {
            if generators.last().is_some_and(|g| g.is_prefix_of(&c)) {
                continue;
            }
            generators.push(c);
        }
        Self { generators }
    }

    pub fn whole() -> Self {
        Self {
            generators: vec![BinaryString::empty()],
        }
    }

    pub fn generators(&self) -> &[BinaryString] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Γ_x ⊆ this set.
    pub fn contains_cylinder(&self, x: &BinaryString) -> bool {
        self.generators.iter().any(|g| g.is_prefix_of(x))
    }

    /// Γ_x meets this set.
    pub fn meets_cylinder(&self, x: &BinaryString) -> bool {
        self.generators
            .iter()
            .any(|g| g.is_prefix_of(x) || x.is_prefix_of(g))
    }

    pub fn max_len(&self) -> usize {
        self.generators.iter().map(BinaryString::len).max().unwrap_or(0)
    }

    /// Uniform measure of the union.
    pub fn uniform_measure(&self) -> Rational {
        self.generators.iter().map(|g| dyadic(g.len())).sum()
    }
}

impl TryFrom<Vec<BinaryString>> for SimpleSet {
    type Error = Error;
    fn try_from(v: Vec<BinaryString>) -> Result<Self> {
        SimpleSet::new(v)
    }
}

impl From<SimpleSet> for Vec<BinaryString> {
    fn from(s: SimpleSet) -> Self {
        s.generators
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn s(t: &str) -> BinaryString {
        t.parse().unwrap()
    }

    #[test]
    fn relation_examples() {
        assert_eq!(cylinder_relation(&s("0"), &s("01")), Relation::Prefix);
        assert_eq!(cylinder_relation(&s("01"), &s("00")), Relation::Incomparable);
        assert_eq!(cylinder_relation(&s("-"), &s("1101")), Relation::Prefix);
        assert_eq!(cylinder_relation(&s("1101"), &s("11")), Relation::Extension);
        assert_eq!(cylinder_relation(&s("11"), &s("11")), Relation::Equal);
    }

    #[test]
    fn index_round_trip_and_order() {
        let expected = ["-", "0", "1", "00", "01", "10", "11", "000"];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(BinaryString::from_index(i as u64), s(e));
            assert_eq!(s(e).index(), i as u64);
        }
        for i in 0..5000u64 {
            assert_eq!(BinaryString::from_index(i).index(), i);
        }
    }

    #[test]
    fn fraction_of_alpha() {
        assert_eq!(s("01").as_fraction(), ratio(1, 4));
        assert_eq!(s("-").as_fraction(), ratio(0, 1));
        assert_eq!(s("111").as_fraction(), ratio(7, 8));
    }

    #[test]
    fn simple_set_rejects_prefix_pairs() {
        assert!(SimpleSet::new(vec![s("0"), s("01")]).is_err());
        assert!(SimpleSet::new(vec![s("0"), s("11")]).is_ok());
        assert!(SimpleSet::new(vec![s("-"), s("11")]).is_err());
    }

    #[test]
    fn covering_drops_redundant_cylinders() {
        let u = SimpleSet::covering(vec![s("01"), s("0"), s("011"), s("11")]);
        assert_eq!(u.generators(), &[s("0"), s("11")]);
        assert_eq!(u.uniform_measure(), ratio(3, 4));
    }
}
