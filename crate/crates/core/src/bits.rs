//! Finite binary strings.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// A finite binary string. The derived order is lexicographic with a proper
/// prefix sorting before its extensions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    /// The empty string λ.
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Self {
        BitString(bits.into_iter().map(|b| b & 1).collect())
    }

    /// `bit` repeated `n` times.
    pub fn repeat(bit: u8, n: usize) -> Self {
        BitString(vec![bit & 1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    pub fn push(&mut self, bit: u8) {
        self.0.push(bit & 1);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    /// `self ∗ bit`.
    pub fn child(&self, bit: u8) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(bit & 1);
        BitString(v)
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    /// The length-`n` prefix `self↾n`.
    pub fn prefix(&self, n: usize) -> Self {
        BitString(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Predecessor; `None` for λ.
    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.prefix(self.0.len() - 1))
        }
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64, "length {n} too large to enumerate");
        (0u64..(1u64 << n))
            .map(move |v| BitString((0..n).map(|i| ((v >> (n - 1 - i)) & 1) as u8).collect()))
    }

    /// All strings of length at most `depth`, shortest first.
    pub fn all_up_to(depth: usize) -> impl Iterator<Item = BitString> {
        (0..=depth).flat_map(BitString::all_of_length)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "λ" {
            return Ok(BitString::empty());
        }
        t.chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::InvalidBits(s.to_string())),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("λ")
        } else {
            write!(f, "{self}")
        }
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixtures: `bs("0101")`.
pub fn bs(s: &str) -> BitString {
    s.parse().expect("literal bit string")
}

/// `x ⊕ y = x0 y0 x1 y1 …`, requiring `|x| ∈ {|y|, |y|+1}`.
pub fn interleave(x: &BitString, y: &BitString) -> Result<BitString> {
    if x.len() != y.len() && x.len() != y.len() + 1 {
        return Err(Error::LengthMismatch(format!(
            "interleave needs |x| in {{|y|, |y|+1}}, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let mut out = BitString::empty();
    for i in 0..x.len() {
        out.push(x.bit(i));
        if i < y.len() {
            out.push(y.bit(i));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_examples() {
        assert_eq!(interleave(&bs("000"), &bs("111")).unwrap(), bs("010101"));
        assert_eq!(interleave(&bs(""), &bs("")).unwrap(), bs(""));
        assert_eq!(interleave(&bs("10"), &bs("0")).unwrap(), bs("100"));
        assert!(interleave(&bs("1"), &bs("000")).is_err());
        assert!(interleave(&bs("111"), &bs("0")).is_err());
    }

    #[test]
    fn order_and_prefixes() {
        assert!(bs("") < bs("0"));
        assert!(bs("0") < bs("00"));
        assert!(bs("01") < bs("1"));
        assert!(bs("10").is_prefix_of(&bs("101")));
        assert!(!bs("11").is_prefix_of(&bs("101")));
        assert!(bs("").is_proper_prefix_of(&bs("1")));
        assert!(!bs("1").is_proper_prefix_of(&bs("1")));
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let all: Vec<String> = BitString::all_of_length(2).map(|b| b.to_string()).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
        assert_eq!(BitString::all_up_to(3).count(), 15);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("012".parse::<BitString>().is_err());
        assert_eq!("λ".parse::<BitString>().unwrap(), BitString::empty());
    }
}
