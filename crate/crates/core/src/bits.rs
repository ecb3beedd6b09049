//! Bitstrings and received words.

use std::fmt;
use std::ops::{BitXor, Index};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng::RngStream;

/// An ordered sequence of bits. Serialized as a string of `0`/`1` characters.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bitstring(Vec<bool>);

impl Bitstring {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn random(len: usize, rng: &mut RngStream) -> Self {
        Self(rng.bits(len))
    }

    /// Bits of `value`, most significant first, `width` bits wide.
    pub fn from_u64(value: u64, width: usize) -> Self {
        Self((0..width).rev().map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }

    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64);
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn concat(&self, other: &Bitstring) -> Bitstring {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bitstring(v)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Bitstring {
        Bitstring(self.0[range].to_vec())
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Bitstring) -> usize {
        assert_eq!(self.len(), other.len());
        self.iter().zip(other.iter()).filter(|(a, b)| a != b).count()
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl From<Vec<bool>> for Bitstring {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

impl Index<usize> for Bitstring {
    type Output = bool;
    fn index(&self, i: usize) -> &bool {
        &self.0[i]
    }
}

impl BitXor for &Bitstring {
    type Output = Bitstring;
    fn bitxor(self, rhs: &Bitstring) -> Bitstring {
        assert_eq!(self.len(), rhs.len(), "xor of unequal lengths");
        Bitstring(self.iter().zip(rhs.iter()).map(|(a, b)| a ^ b).collect())
    }
}

impl FromIterator<bool> for Bitstring {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit character {0:?}")]
pub struct ParseBitsError(pub char);

impl FromStr for Bitstring {
    type Err = ParseBitsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ParseBitsError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bitstring)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One received channel symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    Erased,
}

impl Symbol {
    pub fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Erased => None,
        }
    }
}

impl From<bool> for Symbol {
    fn from(b: bool) -> Self {
        if b {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }
}

/// A word as seen by the receiver: bits with possible erasures.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReceivedWord(Vec<Symbol>);

impl ReceivedWord {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn erasures(&self) -> usize {
        self.0.iter().filter(|s| **s == Symbol::Erased).count()
    }

    /// The word as plain bits, or `None` if anything is erased.
    pub fn to_bits(&self) -> Option<Bitstring> {
        self.0.iter().map(|s| s.bit()).collect::<Option<Vec<_>>>().map(Bitstring)
    }
}

impl From<&Bitstring> for ReceivedWord {
    fn from(b: &Bitstring) -> Self {
        Self(b.iter().map(Symbol::from).collect())
    }
}

impl From<Bitstring> for ReceivedWord {
    fn from(b: Bitstring) -> Self {
        (&b).into()
    }
}

impl FromIterator<Symbol> for ReceivedWord {
    fn from_iter<T: IntoIterator<Item = Symbol>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}
