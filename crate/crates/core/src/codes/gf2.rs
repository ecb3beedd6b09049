//! Dense bit matrices over GF(2) with packed rows.
//!
//! Text form: a `rows cols` header line followed by one line per row of
//! `ceil(cols/4)` hex digits. Column 0 is the most significant bit of the
//! first digit; padding bits past `cols` must be zero.

use std::fmt::Write as _;

use super::CodeError;
use crate::bits::Bitstring;
use crate::rng::RngStream;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Gf2Matrix({}x{})", self.rows, self.cols)
    }
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn random(rows: usize, cols: usize, rng: &mut RngStream) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.bit());
            }
        }
        m
    }

    pub fn from_rows(rows: &[Bitstring]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row(&self, r: usize) -> Bitstring {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn column(&self, c: usize) -> Bitstring {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul_vec(&self, v: &Bitstring) -> Bitstring {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        let packed = pack(v, self.words);
        (0..self.rows)
            .map(|r| {
                self.row_words(r)
                    .iter()
                    .zip(&packed)
                    .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                    & 1
                    == 1
            })
            .collect()
    }

    pub fn mul(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Gf2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    let (dst, src) = (r * out.words, k * other.words);
                    for w in 0..out.words {
                        out.data[dst + w] ^= other.data[src + w];
                    }
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = (0..self.rows).map(|r| self.row_words(r).to_vec()).collect();
        reduce(&mut rows, self.cols)
    }

    /// Mod-2 determinant of a square matrix.
    pub fn determinant(&self) -> bool {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        self.rank() == self.rows
    }

    /// Gauss-Jordan inverse, `None` if singular.
    pub fn inverse(&self) -> Option<Gf2Matrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Gf2Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| a.get(r, col))?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            for r in 0..n {
                if r != col && a.get(r, col) {
                    a.xor_row_into(col, r);
                    inv.xor_row_into(col, r);
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        for w in 0..self.words {
            let v = self.data[src * self.words + w];
            self.data[dst * self.words + w] ^= v;
        }
    }

    pub fn to_hex_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        let digits = self.cols.div_ceil(4);
        for r in 0..self.rows {
            for d in 0..digits {
                let nibble = (0..4).fold(0u8, |acc, k| {
                    let c = 4 * d + k;
                    (acc << 1) | (c < self.cols && self.get(r, c)) as u8
                });
                write!(out, "{nibble:x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_hex_text(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| CodeError::Parse("empty input".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| CodeError::Parse(format!("bad header {header:?}: {e}")))?;
        let [rows, cols] = dims[..] else {
            return Err(CodeError::Parse(format!("bad header {header:?}")));
        };
        let digits = cols.div_ceil(4);
        let mut m = Gf2Matrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| CodeError::Parse(format!("missing row {r}")))?;
            if line.len() != digits {
                return Err(CodeError::Parse(format!(
                    "row {r} has {} digits, expected {digits}",
                    line.len()
                )));
            }
            for (d, ch) in line.chars().enumerate() {
                let nibble = ch
                    .to_digit(16)
                    .ok_or_else(|| CodeError::Parse(format!("row {r}: bad digit {ch:?}")))?;
                for k in 0..4 {
                    let bit = (nibble >> (3 - k)) & 1 == 1;
                    let c = 4 * d + k;
                    if c < cols {
                        m.set(r, c, bit);
                    } else if bit {
                        return Err(CodeError::Parse(format!("row {r}: nonzero padding")));
                    }
                }
            }
        }
        if lines.next().is_some() {
            return Err(CodeError::Parse("trailing rows".into()));
        }
        Ok(m)
    }
}

fn pack(v: &Bitstring, words: usize) -> Vec<u64> {
    let mut out = vec![0u64; words];
    for (i, b) in v.iter().enumerate() {
        if b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// Row-reduce packed rows in place to reduced echelon form, pivoting only on
/// the first `cols` columns; returns the rank. Zero rows end up at the bottom.
fn reduce(rows: &mut [Vec<u64>], cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

/// Indices `j` such that the unit functional `e_j` lies in the row space of
/// `rows`, i.e. message bit `j` is fully determined by those linear observations.
///
/// In reduced echelon form a vector is the sum of the rows whose pivots it
/// covers, so `e_j` is in the span iff some reduced row equals `e_j`.
pub fn determined_by_rows(rows: &[Bitstring], cols: usize) -> Vec<usize> {
    let words = cols.div_ceil(64).max(1);
    let mut packed: Vec<Vec<u64>> = rows.iter().map(|r| pack(r, words)).collect();
    let rank = reduce(&mut packed, cols);
    let mut out: Vec<usize> = packed[..rank]
        .iter()
        .filter(|row| row.iter().map(|w| w.count_ones()).sum::<u32>() == 1)
        .map(|row| {
            let w = row.iter().position(|w| *w != 0).unwrap();
            w * 64 + row[w].trailing_zeros() as usize
        })
        .collect();
    out.sort_unstable();
    out
}

/// Like [`determined_by_rows`], but also solves for the values: given
/// observations `rows[i] · m = values[i]`, returns `(j, m_j)` for every
/// message bit the observations pin down.
pub fn determined_values(rows: &[Bitstring], values: &[bool], cols: usize) -> Vec<(usize, bool)> {
    assert_eq!(rows.len(), values.len());
    let words = (cols + 1).div_ceil(64);
    let mut packed: Vec<Vec<u64>> = rows
        .iter()
        .zip(values)
        .map(|(r, &v)| {
            let mut p = pack(r, words);
            if v {
                p[cols / 64] |= 1 << (cols % 64);
            }
            p
        })
        .collect();
    let rank = reduce(&mut packed, cols);
    let mut out: Vec<(usize, bool)> = packed[..rank]
        .iter()
        .filter_map(|row| {
            let bits: Vec<usize> = (0..cols).filter(|&c| (row[c / 64] >> (c % 64)) & 1 == 1).collect();
            (bits.len() == 1).then(|| (bits[0], (row[cols / 64] >> (cols % 64)) & 1 == 1))
        })
        .collect();
    out.sort_unstable();
    out
}
