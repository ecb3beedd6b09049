//! Diffusive linear code `M -> A·(M‖M)` for a nonsingular 2n×2n matrix `A`.
//!
//! Composing `A` with the duplication map gives an effective 2n×n generator
//! `G = A_left ⊕ A_right`. The code diffuses when no small set of codeword
//! positions pins down any single message bit, i.e. no XOR of at most `s`
//! rows of `G` is a unit vector.

use std::collections::HashSet;

use rand::RngCore;

use super::gf2::determined_by_rows;
use super::{CodeError, Codec, DecodeVerdict, Gf2Matrix, RejectReason};
use crate::bits::{Bitstring, ReceivedWord};
use crate::rng::RngStream;

/// Upper bound on candidate matrices tried by [`gen_nonsingular_gf2`].
pub const GENERATION_ATTEMPTS: usize = 10_000;

const ADMISSION_TRIALS: usize = 1000;

/// Largest subset-sum table built by the exhaustive routines.
const SUBSET_SUM_BUDGET: usize = 1 << 21;

#[derive(Debug, Clone)]
pub struct DiffusiveCodec {
    n: usize,
    matrix: Gf2Matrix,
    inverse: Gf2Matrix,
    generator: Vec<Bitstring>,
}

impl DiffusiveCodec {
    pub fn new(matrix: Gf2Matrix) -> Result<Self, CodeError> {
        let (rows, cols) = (matrix.rows(), matrix.cols());
        if rows != cols || rows % 2 != 0 || rows == 0 {
            return Err(CodeError::Dimension {
                rows,
                cols,
                expected: 2 * (rows / 2).max(1),
            });
        }
        let inverse = matrix.inverse().ok_or(CodeError::Singular)?;
        let generator = effective_generator(&matrix);
        Ok(Self {
            n: rows / 2,
            matrix,
            inverse,
            generator,
        })
    }

    pub fn matrix(&self) -> &Gf2Matrix {
        &self.matrix
    }

    /// Row `i` of the effective generator: the message functional behind codeword bit `i`.
    pub fn generator_row(&self, i: usize) -> &Bitstring {
        &self.generator[i]
    }
}

impl Codec for DiffusiveCodec {
    fn message_len(&self) -> usize {
        self.n
    }

    fn codeword_len(&self) -> usize {
        2 * self.n
    }

    fn encode(&self, message: &Bitstring) -> Bitstring {
        assert_eq!(message.len(), self.n, "dimension mismatch");
        self.matrix.mul_vec(&message.concat(message))
    }

    fn decode(&self, received: &ReceivedWord) -> DecodeVerdict {
        assert_eq!(received.len(), 2 * self.n, "dimension mismatch");
        let r = received
            .to_bits()
            .expect("diffusive code does not handle erasures");
        let w = self.inverse.mul_vec(&r);
        let (left, right) = (w.slice(0..self.n), w.slice(self.n..2 * self.n));
        if left == right {
            DecodeVerdict::accept(left)
        } else {
            DecodeVerdict::Reject(RejectReason::Mismatch)
        }
    }

    fn position_functional(&self, pos: usize) -> Option<Bitstring> {
        Some(self.generator[pos].clone())
    }
}

fn half_dim(a: &Gf2Matrix) -> usize {
    assert!(
        a.rows() == a.cols() && a.rows() % 2 == 0,
        "expected a square 2n x 2n matrix, got {}x{}",
        a.rows(),
        a.cols()
    );
    a.rows() / 2
}

fn effective_generator(a: &Gf2Matrix) -> Vec<Bitstring> {
    let n = half_dim(a);
    (0..2 * n)
        .map(|i| (0..n).map(|j| a.get(i, j) ^ a.get(i, n + j)).collect())
        .collect()
}

/// Every single codeword-bit flip is caught: no column of `A⁻¹` has equal
/// halves (such a column would decode a flip into another duplicated word).
pub fn single_flip_detectable(a: &Gf2Matrix) -> bool {
    let n = half_dim(a);
    let Some(inv) = a.inverse() else {
        return false;
    };
    (0..2 * n).all(|c| {
        let col = inv.column(c);
        col.slice(0..n) != col.slice(n..2 * n)
    })
}

/// Randomized diffusion test: for `trials` random position subsets of size
/// `subset_size`, no message bit may be a linear function of the observed
/// codeword bits alone.
pub fn diffusion_check(
    a: &Gf2Matrix,
    subset_size: usize,
    trials: usize,
    rng: &mut RngStream,
) -> bool {
    let n = half_dim(a);
    assert!(
        subset_size <= 2 * n,
        "subset size {subset_size} exceeds codeword length {}",
        2 * n
    );
    if subset_size == 0 {
        return true;
    }
    let generator = effective_generator(a);
    let mut positions: Vec<usize> = (0..2 * n).collect();
    (0..trials).all(|_| {
        // partial Fisher-Yates
        for i in 0..subset_size {
            let j = i + rng.below(2 * n - i);
            positions.swap(i, j);
        }
        let rows: Vec<Bitstring> = positions[..subset_size]
            .iter()
            .map(|&p| generator[p].clone())
            .collect();
        determined_by_rows(&rows, n).is_empty()
    })
}

/// Exhaustive version of [`diffusion_check`] over every subset of at most
/// `subset_size` positions, by meet-in-the-middle on subset XORs.
/// `None` when `n > 64` or the tables would be too large.
pub fn diffusion_exhaustive(a: &Gf2Matrix, subset_size: usize) -> Option<bool> {
    let n = half_dim(a);
    if n > 64 {
        return None;
    }
    if subset_size == 0 {
        return Some(true);
    }
    let rows = packed_generator(a);
    let big = subset_size.div_ceil(2);
    let small = subset_size / 2;
    if subset_count(rows.len(), big) > SUBSET_SUM_BUDGET {
        return None;
    }
    let big_sums = subset_sums(&rows, big);
    let small_sums = subset_sums(&rows, small);
    let clean = small_sums
        .iter()
        .all(|x| (0..n).all(|j| !big_sums.contains(&(x ^ (1u64 << j)))));
    Some(clean)
}

fn packed_generator(a: &Gf2Matrix) -> Vec<u64> {
    effective_generator(a)
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0u64, |acc, (j, b)| acc | ((b as u64) << j))
        })
        .collect()
}

fn subset_count(items: usize, max_k: usize) -> usize {
    let mut total = 0usize;
    let mut c = 1usize;
    for k in 0..=max_k.min(items) {
        total = total.saturating_add(c);
        c = c.saturating_mul(items - k) / (k + 1);
    }
    total
}

/// XORs of all subsets of `rows` with at most `max_k` elements (including the empty one).
fn subset_sums(rows: &[u64], max_k: usize) -> HashSet<u64> {
    fn walk(rows: &[u64], start: usize, left: usize, acc: u64, out: &mut HashSet<u64>) {
        out.insert(acc);
        if left == 0 {
            return;
        }
        for i in start..rows.len() {
            walk(rows, i + 1, left - 1, acc ^ rows[i], out);
        }
    }
    let mut out = HashSet::with_capacity(subset_count(rows.len(), max_k));
    walk(rows, 0, max_k, 0, &mut out);
    out
}

/// Build a 2n×n generator, row by row, in which no XOR of at most `s` rows is
/// a unit vector. Each row is resampled until it forms no such combination
/// with the others; a row fixed later never reintroduces a combination that
/// excludes it, so a single pass suffices.
fn diffusive_generator(n: usize, s: usize, rng: &mut RngStream) -> Option<Vec<u64>> {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut rows: Vec<u64> = (0..2 * n).map(|_| rng.next_u64() & mask).collect();
    for r in 0..2 * n {
        let others: Vec<u64> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != r)
            .map(|(_, v)| *v)
            .collect();
        let sums = subset_sums(&others, s - 1);
        let mut resamples = 0;
        while (0..n).any(|j| sums.contains(&(rows[r] ^ (1u64 << j)))) {
            resamples += 1;
            if resamples > 1000 {
                return None;
            }
            rows[r] = rng.next_u64() & mask;
        }
    }
    Some(rows)
}

/// A = [A_L | A_L ⊕ G] with A_L uniform, so that A·(M‖M) = G·M.
fn matrix_with_generator(n: usize, generator: &[u64], rng: &mut RngStream) -> Gf2Matrix {
    let mut a = Gf2Matrix::random(2 * n, 2 * n, rng);
    for (i, row) in generator.iter().enumerate() {
        for j in 0..n {
            let g = (row >> j) & 1 == 1;
            let left = a.get(i, j);
            a.set(i, n + j, left ^ g);
        }
    }
    a
}

fn admissible(a: &Gf2Matrix, subset_size: usize, rng: &mut RngStream) -> bool {
    a.determinant()
        && single_flip_detectable(a)
        && diffusion_exhaustive(a, subset_size).unwrap_or(true)
        && diffusion_check(a, subset_size, ADMISSION_TRIALS, rng)
}

/// Generate a 2n×2n matrix that is nonsingular, catches every single-bit
/// flip, and diffuses at subset size ⌊n/4⌋.
///
/// When the subset-sum tables fit in memory the effective generator is built
/// row-by-row with rejection (see [`diffusive_generator`]) and admission
/// includes the exhaustive diffusion test; otherwise whole matrices are
/// rejection-sampled against the randomized test only.
pub fn gen_nonsingular_gf2(n: usize, rng: &mut RngStream) -> Result<Gf2Matrix, CodeError> {
    assert!(n >= 1, "message length must be positive");
    let s = n / 4;
    let structured = n <= 64 && s >= 1 && subset_count(2 * n - 1, s - 1) <= SUBSET_SUM_BUDGET;
    for _ in 0..GENERATION_ATTEMPTS {
        let candidate = if structured {
            match diffusive_generator(n, s, rng) {
                Some(g) => matrix_with_generator(n, &g, rng),
                None => continue,
            }
        } else {
            Gf2Matrix::random(2 * n, 2 * n, rng)
        };
        if admissible(&candidate, s, rng) {
            return Ok(candidate);
        }
    }
    Err(CodeError::GenerationFailed(GENERATION_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::MmCodec;

    fn all_messages(n: usize) -> impl Iterator<Item = Bitstring> {
        (0..1u64 << n).map(move |v| Bitstring::from_u64(v, n))
    }

    /// Brute-force oracle: some nonempty XOR of the chosen generator rows is a unit vector.
    fn determines_some_bit(generator: &[Bitstring], subset: &[usize], n: usize) -> bool {
        (1u64..1 << subset.len()).any(|mask| {
            let mut acc = Bitstring::zeros(n);
            for (k, &p) in subset.iter().enumerate() {
                if (mask >> k) & 1 == 1 {
                    acc = &acc ^ &generator[p];
                }
            }
            acc.weight() == 1
        })
    }

    fn combinations(items: usize, k: usize) -> Vec<Vec<usize>> {
        fn go(items: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..items {
                cur.push(i);
                go(items, k, i + 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(items, k, 0, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn identity_behaves_like_mm() {
        for n in 1..=8 {
            let d = DiffusiveCodec::new(Gf2Matrix::identity(2 * n)).unwrap();
            let mm = MmCodec::new(n);
            for w in all_messages(2 * n) {
                let r = ReceivedWord::from(&w);
                assert_eq!(d.decode(&r), mm.decode(&r));
            }
            for m in all_messages(n) {
                assert_eq!(d.encode(&m), mm.encode(&m));
            }
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            DiffusiveCodec::new(Gf2Matrix::identity(3)),
            Err(CodeError::Dimension { .. })
        ));
        assert!(matches!(
            DiffusiveCodec::new(Gf2Matrix::zeros(4, 4)),
            Err(CodeError::Singular)
        ));
    }

    #[test]
    fn generated_matrix_is_invertible() {
        let mut rng = RngStream::new(1, 0);
        for n in [1, 3, 4, 8] {
            let a = gen_nonsingular_gf2(n, &mut rng).unwrap();
            assert!(a.determinant());
            let inv = a.inverse().unwrap();
            assert_eq!(a.mul(&inv), Gf2Matrix::identity(2 * n));
        }
    }

    #[test]
    fn round_trip_random() {
        let mut rng = RngStream::new(2, 0);
        let codecs: Vec<DiffusiveCodec> = (0..10)
            .map(|_| DiffusiveCodec::new(gen_nonsingular_gf2(12, &mut rng).unwrap()).unwrap())
            .collect();
        for i in 0..1000 {
            let c = &codecs[i % codecs.len()];
            let m = Bitstring::random(12, &mut rng);
            assert_eq!(c.decode(&c.encode(&m).into()), DecodeVerdict::accept(m));
        }
    }

    #[test]
    fn linearity_exhaustive() {
        let mut rng = RngStream::new(3, 0);
        for n in 1..=6 {
            let c = DiffusiveCodec::new(gen_nonsingular_gf2(n, &mut rng).unwrap()).unwrap();
            for m1 in all_messages(n) {
                for m2 in all_messages(n) {
                    assert_eq!(c.encode(&(&m1 ^ &m2)), &c.encode(&m1) ^ &c.encode(&m2));
                }
            }
        }
    }

    #[test]
    fn single_flips_always_rejected() {
        let mut rng = RngStream::new(4, 0);
        for n in 1..=8 {
            let c = DiffusiveCodec::new(gen_nonsingular_gf2(n, &mut rng).unwrap()).unwrap();
            for m in all_messages(n) {
                let w = c.encode(&m);
                for i in 0..2 * n {
                    let mut bad = w.clone();
                    bad.flip(i);
                    assert!(!c.decode(&bad.into()).is_accept(), "n={n} m={m} flip {i}");
                }
            }
        }
    }

    #[test]
    fn position_functional_matches_encoding() {
        let mut rng = RngStream::new(5, 0);
        let c = DiffusiveCodec::new(gen_nonsingular_gf2(6, &mut rng).unwrap()).unwrap();
        for m in all_messages(6) {
            let w = c.encode(&m);
            for i in 0..12 {
                let f = c.position_functional(i).unwrap();
                let dot = f.iter().zip(m.iter()).filter(|(a, b)| *a && *b).count() % 2 == 1;
                assert_eq!(w[i], dot);
            }
        }
    }

    #[test]
    fn identity_fails_diffusion() {
        let mut rng = RngStream::new(6, 0);
        let id = Gf2Matrix::identity(8);
        assert!(!diffusion_check(&id, 1, 10, &mut rng));
        assert_eq!(diffusion_exhaustive(&id, 1), Some(false));
        assert!(diffusion_check(&id, 0, 10, &mut rng));
        assert_eq!(diffusion_exhaustive(&id, 0), Some(true));
    }

    #[test]
    #[should_panic(expected = "exceeds codeword length")]
    fn oversized_subset_is_a_defect() {
        let mut rng = RngStream::new(6, 0);
        diffusion_check(&Gf2Matrix::identity(4), 5, 1, &mut rng);
    }

    #[test]
    fn exhaustive_agrees_with_brute_force() {
        let mut rng = RngStream::new(7, 0);
        for trial in 0..40 {
            let n = 4 + trial % 3;
            let a = Gf2Matrix::random(2 * n, 2 * n, &mut rng);
            let generator = effective_generator(&a);
            for s in 1..=3 {
                let brute = (1..=s)
                    .flat_map(|k| combinations(2 * n, k))
                    .any(|sub| determines_some_bit(&generator, &sub, n));
                assert_eq!(diffusion_exhaustive(&a, s), Some(!brute), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn randomized_check_agrees_with_brute_force_per_subset() {
        // Matrices built for s=2 must pass every 2-subset under the brute-force oracle.
        let mut rng = RngStream::new(8, 0);
        let a = gen_nonsingular_gf2(8, &mut rng).unwrap();
        let generator = effective_generator(&a);
        for sub in combinations(16, 2) {
            assert!(!determines_some_bit(&generator, &sub, 8), "{sub:?}");
        }
        assert!(diffusion_check(&a, 2, 1000, &mut rng));
    }

    #[test]
    fn subset_counts() {
        assert_eq!(subset_count(5, 0), 1);
        assert_eq!(subset_count(5, 2), 1 + 5 + 10);
        assert_eq!(subset_count(3, 9), 8);
        assert_eq!(subset_sums(&[1, 2, 4], 3).len(), 8);
        assert_eq!(subset_sums(&[1, 2, 4], 1).len(), 4);
    }
}
