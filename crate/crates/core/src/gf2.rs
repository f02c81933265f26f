//! Bit-packed linear algebra over GF(2).
//!
//! [`BitMatrix`] stores rows contiguously, 64 columns per `u64` word, with the
//! bits past `cols` in each row's last word kept at zero. Row XOR is the hot
//! operation: rank computations walk the columns in order and combine whole
//! rows.
//!
//! [`XorBasis`] is the incremental counterpart: it tracks the span of a
//! growing list of vectors, so inserting rows one at a time yields the ranks of
//! all row prefixes in a single pass.

use std::fmt;

use crate::error::{check_index, Error, Result};

pub const WORD_BITS: usize = 64;

/// Number of `u64` words needed to hold `bits` bits.
#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(cols: usize) -> u64 {
    match cols % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Dense GF(2) matrix, row-major, 64 columns per word.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from strings of `'0'`/`'1'` (other characters are
    /// skipped, so `"1100 0110"` is accepted). All rows must have equal length.
    pub fn from_bit_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                r.as_ref()
                    .chars()
                    .filter(|c| *c == '0' || *c == '1')
                    .map(|c| c == '1')
                    .collect()
            })
            .collect();
        let cols = parsed.first().map_or(0, Vec::len);
        if parsed.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged bit-string rows".into()));
        }
        let mut m = Self::zeros(parsed.len(), cols);
        for (i, row) in parsed.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Words per row.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        (self.data[row * self.stride + col / WORD_BITS] >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.rows && col < self.cols);
        let w = &mut self.data[row * self.stride + col / WORD_BITS];
        let bit = 1u64 << (col % WORD_BITS);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[u64] {
        &self.data[row * self.stride..(row + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [u64] {
        &mut self.data[row * self.stride..(row + 1) * self.stride]
    }

    /// Overwrites row `row` with `words`; bits beyond `cols` are cleared.
    pub fn set_row_words(&mut self, row: usize, words: &[u64]) {
        let stride = self.stride;
        let mask = tail_mask(self.cols);
        let dst = self.row_mut(row);
        dst.copy_from_slice(&words[..stride]);
        if let Some(last) = dst.last_mut() {
            *last &= mask;
        }
    }

    /// `row[dst] ^= row[src]`.
    pub fn row_xor_in_place(&mut self, dst: usize, src: usize) -> Result<()> {
        check_index(dst, self.rows)?;
        check_index(src, self.rows)?;
        if dst == src {
            return Err(Error::InvalidArgument(
                "row_xor_in_place requires dst != src".into(),
            ));
        }
        self.xor_rows_from(dst, src, 0);
        Ok(())
    }

    /// XOR row `src` into row `dst` starting at word `from`; `dst != src`.
    #[inline]
    fn xor_rows_from(&mut self, dst: usize, src: usize, from: usize) {
        let s = self.stride;
        let (d, sr) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..dst * s + s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..src * s + s])
        };
        for (a, b) in d[from..].iter_mut().zip(&sr[from..]) {
            *a ^= *b;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        let (lo, hi) = self.data.split_at_mut(a.max(b) * s);
        lo[a.min(b) * s..a.min(b) * s + s].swap_with_slice(&mut hi[..s]);
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (w, &word) in self.row(i).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    t.set(w * WORD_BITS + b, i, true);
                    bits &= bits - 1;
                }
            }
        }
        t
    }

    /// GF(2) rank. The matrix itself is left untouched.
    pub fn rank(&self) -> usize {
        self.clone().rank_in_place()
    }

    /// Rank by column-ordered elimination; destroys the contents.
    pub fn rank_in_place(&mut self) -> usize {
        let cols = self.cols;
        self.eliminate(cols, |_, _| {})
    }

    /// Ranks of the column prefixes `[0, b)` for every `b` in `boundaries`,
    /// computed in one elimination pass.
    pub fn prefix_ranks(&self, boundaries: &[usize]) -> Result<Vec<usize>> {
        self.clone().prefix_ranks_in_place(boundaries)
    }

    /// As [`prefix_ranks`](Self::prefix_ranks), destroying the contents.
    pub fn prefix_ranks_in_place(&mut self, boundaries: &[usize]) -> Result<Vec<usize>> {
        validate_boundaries(boundaries, self.cols)?;
        let mut out = Vec::with_capacity(boundaries.len());
        let mut next = 0;
        while next < boundaries.len() && boundaries[next] == 0 {
            out.push(0);
            next += 1;
        }
        let last = boundaries.last().copied().unwrap_or(0);
        self.eliminate(last, |col, rank| {
            while next < boundaries.len() && boundaries[next] == col + 1 {
                out.push(rank);
                next += 1;
            }
        });
        Ok(out)
    }

    /// Gaussian elimination over the first `upto` columns, calling
    /// `after_col(col, rank_so_far)` once each column has been processed.
    fn eliminate(&mut self, upto: usize, mut after_col: impl FnMut(usize, usize)) -> usize {
        let mut rank = 0;
        for col in 0..upto {
            if rank < self.rows {
                let w = col / WORD_BITS;
                let bit = 1u64 << (col % WORD_BITS);
                let pivot = (rank..self.rows).find(|&r| self.data[r * self.stride + w] & bit != 0);
                if let Some(p) = pivot {
                    self.swap_rows(rank, p);
                    for r in rank + 1..self.rows {
                        if self.data[r * self.stride + w] & bit != 0 {
                            self.xor_rows_from(r, rank, w);
                        }
                    }
                    rank += 1;
                }
            }
            after_col(col, rank);
        }
        rank
    }
}

fn validate_boundaries(boundaries: &[usize], limit: usize) -> Result<()> {
    for (i, &b) in boundaries.iter().enumerate() {
        if b > limit {
            return Err(Error::IndexOutOfRange { index: b, limit });
        }
        if i > 0 && b <= boundaries[i - 1] {
            return Err(Error::InvalidArgument(format!(
                "boundaries must be strictly increasing (got {} after {})",
                b,
                boundaries[i - 1]
            )));
        }
    }
    Ok(())
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Incrementally maintained span of GF(2) vectors of a fixed bit length.
///
/// Each stored vector's lowest set bit is its pivot, and pivots are distinct,
/// so reduction only ever clears the current lowest bit and moves upward.
#[derive(Clone, Debug)]
pub struct XorBasis {
    words: usize,
    vectors: Vec<u64>,
    pivot_owner: Vec<u32>,
    scratch: Vec<u64>,
}

const NO_OWNER: u32 = u32::MAX;

impl XorBasis {
    pub fn new(bits: usize) -> Self {
        let words = words_for(bits);
        Self {
            words,
            vectors: Vec::new(),
            pivot_owner: vec![NO_OWNER; words * WORD_BITS],
            scratch: vec![0; words],
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len() / self.words.max(1)
    }

    pub fn clear(&mut self) {
        self.vectors.clear();
        self.pivot_owner.fill(NO_OWNER);
    }

    /// Adds `v` to the span; returns `true` when it was independent.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let n = self.words;
        if n == 0 {
            return false;
        }
        self.scratch.copy_from_slice(&v[..n]);
        let mut w = 0;
        while w < n {
            let word = self.scratch[w];
            if word == 0 {
                w += 1;
                continue;
            }
            let bit = w * WORD_BITS + word.trailing_zeros() as usize;
            let owner = self.pivot_owner[bit];
            if owner == NO_OWNER {
                self.pivot_owner[bit] = (self.vectors.len() / n) as u32;
                self.vectors.extend_from_slice(&self.scratch);
                return true;
            }
            let base = owner as usize * n;
            for k in w..n {
                self.scratch[k] ^= self.vectors[base + k];
            }
        }
        false
    }

    /// Ranks after inserting each prefix of `rows`, boundaries given as prefix
    /// lengths (strictly increasing, each at most `rows.len()`).
    pub fn prefix_ranks<'a, I>(bits: usize, rows: I, boundaries: &[usize]) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a [u64]>,
    {
        let rows: Vec<&[u64]> = rows.into_iter().collect();
        validate_boundaries(boundaries, rows.len())?;
        let mut basis = XorBasis::new(bits);
        let mut out = Vec::with_capacity(boundaries.len());
        let mut inserted = 0;
        for &b in boundaries {
            while inserted < b {
                basis.insert(rows[inserted]);
                inserted += 1;
            }
            out.push(basis.rank());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.random_bool(0.5));
            }
        }
        m
    }

    /// Rank by enumerating the row span: |span| = 2^rank.
    fn span_rank(m: &BitMatrix) -> usize {
        assert!(m.rows() <= 12 && m.cols() <= 64);
        let rows: Vec<u64> = (0..m.rows()).map(|r| m.row(r)[0]).collect();
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << rows.len()) {
            let mut v = 0u64;
            for (i, r) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    v ^= r;
                }
            }
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::zeros(0, 0).rank(), 0);
        assert_eq!(BitMatrix::identity(5).rank(), 5);
        let m = BitMatrix::from_bit_strings(&["1100", "0110", "1010"]).unwrap();
        assert_eq!(span_rank(&m), 2);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rank_does_not_mutate() {
        let m = BitMatrix::from_bit_strings(&["1100", "0110", "1010"]).unwrap();
        let before = m.clone();
        let _ = m.rank();
        assert_eq!(m, before);
    }

    #[test]
    fn prefix_ranks_examples() {
        let id = BitMatrix::identity(4);
        assert_eq!(id.prefix_ranks(&[1, 2, 3, 4]).unwrap(), vec![1, 2, 3, 4]);
        let z = BitMatrix::zeros(6, 9);
        assert_eq!(z.prefix_ranks(&[0, 3, 9]).unwrap(), vec![0, 0, 0]);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(20, 30, &mut rng);
        let got = m.prefix_ranks(&[10, 20, 30]).unwrap();
        let expect: Vec<usize> = [10, 20, 30]
            .iter()
            .map(|&b| {
                let mut sub = BitMatrix::zeros(20, b);
                for r in 0..20 {
                    for c in 0..b {
                        sub.set(r, c, m.get(r, c));
                    }
                }
                sub.rank()
            })
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn prefix_ranks_rejects_bad_boundaries() {
        let m = BitMatrix::identity(4);
        assert!(matches!(m.prefix_ranks(&[5]), Err(Error::IndexOutOfRange { .. })));
        assert!(m.prefix_ranks(&[2, 2]).is_err());
        assert!(m.prefix_ranks(&[3, 1]).is_err());
    }

    #[test]
    fn row_xor_examples() {
        let mut m = BitMatrix::from_bit_strings(&["101", "011", "000"]).unwrap();
        m.row_xor_in_place(0, 1).unwrap();
        assert!(m.get(0, 0) && m.get(0, 1) && !m.get(0, 2));
        let before = m.row(1).to_vec();
        m.row_xor_in_place(1, 2).unwrap();
        assert_eq!(m.row(1), &before[..]);
        assert!(m.row_xor_in_place(1, 1).is_err());
        assert!(m.row_xor_in_place(3, 0).is_err());
    }

    #[test]
    fn row_xor_matches_bitwise_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m0 = random_matrix(2, 128, &mut rng);
        let mut m = m0.clone();
        m.row_xor_in_place(0, 1).unwrap();
        for c in 0..128 {
            assert_eq!(m.get(0, c), m0.get(0, c) ^ m0.get(1, c));
            assert_eq!(m.get(1, c), m0.get(1, c));
        }
    }

    #[test]
    fn xor_basis_matches_transposed_column_prefixes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows = rng.random_range(1..40);
            let cols = rng.random_range(1..90);
            let m = random_matrix(rows, cols, &mut rng);
            let bounds: Vec<usize> = (1..=cols).collect();
            let by_cols = m.prefix_ranks(&bounds).unwrap();
            let t = m.transpose();
            let by_rows =
                XorBasis::prefix_ranks(rows, (0..cols).map(|r| t.row(r)), &bounds).unwrap();
            assert_eq!(by_cols, by_rows);
        }
    }

    proptest! {
        #[test]
        fn rank_bounded_and_invariant(seed in any::<u64>(), rows in 0usize..24, cols in 0usize..150) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(rows, cols, &mut rng);
            let r = m.rank();
            prop_assert!(r <= rows.min(cols));
            if rows >= 2 {
                let mut m2 = m.clone();
                for _ in 0..10 {
                    let a = rng.random_range(0..rows);
                    let b = rng.random_range(0..rows);
                    if a == b { continue; }
                    if rng.random_bool(0.5) { m2.swap_rows(a, b) } else { m2.row_xor_in_place(a, b).unwrap() }
                }
                prop_assert_eq!(m2.rank(), r);
            }
            prop_assert_eq!(m.prefix_ranks(&[cols]).unwrap().last().copied().unwrap_or(0), if cols == 0 { 0 } else { r });
        }

        #[test]
        fn set_get_round_trip(rows in 1usize..10, cols in 1usize..200, r in 0usize..10, c in 0usize..200, v in any::<bool>()) {
            let (r, c) = (r % rows, c % cols);
            let mut m = BitMatrix::zeros(rows, cols);
            m.set(r, c, v);
            prop_assert_eq!(m.get(r, c), v);
            m.set(r, c, !v);
            prop_assert_eq!(m.get(r, c), !v);
        }
    }

    #[test]
    fn trailing_bits_stay_clear() {
        let mut m = BitMatrix::zeros(2, 70);
        m.set_row_words(0, &[u64::MAX, u64::MAX]);
        assert_eq!(m.row(0)[1], (1 << 6) - 1);
    }
}
