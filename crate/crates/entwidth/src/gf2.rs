//! Binary linear algebra over GF(2).
//!
//! Rows are bit-packed into `u64` words so that row elimination is a handful
//! of word-wide XORs. Rank of adjacency submatrices (the cut rank) is the
//! inner loop of the rank-width search, so this module stays allocation-light:
//! [`rank_of_rows`] eliminates in place on a scratch buffer.

use crate::error::{domain, Result};
use crate::graph::Graph;

/// Dense bit vector backed by `u64` words. Bit `i` lives at
/// `words[i / 64] >> (i % 64)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor_assign: length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "and_assign: length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the lowest set bit, or `None` for the zero vector.
    pub fn first_set(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Dot product over GF(2).
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "dot: length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            & 1
            == 1
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

/// Dense binary matrix with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVec>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows).map(|_| BitVec::zeros(cols)).collect(),
        }
    }

    pub fn from_rows(cols: usize, data: Vec<BitVec>) -> Self {
        for row in &data {
            assert_eq!(row.len(), cols, "row length mismatch");
        }
        Self {
            rows: data.len(),
            cols,
            data,
        }
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.data[r].set(c, true);
                }
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
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value);
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.data[r]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// GF(2) row rank. Rank of any r×0 or 0×c matrix is 0.
    pub fn rank(&self) -> usize {
        let mut scratch: Vec<BitVec> = self.data.clone();
        rank_of_rows(&mut scratch)
    }
}

/// Rank of a set of bit rows via in-place Gaussian elimination.
///
/// Pivots are chosen as the lowest set bit of each remaining row; rows are
/// consumed in order, which keeps the procedure deterministic.
pub fn rank_of_rows(rows: &mut [BitVec]) -> usize {
    let mut rank = 0;
    for i in 0..rows.len() {
        let Some(p) = rows[i].first_set() else {
            continue;
        };
        rank += 1;
        let (head, tail) = rows.split_at_mut(i + 1);
        let pivot_row = &head[i];
        for other in tail.iter_mut() {
            if other.get(p) {
                other.xor_assign(pivot_row);
            }
        }
    }
    rank
}

/// GF(2) rank of the adjacency submatrix Γ(A, V∖A).
///
/// Rows are the adjacency rows of `A`'s vertices masked to the complement,
/// so no column compaction is needed. Empty or full `A` gives rank 0.
pub fn cut_rank(g: &Graph, part: &[usize]) -> Result<usize> {
    let n = g.vertex_count();
    let mut in_part = BitVec::zeros(n);
    for &v in part {
        if v >= n {
            return Err(domain(format!(
                "cut_rank: vertex {v} out of range for graph on {n} vertices"
            )));
        }
        in_part.set(v, true);
    }
    let mut mask = BitVec::zeros(n);
    for v in 0..n {
        if !in_part.get(v) {
            mask.set(v, true);
        }
    }
    let mut rows: Vec<BitVec> = in_part
        .ones()
        .map(|v| {
            let mut row = g.adjacency_row(v).clone();
            row.and_assign(&mask);
            row
        })
        .collect();
    Ok(rank_of_rows(&mut rows))
}
