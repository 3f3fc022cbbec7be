//! Dense linear algebra over GF(2).
//!
//! Vectors are packed into `u64` words, matrices are stored as a list of
//! packed rows. Every basis-selection routine here is deterministic: pivots
//! are taken leftmost-first and completions use standard basis vectors in
//! index order, so the same input always yields the same basis.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: {context} ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular (rank {rank} < {dim})")]
    SingularMatrix { rank: usize, dim: usize },
    #[error("input vectors are linearly dependent")]
    DependentInput,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A vector in GF(2)^len.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// The standard basis vector with a single 1 at `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from 0/1 entries; any nonzero entry counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of the set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + tz)
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.iter_ones().next()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn xor_assign(&mut self, other: &BitVector) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                context: "vector xor",
                left: self.len,
                right: other.len,
            });
        }
        self.xor_assign_unchecked(other);
        Ok(())
    }

    #[inline]
    pub(crate) fn xor_assign_unchecked(&mut self, other: &BitVector) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector, Gf2Error> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    /// Inner product over GF(2): parity of the bitwise AND.
    pub fn dot(&self, other: &BitVector) -> Result<bool, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                context: "vector dot",
                left: self.len,
                right: other.len,
            });
        }
        Ok(self.dot_unchecked(other))
    }

    #[inline]
    pub(crate) fn dot_unchecked(&self, other: &BitVector) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    /// Concatenation `self || other`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.len + other.len);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A dense `rows x cols` matrix over GF(2), stored row-major as packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from row slices of 0/1 entries.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let data: Vec<BitVector> = rows
            .iter()
            .map(|r| {
                assert_eq!(r.as_ref().len(), cols, "ragged rows");
                BitVector::from_bits(r.as_ref())
            })
            .collect();
        Self {
            rows: data.len(),
            cols,
            data,
        }
    }

    /// Stacks row vectors; all must have length `cols`.
    pub fn from_row_vectors(cols: usize, rows: Vec<BitVector>) -> Result<Self, Gf2Error> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Gf2Error::DimensionMismatch {
                context: "row length",
                left: bad.len(),
                right: cols,
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[BitVector]) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Gf2Error::DimensionMismatch {
                    context: "column length",
                    left: c.len(),
                    right: rows,
                });
            }
            for i in c.iter_ones() {
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value)
    }

    pub fn row(&self, r: usize) -> &BitVector {
        &self.data[r]
    }

    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for (r, row) in self.data.iter().enumerate() {
            if row.get(c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && self
                .data
                .iter()
                .enumerate()
                .all(|(i, row)| row.count_ones() == 1 && row.get(i))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BitVector::is_zero)
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                context: "matrix product",
                left: self.cols,
                right: other.rows,
            });
        }
        let data = self
            .data
            .iter()
            .map(|row| {
                let mut acc = BitVector::zeros(other.cols);
                for k in row.iter_ones() {
                    acc.xor_assign_unchecked(&other.data[k]);
                }
                acc
            })
            .collect();
        Ok(BitMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector, Gf2Error> {
        if self.cols != v.len() {
            return Err(Gf2Error::DimensionMismatch {
                context: "matrix-vector product",
                left: self.cols,
                right: v.len(),
            });
        }
        Ok(self.mul_vec_unchecked(v))
    }

    #[inline]
    pub(crate) fn mul_vec_unchecked(&self, v: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.rows);
        for (r, row) in self.data.iter().enumerate() {
            if row.dot_unchecked(v) {
                out.set(r, true);
            }
        }
        out
    }

    /// Reduced row echelon form together with the pivot columns.
    fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..m.cols {
            if next == m.rows {
                break;
            }
            let Some(p) = (next..m.rows).find(|&r| m.data[r].get(c)) else {
                continue;
            };
            m.data.swap(next, p);
            let pivot_row = m.data[next].clone();
            for r in 0..m.rows {
                if r != next && m.data[r].get(c) {
                    m.data[r].xor_assign_unchecked(&pivot_row);
                }
            }
            pivots.push(c);
            next += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Inverse by Gauss-Jordan elimination on `[M | I]`.
    pub fn inverse(&self) -> Result<BitMatrix, Gf2Error> {
        if self.rows != self.cols {
            return Err(Gf2Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut left = self.clone();
        let mut right = BitMatrix::identity(n);
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| left.data[r].get(c)) else {
                return Err(Gf2Error::SingularMatrix {
                    rank: self.rank(),
                    dim: n,
                });
            };
            left.data.swap(c, p);
            right.data.swap(c, p);
            let (lp, rp) = (left.data[c].clone(), right.data[c].clone());
            for r in 0..n {
                if r != c && left.data[r].get(c) {
                    left.data[r].xor_assign_unchecked(&lp);
                    right.data[r].xor_assign_unchecked(&rp);
                }
            }
        }
        Ok(right)
    }

    /// Basis of the null space `{x : M x = 0}`.
    ///
    /// One vector per free column, in ascending column order; the vector for
    /// free column `f` has a 1 at `f` and the pivot values that cancel it.
    pub fn kernel_basis(&self) -> Vec<BitVector> {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = BitVector::unit(self.cols, free);
                for (row, &p) in pivots.iter().enumerate() {
                    if r.data[row].get(free) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    /// Basis of the column space, with a preimage for every basis vector.
    ///
    /// Columns are scanned left to right and kept when independent of those
    /// already kept; the preimage of kept column `j` is `e_j`.
    pub fn column_space_basis(&self) -> (Vec<BitVector>, Vec<BitVector>) {
        let mut span = SpanTracker::new(self.rows);
        let mut basis = Vec::new();
        let mut preimages = Vec::new();
        for j in 0..self.cols {
            let col = self.column(j);
            if span.insert(&col) {
                basis.push(col);
                preimages.push(BitVector::unit(self.cols, j));
            }
        }
        (basis, preimages)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for (i, row) in self.data.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{row}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for BitMatrix {
    /// One row per line, entries separated by spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.data.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            let cells: Vec<&str> = (0..self.cols)
                .map(|c| if row.get(c) { "1" } else { "0" })
                .collect();
            f.write_str(&cells.join(" "))?;
        }
        Ok(())
    }
}

/// Incremental independence test: keeps an echelon basis of the vectors
/// inserted so far, keyed by leading bit.
#[derive(Debug, Clone)]
pub struct SpanTracker {
    dim: usize,
    by_pivot: Vec<Option<BitVector>>,
    rank: usize,
}

impl SpanTracker {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            by_pivot: vec![None; dim],
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn reduce(&self, v: &BitVector) -> BitVector {
        let mut r = v.clone();
        while let Some(p) = r.first_one() {
            match &self.by_pivot[p] {
                Some(b) => r.xor_assign_unchecked(b),
                None => break,
            }
        }
        r
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        assert_eq!(v.len(), self.dim, "span dimension mismatch");
        self.reduce(v).is_zero()
    }

    /// Adds `v`; returns false (and changes nothing) when `v` is already in
    /// the span.
    pub fn insert(&mut self, v: &BitVector) -> bool {
        assert_eq!(v.len(), self.dim, "span dimension mismatch");
        let r = self.reduce(v);
        match r.first_one() {
            None => false,
            Some(p) => {
                self.by_pivot[p] = Some(r);
                self.rank += 1;
                true
            }
        }
    }
}

/// Rank of a set of vectors of common length `dim`.
pub fn rank_of(vectors: &[BitVector], dim: usize) -> usize {
    let mut span = SpanTracker::new(dim);
    for v in vectors {
        span.insert(v);
    }
    span.rank()
}

/// Completes `partial` to a basis of GF(2)^dim by appending `e_1, e_2, ...`
/// in index order, skipping those already in the running span. Returns only
/// the appended vectors.
pub fn extend_to_basis(partial: &[BitVector], dim: usize) -> Result<Vec<BitVector>, Gf2Error> {
    let mut span = SpanTracker::new(dim);
    for v in partial {
        if v.len() != dim {
            return Err(Gf2Error::DimensionMismatch {
                context: "basis vector length",
                left: v.len(),
                right: dim,
            });
        }
        if !span.insert(v) {
            return Err(Gf2Error::DependentInput);
        }
    }
    let mut added = Vec::with_capacity(dim - partial.len());
    for i in 0..dim {
        if span.rank() == dim {
            break;
        }
        let e = BitVector::unit(dim, i);
        if span.insert(&e) {
            added.push(e);
        }
    }
    Ok(added)
}
