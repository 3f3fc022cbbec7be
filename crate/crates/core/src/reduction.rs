//! Local conversion of a bipartite graph state into isolated entangled pairs
//! plus isolated `|+>` sites, expressed as classical post-processing.
//!
//! For adjacency `A` (rows B, columns W) we pick invertible `C` (on B) and
//! `D` (on W) with `C^-1 A D = [[I, 0], [0, 0]]`, the identity block having
//! size `rank(A)`. A test that measures X on B and Z on W then only needs to
//! compare `C^-1 x` with `D^-1 z` coordinate-wise; the swapped measurement
//! pattern compares `D^T x` with `C^T z`.

use std::fmt;

use thiserror::Error;

use crate::gf2::{extend_to_basis, BitMatrix, BitVector, Gf2Error, SpanTracker};
use crate::graphs::BipartiteGraphState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("reduced adjacency is not in block-identity form")]
    BlockForm,
}

/// Which half of the test copies a relation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestGroup {
    /// X on B, Z on W: checks the stabilizers centred on black vertices.
    First,
    /// Z on B, X on W: checks the stabilizers centred on white vertices.
    Second,
}

impl TestGroup {
    pub fn number(self) -> u8 {
        match self {
            TestGroup::First => 1,
            TestGroup::Second => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(TestGroup::First),
            2 => Some(TestGroup::Second),
            _ => None,
        }
    }
}

/// A parity relation `<x_mask, x> = <z_mask, z>` between the X-basis
/// outcomes and the Z-basis outcomes of one test copy.
///
/// For group 1 the X side is B and the Z side is W; for group 2 it is the
/// other way round.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CheckRelation {
    pub x_mask: BitVector,
    pub z_mask: BitVector,
    pub group: TestGroup,
}

impl CheckRelation {
    pub fn holds(&self, x: &BitVector, z: &BitVector) -> bool {
        assert_eq!(x.len(), self.x_mask.len(), "x outcome length");
        assert_eq!(z.len(), self.z_mask.len(), "z outcome length");
        self.x_mask.dot_unchecked(x) == self.z_mask.dot_unchecked(z)
    }

    /// The relation as a single vector `x_mask || z_mask`.
    pub fn as_vector(&self) -> BitVector {
        self.x_mask.concat(&self.z_mask)
    }
}

impl fmt::Display for CheckRelation {
    /// 1-based, e.g. `X1 + X2 = Z1` or `X1 + X2 = 0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |mask: &BitVector, name: &str| {
            let terms: Vec<String> = mask
                .iter_ones()
                .map(|i| format!("{name}{}", i + 1))
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            }
        };
        write!(
            f,
            "{} = {}",
            side(&self.x_mask, "X"),
            side(&self.z_mask, "Z")
        )
    }
}

/// The stabilizer relations observed by one test group: `x = A z` for group
/// 1 (one relation per black vertex) and `x = A^T z` for group 2 (one per
/// white vertex).
pub fn check_relations(g: &BipartiteGraphState, group: TestGroup) -> Vec<CheckRelation> {
    let (x_len, rows) = match group {
        TestGroup::First => (g.n_b(), g.adjacency()),
        TestGroup::Second => (g.n_w(), g.adjacency_t()),
    };
    (0..x_len)
        .map(|v| CheckRelation {
            x_mask: BitVector::unit(x_len, v),
            z_mask: rows.row(v).clone(),
            group,
        })
        .collect()
}

/// True iff two relation lists generate the same space of parity checks.
pub fn same_relation_span(a: &[CheckRelation], b: &[CheckRelation]) -> bool {
    let dim = match a.first().or(b.first()) {
        Some(r) => r.x_mask.len() + r.z_mask.len(),
        None => return true,
    };
    let mut span_a = SpanTracker::new(dim);
    for r in a {
        span_a.insert(&r.as_vector());
    }
    let mut span_b = SpanTracker::new(dim);
    for r in b {
        span_b.insert(&r.as_vector());
    }
    span_a.rank() == span_b.rank() && b.iter().all(|r| span_a.contains(&r.as_vector()))
}

/// Precomputed conversion matrices for one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    n_b: usize,
    n_w: usize,
    n_prime: usize,
    c_mat: BitMatrix,
    d_mat: BitMatrix,
    c_inv: BitMatrix,
    d_inv: BitMatrix,
    c_t: BitMatrix,
    d_t: BitMatrix,
}

impl Reduction {
    /// Builds `C` from a column-space basis of `A` completed with standard
    /// vectors, and `D` from the matching preimages followed by a kernel
    /// basis. The block form of `C^-1 A D` is verified before returning.
    pub fn compute(g: &BipartiteGraphState) -> Result<Self, ReductionError> {
        let a = g.adjacency();
        let (n_b, n_w) = (g.n_b(), g.n_w());
        let (c_basis, d_pre) = a.column_space_basis();
        let n_prime = c_basis.len();

        let mut c_cols = c_basis;
        c_cols.extend(extend_to_basis(&c_cols, n_b)?);
        let mut d_cols = d_pre;
        d_cols.extend(a.kernel_basis());

        let c_mat = BitMatrix::from_columns(n_b, &c_cols)?;
        let d_mat = BitMatrix::from_columns(n_w, &d_cols)?;
        let c_inv = c_mat.inverse()?;
        let d_inv = d_mat.inverse()?;

        let reduced = c_inv.mul(a)?.mul(&d_mat)?;
        if reduced != block_identity(n_b, n_w, n_prime) {
            return Err(ReductionError::BlockForm);
        }
        Ok(Self {
            n_b,
            n_w,
            n_prime,
            c_t: c_mat.transpose(),
            d_t: d_mat.transpose(),
            c_mat,
            d_mat,
            c_inv,
            d_inv,
        })
    }

    /// Rank of the adjacency matrix: the number of entangled pairs left
    /// after conversion.
    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn c(&self) -> &BitMatrix {
        &self.c_mat
    }

    pub fn d(&self) -> &BitMatrix {
        &self.d_mat
    }

    pub fn c_inv(&self) -> &BitMatrix {
        &self.c_inv
    }

    pub fn d_inv(&self) -> &BitMatrix {
        &self.d_inv
    }

    pub fn c_t(&self) -> &BitMatrix {
        &self.c_t
    }

    pub fn d_t(&self) -> &BitMatrix {
        &self.d_t
    }

    /// The reduced adjacency `C^-1 A D`.
    pub fn reduced_adjacency(&self) -> BitMatrix {
        block_identity(self.n_b, self.n_w, self.n_prime)
    }

    /// Group-1 data: X outcomes on B and Z outcomes on W mapped to
    /// `(C^-1 x, D^-1 z)`.
    pub fn convert_group1(
        &self,
        x_b: &BitVector,
        z_w: &BitVector,
    ) -> Result<(BitVector, BitVector), ReductionError> {
        Ok((self.c_inv.mul_vec(x_b)?, self.d_inv.mul_vec(z_w)?))
    }

    /// Group-2 data: Z outcomes on B and X outcomes on W mapped to
    /// `(C^T z, D^T x)`.
    pub fn convert_group2(
        &self,
        z_b: &BitVector,
        x_w: &BitVector,
    ) -> Result<(BitVector, BitVector), ReductionError> {
        Ok((self.c_t.mul_vec(z_b)?, self.d_t.mul_vec(x_w)?))
    }

    /// Checks in converted coordinates, written back as relations on the raw
    /// outcomes. Group 1: `(C^-1 x)_i = (D^-1 z)_i` for `i < n'` and
    /// `(C^-1 x)_i = 0` after that. Group 2: `(D^T x)_i = (C^T z)_i` for
    /// `i < n'` and `(D^T x)_i = 0` after that.
    pub fn converted_relations(&self, group: TestGroup) -> Vec<CheckRelation> {
        let (x_rows, z_rows, x_len, z_len) = match group {
            TestGroup::First => (&self.c_inv, &self.d_inv, self.n_b, self.n_w),
            TestGroup::Second => (&self.d_t, &self.c_t, self.n_w, self.n_b),
        };
        (0..x_len)
            .map(|i| CheckRelation {
                x_mask: x_rows.row(i).clone(),
                z_mask: if i < self.n_prime {
                    z_rows.row(i).clone()
                } else {
                    BitVector::zeros(z_len)
                },
                group,
            })
            .collect()
    }

    /// Evaluates the converted checks on raw outcomes of a group-1 copy
    /// (`x` on B, `z` on W) or a group-2 copy (`x` on W, `z` on B).
    pub fn converted_checks_hold(
        &self,
        group: TestGroup,
        x: &BitVector,
        z: &BitVector,
    ) -> Result<bool, ReductionError> {
        let (cx, cz) = match group {
            TestGroup::First => self.convert_group1(x, z)?,
            TestGroup::Second => {
                let (cz, cx) = self.convert_group2(z, x)?;
                (cx, cz)
            }
        };
        let ok = (0..cx.len()).all(|i| {
            let expected = i < self.n_prime && cz.get(i);
            cx.get(i) == expected
        });
        Ok(ok)
    }
}

fn block_identity(rows: usize, cols: usize, n: usize) -> BitMatrix {
    let mut m = BitMatrix::zeros(rows, cols);
    for i in 0..n {
        m.set(i, i, true);
    }
    m
}
