//! Pauli attacks on a single copy of a graph state.
//!
//! An attack `X^u Z^v` (phases dropped) is split into its black and white
//! parts. Its syndromes against the two families of stabilizers decide
//! everything the protocol can observe about it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::BitVector;
use crate::graphs::BipartiteGraphState;
use crate::reduction::TestGroup;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error(
        "attack has shape ({u_b}, {u_w}, {v_b}, {v_w}) but the graph has n_b={n_b}, n_w={n_w}"
    )]
    Shape {
        u_b: usize,
        u_w: usize,
        v_b: usize,
        v_w: usize,
        n_b: usize,
        n_w: usize,
    },
    #[error("class {0} has no representative on a graph with n_b={1}, n_w={2}")]
    NoRepresentative(BlockClass, usize, usize),
}

/// `X^u Z^v` on one copy, with `u` and `v` split over B and W.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockPauli {
    pub u_b: BitVector,
    pub u_w: BitVector,
    pub v_b: BitVector,
    pub v_w: BitVector,
}

impl BlockPauli {
    pub fn identity(g: &BipartiteGraphState) -> Self {
        Self {
            u_b: BitVector::zeros(g.n_b()),
            u_w: BitVector::zeros(g.n_w()),
            v_b: BitVector::zeros(g.n_b()),
            v_w: BitVector::zeros(g.n_w()),
        }
    }

    /// Fixed representative of a block class: `Z` on the first black vertex
    /// for (1,0), `Z` on the first white vertex for (0,1), both for (1,1).
    pub fn canonical(g: &BipartiteGraphState, class: BlockClass) -> Result<Self, PauliError> {
        let mut p = Self::identity(g);
        if class.s {
            if g.n_b() == 0 {
                return Err(PauliError::NoRepresentative(class, g.n_b(), g.n_w()));
            }
            p.v_b.set(0, true);
        }
        if class.t {
            if g.n_w() == 0 {
                return Err(PauliError::NoRepresentative(class, g.n_b(), g.n_w()));
            }
            p.v_w.set(0, true);
        }
        Ok(p)
    }

    /// Uniformly random Pauli on the whole copy.
    pub fn random<R: Rng + ?Sized>(g: &BipartiteGraphState, rng: &mut R) -> Self {
        Self::iid(g, 0.5, 0.5, rng)
    }

    /// Independent X flips with probability `p_x` and Z flips with `p_z` on
    /// every qubit.
    pub fn iid<R: Rng + ?Sized>(g: &BipartiteGraphState, p_x: f64, p_z: f64, rng: &mut R) -> Self {
        let mut draw = |n: usize, p: f64| {
            let mut v = BitVector::zeros(n);
            for i in 0..n {
                if rng.random_bool(p) {
                    v.set(i, true);
                }
            }
            v
        };
        let u_b = draw(g.n_b(), p_x);
        let u_w = draw(g.n_w(), p_x);
        let v_b = draw(g.n_b(), p_z);
        let v_w = draw(g.n_w(), p_z);
        Self { u_b, u_w, v_b, v_w }
    }

    pub fn is_identity(&self) -> bool {
        self.u_b.is_zero() && self.u_w.is_zero() && self.v_b.is_zero() && self.v_w.is_zero()
    }

    /// Product of two attacks, phases dropped.
    pub fn compose(&self, other: &BlockPauli) -> Result<BlockPauli, crate::gf2::Gf2Error> {
        Ok(BlockPauli {
            u_b: self.u_b.xor(&other.u_b)?,
            u_w: self.u_w.xor(&other.u_w)?,
            v_b: self.v_b.xor(&other.v_b)?,
            v_w: self.v_w.xor(&other.v_w)?,
        })
    }

    fn check_shape(&self, g: &BipartiteGraphState) -> Result<(), PauliError> {
        if self.u_b.len() != g.n_b()
            || self.v_b.len() != g.n_b()
            || self.u_w.len() != g.n_w()
            || self.v_w.len() != g.n_w()
        {
            return Err(PauliError::Shape {
                u_b: self.u_b.len(),
                u_w: self.u_w.len(),
                v_b: self.v_b.len(),
                v_w: self.v_w.len(),
                n_b: g.n_b(),
                n_w: g.n_w(),
            });
        }
        Ok(())
    }
}

/// The pair `(s, t)`: whether the attack is visible to a group-1 test and
/// to a group-2 test respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockClass {
    pub s: bool,
    pub t: bool,
}

impl BlockClass {
    pub const CLEAN: BlockClass = BlockClass { s: false, t: false };
    pub const FIRST_ONLY: BlockClass = BlockClass { s: true, t: false };
    pub const SECOND_ONLY: BlockClass = BlockClass { s: false, t: true };
    pub const BOTH: BlockClass = BlockClass { s: true, t: true };

    pub fn new(s: bool, t: bool) -> Self {
        Self { s, t }
    }

    pub fn is_clean(self) -> bool {
        !self.s && !self.t
    }

    /// Whether a copy of this class fails a test in `group`.
    pub fn detected_by(self, group: TestGroup) -> bool {
        match group {
            TestGroup::First => self.s,
            TestGroup::Second => self.t,
        }
    }

    pub fn as_bits(self) -> [u8; 2] {
        [self.s as u8, self.t as u8]
    }
}

impl std::fmt::Display for BlockClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.s as u8, self.t as u8)
    }
}

/// Anticommutation pattern of an attack with the stabilizer generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Syndromes {
    /// One bit per black-centred stabilizer: `v_b + A u_w`.
    pub first: BitVector,
    /// One bit per white-centred stabilizer: `v_w + A^T u_b`.
    pub second: BitVector,
}

impl Syndromes {
    pub fn for_group(&self, group: TestGroup) -> &BitVector {
        match group {
            TestGroup::First => &self.first,
            TestGroup::Second => &self.second,
        }
    }

    pub fn class(&self) -> BlockClass {
        BlockClass::new(!self.first.is_zero(), !self.second.is_zero())
    }
}

pub fn syndromes(g: &BipartiteGraphState, p: &BlockPauli) -> Result<Syndromes, PauliError> {
    p.check_shape(g)?;
    let mut first = g.adjacency().mul_vec_unchecked(&p.u_w);
    first.xor_assign_unchecked(&p.v_b);
    let mut second = g.adjacency_t().mul_vec_unchecked(&p.u_b);
    second.xor_assign_unchecked(&p.v_w);
    Ok(Syndromes { first, second })
}

pub fn block_class(g: &BipartiteGraphState, p: &BlockPauli) -> Result<BlockClass, PauliError> {
    Ok(syndromes(g, p)?.class())
}

/// Overlap of the attacked copy with the ideal state: 1 exactly when the
/// attack is a stabilizer element, otherwise 0.
pub fn fidelity_indicator(g: &BipartiteGraphState, p: &BlockPauli) -> Result<bool, PauliError> {
    Ok(block_class(g, p)?.is_clean())
}

/// Raw outcomes of one test copy.
///
/// `x` holds the X-basis outcomes and `z` the Z-basis outcomes: on (B, W)
/// for group 1 and on (W, B) for group 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcomes {
    pub x: BitVector,
    pub z: BitVector,
}

/// Samples measurement outcomes of an attacked copy.
///
/// The graph state is a uniform superposition of `|A z>_X,B |z>_W`, so a
/// group-1 test sees `z` uniform and `x = A z`; the attack shifts the Z
/// outcomes by `u_w` and the X outcomes by `v_b`. Group 2 is the same with
/// `A^T` and the colours exchanged. In both cases `x + A z` (resp.
/// `x + A^T z`) equals the group's syndrome.
pub fn sample_outcomes<R: Rng + ?Sized>(
    g: &BipartiteGraphState,
    p: &BlockPauli,
    group: TestGroup,
    rng: &mut R,
) -> Result<Outcomes, PauliError> {
    p.check_shape(g)?;
    let (matrix, z_len, z_shift, x_shift) = match group {
        TestGroup::First => (g.adjacency(), g.n_w(), &p.u_w, &p.v_b),
        TestGroup::Second => (g.adjacency_t(), g.n_b(), &p.u_b, &p.v_w),
    };
    let mut ideal_z = BitVector::zeros(z_len);
    for i in 0..z_len {
        if rng.random_bool(0.5) {
            ideal_z.set(i, true);
        }
    }
    let mut x = matrix.mul_vec_unchecked(&ideal_z);
    x.xor_assign_unchecked(x_shift);
    let mut z = ideal_z;
    z.xor_assign_unchecked(z_shift);
    Ok(Outcomes { x, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{check_relations, Reduction};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path3() -> BipartiteGraphState {
        BipartiteGraphState::path(3).unwrap()
    }

    #[test]
    fn identity_has_no_syndrome() {
        let g = BipartiteGraphState::grid(3, 3).unwrap();
        let p = BlockPauli::identity(&g);
        let s = syndromes(&g, &p).unwrap();
        assert!(s.first.is_zero() && s.second.is_zero());
        assert_eq!(block_class(&g, &p).unwrap(), BlockClass::CLEAN);
        assert!(fidelity_indicator(&g, &p).unwrap());
    }

    #[test]
    fn single_qubit_attacks_on_three_qubit_path() {
        let g = path3();
        // Z on the white vertex anticommutes only with X2 Z1 Z3
        let mut p = BlockPauli::identity(&g);
        p.v_w.set(0, true);
        let s = syndromes(&g, &p).unwrap();
        assert!(s.first.is_zero());
        assert_eq!(s.second, BitVector::from_bits(&[1]));
        assert_eq!(block_class(&g, &p).unwrap(), BlockClass::SECOND_ONLY);

        // X on the white vertex anticommutes with both black stabilizers
        let mut p = BlockPauli::identity(&g);
        p.u_w.set(0, true);
        let s = syndromes(&g, &p).unwrap();
        assert_eq!(s.first, BitVector::from_bits(&[1, 1]));
        assert!(s.second.is_zero());
    }

    #[test]
    fn stabilizer_element_is_invisible() {
        let g = path3();
        let mut p = BlockPauli::identity(&g);
        p.u_b.set(0, true);
        p.v_w.set(0, true);
        assert_eq!(block_class(&g, &p).unwrap(), BlockClass::CLEAN);
        assert!(fidelity_indicator(&g, &p).unwrap());
    }

    #[test]
    fn canonical_representatives() {
        let g = BipartiteGraphState::grid(3, 3).unwrap();
        for class in [
            BlockClass::CLEAN,
            BlockClass::FIRST_ONLY,
            BlockClass::SECOND_ONLY,
            BlockClass::BOTH,
        ] {
            let p = BlockPauli::canonical(&g, class).unwrap();
            assert_eq!(block_class(&g, &p).unwrap(), class);
            assert_eq!(fidelity_indicator(&g, &p).unwrap(), class.is_clean());
        }
        let lone = BipartiteGraphState::path(1).unwrap();
        assert!(BlockPauli::canonical(&lone, BlockClass::SECOND_ONLY).is_err());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = BlockPauli::identity(&path3());
        let g = BipartiteGraphState::path(4).unwrap();
        assert!(matches!(syndromes(&g, &p), Err(PauliError::Shape { .. })));
    }

    #[test]
    fn honest_outcomes_follow_stabilizers() {
        let g = BipartiteGraphState::grid(3, 4).unwrap();
        let p = BlockPauli::identity(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let o = sample_outcomes(&g, &p, TestGroup::First, &mut rng).unwrap();
            assert_eq!(o.x, g.adjacency().mul_vec(&o.z).unwrap());
            let o = sample_outcomes(&g, &p, TestGroup::Second, &mut rng).unwrap();
            assert_eq!(o.x, g.adjacency_t().mul_vec(&o.z).unwrap());
        }
    }

    #[test]
    fn z_on_first_black_breaks_only_its_own_check() {
        let g = path3();
        let mut p = BlockPauli::identity(&g);
        p.v_b.set(0, true);
        let rels = check_relations(&g, TestGroup::First);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let o = sample_outcomes(&g, &p, TestGroup::First, &mut rng).unwrap();
            assert!(!rels[0].holds(&o.x, &o.z));
            assert!(rels[1].holds(&o.x, &o.z));
        }
    }

    #[test]
    fn z_outcomes_are_uniform() {
        // 4-sigma band on every bit of 10^4 samples
        let g = BipartiteGraphState::grid(3, 3).unwrap();
        let mut p = BlockPauli::identity(&g);
        p.u_w.set(1, true);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 10_000usize;
        let mut ones = vec![0usize; g.n_w()];
        for _ in 0..n {
            let o = sample_outcomes(&g, &p, TestGroup::First, &mut rng).unwrap();
            for i in o.z.iter_ones() {
                ones[i] += 1;
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        for &c in &ones {
            assert!((c as f64 - n as f64 / 2.0).abs() < 4.0 * sigma, "{ones:?}");
        }
    }

    #[test]
    fn class_law_matches_pushforward() {
        // iid X/Z noise on a 2-vertex path (B0 - W0): enumerate the 16 Paulis
        // exactly to get P(s,t), then compare with sampled frequencies.
        let g = BipartiteGraphState::path(2).unwrap();
        let (px, pz) = (0.2, 0.3);
        let mut exact = std::collections::BTreeMap::new();
        for mask in 0u8..16 {
            let bit = |i: u8| mask >> i & 1 == 1;
            let p = BlockPauli {
                u_b: BitVector::from_bools(&[bit(0)]),
                u_w: BitVector::from_bools(&[bit(1)]),
                v_b: BitVector::from_bools(&[bit(2)]),
                v_w: BitVector::from_bools(&[bit(3)]),
            };
            let weight = |on: bool, q: f64| if on { q } else { 1.0 - q };
            let w =
                weight(bit(0), px) * weight(bit(1), px) * weight(bit(2), pz) * weight(bit(3), pz);
            *exact.entry(block_class(&g, &p).unwrap()).or_insert(0.0) += w;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 50_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..n {
            let p = BlockPauli::iid(&g, px, pz, &mut rng);
            *counts.entry(block_class(&g, &p).unwrap()).or_insert(0usize) += 1;
        }
        for (class, prob) in exact {
            let got = *counts.get(&class).unwrap_or(&0) as f64 / n as f64;
            let se = (prob * (1.0 - prob) / n as f64).sqrt();
            assert!((got - prob).abs() < 4.0 * se, "{class}: {got} vs {prob}");
        }
    }

    proptest! {
        #[test]
        fn syndromes_are_linear(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = BipartiteGraphState::rhg(1, 2, 1).unwrap();
            let p = BlockPauli::random(&g, &mut rng);
            let q = BlockPauli::random(&g, &mut rng);
            let sp = syndromes(&g, &p).unwrap();
            let sq = syndromes(&g, &q).unwrap();
            let spq = syndromes(&g, &p.compose(&q).unwrap()).unwrap();
            prop_assert_eq!(spq.first, sp.first.xor(&sq.first).unwrap());
            prop_assert_eq!(spq.second, sp.second.xor(&sq.second).unwrap());
        }

        #[test]
        fn failure_pattern_equals_syndrome(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = BipartiteGraphState::grid(3, 3).unwrap();
            let r = Reduction::compute(&g).unwrap();
            let p = BlockPauli::random(&g, &mut rng);
            let s = syndromes(&g, &p).unwrap();
            for group in [TestGroup::First, TestGroup::Second] {
                let o = sample_outcomes(&g, &p, group, &mut rng).unwrap();
                let failures: Vec<bool> = check_relations(&g, group)
                    .iter()
                    .map(|c| !c.holds(&o.x, &o.z))
                    .collect();
                prop_assert_eq!(&BitVector::from_bools(&failures), s.for_group(group));
                // converted checks see a failure exactly when the syndrome is nonzero
                prop_assert_eq!(
                    r.converted_checks_hold(group, &o.x, &o.z).unwrap(),
                    s.for_group(group).is_zero()
                );
            }
            prop_assert_eq!(fidelity_indicator(&g, &p).unwrap(), s.class() == BlockClass::CLEAN);
        }
    }
}
