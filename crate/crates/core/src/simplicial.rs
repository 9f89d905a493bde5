//! Simplicial monoids: free commutative monoids `(Z+)^r` with their
//! canonical bases, elements as coordinate vectors, morphisms as
//! nonnegative integer matrices stored column-wise, and the `∝`
//! preorder (`x ∝ y` iff `x <= n·y` for some `n`) decided exactly.
//!
//! Basis indices are 0-based throughout.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::natural::Natural;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("basis index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },
}

/// The free commutative monoid of a given rank. Rank 0 is the trivial
/// monoid `{0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplicialMonoid {
    rank: usize,
}

impl SimplicialMonoid {
    pub fn new(rank: usize) -> Self {
        SimplicialMonoid { rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `e_I = Σ_{i∈I} e_i`: the 0/1 indicator vector of `I`. Empty `I`
    /// gives the zero element.
    pub fn basis_sum<N: Natural>(&self, indices: &IndexSet) -> Result<Element<N>, SimplicialError> {
        indices.check_rank(self.rank)?;
        let mut coords = vec![N::zero(); self.rank];
        for &i in indices.iter() {
            coords[i] = N::one();
        }
        Ok(Element { coords })
    }

    /// `e_Δ`: the all-ones element.
    pub fn top<N: Natural>(&self) -> Element<N> {
        Element {
            coords: vec![N::one(); self.rank],
        }
    }

    /// External direct sum. Returns the sum monoid together with the two
    /// canonical injections; the second block starts at `self.rank()`.
    pub fn direct_sum<N: Natural>(
        &self,
        other: &SimplicialMonoid,
    ) -> (SimplicialMonoid, Morphism<N>, Morphism<N>) {
        let total = SimplicialMonoid::new(self.rank + other.rank);
        let inj1 = Morphism {
            target_rank: total.rank,
            columns: (0..self.rank)
                .map(|i| Element::basis(total.rank, i).expect("index in range"))
                .collect(),
        };
        let inj2 = Morphism {
            target_rank: total.rank,
            columns: (0..other.rank)
                .map(|j| Element::basis(total.rank, self.rank + j).expect("index in range"))
                .collect(),
        };
        (total, inj1, inj2)
    }
}

/// A point of a simplicial monoid: a vector of nonnegative integers.
/// Conicality (`x + y = 0` forces `x = y = 0`) is automatic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element<N: Natural> {
    coords: Vec<N>,
}

impl<N: Natural> Element<N> {
    pub fn new(coords: Vec<N>) -> Self {
        Element { coords }
    }

    pub fn zero(rank: usize) -> Self {
        Element {
            coords: vec![N::zero(); rank],
        }
    }

    pub fn basis(rank: usize, index: usize) -> Result<Self, SimplicialError> {
        if index >= rank {
            return Err(SimplicialError::IndexOutOfRange { index, rank });
        }
        let mut coords = vec![N::zero(); rank];
        coords[index] = N::one();
        Ok(Element { coords })
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[N] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &N {
        &self.coords[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &Element<N>) -> Result<Element<N>, SimplicialError> {
        self.check_rank(other)?;
        Ok(Element {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn scale(&self, n: &N) -> Element<N> {
        Element {
            coords: self.coords.iter().map(|c| c.clone() * n.clone()).collect(),
        }
    }

    /// Coordinatewise (algebraic) order on `(Z+)^r`.
    pub fn le(&self, other: &Element<N>) -> Result<bool, SimplicialError> {
        self.check_rank(other)?;
        Ok(self.coords.iter().zip(&other.coords).all(|(a, b)| a <= b))
    }

    /// `supp(x) = {j | π_j(x) ≠ 0}`.
    pub fn support(&self) -> IndexSet {
        IndexSet {
            members: self
                .coords
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Least `n >= 0` with `x <= n·y` coordinatewise, or `None` when no
    /// such `n` exists. A witness exists iff `supp(x) ⊆ supp(y)`; the
    /// least one for `x ≠ 0` is `max_i ceil(x_i / y_i)` over `supp(x)`.
    pub fn propto(&self, other: &Element<N>) -> Result<Option<N>, SimplicialError> {
        self.check_rank(other)?;
        if self.is_zero() {
            return Ok(Some(N::zero()));
        }
        let mut best = N::zero();
        for (a, b) in self.coords.iter().zip(&other.coords) {
            if a.is_zero() {
                continue;
            }
            if b.is_zero() {
                return Ok(None);
            }
            let q = a.div_ceil(b);
            if q > best {
                best = q;
            }
        }
        Ok(Some(best))
    }

    fn check_rank(&self, other: &Element<N>) -> Result<(), SimplicialError> {
        if self.coords.len() != other.coords.len() {
            return Err(SimplicialError::RankMismatch {
                left: self.coords.len(),
                right: other.coords.len(),
            });
        }
        Ok(())
    }
}

impl<N: Natural> fmt::Display for Element<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A monoid morphism between simplicial monoids, stored as the list of
/// images of the source's basis elements (column-major). Additivity is
/// definitional: `apply(x) = Σ_i x_i · column_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism<N: Natural> {
    target_rank: usize,
    columns: Vec<Element<N>>,
}

impl<N: Natural> Morphism<N> {
    pub fn new(target_rank: usize, columns: Vec<Element<N>>) -> Result<Self, SimplicialError> {
        for col in &columns {
            if col.rank() != target_rank {
                return Err(SimplicialError::RankMismatch {
                    left: col.rank(),
                    right: target_rank,
                });
            }
        }
        Ok(Morphism {
            target_rank,
            columns,
        })
    }

    pub fn identity(rank: usize) -> Self {
        Morphism {
            target_rank: rank,
            columns: (0..rank)
                .map(|i| Element::basis(rank, i).expect("index in range"))
                .collect(),
        }
    }

    pub fn source_rank(&self) -> usize {
        self.columns.len()
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    pub fn columns(&self) -> &[Element<N>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &Element<N> {
        &self.columns[i]
    }

    pub fn apply(&self, x: &Element<N>) -> Result<Element<N>, SimplicialError> {
        if x.rank() != self.source_rank() {
            return Err(SimplicialError::RankMismatch {
                left: x.rank(),
                right: self.source_rank(),
            });
        }
        let mut acc = Element::zero(self.target_rank);
        for (c, col) in x.coords.iter().zip(&self.columns) {
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&col.scale(c)).expect("target ranks agree");
        }
        Ok(acc)
    }

    /// `(g∘f)(e_i) = g(f(e_i))`; requires `f.target_rank = g.source_rank`.
    pub fn compose(g: &Morphism<N>, f: &Morphism<N>) -> Result<Morphism<N>, SimplicialError> {
        if f.target_rank != g.source_rank() {
            return Err(SimplicialError::RankMismatch {
                left: f.target_rank,
                right: g.source_rank(),
            });
        }
        Ok(Morphism {
            target_rank: g.target_rank,
            columns: f
                .columns
                .iter()
                .map(|col| g.apply(col).expect("ranks agree"))
                .collect(),
        })
    }
}

/// A sorted, duplicate-free set of basis indices drawn from `{0,…,rank-1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct IndexSet {
    members: BTreeSet<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet::default()
    }

    /// All indices `0..rank`.
    pub fn full(rank: usize) -> Self {
        IndexSet {
            members: (0..rank).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }

    pub fn insert(&mut self, i: usize) {
        self.members.insert(i);
    }

    pub fn iter(&self) -> impl Iterator<Item = &usize> {
        self.members.iter()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        IndexSet {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet {
            members: self.members.difference(&other.members).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet {
            members: self.members.intersection(&other.members).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.members.is_disjoint(&other.members)
    }

    pub fn min(&self) -> Option<usize> {
        self.members.iter().next().copied()
    }

    pub fn check_rank(&self, rank: usize) -> Result<(), SimplicialError> {
        match self.members.iter().next_back() {
            Some(&max) if max >= rank => Err(SimplicialError::IndexOutOfRange { index: max, rank }),
            _ => Ok(()),
        }
    }

    /// All subsets of `{0,…,rank-1}` ordered by size, then lexicographically
    /// by sorted member list. This is the fixed pair-scheduling order used
    /// by the resolution pipeline.
    pub fn all_subsets(rank: usize) -> Vec<IndexSet> {
        let mut subsets: Vec<Vec<usize>> = vec![vec![]];
        for i in 0..rank {
            let mut with_i: Vec<Vec<usize>> = subsets
                .iter()
                .map(|s| {
                    let mut t = s.clone();
                    t.push(i);
                    t
                })
                .collect();
            subsets.append(&mut with_i);
        }
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        subsets.into_iter().map(IndexSet::from_iter).collect()
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IndexSet {
            members: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = Element<u64>;
    type M = Morphism<u64>;

    fn el(coords: &[u64]) -> E {
        Element::new(coords.to_vec())
    }

    /// Independent check for `propto`: linear scan of n in 0..=Σx_i.
    fn propto_brute(x: &E, y: &E) -> Option<u64> {
        let bound: u64 = x.coords().iter().sum();
        (0..=bound).find(|n| x.le(&y.scale(n)).unwrap())
    }

    #[test]
    fn basis_sum_examples() {
        let m = SimplicialMonoid::new(3);
        let i = IndexSet::from_iter([0, 2]);
        assert_eq!(m.basis_sum::<u64>(&i).unwrap(), el(&[1, 0, 1]));
        assert_eq!(
            m.basis_sum::<u64>(&IndexSet::empty()).unwrap(),
            el(&[0, 0, 0])
        );
        let m2 = SimplicialMonoid::new(2);
        assert_eq!(
            m2.basis_sum::<u64>(&IndexSet::full(2)).unwrap(),
            m2.top::<u64>()
        );
        assert!(matches!(
            m2.basis_sum::<u64>(&IndexSet::from_iter([2])),
            Err(SimplicialError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn support_examples() {
        assert_eq!(el(&[2, 0, 3]).support(), IndexSet::from_iter([0, 2]));
        assert_eq!(el(&[0, 0]).support(), IndexSet::empty());
        assert_eq!(el(&[1, 1, 1]).support(), IndexSet::from_iter([0, 1, 2]));
    }

    #[test]
    fn propto_examples() {
        // Frozen from the brute-force scan below.
        let x = el(&[1, 0, 2]);
        let y = el(&[2, 0, 1]);
        assert_eq!(propto_brute(&x, &y), Some(2));
        assert_eq!(x.propto(&y).unwrap(), Some(2));

        assert_eq!(el(&[0, 0]).propto(&el(&[5, 7])).unwrap(), Some(0));
        assert_eq!(el(&[1, 0]).propto(&el(&[0, 1])).unwrap(), None);
        assert!(el(&[1]).propto(&el(&[1, 2])).is_err());
    }

    #[test]
    fn propto_agrees_with_brute_force() {
        // Exhaustive-ish sweep: rank <= 3, entries <= 4.
        for rank in 1..=3usize {
            let mut vecs = vec![vec![]];
            for _ in 0..rank {
                vecs = vecs
                    .into_iter()
                    .flat_map(|v: Vec<u64>| {
                        (0..5u64).map(move |c| {
                            let mut w = v.clone();
                            w.push(c);
                            w
                        })
                    })
                    .collect();
            }
            for xv in &vecs {
                for yv in &vecs {
                    let x = el(xv);
                    let y = el(yv);
                    let got = x.propto(&y).unwrap();
                    assert_eq!(got, propto_brute(&x, &y), "x={x} y={y}");
                    assert_eq!(got.is_some(), x.support().is_subset(&y.support()));
                }
            }
        }
    }

    #[test]
    fn compose_examples() {
        let f = M::new(3, vec![el(&[1, 0, 2]), el(&[0, 1, 1])]).unwrap();
        assert_eq!(M::compose(&M::identity(3), &f).unwrap(), f);

        // f: e_0 -> (1,1); g: e_0 -> (2,0), e_1 -> (0,1). Matrix product by
        // hand: (g∘f)(e_0) = g((1,1)) = (2,1).
        let f1 = M::new(2, vec![el(&[1, 1])]).unwrap();
        let g = M::new(2, vec![el(&[2, 0]), el(&[0, 1])]).unwrap();
        let gf = M::compose(&g, &f1).unwrap();
        assert_eq!(gf.column(0), &el(&[2, 1]));

        let zero = M::new(2, vec![E::zero(2), E::zero(2), E::zero(2)]).unwrap();
        let composed = M::compose(&zero, &M::identity(3)).unwrap();
        assert!(composed.columns().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn apply_is_additive() {
        // Exhaustive for rank 2 -> 2, entries <= 2.
        let cols = [el(&[1, 2]), el(&[0, 1])];
        let f = M::new(2, cols.to_vec()).unwrap();
        for a in 0..3u64 {
            for b in 0..3u64 {
                for c in 0..3u64 {
                    for d in 0..3u64 {
                        let x = el(&[a, b]);
                        let y = el(&[c, d]);
                        let lhs = f.apply(&x.add(&y).unwrap()).unwrap();
                        let rhs = f.apply(&x).unwrap().add(&f.apply(&y).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn direct_sum_examples() {
        let (sum, i1, i2) = SimplicialMonoid::new(2).direct_sum::<u64>(&SimplicialMonoid::new(3));
        assert_eq!(sum.rank(), 5);
        assert_eq!(i1.column(0), &el(&[1, 0, 0, 0, 0]));
        assert_eq!(i2.column(1), &el(&[0, 0, 0, 1, 0]));
        // Injection images are disjointly supported.
        for c1 in i1.columns() {
            for c2 in i2.columns() {
                assert!(c1.support().is_disjoint(&c2.support()));
            }
        }

        let (sum0, _, j2) = SimplicialMonoid::new(0).direct_sum::<u64>(&SimplicialMonoid::new(2));
        assert_eq!(sum0.rank(), 2);
        assert_eq!(j2, M::identity(2));
    }

    #[test]
    fn subset_order_is_size_then_lex() {
        let subsets = IndexSet::all_subsets(3);
        assert_eq!(subsets.len(), 8);
        assert_eq!(subsets[0], IndexSet::empty());
        assert_eq!(subsets[1], IndexSet::from_iter([0]));
        assert_eq!(subsets[2], IndexSet::from_iter([1]));
        assert_eq!(subsets[3], IndexSet::from_iter([2]));
        assert_eq!(subsets[4], IndexSet::from_iter([0, 1]));
        assert_eq!(subsets[7], IndexSet::from_iter([0, 1, 2]));
    }

    #[test]
    fn functoriality_on_samples() {
        let f = M::new(3, vec![el(&[1, 0, 2]), el(&[0, 3, 1])]).unwrap();
        let g = M::new(2, vec![el(&[1, 1]), el(&[0, 2]), el(&[5, 0])]).unwrap();
        let gf = M::compose(&g, &f).unwrap();
        for a in 0..4u64 {
            for b in 0..4u64 {
                let x = el(&[a, b]);
                assert_eq!(
                    gf.apply(&x).unwrap(),
                    g.apply(&f.apply(&x).unwrap()).unwrap()
                );
            }
        }
    }
}
