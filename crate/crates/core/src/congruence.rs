//! Congruences as canonical partitions, principal-congruence generation and
//! the full congruence lattice of a small algebra.

use std::cmp::Ordering;
use std::fmt;

use petgraph::unionfind::UnionFind;

use crate::algebra::{Elem, FiniteAlgebra};

/// A partition of `{0..n-1}`; `labels[a]` is the least element of the block of `a`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Congruence {
    labels: Vec<Elem>,
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, block) in self.blocks().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, a) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Ord for Congruence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pair_count()
            .cmp(&other.pair_count())
            .then_with(|| other.labels.cmp(&self.labels))
    }
}

impl PartialOrd for Congruence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Congruence {
    /// Equality relation `0_A`.
    pub fn identity(n: usize) -> Self {
        Congruence { labels: (0..n as Elem).collect() }
    }

    /// Full relation `1_A`.
    pub fn full(n: usize) -> Self {
        Congruence { labels: vec![0; n] }
    }

    /// Canonicalizes an arbitrary block-id array.
    pub fn from_block_ids(ids: &[usize]) -> Self {
        let mut labels = vec![0 as Elem; ids.len()];
        for a in 0..ids.len() {
            let first = ids.iter().position(|&x| x == ids[a]).unwrap();
            labels[a] = first as Elem;
        }
        Congruence { labels }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<Elem>]) -> Self {
        let mut ids = vec![usize::MAX; n];
        for (i, block) in blocks.iter().enumerate() {
            for &a in block {
                ids[a as usize] = i;
            }
        }
        let mut next = blocks.len();
        for id in ids.iter_mut().filter(|id| **id == usize::MAX) {
            *id = next;
            next += 1;
        }
        Self::from_block_ids(&ids)
    }

    fn from_union_find(uf: &UnionFind<usize>, n: usize) -> Self {
        let ids: Vec<usize> = (0..n).map(|a| uf.find(a)).collect();
        Self::from_block_ids(&ids)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn label(&self, a: Elem) -> Elem {
        self.labels[a as usize]
    }

    pub fn labels(&self) -> &[Elem] {
        &self.labels
    }

    #[inline]
    pub fn related(&self, a: Elem, b: Elem) -> bool {
        self.labels[a as usize] == self.labels[b as usize]
    }

    pub fn block_of(&self, a: Elem) -> Vec<Elem> {
        let l = self.label(a);
        (0..self.size() as Elem).filter(|&x| self.label(x) == l).collect()
    }

    pub fn representatives(&self) -> Vec<Elem> {
        (0..self.size() as Elem).filter(|&a| self.label(a) == a).collect()
    }

    /// Index of each element's block among `representatives()`.
    pub fn block_indices(&self) -> Vec<Elem> {
        let reps = self.representatives();
        self.labels
            .iter()
            .map(|l| reps.binary_search(l).unwrap() as Elem)
            .collect()
    }

    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        self.representatives().into_iter().map(|r| self.block_of(r)).collect()
    }

    pub fn block_count(&self) -> usize {
        self.representatives().len()
    }

    /// Number of ordered pairs in the relation.
    pub fn pair_count(&self) -> usize {
        let mut sizes = vec![0usize; self.size()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes.iter().map(|s| s * s).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.labels.iter().enumerate().all(|(a, &l)| a == l as usize)
    }

    pub fn is_full(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    pub fn le(&self, other: &Congruence) -> bool {
        (0..self.size() as Elem).all(|a| other.related(a, self.label(a)))
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        let n = self.size();
        let mut uf = UnionFind::new(n);
        for a in 0..n {
            uf.union(a, self.labels[a] as usize);
            uf.union(a, other.labels[a] as usize);
        }
        Self::from_union_find(&uf, n)
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let ids: Vec<usize> = (0..self.size())
            .map(|a| self.labels[a] as usize * self.size() + other.labels[a] as usize)
            .collect();
        Self::from_block_ids(&ids)
    }

    /// Whether the partition is preserved by every basic translation, which
    /// for an equivalence relation is the same as being a congruence.
    pub fn is_compatible(&self, alg: &FiniteAlgebra) -> bool {
        if alg.size() != self.size() {
            return false;
        }
        for a in alg.elements() {
            let r = self.label(a);
            if r == a {
                continue;
            }
            if translation_images(alg, r, a).any(|(x, y)| !self.related(x, y)) {
                return false;
            }
        }
        true
    }

    /// Image partition on `elements` (a sub-universe) relabelled to `0..k`.
    pub fn restrict(&self, elements: &[Elem]) -> Congruence {
        let ids: Vec<usize> = elements.iter().map(|&a| self.label(a) as usize).collect();
        Self::from_block_ids(&ids)
    }
}

/// All one-step images of the pair `(a, b)` under basic translations.
fn translation_images(alg: &FiniteAlgebra, a: Elem, b: Elem) -> impl Iterator<Item = (Elem, Elem)> + '_ {
    alg.elements().flat_map(move |c| {
        let unary = [(alg.dot(a, c), alg.dot(b, c)), (alg.dot(c, a), alg.dot(c, b))];
        let ternary = alg.elements().flat_map(move |d| {
            [
                (alg.m(a, c, d), alg.m(b, c, d)),
                (alg.m(c, a, d), alg.m(c, b, d)),
                (alg.m(c, d, a), alg.m(c, d, b)),
            ]
        });
        unary.into_iter().chain(ternary)
    })
}

/// Least congruence containing `pairs`.
pub fn generate_congruence(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Congruence {
    let n = alg.size();
    let mut uf = UnionFind::new(n);
    let mut queue: Vec<(Elem, Elem)> = Vec::new();
    for &(a, b) in pairs {
        if uf.union(a as usize, b as usize) {
            queue.push((a, b));
        }
    }
    // Closing the generating pairs under translations suffices: every pair
    // of the transitive closure is a chain of translated generators.
    while let Some((a, b)) = queue.pop() {
        for (x, y) in translation_images(alg, a, b) {
            if uf.union(x as usize, y as usize) {
                queue.push((x, y));
            }
        }
    }
    Congruence::from_union_find(&uf, n)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeInterval {
    pub lower: Congruence,
    pub upper: Congruence,
}

/// Congruence lattice with elements sorted by size (so `0_A` first, `1_A` last)
/// and its covering relation.
#[derive(Clone, Debug)]
pub struct CongruenceLattice {
    elements: Vec<Congruence>,
    covers: Vec<(usize, usize)>,
}

impl CongruenceLattice {
    pub fn elements(&self) -> &[Congruence] {
        &self.elements
    }

    /// Index pairs `(lower, upper)` with `lower ≺ upper`.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn index_of(&self, c: &Congruence) -> Option<usize> {
        self.elements.iter().position(|x| x == c)
    }

    pub fn contains(&self, c: &Congruence) -> bool {
        self.index_of(c).is_some()
    }

    pub fn bottom(&self) -> &Congruence {
        &self.elements[0]
    }

    pub fn top(&self) -> &Congruence {
        self.elements.last().unwrap()
    }

    pub fn is_cover(&self, lower: &Congruence, upper: &Congruence) -> bool {
        match (self.index_of(lower), self.index_of(upper)) {
            (Some(l), Some(u)) => self.covers.contains(&(l, u)),
            _ => false,
        }
    }

    /// All prime intervals `α ≺ β` with `β ≤ theta`, in lattice order.
    pub fn prime_intervals_below(&self, theta: &Congruence) -> Vec<PrimeInterval> {
        self.covers
            .iter()
            .filter(|&&(_, u)| self.elements[u].le(theta))
            .map(|&(l, u)| PrimeInterval { lower: self.elements[l].clone(), upper: self.elements[u].clone() })
            .collect()
    }

    /// A maximal chain `bottom = c_0 ≺ c_1 ≺ .. ≺ c_k = top_of_chain`.
    pub fn maximal_chain_to(&self, top: &Congruence) -> Vec<Congruence> {
        let target = self.index_of(top).expect("congruence from this lattice");
        let mut chain = vec![0usize];
        let mut cur = 0;
        while cur != target {
            let next = self
                .covers
                .iter()
                .filter(|&&(l, u)| l == cur && self.elements[u].le(&self.elements[target]))
                .map(|&(_, u)| u)
                .min()
                .expect("chain reaches every element above it");
            chain.push(next);
            cur = next;
        }
        chain.into_iter().map(|i| self.elements[i].clone()).collect()
    }
}

/// All congruences, via principal congruences closed under joins.
pub fn congruence_lattice(alg: &FiniteAlgebra) -> CongruenceLattice {
    let n = alg.size();
    let mut elements = vec![Congruence::identity(n)];
    for a in 0..n as Elem {
        for b in (a + 1)..n as Elem {
            let c = generate_congruence(alg, &[(a, b)]);
            if !elements.contains(&c) {
                elements.push(c);
            }
        }
    }
    let mut i = 1;
    while i < elements.len() {
        for j in 1..i {
            let c = elements[i].join(&elements[j]);
            if !elements.contains(&c) {
                elements.push(c);
            }
        }
        i += 1;
    }
    elements.sort();
    let k = elements.len();
    let mut covers = Vec::new();
    for l in 0..k {
        for u in 0..k {
            if l == u || !elements[l].le(&elements[u]) {
                continue;
            }
            let between = (0..k).any(|x| {
                x != l && x != u && elements[l].le(&elements[x]) && elements[x].le(&elements[u])
            });
            if !between {
                covers.push((l, u));
            }
        }
    }
    CongruenceLattice { elements, covers }
}

pub fn prime_intervals_below(alg: &FiniteAlgebra, theta: &Congruence) -> Vec<PrimeInterval> {
    congruence_lattice(alg).prime_intervals_below(theta)
}
