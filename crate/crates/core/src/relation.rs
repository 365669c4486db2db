//! Relations over finite algebras: explicit tuple sets with projection,
//! quotients, rectangularity and link congruences.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rustc_hash::FxHashSet;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::congruence::{Congruence, PrimeInterval};
use crate::error::{Error, Result};
use crate::sbm::split_elements;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    scope: Vec<usize>,
    domains: Vec<Arc<FiniteAlgebra>>,
    tuples: Vec<Vec<Elem>>,
}

fn normalize_tuples(mut tuples: Vec<Vec<Elem>>) -> Vec<Vec<Elem>> {
    tuples.sort_unstable();
    tuples.dedup();
    tuples
}

impl Relation {
    /// Checked constructor: tuples must fit the domains and be closed under
    /// componentwise `dot` and `m`.
    pub fn new(scope: Vec<usize>, domains: Vec<Arc<FiniteAlgebra>>, tuples: Vec<Vec<Elem>>) -> Result<Self> {
        let rel = Self::from_parts(scope, domains, tuples)?;
        if let Some(bad) = rel.closure_violation() {
            return Err(Error::NotClosed(format!("{bad:?} is generated but missing")));
        }
        Ok(rel)
    }

    /// Checks shapes only; for relations known to be subalgebras (solution
    /// sets, projections, intersections of subalgebras).
    pub fn from_parts(scope: Vec<usize>, domains: Vec<Arc<FiniteAlgebra>>, tuples: Vec<Vec<Elem>>) -> Result<Self> {
        if scope.len() != domains.len() {
            return Err(Error::Malformed(format!("{} scope entries for {} domains", scope.len(), domains.len())));
        }
        for t in &tuples {
            if t.len() != scope.len() {
                return Err(Error::Malformed(format!("tuple {t:?} does not have arity {}", scope.len())));
            }
            for (&x, d) in t.iter().zip(&domains) {
                d.check_elem(x)?;
            }
        }
        Ok(Relation { scope, domains, tuples: normalize_tuples(tuples) })
    }

    /// Least subalgebra of the product containing `seed`.
    pub fn generated(scope: Vec<usize>, domains: Vec<Arc<FiniteAlgebra>>, seed: Vec<Vec<Elem>>) -> Result<Self> {
        let base = Self::from_parts(scope, domains, seed)?;
        let full: usize = base.domains.iter().map(|d| d.size()).product();
        let mut items = base.tuples.clone();
        let mut set: FxHashSet<Vec<Elem>> = items.iter().cloned().collect();
        let mut buf = vec![0 as Elem; base.arity()];
        let mut add = |t: &[Elem], items: &mut Vec<Vec<Elem>>| {
            if !set.contains(t) {
                set.insert(t.to_vec());
                items.push(t.to_vec());
            }
        };
        // Semi-naive: step `p` evaluates every argument tuple whose largest index is `p`.
        let mut p = 0;
        while p < items.len() && items.len() < full {
            for q in 0..=p {
                for (x, y) in [(p, q), (q, p)] {
                    base.dot_into(&items[x], &items[y], &mut buf);
                    add(&buf, &mut items);
                }
                for r in 0..=p {
                    for (x, y, z) in [(p, q, r), (q, p, r), (q, r, p)] {
                        base.m_into(&items[x], &items[y], &items[z], &mut buf);
                        add(&buf, &mut items);
                    }
                }
            }
            p += 1;
        }
        items.sort_unstable();
        Ok(Relation { scope: base.scope, domains: base.domains, tuples: items })
    }

    pub fn equality(alg: Arc<FiniteAlgebra>) -> Self {
        let tuples = alg.elements().map(|a| vec![a, a]).collect();
        Relation { scope: vec![0, 1], domains: vec![alg.clone(), alg], tuples }
    }

    pub fn full(scope: Vec<usize>, domains: Vec<Arc<FiniteAlgebra>>) -> Self {
        let mut tuples = vec![Vec::new()];
        for d in &domains {
            tuples = tuples
                .into_iter()
                .flat_map(|t: Vec<Elem>| {
                    d.elements().map(move |a| {
                        let mut t = t.clone();
                        t.push(a);
                        t
                    })
                })
                .collect();
        }
        Relation { scope, domains, tuples }
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn domains(&self) -> &[Arc<FiniteAlgebra>] {
        &self.domains
    }

    pub fn tuples(&self) -> &[Vec<Elem>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples.binary_search_by(|x| x.as_slice().cmp(t)).is_ok()
    }

    pub fn with_scope(mut self, scope: Vec<usize>) -> Self {
        assert_eq!(scope.len(), self.scope.len());
        self.scope = scope;
        self
    }

    fn dot_tuples(&self, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
        self.domains.iter().enumerate().map(|(i, d)| d.dot(a[i], b[i])).collect()
    }

    fn dot_into(&self, a: &[Elem], b: &[Elem], out: &mut [Elem]) {
        for (i, d) in self.domains.iter().enumerate() {
            out[i] = d.dot(a[i], b[i]);
        }
    }

    fn m_into(&self, a: &[Elem], b: &[Elem], c: &[Elem], out: &mut [Elem]) {
        for (i, d) in self.domains.iter().enumerate() {
            out[i] = d.m(a[i], b[i], c[i]);
        }
    }

    fn m_tuples(&self, a: &[Elem], b: &[Elem], c: &[Elem]) -> Vec<Elem> {
        self.domains.iter().enumerate().map(|(i, d)| d.m(a[i], b[i], c[i])).collect()
    }

    /// Componentwise product of all tuples, which lies in the top σ-block of the relation.
    pub fn max_tuple(&self) -> Option<Vec<Elem>> {
        self.tuples.iter().cloned().reduce(|x, y| self.dot_tuples(&x, &y))
    }

    pub fn closure_violation(&self) -> Option<Vec<Elem>> {
        for a in &self.tuples {
            for b in &self.tuples {
                let t = self.dot_tuples(a, b);
                if !self.contains(&t) {
                    return Some(t);
                }
                for c in &self.tuples {
                    let t = self.m_tuples(a, b, c);
                    if !self.contains(&t) {
                        return Some(t);
                    }
                }
            }
        }
        None
    }

    pub fn is_closed(&self) -> bool {
        self.closure_violation().is_none()
    }

    /// Projection onto the coordinate list `coords` (repetitions allowed).
    pub fn project(&self, coords: &[usize]) -> Result<Relation> {
        for &c in coords {
            if c >= self.arity() {
                return Err(Error::BadIndex(c, self.arity()));
            }
        }
        let tuples: BTreeSet<Vec<Elem>> =
            self.tuples.iter().map(|t| coords.iter().map(|&c| t[c]).collect()).collect();
        Ok(Relation {
            scope: coords.iter().map(|&c| self.scope[c]).collect(),
            domains: coords.iter().map(|&c| self.domains[c].clone()).collect(),
            tuples: tuples.into_iter().collect(),
        })
    }

    /// Values occurring at coordinate `c`.
    pub fn column(&self, c: usize) -> Vec<Elem> {
        let set: BTreeSet<Elem> = self.tuples.iter().map(|t| t[c]).collect();
        set.into_iter().collect()
    }

    pub fn is_subdirect(&self) -> bool {
        (0..self.arity()).all(|c| self.column(c).len() == self.domains[c].size())
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        assert_eq!(self.arity(), other.arity());
        let tuples = self.tuples.iter().filter(|t| other.contains(t)).cloned().collect();
        Relation { scope: self.scope.clone(), domains: self.domains.clone(), tuples }
    }

    pub fn filter(&self, keep: impl Fn(&[Elem]) -> bool) -> Relation {
        let tuples = self.tuples.iter().filter(|t| keep(t)).cloned().collect();
        Relation { scope: self.scope.clone(), domains: self.domains.clone(), tuples }
    }
}

/// Fibres of a relation over its projection onto some coordinates.
type Fibres = BTreeMap<Vec<Elem>, BTreeSet<Vec<Elem>>>;

fn split_by(rel: &Relation, coords: &[usize]) -> Result<(Vec<usize>, Fibres)> {
    for &c in coords {
        if c >= rel.arity() {
            return Err(Error::BadIndex(c, rel.arity()));
        }
    }
    let rest: Vec<usize> = (0..rel.arity()).filter(|c| !coords.contains(c)).collect();
    let mut fibres: Fibres = BTreeMap::new();
    for t in rel.tuples() {
        let a: Vec<Elem> = coords.iter().map(|&c| t[c]).collect();
        let c: Vec<Elem> = rest.iter().map(|&c| t[c]).collect();
        fibres.entry(a).or_default().insert(c);
    }
    Ok((rest, fibres))
}

/// `(a,c), (a,d), (b,c) ∈ R` implies `(b,d) ∈ R`, splitting coordinates into `coords` and the rest.
pub fn rectangularity_check(rel: &Relation, coords: &[usize]) -> Result<bool> {
    let (_, fibres) = split_by(rel, coords)?;
    // Rectangular iff any two fibres that meet are equal.
    let fibres: Vec<&BTreeSet<Vec<Elem>>> = fibres.values().collect();
    for (i, x) in fibres.iter().enumerate() {
        for y in &fibres[i + 1..] {
            if x != y && !x.is_disjoint(y) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The link congruence `ν_I` on `pr_I R`: `a ~ b` iff some `c` has `(a,c), (b,c) ∈ R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkCongruence {
    /// Tuples of `pr_I R` in increasing order.
    pub tuples: Vec<Vec<Elem>>,
    /// Block id of each tuple: index of the least tuple of its block.
    pub block: Vec<usize>,
}

impl LinkCongruence {
    pub fn block_count(&self) -> usize {
        self.block.iter().enumerate().filter(|(i, b)| *i == **b).count()
    }
}

pub fn link_congruence(rel: &Relation, coords: &[usize]) -> Result<LinkCongruence> {
    let (_, fibres) = split_by(rel, coords)?;
    let tuples: Vec<Vec<Elem>> = fibres.keys().cloned().collect();
    let sets: Vec<&BTreeSet<Vec<Elem>>> = fibres.values().collect();
    let k = tuples.len();
    let linked = |i: usize, j: usize| !sets[i].is_disjoint(sets[j]);
    let mut block = vec![usize::MAX; k];
    for i in 0..k {
        if block[i] == usize::MAX {
            block[i] = i;
            for j in i + 1..k {
                if block[j] == usize::MAX && linked(i, j) {
                    block[j] = i;
                }
            }
        }
    }
    // the one-step relation must already be transitive
    for i in 0..k {
        for j in 0..k {
            if (block[i] == block[j]) != linked(i, j) {
                return Err(Error::NotTransitive);
            }
        }
    }
    Ok(LinkCongruence { tuples, block })
}

/// Blockwise image of `rel` over the quotient algebras; values are block
/// indices in order of least elements.
pub fn quotient_relation(rel: &Relation, congs: &[Congruence]) -> Result<Relation> {
    if congs.len() != rel.arity() {
        return Err(Error::Malformed(format!("{} congruences for arity {}", congs.len(), rel.arity())));
    }
    let mut domains = Vec::with_capacity(congs.len());
    let mut indices = Vec::with_capacity(congs.len());
    for (c, d) in congs.iter().zip(rel.domains()) {
        domains.push(Arc::new(d.quotient(c)?));
        indices.push(c.block_indices());
    }
    let tuples: BTreeSet<Vec<Elem>> = rel
        .tuples()
        .iter()
        .map(|t| t.iter().enumerate().map(|(i, &x)| indices[i][x as usize]).collect())
        .collect();
    Ok(Relation { scope: rel.scope.clone(), domains, tuples: tuples.into_iter().collect() })
}

/// No tuple of a binary relation pairs a split element with a non-split one.
pub fn alignment_check(rel2: &Relation, intervals: &[PrimeInterval; 2]) -> Result<bool> {
    if rel2.arity() != 2 {
        return Err(Error::PreconditionViolated(format!("alignment of a relation of arity {}", rel2.arity())));
    }
    let split: Vec<Vec<Elem>> = (0..2)
        .map(|c| split_elements(&rel2.domains()[c], &intervals[c].lower, &intervals[c].upper))
        .collect();
    Ok(rel2
        .tuples()
        .iter()
        .all(|t| split[0].contains(&t[0]) == split[1].contains(&t[1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::{fix_b, verify_sbm};

    fn z2() -> Arc<FiniteAlgebra> {
        Arc::new(FiniteAlgebra::cyclic(2))
    }

    fn affine_z2() -> Relation {
        let t = (0..8u8)
            .map(|i| vec![i & 1, i >> 1 & 1, i >> 2 & 1])
            .filter(|t| (t[0] + t[1] + t[2]) % 2 == 0)
            .collect();
        Relation::new(vec![0, 1, 2], vec![z2(), z2(), z2()], t).unwrap()
    }

    #[test]
    fn closure_is_checked() {
        let err = Relation::new(vec![0, 1], vec![z2(), z2()], vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert!(matches!(err, Err(Error::NotClosed(_))));
        let g = Relation::generated(vec![0, 1], vec![z2(), z2()], vec![vec![0, 0], vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn projections() {
        let r = affine_z2();
        assert_eq!(r.project(&[0, 1, 2]).unwrap(), r);
        assert_eq!(r.project(&[0, 1]).unwrap().len(), 4);
        assert_eq!(r.project(&[0, 0]).unwrap().tuples(), &[vec![0, 0], vec![1, 1]]);
        assert!(matches!(r.project(&[3]), Err(Error::BadIndex(3, 3))));
    }

    #[test]
    fn rectangularity() {
        let r = affine_z2();
        for coords in [&[0][..], &[1], &[0, 1], &[1, 2], &[0, 2]] {
            assert!(rectangularity_check(&r, coords).unwrap());
        }
        let full = Relation::full(vec![0, 1], vec![z2(), z2()]);
        assert!(rectangularity_check(&full, &[0]).unwrap());
        let bad = Relation::from_parts(vec![0, 1], vec![z2(), z2()], vec![vec![0, 0], vec![0, 1], vec![1, 0]]).unwrap();
        assert!(!rectangularity_check(&bad, &[0]).unwrap());
    }

    #[test]
    fn link_congruences() {
        let full = Relation::full(vec![0, 1], vec![z2(), z2()]);
        assert_eq!(link_congruence(&full, &[0]).unwrap().block_count(), 1);
        let eq = Relation::equality(z2());
        assert_eq!(link_congruence(&eq, &[0]).unwrap().block_count(), 2);
        let l = link_congruence(&affine_z2(), &[0, 1]).unwrap();
        assert_eq!(l.tuples.len(), 4);
        // (0,0) and (1,1) both extend by 0, (0,1) and (1,0) by 1
        assert_eq!(l.block_count(), 2);
        assert_eq!(l.block, vec![0, 1, 1, 0]);
        // 0 and 1 share the extension 0, 1 and 2 share 1, but 0 and 2 share nothing
        let z3 = Arc::new(FiniteAlgebra::cyclic(3));
        let bad = Relation::from_parts(
            vec![0, 1],
            vec![z3.clone(), z3],
            vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![2, 1]],
        )
        .unwrap();
        assert!(matches!(link_congruence(&bad, &[0]), Err(Error::NotTransitive)));
    }

    #[test]
    fn quotients() {
        let r = affine_z2();
        let ids = vec![Congruence::identity(2); 3];
        assert_eq!(quotient_relation(&r, &ids).unwrap().tuples(), r.tuples());
        let full = vec![Congruence::full(2); 3];
        assert_eq!(quotient_relation(&r, &full).unwrap().len(), 1);
    }

    #[test]
    fn alignment_on_fix_b() {
        let b = Arc::new(fix_b());
        let theta = verify_sbm(&b).unwrap().theta;
        let iv = PrimeInterval { lower: Congruence::identity(3), upper: theta };
        let eq = Relation::equality(b.clone());
        assert!(alignment_check(&eq, &[iv.clone(), iv.clone()]).unwrap());
        let full = Relation::full(vec![0, 1], vec![b.clone(), b]);
        assert!(!alignment_check(&full, &[iv.clone(), iv]).unwrap());
    }
}
