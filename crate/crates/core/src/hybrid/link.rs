//! Link partitions of coherent sets whose domains have minimal elements.

use petgraph::unionfind::UnionFind;

use crate::algebra::Elem;
use crate::congruence::PrimeInterval;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::propagation::pairwise_solutions;
use crate::sbm::{minimal_element, split_elements};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkPartition {
    pub vars: Vec<usize>,
    pub k: usize,
    /// `classes[i][j]`: the part `A_{vars[i], j}`, sorted.
    pub classes: Vec<Vec<Vec<Elem>>>,
}

impl LinkPartition {
    /// Index of the part holding `a` at `vars[i]`.
    pub fn class_index(&self, i: usize, a: Elem) -> Option<usize> {
        self.classes[i].iter().position(|c| c.contains(&a))
    }
}

/// Split and non-split elements per variable of `w`, merged across the
/// pairwise solution sets into one common partition (numbered by the least
/// element at `w[0]`, so every bijection is the identity).
pub fn link_partition(inst: &Instance, w: &[usize], intervals: &[PrimeInterval]) -> Result<LinkPartition> {
    let mut parts: Vec<[Vec<Elem>; 2]> = Vec::with_capacity(w.len());
    for (&v, iv) in w.iter().zip(intervals) {
        let alg = &inst.domains[v].algebra;
        if minimal_element(alg).is_none() {
            return Err(Error::PreconditionViolated(format!("domain of `{}` has no minimal element", inst.vars[v])));
        }
        let split = split_elements(alg, &iv.lower, &iv.upper);
        let rest: Vec<Elem> = alg.elements().filter(|a| !split.contains(a)).collect();
        parts.push([split, rest]);
    }
    let node = |i: usize, side: usize| 2 * i + side;
    let side_of = |i: usize, a: Elem| usize::from(!parts[i][0].contains(&a));
    let mut uf = UnionFind::<usize>::new(2 * w.len());
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            for t in pairwise_solutions(inst, w[i], w[j]).tuples() {
                uf.union(node(i, side_of(i, t[0])), node(j, side_of(j, t[1])));
            }
        }
    }
    for (i, p) in parts.iter().enumerate() {
        if !p[0].is_empty() && !p[1].is_empty() && uf.equiv(node(i, 0), node(i, 1)) {
            let other = (0..w.len())
                .find(|&j| j != i && (uf.equiv(node(i, 0), node(j, 0)) || uf.equiv(node(i, 0), node(j, 1))))
                .map(|j| inst.vars[w[j]].clone())
                .unwrap_or_default();
            return Err(Error::NotAligned(inst.vars[w[i]].clone(), other));
        }
    }
    let mut comps: Vec<usize> = Vec::new();
    let mut order: Vec<(Elem, usize)> = Vec::new();
    for side in 0..2 {
        if parts[0][side].is_empty() {
            continue;
        }
        let root = uf.find(node(0, side));
        if !comps.contains(&root) {
            comps.push(root);
            order.push((parts[0][side][0], root));
        }
    }
    for i in 1..w.len() {
        for side in 0..2 {
            let root = uf.find(node(i, side));
            if !parts[i][side].is_empty() && !comps.contains(&root) {
                comps.push(root);
                order.push((Elem::MAX, root));
            }
        }
    }
    order.sort();
    let classes = (0..w.len())
        .map(|i| {
            order
                .iter()
                .map(|&(_, root)| {
                    (0..2)
                        .filter(|&s| !parts[i][s].is_empty() && uf.find(node(i, s)) == root)
                        .flat_map(|s| parts[i][s].iter().copied())
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(LinkPartition { vars: w.to_vec(), k: order.len(), classes })
}
