//! Coherent sets: classes of prime intervals that cannot be separated.

use petgraph::unionfind::UnionFind;

use crate::domain::algebra_info;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::propagation::pairwise_solutions;
use crate::separation::{separable, IntervalTriple};

#[derive(Clone, Debug)]
pub struct CoherentIndex {
    /// Triples `(v, α, β)` with `α ≺ β ≤ θ_v`, coordinate = variable.
    pub triples: Vec<IntervalTriple>,
    /// `apart[x][y]`: triple `x` can be separated from triple `y`.
    pub apart: Vec<Vec<bool>>,
    pub class_of: Vec<usize>,
    /// Triple indices per class, sorted.
    pub classes: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherentSet {
    pub vars: Vec<usize>,
    /// Class members, sorted.
    pub triples: Vec<IntervalTriple>,
}

impl CoherentIndex {
    /// The variables `W` of a class.
    pub fn set_of_class(&self, class: usize) -> CoherentSet {
        let triples: Vec<IntervalTriple> = self.classes[class].iter().map(|&x| self.triples[x].clone()).collect();
        let mut vars: Vec<usize> = triples.iter().map(|t| t.coord).collect();
        vars.sort_unstable();
        vars.dedup();
        CoherentSet { vars, triples }
    }

    pub fn sets(&self) -> Vec<CoherentSet> {
        (0..self.classes.len()).map(|c| self.set_of_class(c)).collect()
    }

    /// `W_{vαβ}` for triple `x`.
    pub fn set_of(&self, x: usize) -> CoherentSet {
        self.set_of_class(self.class_of[x])
    }

    /// Non-separability is reflexive, symmetric and transitive.
    pub fn check_axioms(&self) -> Result<()> {
        let n = self.triples.len();
        let same = |x: usize, y: usize| !self.apart[x][y];
        for x in 0..n {
            if !same(x, x) {
                return Err(Error::InternalInvariantViolated(format!("{:?} is separable from itself", self.triples[x])));
            }
            for y in 0..n {
                if same(x, y) != same(y, x) {
                    return Err(Error::InternalInvariantViolated(format!(
                        "separation of {:?} and {:?} is not symmetric",
                        self.triples[x], self.triples[y]
                    )));
                }
                for z in 0..n {
                    if same(x, y) && same(y, z) && !same(x, z) {
                        return Err(Error::InternalInvariantViolated(format!(
                            "separation is not transitive on {:?}, {:?}, {:?}",
                            self.triples[x], self.triples[y], self.triples[z]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the index of a 3-minimal instance over whole domains and checks
/// the equivalence axioms.
pub fn coherent_sets(inst: &Instance) -> Result<CoherentIndex> {
    let mut triples = Vec::new();
    for (v, d) in inst.domains.iter().enumerate() {
        let info = algebra_info(&d.algebra)?;
        for iv in &info.intervals {
            triples.push(IntervalTriple::new(v, iv.clone()));
        }
    }
    let n = triples.len();
    let mut apart = vec![vec![false; n]; n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let (v, w) = (triples[x].coord, triples[y].coord);
            let rel = pairwise_solutions(inst, v, w);
            let t1 = IntervalTriple::new(0, triples[x].interval.clone());
            let t2 = IntervalTriple::new(if v == w { 0 } else { 1 }, triples[y].interval.clone());
            apart[x][y] = separable(&rel, &t1, &t2)?;
        }
    }
    let mut uf = UnionFind::<usize>::new(n);
    for x in 0..n {
        for y in 0..n {
            if !apart[x][y] {
                uf.union(x, y);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut roots: Vec<usize> = Vec::new();
    let mut class_of = vec![0; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        let c = match roots.iter().position(|&r| r == labels[x]) {
            Some(c) => c,
            None => {
                roots.push(labels[x]);
                classes.push(Vec::new());
                roots.len() - 1
            }
        };
        class_of[x] = c;
        classes[c].push(x);
    }
    let index = CoherentIndex { triples, apart, class_of, classes };
    index.check_axioms()?;
    Ok(index)
}
