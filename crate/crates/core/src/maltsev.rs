//! Compact representations of solution sets over Mal'tsev domains.
//!
//! Constraints are added one at a time. A representation keeps, for every
//! signature entry `(i, a, b)`, two member tuples that agree before
//! coordinate `i` and read `a`, `b` at `i`; the Mal'tsev term regenerates the
//! whole relation from them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::instance::{Domain, Instance};

pub type SigEntry = (usize, Elem, Elem);

#[derive(Clone, Debug)]
pub struct CompactRep {
    algebras: Vec<Arc<FiniteAlgebra>>,
    sizes: Vec<usize>,
    /// Sorted, deduplicated.
    witnesses: Vec<Vec<Elem>>,
    /// Entry to the indices of its witness pair.
    signature: BTreeMap<SigEntry, (usize, usize)>,
}

fn maltsev_tuple(algs: &[Arc<FiniteAlgebra>], x: &[Elem], y: &[Elem], z: &[Elem]) -> Vec<Elem> {
    (0..x.len()).map(|i| algs[i].m(x[i], y[i], z[i])).collect()
}

/// Projection index: packed into a `u64` for up to ten coordinates.
enum ProjIndex {
    Packed(FxHashMap<u64, usize>),
    Wide(FxHashMap<Vec<Elem>, usize>),
}

impl ProjIndex {
    fn new(width: usize) -> Self {
        if width <= 10 {
            ProjIndex::Packed(FxHashMap::default())
        } else {
            ProjIndex::Wide(FxHashMap::default())
        }
    }

    fn pack(p: &[Elem]) -> u64 {
        p.iter().fold(0u64, |acc, &x| (acc << 6) | x as u64)
    }

    fn contains(&self, p: &[Elem]) -> bool {
        match self {
            ProjIndex::Packed(m) => m.contains_key(&Self::pack(p)),
            ProjIndex::Wide(m) => m.contains_key(p),
        }
    }

    fn insert(&mut self, p: &[Elem], at: usize) {
        match self {
            ProjIndex::Packed(m) => {
                m.insert(Self::pack(p), at);
            }
            ProjIndex::Wide(m) => {
                m.insert(p.to_vec(), at);
            }
        }
    }
}

struct Closure {
    width: usize,
    projs: Vec<Elem>,
    fulls: Vec<usize>,
    extra: Vec<Vec<Elem>>,
    base: usize,
    hit: Option<Vec<Elem>>,
}

impl Closure {
    fn len(&self) -> usize {
        self.fulls.len()
    }

    fn proj(&self, q: usize) -> &[Elem] {
        &self.projs[q * self.width..(q + 1) * self.width]
    }

    fn full<'a>(&'a self, q: usize, tuples: &'a [Vec<Elem>]) -> &'a [Elem] {
        let f = self.fulls[q];
        if f < self.base {
            &tuples[f]
        } else {
            &self.extra[f - self.base]
        }
    }
}

/// How to rebuild a projection from the closure over fewer coordinates.
enum Slot {
    Varying(usize),
    Constant(Elem),
}

/// Closure of `pr_coords U` under `m`, keeping one full tuple per projection.
/// Stops early at the first projection accepted by `stop`.
fn project_closure(
    algs: &[Arc<FiniteAlgebra>],
    tuples: &[Vec<Elem>],
    coords: &[usize],
    stop: &mut dyn FnMut(&[Elem]) -> bool,
) -> Closure {
    let w = coords.len();
    let mut projs: Vec<Elem> = Vec::new();
    let mut fulls: Vec<usize> = Vec::new();
    let mut extra: Vec<Vec<Elem>> = Vec::new();
    let mut index = ProjIndex::new(w);
    let finish = |projs: Vec<Elem>, fulls: Vec<usize>, extra: Vec<Vec<Elem>>, hit: Option<usize>| Closure {
        width: w,
        projs,
        hit: hit.map(|q| if fulls[q] < tuples.len() { tuples[fulls[q]].clone() } else { extra[fulls[q] - tuples.len()].clone() }),
        fulls,
        extra,
        base: tuples.len(),
    };
    let mut scratch: Vec<Elem> = vec![0; w];
    for (x, t) in tuples.iter().enumerate() {
        for (k, &c) in coords.iter().enumerate() {
            scratch[k] = t[c];
        }
        if index.contains(&scratch) {
            continue;
        }
        index.insert(&scratch, fulls.len());
        projs.extend_from_slice(&scratch);
        fulls.push(x);
        if stop(&scratch) {
            let at = fulls.len() - 1;
            return finish(projs, fulls, extra, Some(at));
        }
    }
    let calg: Vec<&FiniteAlgebra> = coords.iter().map(|&c| algs[c].as_ref()).collect();
    let full_of = |f: usize, extra: &Vec<Vec<Elem>>| -> Vec<Elem> {
        if f < tuples.len() {
            tuples[f].clone()
        } else {
            extra[f - tuples.len()].clone()
        }
    };
    let mut q = 0;
    while q < fulls.len() {
        // Triples whose largest index is q: by position of the last q.
        for (a, b, c) in (0..=q)
            .flat_map(|a| (0..=q).map(move |b| (a, b, q)))
            .chain((0..=q).flat_map(|a| (0..q).map(move |c| (a, q, c))))
            .chain((0..q).flat_map(|b| (0..q).map(move |c| (q, b, c))))
        {
            for k in 0..w {
                scratch[k] = calg[k].m(projs[a * w + k], projs[b * w + k], projs[c * w + k]);
            }
            if index.contains(&scratch) {
                continue;
            }
            let full = maltsev_tuple(algs, &full_of(fulls[a], &extra), &full_of(fulls[b], &extra), &full_of(fulls[c], &extra));
            index.insert(&scratch, fulls.len());
            projs.extend_from_slice(&scratch);
            fulls.push(tuples.len() + extra.len());
            extra.push(full);
            if stop(&scratch) {
                let at = fulls.len() - 1;
                return finish(projs, fulls, extra, Some(at));
            }
        }
        q += 1;
    }
    finish(projs, fulls, extra, None)
}

impl CompactRep {
    /// Representation of an explicit relation, with lexicographically least witness pairs.
    pub fn from_tuples(algebras: Vec<Arc<FiniteAlgebra>>, sizes: Vec<usize>, mut tuples: Vec<Vec<Elem>>) -> Self {
        tuples.sort_unstable();
        tuples.dedup();
        let mut sig: BTreeMap<SigEntry, (usize, usize)> = BTreeMap::new();
        for (x, t) in tuples.iter().enumerate() {
            for (i, &a) in t.iter().enumerate() {
                sig.entry((i, a, a)).or_insert((x, x));
            }
            for (y, u) in tuples.iter().enumerate() {
                if let Some(i) = t.iter().zip(u).position(|(p, q)| p != q) {
                    sig.entry((i, t[i], u[i])).or_insert((x, y));
                }
            }
        }
        let mut used: Vec<usize> = sig.values().flat_map(|&(x, y)| [x, y]).collect();
        used.sort_unstable();
        used.dedup();
        let remap: FxHashMap<usize, usize> = used.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let witnesses = used.iter().map(|&x| tuples[x].clone()).collect();
        let signature = sig.into_iter().map(|(e, (x, y))| (e, (remap[&x], remap[&y]))).collect();
        CompactRep { algebras, sizes, witnesses, signature }
    }

    /// The full product of the domains.
    pub fn full(domains: &[Domain]) -> Self {
        let algebras: Vec<_> = domains.iter().map(|d| d.algebra.clone()).collect();
        let sizes = domains.iter().map(Domain::len).collect();
        if domains.iter().any(Domain::is_empty) {
            return CompactRep::from_tuples(algebras, sizes, Vec::new());
        }
        let base: Vec<Elem> = domains.iter().map(|d| d.elements[0]).collect();
        let mut tuples = vec![base.clone()];
        for (i, d) in domains.iter().enumerate() {
            for &a in &d.elements {
                let mut t = base.clone();
                t[i] = a;
                tuples.push(t);
            }
        }
        CompactRep::from_tuples(algebras, sizes, tuples)
    }

    pub fn arity(&self) -> usize {
        self.algebras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn witnesses(&self) -> &[Vec<Elem>] {
        &self.witnesses
    }

    pub fn signature(&self) -> impl Iterator<Item = &SigEntry> {
        self.signature.keys()
    }

    pub fn signature_len(&self) -> usize {
        self.signature.len()
    }

    pub fn witness_pair(&self, e: &SigEntry) -> Option<(&[Elem], &[Elem])> {
        self.signature.get(e).map(|&(x, y)| (self.witnesses[x].as_slice(), self.witnesses[y].as_slice()))
    }

    /// `1 + 2·Σ|A_v|²`.
    pub fn witness_bound(&self) -> usize {
        1 + 2 * self.sizes.iter().map(|s| s * s).sum::<usize>()
    }

    /// Drops repeated coordinates and those constant on the relation
    /// (idempotency keeps them constant under `m`).
    fn reduce(&self, coords: &[usize]) -> (Vec<usize>, Vec<Slot>) {
        let mut varying: Vec<usize> = Vec::new();
        let slots = coords
            .iter()
            .map(|&c| {
                let v0 = self.witnesses[0][c];
                if self.witnesses.iter().all(|t| t[c] == v0) {
                    Slot::Constant(v0)
                } else if let Some(k) = varying.iter().position(|&x| x == c) {
                    Slot::Varying(k)
                } else {
                    varying.push(c);
                    Slot::Varying(varying.len() - 1)
                }
            })
            .collect();
        (varying, slots)
    }

    fn expand(slots: &[Slot], p: &[Elem], out: &mut [Elem]) {
        for (o, s) in out.iter_mut().zip(slots) {
            *o = match *s {
                Slot::Varying(k) => p[k],
                Slot::Constant(v) => v,
            };
        }
    }

    /// Some member whose projection onto `coords` satisfies `pred`.
    pub fn find(&self, coords: &[usize], mut pred: impl FnMut(&[Elem]) -> bool) -> Option<Vec<Elem>> {
        if self.is_empty() {
            return None;
        }
        let (varying, slots) = self.reduce(coords);
        let mut buf = vec![0; coords.len()];
        let mut stop = |p: &[Elem]| {
            Self::expand(&slots, p, &mut buf);
            pred(&buf)
        };
        project_closure(&self.algebras, &self.witnesses, &varying, &mut stop).hit
    }

    /// Projections onto `coords` with one member realizing each.
    fn closure_items(&self, coords: &[usize]) -> Vec<(Vec<Elem>, Vec<Elem>)> {
        if self.is_empty() {
            return Vec::new();
        }
        let (varying, slots) = self.reduce(coords);
        let cl = project_closure(&self.algebras, &self.witnesses, &varying, &mut |_| false);
        (0..cl.len())
            .map(|q| {
                let mut p = vec![0; coords.len()];
                Self::expand(&slots, cl.proj(q), &mut p);
                (p, cl.full(q, &self.witnesses).to_vec())
            })
            .collect()
    }

    /// `pr_coords` of the represented relation, sorted.
    pub fn project(&self, coords: &[usize]) -> Vec<Vec<Elem>> {
        let mut out: Vec<Vec<Elem>> = self.closure_items(coords).into_iter().map(|(p, _)| p).collect();
        out.sort_unstable();
        out
    }

    /// Every member of the relation in increasing order, by extending
    /// prefixes one coordinate at a time.
    pub fn members(&self) -> Vec<Vec<Elem>> {
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(self.arity());
        self.members_from(&mut prefix, &mut out);
        out
    }

    fn members_from(&self, prefix: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if self.is_empty() {
            return;
        }
        let j = prefix.len();
        if j == self.arity() {
            out.push(prefix.clone());
            return;
        }
        for p in self.project(&[j]) {
            prefix.push(p[0]);
            self.fix_step(j, p[0]).members_from(prefix, out);
            prefix.pop();
        }
    }

    fn empty_like(&self) -> CompactRep {
        CompactRep::from_tuples(self.algebras.clone(), self.sizes.clone(), Vec::new())
    }

    /// Full closure of `pr_coords`, indexed by projection.
    fn closure_map(&self, coords: &[usize]) -> FxHashMap<Vec<Elem>, Vec<Elem>> {
        self.closure_items(coords).into_iter().collect()
    }

    /// Representation of the members with `t[j] = aj`, assuming coordinates
    /// before `j` are already constant.
    fn fix_step(&self, j: usize, aj: Elem) -> CompactRep {
        if self.is_empty() {
            return self.clone();
        }
        let Some(t) = self.find(&[j], |p| p[0] == aj) else {
            return self.empty_like();
        };
        let mut next = vec![t];
        let mut by_coord: FxHashMap<usize, FxHashMap<Vec<Elem>, Vec<Elem>>> = FxHashMap::default();
        for (&(i, a, _), &(x, y)) in &self.signature {
            if i <= j {
                continue;
            }
            let pairs = by_coord.entry(i).or_insert_with(|| self.closure_map(&[j, i]));
            if let Some(t1) = pairs.get(&vec![aj, a]) {
                next.push(maltsev_tuple(&self.algebras, t1, &self.witnesses[x], &self.witnesses[y]));
                next.push(t1.clone());
            }
        }
        CompactRep::from_tuples(self.algebras.clone(), self.sizes.clone(), next)
    }

    /// Representation of the members starting with `prefix`.
    pub fn fix_values(&self, prefix: &[Elem]) -> CompactRep {
        let mut cur = self.clone();
        for (j, &aj) in prefix.iter().enumerate() {
            cur = cur.fix_step(j, aj);
        }
        cur
    }

    /// Representation of the members whose projection onto `scope` lies in `allowed` (sorted).
    pub fn next(&self, scope: &[usize], allowed: &[Vec<Elem>]) -> CompactRep {
        let k = scope.len();
        let inside = |p: &[Elem]| allowed.binary_search_by(|t| t.as_slice().cmp(&p[..k])).is_ok();
        let mut out: Vec<Vec<Elem>> = Vec::new();
        let mut fixed: FxHashMap<Vec<Elem>, CompactRep> = FxHashMap::default();
        fixed.insert(Vec::new(), self.clone());
        let mut coords = scope.to_vec();
        coords.push(0);
        let mut first: FxHashMap<(usize, Elem), Option<Vec<Elem>>> = FxHashMap::default();
        for &(i, a, b) in self.signature.keys() {
            coords[k] = i;
            let found = first.entry((i, a)).or_insert_with(|| self.find(&coords, |p| p[k] == a && inside(p)));
            let Some(t1) = found.clone() else {
                continue;
            };
            let mut len = (0..=i).rev().find(|&l| fixed.contains_key(&t1[..l])).unwrap_or(0);
            while len < i {
                let rep = fixed[&t1[..len]].fix_step(len, t1[len]);
                len += 1;
                fixed.insert(t1[..len].to_vec(), rep);
            }
            if let Some(t2) = fixed[&t1[..i]].find(&coords, |p| p[k] == b && inside(p)) {
                out.push(t1);
                out.push(t2);
            }
        }
        CompactRep::from_tuples(self.algebras.clone(), self.sizes.clone(), out)
    }

    /// Checks the witness invariants against an explicit member list.
    pub fn check_invariants(&self, members: &[Vec<Elem>]) -> std::result::Result<(), String> {
        if self.witnesses.len() > self.witness_bound() {
            return Err(format!("{} witnesses exceed the bound {}", self.witnesses.len(), self.witness_bound()));
        }
        for w in &self.witnesses {
            if members.binary_search(w).is_err() {
                return Err(format!("witness {w:?} is not a member"));
            }
        }
        let full = CompactRep::from_tuples(self.algebras.clone(), self.sizes.clone(), members.to_vec());
        let mine: Vec<_> = self.signature.keys().collect();
        let theirs: Vec<_> = full.signature.keys().collect();
        if mine != theirs {
            return Err("signature differs from the relation's".into());
        }
        for (&(i, a, b), &(x, y)) in &self.signature {
            let (t, u) = (&self.witnesses[x], &self.witnesses[y]);
            if t[..i] != u[..i] || t[i] != a || u[i] != b {
                return Err(format!("bad witnesses for ({i}, {a}, {b})"));
            }
        }
        Ok(())
    }
}

fn check_domains(inst: &Instance) -> Result<()> {
    for (v, d) in inst.domains.iter().enumerate() {
        if !d.algebra.is_maltsev_on(&d.elements) {
            return Err(Error::NotMaltsevDomain(inst.vars[v].clone()));
        }
    }
    Ok(())
}

/// Compact representation of the solution set.
pub fn solution_rep(inst: &Instance) -> Result<CompactRep> {
    check_domains(inst)?;
    let mut rep = CompactRep::full(&inst.domains);
    for c in &inst.constraints {
        if rep.is_empty() {
            break;
        }
        rep = rep.next(&c.scope, &c.tuples);
    }
    Ok(rep)
}

/// A solution (the least witness of the representation), or `None` when unsatisfiable.
pub fn solve_maltsev(inst: &Instance) -> Result<Option<Vec<Elem>>> {
    Ok(solution_rep(inst)?.witnesses.first().cloned())
}

/// Keeps exactly the tuples and domain elements extending to solutions.
/// Unsatisfiable instances come back with every domain and constraint empty.
pub fn minimalize_maltsev(inst: &Instance) -> Result<Instance> {
    let rep = solution_rep(inst)?;
    let mut domains = inst.domains.clone();
    for (v, d) in domains.iter_mut().enumerate() {
        if rep.is_empty() {
            d.elements.clear();
        } else {
            d.elements = rep.project(&[v]).into_iter().map(|p| p[0]).collect();
        }
    }
    let mut out = inst.with_domains(domains);
    for c in &mut out.constraints {
        if rep.is_empty() {
            c.tuples.clear();
        } else {
            let proj = rep.project(&c.scope);
            c.tuples.retain(|t| proj.binary_search(t).is_ok());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{AlgebraRegistry, Constraint};
    use crate::oracle::{brute_minimalize, brute_solutions};

    fn xor_system() -> Instance {
        Instance::from_json_str(
            r#"{"vars": ["x", "y", "z"], "domains": {"x": "Z2", "y": "Z2", "z": "Z2"},
                "constraints": [
                  {"scope": ["x", "y"], "tuples": [[0, 0], [1, 1]]},
                  {"scope": ["y", "z"], "tuples": [[0, 1], [1, 0]]}]}"#,
            &AlgebraRegistry::builtin(),
        )
        .unwrap()
    }

    #[test]
    fn xor_system_solution() {
        let s = solve_maltsev(&xor_system()).unwrap().unwrap();
        assert!(s == vec![0, 0, 1] || s == vec![1, 1, 0]);
        let rep = solution_rep(&xor_system()).unwrap();
        assert_eq!(rep.members(), vec![vec![0, 0, 1], vec![1, 1, 0]]);
        rep.check_invariants(&rep.members()).unwrap();
    }

    #[test]
    fn empty_constraint_is_unsat() {
        let mut inst = xor_system();
        inst.constraints.push(Constraint::new(vec![0], vec![]));
        assert_eq!(solve_maltsev(&inst).unwrap(), None);
        let m = minimalize_maltsev(&inst).unwrap();
        assert!(m.has_empty_constraint());
    }

    #[test]
    fn lone_variable_has_a_value() {
        let z3 = Arc::new(FiniteAlgebra::cyclic(3));
        let inst = Instance::new(vec!["v".into()], vec![Domain::full(z3)], vec![]).unwrap();
        assert!(solve_maltsev(&inst).unwrap().is_some());
        let rep = solution_rep(&inst).unwrap();
        assert_eq!(rep.project(&[0]), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn unary_pin_shrinks_equation() {
        let reg = AlgebraRegistry::builtin();
        let inst = Instance::from_json_str(
            r#"{"vars": ["x", "y"], "domains": {"x": "Z2", "y": "Z2"},
                "constraints": [
                  {"scope": ["x", "y"], "tuples": [[0, 0], [1, 1]]},
                  {"scope": ["x"], "tuples": [[0]]}]}"#,
            &reg,
        )
        .unwrap();
        let m = minimalize_maltsev(&inst).unwrap();
        assert_eq!(m.constraints[0].tuples, vec![vec![0, 0]]);
        assert!(m.same_problem(&brute_minimalize(&inst).unwrap()));
        assert!(minimalize_maltsev(&m).unwrap().same_problem(&m));
    }

    #[test]
    fn rejects_non_maltsev_domains() {
        let reg = AlgebraRegistry::builtin();
        let inst = Instance::from_json_str(r#"{"vars": ["x"], "domains": {"x": "FIX-B"}, "constraints": []}"#, &reg)
            .unwrap();
        assert!(matches!(solve_maltsev(&inst), Err(Error::NotMaltsevDomain(_))));
    }

    #[test]
    fn z3_equation_system_matches_brute_force() {
        let reg = AlgebraRegistry::builtin();
        // x + y = z, y = 2x, over Z3.
        let sum: Vec<Vec<Elem>> =
            (0..3).flat_map(|x| (0..3).map(move |y| vec![x, y, (x + y) % 3])).collect();
        let dbl: Vec<Vec<Elem>> = (0..3).map(|x| vec![x, (2 * x) % 3]).collect();
        let mut inst = Instance::from_json_str(
            r#"{"vars": ["x", "y", "z"], "domains": {"x": "Z3", "y": "Z3", "z": "Z3"}, "constraints": []}"#,
            &reg,
        )
        .unwrap();
        inst.constraints.push(Constraint::new(vec![0, 1, 2], sum));
        inst.constraints.push(Constraint::new(vec![0, 1], dbl));
        let rep = solution_rep(&inst).unwrap();
        assert_eq!(rep.members(), brute_solutions(&inst).unwrap());
        rep.check_invariants(&rep.members()).unwrap();
    }
}
