//! Unary polynomials of algebras and of relations.
//!
//! A unary polynomial of a relation `R ≤ A_1 × .. × A_k` is stored as the
//! tuple of its component maps `(f_1, .., f_k)`. The polynomial monoid of `R`
//! is the subuniverse of `A_1^{A_1} × .. × A_k^{A_k}` generated by the identity
//! and by the constant maps of the tuples of `R`; every element carries a
//! derivation so it can be replayed on a larger relation.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rustc_hash::{FxHashMap, FxHasher};

use crate::algebra::{Elem, FiniteAlgebra};
use crate::congruence::Congruence;
use crate::error::{Error, Result};
use crate::relation::Relation;

/// Graph of a unary map on `{0..n-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MapTable(Box<[Elem]>);

impl fmt::Debug for MapTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl MapTable {
    pub fn new(entries: Vec<Elem>) -> Self {
        MapTable(entries.into_boxed_slice())
    }

    pub fn identity(n: usize) -> Self {
        MapTable((0..n as Elem).collect())
    }

    pub fn constant(n: usize, a: Elem) -> Self {
        MapTable(vec![a; n].into_boxed_slice())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Elem] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, a: Elem) -> Elem {
        self.0[a as usize]
    }

    /// Sorted image.
    pub fn image(&self) -> Vec<Elem> {
        let mut v = self.0.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn image_of(&self, set: &[Elem]) -> Vec<Elem> {
        let mut v: Vec<Elem> = set.iter().map(|&a| self.apply(a)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MapTable) -> MapTable {
        MapTable(inner.0.iter().map(|&a| self.apply(a)).collect())
    }

    pub fn is_idempotent(&self) -> bool {
        self.0.iter().all(|&a| self.apply(a) == a)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &a)| i == a as usize)
    }

    /// The idempotent power `f^k` together with `k`.
    pub fn idempotent_power_with_exponent(&self) -> (MapTable, usize) {
        let mut g = self.clone();
        let mut k = 1;
        while !g.is_idempotent() {
            g = g.compose(self);
            k += 1;
        }
        (g, k)
    }

    pub fn idempotent_power(&self) -> MapTable {
        self.idempotent_power_with_exponent().0
    }

    /// `f(upper) ⊆ lower`.
    pub fn collapses(&self, upper: &Congruence, lower: &Congruence) -> bool {
        (0..self.len() as Elem).all(|a| lower.related(self.apply(a), self.apply(upper.label(a))))
    }

    pub fn preserves(&self, c: &Congruence) -> bool {
        self.collapses(c, c)
    }
}

pub fn idempotent_power(f: &MapTable) -> MapTable {
    f.idempotent_power()
}

/// A term in one variable over constants, stored as a DAG in topological
/// order; the last node is the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceNode {
    Var,
    /// Index into the witness constants.
    Const(usize),
    Dot(usize, usize),
    Maltsev(usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trace {
    nodes: Vec<TraceNode>,
}

impl Trace {
    pub fn var() -> Self {
        Trace { nodes: vec![TraceNode::Var] }
    }

    pub fn nodes(&self) -> &[TraceNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// `outer ∘ inner`; the outer constants are assumed to follow the inner ones.
    fn compose(outer: &Trace, inner: &Trace, outer_const_offset: usize) -> Trace {
        let mut nodes = inner.nodes.clone();
        let mut remap = Vec::with_capacity(outer.nodes.len());
        for node in &outer.nodes {
            let idx = match *node {
                TraceNode::Var => inner.root(),
                TraceNode::Const(c) => {
                    nodes.push(TraceNode::Const(c + outer_const_offset));
                    nodes.len() - 1
                }
                TraceNode::Dot(a, b) => {
                    nodes.push(TraceNode::Dot(remap[a], remap[b]));
                    nodes.len() - 1
                }
                TraceNode::Maltsev(a, b, c) => {
                    nodes.push(TraceNode::Maltsev(remap[a], remap[b], remap[c]));
                    nodes.len() - 1
                }
            };
            remap.push(idx);
        }
        // The root must be the last node; a bare `Var` outer trace leaves it in place.
        let root = remap[outer.root()];
        if root != nodes.len() - 1 {
            let n = nodes[root];
            nodes.push(n);
        }
        Trace { nodes }
    }

    /// Evaluates the term componentwise over `algebras` with the given constant tuples.
    pub fn evaluate(&self, algebras: &[Arc<FiniteAlgebra>], constants: &[Vec<Elem>]) -> Vec<MapTable> {
        let mut values: Vec<Vec<MapTable>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v: Vec<MapTable> = match *node {
                TraceNode::Var => algebras.iter().map(|a| MapTable::identity(a.size())).collect(),
                TraceNode::Const(c) => algebras
                    .iter()
                    .enumerate()
                    .map(|(i, a)| MapTable::constant(a.size(), constants[c][i]))
                    .collect(),
                TraceNode::Dot(x, y) => algebras
                    .iter()
                    .enumerate()
                    .map(|(i, alg)| {
                        let (f, g) = (&values[x][i], &values[y][i]);
                        MapTable((0..alg.size()).map(|e| alg.dot(f.0[e], g.0[e])).collect())
                    })
                    .collect(),
                TraceNode::Maltsev(x, y, z) => algebras
                    .iter()
                    .enumerate()
                    .map(|(i, alg)| {
                        let (f, g, h) = (&values[x][i], &values[y][i], &values[z][i]);
                        MapTable((0..alg.size()).map(|e| alg.m(f.0[e], g.0[e], h.0[e])).collect())
                    })
                    .collect(),
            };
            values.push(v);
        }
        values.pop().expect("trace has a root")
    }
}

/// One unary polynomial of a host relation: component maps, the host tuples
/// it uses as constants, and the term that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialWitness {
    pub components: Vec<MapTable>,
    pub constants: Vec<Vec<Elem>>,
    pub trace: Trace,
}

impl PolynomialWitness {
    pub fn identity(algebras: &[Arc<FiniteAlgebra>]) -> Self {
        PolynomialWitness {
            components: algebras.iter().map(|a| MapTable::identity(a.size())).collect(),
            constants: Vec::new(),
            trace: Trace::var(),
        }
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &MapTable {
        &self.components[i]
    }

    pub fn apply(&self, tuple: &[Elem]) -> Vec<Elem> {
        tuple.iter().zip(&self.components).map(|(&a, f)| f.apply(a)).collect()
    }

    pub fn replay(&self, algebras: &[Arc<FiniteAlgebra>]) -> Vec<MapTable> {
        self.trace.evaluate(algebras, &self.constants)
    }

    pub fn replays_exactly(&self, algebras: &[Arc<FiniteAlgebra>]) -> bool {
        self.replay(algebras) == self.components
    }

    pub fn is_idempotent(&self) -> bool {
        self.components.iter().all(MapTable::is_idempotent)
    }

    /// `self ∘ inner`, both over the same host.
    pub fn compose(&self, inner: &PolynomialWitness) -> PolynomialWitness {
        let mut constants = inner.constants.clone();
        constants.extend(self.constants.iter().cloned());
        PolynomialWitness {
            components: self.components.iter().zip(&inner.components).map(|(f, g)| f.compose(g)).collect(),
            constants,
            trace: Trace::compose(&self.trace, &inner.trace, inner.constants.len()),
        }
    }

    /// `x ↦ self(x) · c` for a host tuple `c`.
    pub fn dot_constant(&self, c: &[Elem], algebras: &[Arc<FiniteAlgebra>]) -> PolynomialWitness {
        let mut constants = self.constants.clone();
        constants.push(c.to_vec());
        let mut nodes = self.trace.nodes.clone();
        let root = nodes.len() - 1;
        nodes.push(TraceNode::Const(constants.len() - 1));
        nodes.push(TraceNode::Dot(root, nodes.len() - 1));
        let components = self
            .components
            .iter()
            .zip(algebras)
            .zip(c)
            .map(|((f, alg), &ci)| MapTable(f.0.iter().map(|&x| alg.dot(x, ci)).collect()))
            .collect();
        PolynomialWitness { components, constants, trace: Trace { nodes } }
    }

    /// `x ↦ m(self(x), c, d)` for host tuples `c`, `d`.
    pub fn maltsev_constants(&self, c: &[Elem], d: &[Elem], algebras: &[Arc<FiniteAlgebra>]) -> PolynomialWitness {
        let mut constants = self.constants.clone();
        constants.push(c.to_vec());
        constants.push(d.to_vec());
        let mut nodes = self.trace.nodes.clone();
        let root = nodes.len() - 1;
        nodes.push(TraceNode::Const(constants.len() - 2));
        nodes.push(TraceNode::Const(constants.len() - 1));
        let n = nodes.len();
        nodes.push(TraceNode::Maltsev(root, n - 2, n - 1));
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, f)| MapTable(f.0.iter().map(|&x| algebras[i].m(x, c[i], d[i])).collect()))
            .collect();
        PolynomialWitness { components, constants, trace: Trace { nodes } }
    }

    /// `x ↦ m(x, self(x), c)` for a host tuple `c`.
    pub fn maltsev_diff(&self, c: &[Elem], algebras: &[Arc<FiniteAlgebra>]) -> PolynomialWitness {
        let mut constants = self.constants.clone();
        constants.push(c.to_vec());
        // Var must be shared with the inner term, so reuse its Var node when present.
        let mut nodes = self.trace.nodes.clone();
        let root = nodes.len() - 1;
        let var = match nodes.iter().position(|n| *n == TraceNode::Var) {
            Some(v) => v,
            None => {
                nodes.push(TraceNode::Var);
                nodes.len() - 1
            }
        };
        nodes.push(TraceNode::Const(constants.len() - 1));
        let k = nodes.len() - 1;
        nodes.push(TraceNode::Maltsev(var, root, k));
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, f)| MapTable((0..f.len()).map(|x| algebras[i].m(x as Elem, f.0[x], c[i])).collect()))
            .collect();
        PolynomialWitness { components, constants, trace: Trace { nodes } }
    }

    /// The idempotent power of the whole tuple of maps.
    pub fn idempotent_power(&self) -> PolynomialWitness {
        let mut acc = self.clone();
        while !acc.is_idempotent() {
            acc = acc.compose(self);
        }
        acc
    }

    /// Extends this polynomial of a host relation to `target`: coordinate `c`
    /// of the host corresponds to coordinate `coords[c]` of the target, and
    /// every constant is lifted to the least target tuple projecting onto it.
    pub fn extend(&self, target: &Relation, coords: &[usize]) -> Result<PolynomialWitness> {
        if coords.len() != self.arity() {
            return Err(Error::PreconditionViolated(format!(
                "coordinate map of length {} for a polynomial of arity {}",
                coords.len(),
                self.arity()
            )));
        }
        for &c in coords {
            if c >= target.arity() {
                return Err(Error::BadIndex(c, target.arity()));
            }
        }
        let mut constants = Vec::with_capacity(self.constants.len());
        for t in &self.constants {
            // tuples are sorted, so the first match is the least one
            let lifted = target
                .tuples()
                .iter()
                .find(|s| coords.iter().zip(t).all(|(&c, &v)| s[c] == v))
                .ok_or_else(|| {
                    Error::PreconditionViolated(format!("constant {t:?} has no preimage in the target relation"))
                })?;
            constants.push(lifted.clone());
        }
        let components = self.trace.evaluate(target.domains(), &constants);
        Ok(PolynomialWitness { components, constants, trace: self.trace.clone() })
    }

    /// Maps the relation into itself.
    pub fn preserves_relation(&self, rel: &Relation) -> bool {
        rel.tuples().iter().all(|t| rel.contains(&self.apply(t)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Var,
    Const(u32),
    Dot(u32, u32),
    Maltsev(u32, u32, u32),
}

#[derive(Clone, Copy, Debug)]
pub struct ClosureLimits {
    pub max_elements: usize,
    pub max_evaluations: u64,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        ClosureLimits { max_elements: 1_000_000, max_evaluations: 400_000_000 }
    }
}

/// All unary polynomials of a host: a single algebra, or a relation whose
/// component maps act on the full universes of its domains.
pub struct PolyMonoid {
    algebras: Vec<Arc<FiniteAlgebra>>,
    offsets: Vec<usize>,
    width: usize,
    constants: Vec<Vec<Elem>>,
    data: Vec<Elem>,
    steps: Vec<Step>,
    index: FxHashMap<Box<[Elem]>, u32>,
}

impl fmt::Debug for PolyMonoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolyMonoid").field("arity", &self.arity()).field("len", &self.len()).finish()
    }
}

impl PolyMonoid {
    pub fn generate(algebras: Vec<Arc<FiniteAlgebra>>, constants: Vec<Vec<Elem>>, limits: ClosureLimits) -> Result<Self> {
        let mut offsets = Vec::with_capacity(algebras.len());
        let mut width = 0;
        for a in &algebras {
            offsets.push(width);
            width += a.size();
        }
        let mut mon = PolyMonoid {
            algebras,
            offsets,
            width,
            constants,
            data: Vec::new(),
            steps: Vec::new(),
            index: FxHashMap::default(),
        };
        let mut buf = vec![0 as Elem; width];
        for (c, alg) in mon.offsets.iter().zip(&mon.algebras) {
            for x in 0..alg.size() {
                buf[c + x] = x as Elem;
            }
        }
        mon.insert(&buf, Step::Var);
        for k in 0..mon.constants.len() {
            for (i, (c, alg)) in mon.offsets.iter().zip(&mon.algebras).enumerate() {
                buf[*c..*c + alg.size()].fill(mon.constants[k][i]);
            }
            mon.insert(&buf, Step::Const(k as u32));
        }
        mon.close(limits)?;
        Ok(mon)
    }

    fn insert(&mut self, entries: &[Elem], step: Step) -> bool {
        if self.index.contains_key(entries) {
            return false;
        }
        let id = self.steps.len() as u32;
        self.index.insert(entries.into(), id);
        self.data.extend_from_slice(entries);
        self.steps.push(step);
        true
    }

    fn close(&mut self, limits: ClosureLimits) -> Result<()> {
        let width = self.width;
        let mut buf = vec![0 as Elem; width];
        let mut evaluations: u64 = 0;
        let mut t = 0;
        // Semi-naive: when element `t` is processed, every argument tuple whose
        // largest index is `t` gets evaluated exactly once.
        while t < self.steps.len() {
            for q in 0..t {
                for (x, y) in [(t, q), (q, t)] {
                    self.eval_dot(x, y, &mut buf);
                    self.insert_checked(&buf, Step::Dot(x as u32, y as u32), limits)?;
                }
            }
            for x in 0..=t {
                for y in 0..=t {
                    let z_range = if x < t && y < t { t..t + 1 } else { 0..t + 1 };
                    for z in z_range {
                        if x == t && y == t && z == t {
                            continue;
                        }
                        self.eval_maltsev(x, y, z, &mut buf);
                        self.insert_checked(&buf, Step::Maltsev(x as u32, y as u32, z as u32), limits)?;
                    }
                }
            }
            evaluations += (3 * (t as u64 + 1) * (t as u64 + 1) + 2 * t as u64) * width.max(1) as u64;
            if evaluations > limits.max_evaluations {
                return Err(Error::ClosureBudgetExceeded(format!(
                    "more than {} table evaluations after {} polynomials",
                    limits.max_evaluations,
                    self.len()
                )));
            }
            t += 1;
        }
        Ok(())
    }

    fn insert_checked(&mut self, buf: &[Elem], step: Step, limits: ClosureLimits) -> Result<()> {
        if self.insert(buf, step) && self.steps.len() > limits.max_elements {
            return Err(Error::ClosureBudgetExceeded(format!("more than {} polynomials", limits.max_elements)));
        }
        Ok(())
    }

    fn eval_dot(&self, x: usize, y: usize, out: &mut [Elem]) {
        let w = self.width;
        let (f, g) = (&self.data[x * w..(x + 1) * w], &self.data[y * w..(y + 1) * w]);
        for (c, alg) in self.offsets.iter().zip(&self.algebras) {
            for e in *c..*c + alg.size() {
                out[e] = alg.dot(f[e], g[e]);
            }
        }
    }

    fn eval_maltsev(&self, x: usize, y: usize, z: usize, out: &mut [Elem]) {
        let w = self.width;
        let f = &self.data[x * w..(x + 1) * w];
        let g = &self.data[y * w..(y + 1) * w];
        let h = &self.data[z * w..(z + 1) * w];
        for (c, alg) in self.offsets.iter().zip(&self.algebras) {
            for e in *c..*c + alg.size() {
                out[e] = alg.m(f[e], g[e], h[e]);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.algebras.len()
    }

    pub fn algebras(&self) -> &[Arc<FiniteAlgebra>] {
        &self.algebras
    }

    /// Component `coord` of polynomial `i`.
    pub fn component(&self, i: usize, coord: usize) -> &[Elem] {
        let start = i * self.width + self.offsets[coord];
        &self.data[start..start + self.algebras[coord].size()]
    }

    pub fn map(&self, i: usize, coord: usize) -> MapTable {
        MapTable::new(self.component(i, coord).to_vec())
    }

    pub fn components(&self, i: usize) -> Vec<MapTable> {
        (0..self.arity()).map(|c| self.map(i, c)).collect()
    }

    pub fn contains(&self, components: &[MapTable]) -> bool {
        let flat: Vec<Elem> = components.iter().flat_map(|m| m.entries().iter().copied()).collect();
        flat.len() == self.width && self.index.contains_key(flat.as_slice())
    }

    pub fn position(&self, components: &[MapTable]) -> Option<usize> {
        let flat: Vec<Elem> = components.iter().flat_map(|m| m.entries().iter().copied()).collect();
        self.index.get(flat.as_slice()).map(|&i| i as usize)
    }

    /// Distinct maps occurring as component `coord`.
    pub fn component_maps(&self, coord: usize) -> Vec<MapTable> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut out = Vec::new();
        for i in 0..self.len() {
            if seen.insert(self.component(i, coord)) {
                out.push(self.map(i, coord));
            }
        }
        out
    }

    /// Witness for polynomial `i` with a trace restricted to its derivation.
    pub fn witness(&self, i: usize) -> PolynomialWitness {
        let mut needed = vec![false; i + 1];
        needed[i] = true;
        for j in (0..=i).rev() {
            if !needed[j] {
                continue;
            }
            match self.steps[j] {
                Step::Var | Step::Const(_) => {}
                Step::Dot(a, b) => {
                    needed[a as usize] = true;
                    needed[b as usize] = true;
                }
                Step::Maltsev(a, b, c) => {
                    needed[a as usize] = true;
                    needed[b as usize] = true;
                    needed[c as usize] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; i + 1];
        let mut nodes = Vec::new();
        let mut constants = Vec::new();
        for j in 0..=i {
            if !needed[j] {
                continue;
            }
            let node = match self.steps[j] {
                Step::Var => TraceNode::Var,
                Step::Const(k) => {
                    constants.push(self.constants[k as usize].clone());
                    TraceNode::Const(constants.len() - 1)
                }
                Step::Dot(a, b) => TraceNode::Dot(remap[a as usize], remap[b as usize]),
                Step::Maltsev(a, b, c) => TraceNode::Maltsev(remap[a as usize], remap[b as usize], remap[c as usize]),
            };
            remap[j] = nodes.len();
            nodes.push(node);
        }
        PolynomialWitness { components: self.components(i), constants, trace: Trace { nodes } }
    }
}

type CacheKey = (Vec<u64>, Vec<Vec<Elem>>);

type MonoidCache = FxHashMap<u64, Vec<(CacheKey, Arc<PolyMonoid>)>>;

static MONOID_CACHE: Lazy<Mutex<MonoidCache>> =
    Lazy::new(|| Mutex::new(FxHashMap::default()));

fn cached_monoid(algebras: Vec<Arc<FiniteAlgebra>>, constants: Vec<Vec<Elem>>) -> Result<Arc<PolyMonoid>> {
    let key: CacheKey = (algebras.iter().map(|a| a.fingerprint()).collect(), constants.clone());
    let mut hasher = FxHasher::default();
    key.hash(&mut hasher);
    let h = hasher.finish();
    let same = |m: &PolyMonoid| m.algebras.iter().zip(&algebras).all(|(x, y)| x.same_tables(y));
    if let Some(bucket) = MONOID_CACHE.lock().get(&h) {
        if let Some((_, m)) = bucket.iter().find(|(k, m)| *k == key && same(m)) {
            return Ok(m.clone());
        }
    }
    let mon = Arc::new(PolyMonoid::generate(algebras, constants, ClosureLimits::default())?);
    MONOID_CACHE.lock().entry(h).or_default().push((key, mon.clone()));
    Ok(mon)
}

/// All unary polynomials of `alg`.
pub fn unary_polynomial_monoid(alg: &FiniteAlgebra) -> Result<Arc<PolyMonoid>> {
    let constants = alg.elements().map(|a| vec![a]).collect();
    cached_monoid(vec![Arc::new(alg.clone())], constants)
}

/// All pairs `(f_1, f_2)` of component actions of unary polynomials of a
/// binary subdirect relation.
pub fn pair_polynomial_monoid(rel: &Relation) -> Result<Arc<PolyMonoid>> {
    if rel.arity() != 2 {
        return Err(Error::PreconditionViolated(format!("pair monoid of a relation of arity {}", rel.arity())));
    }
    relation_polynomial_monoid(rel)
}

/// Unary polynomials of a subdirect relation of any arity.
pub fn relation_polynomial_monoid(rel: &Relation) -> Result<Arc<PolyMonoid>> {
    if !rel.is_subdirect() {
        return Err(Error::NotSubdirect);
    }
    cached_monoid(rel.domains().to_vec(), rel.tuples().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::congruence_lattice;
    use crate::sbm::{fix_a, fix_b};

    #[test]
    fn idempotent_powers() {
        assert!(MapTable::identity(3).idempotent_power().is_identity());
        let c = MapTable::constant(3, 2);
        assert_eq!(c.idempotent_power(), c);
        let swap = MapTable::new(vec![1, 0]);
        assert!(swap.idempotent_power().is_identity());
        let f = MapTable::new(vec![1, 2, 0, 0]);
        let (g, k) = f.idempotent_power_with_exponent();
        assert!(g.is_idempotent());
        assert_eq!(k, 3);
    }

    #[test]
    fn monoid_sizes() {
        let one = FiniteAlgebra::projection(1);
        assert_eq!(unary_polynomial_monoid(&one).unwrap().len(), 1);
        assert_eq!(unary_polynomial_monoid(&fix_b()).unwrap().len(), 11);
        assert_eq!(unary_polynomial_monoid(&fix_a()).unwrap().len(), 34);
        // affine maps x -> kx + c over Z3
        assert_eq!(unary_polynomial_monoid(&FiniteAlgebra::cyclic(3)).unwrap().len(), 9);
    }

    #[test]
    fn fix_b_has_constant_one() {
        let mon = unary_polynomial_monoid(&fix_b()).unwrap();
        assert!(mon.contains(&[MapTable::constant(3, 1)]));
        let i = mon.position(&[MapTable::constant(3, 1)]).unwrap();
        let w = mon.witness(i);
        assert!(w.replays_exactly(mon.algebras()));
    }

    #[test]
    fn polynomials_preserve_congruences() {
        for alg in [fix_a(), fix_b(), FiniteAlgebra::cyclic(3), FiniteAlgebra::cyclic(4)] {
            let mon = unary_polynomial_monoid(&alg).unwrap();
            let lat = congruence_lattice(&alg);
            for i in 0..mon.len() {
                let f = mon.map(i, 0);
                for c in lat.elements() {
                    assert!(f.preserves(c), "{} {:?} {:?}", alg.name(), f, c);
                }
            }
        }
    }

    #[test]
    fn every_witness_replays() {
        let mon = unary_polynomial_monoid(&fix_a()).unwrap();
        for i in 0..mon.len() {
            assert!(mon.witness(i).replays_exactly(mon.algebras()));
        }
    }

    #[test]
    fn pair_monoid_of_equality_is_diagonal() {
        let b = Arc::new(fix_b());
        let eq = Relation::equality(b.clone());
        let pairs = pair_polynomial_monoid(&eq).unwrap();
        let unary = unary_polynomial_monoid(&b).unwrap();
        assert_eq!(pairs.len(), unary.len());
        for i in 0..pairs.len() {
            assert_eq!(pairs.component(i, 0), pairs.component(i, 1));
            assert!(unary.contains(&[pairs.map(i, 0)]));
        }
    }

    #[test]
    fn pair_monoid_of_full_product() {
        let b = Arc::new(fix_b());
        let full = Relation::full(vec![0, 1], vec![b.clone(), b.clone()]);
        let pairs = pair_polynomial_monoid(&full).unwrap();
        // both sides share one term, so not every pair of unary polynomials
        // occurs; 103 comes from an independent brute-force closure
        assert_eq!(pairs.len(), 103);
        let unary = unary_polynomial_monoid(&b).unwrap();
        for side in 0..2 {
            assert_eq!(pairs.component_maps(side).len(), unary.len());
        }
    }

    #[test]
    fn composition_and_extension_replay() {
        let b = Arc::new(fix_b());
        let full = Relation::full(vec![0, 1, 2], vec![b.clone(), b.clone(), b.clone()]);
        let pairs = pair_polynomial_monoid(&Relation::full(vec![0, 1], vec![b.clone(), b.clone()])).unwrap();
        for i in (0..pairs.len()).step_by(7) {
            let w = pairs.witness(i);
            let ext = w.extend(&full, &[0, 2]).unwrap();
            assert_eq!(ext.components[0], w.components[0]);
            assert_eq!(ext.components[2], w.components[1]);
            assert!(ext.replays_exactly(full.domains()));
            let sq = ext.compose(&ext);
            assert!(sq.replays_exactly(full.domains()));
            let p = ext.idempotent_power();
            assert!(p.is_idempotent());
            assert!(p.replays_exactly(full.domains()));
            let d = ext.maltsev_diff(&[1, 2, 1], full.domains());
            assert!(d.replays_exactly(full.domains()));
            let k = ext.maltsev_constants(&[1, 1, 1], &[2, 2, 2], full.domains());
            assert!(k.replays_exactly(full.domains()));
        }
    }

    #[test]
    fn non_subdirect_is_rejected() {
        let b = Arc::new(fix_b());
        let rel = Relation::new(vec![0, 1], vec![b.clone(), b.clone()], vec![vec![1, 1]]).unwrap();
        assert!(matches!(pair_polynomial_monoid(&rel), Err(Error::NotSubdirect)));
    }
}
