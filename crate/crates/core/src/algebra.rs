//! Finite algebras with one binary operation `dot` and one ternary operation `m`,
//! stored as dense operation tables over the universe `{0, .., n-1}`.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::congruence::Congruence;
use crate::error::{Error, Result};
use crate::polynomial::MapTable;

/// Universe element. Universes are small, so a byte is plenty.
pub type Elem = u8;

/// Largest universe the table representation supports.
pub const MAX_SIZE: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    dot: Vec<Elem>,
    m: Vec<Elem>,
    fingerprint: u64,
}

impl Hash for FiniteAlgebra {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.fingerprint.hash(state);
    }
}

impl FiniteAlgebra {
    /// Builds an algebra from a square `dot` table and a flat row-major `m`
    /// table of length `n^3`, checking totality and idempotency.
    pub fn new(name: impl Into<String>, size: usize, dot: Vec<Vec<usize>>, m: Vec<usize>) -> Result<Self> {
        if dot.len() != size || dot.iter().any(|row| row.len() != size) {
            return Err(Error::NonTotalTable(format!("dot must be {size}x{size}")));
        }
        let flat: Vec<usize> = dot.into_iter().flatten().collect();
        Self::from_flat(name, size, flat, m)
    }

    pub fn from_flat(name: impl Into<String>, size: usize, dot: Vec<usize>, m: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if size == 0 || size > MAX_SIZE {
            return Err(Error::NonTotalTable(format!("universe size {size} outside 1..={MAX_SIZE}")));
        }
        if dot.len() != size * size {
            return Err(Error::NonTotalTable(format!("dot has {} entries, expected {}", dot.len(), size * size)));
        }
        if m.len() != size * size * size {
            return Err(Error::NonTotalTable(format!("m has {} entries, expected {}", m.len(), size.pow(3))));
        }
        if let Some(bad) = dot.iter().chain(m.iter()).find(|&&v| v >= size) {
            return Err(Error::NonTotalTable(format!("entry {bad} is outside the universe of size {size}")));
        }
        let dot: Vec<Elem> = dot.into_iter().map(|v| v as Elem).collect();
        let m: Vec<Elem> = m.into_iter().map(|v| v as Elem).collect();
        let alg = Self::assemble(name, size, dot, m);
        for a in alg.elements() {
            if alg.dot(a, a) != a {
                return Err(Error::NotIdempotent(format!("dot({a},{a}) = {}", alg.dot(a, a))));
            }
            if alg.m(a, a, a) != a {
                return Err(Error::NotIdempotent(format!("m({a},{a},{a}) = {}", alg.m(a, a, a))));
            }
        }
        Ok(alg)
    }

    fn assemble(name: String, size: usize, dot: Vec<Elem>, m: Vec<Elem>) -> Self {
        let mut hasher = DefaultHasher::new();
        size.hash(&mut hasher);
        dot.hash(&mut hasher);
        m.hash(&mut hasher);
        FiniteAlgebra { name, size, dot, m, fingerprint: hasher.finish() }
    }

    /// Tables are trusted; used for algebras derived from a validated one.
    pub(crate) fn from_tables_unchecked(name: String, size: usize, dot: Vec<Elem>, m: Vec<Elem>) -> Self {
        Self::assemble(name, size, dot, m)
    }

    /// Builds an algebra by evaluating closures for both operations.
    pub fn from_fn(
        name: impl Into<String>,
        size: usize,
        dot: impl Fn(Elem, Elem) -> Elem,
        m: impl Fn(Elem, Elem, Elem) -> Elem,
    ) -> Result<Self> {
        let mut dt = Vec::with_capacity(size * size);
        let mut mt = Vec::with_capacity(size * size * size);
        for a in 0..size as Elem {
            for b in 0..size as Elem {
                dt.push(dot(a, b) as usize);
            }
        }
        for a in 0..size as Elem {
            for b in 0..size as Elem {
                for c in 0..size as Elem {
                    mt.push(m(a, b, c) as usize);
                }
            }
        }
        Self::from_flat(name, size, dt, mt)
    }

    /// Every operation is a first projection, so every relation is a subalgebra.
    pub fn projection(size: usize) -> Self {
        Self::from_fn(format!("P{size}"), size, |a, _| a, |a, _, _| a).expect("projection algebra is valid")
    }

    /// The affine algebra of the cyclic group `Z_n`: `m(x,y,z) = x - y + z`,
    /// `dot` the first projection.
    pub fn cyclic(order: usize) -> Self {
        let n = order as i64;
        Self::from_fn(
            format!("Z{order}"),
            order,
            |a, _| a,
            |a, b, c| ((a as i64 - b as i64 + c as i64).rem_euclid(n)) as Elem,
        )
        .expect("cyclic group algebra is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + Clone {
        0..self.size as Elem
    }

    #[inline]
    pub fn dot(&self, a: Elem, b: Elem) -> Elem {
        self.dot[a as usize * self.size + b as usize]
    }

    #[inline]
    pub fn m(&self, a: Elem, b: Elem, c: Elem) -> Elem {
        self.m[(a as usize * self.size + b as usize) * self.size + c as usize]
    }

    pub fn dot_table(&self) -> &[Elem] {
        &self.dot
    }

    pub fn m_table(&self) -> &[Elem] {
        &self.m
    }

    pub fn same_tables(&self, other: &FiniteAlgebra) -> bool {
        self.size == other.size && self.dot == other.dot && self.m == other.m
    }

    /// Least subset containing `seed` and closed under `dot` and `m`.
    pub fn generate_subalgebra(&self, seed: &[Elem]) -> Result<Vec<Elem>> {
        if seed.is_empty() {
            return Err(Error::EmptySeed);
        }
        let mut member = vec![false; self.size];
        let mut items = Vec::new();
        for &a in seed {
            self.check_elem(a)?;
            if !member[a as usize] {
                member[a as usize] = true;
                items.push(a);
            }
        }
        // Semi-naive: every combination is evaluated once the newest argument is reached.
        let mut done = 0;
        while done < items.len() {
            let p = items[done];
            done += 1;
            let known = items[..done].to_vec();
            let mut fresh = Vec::new();
            for &q in &known {
                fresh.push(self.dot(p, q));
                fresh.push(self.dot(q, p));
                for &r in &known {
                    fresh.push(self.m(p, q, r));
                    fresh.push(self.m(q, p, r));
                    fresh.push(self.m(q, r, p));
                }
            }
            for v in fresh {
                if !member[v as usize] {
                    member[v as usize] = true;
                    items.push(v);
                }
            }
        }
        items.sort_unstable();
        Ok(items)
    }

    pub fn is_subuniverse(&self, set: &[Elem]) -> bool {
        let mut member = vec![false; self.size];
        for &a in set {
            member[a as usize] = true;
        }
        set.iter().all(|&a| {
            set.iter().all(|&b| {
                member[self.dot(a, b) as usize] && set.iter().all(|&c| member[self.m(a, b, c) as usize])
            })
        })
    }

    /// The subalgebra on `universe`, relabelled to `0..k` in increasing order.
    /// Returns the relabelled algebra and the map from new labels to old ones.
    pub fn restrict(&self, universe: &[Elem]) -> Result<(FiniteAlgebra, Vec<Elem>)> {
        let set: BTreeSet<Elem> = universe.iter().copied().collect();
        if set.is_empty() {
            return Err(Error::EmptySeed);
        }
        for &a in &set {
            self.check_elem(a)?;
        }
        let to_old: Vec<Elem> = set.into_iter().collect();
        if !self.is_subuniverse(&to_old) {
            return Err(Error::NotClosed(format!("{:?} is not a subuniverse of `{}`", to_old, self.name)));
        }
        if to_old.len() == self.size {
            return Ok((self.clone(), to_old));
        }
        let mut to_new = vec![Elem::MAX; self.size];
        for (i, &a) in to_old.iter().enumerate() {
            to_new[a as usize] = i as Elem;
        }
        let k = to_old.len();
        let mut dot = Vec::with_capacity(k * k);
        let mut m = Vec::with_capacity(k * k * k);
        for &a in &to_old {
            for &b in &to_old {
                dot.push(to_new[self.dot(a, b) as usize]);
            }
        }
        for &a in &to_old {
            for &b in &to_old {
                for &c in &to_old {
                    m.push(to_new[self.m(a, b, c) as usize]);
                }
            }
        }
        let name = format!("{}{:?}", self.name, to_old);
        Ok((Self::from_tables_unchecked(name, k, dot, m), to_old))
    }

    /// Algebra on the blocks of `cong`, numbered in order of their least elements.
    pub fn quotient(&self, cong: &Congruence) -> Result<FiniteAlgebra> {
        if cong.size() != self.size || !cong.is_compatible(self) {
            return Err(Error::NotACongruence(self.name.clone()));
        }
        let reps = cong.representatives();
        let index = cong.block_indices();
        let k = reps.len();
        let mut dot = Vec::with_capacity(k * k);
        let mut m = Vec::with_capacity(k * k * k);
        for &a in &reps {
            for &b in &reps {
                dot.push(index[self.dot(a, b) as usize]);
            }
        }
        for &a in &reps {
            for &b in &reps {
                for &c in &reps {
                    m.push(index[self.m(a, b, c) as usize]);
                }
            }
        }
        Ok(Self::from_tables_unchecked(format!("{}/~", self.name), k, dot, m))
    }

    /// Retract through an idempotent unary polynomial `e`: universe `e(A)`,
    /// operations `e∘dot` and `e∘m`.
    pub fn retract(&self, e: &MapTable) -> Result<FiniteAlgebra> {
        if e.len() != self.size || !e.is_idempotent() {
            return Err(Error::NotIdempotentPolynomial);
        }
        let monoid = crate::polynomial::unary_polynomial_monoid(self)?;
        if !monoid.contains(std::slice::from_ref(e)) {
            return Err(Error::NotIdempotentPolynomial);
        }
        Ok(self.retract_unchecked(e))
    }

    pub(crate) fn retract_unchecked(&self, e: &MapTable) -> FiniteAlgebra {
        let image = e.image();
        let mut to_new = vec![Elem::MAX; self.size];
        for (i, &a) in image.iter().enumerate() {
            to_new[a as usize] = i as Elem;
        }
        let k = image.len();
        let mut dot = Vec::with_capacity(k * k);
        let mut m = Vec::with_capacity(k * k * k);
        for &a in &image {
            for &b in &image {
                dot.push(to_new[e.apply(self.dot(a, b)) as usize]);
            }
        }
        for &a in &image {
            for &b in &image {
                for &c in &image {
                    m.push(to_new[e.apply(self.m(a, b, c)) as usize]);
                }
            }
        }
        Self::from_tables_unchecked(format!("{}|retract", self.name), k, dot, m)
    }

    pub fn check_elem(&self, a: Elem) -> Result<()> {
        if (a as usize) < self.size {
            Ok(())
        } else {
            Err(Error::ElementOutOfRange(a as usize, self.size))
        }
    }

    /// `m(a,b,b) = m(b,b,a) = a` on all of `set`.
    pub fn is_maltsev_on(&self, set: &[Elem]) -> bool {
        set.iter().all(|&a| set.iter().all(|&b| self.m(a, b, b) == a && self.m(b, b, a) == a))
    }

    pub fn to_json(&self) -> AlgebraJson {
        let n = self.size;
        AlgebraJson {
            name: self.name.clone(),
            size: n,
            dot: (0..n).map(|a| (0..n).map(|b| self.dot[a * n + b] as usize).collect()).collect(),
            m: self.m.iter().map(|&v| v as usize).collect(),
        }
    }

    pub fn from_json(json: AlgebraJson) -> Result<Self> {
        Self::new(json.name, json.size, json.dot, json.m)
    }
}

/// Wire form: `{"name", "size", "dot": [[..]], "m": [..]}` with `m` flat row-major in (x,y,z).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub name: String,
    pub size: usize,
    pub dot: Vec<Vec<usize>>,
    pub m: Vec<usize>,
}
