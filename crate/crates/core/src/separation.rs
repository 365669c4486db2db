//! Minimal sets, separation of prime intervals and collapsing polynomials.

use std::sync::Arc;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::congruence::{Congruence, PrimeInterval};
use crate::domain::algebra_info;
use crate::error::{Error, Result};
use crate::polynomial::{pair_polynomial_monoid, unary_polynomial_monoid, MapTable, PolyMonoid, PolynomialWitness};
use crate::relation::Relation;

/// A prime interval `α ≺ β ≤ θ` at one coordinate (or variable).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntervalTriple {
    pub coord: usize,
    pub interval: PrimeInterval,
}

impl IntervalTriple {
    pub fn new(coord: usize, interval: PrimeInterval) -> Self {
        IntervalTriple { coord, interval }
    }

    pub fn alpha(&self) -> &Congruence {
        &self.interval.lower
    }

    pub fn beta(&self) -> &Congruence {
        &self.interval.upper
    }
}

/// Inclusion-minimal images `f(A)` over unary polynomials with `f(β) ⊄ α`.
pub fn minimal_sets(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<Vec<Vec<Elem>>> {
    let mon = unary_polynomial_monoid(alg)?;
    let mut images: Vec<Vec<Elem>> = Vec::new();
    for i in 0..mon.len() {
        let f = mon.map(i, 0);
        if !f.collapses(beta, alpha) {
            let img = f.image();
            if !images.contains(&img) {
                images.push(img);
            }
        }
    }
    let mut out: Vec<Vec<Elem>> = images
        .iter()
        .filter(|u| !images.iter().any(|v| v.len() < u.len() && v.iter().all(|x| u.contains(x))))
        .cloned()
        .collect();
    out.sort();
    Ok(out)
}

/// All triples `(c, α, β)` with `α ≺ β ≤ θ` over the coordinates of `rel`.
pub fn interval_triples(rel: &Relation) -> Result<Vec<IntervalTriple>> {
    let mut out = Vec::new();
    for (c, d) in rel.domains().iter().enumerate() {
        let info = algebra_info(d)?;
        out.extend(info.intervals.iter().map(|iv| IntervalTriple::new(c, iv.clone())));
    }
    Ok(out)
}

/// `f_1(β) ⊄ α` and `f_2(δ) ⊆ γ`.
pub fn separates(f1: &MapTable, t1: &IntervalTriple, f2: &MapTable, t2: &IntervalTriple) -> bool {
    !f1.collapses(t1.beta(), t1.alpha()) && f2.collapses(t2.beta(), t2.alpha())
}

/// First polynomial of `rel` in generation order whose components at
/// `(i, j)` satisfy `pred`. Same-coordinate queries go through the unary
/// polynomials of that domain, which are exactly the polynomials of the
/// equality relation.
pub fn search_pair(
    rel: &Relation,
    i: usize,
    j: usize,
    pred: impl Fn(&MapTable, &MapTable) -> bool,
) -> Result<Option<PolynomialWitness>> {
    if i >= rel.arity() || j >= rel.arity() {
        return Err(Error::BadIndex(i.max(j), rel.arity()));
    }
    if i == j {
        let mon = unary_polynomial_monoid(&rel.domains()[i])?;
        for k in 0..mon.len() {
            let f = mon.map(k, 0);
            if pred(&f, &f) {
                return Ok(Some(mon.witness(k).extend(rel, &[i])?));
            }
        }
        return Ok(None);
    }
    let pr = rel.project(&[i, j])?;
    let mon = pair_polynomial_monoid(&pr)?;
    for k in 0..mon.len() {
        if pred(&mon.map(k, 0), &mon.map(k, 1)) {
            return Ok(Some(mon.witness(k).extend(rel, &[i, j])?));
        }
    }
    Ok(None)
}

/// Whether `(α,β)` at `t1` can be separated from `(γ,δ)` at `t2` in `rel`.
pub fn separable(rel: &Relation, t1: &IntervalTriple, t2: &IntervalTriple) -> Result<bool> {
    if t1.coord == t2.coord {
        let mon = unary_polynomial_monoid(&rel.domains()[t1.coord])?;
        return Ok(any_separating(&mon, 0, 0, t1, t2));
    }
    let pr = rel.project(&[t1.coord, t2.coord])?;
    let mon = pair_polynomial_monoid(&pr)?;
    Ok(any_separating(&mon, 0, 1, t1, t2))
}

fn any_separating(mon: &PolyMonoid, c1: usize, c2: usize, t1: &IntervalTriple, t2: &IntervalTriple) -> bool {
    (0..mon.len()).any(|k| {
        let (f1, f2) = (MapTable::new(mon.component(k, c1).to_vec()), MapTable::new(mon.component(k, c2).to_vec()));
        separates(&f1, t1, &f2, t2)
    })
}

/// A polynomial of a binary relation separating `t1` from `t2`, post-composed
/// with `x ↦ x·c` for the top tuple `c` so that every component maps into
/// the max block of its domain.
pub fn can_separate(rel2: &Relation, t1: &IntervalTriple, t2: &IntervalTriple) -> Result<Option<PolynomialWitness>> {
    if rel2.arity() != 2 {
        return Err(Error::PreconditionViolated(format!("separation in a relation of arity {}", rel2.arity())));
    }
    if !rel2.is_subdirect() {
        return Err(Error::NotSubdirect);
    }
    let found = search_pair(rel2, t1.coord, t2.coord, |f1, f2| separates(f1, t1, f2, t2))?;
    let Some(g) = found else { return Ok(None) };
    let top = rel2.max_tuple().expect("subdirect relation is nonempty");
    let f = g.dot_constant(&top, rel2.domains());
    if !separates(&f.components[t1.coord], t1, &f.components[t2.coord], t2) {
        return Err(Error::InternalInvariantViolated(format!(
            "pushing a separating polynomial into the max block lost separation of {t1:?} from {t2:?}"
        )));
    }
    Ok(Some(f))
}

/// Triples of `rel` other than `t`, each with whether `t` can be separated from it.
pub fn separation_profile(rel: &Relation, t: &IntervalTriple) -> Result<Vec<(IntervalTriple, bool)>> {
    let mut out = Vec::new();
    for u in interval_triples(rel)? {
        let sep = if u == *t { false } else { separable(rel, t, &u)? };
        out.push((u, sep));
    }
    Ok(out)
}

fn in_max(rel: &Relation, a: &[Elem]) -> Result<bool> {
    for (d, &x) in rel.domains().iter().zip(a) {
        if !algebra_info(d)?.cert.in_max(x) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the defining conditions of a collapsing polynomial for `t` together
/// with `f(a) = a` and `f_i(b) ≡_α b`; returns the first violated one.
pub fn check_collapsing(
    rel: &Relation,
    t: &IntervalTriple,
    profile: &[(IntervalTriple, bool)],
    f: &PolynomialWitness,
    a: &[Elem],
    b: Elem,
) -> Result<Option<String>> {
    if !f.is_idempotent() {
        return Ok(Some("not idempotent".into()));
    }
    if !f.replays_exactly(rel.domains()) {
        return Ok(Some("trace does not reproduce the components".into()));
    }
    if f.apply(a) != a {
        return Ok(Some(format!("f(a) = {:?} ≠ a = {a:?}", f.apply(a))));
    }
    let fi = &f.components[t.coord];
    if !t.alpha().related(fi.apply(b), b) {
        return Ok(Some(format!("f_i(b) = {} is not α-related to b = {b}", fi.apply(b))));
    }
    let own = std::iter::once((t.clone(), false));
    for (u, sep) in own.chain(profile.iter().cloned()) {
        let fj = &f.components[u.coord];
        if sep {
            if !fj.collapses(u.beta(), u.alpha()) {
                return Ok(Some(format!("(C1) fails at {u:?}")));
            }
        } else {
            let info = algebra_info(&rel.domains()[u.coord])?;
            if !info.minimal_sets(&u.interval)?.contains(&fj.image()) {
                return Ok(Some(format!("(C2) fails at {u:?}: image {:?}", fj.image())));
            }
        }
    }
    Ok(None)
}

/// An idempotent polynomial of `rel` collapsing every prime interval that can
/// be separated from `t` and mapping onto minimal sets elsewhere, with
/// `f(a) = a` and `f_i(b) ≡_α b`.
///
/// `a` must lie in the top block of `rel` and `(a[i], b) ∈ β − α`.
pub fn collapsing_polynomial(rel: &Relation, t: &IntervalTriple, a: &[Elem], b: Elem) -> Result<PolynomialWitness> {
    let i = t.coord;
    if i >= rel.arity() {
        return Err(Error::BadIndex(i, rel.arity()));
    }
    if !rel.contains(a) {
        return Err(Error::PreconditionViolated(format!("{a:?} is not a tuple of the relation")));
    }
    if !rel.is_subdirect() {
        return Err(Error::NotSubdirect);
    }
    if !(t.beta().related(a[i], b) && !t.alpha().related(a[i], b)) {
        return Err(Error::PreconditionViolated(format!("({}, {b}) is not in β − α", a[i])));
    }
    let info = algebra_info(&rel.domains()[i])?;
    if !info.intervals.contains(&t.interval) {
        return Err(Error::PreconditionViolated(format!("{:?} is not a prime interval below θ", t.interval)));
    }
    if !in_max(rel, a)? {
        return Err(Error::PreconditionViolated(format!("{a:?} is not in the top block of the relation")));
    }
    let profile = separation_profile(rel, t)?;
    let candidates: Vec<Vec<Elem>> = info
        .minimal_sets(&t.interval)?
        .iter()
        .filter(|u| u.iter().any(|&x| t.alpha().related(x, a[i])) && u.iter().any(|&x| t.alpha().related(x, b)))
        .cloned()
        .collect();
    let mut last = String::from("no minimal set meets both α-blocks");
    for u in &candidates {
        match collapse_through(rel, t, &profile, u, a)? {
            Ok(f) => match check_collapsing(rel, t, &profile, &f, a, b)? {
                None => return Ok(f),
                Some(why) => last = why,
            },
            Err(why) => last = why,
        }
    }
    Err(Error::InternalInvariantViolated(format!("no collapsing polynomial for {t:?} at {a:?}: {last}")))
}

fn collapse_through(
    rel: &Relation,
    t: &IntervalTriple,
    profile: &[(IntervalTriple, bool)],
    u: &[Elem],
    a: &[Elem],
) -> Result<std::result::Result<PolynomialWitness, String>> {
    let i = t.coord;
    let doms: Vec<Arc<FiniteAlgebra>> = rel.domains().to_vec();
    let top = rel.max_tuple().expect("nonempty relation");
    let onto_u = |f: &MapTable| f.is_idempotent() && f.image() == u;
    let into_max = |h: PolynomialWitness| h.dot_constant(&top, &doms).idempotent_power();

    let Some(mut h) = search_pair(rel, i, i, |f, _| onto_u(f))? else {
        return Ok(Err(format!("no idempotent polynomial with image {u:?}")));
    };
    // one separating polynomial per separable triple, all with image U at i
    for (v, _) in profile.iter().filter(|(_, sep)| *sep) {
        let found = search_pair(rel, i, v.coord, |fi, fj| onto_u(fi) && fj.collapses(v.beta(), v.alpha()))?;
        let Some(g) = found else {
            return Ok(Err(format!("no separating polynomial onto {u:?} for {v:?}")));
        };
        h = g.compose(&h);
    }
    h = into_max(h);

    // shrink images at non-separable triples down to minimal sets
    let limit = rel.domains().iter().map(|d| d.size()).sum::<usize>() * profile.len().max(1) + 1;
    for _ in 0..limit {
        let mut pending = None;
        for (v, _) in profile.iter().filter(|(_, sep)| !*sep) {
            let info = algebra_info(&doms[v.coord])?;
            let img = h.components[v.coord].image();
            if !info.minimal_sets(&v.interval)?.contains(&img) {
                pending = Some((v.clone(), img));
                break;
            }
        }
        let Some((v, img)) = pending else { break };
        let info = algebra_info(&doms[v.coord])?;
        let inside: Vec<Vec<Elem>> =
            info.minimal_sets(&v.interval)?.iter().filter(|m| m.iter().all(|x| img.contains(x))).cloned().collect();
        let Some(target) = inside.first() else {
            return Ok(Err(format!("image {img:?} at {v:?} contains no minimal set")));
        };
        let Some(e) = search_pair(rel, v.coord, v.coord, |f, _| f.is_idempotent() && f.image() == *target)? else {
            return Ok(Err(format!("no idempotent polynomial onto {target:?}")));
        };
        let mut h2 = into_max(e.compose(&h));
        if h2.components[i].collapses(t.beta(), t.alpha()) {
            return Ok(Err(format!("shrinking at {v:?} collapsed the target interval")));
        }
        let img_i = h2.components[i].image();
        if img_i != u {
            let back = search_pair(rel, i, i, |q, _| {
                q.image_of(&img_i) == u && !q.compose(&h2.components[i]).collapses(t.beta(), t.alpha())
            })?;
            let Some(q) = back else {
                return Ok(Err(format!("cannot return from {img_i:?} to {u:?}")));
            };
            h2 = into_max(q.compose(&h2));
            if h2.components[i].image() != u {
                return Ok(Err(format!("image at the target coordinate drifted to {:?}", h2.components[i].image())));
            }
        }
        h = h2;
    }

    let ha = h.apply(a);
    let f = h.maltsev_constants(&ha, a, &doms).idempotent_power();
    Ok(Ok(f))
}
