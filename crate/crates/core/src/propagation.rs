//! k-minimality, constant pinning and pairwise solution sets.

use std::collections::BTreeSet;
use std::sync::Arc;

use rustc_hash::FxHashSet;

use crate::algebra::Elem;
use crate::error::{Error, Result};
use crate::instance::{Constraint, Instance};
use crate::oracle::brute_solutions;
use crate::relation::Relation;

/// All `k`-element subsets of `0..n` in lexicographic order; the whole set when `n <= k`.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n <= k {
        return vec![(0..n).collect()];
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Makes every `P_W` with `|W| = k` minimal by repeated deletion of
/// unsupported tuples, and tightens each domain to `S_v`. An unsatisfiable
/// result has an empty constraint or domain.
pub fn establish_k_minimality(inst: &Instance, k: usize) -> Instance {
    assert!(k >= 1, "k-minimality needs k >= 1");
    let mut cur = inst.clone();
    let subsets = k_subsets(cur.var_count(), k);
    loop {
        if cur.has_empty_constraint() {
            return cur;
        }
        let mut changed = false;
        for w in &subsets {
            let sub = cur.restrict_to(w);
            let sols = brute_solutions(&sub).expect("k-subsets stay within the oracle budget");
            let mut domains = cur.domains.clone();
            for (i, &v) in w.iter().enumerate() {
                let before = domains[v].len();
                domains[v].elements.retain(|&a| sols.iter().any(|s| s[i] == a));
                changed |= domains[v].len() != before;
            }
            for c in &mut cur.constraints {
                let keep: Vec<(usize, usize)> = c
                    .scope
                    .iter()
                    .enumerate()
                    .filter_map(|(p, v)| w.iter().position(|x| x == v).map(|i| (p, i)))
                    .collect();
                if keep.is_empty() {
                    continue;
                }
                let supported: FxHashSet<Vec<Elem>> =
                    sols.iter().map(|s| keep.iter().map(|&(_, i)| s[i]).collect()).collect();
                let before = c.tuples.len();
                c.tuples.retain(|t| supported.contains(&keep.iter().map(|&(p, _)| t[p]).collect::<Vec<_>>()));
                changed |= c.tuples.len() != before;
            }
            cur = cur.with_domains(domains);
            if cur.has_empty_constraint() {
                return cur;
            }
        }
        if !changed {
            return cur;
        }
    }
}

pub fn is_unsat(inst: &Instance) -> bool {
    inst.has_empty_constraint()
}

/// Adds the unary constraint `v = a`.
pub fn pin_constant(inst: &Instance, v: usize, a: Elem) -> Result<Instance> {
    if v >= inst.var_count() {
        return Err(Error::BadIndex(v, inst.var_count()));
    }
    if !inst.domains[v].contains(a) {
        return Err(Error::ElementOutOfDomain { var: inst.vars[v].clone(), elem: a as usize });
    }
    let mut out = inst.clone();
    out.constraints.push(Constraint::new(vec![v], vec![vec![a]]));
    Ok(out)
}

/// `S_vw`: the solutions of `P_{v,w}`, as a binary relation over the domain algebras.
pub fn pairwise_solutions(inst: &Instance, v: usize, w: usize) -> Relation {
    let dv = &inst.domains[v];
    let dw = &inst.domains[w];
    let mut pairs: BTreeSet<Vec<Elem>> = BTreeSet::new();
    if v == w {
        pairs.extend(dv.elements.iter().map(|&a| vec![a, a]));
    } else {
        for &a in &dv.elements {
            for &b in &dw.elements {
                pairs.insert(vec![a, b]);
            }
        }
    }
    for c in &inst.constraints {
        let pv: Vec<usize> = (0..c.scope.len()).filter(|&p| c.scope[p] == v).collect();
        let pw: Vec<usize> = (0..c.scope.len()).filter(|&p| c.scope[p] == w).collect();
        if pv.is_empty() && pw.is_empty() {
            continue;
        }
        let allowed: FxHashSet<(Option<Elem>, Option<Elem>)> =
            c.tuples.iter().map(|t| (pv.first().map(|&p| t[p]), pw.first().map(|&p| t[p]))).collect();
        pairs.retain(|p| {
            allowed.contains(&(
                (!pv.is_empty()).then_some(p[0]),
                (!pw.is_empty()).then_some(p[1]),
            ))
        });
    }
    Relation::from_parts(
        vec![0, 1],
        vec![Arc::clone(&dv.algebra), Arc::clone(&dw.algebra)],
        pairs.into_iter().collect(),
    )
    .expect("pairs fit their domains")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{AlgebraRegistry, Domain};
    use crate::oracle::brute_solutions;

    fn xor_chain() -> Instance {
        Instance::from_json_str(
            r#"{"vars": ["x", "y", "z"], "domains": {"x": "Z2", "y": "Z2", "z": "Z2"},
                "constraints": [
                  {"scope": ["x", "y"], "tuples": [[0, 0], [1, 1]]},
                  {"scope": ["y", "z"], "tuples": [[0, 1], [1, 0]]},
                  {"scope": ["x"], "tuples": [[0]]}]}"#,
            &AlgebraRegistry::builtin(),
        )
        .unwrap()
    }

    #[test]
    fn subsets_enumerate_binomially() {
        assert_eq!(k_subsets(5, 3).len(), 10);
        assert_eq!(k_subsets(2, 3), vec![vec![0, 1]]);
        assert_eq!(k_subsets(4, 1), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn arc_consistency_propagates_pins() {
        let out = establish_k_minimality(&xor_chain(), 2);
        assert_eq!(out.constraints[0].tuples, vec![vec![0, 0]]);
        assert_eq!(out.constraints[1].tuples, vec![vec![0, 1]]);
        assert_eq!(out.domains[2].elements, vec![1]);
        assert_eq!(establish_k_minimality(&out, 2), out);
    }

    #[test]
    fn full_products_are_untouched() {
        let z3 = Arc::new(crate::algebra::FiniteAlgebra::cyclic(3));
        let full: Vec<Vec<Elem>> = (0..3).flat_map(|a| (0..3).map(move |b| vec![a, b])).collect();
        let inst = Instance::new(
            vec!["a".into(), "b".into()],
            vec![Domain::full(z3.clone()), Domain::full(z3)],
            vec![Constraint::new(vec![0, 1], full)],
        )
        .unwrap();
        assert_eq!(establish_k_minimality(&inst, 3), inst);
    }

    #[test]
    fn pin_outside_support_is_unsat() {
        let inst = xor_chain();
        let z = inst.var_index("z").unwrap();
        let pinned = pin_constant(&inst, z, 0).unwrap();
        assert!(is_unsat(&establish_k_minimality(&pinned, 3)));
        let tight = establish_k_minimality(&inst, 1);
        assert_eq!(tight.domains[z].elements, vec![1]);
        assert!(matches!(pin_constant(&tight, z, 0), Err(Error::ElementOutOfDomain { .. })));
        let one = establish_k_minimality(&pin_constant(&tight, z, 1).unwrap(), 1);
        assert_eq!(one.domains[z].elements, vec![1]);
    }

    #[test]
    fn pairwise_diagonal_and_product() {
        let inst = xor_chain();
        let d = pairwise_solutions(&inst, 1, 1);
        assert_eq!(d.tuples(), &[vec![0, 0], vec![1, 1]]);
        let s = pairwise_solutions(&inst, 0, 2);
        assert_eq!(s.tuples(), &[vec![0, 0], vec![0, 1]]);
        assert_eq!(brute_solutions(&inst).unwrap(), vec![vec![0, 0, 1]]);
    }
}
