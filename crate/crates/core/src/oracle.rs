//! Exhaustive reference solver used to cross-check the algebraic ones.

use crate::algebra::Elem;
use crate::error::{Error, Result};
use crate::instance::{Constraint, Instance};

/// Largest number of full assignments the oracle will enumerate.
pub const ORACLE_LIMIT: f64 = 1e7;

fn check_size(inst: &Instance) -> Result<()> {
    let space = inst.search_space();
    if space > ORACLE_LIMIT {
        return Err(Error::TooLarge(format!("{space:.0} assignments exceed the oracle limit")));
    }
    Ok(())
}

/// Backtracking enumeration in variable order. Each constraint is checked
/// once its last variable is assigned. `visit` returns false to stop.
fn enumerate(inst: &Instance, mut visit: impl FnMut(&[Elem]) -> bool) {
    let n = inst.var_count();
    let mut at_depth: Vec<Vec<&Constraint>> = vec![Vec::new(); n];
    for c in &inst.constraints {
        match c.scope.iter().max() {
            Some(&last) => at_depth[last].push(c),
            None => {
                if c.is_empty() {
                    return;
                }
            }
        }
    }
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut assignment = vec![0 as Elem; n];
    let mut choice = vec![0usize; n];
    let mut depth = 0usize;
    loop {
        if choice[depth] < inst.domains[depth].len() {
            assignment[depth] = inst.domains[depth].elements[choice[depth]];
            choice[depth] += 1;
            if at_depth[depth].iter().all(|c| c.satisfied_by(&assignment)) {
                if depth + 1 == n {
                    if !visit(&assignment) {
                        return;
                    }
                } else {
                    depth += 1;
                    choice[depth] = 0;
                }
            }
        } else if depth == 0 {
            return;
        } else {
            depth -= 1;
        }
    }
}

/// All solutions, in lexicographic order.
pub fn brute_solutions(inst: &Instance) -> Result<Vec<Vec<Elem>>> {
    check_size(inst)?;
    let mut out = Vec::new();
    enumerate(inst, |a| {
        out.push(a.to_vec());
        true
    });
    Ok(out)
}

/// Lexicographically least solution.
pub fn brute_solve(inst: &Instance) -> Result<Option<Vec<Elem>>> {
    check_size(inst)?;
    let mut found = None;
    enumerate(inst, |a| {
        found = Some(a.to_vec());
        false
    });
    Ok(found)
}

/// Keeps exactly the tuples and domain elements used by some solution.
pub fn brute_minimalize(inst: &Instance) -> Result<Instance> {
    let sols = brute_solutions(inst)?;
    let mut domains = inst.domains.clone();
    for (v, d) in domains.iter_mut().enumerate() {
        d.elements.retain(|&a| sols.iter().any(|s| s[v] == a));
    }
    let mut out = inst.with_domains(domains);
    for c in &mut out.constraints {
        let mut used: Vec<Vec<Elem>> = sols.iter().map(|s| c.project_assignment(s)).collect();
        used.sort_unstable();
        used.dedup();
        c.tuples = used;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::AlgebraRegistry;

    fn parity() -> Instance {
        Instance::from_json_str(
            r#"{"vars": ["x", "y", "z"], "domains": {"x": "Z2", "y": "Z2", "z": "Z2"},
                "constraints": [
                  {"scope": ["x", "y"], "tuples": [[0, 1], [1, 0]]},
                  {"scope": ["y", "z"], "tuples": [[0, 1], [1, 0]]}]}"#,
            &AlgebraRegistry::builtin(),
        )
        .unwrap()
    }

    #[test]
    fn parity_chain_solutions() {
        let inst = parity();
        assert_eq!(brute_solutions(&inst).unwrap(), vec![vec![0, 1, 0], vec![1, 0, 1]]);
        assert_eq!(brute_solve(&inst).unwrap(), Some(vec![0, 1, 0]));
    }

    #[test]
    fn minimalization_keeps_used_tuples() {
        let mut inst = parity();
        inst.constraints.push(Constraint::new(vec![0, 2], vec![vec![0, 0], vec![0, 1], vec![1, 1]]));
        let m = brute_minimalize(&inst).unwrap();
        assert_eq!(m.constraints[2].tuples, vec![vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn refuses_huge_spaces() {
        let z3 = std::sync::Arc::new(crate::algebra::FiniteAlgebra::cyclic(3));
        let n = 15;
        let inst = Instance::new(
            (0..n).map(|i| format!("v{i}")).collect(),
            vec![crate::instance::Domain::full(z3); n],
            vec![],
        )
        .unwrap();
        assert!(matches!(brute_solve(&inst), Err(Error::TooLarge(_))));
    }
}
