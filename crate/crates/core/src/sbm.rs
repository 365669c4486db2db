//! Semilattice block Mal'tsev structure: finding σ, normalizing the basic
//! operations, the θ congruence, split elements and fixture algebras.

use serde::{Deserialize, Serialize};

use crate::algebra::{Elem, FiniteAlgebra};
use crate::congruence::{congruence_lattice, Congruence};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SbmCertificate {
    pub sigma: Congruence,
    pub theta: Congruence,
    pub max_block: Vec<Elem>,
    pub minimal_element: Option<Elem>,
    pub is_maltsev: bool,
}

impl SbmCertificate {
    /// Mal'tsev or with a minimal element.
    pub fn is_reduced(&self) -> bool {
        self.is_maltsev || self.minimal_element.is_some()
    }

    pub fn in_max(&self, a: Elem) -> bool {
        self.max_block.binary_search(&a).is_ok()
    }
}

fn not_sbm(alg: &FiniteAlgebra, check: impl Into<String>) -> Error {
    Error::NotSbm { algebra: alg.name().to_string(), check: check.into() }
}

/// First failed structural check of `sigma`, ignoring how `m` acts on the quotient.
fn block_checks(alg: &FiniteAlgebra, sigma: &Congruence) -> Option<String> {
    let q = alg.quotient(sigma).ok()?;
    for a in q.elements() {
        for b in q.elements() {
            if q.dot(a, b) != q.dot(b, a) {
                return Some("quotient dot is not commutative".into());
            }
            for c in q.elements() {
                if q.dot(q.dot(a, b), c) != q.dot(a, q.dot(b, c)) {
                    return Some("quotient dot is not associative".into());
                }
            }
        }
    }
    for block in sigma.blocks() {
        for &a in &block {
            for &b in &block {
                if alg.dot(a, b) != a {
                    return Some(format!("dot is not the first projection on block {block:?}"));
                }
                if alg.m(a, b, b) != a || alg.m(b, b, a) != a {
                    return Some(format!("m is not Mal'tsev on block {block:?}"));
                }
            }
        }
    }
    None
}

/// Whether `m^σ` is the join of a fixed nonempty subset of its arguments.
fn quotient_m_is_semilattice_term(alg: &FiniteAlgebra, sigma: &Congruence) -> bool {
    let Ok(q) = alg.quotient(sigma) else { return false };
    let join = |xs: &[Elem]| xs.iter().copied().reduce(|x, y| q.dot(x, y)).unwrap();
    (1u8..8).any(|mask| {
        q.elements().all(|a| {
            q.elements().all(|b| {
                q.elements().all(|c| {
                    let args: Vec<Elem> =
                        [a, b, c].iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
                    q.m(a, b, c) == join(&args)
                })
            })
        })
    })
}

fn quotient_m_is_join(alg: &FiniteAlgebra, sigma: &Congruence) -> bool {
    alg.elements().all(|a| {
        alg.elements().all(|b| {
            alg.elements().all(|c| sigma.related(alg.m(a, b, c), alg.dot(a, alg.dot(b, c))))
        })
    })
}

/// Least congruence satisfying the SBM conditions before normalization.
pub fn find_sigma(alg: &FiniteAlgebra) -> Result<Congruence> {
    let lattice = congruence_lattice(alg);
    for sigma in lattice.elements() {
        if block_checks(alg, sigma).is_none() && quotient_m_is_semilattice_term(alg, sigma) {
            return Ok(sigma.clone());
        }
    }
    let top = lattice.top();
    let check = block_checks(alg, top).unwrap_or_else(|| "no congruence has a semilattice quotient".into());
    Err(not_sbm(alg, check))
}

/// Replaces `dot` by its first iterate satisfying `x(xy) = xy` and `m` by
/// `m(x,y,z)·(x·(y·z))`.
pub fn normalize_operations(alg: &FiniteAlgebra, sigma: &Congruence) -> Result<FiniteAlgebra> {
    let n = alg.size();
    let mut d: Vec<Elem> = alg.dot_table().to_vec();
    let at = |t: &[Elem], a: Elem, b: Elem| t[a as usize * n + b as usize];
    let absorbing = |t: &[Elem]| {
        alg.elements().all(|a| alg.elements().all(|b| at(t, a, at(t, a, b)) == at(t, a, b)))
    };
    let mut k = 1;
    while !absorbing(&d) {
        if k >= n {
            return Err(Error::NormalizationFailed(format!(
                "x(xy) = xy fails for every dot iterate up to {n} in `{}`",
                alg.name()
            )));
        }
        let next: Vec<Elem> = (0..n * n)
            .map(|i| {
                let (a, b) = ((i / n) as Elem, (i % n) as Elem);
                alg.dot(a, at(&d, a, b))
            })
            .collect();
        d = next;
        k += 1;
    }
    let mut m = Vec::with_capacity(n * n * n);
    for a in alg.elements() {
        for b in alg.elements() {
            for c in alg.elements() {
                let abc = at(&d, a, at(&d, b, c));
                m.push(at(&d, alg.m(a, b, c), abc));
            }
        }
    }
    let out = FiniteAlgebra::from_tables_unchecked(alg.name().to_string(), n, d, m);
    check_normalized(&out, sigma)?;
    Ok(out)
}

/// The identities that hold after normalization.
pub fn check_normalized(alg: &FiniteAlgebra, sigma: &Congruence) -> Result<()> {
    let q = alg
        .quotient(sigma)
        .map_err(|_| Error::NormalizationFailed("σ is not a congruence of the normalized algebra".into()))?;
    let idx = sigma.block_indices();
    let leq = |x: Elem, y: Elem| q.dot(idx[x as usize], idx[y as usize]) == idx[y as usize];
    for a in alg.elements() {
        for b in alg.elements() {
            let ab = alg.dot(a, b);
            if alg.dot(a, ab) != ab {
                return Err(Error::NormalizationFailed(format!("x(xy) = xy fails at ({a},{b})")));
            }
            if !leq(a, ab) {
                return Err(Error::NormalizationFailed(format!("a ≤ ab fails at ({a},{b})")));
            }
        }
    }
    if !quotient_m_is_join(alg, sigma) {
        return Err(Error::NormalizationFailed("m is not the join modulo σ".into()));
    }
    Ok(())
}

/// Elements `b` with `bx = xb = x` for all `x`.
pub fn minimal_element(alg: &FiniteAlgebra) -> Option<Elem> {
    alg.elements().find(|&b| alg.elements().all(|x| alg.dot(b, x) == x && alg.dot(x, b) == x))
}

/// Greatest σ-block of the quotient semilattice.
pub fn max_block(alg: &FiniteAlgebra, sigma: &Congruence) -> Vec<Elem> {
    let top = alg.elements().reduce(|x, y| alg.dot(x, y)).unwrap();
    sigma.block_of(top)
}

pub fn theta_congruence(alg: &FiniteAlgebra, sigma: &Congruence) -> Result<Congruence> {
    let theta = Congruence::from_blocks(alg.size(), &[max_block(alg, sigma)]);
    if !theta.is_compatible(alg) {
        return Err(Error::ThetaNotCongruence(alg.name().to_string()));
    }
    Ok(theta)
}

/// Certificate of an algebra whose operations are already normalized.
pub fn certify_normalized(alg: &FiniteAlgebra, sigma: Congruence) -> Result<SbmCertificate> {
    if let Some(check) = block_checks(alg, &sigma) {
        return Err(not_sbm(alg, check));
    }
    check_normalized(alg, &sigma)?;
    let theta = theta_congruence(alg, &sigma)?;
    Ok(SbmCertificate {
        max_block: max_block(alg, &sigma),
        minimal_element: minimal_element(alg),
        is_maltsev: sigma.is_full(),
        theta,
        sigma,
    })
}

/// Normalizes `alg` and certifies the result.
pub fn normalize_and_verify(alg: &FiniteAlgebra) -> Result<(FiniteAlgebra, SbmCertificate)> {
    let sigma = find_sigma(alg)?;
    let norm = normalize_operations(alg, &sigma)?;
    let cert = certify_normalized(&norm, sigma)?;
    Ok((norm, cert))
}

/// Certificate of `alg` after normalizing its operations.
pub fn verify_sbm(alg: &FiniteAlgebra) -> Result<SbmCertificate> {
    normalize_and_verify(alg).map(|(_, c)| c)
}

/// Elements `a` such that `ab ≢_α ac` for some `b ≡_β c`.
pub fn split_elements(alg: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Vec<Elem> {
    let blocks = beta.blocks();
    alg.elements()
        .filter(|&a| {
            blocks.iter().any(|block| {
                block.iter().any(|&b| block.iter().any(|&c| !alpha.related(alg.dot(a, b), alg.dot(a, c))))
            })
        })
        .collect()
}

/// A finite join-semilattice given by its join table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemilatticeSpec {
    pub join: Vec<Vec<usize>>,
}

impl SemilatticeSpec {
    /// The chain `0 < 1 < .. < k-1`.
    pub fn chain(k: usize) -> Self {
        SemilatticeSpec { join: (0..k).map(|i| (0..k).map(|j| i.max(j)).collect()).collect() }
    }

    pub fn size(&self) -> usize {
        self.join.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.join.len();
        if k == 0 {
            return Err(Error::InvalidSemilatticeSpec("empty semilattice".into()));
        }
        if self.join.iter().any(|row| row.len() != k || row.iter().any(|&x| x >= k)) {
            return Err(Error::InvalidSemilatticeSpec("join table is not total".into()));
        }
        let j = |a: usize, b: usize| self.join[a][b];
        for a in 0..k {
            if j(a, a) != a {
                return Err(Error::InvalidSemilatticeSpec(format!("{a} ∨ {a} ≠ {a}")));
            }
            for b in 0..k {
                if j(a, b) != j(b, a) {
                    return Err(Error::InvalidSemilatticeSpec(format!("{a} ∨ {b} is not commutative")));
                }
                for c in 0..k {
                    if j(j(a, b), c) != j(a, j(b, c)) {
                        return Err(Error::InvalidSemilatticeSpec(format!("({a},{b},{c}) is not associative")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Inflation of a semilattice by cyclic groups: level `s` carries `Z_{groups[s]}`
/// (order 1 is the trivial group). Elements are numbered level by level.
///
/// `m` lands in the level `j = s ∨ t ∨ u` and combines the group parts after
/// transporting each into `Z_{groups[j]}`, by the identity when the orders
/// agree and by the zero map otherwise.
pub fn generate_fixture(spec: &SemilatticeSpec, groups: &[usize]) -> Result<FiniteAlgebra> {
    spec.validate()?;
    if groups.len() != spec.size() {
        return Err(Error::InvalidSemilatticeSpec(format!(
            "{} group orders for {} levels",
            groups.len(),
            spec.size()
        )));
    }
    if groups.iter().any(|&g| g == 0) {
        return Err(Error::InvalidSemilatticeSpec("group order 0".into()));
    }
    let mut elems: Vec<(usize, usize)> = Vec::new();
    for (s, &g) in groups.iter().enumerate() {
        elems.extend((0..g).map(|x| (s, x)));
    }
    let n = elems.len();
    if n > crate::algebra::MAX_SIZE {
        return Err(Error::InvalidSemilatticeSpec(format!("{n} elements is too many")));
    }
    let index = |s: usize, g: usize| elems.iter().position(|&e| e == (s, g)).unwrap() as Elem;
    let transport = |from: usize, to: usize, g: usize| if groups[from] == groups[to] { g } else { 0 };
    let join = |a: usize, b: usize| spec.join[a][b];
    let name = format!(
        "Inf[{}]",
        groups.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",")
    );
    FiniteAlgebra::from_fn(
        name,
        n,
        |a, b| {
            let ((s, g), (t, h)) = (elems[a as usize], elems[b as usize]);
            let j = join(s, t);
            if j == s {
                index(j, g)
            } else if j == t {
                index(j, h)
            } else {
                index(j, 0)
            }
        },
        |a, b, c| {
            let ((s, g), (t, h), (u, k)) = (elems[a as usize], elems[b as usize], elems[c as usize]);
            let j = join(join(s, t), u);
            let ord = groups[j];
            let v = (transport(s, j, g) + ord - transport(t, j, h) + transport(u, j, k)) % ord;
            index(j, v)
        },
    )
}

/// Two-element chain with a trivial bottom and `Z_2` on top: `0` low, `{1,2}` high.
pub fn fix_b() -> FiniteAlgebra {
    generate_fixture(&SemilatticeSpec::chain(2), &[1, 2]).expect("valid fixture").with_name("FIX-B")
}

/// Two-element chain with `Z_2` on both levels: `{0,1}` low, `{2,3}` high.
pub fn fix_a() -> FiniteAlgebra {
    generate_fixture(&SemilatticeSpec::chain(2), &[2, 2]).expect("valid fixture").with_name("FIX-A")
}
