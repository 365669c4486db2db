//! Per-algebra structure shared by the solver: certificate, congruence
//! lattice, prime intervals below θ, polynomials and minimal sets.

use std::sync::Arc;

use once_cell::sync::{Lazy, OnceCell};
use parking_lot::Mutex;
use rustc_hash::FxHashMap;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::congruence::{congruence_lattice, CongruenceLattice, PrimeInterval};
use crate::error::Result;
use crate::polynomial::{unary_polynomial_monoid, PolyMonoid};
use crate::sbm::{certify_normalized, find_sigma, split_elements, SbmCertificate};

pub struct AlgebraInfo {
    pub algebra: Arc<FiniteAlgebra>,
    pub cert: SbmCertificate,
    pub lattice: CongruenceLattice,
    /// Prime intervals `α ≺ β ≤ θ`.
    pub intervals: Vec<PrimeInterval>,
    monoid: OnceCell<Arc<PolyMonoid>>,
    minimal: Mutex<FxHashMap<PrimeInterval, Arc<Vec<Vec<Elem>>>>>,
}

impl std::fmt::Debug for AlgebraInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlgebraInfo").field("algebra", &self.algebra.name()).field("cert", &self.cert).finish()
    }
}

impl AlgebraInfo {
    fn compute(alg: Arc<FiniteAlgebra>) -> Result<Self> {
        let sigma = find_sigma(&alg)?;
        let cert = certify_normalized(&alg, sigma)?;
        let lattice = congruence_lattice(&alg);
        let intervals = lattice.prime_intervals_below(&cert.theta);
        Ok(AlgebraInfo {
            algebra: alg,
            cert,
            lattice,
            intervals,
            monoid: OnceCell::new(),
            minimal: Mutex::new(FxHashMap::default()),
        })
    }

    pub fn monoid(&self) -> Result<Arc<PolyMonoid>> {
        self.monoid.get_or_try_init(|| unary_polynomial_monoid(&self.algebra)).cloned()
    }

    /// Inclusion-minimal images `f(A)` over polynomials with `f(β) ⊄ α`.
    pub fn minimal_sets(&self, interval: &PrimeInterval) -> Result<Arc<Vec<Vec<Elem>>>> {
        if let Some(v) = self.minimal.lock().get(interval) {
            return Ok(v.clone());
        }
        let mon = self.monoid()?;
        let mut images: Vec<Vec<Elem>> = Vec::new();
        for i in 0..mon.len() {
            let f = mon.map(i, 0);
            if !f.collapses(&interval.upper, &interval.lower) {
                let img = f.image();
                if !images.contains(&img) {
                    images.push(img);
                }
            }
        }
        let mut minimal: Vec<Vec<Elem>> = images
            .iter()
            .filter(|u| !images.iter().any(|v| v.len() < u.len() && v.iter().all(|x| u.contains(x))))
            .cloned()
            .collect();
        minimal.sort();
        let minimal = Arc::new(minimal);
        self.minimal.lock().insert(interval.clone(), minimal.clone());
        Ok(minimal)
    }

    pub fn split_elements(&self, interval: &PrimeInterval) -> Vec<Elem> {
        split_elements(&self.algebra, &interval.lower, &interval.upper)
    }

    pub fn size(&self) -> usize {
        self.algebra.size()
    }
}

static INFO_CACHE: Lazy<Mutex<FxHashMap<u64, Vec<Arc<AlgebraInfo>>>>> = Lazy::new(|| Mutex::new(FxHashMap::default()));

/// Cached structure of a normalized SBM algebra.
pub fn algebra_info(alg: &Arc<FiniteAlgebra>) -> Result<Arc<AlgebraInfo>> {
    let key = alg.fingerprint();
    if let Some(bucket) = INFO_CACHE.lock().get(&key) {
        if let Some(info) = bucket.iter().find(|i| i.algebra.same_tables(alg)) {
            return Ok(info.clone());
        }
    }
    let info = Arc::new(AlgebraInfo::compute(alg.clone())?);
    INFO_CACHE.lock().entry(key).or_default().push(info.clone());
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::{fix_a, fix_b};

    #[test]
    fn minimal_sets_of_fix_b() {
        let info = algebra_info(&Arc::new(fix_b())).unwrap();
        assert_eq!(info.intervals.len(), 1);
        assert_eq!(*info.minimal_sets(&info.intervals[0]).unwrap(), vec![vec![1, 2]]);
    }

    #[test]
    fn minimal_sets_lie_in_max() {
        for alg in [fix_a(), fix_b()] {
            let info = algebra_info(&Arc::new(alg)).unwrap();
            for iv in &info.intervals {
                for u in info.minimal_sets(iv).unwrap().iter() {
                    assert!(u.iter().all(|&x| info.cert.in_max(x)));
                }
            }
        }
    }
}
