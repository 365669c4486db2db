//! Finite algebra toolkit and constraint solver for semilattice block
//! Mal'tsev (SBM) algebras.

pub mod algebra;
pub mod congruence;
pub mod domain;
pub mod ensemble;
pub mod error;
pub mod generate;
pub mod hybrid;
pub mod instance;
pub mod maltsev;
pub mod oracle;
pub mod propagation;
pub mod polynomial;
pub mod relation;
pub mod sbm;
pub mod separation;

pub use algebra::{Elem, FiniteAlgebra};
pub use congruence::{Congruence, CongruenceLattice, PrimeInterval};
pub use error::{Error, Result};
pub use polynomial::{MapTable, PolynomialWitness};
pub use relation::Relation;
pub use sbm::SbmCertificate;
pub use separation::IntervalTriple;
pub use instance::{AlgebraRegistry, Constraint, Domain, Instance};
