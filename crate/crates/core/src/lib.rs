//! Exact computations in tensor products of quantum `sl2` modules over `Z[q^{±1/2}]`:
//! standard and canonical bases, the bar involution, inner products, the split
//! isomorphism, the refinement embedding and braiding R-matrices.

pub mod cache;
pub mod canonical;
pub mod orbits;
pub mod qring;
pub mod repmod;
pub mod rmatrix;
pub mod verify;

pub use canonical::{BarInvolution, CanonError, CanonicalTable, QuasiR};
pub use qring::RingElem;
pub use repmod::{Composition, ModuleVector, OrbitIndex};
pub use rmatrix::{PermWord, RMap, Sign};
