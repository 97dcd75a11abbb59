//! Model checking of Linear Chain Logic over families of periodic matrix
//! product states.
//!
//! A periodic MPS family is given by Kraus data `{A_k}`; its squared norms
//! are the traces `tr(M^N)` of the transfer (Liouville) matrix
//! `M = Σ conj(A_k) ⊗ A_k`. The crate decomposes the induced CP map into
//! irreducible blocks, extracts peripheral spectra, and turns that into
//! sound semilinear over/under-approximations of the sizes at which a
//! formula holds.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod checker;
pub mod logic;
pub mod matcore;
pub mod mps;
pub mod semilinear;
pub mod spectral;

pub use checker::{Checker, Verdict, VerdictKind};
pub use logic::{ChainModel, Formula, IntervalPredicate, Label, ValueExpr};
pub use matcore::{CMatrix, EigenPair, C64};
pub use mps::{KrausSet, MpsFamily};
pub use semilinear::{EvidenceApprox, SemilinearSet};
pub use spectral::{Decomposition, IrreducibleComponent};
