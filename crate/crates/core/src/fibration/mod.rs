//! Computable fibrations: local-insolubility oracles, the counting function
//! `omega_f` and the invariant `Delta`.

mod model;
mod point;
mod symbols;

pub use model::{Component, FibrationModel, ModelKind, ModelKindTag, ModelSpec, SplitRule};
pub(crate) use model::count_in_window;
pub use point::ProjectivePoint;
pub(crate) use point::height_of;
pub use symbols::{hilbert_symbol, hilbert_symbol_int, jacobi, legendre_symbol, relevant_places, Place};
