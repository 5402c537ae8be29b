pub mod aideal;
pub mod compare;
pub mod elim;
pub mod error;
pub mod groebner;
pub mod invariants;
pub mod lattice;
pub mod qcoeff;
pub mod qtorus;
pub mod triangulation;

pub use error::{Error, Result};
