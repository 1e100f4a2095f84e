//! Generalized Kloosterman sums of half-integral weight attached to the
//! Weil representation of an even lattice, together with the closed-form
//! ingredients (Gauss sums, genus characters, local congruence counts)
//! needed to evaluate and cross-check them.

pub mod bounds;
pub mod error;
pub mod gauss;
pub mod identity;
pub mod kloosterman;
pub mod lattice;
pub mod numeric;
pub mod numth;
pub mod weilrep;

pub use error::{Error, Result};
pub use lattice::{DiscElement, DiscGroup, EvenLattice};
pub use numeric::{AlgValue, Ctx, Tolerance};
