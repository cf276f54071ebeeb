//! Exact computations on hyperelliptic Klein coverings.
//!
//! The crate builds covering towers of hyperelliptic curves from marked point
//! configurations on the projective line, computes the 2-torsion subgroups of
//! the Jacobians involved (as even subsets of Weierstrass points), and inverts
//! the Prym map by reassembling the configuration from the quotient curves and
//! their gluing data. All arithmetic is exact.
//!
//! Module map:
//! - [`projline`]: rational points of P¹, Möbius maps, marked configurations.
//! - [`gf2`]: bit vectors and row-reduced bases over F₂.
//! - [`torsion`]: 2-torsion classes, Weil pairing, subgroups, pullback/norm.
//! - [`idempotents`]: group-ring identities for the deck group.
//! - [`towers`]: covering towers, genus bookkeeping, hyperellipticity criteria.
//! - [`prym`]: embedded 2-torsion tables, gluing groups, Prym data.
//! - [`reconstruct`]: inverse Prym maps and non-injectivity witnesses.
//! - [`family`]: the explicit curve family and the Klein quotient of P¹.

pub mod error;
pub mod family;
pub mod gf2;
pub mod idempotents;
pub mod projline;
pub mod prym;
pub mod reconstruct;
pub mod torsion;
pub mod towers;

pub use error::{Error, Result};
pub use projline::{MarkedConfig, Mobius, ProjPoint, Role, Scalar};
pub use prym::PrymDatum;
pub use reconstruct::ReconstructionResult;
pub use torsion::{TwoTorsionClass, TwoTorsionSubgroup, WUniverse};
pub use towers::{CaseTag, Tower};
