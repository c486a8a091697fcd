//! Numerical verification of conservation identities in conformal geometry.
//!
//! The crate builds concrete Riemannian charts with exact metric jets,
//! evaluates curvature invariants on them, integrates over chart regions and
//! boundary faces, and checks Kazdan-Warner type identities, Pohozaev-Schoen
//! identities, conserved currents and the classical Pohozaev identity with
//! refinement-based error control.

pub mod curvature;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod integrate;
pub mod jet;
pub mod linalg;
pub mod pohozaev_pde;
pub mod variational;

pub use error::{Error, Result};
pub use jet::Jet;
