//! Entanglement witnesses from positive linear maps.
//!
//! The crate covers the Choi–Jamiołkowski correspondence between maps
//! `M_m -> M_n` and operators on `C^n ⊗ C^m`, the bilinear pairing that makes
//! separable states and positive maps dual cones, the generalized Choi maps
//! `Φ[a,b,c]`, a numerical exposedness certificate for the family `Φ(t)`, and
//! a projected-descent search for PPT entangled states detected by a witness.

pub mod duality;
pub mod error;
pub mod exposed;
pub mod linalg;
pub mod maps;
pub mod ppt;
pub mod sampling;

pub use error::{Error, Result};
pub use linalg::{BipartiteDims, CMatrix, CVector, HermMatrix, C64};
pub use maps::{ChoiParams, LinMapRep, MapClass, TParam};
