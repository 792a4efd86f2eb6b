//! Weighted ω-pluricomplex Green functions on the Riemann sphere.
//!
//! The envelope `V_{K,ω,Q}` is computed two ways: as the discrete obstacle
//! envelope of ω-subharmonic grid functions ([`relax`]), and from weighted
//! polynomial envelopes built on Leja nodes ([`sections`]). The remaining
//! modules implement the weight and gauge algebra ([`weights`]), the
//! homogenization dictionary ([`hprinciple`]), and pullbacks by rational
//! maps ([`pullback`]).

pub mod error;
pub mod hprinciple;
pub mod par;
pub mod pullback;
pub mod relax;
pub mod sections;
pub mod sphere;
pub mod weights;

pub use error::{Error, Result};
pub use sphere::{chart_transition, Chart, GridField, Interp, OmegaSpec, ProjPoint, SphereGrid};
