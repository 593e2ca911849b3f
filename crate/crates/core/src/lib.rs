//! A symbolic engine for Bridgeland stability conditions on a finite model of
//! the derived Fukaya category of the torus and its category of Lagrangian
//! cobordisms.
//!
//! The base category is modelled by classified semistable objects (coprime
//! rank/degree bricks with a point and a monodromy in a finite cyclic group),
//! with exact Gaussian-rational central charges. Cobordisms lift base objects
//! to integer heights; the induced slicing offsets phases by `kappa * height`.
//! The crate computes Harder-Narasimhan filtrations by rewriting iterated
//! cones, checks the stability axioms, and presents the Grothendieck and
//! Lagrangian cobordism groups of the model as finitely presented abelian
//! groups to compare them under the class map.

pub mod base;
pub mod cone;
pub mod hn;
pub mod k0;
pub mod lift;
pub mod phase;
pub mod sample;
pub mod script;
pub mod snf;

pub use base::{BaseObject, Brick, Grading, SemistableAtom};
pub use cone::{ConeExpr, MorphismTag};
pub use hn::{HnFiltration, RewriteTrace};
pub use k0::{GroupHom, PresentedGroup};
pub use lift::{CobordismSpec, Kappa, LiftedGenerator};
pub use phase::{Angle, Charge};
