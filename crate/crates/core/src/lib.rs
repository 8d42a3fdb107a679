//! Verification engine for population protocols with unordered data.
//!
//! Configurations are stored datum-anonymously as multisets of per-datum
//! state-count profiles. On top of that the crate provides exact step
//! semantics, reachability and fairness analysis, interval predicates,
//! the box/container abstraction, generalised reachability expressions,
//! agent-level run transformations and a counter-machine compiler.

pub mod bounds;
pub mod catalog;
pub mod config;
pub mod container;
pub mod enumerate;
pub mod fairness;
pub mod gen;
pub mod gre;
mod matching;
pub mod membership;
pub mod predicate;
pub mod protocol;
pub mod reach;
pub mod reduction;
pub mod run;
pub mod semantics;
pub mod text;
pub mod transform;
pub mod verify;

pub use config::{CanonicalConfiguration, DatumProfile, Signature};
pub use protocol::{Guard, Output, Protocol, StateId, Transition};
