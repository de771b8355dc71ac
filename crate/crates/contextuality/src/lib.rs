//! Toolkit for deciding contextuality of measurement statistics.
//!
//! The crate is organized around the marginal problem: a [`scenario::MarginalScenario`]
//! declares which sets of ±1-valued observables are jointly measurable, a
//! [`scenario::MarginalModel`] assigns outcome statistics to those contexts, and
//! [`polytope::decide_contextuality`] settles — in exact rational arithmetic — whether
//! the statistics admit a global joint distribution (noncontextual) or violate a Boole
//! inequality (contextual), returning a certificate either way.
//!
//! Around that core:
//!
//! - [`ncycle`] provides closed forms for the n-cycle family (CHSH at n = 4,
//!   Klyachko at n = 5): all Boole inequalities, polytope vertices, quantum bounds
//!   and explicit quantum realizations.
//! - [`quantum`] is a small dense complex-Hermitian linear-algebra layer (Born rule,
//!   commutation, joint-context statistics, operator norms) with bundled verified
//!   projector datasets (Spekkens-6, Yu-Oh-13, Peres-Mermin, CEG-18, PBR).
//! - [`csw`] converts full-correlation Boole inequalities to sums of event
//!   probabilities, builds exclusivity graphs, and computes Lovász theta by SDP.
//! - [`onto`] simulates ontological (hidden-state) models against Born-rule targets.
//! - [`kscolor`] enumerates Kochen-Specker {0,1} colorings and parity certificates.
//! - [`files`] defines the JSON interchange formats used by the CLI.

pub mod csw;
pub mod files;
pub mod kscolor;
pub mod ncycle;
pub mod onto;
pub mod polytope;
pub mod quantum;
pub mod scenario;

pub use scenario::{ExpectationVector, MarginalModel, MarginalScenario, Observable};
