//! Numerical toolkit for Dirac linear algebra on quadratic Lie groups.
//!
//! The crate provides, at desk scale (dense `f64` matrices, groups of
//! dimension ≤ ~10):
//!
//! * [`linalg`] / [`dirac`] — subspaces of ℝⁿ with tolerance-based rank
//!   decisions, and Lagrangian subspaces of V ⊕ V* together with the
//!   pointwise Dirac-structure operations (graphs, gauge transformations,
//!   pushforward/pullback, leaf 2-forms, linear reduction).
//! * [`lie`] — quadratic Lie algebras from structure constants, the Cartan
//!   3-form and its dual trivector, built-in algebras and JSON ingestion.
//! * [`group`] — matrix-group arithmetic (SO(3), SU(2) as unit quaternions,
//!   SL(2,ℝ), abelian ℝⁿ), adjoint representations and frame conversions.
//! * [`fields`] — invariant-frame tensor calculus: exact directional
//!   derivatives of Ad-polynomial coefficients, Lie brackets of vector
//!   fields, exterior derivatives, Schouten squares.
//! * [`cartan`] — the structure maps ρ, σ, ρ∨, σ∨ with their identity
//!   suite, Cartan-Dirac structures, the canonical quasi-Poisson bivector,
//!   and conjugacy-class 2-forms.
//! * [`sections`] — section-level brackets (bivector-induced, twisted,
//!   Courant, quasi-Poisson algebroid), IM-form axioms, jacobiators.
//! * [`realization`] — the two-way conversion between Dirac realizations
//!   and quasi-Poisson data, exact-sequence splittings, moment residuals,
//!   roundtrip checks, and a synthetic-data generator.
//! * [`groupoid`] — the conjugation groupoid G ⋉ G with its multiplicative
//!   2-form, presymplectic axioms and a reduction demo.
//! * [`report`] — machine-readable verification reports with deterministic
//!   JSON output.

pub mod cartan;
pub mod dirac;
pub mod error;
pub mod fields;
pub mod group;
pub mod groupoid;
pub mod lie;
pub mod linalg;
pub mod realization;
pub mod report;
pub mod sections;

pub use error::Error;

/// Default tolerance for rank decisions: singular values below
/// `RANK_TOL * σ_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Two subspaces are considered equal when all principal angles are below
/// this threshold.
pub const ANGLE_TOL: f64 = 1e-8;

pub mod checks;
