//! Exact computational engine for diagram algebras built from planar tangles:
//! Laurent polynomial scalars, a term language for monoidal presentations,
//! Temperley-Lieb and Hecke-tower models, annular (coil/dot) extensions of
//! presentations, horizontal and vertical trace constructions, and skein
//! evaluators for the classical link invariants that tie all of it together.
//!
//! Everything is exact: integer or Gaussian-integer coefficients, Laurent
//! exponents, no floating point anywhere. All randomized checks take explicit
//! seeds and all serialized output is canonically ordered.

pub mod affinize;
pub mod cli;
pub mod ring;
pub mod skein;
pub mod term;
pub mod tl;
pub mod towers;
pub mod traces;
