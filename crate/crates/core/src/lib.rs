//! GTL: a small gradually typed language plus a workbench for comparing how
//! its typed/untyped module mixes behave under four interoperation semantics.
//!
//! A program is a list of s-expression modules, each typed, untyped, or
//! configurable (typedness decided per run by a configuration bit vector).
//! The same program can then be executed under:
//!
//! * **Erased** - types are ignored at run time.
//! * **Deep** - module boundaries install higher-order contracts; every
//!   boundary crossing is fully monitored and errors blame one boundary.
//! * **Shallow** - typed code is compiled with first-order shape checks at
//!   function entries, elimination forms, casts, and boundary imports.
//! * **SB** - Shallow plus a global blame map that turns shape failures into
//!   a filtered list of candidate boundaries.
//!
//! The `bench` module enumerates the full 2^N configuration lattice of a
//! program and reports deterministic cost-counter profiles per semantics,
//! including CDF summaries of overhead against the all-untyped Erased
//! baseline.

pub mod bench;
pub mod blamemap;
pub mod fixtures;
pub mod natural;
pub mod runtime;
pub mod shapes;
pub mod syntax;
pub mod transient;
pub mod types;
