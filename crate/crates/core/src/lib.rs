//! Jet-space calculus engine: verify sub-symmetries of differential systems,
//! generate the associated local conservation laws through the Noether
//! operator identity, and classify them as trivial or nontrivial.
//!
//! Everything is exact: expressions are rational functions over the rationals
//! in jet coordinates, parameters, field symbols and opaque function
//! applications, and every verdict is a normalize-to-zero test, optionally
//! cross-checked by a seeded exact-rational numeric oracle.

pub mod catalog;
pub mod dsl;
pub mod expr;
pub mod report;
pub mod runner;
pub mod jet;
pub mod subsym;
pub mod system;

pub use expr::{Atom, Expr, ExprError, MultiIndex};
