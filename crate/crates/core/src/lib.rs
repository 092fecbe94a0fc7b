//! Delta-oriented modeling of component-and-connector architectures.
//!
//! An architecture family is described as a *core* architecture plus a set of
//! named *deltas* (add/remove/replace operations on ports, subcomponents and
//! connectors) and *configurations* that pick delta subsets. The crate parses
//! the textual languages for all of these, computes valid delta application
//! orders, generates product variants, checks them for well-formedness and
//! confluence, and offers variant-preserving refactorings (delta composition,
//! merging deltas into the core, delta inversion).
//!
//! For comparison, the same family can be written as a single annotated
//! "150%" architecture whose elements carry variant-name annotations; the
//! [`annotative`] module projects variants out of such a model and the
//! [`metrics`] module quantifies both styles side by side.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO; all functions are
//! deterministic, so identical inputs produce byte-identical outputs.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod annotative;
pub mod engine;
pub mod lexer;
pub mod metrics;
pub mod model;
pub mod parser;
pub mod refactor;
pub mod unparse;

pub use model::{
    AocExpr, ComponentType, Connector, ConnectorEnd, ConnectorOrigin, Delta, DeltaConfig,
    DeltaModel, DeltaOp, Direction, ModifyBlock, PortDecl, SubcomponentDecl,
};
