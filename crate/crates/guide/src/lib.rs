//! Every fenced Rust block in the mdbook guide (`book/`) is compiled and run
//! as a documentation test of this crate, so `cargo test --workspace` fails
//! whenever the book drifts from the `ncmartingale` API. One module per
//! chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/algebras.md")]
pub mod algebras {}

#[doc = include_str!("../../../book/src/filtrations.md")]
pub mod filtrations {}

#[doc = include_str!("../../../book/src/square-functions.md")]
pub mod square_functions {}

#[doc = include_str!("../../../book/src/stopping.md")]
pub mod stopping {}

#[doc = include_str!("../../../book/src/decompositions.md")]
pub mod decompositions {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
