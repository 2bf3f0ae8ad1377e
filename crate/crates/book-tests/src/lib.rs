//! Compiles the guide's Rust snippets as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/queries.md")]
pub mod queries {}
#[doc = include_str!("../../../book/src/closed_world.md")]
pub mod closed_world {}
#[doc = include_str!("../../../book/src/open_world.md")]
pub mod open_world {}
#[doc = include_str!("../../../book/src/exact_dp.md")]
pub mod exact_dp {}
#[doc = include_str!("../../../book/src/greedy.md")]
pub mod greedy {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
