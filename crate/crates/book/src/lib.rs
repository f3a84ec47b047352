//! The guide in `book/` is compiled here, one module per chapter, so that
//! `cargo test --doc -p kthier-book` runs every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/series.md")]
pub mod series {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/s-matrix.md")]
pub mod s_matrix {}
#[doc = include_str!("../../../book/src/hierarchy.md")]
pub mod hierarchy {}
#[doc = include_str!("../../../book/src/topological-solution.md")]
pub mod topological_solution {}
#[doc = include_str!("../../../book/src/invariants.md")]
pub mod invariants {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
