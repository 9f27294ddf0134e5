//! The guide's code listings, compiled and run as doc-tests so the book
//! cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/schemes.md")]
pub mod schemes {}

#[doc = include_str!("../../../book/src/transfer-matrix.md")]
pub mod transfer_matrix {}

#[doc = include_str!("../../../book/src/stability.md")]
pub mod stability {}

#[doc = include_str!("../../../book/src/critical-steplength.md")]
pub mod critical_steplength {}

#[doc = include_str!("../../../book/src/witnesses.md")]
pub mod witnesses {}

#[doc = include_str!("../../../book/src/three-stage.md")]
pub mod three_stage {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
