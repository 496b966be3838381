//! The guide's chapters as doc modules, so `cargo test` runs every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/variants.md")]
pub mod variants {}
#[doc = include_str!("../../../book/src/integration.md")]
pub mod integration {}
#[doc = include_str!("../../../book/src/smoothing.md")]
pub mod smoothing {}
#[doc = include_str!("../../../book/src/resonance.md")]
pub mod resonance {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
