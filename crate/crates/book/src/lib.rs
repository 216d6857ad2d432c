//! The guide in `book/`, compiled so its listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/copula.md")]
pub mod copula {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/tails.md")]
pub mod tails {}

#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}

#[doc = include_str!("../../../book/src/censoring.md")]
pub mod censoring {}

#[doc = include_str!("../../../book/src/local.md")]
pub mod local {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/studies.md")]
pub mod studies {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
