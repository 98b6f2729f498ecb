#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod error;
pub mod discretization;
pub mod io;
pub mod potentials;
pub mod reference;
pub mod state;
pub mod variational;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/potentials.md")]
    struct Potentials;
    #[doc = include_str!("../../../book/src/discretization.md")]
    struct Discretization;
    #[doc = include_str!("../../../book/src/functional.md")]
    struct Functional;
    #[doc = include_str!("../../../book/src/solving.md")]
    struct Solving;
    #[doc = include_str!("../../../book/src/reference.md")]
    struct Reference;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
