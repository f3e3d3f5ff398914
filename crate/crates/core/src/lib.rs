// `!(x > 0.0)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the element-matrix formulas.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod basis;
pub mod driver;
pub mod error;
pub mod field;
pub mod linsolve;
pub mod manufactured;
pub mod mesh;
pub mod sparse;

pub use error::{Error, Result};

/// The guide in `book/`; its Rust snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mesh-and-spaces.md")]
    mod mesh_and_spaces {}
    #[doc = include_str!("../../../book/src/assembly.md")]
    mod assembly {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/manufactured.md")]
    mod manufactured {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/sources.md")]
    mod sources {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
