pub mod bounds;
pub mod cli;
pub mod diophantine;
pub mod domains;
pub mod error;
pub mod numeric;
pub mod persistence;
pub mod reeb;

pub use error::{Error, Result};
pub use numeric::{ExtRational, Rational};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/exact-arithmetic.md")]
    mod exact_arithmetic {}
    #[doc = include_str!("../../../book/src/reeb-orbits.md")]
    mod reeb_orbits {}
    #[doc = include_str!("../../../book/src/dirichlet-windows.md")]
    mod dirichlet_windows {}
    #[doc = include_str!("../../../book/src/barcodes.md")]
    mod barcodes {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
