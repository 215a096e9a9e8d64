//! Mechanistic polar reaction prediction.

pub mod chem;
pub mod dataio;
pub mod featurize;
pub mod hybrid;
pub mod nn;
pub mod pathway;
pub mod ptgen;
pub mod reaction;
pub mod twostep;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/molecules.md")]
    mod molecules {}
    #[doc = include_str!("../../../book/src/steps.md")]
    mod steps {}
    #[doc = include_str!("../../../book/src/twostep.md")]
    mod twostep {}
    #[doc = include_str!("../../../book/src/ptgen.md")]
    mod ptgen {}
    #[doc = include_str!("../../../book/src/hybrid.md")]
    mod hybrid {}
    #[doc = include_str!("../../../book/src/pathway.md")]
    mod pathway {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
