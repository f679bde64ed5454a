//! Spectral laboratory for the prescribed T-curvature flow on the round 3-sphere.

pub mod beckner;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod io;
pub mod mobius;
pub mod morse;
pub mod shadow;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/spectral-basis.md")]
    struct SpectralBasis;
    #[doc = include_str!("../../../book/src/operator.md")]
    struct Operator;
    #[doc = include_str!("../../../book/src/curvature.md")]
    struct Curvature;
    #[doc = include_str!("../../../book/src/mobius.md")]
    struct Mobius;
    #[doc = include_str!("../../../book/src/flow.md")]
    struct Flow;
    #[doc = include_str!("../../../book/src/shadow.md")]
    struct Shadow;
    #[doc = include_str!("../../../book/src/morse.md")]
    struct Morse;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
