//! Cross-diffusion tumour growth models with a convex pressure law.

pub mod diagnostics;
pub mod energy;
pub mod grid;
pub mod io;
pub mod limits;
pub mod solver;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/energies.md")]
    struct Energies;
    #[doc = include_str!("../../../book/src/grid.md")]
    struct Grids;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    struct Diagnostics;
    #[doc = include_str!("../../../book/src/limits.md")]
    struct Limits;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
