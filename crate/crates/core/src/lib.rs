//! Numerics for the symmetric subspace of `(C^d)^{⊗n}`.
//!
//! Exact rational combinatorics live in [`exactcomb`]; dense operators,
//! permutation and matching operators, and symmetric projectors in
//! [`tensorspace`]; superoperators and the cloning, measure-and-prepare and
//! partial-trace channels in [`channels`]; de Finetti coefficients in
//! [`definetti`]; seeded sampling and Monte Carlo in [`randomness`]; and the
//! moment-method product-state bounds in [`concentration`].
//!
//! With the default `parallel` feature, grid sweeps, Monte Carlo blocks and
//! ascent restarts run on the rayon pool. Results are identical with the
//! feature disabled.

pub mod channels;
pub mod concentration;
pub mod definetti;
pub mod error;
pub mod exactcomb;
pub mod exec;
pub mod limits;
pub mod randomness;
pub mod tensorspace;

pub use error::{Result, SymsubError};
pub use limits::Limits;
