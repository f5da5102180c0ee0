//! Fourier analysis of bidder value functions for combinatorial auctions.
//!
//! The crate is organised bottom-up:
//!
//! - [`domain`]: bundles, allocations, report sets and valuation oracles.
//! - [`fourier`]: fast WHT / FT3 / FT4 set-function transforms, sparse
//!   spectra, spectral energy and best-k coefficient selection.
//! - [`recovery`]: support discovery from a surrogate, reconstruction
//!   queries, and sparse fitting (LASSO path and least squares).
//! - [`milp`]: MIP models for the Fourier, neural-network and reported
//!   winner determination problems, plus a branch-and-bound solver.
//! - [`wdp`]: exact WDP back ends (exhaustive enumeration, subset DP) and
//!   the solver facade used by the mechanisms.
//! - [`surrogate`]: small ReLU networks used as learned value functions.
//! - [`valuemodels`]: seeded synthetic auction instances.
//! - [`mechanisms`]: MLCA, Hybrid ICA and VCG payments.
//! - [`experiments`]: the experiment harness behind the `fica` CLI.

pub mod domain;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod io;
pub mod mechanisms;
pub mod milp;
pub mod recovery;
pub mod seeds;
pub mod stats;
pub mod surrogate;
pub mod valuemodels;
pub mod wdp;

pub use domain::{Allocation, Bundle, ReportSet, ValuationOracle};
pub use error::{Error, Result};
pub use fourier::{DenseSetFunction, SparseSpectrum, TransformKind};
