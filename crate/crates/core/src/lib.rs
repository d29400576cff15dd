//! Reading-time analysis of clause-final wrap-up effects.
//!
//! The crate covers the pipeline from raw reading-time data to
//! cross-validated model comparisons:
//!
//! - [`corpus`]: ingest self-paced reading and eye-tracking data into a
//!   word-level table of subject-averaged reading times.
//! - [`ngram`]: an interpolated modified Kneser–Ney language model.
//! - [`surprisal`]: per-word surprisal from the n-gram model or from imported
//!   subword scores.
//! - [`predictors`]: baseline and `INF^(k)` features for regression.
//! - [`regression`]: OLS fits, held-out log-likelihoods and the
//!   cross-validated `ΔLogLik` sweep over `k`.
//! - [`synth`]: synthetic corpora with a known generating process.

pub mod corpus;
mod error;
pub mod ngram;
pub mod predictors;
pub mod regression;
pub mod surprisal;
pub mod synth;
mod tsv;

pub use error::{Error, Result};

// The guide's chapters run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpora.md")]
    mod corpora {}
    #[doc = include_str!("../../../book/src/surprisal.md")]
    mod surprisal {}
    #[doc = include_str!("../../../book/src/inf-k.md")]
    mod inf_k {}
    #[doc = include_str!("../../../book/src/regression.md")]
    mod regression {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
