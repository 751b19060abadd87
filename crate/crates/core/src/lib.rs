//! Cache-aided private variable-length coding.
//!
//! A server holds `N` files correlated with a private variable `X`. Users
//! with local caches request files; the server answers with one broadcast
//! that every user can decode while an eavesdropper learns nothing (or
//! exactly `ε` bits) about `X`.
//!
//! The broadcast is a two-part code: a one-time pad of `X` under a shared key,
//! followed by a prefix-free code for a representation `U` of the ordinary
//! coded-caching payload that is independent of `X`.
//!
//! All probabilities are exact rationals, so the privacy audits decide
//! independence exactly instead of thresholding a floating-point estimate.

pub mod bounds;
pub mod caching;
pub mod cli;
pub mod dist;
pub mod error;
pub mod frl;
pub mod pipeline;
pub mod privcode;

pub use error::{Error, Result};
