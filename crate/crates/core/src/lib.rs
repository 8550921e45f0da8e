//! Correlated Nakagami-m channel generation and Gaussian-copula outage
//! analysis for fluid antenna systems (FAS).
//!
//! A FAS receiver switches among `N` ports spread over `W` wavelengths and
//! keeps the strongest one. This crate builds the Jakes spatial correlation
//! of those ports, maps it to gain and envelope level, generates correlated
//! Nakagami-m envelopes (physically, or through a Gaussian copula), and
//! evaluates the outage probability of the peak envelope both by Monte Carlo
//! and through the Gaussian-copula CDF.

// `!(x > 0.0)` also rejects NaN, which is what argument checks want.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copula;
pub mod correlation;
pub mod error;
pub mod generator;
pub mod nakagami;
pub mod numerics;
pub mod outage;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
