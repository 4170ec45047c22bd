// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod constants;
pub mod darboux;
pub mod design;
pub mod error;
pub mod fourier;
pub mod metrics;
pub mod nft;
pub mod pipeline;
pub mod pulse;
pub mod spectrum;
pub mod ssfm;

pub use error::{Error, Result};
