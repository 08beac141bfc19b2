#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod algorithms;
pub mod cloud;
pub mod conic;
pub mod error;
pub mod experiments;
pub mod ran;
pub mod scenario;

pub use error::{Error, Result};
