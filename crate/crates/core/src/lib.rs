#![allow(clippy::needless_range_loop)]

pub mod encode;
pub mod error;
pub mod fci;
pub mod graph;
pub mod pipeline;
pub mod resolve;
pub mod simulate;
pub mod solve;
pub mod stats;
pub mod summary;
#[cfg(test)]
mod testkit;

pub use error::{Error, Result};
