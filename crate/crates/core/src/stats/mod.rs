//! Conditional independence testing.

mod cache;
mod ci;
mod dataset;

pub use cache::PValueCache;
pub use ci::{fisher_z_test, g2_test, CiTest, FisherZ, Oracle, G2};
pub use dataset::{Dataset, ValueKind};
