pub mod cartan;
pub mod config;
pub mod conventions;
pub mod error;
pub mod exterior;
pub mod field;
pub mod flows;
pub mod grid;
pub mod invariants;
pub mod manifold;
pub mod monopole;
pub(crate) mod par;
pub mod poly;
pub mod pseudohermitian;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use par::is_parallel;
