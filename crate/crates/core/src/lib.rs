pub mod acl;
pub mod cli;
pub mod data;
pub mod error;
pub mod export;
pub mod metrics;
pub mod models;
pub mod networks;
pub mod numerics;

pub use error::{Error, Result};
