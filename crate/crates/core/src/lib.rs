pub mod charlib;
pub mod constructions;
pub mod counting;
pub mod cyclo;
pub mod error;
pub mod ffield;
pub mod matmodel;
pub mod repkit;
pub mod serieslab;
pub mod twistring;

pub use error::{Error, Result};
