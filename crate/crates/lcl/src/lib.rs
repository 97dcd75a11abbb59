//! File formats, reports and runners around [`lcl_core`].

pub mod error;
pub mod model;
pub mod report;
pub mod run;
pub mod spec;

pub use error::{Error, Result};
