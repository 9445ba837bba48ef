pub mod cli;
pub mod error;
pub mod linalg;
pub mod measurements;
pub mod oracle;
pub mod perfect;
pub mod qubit;
pub mod reduction;
pub mod testers;
pub mod trine;

mod search;

pub use error::{Error, Result};
