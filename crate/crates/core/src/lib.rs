pub mod copula;
pub mod dist;
pub mod error;
pub mod infer;
pub mod io;
pub mod quad;
pub mod sim;
pub mod special_fn;
pub mod study;
pub mod tail;

pub use error::{Error, Result};
