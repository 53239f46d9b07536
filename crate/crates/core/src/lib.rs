pub mod ddg_spatial;
pub mod error;
pub mod fracops;
pub mod meshbasis;
pub mod models;
pub mod specfun;
pub mod timestep;

pub use error::{FracError, Result};
