pub mod basis;
pub mod cli;
pub mod epg;
pub mod error;
pub mod linalg;
pub mod local_fit;
pub mod optim;
pub mod photonic;
pub mod process;
pub mod tomography;

pub use error::{Error, Result};
