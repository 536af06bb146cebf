pub mod complex;
pub mod contragredient;
pub mod error;
pub mod ext;
pub mod jobs;
pub mod laurent;
pub mod linalg;
pub mod scalar;
pub mod vertex;

pub use error::{Error, Result};
pub use scalar::Scalar;
