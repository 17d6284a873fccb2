pub mod analysis;
pub mod atomfield;
pub mod error;
pub mod fock;
pub mod opensys;
pub mod optim;
pub mod protocols;
pub mod units;
pub mod zeno;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
