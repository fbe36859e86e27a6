pub mod domain;
pub mod error;
pub mod experiment;
pub mod holo_bi;
pub mod holo_uni;
pub mod inference;
pub mod oracle;
pub mod ode;
pub mod polyalg;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};

