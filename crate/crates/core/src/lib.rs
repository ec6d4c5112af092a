pub mod analysis;
pub mod config;
pub mod error;
pub mod event;
pub mod field;
pub mod newton;
pub mod output;
pub mod params;
pub mod pauli;
pub mod rng;
pub mod runner;
pub mod vec3;
pub mod verify;

pub use error::{EngineError, FieldError, ParamError, PauliError};
pub use vec3::Vec3;
