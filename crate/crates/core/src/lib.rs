//! Directional diffusion splitting for 2D advection-diffusion-reaction
//! problems on rectangles.

pub mod config;
pub mod driver;
pub mod error;
pub mod expr;
pub mod fem1d;
pub mod field;
pub mod geom;
pub mod io;
pub mod problem;
pub mod reference;
pub mod stepper;
pub mod tracer;
pub mod transfer;

pub use error::{Error, Result};
