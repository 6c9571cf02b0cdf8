//! Exact phase-space simulation of a hybrid cat-state quantum repeater.

pub mod bilinear;
pub mod connect;
pub mod density;
pub mod error;
pub mod fit;
pub mod growth;
pub mod integrals;
pub mod phase_space;
pub mod repeater;
pub mod swap;
pub mod target;

pub use error::{Error, Result};
