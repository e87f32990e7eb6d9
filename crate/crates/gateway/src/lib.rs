//! Configuration, CLI and HTTP service over the chemvecrag store and agents.
//!
//! The CLI and the HTTP handlers are thin shells over [`service::Service`].

pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod query;
pub mod service;

pub use config::Config;
pub use error::{ErrorClass, ServiceError};
pub use service::Service;
