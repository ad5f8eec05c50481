//! Command-line driver, trace store and HTTP service for navigation-model
//! checking and trace slicing.

pub mod api;
pub mod docs;
pub mod error;
pub mod ops;
pub mod store;

pub use error::AppError;
pub use store::TraceStore;
