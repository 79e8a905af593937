pub mod adaptive;
pub mod analysis;
pub mod error;
pub mod lifting;
pub mod lti;
pub mod sim;
pub mod tolerances;
pub use nalgebra;
