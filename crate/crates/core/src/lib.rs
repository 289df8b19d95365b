pub mod error;
pub mod extensions;
pub mod gazero;
pub mod izform;
pub mod linalg;
pub mod model;
pub mod options;
pub mod rosenbrock;

pub use error::{Error, Result};
pub use model::{Method, StateSpace, Zero, ZeroSet};
pub use options::ZeroOptions;
