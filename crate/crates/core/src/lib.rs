//! Weighted conditional expectation operators `T = M_w E M_u` on finite
//! measure spaces: closed-form norm, functional calculus, polar
//! decomposition, Aluthge transform and spectral structure, each checked
//! against dense linear-algebra oracles.

pub mod condexp;
pub mod error;
pub mod harness;
pub mod measure;
pub mod opalgebra;
pub mod spectral;
pub mod tolerance;
pub mod wce;

pub use error::{Error, Result};
pub use measure::{FiniteMeasureSpace, IndexSet, MeasurableFunction, Partition, C64};
pub use opalgebra::WeightedOperator;
pub use wce::WceInstance;
