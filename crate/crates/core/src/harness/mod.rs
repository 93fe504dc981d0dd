//! Instance generation, instance files, and the verification suite behind the
//! `wce` command-line tool.

pub mod generator;
pub mod io;
pub mod suite;

use crate::spectral::measure::PointMap;
use crate::wce::WceInstance;

/// Everything an instance file describes: the operator data and an optional
/// point map for the spectral-measure checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub wce: WceInstance,
    pub phi: Option<PointMap>,
}

pub use generator::{gen_instance, suite_config, GeneratorConfig, SpecialModes};
pub use io::{instance_digest, parse_instance, serialize_instance, ParseError};
pub use suite::{run_suite, Check, CheckRecord, Status, VerificationReport};
