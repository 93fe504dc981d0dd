//! Numerical thresholds shared by every module.
//!
//! All instances produced by the generator are O(1)-scaled (weights in
//! `[0.1, 10]`, moduli in `[0, 4]`), so the thresholds below are fixed
//! constants rather than adaptive estimates.

use serde::{Deserialize, Serialize};

/// Relative threshold for support and zero detection.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Singular values at or below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Eigenvalues within `CLAMP_TOL * ||A||` of zero are snapped to zero, and
/// eigenvalues below `-CLAMP_TOL * ||A||` make an operator non-positive.
pub const CLAMP_TOL: f64 = 1e-10;

/// Relative self-adjointness threshold for Hermitian eigensolves.
pub const SELF_ADJOINT_TOL: f64 = 1e-10;

/// Relative tolerance for operator equality.
pub const OPERATOR_TOL: f64 = 1e-8;

/// Tolerance for kernel-projection agreement.
pub const KERNEL_TOL: f64 = 1e-7;

/// Tolerance for functional-calculus comparisons.
pub const FUNC_CALC_TOL: f64 = 1e-7;

/// Values of a point function within `GROUPING_TOL * (1 + max|u|)` are merged
/// into one eigenvalue.
pub const GROUPING_TOL: f64 = 1e-8;

/// Tolerance for spectral-measure axioms and reconstruction.
pub const AXIOM_TOL: f64 = 1e-9;

/// Additive slack (times scale) for pointwise inequalities.
pub const POINTWISE_SLACK: f64 = 1e-12;

/// Run-wide tolerance set. `operator` is the knob exposed on the command line;
/// the looser tolerances scale with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub support: f64,
    pub operator: f64,
    pub kernel: f64,
    pub func_calc: f64,
    pub axiom: f64,
    pub grouping: f64,
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            support: SUPPORT_TOL,
            operator: OPERATOR_TOL,
            kernel: KERNEL_TOL,
            func_calc: FUNC_CALC_TOL,
            axiom: AXIOM_TOL,
            grouping: GROUPING_TOL,
            slack: POINTWISE_SLACK,
        }
    }
}

impl Tolerances {
    /// Overrides the operator tolerance; kernel and functional-calculus
    /// tolerances keep their ratio to it.
    pub fn with_operator(operator: f64) -> Self {
        let d = Self::default();
        let ratio = operator / d.operator;
        Self {
            operator,
            kernel: d.kernel * ratio,
            func_calc: d.func_calc * ratio,
            axiom: d.axiom * ratio,
            ..d
        }
    }
}
