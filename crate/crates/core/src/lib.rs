//! Patch-structured Lotka-Volterra systems with infinite distributed delays
//! and discrete dispersal delays.

// `!(x > 0)` is used throughout so that NaN fails every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod characteristic;
pub mod classifier;
pub mod equilibrium;
pub mod integrator;
pub mod lp;
pub mod matrix;
pub mod matrix_analysis;
pub mod model;
pub mod scalar;

pub use characteristic::{dominant_real_char_root, CharRoot};
pub use classifier::{
    classify, verify_prediction, ClassificationReport, Expectation, Status, Summary, TheoremId, TheoremVerdict, VerificationReport,
    VerifyError, VerifyOptions,
};
pub use equilibrium::{find_equilibria, EquilibriumOptions, EquilibriumPoint, EquilibriumSet};
pub use integrator::chain::{linear_chain_reduce, ChainError, ChainOde};
pub use integrator::history::{HistoryFunction, HistoryKind};
pub use integrator::quad::truncation_horizon;
pub use integrator::trajectory::{Range, Trajectory};
pub use integrator::{simulate, SimError, SimOptions};
pub use lp::{LinearProgram, LpOutcome, Relation};
pub use matrix::SquareMatrix;
pub use matrix_analysis::{classify_z_matrix, decide_nonsingular_m, spectral_bound, Decision, MTest, ZMatrixClass};
pub use model::{CanonicalForm, DelayKernel, DerivedMatrices, LVPatchSystem, ModelError, RawPatchForm};
pub use scalar::{BandSign, Scalar, Tolerances};

/// Double-precision matrix.
pub type Matrix = SquareMatrix<f64>;
/// Double-precision patch system.
pub type PatchSystem = LVPatchSystem<f64>;
/// Double-precision kernel.
pub type Kernel = DelayKernel<f64>;
