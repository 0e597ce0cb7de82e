//! Construction and numerical verification of quantum and classical
//! R-matrices.
//!
//! The crate builds a GL(NM) dynamical R-matrix out of any GL(N) solution of
//! the associative Yang-Baxter equation with skew-symmetry and unitarity, and
//! provides residual checkers for every identity involved: the associative,
//! quantum, dynamical and classical Yang-Baxter equations, the Fay trisecant
//! identity, unitarity relations and the semiclassical limits.
//!
//! Modules:
//! - [`special`]: theta series, Kronecker function, E1, Weierstrass-type wp.
//! - [`tensor`]: dense complex operators on ordered tensor slots.
//! - [`vertex`]: non-dynamical R-matrix families (scalar, Yang, Belavin,
//!   plugins) behind one evaluation interface.
//! - [`dynamical`]: Felder's GL(M) R-matrix, the composite GL(NM) R-matrix,
//!   dynamical shifts and classical limits.
//! - [`verify`]: residual evaluation of each identity with seeded sampling.

pub mod dynamical;
pub mod error;
pub mod special;
pub mod tensor;
pub mod verify;
pub mod vertex;

pub use error::{Error, Result};
pub use special::{theta, theta_deriv, FunctionVariant, POLE_EXCLUSION_RADIUS};
pub use tensor::{SlotShape, TensorOp};
pub use vertex::{belavin_family, scalar_family, yang_family, RFamily};
pub use dynamical::{
    composite_classical_r, composite_r, felder_classical_r, felder_r, shifted_eval, DynParams,
    ShiftSpec,
};
pub use verify::{CheckKind, CheckReport, Sample};
