//! Error type shared by all modules of the toolkit.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The elliptic modulus must lie in the upper half plane.
    #[error("tau = {0} is not a valid elliptic modulus (need Im(tau) > 0)")]
    InvalidTau(Complex64),

    /// Theta-series derivatives are implemented for orders 1..=3 only.
    #[error("unsupported theta derivative order {0} (supported: 1, 2, 3)")]
    UnsupportedOrder(u32),

    /// An evaluation argument fell inside the pole-exclusion radius.
    #[error("{context}: argument {value} is {distance:.3e} from a pole")]
    PoleProximity {
        context: String,
        value: Complex64,
        distance: f64,
    },

    /// A registered R-matrix family failed its self-certification.
    #[error("family '{family}' failed {check} certification: residual {residual:.3e} > {tolerance:.3e}")]
    Certification {
        family: String,
        check: String,
        residual: f64,
        tolerance: f64,
    },

    /// Richardson extrapolation did not settle within the expected gap.
    #[error("{context}: extrapolation estimates differ by {delta:.3e}")]
    ExtrapolationDiverged { context: String, delta: f64 },

    /// A shifted evaluation was attempted on a slot the operator acts on.
    #[error("shift slot {slot} is not passive: diagonal commutator probe gives {commutator:.3e}")]
    ShiftSlotNotPassive { slot: usize, commutator: f64 },

    /// Analytic and finite-difference derivatives disagree.
    #[error("{context}: analytic vs finite-difference derivative deviation {deviation:.3e}")]
    DerivativeMismatch { context: String, deviation: f64 },

    /// The rejection sampler hit its retry cap without a pole-free sample.
    #[error("sampler for {kind} exhausted {attempts} attempts without clearing poles")]
    SamplerExhausted { kind: String, attempts: usize },

    /// Component-identity indices must be pairwise distinct.
    #[error("component identity needs pairwise distinct indices, got ({i}, {j}, {k})")]
    IndexClash { i: usize, j: usize, k: usize },

    /// Invalid configuration (bad parameters, inconsistent flags, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A plugin family description could not be loaded.
    #[error("plugin error: {0}")]
    Plugin(String),
}
