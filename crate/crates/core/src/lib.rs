//! Greedy minimum-entropy coupling of discrete distributions.
//!
//! Given marginals `p_1, ..., p_m`, [`greedy::greedy_couple`] builds a joint
//! distribution with those marginals by repeatedly merging the largest
//! remaining state of each one. Its entropy never exceeds the entropy of the
//! majorization meet of the marginals by more than `log2(e)` bits, and the
//! meet entropy is itself a lower bound on every coupling. This crate
//! computes the coupling together with certificates for those facts:
//!
//! - [`majorization`]: majorization tests, the meet, strong majorization.
//! - [`greedy`]: the coupling, per-step lower bounds, and the gap report.
//! - [`split`]: geometric splits of the meet and the bound family they give.
//! - [`majorizing_set`]: the closed-form optimum when the instance is every
//!   distribution majorizing a base, with its adversarial refutation.
//! - [`oracle`]: exact minimum-entropy coupling for small instances.
//! - [`verify`]: seeded batch checks over random instances.
//!
//! Masses are generic over [`Scalar`]: `f64`, or exact `BigRational`.

pub mod coupling;
pub mod distribution;
pub mod error;
pub mod generate;
pub mod greedy;
pub mod majorization;
pub mod majorizing_set;
pub mod oracle;
pub mod scalar;
pub mod split;
pub mod verify;

pub use coupling::{Cell, Coupling};
pub use distribution::{entropy, make_distribution, prefix_sum, Distribution, Instance};
pub use error::{MecError, Result};
pub use greedy::{bound_report, greedy_couple, step_certificate, BoundReport, GreedyTrace, LOG2_E};
pub use majorization::{is_strongly_majorized, majorizes, meet, MeetResult, StrongMajorization};
pub use num::BigRational;
pub use scalar::{NumericMode, Scalar, Tolerance};
