//! Holomorphic embedding power flow and static voltage-stability analysis.
//!
//! Bus voltages are computed as power series in an embedding parameter,
//! continued analytically with Padé approximants, and used for σ-index
//! collapse estimates and V–Q weak-bus rankings. A Newton–Raphson solver and
//! modal analysis of the reduced Jacobian serve as independent references.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod approximant;
pub mod error;
pub mod hem;
pub mod linalg;
pub mod modal;
pub mod netmodel;
pub mod poly;
pub mod scalar;
pub mod series;
pub mod sigma;
pub mod weakbus;

pub use error::{BusId, Error, Result};
pub use scalar::{Cx, Real};

pub type Network = netmodel::NetworkModel<f64>;
pub type Series = series::PowerSeries<f64>;
pub type Pade = approximant::PadeApproximant<f64>;
pub type Solution = hem::HemSolution<f64>;
pub type Embedded = hem::EmbeddedSystem<f64>;
pub type Direction = hem::ScalingDirection<f64>;
pub type Mode = hem::EmbeddingMode<f64>;
pub type Solved = modal::SolvedState<f64>;
pub type Sigma = sigma::SigmaIndex<f64>;
pub type Snbp = sigma::SnbpEstimate<f64>;
pub type Ranking = weakbus::WeakBusRanking<f64>;
pub type Modal = modal::ModalResult<f64>;
