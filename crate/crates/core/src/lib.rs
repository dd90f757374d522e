//! Numerics for the tt*-Toda equations: special functions, the explicit
//! asymptotic/monodromy data maps, the radial Hamiltonian flow and the
//! tau-function constant.

pub mod datamaps;
pub mod error;
pub mod ode;
pub mod specialfn;
pub mod tauconst;
pub mod todaflow;

pub use datamaps::{AsymptoticData, MonodromyData};
pub use error::{Error, Result};
pub use specialfn::PositiveReal;
pub use tauconst::ConstantReport;
pub use todaflow::{IntegratorConfig, PhasePoint, StopReason, Trajectory};
