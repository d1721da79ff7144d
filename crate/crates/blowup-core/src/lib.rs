//! Self-similar blow-up profiles of u_t = (u^m)_xx + |x|^sigma u^p in the
//! critical case m + p = 2: phase-space flow, orbit classification, profile
//! reconstruction and barrier verification.

pub mod barriers;
pub mod error;
pub mod integrator;
pub mod orbits;
pub mod parameters;
pub mod phase_field;
pub mod profiles;

pub use error::{Error, Result};
pub use integrator::{IntegrationControls, Trajectory};
pub use parameters::{Exponents, Params};
pub use phase_field::{ChartPoint, PhasePoint};
