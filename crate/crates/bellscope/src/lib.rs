//! Behaviors of the two-party, two-setting, two-outcome Bell scenario and the
//! boundary shared by the quantum set and the no-signaling polytope.
//!
//! Modules, roughly in dependency order:
//!
//! * [`corrgeom`]: correlation tables, relabelings and zero-class classification.
//! * [`qstrategy`]: states, measurements, the strategy catalog and equivalence tests.
//! * [`lpcert`]: a dense simplex solver, local membership and non-exposedness certificates.
//! * [`optima`]: constrained CHSH maxima, grid oracles and maximally entangled bounds.
//! * [`sdprelax`]: moment relaxations, an interior-point SDP solver and SWAP-method bounds.

pub mod corrgeom;
pub mod linalg;
pub mod lpcert;
pub mod optima;
pub mod parallel;
pub mod qstrategy;
pub mod sdprelax;

pub use corrgeom::{ClassLabel, Correlation, Relabeling, ZeroPattern};
pub use qstrategy::{NamedPoint, PureState, Strategy};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
