//! Single-particle dynamics in a periodically tilted bipartite lattice with a
//! phase-shifted coupling modulation.
//!
//! * [`specfun`]: integer-order Bessel functions and their zeros.
//! * [`lattice`]: site geometry, gap arguments and the drive.
//! * [`effective`]: averaged bond rates, closed-form evolution and Rabi dimers.
//! * [`dynamics`]: adaptive integration of the full, gauge-transformed and averaged chains.
//! * [`conditions`]: phases that freeze, dimerise or cross the bond rates.
//! * [`transport`]: the phase-switched ratchet protocol.
//! * [`config`], [`export`], [`cli`]: configuration files, CSV/JSON output and commands.

pub mod cli;
pub mod conditions;
pub mod config;
pub mod dynamics;
pub mod effective;
pub mod export;
pub mod lattice;
pub mod ode;
pub mod roots;
pub mod specfun;
pub mod transport;

pub use num_complex::Complex64 as C64;

pub use conditions::{ConditionKind, ConditionSolution};
pub use dynamics::{IntegratorConfig, Picture, Trajectory, WaveState};
pub use effective::{ChainRates, EffectiveRates, Modulation};
pub use lattice::{DriveParams, GapArguments, LatticeGeometry, Parity};
pub use specfun::BesselOrder;
