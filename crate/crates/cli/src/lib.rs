//! Command implementations behind the `roadgame` binary: instance loading,
//! full analysis reports, fixture emission, parameter sweeps, and the
//! built-in verification suite.

pub mod analysis;
pub mod input;
pub mod sweep;
pub mod verify;
