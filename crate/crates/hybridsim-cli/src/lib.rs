//! Library half of the `hybridsim` binary. The scenario parser, the
//! per-seed runner and the scaling sweeps live here so integration tests
//! can drive them without shelling out.

pub mod runner;
pub mod scenario;
pub mod sweep;
