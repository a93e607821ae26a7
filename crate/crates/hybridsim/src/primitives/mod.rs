//! Communication primitives built on the engine: tree aggregation over the
//! global channel, token dissemination, and the two message-passing rounds
//! (skeleton-neighbor exchange and member-to-member unicast) that the
//! distance algorithms are assembled from.

pub mod aggregate;
pub mod cc_sim;
pub mod local_sim;
pub mod token;

pub use aggregate::{aggregate_and_broadcast, AggOp};
pub use cc_sim::{cc_sim_round, CcMessage, CcSimError};
pub use local_sim::{local_sim_round, local_sim_round_words};
pub use token::{token_dissemination, TdError, TdOutcome, Token};
