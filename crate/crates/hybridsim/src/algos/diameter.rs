//! Diameter estimates, from below.
//!
//! The weighted variant takes the farthest distance from one fixed node,
//! which is at least half the diameter by the triangle inequality. The
//! unweighted variant maximizes the per-node eccentricity estimates and
//! inherits their 1 + eps guarantee.

use crate::engine::Sim;
use crate::graph::Weight;
use crate::primitives::{aggregate_and_broadcast, AggOp};

use super::{ecc::ecc_unweighted, sssp::hybrid_exact_sssp, AlgoError};

#[derive(Debug)]
pub struct DiameterRun {
    pub value: Weight,
    pub retries: u32,
}

/// Weighted diameter within a factor of two: D / 2 <= value <= D.
pub fn diameter_weighted(sim: &mut Sim, max_retries: u32) -> Result<DiameterRun, AlgoError> {
    let run = hybrid_exact_sssp(sim, 0, max_retries)?;
    let value = aggregate_and_broadcast(sim, &run.dist, AggOp::Max)?;
    Ok(DiameterRun {
        value,
        retries: run.retries,
    })
}

/// Unweighted diameter within 1 + 1/inv_eps of the truth, from below.
/// Expects unit edge weights.
pub fn diameter_unweighted(
    sim: &mut Sim,
    inv_eps: u32,
    max_retries: u32,
) -> Result<DiameterRun, AlgoError> {
    let run = ecc_unweighted(sim, inv_eps, max_retries)?;
    let value = aggregate_and_broadcast(sim, &run.ecc, AggOp::Max)?;
    Ok(DiameterRun {
        value,
        retries: run.retries,
    })
}
