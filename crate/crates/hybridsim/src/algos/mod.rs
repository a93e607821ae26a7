//! The distance algorithms, assembled from skeletons, oracle rounds and
//! token dissemination. Each entry point drives a `Sim` so every run
//! leaves a full round and message ledger behind.

pub mod apsp;
pub mod diameter;
pub mod ecc;
pub mod mssp;
pub mod n13;
pub mod reassign;
pub mod rssp;
pub mod sssp;

use thiserror::Error;

use crate::engine::{EngineError, Sim};
use crate::graph::NodeId;
use crate::oracle::OracleError;
use crate::primitives::{CcSimError, TdError};
use crate::skeleton::{build_skeleton, h_for, structure_ok, SkeletonGraph};

pub use apsp::{skeleton_apsp, tiered_apsp, ApspRun};
pub use diameter::{diameter_unweighted, diameter_weighted, DiameterRun};
pub use ecc::{ecc_unweighted, ecc_weighted, EccRun};
pub use mssp::{approx_mssp, MsspRun};
pub use n13::{exact_n13_sssp, N13Run};
pub use reassign::{reassign, Assignment};
pub use rssp::{densify_marks, rssp, RsspRun};
pub use sssp::{hybrid_exact_sssp, oracle_sssp, SsspRun};

#[derive(Debug, Error)]
pub enum AlgoError {
    /// No sampled skeleton passed the caller's acceptance check within the
    /// retry budget.
    #[error("no acceptable skeleton after {attempts} attempts")]
    SkeletonRejected { attempts: u32 },
    /// Some helper target kept zero adopters through every assignment
    /// attempt.
    #[error("helper assignment left targets uncovered after {attempts} attempts")]
    AssignmentDeficit { attempts: u32 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Td(#[from] TdError),
    #[error(transparent)]
    CcSim(#[from] CcSimError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Samples and builds skeletons until one is structurally sound and passes
/// `accept`, or the retry budget runs out. Every failed build still spends
/// its flood rounds; the returned counter says how many retries it took.
pub(crate) fn accepted_skeleton(
    sim: &mut Sim,
    x: f64,
    max_retries: u32,
    mut sample: impl FnMut(u32) -> Vec<NodeId>,
    accept: impl Fn(&SkeletonGraph) -> bool,
) -> Result<(SkeletonGraph, u32), AlgoError> {
    let n = sim.graph().n();
    let h = h_for(n, x, sim.config().h_const);
    for attempt in 0..=max_retries {
        let skel = build_skeleton(sim, x, h, sample(attempt));
        if structure_ok(n, &skel) && accept(&skel) {
            return Ok((skel, attempt));
        }
    }
    Err(AlgoError::SkeletonRejected {
        attempts: max_retries + 1,
    })
}
