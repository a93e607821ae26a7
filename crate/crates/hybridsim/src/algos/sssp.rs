//! Exact single-source shortest paths.
//!
//! The oracle flow ships every member's incident edge list to the leader,
//! solves the instance there and hands one distance back per member, two
//! oracle rounds in total. The full algorithm samples a skeleton around
//! the source, disseminates the member list, runs the oracle flow over the
//! simulated skeleton and extends the member distances to every node with
//! a single radius-h flood.

use crate::derive_seed;
use crate::engine::Sim;
use crate::graph::{NodeId, Weight, INF};
use crate::oracle::{HybridOracle, OracleError, OracleMsg, OracleRounds};
use crate::primitives::{token_dissemination, Token};
use crate::skeleton::{dense_dijkstra_row, extend_distances, sample_marks};

use super::{accepted_skeleton, AlgoError};

/// Outcome of a full simulated run: exact distances from the source plus
/// how the skeleton sampling went.
#[derive(Debug)]
pub struct SsspRun {
    pub dist: Vec<Weight>,
    pub skeleton_m: usize,
    pub retries: u32,
}

/// SSSP over the executor's member graph from member index `s`. Every
/// member sends its incident edges to the oracle, which answers with one
/// distance each; members without edges get no reply and fall back to the
/// trivial value.
pub fn oracle_sssp<E: OracleRounds>(exec: &mut E, s: usize) -> Result<Vec<Weight>, OracleError> {
    let m = exec.m();
    if m == 0 {
        return Ok(Vec::new());
    }
    assert!(s < m);
    if m == 1 {
        return Ok(vec![0]);
    }

    let outboxes: Vec<Vec<OracleMsg>> = (0..m)
        .map(|i| {
            exec.edges_of(i)
                .into_iter()
                .map(|(j, w)| vec![j as u64, w])
                .collect()
        })
        .collect();
    let collected = exec.to_oracle(outboxes)?;

    // Each edge arrives from both endpoints; keep the smaller weight in
    // case the host ever disagrees with itself.
    let mut w_mat = vec![INF; m * m];
    for (i, items) in collected.iter().enumerate() {
        for item in items {
            let j = item[0] as usize;
            let w = item[1];
            if w < w_mat[i * m + j] {
                w_mat[i * m + j] = w;
                w_mat[j * m + i] = w;
            }
        }
    }
    let mut dist = vec![INF; m];
    dense_dijkstra_row(&w_mat, m, s, &mut dist);

    let replies: Vec<Vec<OracleMsg>> = dist
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if exec.degree(i) == 0 {
                Vec::new()
            } else {
                vec![vec![d]]
            }
        })
        .collect();
    let delivered = exec.from_oracle(replies)?;

    Ok(delivered
        .into_iter()
        .enumerate()
        .map(|(i, msgs)| match msgs.first() {
            Some(b) => b[0],
            None if i == s => 0,
            None => INF,
        })
        .collect())
}

/// Exact distances from `s` to every node: skeleton with the source
/// force-included, oracle SSSP over the members, one extension flood.
pub fn hybrid_exact_sssp(
    sim: &mut Sim,
    s: NodeId,
    max_retries: u32,
) -> Result<SsspRun, AlgoError> {
    let n = sim.graph().n();
    assert!(s < n);
    let x = 2.0 / 3.0;
    let seed = sim.config().seed;

    let (skel, retries) = accepted_skeleton(
        sim,
        x,
        max_retries,
        |attempt| sample_marks(n, x, derive_seed(seed, "sssp-marks", u64::from(attempt)), &[s]),
        |_| true,
    )?;

    // The member list becomes common knowledge so every member can run the
    // same leader and relay schedules.
    let start: Vec<Vec<Token>> = (0..n)
        .map(|v| match skel.member_index(v) {
            Some(_) => vec![Token { owner: v, body: 0 }],
            None => Vec::new(),
        })
        .collect();
    token_dissemination(sim, &start, skel.m(), 1)?;

    let s_idx = skel.member_index(s).expect("source is force-included");
    let member_dist = oracle_sssp(&mut HybridOracle::new(sim, &skel), s_idx)?;

    let rows = extend_distances(sim, &skel, &[s], |i, _| member_dist[i]);
    Ok(SsspRun {
        dist: rows.row(0).to_vec(),
        skeleton_m: skel.m(),
        retries,
    })
}
