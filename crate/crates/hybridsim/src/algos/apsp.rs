//! All-pairs shortest paths over a member graph, tier by degree.
//!
//! One tiered broadcast makes every member's edge list known to everyone
//! of comparable or higher degree. Tiers are then settled from the top
//! down: a member solves the subgraph spanned by its own tier and below,
//! stitches in the already-settled distances through higher tiers, and
//! unicasts the finished row entries so the lower endpoints learn them
//! too. One unicast round per tier, `ceil(log2 m)` in total.

use rayon::prelude::*;

use crate::derive_seed;
use crate::engine::Sim;
use crate::graph::{add_w, NodeId, Weight, INF};
use crate::oracle::{HybridTiered, OracleError, TieredRounds};
use crate::primitives::{cc_sim_round, token_dissemination, CcMessage, Token};
use crate::skeleton::{dense_dijkstra_row, sample_marks, SkeletonGraph};

use super::{accepted_skeleton, AlgoError};

/// Outcome of a full simulated run: the accepted skeleton and the exact
/// member-to-member distance matrix, row-major m*m.
#[derive(Debug)]
pub struct ApspRun {
    pub skel: SkeletonGraph,
    pub dist: Vec<Weight>,
    pub retries: u32,
}

/// Exact all-pairs distances over the executor's member graph, row-major.
/// Members with no edges keep INF rows apart from the diagonal.
pub fn tiered_apsp<E: TieredRounds>(exec: &mut E) -> Result<Vec<Weight>, OracleError> {
    let m = exec.m();
    if m == 0 {
        return Ok(Vec::new());
    }
    if m == 1 {
        return Ok(vec![0]);
    }

    let degs: Vec<usize> = (0..m).map(|v| exec.degree(v)).collect();
    let delivery = exec.tiered_round(&degs)?;

    let tier_of = |v: usize| degs[v].ilog2();
    let log_m = (m - 1).ilog2() + 1;
    let mut dist = vec![INF; m * m];
    for v in 0..m {
        dist[v * m + v] = 0;
    }

    for i in (0..log_m).rev() {
        let tier_i: Vec<usize> = (0..m)
            .filter(|&v| degs[v] >= 1 && tier_of(v) == i)
            .collect();
        let mut msgs = Vec::new();

        if !tier_i.is_empty() {
            let low: Vec<usize> = (0..m)
                .filter(|&v| degs[v] >= 1 && tier_of(v) <= i)
                .collect();
            let high: Vec<usize> = (0..m)
                .filter(|&v| degs[v] >= 1 && tier_of(v) > i)
                .collect();
            for &v in &tier_i {
                for &w in &low {
                    // A sender of at most twice the receiver's degree is
                    // covered by the broadcast, and tier i tops out below
                    // twice the tier-i floor.
                    assert!(delivery.knows(v, w), "receiver {v} missed sender {w}");
                }
            }

            // The subgraph every tier-i member can reconstruct: all edges
            // incident to a member of its tier or below.
            let mut sub = vec![INF; m * m];
            for &w in &low {
                for (j, weight) in exec.edges_of(w) {
                    if weight < sub[w * m + j] {
                        sub[w * m + j] = weight;
                        sub[j * m + w] = weight;
                    }
                }
            }

            let sources: Vec<usize> = tier_i.iter().chain(high.iter()).copied().collect();
            let mut rows: Vec<Vec<Weight>> = Vec::new();
            sources
                .par_iter()
                .map(|&s| {
                    let mut row = vec![INF; m];
                    dense_dijkstra_row(&sub, m, s, &mut row);
                    row
                })
                .collect_into_vec(&mut rows);
            let mut pos = vec![usize::MAX; m];
            for (k, &s) in sources.iter().enumerate() {
                pos[s] = k;
            }

            // d(v, u) for u at or below v's tier: either stay inside the
            // subgraph or detour through a settled higher-tier member.
            for &v in &tier_i {
                for &u in &low {
                    if u == v {
                        continue;
                    }
                    let mut best = rows[pos[v]][u];
                    for &w in &high {
                        best = best.min(add_w(dist[v * m + w], rows[pos[w]][u]));
                    }
                    dist[v * m + u] = best;
                    msgs.push(CcMessage {
                        from: v,
                        to: u,
                        body: vec![best],
                    });
                }
            }
        }

        // Every tier spends its unicast round even when nothing is sent,
        // which keeps the round count data-independent.
        let inboxes = exec.cc_round(msgs)?;
        for (u, inbox) in inboxes.into_iter().enumerate() {
            for (v, body) in inbox {
                debug_assert!(
                    dist[u * m + v] == INF || dist[u * m + v] == body[0],
                    "pair ({u}, {v}) settled twice with different values"
                );
                dist[u * m + v] = body[0];
            }
        }
    }

    Ok(dist)
}

/// Tiered APSP over an already-built skeleton: member list dissemination,
/// one degree broadcast so the tier assignment is common knowledge, then
/// the tier loop on the simulated executor.
pub(crate) fn apsp_over_skeleton(
    sim: &mut Sim,
    skel: &SkeletonGraph,
) -> Result<Vec<Weight>, AlgoError> {
    let n = sim.graph().n();
    let m = skel.m();

    let start: Vec<Vec<Token>> = (0..n)
        .map(|v| match skel.member_index(v) {
            Some(_) => vec![Token { owner: v, body: 0 }],
            None => Vec::new(),
        })
        .collect();
    token_dissemination(sim, &start, m, 1)?;

    if m > 1 {
        let mut msgs = Vec::with_capacity(m * (m - 1));
        for v in 0..m {
            let deg = skel.degree(v) as u64;
            for u in 0..m {
                if u != v {
                    msgs.push(CcMessage {
                        from: v,
                        to: u,
                        body: vec![deg],
                    });
                }
            }
        }
        cc_sim_round(sim, &skel.members, msgs)?;
    }

    let mut exec = HybridTiered::new(sim, skel);
    Ok(tiered_apsp(&mut exec)?)
}

/// Samples a skeleton at rate n^(x-1) and solves member APSP over it.
pub fn skeleton_apsp(
    sim: &mut Sim,
    x: f64,
    force: &[NodeId],
    max_retries: u32,
) -> Result<ApspRun, AlgoError> {
    let n = sim.graph().n();
    let seed = sim.config().seed;
    let (skel, retries) = accepted_skeleton(
        sim,
        x,
        max_retries,
        |attempt| sample_marks(n, x, derive_seed(seed, "apsp-marks", u64::from(attempt)), force),
        |_| true,
    )?;
    let dist = apsp_over_skeleton(sim, &skel)?;
    Ok(ApspRun {
        skel,
        dist,
        retries,
    })
}
