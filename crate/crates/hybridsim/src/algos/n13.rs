//! Exact shortest paths from about n^(1/3) sources.
//!
//! Every source first learns its distance to each skeleton member, then
//! the members learn their distances to each source, and one extension
//! flood finishes the job. How a source reaches the members depends on
//! how many it sees within h hops: a source with few visible marks
//! disseminates its mark distances as tokens and lets each member close
//! the gap over the member matrix, while a mark-rich source hands its
//! finished member row to a dedicated helper member that unicasts it.

use crate::engine::Sim;
use crate::flood::DistMatrix;
use crate::graph::{add_w, NodeId, INF};
use crate::primitives::{
    aggregate_and_broadcast, cc_sim_round, token_dissemination, AggOp, CcMessage, Token,
};

use super::{reassign::reassign, rssp::rssp, AlgoError};

/// Coin redraws granted to the helper assignment; each attempt covers any
/// fixed target with constant probability, so this is comfortable slack.
const ASSIGN_ATTEMPTS: u32 = 20;

const DIST_BITS: u32 = 48;

#[derive(Debug)]
pub struct N13Run {
    /// One exact distance row per source over all nodes, in input order.
    pub rows: DistMatrix,
    pub sparse: Vec<NodeId>,
    pub dense: Vec<NodeId>,
    pub retries: u32,
}

/// Exact distances from every source in `sources` (strictly ascending) to
/// every node. Meant for source counts around n^(1/3); the tiered member
/// APSP underneath dominates the round budget.
pub fn exact_n13_sssp(
    sim: &mut Sim,
    sources: &[NodeId],
    max_retries: u32,
) -> Result<N13Run, AlgoError> {
    let n = sim.graph().n();
    assert!(sources.windows(2).all(|w| w[0] < w[1]), "sources must ascend");
    assert!(sources.last().map_or(true, |&s| s < n));
    let k_src = sources.len();
    if k_src == 0 {
        return Ok(N13Run {
            rows: DistMatrix::new(Vec::new(), n as usize),
            sparse: Vec::new(),
            dense: Vec::new(),
            retries: 0,
        });
    }

    // The source list itself becomes common knowledge.
    let start: Vec<Vec<Token>> = (0..n)
        .map(|v| {
            if sources.binary_search(&v).is_ok() {
                vec![Token { owner: v, body: 0 }]
            } else {
                Vec::new()
            }
        })
        .collect();
    token_dissemination(sim, &start, k_src, 1)?;

    let run = rssp(sim, 2.0 / 3.0, max_retries)?;
    let skel = &run.skel;
    let m = skel.m();
    // At rate n^(-1/3) the densified source set is the member set itself,
    // so run.rows row j is member j's distance to everything.
    assert_eq!(run.sources, skel.members);

    let threshold = sim.config().theta * (n as f64).powf(1.0 / 3.0) * (n as f64).ln();
    let mut sparse = Vec::new();
    let mut dense = Vec::new();
    for &s in sources {
        if (skel.visible_from(s).count() as f64) < threshold {
            sparse.push(s);
        } else {
            dense.push(s);
        }
    }

    let mut est = vec![INF; m * k_src];

    // Sparse sources: every visible (mark, distance) pair travels to all
    // nodes as a token, and member j meets it over the member matrix.
    let mut tokens: Vec<Vec<Token>> = vec![Vec::new(); n as usize];
    let mut counts = vec![0u64; n as usize];
    for &s in &sparse {
        let toks: Vec<Token> = skel
            .visible_from(s)
            .map(|(i, d)| {
                assert!(d < 1 << DIST_BITS, "weights overflow the token packing");
                Token {
                    owner: s,
                    body: (i as u64) << DIST_BITS | d,
                }
            })
            .collect();
        counts[s as usize] = toks.len() as u64;
        tokens[s as usize] = toks;
    }
    let k_tok = aggregate_and_broadcast(sim, &counts, AggOp::Sum)?;
    let ell_tok = aggregate_and_broadcast(sim, &counts, AggOp::Max)?;
    if k_tok > 0 {
        token_dissemination(sim, &tokens, k_tok as usize, ell_tok as usize)?;
    }
    for &s in &sparse {
        let uq = sources.binary_search(&s).expect("sparse subset of sources");
        for j in 0..m {
            let mut best = skel.mark_dists.get(j, s);
            for (i, d) in skel.visible_from(s) {
                best = best.min(add_w(run.rows.get(i, skel.members[j]), d));
            }
            est[j * k_src + uq] = best;
        }
    }

    // Dense sources: each adopts a helper member within h hops, ships it
    // the member row it already owes to the densified run, and the helper
    // unicasts the row in a single member round.
    if !dense.is_empty() {
        let assign = reassign(sim, skel, &dense, ASSIGN_ATTEMPTS)?;
        let mut primary = vec![usize::MAX; dense.len()];
        for (i, t) in assign.member_to_target.iter().enumerate() {
            if let Some(q) = *t {
                if primary[q] == usize::MAX {
                    primary[q] = i;
                }
            }
        }

        // Primary election acks, then the rows themselves, each over at
        // most h hops.
        let h = u64::from(skel.h);
        sim.advance(h, dense.len() as u64 * h);
        sim.advance(h, (dense.len() * m) as u64 * h);

        let mut msgs = Vec::with_capacity(dense.len() * (m - 1));
        for (q, &s) in dense.iter().enumerate() {
            let uq = sources.binary_search(&s).expect("dense subset of sources");
            let i = primary[q];
            est[i * k_src + uq] = run.rows.get(i, s);
            for j in 0..m {
                if j != i {
                    msgs.push(CcMessage {
                        from: i,
                        to: j,
                        body: vec![uq as u64, run.rows.get(j, s)],
                    });
                }
            }
        }
        let inboxes = cc_sim_round(sim, &skel.members, msgs)?;
        for (j, inbox) in inboxes.into_iter().enumerate() {
            for (_, body) in inbox {
                est[j * k_src + body[0] as usize] = body[1];
            }
        }
    }

    let rows = crate::skeleton::extend_distances(sim, skel, sources, |j, uq| {
        est[j * k_src + uq]
    });
    Ok(N13Run {
        rows,
        sparse,
        dense,
        retries: run.retries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;
    use crate::graph::dijkstra;

    #[test]
    fn both_densities_come_out_exact_on_a_lollipop() {
        // Clique sources see a mark-rich ball, deep tail sources see a
        // thin one, so the run exercises both delivery paths at once.
        let g = gen::lollipop(512, 256, 1, 4, 9).unwrap();
        let mut cfg = HybridConfig::new(9);
        cfg.theta = 0.5;
        let mut sim = Sim::new(&g, cfg);

        let sources = [0, 100, 500, 511];
        let run = exact_n13_sssp(&mut sim, &sources, 3).unwrap();
        assert_eq!(run.dense, vec![0, 100], "sparse was {:?}", run.sparse);
        assert_eq!(run.sparse, vec![500, 511]);
        for (q, &s) in sources.iter().enumerate() {
            assert_eq!(run.rows.row(q), dijkstra(&g, s).as_slice(), "source {s}");
        }
        assert_eq!(sim.ledger().total_drops(), 0);
    }

    #[test]
    fn an_empty_source_list_is_a_no_op() {
        let g = gen::path(40, 1, 3, 2).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(2));
        let before = sim.current_round();
        let run = exact_n13_sssp(&mut sim, &[], 2).unwrap();
        assert_eq!(run.rows.rows(), 0);
        assert_eq!(sim.current_round(), before);
    }
}
