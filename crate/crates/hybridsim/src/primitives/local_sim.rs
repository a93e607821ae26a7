//! One broadcast round over the skeleton graph, simulated on the local
//! channel of the underlying graph.
//!
//! A skeleton edge stands for a path of at most h hops, so one skeleton
//! round costs h real rounds. A member's payload spreads through its h-hop
//! ball; the word cost counts every copy crossing every local edge, which
//! is the payload length times the summed degree of the ball of radius
//! h - 1 around the member.

use rayon::prelude::*;

use crate::engine::Sim;
use crate::graph::NodeId;
use crate::skeleton::SkeletonGraph;

/// Broadcasts `payloads[i]` from member i to every skeleton neighbor.
/// Returns one inbox per member holding (sender index, payload) sorted by
/// sender; empty payloads are not sent. Charges exactly h rounds under
/// `local-sim`, counting one word per payload element.
pub fn local_sim_round(
    sim: &mut Sim,
    skel: &SkeletonGraph,
    payloads: &[Vec<u64>],
) -> Vec<Vec<(usize, Vec<u64>)>> {
    let words: Vec<u64> = payloads.iter().map(|p| p.len() as u64).collect();
    local_sim_round_words(sim, skel, payloads, &words)
}

/// As local_sim_round, but `words[i]` gives the number of O(log n)-bit units
/// member i's payload stands for, independent of its host encoding.
pub fn local_sim_round_words(
    sim: &mut Sim,
    skel: &SkeletonGraph,
    payloads: &[Vec<u64>],
    words: &[u64],
) -> Vec<Vec<(usize, Vec<u64>)>> {
    let m = skel.m();
    assert_eq!(payloads.len(), m);
    assert_eq!(words.len(), m);
    let g = sim.graph();
    sim.set_phase("local-sim");

    let words: u64 = payloads
        .par_iter()
        .zip(words)
        .enumerate()
        .map(|(i, (payload, &w))| {
            if payload.is_empty() {
                return 0;
            }
            w * ball_degree_sum(g, skel.members[i], skel.h.saturating_sub(1))
        })
        .sum();
    sim.advance(skel.h as u64, words);

    let mut inboxes: Vec<Vec<(usize, Vec<u64>)>> = vec![Vec::new(); m];
    for i in 0..m {
        for (j, _) in skel.neighbors(i) {
            if !payloads[j].is_empty() {
                inboxes[i].push((j, payloads[j].clone()));
            }
        }
        inboxes[i].sort_unstable_by_key(|&(j, _)| j);
    }
    inboxes
}

/// Sum of degrees over the ball of hop radius `radius` around `src`.
pub(crate) fn ball_degree_sum(g: &crate::graph::WeightedGraph, src: NodeId, radius: u32) -> u64 {
    let mut dist = vec![u32::MAX; g.n() as usize];
    let mut queue = std::collections::VecDeque::new();
    dist[src as usize] = 0;
    queue.push_back(src);
    let mut total = g.degree(src) as u64;
    while let Some(u) = queue.pop_front() {
        if dist[u as usize] == radius {
            continue;
        }
        for &(v, _) in g.neighbors(u) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = dist[u as usize] + 1;
                total += g.degree(v) as u64;
                queue.push_back(v);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;
    use crate::skeleton::build_skeleton;

    #[test]
    fn payloads_reach_exactly_the_skeleton_neighbors() {
        let g = gen::path(10, 1, 1, 0).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(7));
        let skel = build_skeleton(&mut sim, 0.5, 5, vec![0, 5, 9]);
        assert_eq!(skel.members, vec![0, 5, 9]);

        let payloads = vec![vec![1, 2], vec![3], vec![]];
        let before = *sim.ledger().phase("local-sim").unwrap();
        let inboxes = local_sim_round(&mut sim, &skel, &payloads);

        // 0 and 9 are 9 hops apart, beyond h, so they never hear each other.
        assert_eq!(inboxes[0], vec![(1, vec![3])]);
        assert_eq!(inboxes[1], vec![(0, vec![1, 2])]);
        assert_eq!(inboxes[2], vec![(1, vec![3])]);

        let stats = sim.ledger().phase("local-sim").unwrap();
        assert_eq!(stats.rounds - before.rounds, 5);
        // Ball of radius 4 around 0 has degrees 1+2+2+2+2 = 9, around 5 the
        // nine nodes 1..=9 sum to 17; payload lengths 2 and 1 give 35.
        assert_eq!(stats.local_msgs - before.local_msgs, 9 * 2 + 17);
    }

    #[test]
    fn empty_payloads_cost_nothing_but_rounds() {
        let g = gen::erdos_renyi(40, 0.15, 1, 4, 5).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(7));
        let skel = build_skeleton(&mut sim, 0.5, 3, vec![0, 11, 22]);
        let before = *sim.ledger().phase("local-sim").unwrap();
        let inboxes = local_sim_round(&mut sim, &skel, &vec![Vec::new(); skel.m()]);
        let after = sim.ledger().phase("local-sim").unwrap();
        assert!(inboxes.iter().all(|b| b.is_empty()));
        assert_eq!(after.rounds - before.rounds, 3);
        assert_eq!(after.local_msgs, before.local_msgs);
    }
}
