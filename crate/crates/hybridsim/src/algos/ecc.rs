//! Eccentricity estimates for every node at once.
//!
//! Both variants start from the densified source run, which leaves every
//! node its exact distance to each skeleton member. The weighted variant
//! adds an h-hop converge-cast in which every node combines its ball's
//! mark distances into the exact distance to everything in the ball, and
//! members then share their ball eccentricities with everyone; taking the
//! best of the ball value, the mark distances and the relayed mark
//! eccentricities lands within a factor of three. The unweighted variant
//! explores hop balls of radius (1 + 1/eps) * h instead and is within
//! 1 + eps.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;

use crate::engine::Sim;
use crate::graph::{add_w, NodeId, Weight, WeightedGraph, INF};
use crate::primitives::{token_dissemination, Token};

use super::{rssp::rssp, AlgoError};

#[derive(Debug)]
pub struct EccRun {
    /// Estimated eccentricity per node, never above the truth.
    pub ecc: Vec<Weight>,
    pub retries: u32,
}

/// Reusable per-thread buffers for the ball scans. A scan resets only the
/// entries it touched, so its cost follows the ball, not the graph.
struct ScanBufs {
    hop: Vec<u32>,
    dist: Vec<Weight>,
    ball: Vec<NodeId>,
    touched: Vec<NodeId>,
    heap: BinaryHeap<Reverse<(Weight, NodeId)>>,
    queue: VecDeque<NodeId>,
}

impl ScanBufs {
    fn new(n: usize) -> Self {
        Self {
            hop: vec![u32::MAX; n],
            dist: vec![INF; n],
            ball: Vec::new(),
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            queue: VecDeque::new(),
        }
    }

    /// Hop-limited BFS from v. Leaves hop counts for the ball in `hop`
    /// (discovery order in `ball`) and returns the forwarding degree sum
    /// over nodes strictly inside the radius.
    fn bfs(&mut self, g: &WeightedGraph, v: NodeId, h: u32) -> u64 {
        self.ball.clear();
        self.queue.clear();
        self.hop[v as usize] = 0;
        self.ball.push(v);
        self.queue.push_back(v);
        let mut degree_sum = 0u64;
        while let Some(u) = self.queue.pop_front() {
            let hu = self.hop[u as usize];
            if hu >= h {
                continue;
            }
            degree_sum += g.degree(u) as u64;
            for &(w, _) in g.neighbors(u) {
                if self.hop[w as usize] == u32::MAX {
                    self.hop[w as usize] = hu + 1;
                    self.ball.push(w);
                    self.queue.push_back(w);
                }
            }
        }
        degree_sum
    }

    /// Largest true distance from v to the current ball: Dijkstra that
    /// stops once every ball node settled. Pushes carry strictly
    /// decreasing keys per node, so each node settles exactly once and a
    /// settled pop is the exact distance.
    fn far_in_ball(&mut self, g: &WeightedGraph, v: NodeId) -> Weight {
        self.heap.clear();
        self.touched.clear();
        self.dist[v as usize] = 0;
        self.touched.push(v);
        self.heap.push(Reverse((0, v)));
        let mut left = self.ball.len();
        let mut far = 0;
        while let Some(Reverse((d, u))) = self.heap.pop() {
            if d > self.dist[u as usize] {
                continue;
            }
            if self.hop[u as usize] != u32::MAX {
                far = far.max(d);
                left -= 1;
                if left == 0 {
                    break;
                }
            }
            for &(w, wt) in g.neighbors(u) {
                let nd = add_w(d, wt);
                if nd < self.dist[w as usize] {
                    self.dist[w as usize] = nd;
                    self.touched.push(w);
                    self.heap.push(Reverse((nd, w)));
                }
            }
        }
        far
    }

    fn clear_marks(&mut self) {
        for &u in &self.ball {
            self.hop[u as usize] = u32::MAX;
        }
        for &u in &self.touched {
            self.dist[u as usize] = INF;
        }
        self.touched.clear();
    }
}

/// Ball eccentricity and converge-cast word load per node: the largest
/// exact distance into the h-hop ball, and the ball's share of forwarding
/// every node's visible-mark list for h rounds.
fn ball_scan(g: &WeightedGraph, vis: &[u64], h: u32) -> (Vec<Weight>, u64) {
    let n = g.n() as usize;
    let per_node: Vec<(Weight, u64)> = (0..n as u32)
        .into_par_iter()
        .map_init(
            || ScanBufs::new(n),
            |bufs, v| {
                let degree_sum = bufs.bfs(g, v, h);
                let far = bufs.far_in_ball(g, v);
                bufs.clear_marks();
                (far, vis[v as usize] * degree_sum)
            },
        )
        .collect();
    let words = per_node.iter().map(|&(_, w)| w).sum();
    (per_node.into_iter().map(|(far, _)| far).collect(), words)
}

/// Weighted eccentricities within a factor of three: ecc / 3 <= estimate
/// <= ecc on every node of a connected graph.
pub fn ecc_weighted(sim: &mut Sim, max_retries: u32) -> Result<EccRun, AlgoError> {
    let run = rssp(sim, 2.0 / 3.0, max_retries)?;
    let skel = &run.skel;
    let n = sim.graph().n();
    let m = skel.m();

    // Every node in v's ball contributes its visible-mark distances, and
    // together with the member rows those pin the exact distance to each
    // ball node. The scan below is the centralized stand-in; the words
    // follow the forwarding volume of the h-round broadcast.
    let vis: Vec<u64> = (0..n)
        .map(|v| skel.visible_from(v).count() as u64)
        .collect();
    let (ball_ecc, words) = ball_scan(sim.graph(), &vis, skel.h);
    sim.set_phase("local-sim");
    sim.advance(u64::from(skel.h), words);

    // Members hand their ball eccentricities to everyone.
    let mut start: Vec<Vec<Token>> = vec![Vec::new(); n as usize];
    for &mv in &skel.members {
        start[mv as usize] = vec![Token {
            owner: mv,
            body: ball_ecc[mv as usize],
        }];
    }
    token_dissemination(sim, &start, m, 1)?;

    let ecc = (0..n as usize)
        .map(|v| {
            let mut best = ball_ecc[v];
            for i in 0..m {
                let d = run.rows.get(i, v as NodeId);
                let mark_ecc = ball_ecc[skel.members[i] as usize];
                best = best.max(d).max(mark_ecc.saturating_sub(d));
            }
            best
        })
        .collect();
    Ok(EccRun {
        ecc,
        retries: run.retries,
    })
}

/// Unweighted eccentricities within 1 + 1/inv_eps of the truth, from
/// below. Expects unit edge weights.
pub fn ecc_unweighted(
    sim: &mut Sim,
    inv_eps: u32,
    max_retries: u32,
) -> Result<EccRun, AlgoError> {
    assert!(inv_eps >= 1);
    let run = rssp(sim, 2.0 / 3.0, max_retries)?;
    let skel = &run.skel;
    let n = sim.graph().n();
    let m = skel.m();
    let radius = (1 + inv_eps) * skel.h;

    // BFS discovers the ball in hop order, so its last node is farthest.
    let g = sim.graph();
    let per_node: Vec<(u32, u64)> = (0..n)
        .into_par_iter()
        .map_init(
            || ScanBufs::new(n as usize),
            |bufs, v| {
                let degree_sum = bufs.bfs(g, v, radius);
                let far = bufs.ball.last().map_or(0, |&u| bufs.hop[u as usize]);
                bufs.clear_marks();
                (far, degree_sum)
            },
        )
        .collect();
    let words: u64 = per_node.iter().map(|&(_, w)| w).sum();
    sim.set_phase("local-sim");
    sim.advance(u64::from(radius), words);

    let ecc = (0..n as usize)
        .map(|v| {
            let mut best = u64::from(per_node[v].0);
            for i in 0..m {
                best = best.max(run.rows.get(i, v as NodeId));
            }
            best
        })
        .collect();
    Ok(EccRun {
        ecc,
        retries: run.retries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;
    use crate::graph::brute_eccentricities;

    #[test]
    fn short_weighted_graphs_come_out_exact() {
        // Hop balls cover the whole graph here, so the ball value is the
        // eccentricity itself and nothing can drag it down.
        let g = gen::erdos_renyi(150, 0.07, 1, 9, 33).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(33));
        let run = ecc_weighted(&mut sim, 3).unwrap();
        assert_eq!(run.ecc, brute_eccentricities(&g).unwrap());
        assert_eq!(sim.ledger().total_drops(), 0);
    }

    #[test]
    fn long_weighted_graphs_stay_within_a_third() {
        let g = gen::path(400, 1, 9, 11).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(11));
        let run = ecc_weighted(&mut sim, 3).unwrap();
        let want = brute_eccentricities(&g).unwrap();
        for v in 0..400 {
            assert!(run.ecc[v] <= want[v], "node {v}");
            assert!(3 * run.ecc[v] >= want[v], "node {v}: {} vs {}", run.ecc[v], want[v]);
        }
    }

    #[test]
    fn unweighted_estimates_meet_the_eps_bound() {
        let g = gen::path(300, 1, 1, 7).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(7));
        let run = ecc_unweighted(&mut sim, 2, 3).unwrap();
        let want = brute_eccentricities(&g).unwrap();
        for v in 0..300 {
            assert!(run.ecc[v] <= want[v]);
            assert!(3 * run.ecc[v] >= 2 * want[v], "node {v}");
        }
        assert_eq!(sim.ledger().total_drops(), 0);
    }
}
