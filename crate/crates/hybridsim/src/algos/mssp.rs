//! Approximate multi-source shortest paths.
//!
//! Each source adopts its nearest visible skeleton member as its
//! representative. Exact distances to the representatives come from the
//! member APSP plus one extension flood, and a direct exploration flood
//! of radius eta*h serves the short range. The estimate for (u, s) is the
//! better of the direct distance and the detour over s's representative:
//! a 3-approximation for eta = 1 on weighted graphs, and within 1 + 2/eta
//! on unweighted ones, since there the detour only wins when d(u, s) is
//! at least eta*h.

use crate::derive_seed;
use crate::engine::Sim;
use crate::flood::{flood_sources, DistMatrix};
use crate::graph::{add_w, NodeId};
use crate::primitives::{token_dissemination, Token};
use crate::skeleton::{extend_distances, sample_marks};

use super::{accepted_skeleton, apsp::apsp_over_skeleton, AlgoError};

const DIST_BITS: u32 = 48;

#[derive(Debug)]
pub struct MsspRun {
    /// One estimate row per source over all nodes, in input order.
    pub rows: DistMatrix,
    pub retries: u32,
}

/// Distance estimates from every source to every node, never below the
/// truth. `eta` stretches the direct exploration radius; sources must be
/// strictly ascending.
pub fn approx_mssp(
    sim: &mut Sim,
    sources: &[NodeId],
    eta: u32,
    max_retries: u32,
) -> Result<MsspRun, AlgoError> {
    let n = sim.graph().n();
    assert!(eta >= 1);
    assert!(!sources.is_empty());
    assert!(sources.windows(2).all(|w| w[0] < w[1]), "sources must ascend");
    let x = 2.0 / 3.0;
    let seed = sim.config().seed;

    // Skeletons where some source sees no member at all are resampled:
    // every source needs a representative.
    let (skel, retries) = accepted_skeleton(
        sim,
        x,
        max_retries,
        |attempt| sample_marks(n, x, derive_seed(seed, "mssp-marks", u64::from(attempt)), &[]),
        |skel| {
            sources
                .iter()
                .all(|&s| skel.visible_from(s).next().is_some())
        },
    )?;
    let m = skel.m();
    let apsp = apsp_over_skeleton(sim, &skel)?;

    let reps: Vec<(usize, u64)> = sources
        .iter()
        .map(|&s| {
            skel.visible_from(s)
                .min_by_key(|&(i, d)| (d, i))
                .expect("acceptance guaranteed a visible member")
        })
        .collect();

    // Every node learns each source's representative and offset.
    let mut start: Vec<Vec<Token>> = vec![Vec::new(); n as usize];
    for (q, &s) in sources.iter().enumerate() {
        let (i, d) = reps[q];
        assert!(d < 1 << DIST_BITS, "weights overflow the token packing");
        start[s as usize] = vec![Token {
            owner: s,
            body: (i as u64) << DIST_BITS | d,
        }];
    }
    token_dissemination(sim, &start, sources.len(), 1)?;

    let mut rep_nodes: Vec<NodeId> = reps.iter().map(|&(i, _)| skel.members[i]).collect();
    rep_nodes.sort_unstable();
    rep_nodes.dedup();
    let e_rows = extend_distances(sim, &skel, &rep_nodes, |j, q| {
        let i = skel
            .member_index(rep_nodes[q])
            .expect("representatives are members");
        apsp[i * m + j]
    });

    sim.set_phase("local-sim");
    let radius = eta * skel.h;
    let (mut rows, words) = flood_sources(sim.graph(), radius, sources);
    sim.advance(u64::from(radius), words);

    for (q, &(_, rep_d)) in reps.iter().enumerate() {
        let e_row = rep_nodes
            .binary_search(&skel.members[reps[q].0])
            .expect("kept while deduping");
        for v in 0..n {
            let via = add_w(e_rows.get(e_row, v), rep_d);
            if via < rows.get(q, v) {
                rows.set(q, v, via);
            }
        }
    }

    Ok(MsspRun { rows, retries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;
    use crate::graph::dijkstra;

    #[test]
    fn weighted_estimates_stay_within_three_times_the_truth() {
        let g = gen::path(300, 1, 9, 47).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(47));
        let sources = [0, 120, 260];
        let run = approx_mssp(&mut sim, &sources, 1, 3).unwrap();
        for (q, &s) in sources.iter().enumerate() {
            let want = dijkstra(&g, s);
            for v in 0..300u32 {
                let got = run.rows.get(q, v);
                let truth = want[v as usize];
                assert!(got >= truth, "s = {s}, v = {v}: {got} < {truth}");
                assert!(got <= 3 * truth, "s = {s}, v = {v}: {got} > 3 * {truth}");
            }
        }
        assert_eq!(sim.ledger().total_drops(), 0);
    }

    #[test]
    fn unweighted_estimates_meet_the_stretch_bound() {
        // eta = 4 corresponds to a 1.5-approximation on hop distances.
        let g = gen::path(300, 1, 1, 7).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(7));
        let sources = [5, 299];
        let run = approx_mssp(&mut sim, &sources, 4, 3).unwrap();
        for (q, &s) in sources.iter().enumerate() {
            let want = dijkstra(&g, s);
            for v in 0..300u32 {
                let got = run.rows.get(q, v);
                let truth = want[v as usize];
                assert!(got >= truth);
                assert!(2 * got <= 3 * truth, "s = {s}, v = {v}: {got} vs {truth}");
            }
        }
    }

    #[test]
    fn short_graphs_come_out_exact() {
        // The exploration radius dwarfs the diameter, so the direct term
        // already carries every pair.
        let g = gen::erdos_renyi(120, 0.08, 1, 9, 3).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(3));
        let sources = [10, 90];
        let run = approx_mssp(&mut sim, &sources, 1, 3).unwrap();
        for (q, &s) in sources.iter().enumerate() {
            assert_eq!(run.rows.row(q), dijkstra(&g, s).as_slice());
        }
    }
}
