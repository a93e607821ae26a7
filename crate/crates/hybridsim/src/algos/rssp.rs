//! Shortest paths from a sampled source set.
//!
//! Sources are drawn at rate n^(x-1), then densified up to rate n^(-1/3)
//! so sparse source sets still ride a full-size skeleton. Member APSP
//! over the union plus one extension flood hands every node its exact
//! distance to each original source.

use crate::engine::Sim;
use crate::flood::DistMatrix;
use crate::graph::NodeId;
use crate::skeleton::{extend_distances, sample_marks, SkeletonGraph};
use crate::{derive_seed, splitmix64};

use super::{accepted_skeleton, apsp::apsp_over_skeleton, AlgoError};

/// Outcome of a run: the sampled sources, one exact distance row per
/// source over all nodes, and the densified skeleton they rode on.
#[derive(Debug)]
pub struct RsspRun {
    pub sources: Vec<NodeId>,
    pub rows: DistMatrix,
    pub skel: SkeletonGraph,
    pub retries: u32,
}

/// Tops `base` up to an i.i.d. rate n^(-1/3) set: assuming `base` was
/// sampled at rate n^(x-1), each node outside it joins with the
/// conditional probability that makes the union land on the target rate.
pub fn densify_marks(n: u32, x: f64, base: &[NodeId], seed: u64) -> Vec<NodeId> {
    let target = (n as f64).powf(-1.0 / 3.0);
    let have = (n as f64).powf(x - 1.0);
    let q = ((target - have) / (1.0 - have)).max(0.0);

    let mut in_base = vec![false; n as usize];
    for &v in base {
        in_base[v as usize] = true;
    }
    let mut marks: Vec<NodeId> = base.to_vec();
    if q > 0.0 {
        for v in 0..n {
            if in_base[v as usize] {
                continue;
            }
            let coin = splitmix64(derive_seed(seed, "densify", u64::from(v)));
            if (coin as f64 / u64::MAX as f64) < q {
                marks.push(v);
            }
        }
    }
    marks.sort_unstable();
    marks
}

/// Exact distances from every node of a rate n^(x-1) sample, x at most
/// 2/3, to every other node. The returned rows are indexed like
/// `sources`.
pub fn rssp(sim: &mut Sim, x: f64, max_retries: u32) -> Result<RsspRun, AlgoError> {
    assert!(x > 0.0 && x <= 2.0 / 3.0 + 1e-9);
    let n = sim.graph().n();
    let seed = sim.config().seed;

    let sample_union = |attempt: u32| {
        let base = sample_marks(n, x, derive_seed(seed, "rssp-marks", u64::from(attempt)), &[]);
        densify_marks(
            n,
            x,
            &base,
            derive_seed(seed, "rssp-densify", u64::from(attempt)),
        )
    };
    let (skel, retries) = accepted_skeleton(sim, 2.0 / 3.0, max_retries, sample_union, |_| true)?;
    // The accepted attempt's base set is reproducible from its counter.
    let sources = sample_marks(n, x, derive_seed(seed, "rssp-marks", u64::from(retries)), &[]);

    let apsp = apsp_over_skeleton(sim, &skel)?;

    let m = skel.m();
    let src_idx: Vec<usize> = sources
        .iter()
        .map(|&v| skel.member_index(v).expect("base sets densify into themselves"))
        .collect();
    let rows = extend_distances(sim, &skel, &sources, |j, q| apsp[src_idx[q] * m + j]);

    Ok(RsspRun {
        sources,
        rows,
        skel,
        retries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;
    use crate::graph::dijkstra;

    #[test]
    fn rows_are_exact_for_every_sampled_source() {
        let g = gen::erdos_renyi(120, 0.08, 1, 9, 19).unwrap();
        for x in [1.0 / 3.0, 0.5] {
            let mut sim = Sim::new(&g, HybridConfig::new(19));
            let run = rssp(&mut sim, x, 3).unwrap();
            assert!(!run.sources.is_empty(), "x = {x} sampled nothing");
            for (q, &s) in run.sources.iter().enumerate() {
                assert_eq!(run.rows.row(q), dijkstra(&g, s).as_slice(), "x = {x}, s = {s}");
            }
            assert_eq!(sim.ledger().total_drops(), 0);
        }
    }

    #[test]
    fn base_marks_survive_densification() {
        let base = sample_marks(729, 1.0 / 3.0, 55, &[]);
        let union = densify_marks(729, 1.0 / 3.0, &base, 77);
        for v in &base {
            assert!(union.contains(v));
        }
        assert!(union.len() > base.len());

        // At x = 2/3 the base already sits on the target rate and no
        // top-up coins are flipped.
        let full = sample_marks(729, 2.0 / 3.0, 55, &[]);
        assert_eq!(densify_marks(729, 2.0 / 3.0, &full, 77), full);
    }

    #[test]
    fn densified_union_tracks_the_target_rate() {
        let n = 729u32;
        let want = (n as f64).powf(2.0 / 3.0);
        let per_sample_var = want * (1.0 - want / n as f64);
        let trials = 100;
        let total: usize = (0..trials)
            .map(|t| {
                let base = sample_marks(n, 1.0 / 3.0, 1000 + t, &[]);
                densify_marks(n, 1.0 / 3.0, &base, 2000 + t).len()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        let sigma = (per_sample_var / trials as f64).sqrt();
        assert!(
            (mean - want).abs() <= 3.0 * sigma,
            "mean {mean} vs target {want} (sigma {sigma})"
        );
    }
}
