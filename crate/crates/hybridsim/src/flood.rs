//! Bulk hop-limited distance floods over local edges.
//!
//! One flood round: every node whose estimate for some row improved in the
//! previous round broadcasts the updated record to all its neighbors, one
//! word per neighbor per row. After `t` rounds a node's estimate for a row
//! equals the best initial value plus a path of at most `t` edges, which is
//! the hop-limited distance semantics the skeleton construction relies on.
//!
//! Rows are independent, so they run in parallel; the caller charges the
//! returned word count and the full `h` rounds to the simulator, because the
//! schedule always reserves `h` rounds even when a row converges early.

use rayon::prelude::*;

use crate::graph::{add_w, NodeId, Weight, WeightedGraph, INF};

/// Distances from each row source to every node, row-major.
#[derive(Debug, Clone)]
pub struct DistMatrix {
    pub sources: Vec<NodeId>,
    n: usize,
    data: Vec<Weight>,
}

impl DistMatrix {
    pub fn new(sources: Vec<NodeId>, n: usize) -> Self {
        let rows = sources.len();
        Self {
            sources,
            n,
            data: vec![INF; rows * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.sources.len()
    }

    pub fn row(&self, r: usize) -> &[Weight] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn get(&self, r: usize, v: NodeId) -> Weight {
        self.data[r * self.n + v as usize]
    }

    pub(crate) fn set(&mut self, r: usize, v: NodeId, w: Weight) {
        self.data[r * self.n + v as usize] = w;
    }

    fn chunks_mut(&mut self) -> impl IndexedParallelIterator<Item = &mut [Weight]> {
        self.data.par_chunks_mut(self.n)
    }
}

/// One row of a flood: initial estimates seeded at `origins`, then `h`
/// relaxation rounds. Returns the words the row sent.
fn flood_row(
    g: &WeightedGraph,
    h: u32,
    origins: &[(NodeId, Weight)],
    dist: &mut [Weight],
) -> u64 {
    let mut frontier: Vec<NodeId> = Vec::new();
    let mut stamp = vec![0u32; g.n() as usize];
    for &(v, d0) in origins {
        if d0 < dist[v as usize] {
            dist[v as usize] = d0;
            if stamp[v as usize] == 0 {
                stamp[v as usize] = u32::MAX;
                frontier.push(v);
            }
        }
    }
    let mut words = 0u64;
    for t in 1..=h {
        if frontier.is_empty() {
            break;
        }
        // Snapshot the previous round's values so a round only extends paths
        // by a single hop.
        let snap: Vec<(NodeId, Weight)> = frontier
            .iter()
            .map(|&u| (u, dist[u as usize]))
            .collect();
        let mut next = Vec::new();
        for (u, du) in snap {
            words += g.degree(u) as u64;
            for &(v, w) in g.neighbors(u) {
                let nd = add_w(du, w);
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    if stamp[v as usize] != t {
                        stamp[v as usize] = t;
                        next.push(v);
                    }
                }
            }
        }
        frontier = next;
    }
    words
}

/// Floods one row per source, each seeded with distance zero at its source.
/// Returns the matrix of h-hop-limited distances and the total word count.
pub fn flood_sources(g: &WeightedGraph, h: u32, sources: &[NodeId]) -> (DistMatrix, u64) {
    let mut m = DistMatrix::new(sources.to_vec(), g.n() as usize);
    let sources = m.sources.clone();
    let words = m
        .chunks_mut()
        .enumerate()
        .map(|(r, row)| flood_row(g, h, &[(sources[r], 0)], row))
        .sum();
    (m, words)
}

/// Floods one row per entry of `rows`, where each row carries its own origin
/// set with initial values. The row's result at `v` is the minimum over
/// origins of initial value plus an at-most-`h`-hop path to `v`.
pub fn flood_with_offsets(
    g: &WeightedGraph,
    h: u32,
    rows: &[(NodeId, Vec<(NodeId, Weight)>)],
) -> (DistMatrix, u64) {
    let mut m = DistMatrix::new(rows.iter().map(|&(s, _)| s).collect(), g.n() as usize);
    let words = m
        .chunks_mut()
        .zip(rows.par_iter())
        .map(|(out, (_, origins))| flood_row(g, h, origins, out))
        .sum();
    (m, words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::hop_limited_distances;

    #[test]
    fn single_source_rows_match_hop_limited_oracle() {
        for seed in 0..3 {
            let g = gen::erdos_renyi(50, 0.08, 1, 20, seed).unwrap();
            let sources = vec![0, 7, 23, 49];
            for h in [0, 1, 2, 5, 49] {
                let (m, _) = flood_sources(&g, h, &sources);
                for (r, &s) in sources.iter().enumerate() {
                    assert_eq!(m.row(r), &hop_limited_distances(&g, s, h)[..]);
                }
            }
        }
    }

    #[test]
    fn offset_rows_take_min_over_origins() {
        let g = gen::erdos_renyi(40, 0.1, 1, 10, 9).unwrap();
        let h = 4;
        let origins = vec![(3u32, 100u64), (11, 0), (29, 7)];
        let (m, _) = flood_with_offsets(&g, h, &[(0, origins.clone())]);
        for v in 0..g.n() {
            let want = origins
                .iter()
                .map(|&(o, init)| add_w(init, hop_limited_distances(&g, o, h)[v as usize]))
                .min()
                .unwrap();
            assert_eq!(m.get(0, v), want, "node {v}");
        }
    }

    #[test]
    fn word_count_on_a_path_is_frontier_degrees() {
        let g = gen::path(6, 1, 1, 0).unwrap();
        // Frontier walks 0,1,2,3,4 with degrees 1,2,2,2,2.
        let (_, words) = flood_sources(&g, 5, &[0]);
        assert_eq!(words, 9);
        // With spare budget the end node still announces its improvement
        // once (degree 1), after which the flood is silent.
        let (_, words) = flood_sources(&g, 50, &[0]);
        assert_eq!(words, 10);
    }

    #[test]
    fn zero_rounds_leaves_only_origins() {
        let g = gen::path(4, 1, 1, 0).unwrap();
        let (m, words) = flood_sources(&g, 0, &[2]);
        assert_eq!(words, 0);
        assert_eq!(m.row(0), &[INF, INF, 0, INF]);
    }
}
